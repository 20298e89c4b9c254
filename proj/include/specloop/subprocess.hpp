// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace specloop {

struct ExecResult {
    int exit_code = -1;
    bool timed_out = false;
    bool launch_failed = false;
    std::string out;
    std::string err;
    long duration_ms = 0;
};

struct ExecOptions {
    std::filesystem::path cwd;  // empty: inherit
    long timeout_ms = 60000;    // <= 0 means an immediate deadline
};

// Runs argv directly (no shell), captures stdout/stderr, and kills the whole
// process group if the deadline passes.
ExecResult run_process(const std::vector<std::string>& argv, const ExecOptions& opts = {});

// Whitespace split honoring single/double quotes; used for command strings
// from the config file ("microv fec", "iverilog -o /dev/null").
std::vector<std::string> split_command(const std::string& cmd);

// True when arg0 resolves to an executable (absolute, relative, or on PATH).
bool executable_exists(const std::string& arg0);

} // namespace specloop
