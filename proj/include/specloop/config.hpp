// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <thread>
#include <vector>

namespace specloop {

// Runtime settings. Defaults: temperature 0.4, two spec-generator retries
// (three generations total), two reconstructor retries per spec, equivalence
// depth bound 10, and one model id serving both generator and reconstructor.
struct ToolConfig {
    // Toolchain commands (file path appended when invoked).
    std::string compiler_cmd = "microv compile";
    std::string fec_cmd = "microv fec";
    std::string simulator_cmd = "microv sim";
    int compile_timeout_s = 60;
    int fec_timeout_s = 600;
    int sim_timeout_s = 120;
    int fec_depth = 10;

    // LLM access.
    std::string api_base_url = "https://openrouter.ai/api/v1";
    std::string api_key_env = "SPECLOOP_API_KEY";
    std::string generator_model = "qwen/qwen3-coder-480b";
    std::string reconstructor_model = "qwen/qwen3-coder-480b";
    std::string eval_model = "openai/gpt-5-codex";
    double temperature = 0.4;
    int max_tokens = 8192;
    int llm_timeout_s = 300;
    int llm_max_attempts = 3;
    int llm_backoff_ms = 200;
    int llm_min_interval_ms = 0;

    // Loop budgets.
    int max_spec_retries = 2;
    int max_recon_retries = 2;

    // Report shaping.
    int max_counterexamples = 5;
    long report_log_budget = 16384;

    // Evaluation.
    int eval_runs = 3;
    int eval_attempts = 1;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    std::vector<std::string> sim_failure_markers = {"Mismatch", "Error", "FAIL"};

    std::string prompts_dir = "prompts";

    // Flat key = value file, '#' comments. Throws Errc::ConfigError on an
    // unknown key or unreadable file.
    static ToolConfig load_file(const std::filesystem::path& file);
    void set(const std::string& key, const std::string& value);

    nlohmann::json to_json() const;
    static ToolConfig from_json(const nlohmann::json& j);

    // One-line-per-setting dump printed at run start.
    std::string describe() const;
};

} // namespace specloop
