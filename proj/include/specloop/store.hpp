// SPDX-License-Identifier: Apache-2.0
//
// Durable run artifacts. Each pipeline run owns a directory under
// runs/<case_id>/<timestamp>/ holding every per-iteration artifact plus
// state.json and llm_calls.jsonl, self-describing enough that `specloop
// replay` can re-execute from the directory alone. All writes go through a
// write-temp-then-rename step so a crashed run never leaves a truncated file.
#pragma once

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace specloop {

void atomic_write_file(const std::filesystem::path& p, const std::string& content);

struct ArtifactInfo {
    std::string name;
    bool deterministic = true; // byte-stable under scripted replay
};

class RunStore {
public:
    static RunStore create(const std::filesystem::path& base_dir, const std::string& case_id);
    static RunStore open(const std::filesystem::path& run_dir);

    const std::filesystem::path& dir() const { return dir_; }
    const std::string& case_id() const { return case_id_; }

    std::filesystem::path write_text(const std::string& name, const std::string& content,
                                     bool deterministic = true);
    std::string read_text(const std::string& name) const;
    bool has(const std::string& name) const;

    void write_state(const nlohmann::json& state);
    nlohmann::json read_state() const;

    const std::vector<ArtifactInfo>& index() const { return index_; }

private:
    std::filesystem::path dir_;
    std::string case_id_;
    std::vector<ArtifactInfo> index_;
};

// First line of `<tool> --version`, or "unknown" when the tool refuses.
std::string tool_version(const std::string& cmd);

} // namespace specloop
