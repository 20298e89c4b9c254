// SPDX-License-Identifier: Apache-2.0
//
// Prompt construction for the four LLM interactions: first-round spec
// generation, refinement with a verification report, RTL reconstruction, and
// the compile-fix retry. Information hiding is structural: the reconstructor
// and compile-fix builders never receive the original RTL or any equivalence
// checker log, so those can not leak into reconstructor-bound prompts.
#pragma once

#include "specloop/spec_model.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace specloop {

enum class PromptPurpose { SpecFirstRound, SpecRefinement, Reconstruct, CompileFix };

constexpr const char* prompt_purpose_name(PromptPurpose p) {
    switch (p) {
    case PromptPurpose::SpecFirstRound: return "spec_first_round";
    case PromptPurpose::SpecRefinement: return "spec_refinement";
    case PromptPurpose::Reconstruct: return "reconstruct";
    case PromptPurpose::CompileFix: return "compile_fix";
    }
    return "unknown";
}

struct PromptBundle {
    std::string system_text; // empty: the whole prompt travels as one user turn
    std::string user_text;
    PromptPurpose purpose;
    std::vector<std::string> provenance; // input-artifact identifiers used to build it
};

// The report fed back to the spec generator. serialize() starts with the
// verdict sentence and then emits the reconstruction and tool-log sections
// when they are nonempty; wrapped() adds the report markers around it.
struct VerificationReportText {
    bool pass = false;
    std::string reconstructed_rtl;
    std::string tool_log_excerpt;

    std::string serialize() const;
    std::string wrapped() const;

    // Copy reduced to the bare verdict line (pass/fail-only feedback mode).
    VerificationReportText verdict_only() const { return {pass, "", ""}; }
};

// {{name}} substitution; unknown placeholders are left intact.
std::string substitute_template(std::string tpl, const std::map<std::string, std::string>& vars);

class PromptLibrary {
public:
    // Loads first_round.txt, refinement.txt, reconstruct.txt, compile_fix.txt.
    // Throws Errc::ConfigError when a template file is missing.
    static PromptLibrary load(const std::filesystem::path& dir);

    PromptBundle first_round(const std::string& rtl) const;
    PromptBundle refinement(const StructuredSpec& prev_spec,
                            const VerificationReportText& report) const;
    PromptBundle reconstruction(const StructuredSpec& spec, const std::string& spec_id) const;
    PromptBundle compile_fix(const StructuredSpec& spec, const std::string& spec_id,
                             const std::string& bad_rtl, const std::string& compiler_stderr) const;

private:
    std::string first_round_;
    std::string refinement_;
    std::string reconstruct_;
    std::string compile_fix_;
};

} // namespace specloop
