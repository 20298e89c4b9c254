// SPDX-License-Identifier: Apache-2.0

#include "specloop/prompting.hpp"

#include "specloop/errors.hpp"

#include <fstream>
#include <sstream>

namespace specloop {

namespace {

std::string read_file_or_throw(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) raise(Errc::ConfigError, "prompt template not found: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

std::string VerificationReportText::serialize() const {
    std::string out = pass ? "Spec Verification pass." : "Spec Verification fail.";
    out += "\n";
    if (!reconstructed_rtl.empty()) {
        out += "\n# Reconstruction RTL:\n\n";
        out += reconstructed_rtl;
        if (out.back() != '\n') out += '\n';
    }
    if (!tool_log_excerpt.empty()) {
        out += "\n# Logs of equivalent-checking tool:\n\n";
        out += tool_log_excerpt;
        if (out.back() != '\n') out += '\n';
    }
    return out;
}

std::string VerificationReportText::wrapped() const {
    std::string out(kReportStart);
    out += "\n";
    out += serialize();
    out += kReportEnd;
    out += "\n";
    return out;
}

std::string substitute_template(std::string tpl, const std::map<std::string, std::string>& vars) {
    for (const auto& [key, value] : vars) {
        const std::string token = "{{" + key + "}}";
        size_t pos = 0;
        while ((pos = tpl.find(token, pos)) != std::string::npos) {
            tpl.replace(pos, token.size(), value);
            pos += value.size();
        }
    }
    return tpl;
}

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib;
    lib.first_round_ = read_file_or_throw(dir / "first_round.txt");
    lib.refinement_ = read_file_or_throw(dir / "refinement.txt");
    lib.reconstruct_ = read_file_or_throw(dir / "reconstruct.txt");
    lib.compile_fix_ = read_file_or_throw(dir / "compile_fix.txt");
    return lib;
}

PromptBundle PromptLibrary::first_round(const std::string& rtl) const {
    if (rtl.empty()) raise(Errc::EmptyInput, "RTL text is empty");
    PromptBundle b;
    b.purpose = PromptPurpose::SpecFirstRound;
    b.user_text = substitute_template(first_round_, {{"rtl", rtl}});
    b.provenance = {"original_rtl"};
    return b;
}

PromptBundle PromptLibrary::refinement(const StructuredSpec& prev_spec,
                                       const VerificationReportText& report) const {
    if (report.pass)
        raise(Errc::ReportIsPass, "refinement only follows a failing verification report");
    PromptBundle b;
    b.purpose = PromptPurpose::SpecRefinement;
    // wrapped() is substituted with its markers stripped: the template carries
    // the single [REPORT_START]/[REPORT_END] pair itself.
    b.user_text = substitute_template(
        refinement_, {{"previous_spec", render_spec(prev_spec)}, {"report", report.serialize()}});
    b.provenance = {"spec:" + prev_spec.module_name, "verification_report"};
    return b;
}

PromptBundle PromptLibrary::reconstruction(const StructuredSpec& spec,
                                           const std::string& spec_id) const {
    PromptBundle b;
    b.purpose = PromptPurpose::Reconstruct;
    b.user_text = substitute_template(reconstruct_, {{"spec", render_spec(spec)}});
    b.provenance = {spec_id};
    return b;
}

PromptBundle PromptLibrary::compile_fix(const StructuredSpec& spec, const std::string& spec_id,
                                        const std::string& bad_rtl,
                                        const std::string& compiler_stderr) const {
    if (compiler_stderr.empty()) raise(Errc::EmptyDiagnostics, "compiler stderr is empty");
    PromptBundle b;
    b.purpose = PromptPurpose::CompileFix;
    b.user_text = substitute_template(compile_fix_, {{"spec", render_spec(spec)},
                                                     {"bad_rtl", bad_rtl},
                                                     {"compiler_stderr", compiler_stderr}});
    b.provenance = {spec_id, "recon_attempt", "compiler_stderr"};
    return b;
}

} // namespace specloop
