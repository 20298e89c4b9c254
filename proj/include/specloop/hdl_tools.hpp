// SPDX-License-Identifier: Apache-2.0
//
// Verilog toolchain integration: compile checks and formal equivalence runs
// as subprocesses, EQY config generation, counterexample extraction from VCD
// traces, and classification of tool outcomes into the failure taxonomy
// (Pass, E1 invalid original, E2 non-compilable reconstruction, E3 functional
// mismatch, E4 inconclusive).
#pragma once

#include "specloop/vcd.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace specloop {

struct CompileResult {
    bool ok = false;
    std::string stderr_text;
    std::string tool;
    long duration_ms = 0;
};

enum class FecVerdict { Equivalent, NotEquivalent, Inconclusive, ToolError };

constexpr const char* fec_verdict_name(FecVerdict v) {
    switch (v) {
    case FecVerdict::Equivalent: return "Equivalent";
    case FecVerdict::NotEquivalent: return "NotEquivalent";
    case FecVerdict::Inconclusive: return "Inconclusive";
    case FecVerdict::ToolError: return "ToolError";
    }
    return "Unknown";
}

struct FecOutcome {
    FecVerdict verdict = FecVerdict::ToolError;
    std::string raw_log;
    std::vector<std::filesystem::path> trace_paths;
    long duration_ms = 0;
};

struct Counterexample {
    long time = 0;
    std::string signal;
    std::string gold_value;
    std::string gate_value;

    bool operator==(const Counterexample&) const = default;
};

enum class DiagnosisKind {
    Pass,
    E1_InvalidOriginal,
    E2_NonCompilableRecon,
    E3_FunctionalMismatch,
    E4_Inconclusive,
};

constexpr const char* diagnosis_kind_name(DiagnosisKind k) {
    switch (k) {
    case DiagnosisKind::Pass: return "Pass";
    case DiagnosisKind::E1_InvalidOriginal: return "E1_InvalidOriginal";
    case DiagnosisKind::E2_NonCompilableRecon: return "E2_NonCompilableRecon";
    case DiagnosisKind::E3_FunctionalMismatch: return "E3_FunctionalMismatch";
    case DiagnosisKind::E4_Inconclusive: return "E4_Inconclusive";
    }
    return "Unknown";
}

struct Diagnosis {
    DiagnosisKind kind = DiagnosisKind::E4_Inconclusive;
    std::string evidence;
    std::vector<Counterexample> counterexamples;
};

struct ToolchainOptions {
    std::string compiler_cmd = "microv compile";
    std::string fec_cmd = "microv fec";
    int compile_timeout_s = 60;
    std::vector<std::string> fec_success_markers = {"Successfully proved designs equivalent"};
    std::vector<std::string> fec_failure_markers = {"Proving failed", "NOT equivalent"};
    std::vector<std::string> fec_inconclusive_markers = {"inconclusive", "Cannot prove",
                                                         "timeout"};
};

// Subprocess boundary; the loop and verifier depend on this interface so
// tests can substitute an in-process fake.
class Toolchain {
public:
    virtual ~Toolchain() = default;
    // Writes rtl into work_dir and invokes the compiler with a hard timeout.
    // Throws Errc::ToolNotFound / Errc::Timeout.
    virtual CompileResult compile_check(const std::string& rtl,
                                        const std::filesystem::path& work_dir) = 0;
    // Writes the config into work_dir, runs the checker, maps exit status plus
    // log markers to the verdict, and collects produced waveform dumps.
    virtual FecOutcome run_equivalence(const std::string& config,
                                       const std::filesystem::path& work_dir, int timeout_s) = 0;
};

class SubprocessToolchain : public Toolchain {
public:
    explicit SubprocessToolchain(ToolchainOptions opts) : opts_(std::move(opts)) {}
    CompileResult compile_check(const std::string& rtl,
                                const std::filesystem::path& work_dir) override;
    FecOutcome run_equivalence(const std::string& config, const std::filesystem::path& work_dir,
                               int timeout_s) override;

    const ToolchainOptions& options() const { return opts_; }

private:
    ToolchainOptions opts_;
};

// EQY configuration: gold and gate sources, shared top module, SAT strategy
// with the given depth bound. Throws Errc::MissingFile.
std::string generate_eqy_config(const std::filesystem::path& gold_path,
                                const std::filesystem::path& gate_path, const std::string& top,
                                int depth);

// Earliest divergence per mismatching signal from the outcome's traces,
// earliest-first, capped at max_records. Throws Errc::NoTraceAvailable when
// the outcome carries no readable trace (callers fall back to the raw log).
// An empty result with a NotEquivalent verdict signals parser/verdict
// disagreement and is classified E4 by classify().
std::vector<Counterexample> extract_counterexamples(const FecOutcome& outcome,
                                                    int max_records = 5);

// "Mismatched Signal:" block, one per record.
std::string format_counterexamples(const std::vector<Counterexample>& cexes);

// Total mapping onto the taxonomy; never throws.
Diagnosis classify(const CompileResult& original_compile,
                   const std::optional<CompileResult>& recon_compile,
                   const std::optional<FecOutcome>& fec, int max_counterexamples = 5);

} // namespace specloop
