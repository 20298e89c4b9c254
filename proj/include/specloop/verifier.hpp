// SPDX-License-Identifier: Apache-2.0
//
// The spec verifier: reconstruct RTL from a candidate spec with an LLM, drive
// the compile-retry inner loop, run formal equivalence against the original
// design, and assemble the report fed back to the spec generator. The
// reconstructor only ever sees the spec and its own compile errors; checker
// logs and the original RTL never reach it.
#pragma once

#include "specloop/config.hpp"
#include "specloop/gateway.hpp"
#include "specloop/hdl_tools.hpp"
#include "specloop/prompting.hpp"
#include "specloop/store.hpp"

#include <optional>
#include <string>

namespace specloop {

struct VerifierBudget {
    int max_recon_retries = 2; // reconstruction attempts = 1 + retries
};

struct VerifierResult {
    Diagnosis diagnosis;
    std::optional<std::string> reconstructed_rtl;
    VerificationReportText report;
    int recon_attempts = 0;
    int fec_runs = 0;
};

struct VerifierEnv {
    Gateway& gateway;
    Toolchain& tools;
    const PromptLibrary& prompts;
    const ToolConfig& cfg;
    RunStore& store;
    std::filesystem::path gold_path; // original design, already compile-checked
    int round = 1;                   // artifact naming and request tags
};

// One full verification of a candidate spec. A shared attempt budget covers
// compile-fix retries and E3/E4 re-reconstructions jointly; E3/E4 retries
// reuse the plain reconstruction prompt with a fresh sample. Throws
// Errc::MarkerMissing when every attempt lacks an RTL block, and propagates
// gateway/toolchain errors.
VerifierResult verify_spec(VerifierEnv& env, const StructuredSpec& spec,
                           const VerifierBudget& budget, const CompileResult& original_compile);

// Verdict line first, then the reconstructed RTL section, then the tool-log
// section (counterexample block for E3, compiler stderr for E2, inconclusive
// message for E4).
VerificationReportText build_report(const VerifierResult& result, long log_budget = 16384);

// Byte-budget truncation that keeps the "Mismatched Signal" block intact.
std::string truncate_log_keep_mismatch(const std::string& log, long budget);

} // namespace specloop
