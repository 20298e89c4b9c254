// SPDX-License-Identifier: Apache-2.0
//
// The outer refinement loop: generate a candidate spec from the original RTL,
// verify it, apply the error-handling policy (stop on a non-verifiable
// original, reconstruct while budget remains, otherwise feed compile errors /
// counterexamples / an error message back to the generator), and terminate on
// pass, budget exhaustion, or the generator's own stop decision.
#pragma once

#include "specloop/verifier.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace specloop {

enum class FeedbackMode { FullDiagnosis, PassFailOnly, SingleRound };

constexpr const char* feedback_mode_name(FeedbackMode m) {
    switch (m) {
    case FeedbackMode::FullDiagnosis: return "full";
    case FeedbackMode::PassFailOnly: return "passfail";
    case FeedbackMode::SingleRound: return "single";
    }
    return "unknown";
}

std::optional<FeedbackMode> feedback_mode_from_name(const std::string& name);

struct LoopConfig {
    int max_spec_retries = 2; // spec generations = 1 + retries
    FeedbackMode feedback_mode = FeedbackMode::FullDiagnosis;
    VerifierBudget verifier_budget;
    std::string generator_model;
    std::string reconstructor_model;
};

enum class LoopStatus { Running, Passed, BudgetExhausted, NonVerifiable, GeneratorStopped };

constexpr const char* loop_status_name(LoopStatus s) {
    switch (s) {
    case LoopStatus::Running: return "Running";
    case LoopStatus::Passed: return "Passed";
    case LoopStatus::BudgetExhausted: return "BudgetExhausted";
    case LoopStatus::NonVerifiable: return "NonVerifiable";
    case LoopStatus::GeneratorStopped: return "GeneratorStopped";
    }
    return "Unknown";
}

struct RoundRecord {
    int round = 0;
    bool parsed = false;
    StructuredSpec spec;      // valid when parsed
    std::string raw_output;   // kept for rounds whose output failed to parse
    std::vector<Violation> lint; // format-lint findings on the parsed spec
    std::optional<VerifierResult> verifier;
};

struct LoopState {
    int round = 1;
    std::vector<RoundRecord> history;
    LoopStatus status = LoopStatus::Running;
    std::string detail;
    std::optional<Diagnosis> e1;             // set when status == NonVerifiable
    std::optional<StructuredSpec> final_spec;
    std::string final_spec_artifact;
    long wall_time_ms = 0;
};

enum class ActionKind {
    StopNonVerifiable,
    ReconstructAgain,
    SendCompileErrorToGenerator,
    SendCounterexampleToGenerator,
    SendErrorMessageToGenerator,
    Accept,
};

constexpr const char* action_kind_name(ActionKind a) {
    switch (a) {
    case ActionKind::StopNonVerifiable: return "StopNonVerifiable";
    case ActionKind::ReconstructAgain: return "ReconstructAgain";
    case ActionKind::SendCompileErrorToGenerator: return "SendCompileErrorToGenerator";
    case ActionKind::SendCounterexampleToGenerator: return "SendCounterexampleToGenerator";
    case ActionKind::SendErrorMessageToGenerator: return "SendErrorMessageToGenerator";
    case ActionKind::Accept: return "Accept";
    }
    return "Unknown";
}

// Total policy over (diagnosis kind, remaining reconstruction budget).
ActionKind decide_next_action(const Diagnosis& diag, int recon_budget_left);

// True iff the canonical rendered forms are identical: the generator decided
// to resubmit the previous spec unchanged.
bool detect_generator_stop(const StructuredSpec& prev_spec, const StructuredSpec& new_spec);

struct LoopEnv {
    Gateway& gateway;
    Toolchain& tools;
    const PromptLibrary& prompts;
    ToolConfig cfg;
    RunStore& store;
};

LoopState run_specloop(const std::string& original_rtl, const LoopConfig& config, LoopEnv& env);

// Bounded worker pool used by the batch evaluator; rethrows the first job
// exception after all workers finish.
void run_parallel(const std::vector<std::function<void()>>& jobs, int workers);

} // namespace specloop
