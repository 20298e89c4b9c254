// SPDX-License-Identifier: Apache-2.0

#include "specloop/loop_engine.hpp"

#include "specloop/errors.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <thread>

namespace specloop {

namespace {

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct CallCounts {
    int generator = 0;
    int reconstructor = 0;
};

CallCounts count_calls(const std::filesystem::path& call_log) {
    CallCounts counts;
    std::ifstream in(call_log);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::string tag;
        try {
            tag = nlohmann::json::parse(line).value("tag", "");
        } catch (const nlohmann::json::exception&) {
            continue;
        }
        if (tag.rfind("spec_round_", 0) == 0) ++counts.generator;
        if (tag.rfind("recon_", 0) == 0) ++counts.reconstructor;
    }
    return counts;
}

nlohmann::json state_to_json(const LoopState& state, const LoopConfig& config,
                             const LoopEnv& env) {
    nlohmann::json rounds = nlohmann::json::array();
    nlohmann::json diag_seq = nlohmann::json::array();
    for (const auto& r : state.history) {
        nlohmann::json jr = {{"round", r.round}, {"parsed", r.parsed}};
        if (r.parsed) jr["spec_artifact"] = "spec_round_" + std::to_string(r.round) + ".md";
        if (!r.lint.empty()) {
            nlohmann::json lint = nlohmann::json::array();
            for (const auto& v : r.lint) {
                const char* kind = v.kind == Violation::Kind::EmbeddedCode ? "EmbeddedCode"
                                   : v.kind == Violation::Kind::UnknownPort ? "UnknownPort"
                                   : v.kind == Violation::Kind::WidthMismatch
                                       ? "WidthMismatch"
                                       : "OutputNotDescribed";
                lint.push_back(std::string(kind) + ": " + v.detail);
            }
            jr["lint"] = lint;
        }
        if (r.verifier) {
            jr["diagnosis"] = diagnosis_kind_name(r.verifier->diagnosis.kind);
            jr["recon_attempts"] = r.verifier->recon_attempts;
            jr["fec_runs"] = r.verifier->fec_runs;
            jr["report_artifact"] = "report_round_" + std::to_string(r.round) + ".txt";
            diag_seq.push_back(diagnosis_kind_name(r.verifier->diagnosis.kind));
        }
        rounds.push_back(jr);
    }

    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& a : env.store.index())
        artifacts.push_back({{"name", a.name}, {"deterministic", a.deterministic}});

    nlohmann::json j = {
        {"case_id", env.store.case_id()},
        {"status", loop_status_name(state.status)},
        {"detail", state.detail},
        {"mode", feedback_mode_name(config.feedback_mode)},
        {"rounds", rounds},
        {"diagnosis_sequence", diag_seq},
        {"final_spec_artifact", state.final_spec_artifact},
        {"wall_time_ms", state.wall_time_ms},
        {"config", env.cfg.to_json()},
        {"tool_versions",
         {{"compiler", tool_version(env.cfg.compiler_cmd)},
          {"fec", tool_version(env.cfg.fec_cmd)},
          {"simulator", tool_version(env.cfg.simulator_cmd)}}},
        {"artifacts", artifacts},
    };
    if (state.e1) j["e1_evidence"] = state.e1->evidence;
    return j;
}

} // namespace

std::optional<FeedbackMode> feedback_mode_from_name(const std::string& name) {
    if (name == "full") return FeedbackMode::FullDiagnosis;
    if (name == "passfail") return FeedbackMode::PassFailOnly;
    if (name == "single") return FeedbackMode::SingleRound;
    return std::nullopt;
}

ActionKind decide_next_action(const Diagnosis& diag, int recon_budget_left) {
    switch (diag.kind) {
    case DiagnosisKind::Pass:
        return ActionKind::Accept;
    case DiagnosisKind::E1_InvalidOriginal:
        return ActionKind::StopNonVerifiable;
    case DiagnosisKind::E2_NonCompilableRecon:
        return recon_budget_left > 0 ? ActionKind::ReconstructAgain
                                     : ActionKind::SendCompileErrorToGenerator;
    case DiagnosisKind::E3_FunctionalMismatch:
        return recon_budget_left > 0 ? ActionKind::ReconstructAgain
                                     : ActionKind::SendCounterexampleToGenerator;
    case DiagnosisKind::E4_Inconclusive:
        return recon_budget_left > 0 ? ActionKind::ReconstructAgain
                                     : ActionKind::SendErrorMessageToGenerator;
    }
    return ActionKind::SendErrorMessageToGenerator;
}

bool detect_generator_stop(const StructuredSpec& prev_spec, const StructuredSpec& new_spec) {
    return render_spec(prev_spec) == render_spec(new_spec);
}

LoopState run_specloop(const std::string& original_rtl, const LoopConfig& config, LoopEnv& env) {
    const auto t0 = now_ms();
    LoopState state;

    if (!config.generator_model.empty()) env.cfg.generator_model = config.generator_model;
    if (!config.reconstructor_model.empty())
        env.cfg.reconstructor_model = config.reconstructor_model;

    auto finish = [&](LoopStatus status, std::string detail) -> LoopState& {
        state.status = status;
        state.detail = std::move(detail);
        state.wall_time_ms = static_cast<long>(now_ms() - t0);

        auto js = state_to_json(state, config, env);
        if (env.gateway.log()) {
            // Call-count bounds checked from the log itself on every run.
            CallCounts counts = count_calls(env.gateway.log()->path());
            const int gen_bound = 1 + std::max(0, config.max_spec_retries);
            const int recon_bound =
                gen_bound * (1 + std::max(0, config.verifier_budget.max_recon_retries));
            if (counts.generator > gen_bound || counts.reconstructor > recon_bound)
                raise(Errc::LlmFailure,
                      "call budget violated: " + std::to_string(counts.generator) + "/" +
                          std::to_string(gen_bound) + " generator, " +
                          std::to_string(counts.reconstructor) + "/" +
                          std::to_string(recon_bound) + " reconstructor");
            js["llm_call_counts"] = {{"generator", counts.generator},
                                     {"reconstructor", counts.reconstructor}};
        }
        env.store.write_state(js);
        return state;
    };

    // Gate: a non-compiling original is non-verifiable, no feedback loop.
    CompileResult original = env.tools.compile_check(original_rtl, env.store.dir() / "work_original");
    env.store.write_text("original.v", original_rtl, /*deterministic=*/true);
    if (!original.ok) {
        state.e1 = classify(original, std::nullopt, std::nullopt);
        return finish(LoopStatus::NonVerifiable, "original RTL does not compile");
    }
    const auto gold_path = env.store.dir() / "original.v";

    std::optional<StructuredSpec> prev_spec;
    std::optional<VerificationReportText> feedback;
    const int total_rounds = 1 + std::max(0, config.max_spec_retries);

    for (int round = 1; round <= total_rounds; ++round) {
        state.round = round;

        PromptBundle pb =
            prev_spec ? env.prompts.refinement(*prev_spec,
                                               config.feedback_mode == FeedbackMode::PassFailOnly
                                                   ? feedback->verdict_only()
                                                   : *feedback)
                      : env.prompts.first_round(original_rtl);

        CompletionRequest req;
        req.model_id = env.cfg.generator_model;
        req.messages = {{"user", pb.user_text}};
        req.temperature = env.cfg.temperature;
        req.max_tokens = env.cfg.max_tokens;
        req.request_tag = "spec_round_" + std::to_string(round);
        CompletionResult completion;
        try {
            completion = env.gateway.complete(req);
        } catch (const Error& e) {
            return finish(LoopStatus::BudgetExhausted,
                          std::string("generator call failed: ") + errc_name(e.code()) + ": " +
                              e.detail());
        }

        RoundRecord rec;
        rec.round = round;

        StructuredSpec spec;
        try {
            spec = parse_spec(extract_spec_block(completion.text));
        } catch (const Error& e) {
            // A malformed generation consumes the round; the next round's
            // report asks for a properly formatted regeneration.
            rec.raw_output = completion.text;
            env.store.write_text("spec_round_" + std::to_string(round) + "_raw.txt",
                                 completion.text, /*deterministic=*/true);
            state.history.push_back(std::move(rec));
            VerificationReportText bad;
            bad.pass = false;
            bad.tool_log_excerpt =
                "The previous response could not be parsed into a structured specification (" +
                std::string(errc_name(e.code())) + ": " + e.detail() +
                "). Regenerate the complete specification in the required format.";
            feedback = bad;
            if (round == total_rounds)
                return finish(LoopStatus::BudgetExhausted,
                              "generator output unparseable in final round");
            continue;
        }

        rec.parsed = true;
        rec.spec = spec;
        rec.lint = lint_spec(spec);
        const std::string spec_name = "spec_round_" + std::to_string(round) + ".md";
        env.store.write_text(spec_name, render_spec(spec), /*deterministic=*/true);
        state.final_spec_artifact = spec_name;
        state.final_spec = spec;

        if (prev_spec && detect_generator_stop(*prev_spec, spec)) {
            state.history.push_back(std::move(rec));
            return finish(LoopStatus::GeneratorStopped,
                          "generator resubmitted the previous spec unchanged");
        }
        prev_spec = spec;

        if (config.feedback_mode == FeedbackMode::SingleRound) {
            state.history.push_back(std::move(rec));
            return finish(LoopStatus::BudgetExhausted,
                          "single-round mode: no verification performed");
        }

        VerifierEnv venv{env.gateway, env.tools, env.prompts, env.cfg,
                         env.store,   gold_path, round};
        VerifierResult vr;
        try {
            vr = verify_spec(venv, spec, config.verifier_budget, original);
        } catch (const Error& e) {
            state.history.push_back(std::move(rec));
            return finish(LoopStatus::BudgetExhausted,
                          std::string("verifier error: ") + errc_name(e.code()) + ": " +
                              e.detail());
        }
        rec.verifier = vr;
        state.history.push_back(std::move(rec));

        ActionKind action = decide_next_action(vr.diagnosis, 0);
        if (action == ActionKind::Accept)
            return finish(LoopStatus::Passed, "equivalence proved at round " +
                                                  std::to_string(round));
        if (action == ActionKind::StopNonVerifiable) {
            state.e1 = vr.diagnosis;
            return finish(LoopStatus::NonVerifiable, "original became non-verifiable mid-run");
        }
        feedback = vr.report;
    }

    return finish(LoopStatus::BudgetExhausted, "spec retry budget exhausted");
}

void run_parallel(const std::vector<std::function<void()>>& jobs, int workers) {
    if (jobs.empty()) return;
    workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));

    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;

    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                jobs[i]();
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace specloop
