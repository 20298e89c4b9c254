// SPDX-License-Identifier: Apache-2.0

#include "specloop/verifier.hpp"

#include "specloop/errors.hpp"

#include <algorithm>

namespace specloop {

namespace {

std::string attempt_tag(int round, int attempt) {
    return "recon_round_" + std::to_string(round) + "_attempt_" + std::to_string(attempt);
}

} // namespace

std::string truncate_log_keep_mismatch(const std::string& log, long budget) {
    if (budget <= 0 || static_cast<long>(log.size()) <= budget) return log;
    const std::string marker = "Mismatched Signal";
    const std::string cut = "\n...[log truncated]...\n";

    auto pos = log.find(marker);
    if (pos != std::string::npos) {
        // Window around the mismatch block, biased towards its tail.
        size_t before = static_cast<size_t>(budget) / 4;
        size_t start = pos > before ? pos - before : 0;
        size_t len = static_cast<size_t>(budget) - cut.size();
        std::string out;
        if (start > 0) out += cut;
        out += log.substr(start, len);
        return out;
    }
    size_t half = (static_cast<size_t>(budget) - cut.size()) / 2;
    return log.substr(0, half) + cut + log.substr(log.size() - half);
}

VerificationReportText build_report(const VerifierResult& result, long log_budget) {
    VerificationReportText report;
    report.pass = result.diagnosis.kind == DiagnosisKind::Pass;
    report.reconstructed_rtl = result.reconstructed_rtl.value_or("");

    std::string excerpt;
    switch (result.diagnosis.kind) {
    case DiagnosisKind::Pass:
        excerpt = "";
        break;
    case DiagnosisKind::E3_FunctionalMismatch:
        excerpt = !result.diagnosis.counterexamples.empty()
                      ? format_counterexamples(result.diagnosis.counterexamples)
                      : result.diagnosis.evidence;
        break;
    case DiagnosisKind::E2_NonCompilableRecon:
    case DiagnosisKind::E1_InvalidOriginal:
    case DiagnosisKind::E4_Inconclusive:
        excerpt = result.diagnosis.evidence;
        break;
    }
    report.tool_log_excerpt = truncate_log_keep_mismatch(excerpt, log_budget);
    return report;
}

VerifierResult verify_spec(VerifierEnv& env, const StructuredSpec& spec,
                           const VerifierBudget& budget, const CompileResult& original_compile) {
    const int attempts_total = 1 + std::max(0, budget.max_recon_retries);
    const std::string spec_id = "spec_round_" + std::to_string(env.round);

    VerifierResult result;
    Diagnosis diag;
    bool use_compile_fix = false;
    std::string bad_rtl, bad_stderr;

    for (int attempt = 1; attempt <= attempts_total; ++attempt) {
        result.recon_attempts = attempt;

        PromptBundle pb = use_compile_fix
                              ? env.prompts.compile_fix(spec, spec_id, bad_rtl, bad_stderr)
                              : env.prompts.reconstruction(spec, spec_id);
        use_compile_fix = false;

        CompletionRequest req;
        req.model_id = env.cfg.reconstructor_model;
        req.messages = {{"user", pb.user_text}};
        req.temperature = env.cfg.temperature;
        req.max_tokens = env.cfg.max_tokens;
        req.request_tag = attempt_tag(env.round, attempt);
        CompletionResult completion = env.gateway.complete(req);

        std::string rtl;
        try {
            rtl = extract_last_block(completion.text, kRtlStart, kRtlEnd);
        } catch (const Error& e) {
            if (e.code() != Errc::MissingMarkers) throw;
            if (attempt == attempts_total)
                raise(Errc::MarkerMissing,
                      "reconstruction output lacks [RTL_START]/[RTL_END] after " +
                          std::to_string(attempts_total) + " attempts");
            continue; // plain prompt again; a fresh sample may format correctly
        }
        result.reconstructed_rtl = rtl;

        const std::string suffix =
            std::to_string(env.round) + "_" + std::to_string(attempt);
        auto recon_path = env.store.write_text("recon_round_" + std::to_string(env.round) +
                                                   "_attempt_" + std::to_string(attempt) + ".v",
                                               rtl, /*deterministic=*/true);

        CompileResult cr =
            env.tools.compile_check(rtl, env.store.dir() / ("work_recon_" + suffix));
        if (!cr.ok) {
            diag = classify(original_compile, cr, std::nullopt, env.cfg.max_counterexamples);
            if (attempt < attempts_total) {
                use_compile_fix = true;
                bad_rtl = rtl;
                bad_stderr = cr.stderr_text;
                continue;
            }
            break;
        }

        std::string eqy_cfg = generate_eqy_config(env.gold_path, recon_path, spec.module_name,
                                                  env.cfg.fec_depth);
        FecOutcome fec = env.tools.run_equivalence(
            eqy_cfg, env.store.dir() / ("work_fec_" + suffix), env.cfg.fec_timeout_s);
        ++result.fec_runs;
        env.store.write_text("fec_" + suffix + ".log", fec.raw_log, /*deterministic=*/false);

        diag = classify(original_compile, cr, fec, env.cfg.max_counterexamples);
        if (diag.kind == DiagnosisKind::Pass) break;
        // E3/E4: re-reconstruct from the unchanged spec; no checker feedback
        // reaches the reconstructor.
        if (attempt == attempts_total) break;
    }

    result.diagnosis = diag;
    result.report = build_report(result, env.cfg.report_log_budget);
    env.store.write_text("report_round_" + std::to_string(env.round) + ".txt",
                         result.report.serialize(), /*deterministic=*/false);
    return result;
}

} // namespace specloop
