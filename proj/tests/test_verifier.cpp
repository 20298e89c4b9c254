// SPDX-License-Identifier: Apache-2.0

#include "specloop/verifier.hpp"

#include "specloop/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace specloop;
using namespace testsupport;

namespace {

ToolchainOptions microv_toolchain_options() {
    ToolchainOptions opts;
    opts.compiler_cmd = microv_bin() + " compile";
    opts.fec_cmd = microv_bin() + " fec";
    return opts;
}

struct VerifierHarness {
    VerifierHarness(std::vector<TranscriptEntry> entries, const std::string& gold_rel)
        : store(RunStore::create(tmp.path(), "case")),
          log(std::make_shared<CallLog>(store.dir() / "llm_calls.jsonl")),
          backend(std::make_shared<ScriptedBackend>(Transcript{std::move(entries)})),
          gateway(backend, log),
          tools(microv_toolchain_options()),
          prompts(PromptLibrary::load(prompts_dir())),
          cfg(test_config()) {
        original_rtl = read_fixture(gold_rel);
        gold_path = store.write_text("original.v", original_rtl);
        original_compile = tools.compile_check(original_rtl, store.dir() / "work_original");
    }

    VerifierEnv env() { return {gateway, tools, prompts, cfg, store, gold_path, 1}; }

    int recon_calls() const {
        std::istringstream in(read_file(store.dir() / "llm_calls.jsonl"));
        std::string line;
        int n = 0;
        while (std::getline(in, line))
            if (!line.empty() && nlohmann::json::parse(line).value("tag", "").rfind("recon_", 0) == 0)
                ++n;
        return n;
    }

    TempDir tmp;
    RunStore store;
    std::shared_ptr<CallLog> log;
    std::shared_ptr<ScriptedBackend> backend;
    Gateway gateway;
    SubprocessToolchain tools;
    PromptLibrary prompts;
    ToolConfig cfg;
    std::string original_rtl;
    std::filesystem::path gold_path;
    CompileResult original_compile;
};

StructuredSpec spec_from_response(const std::string& response) {
    return parse_spec(extract_spec_block(response));
}

StructuredSpec golden_spec(size_t entry_index) {
    auto t = golden_transcript();
    return spec_from_response(t.entries.at(entry_index).canned_response);
}

std::string golden_response(size_t entry_index) {
    return golden_transcript().entries.at(entry_index).canned_response;
}

} // namespace

TEST_CASE("verify_spec: async-reset spec fails with the counter divergence") {
    // All three reconstruction attempts faithfully produce the async design.
    std::string async_full = golden_response(1);
    VerifierHarness h({{"recon_round_1_attempt_1", async_full},
                       {"recon_round_1_attempt_2", async_full},
                       {"recon_round_1_attempt_3", async_full}},
                      "verilog/counter_fig3.v");
    auto env = h.env();
    auto result = verify_spec(env, golden_spec(0), VerifierBudget{2}, h.original_compile);

    CHECK(result.diagnosis.kind == DiagnosisKind::E3_FunctionalMismatch);
    REQUIRE(result.diagnosis.counterexamples.size() == 1);
    const auto& cex = result.diagnosis.counterexamples[0];
    CHECK(cex.time == 11);
    CHECK(cex.signal == "q");
    CHECK(cex.gold_value == "0000001010");
    CHECK(cex.gate_value == "0000000000");

    CHECK(result.recon_attempts == 3);
    CHECK(result.fec_runs == 3);
    CHECK_FALSE(result.report.pass);
    CHECK(result.report.serialize().rfind("Spec Verification fail.", 0) == 0);
    CHECK(result.report.tool_log_excerpt.find("Mismatched Signal:") != std::string::npos);
    CHECK(h.store.has("report_round_1.txt"));
    CHECK(h.store.has("recon_round_1_attempt_3.v"));

    CHECK(audit_info_hiding(h.store.dir(), h.original_rtl).empty());
}

TEST_CASE("verify_spec: synchronous-reset spec passes") {
    VerifierHarness h({{"recon_round_1_attempt_1", golden_response(5)}},
                      "verilog/counter_fig3.v");
    auto env = h.env();
    auto result = verify_spec(env, golden_spec(4), VerifierBudget{2}, h.original_compile);

    CHECK(result.diagnosis.kind == DiagnosisKind::Pass);
    CHECK(result.recon_attempts == 1);
    CHECK(result.fec_runs == 1);
    CHECK(result.report.pass);
    CHECK(result.report.serialize().rfind("Spec Verification pass.", 0) == 0);
    CHECK(audit_info_hiding(h.store.dir(), h.original_rtl).empty());
}

TEST_CASE("verify_spec: never-compiling reconstructions exhaust the budget as E2") {
    std::string broken = rtl_response("module TopModule\n  (input clk\nendmodule");
    VerifierHarness h({{"recon_round_1_attempt_1", broken},
                       {"recon_round_1_attempt_2", broken},
                       {"recon_round_1_attempt_3", broken}},
                      "verilog/counter_fig3.v");
    auto env = h.env();
    auto result = verify_spec(env, golden_spec(0), VerifierBudget{2}, h.original_compile);

    CHECK(result.diagnosis.kind == DiagnosisKind::E2_NonCompilableRecon);
    CHECK(result.recon_attempts == 3);
    CHECK(h.recon_calls() == 3); // exactly 3 attempts, per the call log
    CHECK_FALSE(result.diagnosis.evidence.empty());
    CHECK(result.report.tool_log_excerpt == result.diagnosis.evidence);

    // Compile-fix retries carry the stderr but still no original RTL.
    CHECK(audit_info_hiding(h.store.dir(), h.original_rtl).empty());
}

TEST_CASE("verify_spec: compile-fix prompt carries the compiler diagnostics") {
    std::string broken = rtl_response("module TopModule\n  (input clk\nendmodule");
    VerifierHarness h({{"recon_round_1_attempt_1", broken},
                       {"recon_round_1_attempt_2", golden_response(5)}},
                      "verilog/counter_fig3.v");
    auto env = h.env();
    auto result = verify_spec(env, golden_spec(4), VerifierBudget{2}, h.original_compile);
    CHECK(result.diagnosis.kind == DiagnosisKind::Pass);
    CHECK(result.recon_attempts == 2);

    // Second call's prompt embeds the first attempt's stderr.
    std::istringstream in(read_file(h.store.dir() / "llm_calls.jsonl"));
    std::string line, second_prompt;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        if (rec.value("tag", "") == "recon_round_1_attempt_2")
            second_prompt = rec["request"]["messages"][0].value("text", "");
    }
    REQUIRE_FALSE(second_prompt.empty());
    CHECK(second_prompt.find("error") != std::string::npos);
    CHECK(second_prompt.find("module TopModule\n  (input clk") != std::string::npos);
}

TEST_CASE("verify_spec: E3 retries can recover within budget") {
    VerifierHarness h({{"recon_round_1_attempt_1", golden_response(1)},
                       {"recon_round_1_attempt_2", golden_response(1)},
                       {"recon_round_1_attempt_3", golden_response(5)}},
                      "verilog/counter_fig3.v");
    auto env = h.env();
    // The spec is fine; the scripted reconstructor needs a third sample.
    auto result = verify_spec(env, golden_spec(4), VerifierBudget{2}, h.original_compile);
    CHECK(result.diagnosis.kind == DiagnosisKind::Pass);
    CHECK(result.recon_attempts == 3);
    CHECK(result.fec_runs == 3);
}

TEST_CASE("verify_spec: output without RTL markers raises MarkerMissing") {
    std::string no_markers = "I cannot produce the module right now.";
    VerifierHarness h({{"recon_round_1_attempt_1", no_markers},
                       {"recon_round_1_attempt_2", no_markers},
                       {"recon_round_1_attempt_3", no_markers}},
                      "verilog/counter_fig3.v");
    auto env = h.env();
    try {
        verify_spec(env, golden_spec(0), VerifierBudget{2}, h.original_compile);
        FAIL("expected MarkerMissing");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MarkerMissing);
    }
    CHECK(h.recon_calls() == 3);
}

TEST_CASE("verify_spec: a Pass verdict is stable under re-checking") {
    VerifierHarness h({{"recon_round_1_attempt_1", golden_response(5)}},
                      "verilog/counter_fig3.v");
    auto env = h.env();
    auto result = verify_spec(env, golden_spec(4), VerifierBudget{2}, h.original_compile);
    REQUIRE(result.diagnosis.kind == DiagnosisKind::Pass);

    // Re-run only the equivalence step on the stored artifacts.
    std::string cfg = generate_eqy_config(h.gold_path,
                                          h.store.dir() / "recon_round_1_attempt_1.v",
                                          "TopModule", h.cfg.fec_depth);
    auto again = h.tools.run_equivalence(cfg, h.store.dir() / "recheck", h.cfg.fec_timeout_s);
    CHECK(again.verdict == FecVerdict::Equivalent);
}

TEST_CASE("build_report: section shapes per diagnosis kind") {
    VerifierResult e3;
    e3.diagnosis.kind = DiagnosisKind::E3_FunctionalMismatch;
    e3.diagnosis.counterexamples = {{11, "q", "0000001010", "0000000000"}};
    e3.reconstructed_rtl = "module TopModule(); endmodule";
    auto report = build_report(e3);
    CHECK_FALSE(report.pass);
    CHECK(report.tool_log_excerpt.find("Mismatched Signal:") != std::string::npos);
    CHECK(report.tool_log_excerpt.find("t=11 sig=q") != std::string::npos);

    VerifierResult pass;
    pass.diagnosis.kind = DiagnosisKind::Pass;
    pass.reconstructed_rtl = "module TopModule(); endmodule";
    CHECK(build_report(pass).serialize().rfind("Spec Verification pass.", 0) == 0);

    VerifierResult e2;
    e2.diagnosis.kind = DiagnosisKind::E2_NonCompilableRecon;
    e2.diagnosis.evidence = "design.v:1: syntax error";
    CHECK(build_report(e2).tool_log_excerpt == "design.v:1: syntax error");
}

TEST_CASE("truncate_log_keep_mismatch: stays within budget, block intact") {
    std::string filler(60000, 'a');
    std::string block = "Mismatched Signal:\nt=11 sig=q\nrtl_reconstruct: 0\nrtl_original: 1\n";
    std::string log = filler + block + std::string(4000, 'z');

    std::string out = truncate_log_keep_mismatch(log, 16384);
    CHECK(out.size() <= 16384 + 64);
    CHECK(out.find(block) != std::string::npos);

    // Small logs pass through untouched.
    CHECK(truncate_log_keep_mismatch("short", 16384) == "short");

    // No block: head and tail are both kept.
    std::string plain(40000, 'b');
    plain[0] = 'H';
    plain[plain.size() - 1] = 'T';
    std::string trunc = truncate_log_keep_mismatch(plain, 1000);
    CHECK(trunc.size() <= 1001);
    CHECK(trunc.front() == 'H');
    CHECK(trunc.back() == 'T');
}
