// SPDX-License-Identifier: Apache-2.0

#include "specloop/loop_engine.hpp"

#include "specloop/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <atomic>

using namespace specloop;
using namespace testsupport;

namespace {

struct LoopHarness {
    explicit LoopHarness(std::vector<TranscriptEntry> entries, Toolchain* custom_tools = nullptr)
        : store(RunStore::create(tmp.path(), "case")),
          log(std::make_shared<CallLog>(store.dir() / "llm_calls.jsonl")),
          backend(std::make_shared<ScriptedBackend>(Transcript{std::move(entries)})),
          gateway(backend, log),
          prompts(PromptLibrary::load(prompts_dir())),
          cfg(test_config()),
          tools_override(custom_tools) {
        ToolchainOptions opts;
        opts.compiler_cmd = microv_bin() + " compile";
        opts.fec_cmd = microv_bin() + " fec";
        subprocess_tools = std::make_unique<SubprocessToolchain>(opts);
    }

    LoopEnv env() {
        return {gateway, tools_override ? *tools_override : *subprocess_tools, prompts, cfg,
                store};
    }

    // Per-tag-prefix call counts from the log.
    std::pair<int, int> call_counts() const {
        std::istringstream in(read_file(store.dir() / "llm_calls.jsonl"));
        std::string line;
        int gen = 0, recon = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto tag = nlohmann::json::parse(line).value("tag", "");
            if (tag.rfind("spec_round_", 0) == 0) ++gen;
            if (tag.rfind("recon_", 0) == 0) ++recon;
        }
        return {gen, recon};
    }

    std::string prompt_of(const std::string& tag) const {
        std::istringstream in(read_file(store.dir() / "llm_calls.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto rec = nlohmann::json::parse(line);
            if (rec.value("tag", "") == tag)
                return rec["request"]["messages"][0].value("text", "");
        }
        return "";
    }

    TempDir tmp;
    RunStore store;
    std::shared_ptr<CallLog> log;
    std::shared_ptr<ScriptedBackend> backend;
    Gateway gateway;
    PromptLibrary prompts;
    ToolConfig cfg;
    Toolchain* tools_override;
    std::unique_ptr<SubprocessToolchain> subprocess_tools;
};

Diagnosis diag_of(DiagnosisKind kind) {
    Diagnosis d;
    d.kind = kind;
    return d;
}

const std::string kSimpleRtl = "module M(input a, output y); assign y = a; endmodule";

} // namespace

TEST_CASE("decide_next_action matches the error-handling policy exactly") {
    // 5 diagnosis kinds x budget in {0, >0}: ten assertions.
    CHECK(decide_next_action(diag_of(DiagnosisKind::Pass), 0) == ActionKind::Accept);
    CHECK(decide_next_action(diag_of(DiagnosisKind::Pass), 2) == ActionKind::Accept);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E1_InvalidOriginal), 0) ==
          ActionKind::StopNonVerifiable);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E1_InvalidOriginal), 2) ==
          ActionKind::StopNonVerifiable);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E2_NonCompilableRecon), 2) ==
          ActionKind::ReconstructAgain);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E2_NonCompilableRecon), 0) ==
          ActionKind::SendCompileErrorToGenerator);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E3_FunctionalMismatch), 2) ==
          ActionKind::ReconstructAgain);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E3_FunctionalMismatch), 0) ==
          ActionKind::SendCounterexampleToGenerator);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E4_Inconclusive), 2) ==
          ActionKind::ReconstructAgain);
    CHECK(decide_next_action(diag_of(DiagnosisKind::E4_Inconclusive), 0) ==
          ActionKind::SendErrorMessageToGenerator);
}

TEST_CASE("golden transcript: full-diagnosis loop passes at round 2") {
    LoopHarness h(golden_transcript().entries);
    auto env = h.env();
    LoopConfig config; // defaults: 2 spec retries, 2 recon retries, full diagnosis
    std::string rtl = read_fixture("verilog/counter_fig3.v");

    LoopState state = run_specloop(rtl, config, env);

    CHECK(state.status == LoopStatus::Passed);
    CHECK(state.round == 2);
    REQUIRE(state.history.size() == 2);
    CHECK(state.history[0].verifier->diagnosis.kind == DiagnosisKind::E3_FunctionalMismatch);
    CHECK(state.history[1].verifier->diagnosis.kind == DiagnosisKind::Pass);
    REQUIRE(state.final_spec.has_value());
    CHECK(state.final_spec->clocking_and_reset.find("Synchronous") != std::string::npos);

    auto [gen, recon] = h.call_counts();
    CHECK(gen == 2);
    CHECK(recon == 4);

    // Round-2 refinement prompt carries the full diagnosis.
    std::string refinement = h.prompt_of("spec_round_2");
    CHECK(refinement.find("Spec Verification fail.") != std::string::npos);
    CHECK(refinement.find("Mismatched Signal") != std::string::npos);
    CHECK(refinement.find("t=11 sig=q") != std::string::npos);

    for (const char* artifact : {"original.v", "spec_round_1.md", "spec_round_2.md",
                                 "recon_round_1_attempt_1.v", "recon_round_2_attempt_1.v",
                                 "report_round_1.txt", "report_round_2.txt", "state.json"})
        CHECK(h.store.has(artifact));

    CHECK(audit_info_hiding(h.store.dir(), rtl).empty());
}

TEST_CASE("single-round mode: one generation, no verification") {
    FakeToolchain fake;
    LoopHarness h({{"spec_round_1", spec_response("M")}}, &fake);
    auto env = h.env();
    LoopConfig config;
    config.max_spec_retries = 0;
    config.feedback_mode = FeedbackMode::SingleRound;

    LoopState state = run_specloop(kSimpleRtl, config, env);

    CHECK(state.status == LoopStatus::BudgetExhausted);
    CHECK(state.detail.find("single-round") != std::string::npos);
    CHECK(state.history.size() == 1);
    CHECK(fake.fec_calls == 0);
    auto [gen, recon] = h.call_counts();
    CHECK(gen == 1);
    CHECK(recon == 0);
}

TEST_CASE("non-compiling original: NonVerifiable with zero LLM calls") {
    LoopHarness h({{"spec_round_1", spec_response("M")}});
    auto env = h.env();
    LoopState state = run_specloop("module m(; endmodule", LoopConfig{}, env);

    CHECK(state.status == LoopStatus::NonVerifiable);
    CHECK(state.history.empty());
    REQUIRE(state.e1.has_value());
    CHECK(state.e1->kind == DiagnosisKind::E1_InvalidOriginal);
    CHECK(h.backend->consumed() == 0);
    CHECK_FALSE(h.store.has("llm_calls.jsonl")); // no call was ever logged
}

TEST_CASE("pass/fail-only mode: refinement prompt carries the verdict line only") {
    FakeToolchain fake;
    std::string failing_rtl = rtl_response("module M(input a, output y); // NOT_EQUIV\n"
                                           "assign y = a; endmodule");
    LoopHarness h({{"spec_round_1", spec_response("M")},
                   {"recon_round_1_attempt_1", failing_rtl},
                   {"recon_round_1_attempt_2", failing_rtl},
                   {"recon_round_1_attempt_3", failing_rtl},
                   {"spec_round_2", spec_response("M", "revised wording")},
                   {"recon_round_2_attempt_1", rtl_response(kSimpleRtl)}},
                  &fake);
    auto env = h.env();
    LoopConfig config;
    config.feedback_mode = FeedbackMode::PassFailOnly;

    LoopState state = run_specloop(kSimpleRtl, config, env);
    CHECK(state.status == LoopStatus::Passed);

    std::string refinement = h.prompt_of("spec_round_2");
    REQUIRE_FALSE(refinement.empty());
    CHECK(refinement.find("Spec Verification fail.") != std::string::npos);
    CHECK(refinement.find("Mismatched Signal") == std::string::npos);
    CHECK(refinement.find("# Reconstruction RTL:") == std::string::npos);
    CHECK(refinement.find("NOT_EQUIV") == std::string::npos);
    CHECK(refinement.find("fake compile error") == std::string::npos);
}

TEST_CASE("generator stop: unchanged spec terminates the loop") {
    FakeToolchain fake;
    std::string failing_rtl = rtl_response("module M(); // NOT_EQUIV\nendmodule");
    LoopHarness h({{"spec_round_1", spec_response("M")},
                   {"recon_round_1_attempt_1", failing_rtl},
                   {"recon_round_1_attempt_2", failing_rtl},
                   {"recon_round_1_attempt_3", failing_rtl},
                   {"spec_round_2", spec_response("M")}}, // identical resubmission
                  &fake);
    auto env = h.env();
    LoopState state = run_specloop(kSimpleRtl, LoopConfig{}, env);

    CHECK(state.status == LoopStatus::GeneratorStopped);
    CHECK(state.history.size() == 2);
    auto [gen, recon] = h.call_counts();
    CHECK(gen == 2); // the stop decision consumed its generation
    CHECK(recon == 3);
}

TEST_CASE("detect_generator_stop: canonical-render equality") {
    std::mt19937_64 rng(5);
    auto spec = random_spec(rng, false);
    CHECK(detect_generator_stop(spec, spec));

    auto changed = spec;
    changed.clocking_and_reset = "Reset: Synchronous, sampled at the clock edge.";
    spec.clocking_and_reset = "Reset: Asynchronous, immediate.";
    CHECK_FALSE(detect_generator_stop(spec, changed));

    // Whitespace normalization: re-parsing the rendered form is canonical.
    auto reparsed = parse_spec(extract_spec_block(render_spec(spec)));
    CHECK(detect_generator_stop(spec, reparsed));
    CHECK(render_spec(spec) == render_spec(reparsed)); // equality oracle
}

TEST_CASE("malformed generator output consumes its round") {
    FakeToolchain fake;
    LoopHarness h({{"spec_round_1", "no markers at all"},
                   {"spec_round_2", "[SPEC_START] still missing sections [SPEC_END]"},
                   {"spec_round_3", "nope"}},
                  &fake);
    auto env = h.env();
    LoopState state = run_specloop(kSimpleRtl, LoopConfig{}, env);

    CHECK(state.status == LoopStatus::BudgetExhausted);
    CHECK(state.history.size() == 3);
    for (const auto& r : state.history) CHECK_FALSE(r.parsed);
    auto [gen, recon] = h.call_counts();
    CHECK(gen == 3);
    CHECK(recon == 0);

    // With no previous valid spec to refine, the loop re-issues the
    // first-round prompt.
    std::string second = h.prompt_of("spec_round_2");
    CHECK(second.find("[RTL_START]") != std::string::npos);
}

TEST_CASE("malformed output after a valid round: refinement explains the failure") {
    FakeToolchain fake;
    std::string failing_rtl = rtl_response("module M(); // NOT_EQUIV\nendmodule");
    LoopHarness h({{"spec_round_1", spec_response("M")},
                   {"recon_round_1_attempt_1", failing_rtl},
                   {"recon_round_1_attempt_2", failing_rtl},
                   {"recon_round_1_attempt_3", failing_rtl},
                   {"spec_round_2", "format went sideways, no markers"},
                   {"spec_round_3", spec_response("M", "second try")},
                   {"recon_round_3_attempt_1", rtl_response(kSimpleRtl)}},
                  &fake);
    auto env = h.env();
    LoopState state = run_specloop(kSimpleRtl, LoopConfig{}, env);
    CHECK(state.status == LoopStatus::Passed);
    CHECK(state.history.size() == 3);
    CHECK_FALSE(state.history[1].parsed);

    std::string third = h.prompt_of("spec_round_3");
    CHECK(third.find("could not be parsed") != std::string::npos);
}

TEST_CASE("budget bounds under randomized response streams") {
    std::mt19937_64 rng(2024);
    for (int scenario = 0; scenario < 100; ++scenario) {
        // A wildcard transcript: the loop consumes whatever comes next.
        std::vector<std::string> pool = {
            spec_response("M"),
            spec_response("M", "variant " + std::to_string(rng() % 7)),
            "no markers",
            rtl_response(kSimpleRtl),
            rtl_response("module M(input a, output y); // BAD_COMPILE\nassign y = a; endmodule"),
            rtl_response("module M(input a, output y); // NOT_EQUIV\nassign y = a; endmodule"),
            rtl_response("module M(input a, output y); // INCONCLUSIVE\nassign y = a; endmodule"),
        };
        std::vector<TranscriptEntry> entries;
        for (int i = 0; i < 20; ++i) entries.push_back({"*", pool[rng() % pool.size()]});

        FakeToolchain fake;
        LoopHarness h(entries, &fake);
        auto env = h.env();
        LoopState state = run_specloop(kSimpleRtl, LoopConfig{}, env);

        CHECK(state.status != LoopStatus::Running);
        auto [gen, recon] = h.call_counts();
        CHECK(gen <= 3);
        CHECK(recon <= 9);

        // Monotone history: rounds strictly increase, one entry per generation.
        CHECK(static_cast<int>(state.history.size()) == gen);
        for (size_t i = 1; i < state.history.size(); ++i)
            CHECK(state.history[i].round > state.history[i - 1].round);
    }
}

TEST_CASE("state.json records status, diagnosis sequence, config snapshot") {
    LoopHarness h(golden_transcript().entries);
    auto env = h.env();
    LoopState state = run_specloop(read_fixture("verilog/counter_fig3.v"), LoopConfig{}, env);
    REQUIRE(state.status == LoopStatus::Passed);

    auto js = h.store.read_state();
    CHECK(js["status"] == "Passed");
    CHECK(js["mode"] == "full");
    REQUIRE(js["diagnosis_sequence"].size() == 2);
    CHECK(js["diagnosis_sequence"][0] == "E3_FunctionalMismatch");
    CHECK(js["diagnosis_sequence"][1] == "Pass");
    CHECK(js["config"]["temperature"].get<double>() == doctest::Approx(0.4));
    CHECK(js["config"]["fec_depth"] == 10);
    CHECK(js["final_spec_artifact"] == "spec_round_2.md");
    CHECK(js["tool_versions"]["compiler"] == "microv 0.1.0");
    bool has_spec1 = false;
    for (const auto& a : js["artifacts"])
        if (a["name"] == "spec_round_1.md" && a["deterministic"].get<bool>()) has_spec1 = true;
    CHECK(has_spec1);
}

TEST_CASE("toolchain failure inside the verifier ends the run as BudgetExhausted") {
    ToolchainOptions opts;
    opts.compiler_cmd = microv_bin() + " compile";
    opts.fec_cmd = "no_such_fec_binary"; // compiler fine, checker missing
    SubprocessToolchain broken_tools(opts);
    LoopHarness h({{"spec_round_1", spec_response("M")},
                   {"recon_round_1_attempt_1", rtl_response(kSimpleRtl)}},
                  &broken_tools);
    auto env = h.env();
    LoopState state = run_specloop(kSimpleRtl, LoopConfig{}, env);
    CHECK(state.status == LoopStatus::BudgetExhausted);
    CHECK(state.detail.find("ToolNotFound") != std::string::npos);
    CHECK(h.store.has("state.json")); // evidence recorded despite the failure
}

TEST_CASE("generator LLM failure ends the run as BudgetExhausted with evidence") {
    LoopHarness h({}); // empty transcript: the first generator call fails
    auto env = h.env();
    LoopState state = run_specloop(kSimpleRtl, LoopConfig{}, env);
    CHECK(state.status == LoopStatus::BudgetExhausted);
    CHECK(state.detail.find("generator call failed") != std::string::npos);
    CHECK(state.detail.find("ScriptMismatch") != std::string::npos);
}

TEST_CASE("run_parallel: bounded pool covers all jobs and propagates failures") {
    std::atomic<int> done{0};
    std::vector<std::function<void()>> jobs;
    for (int i = 0; i < 32; ++i) jobs.push_back([&done] { ++done; });
    run_parallel(jobs, 4);
    CHECK(done == 32);

    jobs.push_back([] { throw Error(Errc::IoError, "job failed"); });
    try {
        run_parallel(jobs, 4);
        FAIL("expected the job exception to propagate");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::IoError);
    }
}
