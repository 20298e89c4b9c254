// SPDX-License-Identifier: Apache-2.0

#include "specloop/config.hpp"
#include "specloop/errors.hpp"
#include "specloop/store.hpp"
#include "specloop/subprocess.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace specloop;
using namespace testsupport;

namespace {

ExecResult run_cli(const std::vector<std::string>& args, const std::filesystem::path& cwd) {
    std::vector<std::string> argv = {cli_bin()};
    argv.insert(argv.end(), args.begin(), args.end());
    ExecOptions opts;
    opts.cwd = cwd;
    opts.timeout_ms = 120000;
    return run_process(argv, opts);
}

std::filesystem::path write_test_config(const std::filesystem::path& dir) {
    auto cfg_path = dir / "specloop.cfg";
    write_file(cfg_path, "compiler_cmd = " + microv_bin() + " compile\n"
                             "fec_cmd = " + microv_bin() + " fec\n"
                             "simulator_cmd = " + microv_bin() + " sim\n"
                             "prompts_dir = " + prompts_dir().string() + "\n");
    return cfg_path;
}

// One run directory under out/<case>/<timestamp>.
std::filesystem::path single_run_dir(const std::filesystem::path& out_root,
                                     const std::string& case_id) {
    auto case_dir = out_root / case_id;
    REQUIRE(std::filesystem::is_directory(case_dir));
    std::vector<std::filesystem::path> runs;
    for (const auto& e : std::filesystem::directory_iterator(case_dir))
        if (e.is_directory()) runs.push_back(e.path());
    REQUIRE(runs.size() == 1);
    return runs.front();
}

std::string eval_spec_text(const std::string& module_name,
                           const std::vector<std::pair<std::string, std::string>>& inputs,
                           const std::vector<std::pair<std::string, std::string>>& outputs,
                           const std::string& description) {
    std::string body = "Summary:\nA small combinational design.\n\nModule Name: " + module_name +
                       "\n\nInputs:\n";
    for (const auto& [name, purpose] : inputs) body += "- " + name + " (1-bit): " + purpose + "\n";
    body += "\nOutputs:\n";
    for (const auto& [name, purpose] : outputs)
        body += "- " + name + " (1-bit): " + purpose + "\n";
    body += "\nDetailed Functional Description:\n" + description + "\n";
    return "analysis...\n[SPEC_START]\n" + body + "[SPEC_END]\n";
}

} // namespace

TEST_CASE("cli run: golden transcript ends Passed (round 2)") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    auto res = run_cli({"run", "--rtl", fixture("verilog/counter_fig3.v").string(), "--config",
                        cfg.string(), "--transcript", fixture("golden_transcript").string(),
                        "--out", (tmp.path() / "runs").string()},
                       tmp.path());

    CHECK(res.exit_code == 0);
    CHECK(res.out.find("Passed (round 2)") != std::string::npos);

    // Config defaults are printed at run start.
    for (const char* setting : {"temperature = 0.4", "max_spec_retries = 2",
                                "max_recon_retries = 2", "fec_depth = 10"})
        CHECK(res.out.find(setting) != std::string::npos);

    auto run_dir = single_run_dir(tmp.path() / "runs", "counter_fig3");
    for (const char* artifact :
         {"original.v", "spec_round_1.md", "spec_round_2.md", "report_round_1.txt",
          "report_round_2.txt", "llm_calls.jsonl", "state.json"})
        CHECK(std::filesystem::exists(run_dir / artifact));

    // The round-1 report carries the counterexample block.
    std::string report = read_file(run_dir / "report_round_1.txt");
    CHECK(report.find("Mismatched Signal") != std::string::npos);
    CHECK(report.find("t=11 sig=q") != std::string::npos);
}

TEST_CASE("cli run: single mode leaves exactly one spec artifact") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    // Single round consumes only the first transcript entry.
    auto res = run_cli({"run", "--rtl", fixture("verilog/counter_fig3.v").string(), "--config",
                        cfg.string(), "--transcript", fixture("golden_transcript").string(),
                        "--mode", "single", "--out", (tmp.path() / "runs").string()},
                       tmp.path());
    CHECK(res.exit_code == 2); // no verified pass in single-round mode

    auto run_dir = single_run_dir(tmp.path() / "runs", "counter_fig3");
    int spec_artifacts = 0;
    for (const auto& e : std::filesystem::directory_iterator(run_dir)) {
        auto name = e.path().filename().string();
        if (name.rfind("spec_round_", 0) == 0 && e.path().extension() == ".md")
            ++spec_artifacts;
    }
    CHECK(spec_artifacts == 1);
    CHECK_FALSE(std::filesystem::exists(run_dir / "report_round_1.txt"));
}

TEST_CASE("cli run: relative --out works from any working directory") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    auto res = run_cli({"run", "--rtl", fixture("verilog/counter_fig3.v").string(), "--config",
                        cfg.string(), "--transcript", fixture("golden_transcript").string(),
                        "--out", "relative_runs"},
                       tmp.path());
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("Passed (round 2)") != std::string::npos);
    CHECK(std::filesystem::is_directory(tmp.path() / "relative_runs" / "counter_fig3"));
}

TEST_CASE("cli run: passfail mode also converges on the golden transcript") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    auto res = run_cli({"run", "--rtl", fixture("verilog/counter_fig3.v").string(), "--config",
                        cfg.string(), "--transcript", fixture("golden_transcript").string(),
                        "--mode", "passfail", "--out", (tmp.path() / "runs").string()},
                       tmp.path());
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("Passed (round 2)") != std::string::npos);

    // The verdict-only report reaches the generator: no diagnostics leak into
    // the round-2 prompt even though the checker produced a counterexample.
    auto run_dir = single_run_dir(tmp.path() / "runs", "counter_fig3");
    std::istringstream in(read_file(run_dir / "llm_calls.jsonl"));
    std::string line, refinement;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto rec = nlohmann::json::parse(line);
        if (rec.value("tag", "") == "spec_round_2")
            refinement = rec["request"]["messages"][0].value("text", "");
    }
    REQUIRE_FALSE(refinement.empty());
    CHECK(refinement.find("Spec Verification fail.") != std::string::npos);
    CHECK(refinement.find("Mismatched Signal") == std::string::npos);
    CHECK(refinement.find("# Reconstruction RTL:") == std::string::npos);
}

TEST_CASE("cli run: non-compiling original exits 3") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    write_file(tmp.path() / "broken.v", "module m(; endmodule\n");
    auto res = run_cli({"run", "--rtl", (tmp.path() / "broken.v").string(), "--config",
                        cfg.string(), "--transcript", fixture("golden_transcript").string(),
                        "--out", (tmp.path() / "runs").string()},
                       tmp.path());
    CHECK(res.exit_code == 3);
    CHECK(res.out.find("NonVerifiable") != std::string::npos);
}

TEST_CASE("cli usage errors exit 64") {
    TempDir tmp;
    CHECK(run_cli({"run"}, tmp.path()).exit_code == 64); // missing --rtl
    CHECK(run_cli({"eval", "--benchmark", "x", "--format", "unknown_format"}, tmp.path())
              .exit_code == 64);
    CHECK(run_cli({}, tmp.path()).exit_code == 64);
    auto cfgless = run_cli({"run", "--rtl", fixture("verilog/and2.v").string(), "--mode",
                            "bogus"},
                           tmp.path());
    CHECK(cfgless.exit_code == 64);
}

TEST_CASE("cli replay: byte-identical re-execution, tampering detected") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    auto run_res = run_cli({"run", "--rtl", fixture("verilog/counter_fig3.v").string(),
                            "--config", cfg.string(), "--transcript",
                            fixture("golden_transcript").string(), "--out",
                            (tmp.path() / "runs").string()},
                           tmp.path());
    REQUIRE(run_res.exit_code == 0);
    auto run_dir = single_run_dir(tmp.path() / "runs", "counter_fig3");

    auto replay_ok = run_cli({"replay", "--run", run_dir.string(), "--out",
                              (tmp.path() / "replays").string()},
                             tmp.path());
    CHECK(replay_ok.exit_code == 0);
    CHECK(replay_ok.out.find("replay identical") != std::string::npos);

    // Tamper with a recorded spec artifact: replay must notice and name it.
    auto spec_path = run_dir / "spec_round_1.md";
    write_file(spec_path, read_file(spec_path) + "\ntampered line\n");
    auto replay_bad = run_cli({"replay", "--run", run_dir.string(), "--out",
                               (tmp.path() / "replays2").string()},
                              tmp.path());
    CHECK(replay_bad.exit_code == 5);
    CHECK(replay_bad.out.find("spec_round_1.md") != std::string::npos);

    // A run directory without a transcript cannot replay.
    std::filesystem::remove(run_dir / "llm_calls.jsonl");
    auto replay_missing = run_cli({"replay", "--run", run_dir.string(), "--out",
                                   (tmp.path() / "replays3").string()},
                                  tmp.path());
    CHECK(replay_missing.exit_code == 1);
}

TEST_CASE("cli eval: scripted single run over the flat benchmark") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());

    // Cases evaluate in sorted order: and2, half_adder, xor2. Each consumes a
    // generation, one reconstruction, and one evaluator reconstruction.
    auto transcript_dir = tmp.path() / "transcript";
    std::filesystem::create_directories(transcript_dir);
    auto add = [&transcript_dir](int n, const std::string& tag, const std::string& body) {
        char name[64];
        std::snprintf(name, sizeof(name), "%02d_%s.txt", n, tag.c_str());
        write_file(transcript_dir / name, body);
    };
    std::string and2_rtl = "module And2 (input a, input b, output y);\n"
                           "  assign y = a & b;\nendmodule";
    std::string ha_rtl = "module HalfAdder (input a, input b, output sum, output cout);\n"
                         "  assign sum = a ^ b;\n  assign cout = a & b;\nendmodule";
    std::string xor2_rtl = "module Xor2 (input a, input b, output y);\n"
                           "  assign y = a ^ b;\nendmodule";
    auto and2_spec = eval_spec_text("And2", {{"a", "left"}, {"b", "right"}},
                                    {{"y", "conjunction"}},
                                    "y is the logical conjunction of a and b.");
    auto ha_spec = eval_spec_text("HalfAdder", {{"a", "left"}, {"b", "right"}},
                                  {{"sum", "sum bit"}, {"cout", "carry"}},
                                  "sum is the exclusive-or of a and b; cout their conjunction.");
    auto xor2_spec = eval_spec_text("Xor2", {{"a", "left"}, {"b", "right"}},
                                    {{"y", "exclusive-or"}},
                                    "y is the exclusive-or of a and b.");

    add(1, "spec_round_1", and2_spec);
    add(2, "recon_round_1_attempt_1", rtl_response(and2_rtl));
    add(3, "rr_and2_run1", rtl_response(and2_rtl));
    add(4, "spec_round_1", ha_spec);
    add(5, "recon_round_1_attempt_1", rtl_response(ha_rtl));
    add(6, "rr_half_adder_run1", rtl_response(ha_rtl));
    add(7, "spec_round_1", xor2_spec);
    add(8, "recon_round_1_attempt_1", rtl_response(xor2_rtl));
    add(9, "rr_xor2_run1", rtl_response(xor2_rtl));

    auto res = run_cli({"eval", "--benchmark", fixture("bench_ve").string(), "--format",
                        "verilogeval", "--runs", "1", "--mode", "full", "--config", cfg.string(),
                        "--transcript", transcript_dir.string(), "--out",
                        (tmp.path() / "eval_out").string()},
                       tmp.path());

    CHECK(res.exit_code == 0);
    CHECK(res.out.find("warning: single run") != std::string::npos);
    CHECK(res.out.find("warning: case 'mux2' skipped") != std::string::npos);

    auto summary = nlohmann::json::parse(read_file(tmp.path() / "eval_out" / "summary.json"));
    CHECK(summary["n_runs"] == 1);
    CHECK(summary["mean"].get<double>() == doctest::Approx(1.0));
    CHECK(summary["std"].get<double>() == doctest::Approx(0.0));
    CHECK(summary["split"]["verified"]["rr1"] == 3);

    std::istringstream results(read_file(tmp.path() / "eval_out" / "results.jsonl"));
    std::string line;
    int rows = 0;
    while (std::getline(results, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 3);

    // Table III-shaped output.
    CHECK(res.out.find("| Dataset | Method |") != std::string::npos);
    CHECK(res.out.find("1.000 +/- 0.000") != std::string::npos);

    // report --summary renders the stored stats.
    auto rep = run_cli({"report", "--summary",
                        (tmp.path() / "eval_out" / "summary.json").string()},
                       tmp.path());
    CHECK(rep.exit_code == 0);
    CHECK(rep.out.find("bench_ve") != std::string::npos);
}

TEST_CASE("cli eval: three runs aggregate with n_runs=3") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());

    std::string and2_rtl = "module And2 (input a, input b, output y);\n"
                           "  assign y = a & b;\nendmodule";
    auto and2_spec = eval_spec_text("And2", {{"a", "left"}, {"b", "right"}},
                                    {{"y", "conjunction"}},
                                    "y is the logical conjunction of a and b.");

    // Single-case benchmark, replayed three times.
    auto bench = tmp.path() / "bench";
    write_file(bench / "and2.v", read_fixture("verilog/and2.v"));
    write_file(bench / "and2_tb.v", read_fixture("bench_ve/and2_tb.v"));

    auto transcript_dir = tmp.path() / "transcript";
    std::filesystem::create_directories(transcript_dir);
    int n = 0;
    for (int run = 1; run <= 3; ++run) {
        auto add = [&](const std::string& tag, const std::string& body) {
            char name[64];
            std::snprintf(name, sizeof(name), "%02d_%s.txt", ++n, tag.c_str());
            write_file(transcript_dir / name, body);
        };
        add("spec_round_1", and2_spec);
        add("recon_round_1_attempt_1", rtl_response(and2_rtl));
        add("rr_and2_run" + std::to_string(run), rtl_response(and2_rtl));
    }

    auto res = run_cli({"eval", "--benchmark", bench.string(), "--format", "verilogeval",
                        "--runs", "3", "--mode", "full", "--config", cfg.string(),
                        "--transcript", transcript_dir.string(), "--out",
                        (tmp.path() / "eval_out").string()},
                       tmp.path());
    CHECK(res.exit_code == 0);
    auto summary = nlohmann::json::parse(read_file(tmp.path() / "eval_out" / "summary.json"));
    CHECK(summary["n_runs"] == 3);
    CHECK(summary["per_run_means"].size() == 3);
    CHECK(summary["mean"].get<double>() == doctest::Approx(1.0));
}

TEST_CASE("cli run: SPECLOOP_CONFIG selects the config file") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    setenv("SPECLOOP_CONFIG", cfg.string().c_str(), 1);
    auto res = run_cli({"run", "--rtl", fixture("verilog/counter_fig3.v").string(),
                        "--transcript", fixture("golden_transcript").string(), "--out",
                        (tmp.path() / "runs").string()},
                       tmp.path());
    unsetenv("SPECLOOP_CONFIG");
    CHECK(res.exit_code == 0);
    CHECK(res.out.find("Passed (round 2)") != std::string::npos);
}

TEST_CASE("cli report --run prints rounds and status") {
    TempDir tmp;
    auto cfg = write_test_config(tmp.path());
    auto run_res = run_cli({"run", "--rtl", fixture("verilog/counter_fig3.v").string(),
                            "--config", cfg.string(), "--transcript",
                            fixture("golden_transcript").string(), "--out",
                            (tmp.path() / "runs").string()},
                           tmp.path());
    REQUIRE(run_res.exit_code == 0);
    auto run_dir = single_run_dir(tmp.path() / "runs", "counter_fig3");

    auto rep = run_cli({"report", "--run", run_dir.string()}, tmp.path());
    CHECK(rep.exit_code == 0);
    CHECK(rep.out.find("status: Passed") != std::string::npos);
    CHECK(rep.out.find("E3_FunctionalMismatch") != std::string::npos);
}

TEST_CASE("atomic_write_file leaves no temp files and overwrites cleanly") {
    TempDir tmp;
    auto p = tmp.path() / "nested" / "file.txt";
    atomic_write_file(p, "first");
    CHECK(read_file(p) == "first");
    atomic_write_file(p, "second version");
    CHECK(read_file(p) == "second version");
    for (const auto& e : std::filesystem::recursive_directory_iterator(tmp.path()))
        CHECK(e.path().extension() != ".tmp");
}

TEST_CASE("RunStore: unique directories, artifact index, state round trip") {
    TempDir tmp;
    auto a = RunStore::create(tmp.path(), "case_x");
    auto b = RunStore::create(tmp.path(), "case_x");
    CHECK(a.dir() != b.dir());

    a.write_text("spec_round_1.md", "content", true);
    a.write_text("fec_1_1.log", "log", false);
    a.write_text("spec_round_1.md", "updated", true); // no duplicate index entry
    REQUIRE(a.index().size() == 2);
    CHECK(a.read_text("spec_round_1.md") == "updated");

    a.write_state({{"status", "Passed"}});
    auto reopened = RunStore::open(a.dir());
    CHECK(reopened.read_state()["status"] == "Passed");
    CHECK(reopened.case_id() == "case_x");
}

TEST_CASE("tool_version: captures the first line of --version") {
    CHECK(tool_version(microv_bin() + " compile") == "microv 0.1.0");
    CHECK(tool_version("no_such_binary_xyz") == "unknown");
}

TEST_CASE("ToolConfig: defaults reproduce the reference settings") {
    ToolConfig cfg;
    CHECK(cfg.temperature == doctest::Approx(0.4));
    CHECK(cfg.max_spec_retries == 2);
    CHECK(cfg.max_recon_retries == 2);
    CHECK(cfg.fec_depth == 10);
    CHECK(cfg.generator_model == cfg.reconstructor_model); // same model, both roles
    CHECK(cfg.api_key_env == "SPECLOOP_API_KEY");

    std::string described = cfg.describe();
    CHECK(described.find("temperature = 0.4") != std::string::npos);
    CHECK(described.find("fec_depth = 10") != std::string::npos);
}

TEST_CASE("ToolConfig: file parsing, overrides, unknown keys") {
    TempDir tmp;
    write_file(tmp.path() / "cfg",
               "# comment line\n"
               "temperature = 0.9\n"
               "fec_depth = 4\n"
               "sim_failure_markers = Oops,Bang\n");
    auto cfg = ToolConfig::load_file(tmp.path() / "cfg");
    CHECK(cfg.temperature == doctest::Approx(0.9));
    CHECK(cfg.fec_depth == 4);
    REQUIRE(cfg.sim_failure_markers.size() == 2);
    CHECK(cfg.sim_failure_markers[1] == "Bang");

    write_file(tmp.path() / "bad", "no_such_key = 1\n");
    try {
        ToolConfig::load_file(tmp.path() / "bad");
        FAIL("expected ConfigError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ConfigError);
    }

    // Round trip through the state-snapshot form.
    auto snapshot = ToolConfig::from_json(cfg.to_json());
    CHECK(snapshot.fec_depth == 4);
    CHECK(snapshot.sim_failure_markers == cfg.sim_failure_markers);
}
