// SPDX-License-Identifier: Apache-2.0
//
// specloop command-line driver: run (one RTL-to-spec refinement loop),
// eval (benchmark sweep with reconstruction scoring), replay (deterministic
// re-execution of a recorded run), report (pretty-print stored results).

#include "specloop/errors.hpp"
#include "specloop/eval_harness.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace specloop;

namespace {

std::string read_file_or_exit(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot read " << p << "\n";
        std::exit(1);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ToolConfig load_config(const std::string& config_path) {
    if (!config_path.empty()) return ToolConfig::load_file(config_path);
    if (const char* env = std::getenv("SPECLOOP_CONFIG"); env && *env)
        return ToolConfig::load_file(env);
    return ToolConfig{};
}

std::shared_ptr<LlmBackend> make_backend(const ToolConfig& cfg, const std::string& transcript) {
    if (!transcript.empty())
        return std::make_shared<ScriptedBackend>(Transcript::load(transcript));
    LiveBackendOptions opts;
    opts.base_url = cfg.api_base_url;
    opts.api_key_env = cfg.api_key_env;
    opts.timeout_s = cfg.llm_timeout_s;
    opts.max_attempts = cfg.llm_max_attempts;
    opts.backoff_ms = cfg.llm_backoff_ms;
    return std::make_shared<LiveBackend>(opts);
}

ToolchainOptions toolchain_options(const ToolConfig& cfg) {
    ToolchainOptions opts;
    opts.compiler_cmd = cfg.compiler_cmd;
    opts.fec_cmd = cfg.fec_cmd;
    opts.compile_timeout_s = cfg.compile_timeout_s;
    return opts;
}

LoopConfig loop_config(const ToolConfig& cfg, FeedbackMode mode) {
    LoopConfig lc;
    lc.max_spec_retries = mode == FeedbackMode::SingleRound ? 0 : cfg.max_spec_retries;
    lc.feedback_mode = mode;
    lc.verifier_budget.max_recon_retries = cfg.max_recon_retries;
    lc.generator_model = cfg.generator_model;
    lc.reconstructor_model = cfg.reconstructor_model;
    return lc;
}

int status_exit_code(LoopStatus status) {
    switch (status) {
    case LoopStatus::Passed: return 0;
    case LoopStatus::NonVerifiable: return 3;
    default: return 2;
    }
}

int cmd_run(const std::string& rtl_path, const std::string& mode_name,
            const std::string& out_dir, const std::string& config_path,
            const std::string& transcript, const std::string& case_id_arg) {
    auto mode = feedback_mode_from_name(mode_name);
    if (!mode) {
        std::cerr << "error: unknown mode '" << mode_name << "' (full|passfail|single)\n";
        return 64;
    }
    ToolConfig cfg = load_config(config_path);
    std::string rtl = read_file_or_exit(rtl_path);
    std::string case_id =
        case_id_arg.empty() ? fs::path(rtl_path).stem().string() : case_id_arg;

    std::cout << "specloop run: case '" << case_id << "', mode " << feedback_mode_name(*mode)
              << "\nconfig:\n"
              << cfg.describe();

    RunStore store = RunStore::create(out_dir, case_id);
    auto log = std::make_shared<CallLog>(store.dir() / "llm_calls.jsonl");
    Gateway gateway(make_backend(cfg, transcript), log, cfg.llm_min_interval_ms);
    SubprocessToolchain tools(toolchain_options(cfg));
    PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);

    LoopEnv env{gateway, tools, prompts, cfg, store};
    LoopState state = run_specloop(rtl, loop_config(cfg, *mode), env);

    if (state.status == LoopStatus::Passed)
        std::cout << "Passed (round " << state.round << ")\n";
    else
        std::cout << loop_status_name(state.status) << " (round " << state.round << "): "
                  << state.detail << "\n";
    if (!state.final_spec_artifact.empty())
        std::cout << "final spec: " << (store.dir() / state.final_spec_artifact).string() << "\n";
    std::cout << "run directory: " << store.dir().string() << "\n";
    return status_exit_code(state.status);
}

int cmd_eval(const std::string& bench_dir, const std::string& format_name, int runs,
             const std::string& mode_name, const std::string& out_dir,
             const std::string& config_path, const std::string& transcript) {
    auto mode = feedback_mode_from_name(mode_name);
    if (!mode) {
        std::cerr << "error: unknown mode '" << mode_name << "'\n";
        return 64;
    }
    auto format = benchmark_format_from_name(format_name);
    if (!format) {
        std::cerr << "error: unknown benchmark format '" << format_name
                  << "' (verilogeval|rtllm)\n";
        return 64;
    }
    if (runs < 1) {
        std::cerr << "error: --runs must be >= 1\n";
        return 64;
    }

    ToolConfig cfg = load_config(config_path);
    std::cout << "specloop eval: " << bench_dir << " (" << format_name << "), mode "
              << feedback_mode_name(*mode) << ", runs " << runs << "\nconfig:\n"
              << cfg.describe();
    if (runs == 1) std::cout << "warning: single run; reported std is 0 by construction\n";

    IngestReport bench = ingest_benchmark(bench_dir, *format);
    for (const auto& w : bench.warnings) std::cout << "warning: " << w << "\n";
    std::cout << bench.cases.size() << " cases\n";

    auto backend = make_backend(cfg, transcript);
    SubprocessToolchain tools(toolchain_options(cfg));
    PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);

    fs::create_directories(out_dir);
    std::vector<RRResult> results;
    std::mutex results_mu;
    // A scripted transcript is consumed strictly in order, so scripted eval
    // runs sequentially; live runs use the worker pool.
    int workers = transcript.empty() ? cfg.workers : 1;

    for (int run = 1; run <= runs; ++run) {
        std::vector<std::function<void()>> jobs;
        for (const auto& bc : bench.cases) {
            jobs.push_back([&, run] {
                RunStore store =
                    RunStore::create(fs::path(out_dir) / "runs",
                                     bc.case_id + "_run" + std::to_string(run));
                auto log = std::make_shared<CallLog>(store.dir() / "llm_calls.jsonl");
                Gateway gateway(backend, log, cfg.llm_min_interval_ms);

                RRResult rr;
                std::optional<StructuredSpec> final_spec;
                bool verified = false;
                try {
                    LoopEnv env{gateway, tools, prompts, cfg, store};
                    LoopState state = run_specloop(bc.original_rtl, loop_config(cfg, *mode), env);
                    final_spec = state.final_spec;
                    verified = state.status == LoopStatus::Passed;
                } catch (const Error& e) {
                    rr.details = std::string("pipeline error: ") + e.what();
                }
                RrEnv rr_env{gateway, tools, prompts, cfg, fs::path(out_dir) / "rr_work"};
                RRResult computed = compute_rr(bc, final_spec, rr_env, run);
                computed.verified = verified;
                if (!rr.details.empty()) computed.details += "; " + rr.details;
                std::lock_guard<std::mutex> lock(results_mu);
                results.push_back(std::move(computed));
            });
        }
        run_parallel(jobs, workers);
    }

    AggregateStats stats = aggregate(results, runs);
    std::string results_lines;
    for (const auto& r : results) results_lines += rr_to_json(r).dump() + "\n";
    atomic_write_file(fs::path(out_dir) / "results.jsonl", results_lines);

    nlohmann::json summary = stats_to_json(stats);
    summary["dataset"] = fs::path(bench_dir).filename().string();
    summary["method"] = feedback_mode_name(*mode);
    summary["n_cases"] = bench.cases.size();
    atomic_write_file(fs::path(out_dir) / "summary.json", summary.dump(2) + "\n");

    std::cout << format_results_table(
        {{fs::path(bench_dir).filename().string(), feedback_mode_name(*mode), stats}});
    std::cout << "results: " << (fs::path(out_dir) / "results.jsonl").string() << "\n";
    std::cout << "summary: " << (fs::path(out_dir) / "summary.json").string() << "\n";
    return 0;
}

int cmd_replay(const std::string& run_dir_arg, const std::string& out_dir) {
    fs::path run_dir(run_dir_arg);
    RunStore recorded = RunStore::open(run_dir);
    if (!recorded.has("llm_calls.jsonl")) {
        std::cerr << "error: no llm_calls.jsonl in " << run_dir << "\n";
        return 1;
    }
    nlohmann::json state = recorded.read_state();
    ToolConfig cfg = ToolConfig::from_json(state.at("config"));
    auto mode = feedback_mode_from_name(state.value("mode", "full"));
    std::string rtl = recorded.read_text("original.v");

    fs::path base = out_dir.empty() ? run_dir.parent_path().parent_path() : fs::path(out_dir);
    RunStore replay_store = RunStore::create(base, recorded.case_id() + "-replay");
    auto log = std::make_shared<CallLog>(replay_store.dir() / "llm_calls.jsonl");
    auto backend = std::make_shared<ScriptedBackend>(record_transcript(run_dir));
    Gateway gateway(backend, log, 0);
    SubprocessToolchain tools(toolchain_options(cfg));
    PromptLibrary prompts = PromptLibrary::load(cfg.prompts_dir);

    LoopEnv env{gateway, tools, prompts, cfg, replay_store};
    LoopState replay_state = run_specloop(rtl, loop_config(cfg, *mode), env);
    (void)replay_state;

    // Deterministic artifacts must match byte for byte, and the diagnosis
    // sequence must be identical.
    for (const auto& a : state.at("artifacts")) {
        if (!a.value("deterministic", false)) continue;
        std::string name = a.at("name");
        if (!replay_store.has(name)) {
            std::cout << "DivergenceDetected: artifact missing in replay: " << name << "\n";
            return 5;
        }
        if (recorded.read_text(name) != replay_store.read_text(name)) {
            std::cout << "DivergenceDetected: first differing artifact: " << name << "\n";
            return 5;
        }
    }
    nlohmann::json new_state = replay_store.read_state();
    if (state.at("diagnosis_sequence") != new_state.at("diagnosis_sequence")) {
        std::cout << "DivergenceDetected: diagnosis sequence differs\n";
        return 5;
    }
    std::cout << "replay identical: " << replay_store.dir().string() << "\n";
    return 0;
}

int cmd_report(const std::string& run_dir, const std::string& summary_path) {
    if (!run_dir.empty()) {
        RunStore store = RunStore::open(run_dir);
        nlohmann::json state = store.read_state();
        std::cout << "case: " << state.value("case_id", "?") << "\n";
        std::cout << "status: " << state.value("status", "?") << " - "
                  << state.value("detail", "") << "\n";
        std::cout << "mode: " << state.value("mode", "?") << "\n";
        for (const auto& r : state.value("rounds", nlohmann::json::array())) {
            std::cout << "  round " << r.value("round", 0);
            if (r.contains("diagnosis")) std::cout << ": " << r["diagnosis"].get<std::string>();
            if (!r.value("parsed", true)) std::cout << ": (unparseable output)";
            std::cout << "\n";
        }
        std::cout << "wall time: " << state.value("wall_time_ms", 0L) << " ms\n";
        return 0;
    }
    if (!summary_path.empty()) {
        std::ifstream in(summary_path);
        if (!in) {
            std::cerr << "error: cannot read " << summary_path << "\n";
            return 1;
        }
        nlohmann::json summary = nlohmann::json::parse(in);
        AggregateStats stats;
        stats.mean = summary.value("mean", 0.0);
        stats.stddev = summary.value("std", 0.0);
        stats.n_runs = summary.value("n_runs", 0);
        std::cout << format_results_table({{summary.value("dataset", "?"),
                                            summary.value("method", "?"), stats}});
        return 0;
    }
    std::cerr << "error: report needs --run or --summary\n";
    return 64;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"specloop: RTL-to-specification generation with a formal verification "
                 "feedback loop"};
    app.require_subcommand(1);

    std::string rtl_path, mode = "full", out_dir = "runs", config_path, transcript, case_id;
    auto* run = app.add_subcommand("run", "run the refinement loop on one RTL file");
    run->add_option("--rtl", rtl_path, "Verilog source of the original design")->required();
    run->add_option("--mode", mode, "full|passfail|single");
    run->add_option("--out", out_dir, "run directory root");
    run->add_option("--config", config_path, "flat key=value config file");
    run->add_option("--transcript", transcript,
                    "replay transcript (directory of NN_tag.txt or llm_calls.jsonl)");
    run->add_option("--case-id", case_id, "case identifier (default: RTL file stem)");

    std::string bench_dir, format_name = "verilogeval", eval_out = "eval_out";
    int runs = 3;
    auto* eval = app.add_subcommand("eval", "benchmark sweep with reconstruction scoring");
    eval->add_option("--benchmark", bench_dir, "benchmark root directory")->required();
    eval->add_option("--format", format_name, "verilogeval|rtllm")->required();
    eval->add_option("--runs", runs, "repetitions (default 3)");
    eval->add_option("--mode", mode, "full|passfail|single");
    eval->add_option("--out", eval_out, "output directory");
    eval->add_option("--config", config_path, "config file");
    eval->add_option("--transcript", transcript, "scripted transcript");

    std::string replay_dir, replay_out;
    auto* replay = app.add_subcommand("replay", "re-execute a recorded run and compare");
    replay->add_option("--run", replay_dir, "recorded run directory")->required();
    replay->add_option("--out", replay_out, "where to place the replay run");

    std::string report_run, report_summary;
    auto* report = app.add_subcommand("report", "print a stored run or eval summary");
    report->add_option("--run", report_run, "run directory");
    report->add_option("--summary", report_summary, "summary.json path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 64;
    }

    try {
        if (run->parsed())
            return cmd_run(rtl_path, mode, out_dir, config_path, transcript, case_id);
        if (eval->parsed())
            return cmd_eval(bench_dir, format_name, runs, mode, eval_out, config_path,
                            transcript);
        if (replay->parsed()) return cmd_replay(replay_dir, replay_out);
        if (report->parsed()) return cmd_report(report_run, report_summary);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 64;
}
