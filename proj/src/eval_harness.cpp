// SPDX-License-Identifier: Apache-2.0

#include "specloop/eval_harness.hpp"

#include "specloop/errors.hpp"
#include "specloop/subprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace specloop {

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool has_verilog_ext(const std::filesystem::path& p) {
    return p.extension() == ".v" || p.extension() == ".sv";
}

// "adder_tb" / "adder_test" -> "adder"; empty when not a testbench name.
std::string tb_base_name(const std::string& stem) {
    for (const char* suffix : {"_tb", "_test"}) {
        if (stem.size() > std::strlen(suffix) &&
            stem.compare(stem.size() - std::strlen(suffix), std::string::npos, suffix) == 0)
            return stem.substr(0, stem.size() - std::strlen(suffix));
    }
    return "";
}

IngestReport ingest_verilogeval(const std::filesystem::path& root) {
    std::map<std::string, std::filesystem::path> designs;
    std::map<std::string, std::filesystem::path> testbenches;
    bool any_file = false;

    for (const auto& e : std::filesystem::directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        any_file = true;
        if (!has_verilog_ext(e.path())) continue;
        std::string stem = e.path().stem().string();
        std::string base = tb_base_name(stem);
        if (!base.empty())
            testbenches[base] = e.path();
        else
            designs[stem] = e.path();
    }
    if (!any_file) raise(Errc::EmptyBenchmark, root.string() + " is empty");
    if (designs.empty() && testbenches.empty())
        raise(Errc::LayoutUnrecognized, "no Verilog sources under " + root.string());

    IngestReport report;
    for (const auto& [id, design_path] : designs) {
        auto tb = testbenches.find(id);
        if (tb == testbenches.end()) {
            report.warnings.push_back("case '" + id + "' skipped: no testbench found");
            continue;
        }
        report.cases.push_back({id, read_file(design_path), read_file(tb->second), {}});
    }
    return report;
}

IngestReport ingest_rtllm(const std::filesystem::path& root) {
    IngestReport report;
    bool any_entry = false;
    std::vector<std::filesystem::path> dirs;
    for (const auto& e : std::filesystem::directory_iterator(root)) {
        any_entry = true;
        if (e.is_directory()) dirs.push_back(e.path());
    }
    if (!any_entry) raise(Errc::EmptyBenchmark, root.string() + " is empty");
    if (dirs.empty()) raise(Errc::LayoutUnrecognized, "no case directories under " + root.string());
    std::sort(dirs.begin(), dirs.end());

    for (const auto& dir : dirs) {
        std::string id = dir.filename().string();
        std::filesystem::path tb_path, design_path;
        std::vector<std::filesystem::path> others;

        for (const auto& f : std::filesystem::directory_iterator(dir)) {
            if (!f.is_regular_file() || !has_verilog_ext(f.path())) continue;
            std::string stem = f.path().stem().string();
            if (stem == "testbench" || stem == "tb" || !tb_base_name(stem).empty())
                tb_path = f.path();
            else if (stem == id || stem == "verified_" + id)
                design_path = f.path();
            else
                others.push_back(f.path());
        }
        if (design_path.empty() && others.size() == 1) {
            design_path = others.front();
            others.clear();
        }
        if (tb_path.empty()) {
            report.warnings.push_back("case '" + id + "' skipped: no testbench found");
            continue;
        }
        if (design_path.empty()) {
            report.warnings.push_back("case '" + id + "' skipped: no design source found");
            continue;
        }
        BenchmarkCase c{id, read_file(design_path), read_file(tb_path), {}};
        std::sort(others.begin(), others.end());
        for (const auto& o : others) c.aux_files.emplace_back(o.filename().string(), read_file(o));
        report.cases.push_back(std::move(c));
    }
    return report;
}

} // namespace

std::optional<BenchmarkFormat> benchmark_format_from_name(const std::string& name) {
    if (name == "verilogeval") return BenchmarkFormat::VerilogEvalLike;
    if (name == "rtllm") return BenchmarkFormat::RtllmLike;
    return std::nullopt;
}

IngestReport ingest_benchmark(const std::filesystem::path& root, BenchmarkFormat format) {
    if (!std::filesystem::is_directory(root))
        raise(Errc::EmptyBenchmark, "benchmark root not found: " + root.string());
    IngestReport report = format == BenchmarkFormat::VerilogEvalLike ? ingest_verilogeval(root)
                                                                     : ingest_rtllm(root);
    std::sort(report.cases.begin(), report.cases.end(),
              [](const BenchmarkCase& a, const BenchmarkCase& b) { return a.case_id < b.case_id; });
    return report;
}

RRResult compute_rr(const BenchmarkCase& bench, const std::optional<StructuredSpec>& spec,
                    RrEnv& env, int run_index) {
    RRResult result;
    result.case_id = bench.case_id;
    result.run_index = run_index;

    if (!spec || !invariant_violations(*spec).empty()) {
        result.details = "reconstruction failed (no usable specification)";
        return result;
    }

    auto sim_argv = split_command(env.cfg.simulator_cmd);
    if (sim_argv.empty() || !executable_exists(sim_argv[0]))
        raise(Errc::SimulatorNotFound, "simulator not found: " + env.cfg.simulator_cmd);

    std::string rtl;
    try {
        PromptBundle pb = env.prompts.reconstruction(*spec, "eval_spec_" + bench.case_id);
        CompletionRequest req;
        req.model_id = env.cfg.eval_model;
        req.messages = {{"user", pb.user_text}};
        req.temperature = env.cfg.temperature;
        req.max_tokens = env.cfg.max_tokens;
        req.request_tag = "rr_" + bench.case_id + "_run" + std::to_string(run_index);
        CompletionResult completion = env.gateway.complete(req);
        rtl = extract_last_block(completion.text, kRtlStart, kRtlEnd);
    } catch (const Error& e) {
        result.details = std::string("reconstruction failed (") + errc_name(e.code()) + ": " +
                         e.detail() + ")";
        return result;
    }

    auto case_dir = std::filesystem::absolute(env.work_dir) / bench.case_id /
                    ("run" + std::to_string(run_index));
    std::filesystem::create_directories(case_dir);

    CompileResult cr;
    try {
        cr = env.tools.compile_check(rtl, case_dir / "compile");
    } catch (const Error& e) {
        result.details = std::string("compile step failed (") + e.what() + ")";
        return result;
    }
    if (!cr.ok) {
        result.details = "reconstruction does not compile: " + cr.stderr_text.substr(0, 500);
        return result;
    }

    auto dut_path = case_dir / "dut.v";
    auto tb_path = case_dir / "tb.v";
    atomic_write_file(dut_path, rtl);
    atomic_write_file(tb_path, bench.testbench);
    std::vector<std::string> argv = sim_argv;
    argv.push_back(tb_path.string());
    argv.push_back(dut_path.string());
    for (const auto& [name, text] : bench.aux_files) {
        auto aux_path = case_dir / name;
        atomic_write_file(aux_path, text);
        argv.push_back(aux_path.string());
    }

    ExecOptions eo;
    eo.cwd = case_dir;
    eo.timeout_ms = static_cast<long>(env.cfg.sim_timeout_s) * 1000;
    ExecResult sim = run_process(argv, eo);

    if (sim.timed_out) {
        result.details = "testbench timed out";
        return result;
    }
    if (sim.exit_code != 0) {
        result.details = "simulator exit " + std::to_string(sim.exit_code) + ": " +
                         sim.err.substr(0, 500);
        return result;
    }
    for (const auto& marker : env.cfg.sim_failure_markers) {
        if (sim.out.find(marker) != std::string::npos) {
            result.details = "testbench reported '" + marker + "'";
            return result;
        }
    }
    result.rr = 1;
    result.details = "testbench passed";
    return result;
}

AggregateStats aggregate(const std::vector<RRResult>& results, int runs) {
    std::map<int, std::vector<const RRResult*>> by_run;
    for (const auto& r : results) by_run[r.run_index].push_back(&r);

    if (static_cast<int>(by_run.size()) != runs)
        raise(Errc::UnevenRuns, "expected " + std::to_string(runs) + " runs, found " +
                                    std::to_string(by_run.size()));

    std::set<std::string> reference_cases;
    AggregateStats stats;
    stats.n_runs = runs;

    for (auto& [run_index, entries] : by_run) {
        std::set<std::string> case_ids;
        long total = 0;
        for (const auto* r : entries) {
            case_ids.insert(r->case_id);
            total += r->rr;
            if (r->verified)
                (r->rr == 1 ? stats.verified.rr1 : stats.verified.rr0)++;
            else
                (r->rr == 1 ? stats.unverified.rr1 : stats.unverified.rr0)++;
        }
        if (case_ids.size() != entries.size())
            raise(Errc::UnevenRuns,
                  "duplicate case ids in run " + std::to_string(run_index));
        if (reference_cases.empty())
            reference_cases = case_ids;
        else if (case_ids != reference_cases)
            raise(Errc::UnevenRuns, "run " + std::to_string(run_index) +
                                        " covers a different case set");
        stats.per_run_means.push_back(static_cast<double>(total) /
                                      static_cast<double>(entries.size()));
    }

    double sum = 0.0;
    for (double m : stats.per_run_means) sum += m;
    stats.mean = sum / static_cast<double>(stats.per_run_means.size());

    double var = 0.0;
    for (double m : stats.per_run_means) var += (m - stats.mean) * (m - stats.mean);
    var /= static_cast<double>(stats.per_run_means.size());
    stats.stddev = std::sqrt(var);
    return stats;
}

nlohmann::json stats_to_json(const AggregateStats& stats) {
    auto ratio = [](const SplitCounts& c) {
        long total = c.rr1 + c.rr0;
        return total == 0 ? 0.0 : static_cast<double>(c.rr1) / static_cast<double>(total);
    };
    return {
        {"mean", stats.mean},
        {"std", stats.stddev},
        {"std_kind", "population"},
        {"n_runs", stats.n_runs},
        {"per_run_means", stats.per_run_means},
        {"split_basis", "case_x_run"},
        {"split",
         {{"verified",
           {{"rr1", stats.verified.rr1},
            {"rr0", stats.verified.rr0},
            {"rr1_ratio", ratio(stats.verified)}}},
          {"unverified",
           {{"rr1", stats.unverified.rr1},
            {"rr0", stats.unverified.rr0},
            {"rr1_ratio", ratio(stats.unverified)}}}}},
    };
}

nlohmann::json rr_to_json(const RRResult& r) {
    return {{"case_id", r.case_id},
            {"run_index", r.run_index},
            {"rr", r.rr},
            {"verified", r.verified},
            {"details", r.details}};
}

std::string format_results_table(
    const std::vector<std::tuple<std::string, std::string, AggregateStats>>& rows) {
    std::ostringstream out;
    out << "| Dataset | Method | RR score (mean +/- population std) |\n";
    out << "|---------|--------|------------------------------------|\n";
    char buf[64];
    for (const auto& [dataset, method, stats] : rows) {
        std::snprintf(buf, sizeof(buf), "%.3f +/- %.3f", stats.mean, stats.stddev);
        out << "| " << dataset << " | " << method << " | " << buf << " |\n";
    }
    return out.str();
}

} // namespace specloop
