// SPDX-License-Identifier: Apache-2.0
//
// Benchmark evaluation: ingests spec-to-RTL benchmark trees repurposed for
// RTL-to-spec, computes the reconstruction score per case (reconstruct RTL
// from the generated spec with an independent evaluator model, compile it,
// run the case testbench), and aggregates mean ± std over repeated runs with
// the verified-vs-unverified split.
#pragma once

#include "specloop/loop_engine.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace specloop {

enum class BenchmarkFormat { VerilogEvalLike, RtllmLike };

std::optional<BenchmarkFormat> benchmark_format_from_name(const std::string& name);

struct BenchmarkCase {
    std::string case_id;
    std::string original_rtl;
    std::string testbench;
    std::vector<std::pair<std::string, std::string>> aux_files;
};

struct IngestReport {
    std::vector<BenchmarkCase> cases;
    std::vector<std::string> warnings; // e.g. problems skipped for a missing testbench
};

// Layout contracts:
//  - VerilogEvalLike: flat directory of `<id>.v` design files, each paired
//    with `<id>_tb.v` (`.sv` and `_test` accepted).
//  - RtllmLike: one subdirectory per case containing `testbench.v` plus the
//    design source (`<dir>.v`, `verified_<dir>.v`, or the only other .v);
//    further .v files ride along as aux files.
// Throws Errc::EmptyBenchmark / Errc::LayoutUnrecognized.
IngestReport ingest_benchmark(const std::filesystem::path& root, BenchmarkFormat format);

struct RRResult {
    std::string case_id;
    int run_index = 1;
    int rr = 0; // 1 iff the reconstruction compiles and passes the testbench
    bool verified = false;
    std::string details;
};

struct SplitCounts {
    long rr1 = 0;
    long rr0 = 0;
};

struct AggregateStats {
    double mean = 0.0;
    double stddev = 0.0; // population std over per-run means
    int n_runs = 0;
    SplitCounts verified;
    SplitCounts unverified;
    std::vector<double> per_run_means;
};

// Per-run mean over cases, then mean and population std across runs; split
// tallied over (case × run) pairs. Throws Errc::UnevenRuns when the runs do
// not cover identical case sets.
AggregateStats aggregate(const std::vector<RRResult>& results, int runs);

struct RrEnv {
    Gateway& gateway;
    Toolchain& tools;
    const PromptLibrary& prompts;
    const ToolConfig& cfg;
    std::filesystem::path work_dir;
};

// One reconstruction-score measurement. A missing/unusable spec, LLM failure,
// compile failure, simulator failure, or a failure marker on testbench stdout
// all yield rr = 0 with details; only a clean testbench run yields rr = 1.
// Throws Errc::SimulatorNotFound when the simulator is not executable.
RRResult compute_rr(const BenchmarkCase& bench, const std::optional<StructuredSpec>& spec,
                    RrEnv& env, int run_index);

nlohmann::json stats_to_json(const AggregateStats& stats);
nlohmann::json rr_to_json(const RRResult& r);

// Table with the method × dataset structure: one row per (dataset, method)
// with "mean ± std".
std::string format_results_table(
    const std::vector<std::tuple<std::string, std::string, AggregateStats>>& rows);

} // namespace specloop
