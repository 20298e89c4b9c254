// SPDX-License-Identifier: Apache-2.0

#include "specloop/hdl_tools.hpp"

#include "specloop/errors.hpp"
#include "specloop/subprocess.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace specloop {

namespace {

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::IoError, "cannot write " + p.string());
    out << content;
}

bool contains_any(const std::string& haystack, const std::vector<std::string>& needles) {
    return std::any_of(needles.begin(), needles.end(), [&haystack](const std::string& n) {
        return haystack.find(n) != std::string::npos;
    });
}

std::string tail_of(const std::string& s, size_t n) {
    return s.size() <= n ? s : s.substr(s.size() - n);
}

} // namespace

CompileResult SubprocessToolchain::compile_check(const std::string& rtl,
                                                 const std::filesystem::path& work_dir_in) {
    auto argv = split_command(opts_.compiler_cmd);
    if (argv.empty() || !executable_exists(argv[0]))
        raise(Errc::ToolNotFound, "compiler not found: " + opts_.compiler_cmd);

    // Absolute paths: the tool runs with the work dir as its own cwd.
    auto work_dir = std::filesystem::absolute(work_dir_in);
    std::filesystem::create_directories(work_dir);
    auto rtl_path = work_dir / "design.v";
    write_file(rtl_path, rtl);
    argv.push_back(rtl_path.string());

    ExecOptions eo;
    eo.cwd = work_dir;
    eo.timeout_ms = static_cast<long>(opts_.compile_timeout_s) * 1000;
    ExecResult res = run_process(argv, eo);

    if (res.timed_out)
        raise(Errc::Timeout, "compiler exceeded " + std::to_string(opts_.compile_timeout_s) + "s");
    if (res.launch_failed) raise(Errc::ToolNotFound, "compiler failed to launch: " + argv[0]);

    CompileResult out;
    out.ok = res.exit_code == 0;
    out.stderr_text = !res.err.empty() ? res.err : (out.ok ? std::string() : res.out);
    out.tool = argv[0];
    out.duration_ms = res.duration_ms;
    return out;
}

FecOutcome SubprocessToolchain::run_equivalence(const std::string& config,
                                                const std::filesystem::path& work_dir_in,
                                                int timeout_s) {
    auto argv = split_command(opts_.fec_cmd);
    if (argv.empty() || !executable_exists(argv[0]))
        raise(Errc::ToolNotFound, "equivalence checker not found: " + opts_.fec_cmd);

    auto work_dir = std::filesystem::absolute(work_dir_in);
    std::filesystem::create_directories(work_dir);
    auto cfg_path = work_dir / "check.eqy";
    write_file(cfg_path, config);
    argv.push_back(cfg_path.string());

    ExecOptions eo;
    eo.cwd = work_dir;
    eo.timeout_ms = static_cast<long>(timeout_s) * 1000;
    ExecResult res = run_process(argv, eo);

    FecOutcome out;
    out.raw_log = res.out + res.err;
    out.duration_ms = res.duration_ms;
    for (const auto& e : std::filesystem::recursive_directory_iterator(work_dir))
        if (e.is_regular_file() && e.path().extension() == ".vcd")
            out.trace_paths.push_back(e.path());
    std::sort(out.trace_paths.begin(), out.trace_paths.end());

    if (res.timed_out) {
        out.verdict = FecVerdict::Inconclusive;
        out.raw_log += "\n[checker timeout after " + std::to_string(timeout_s) + "s]\n";
    } else if (res.launch_failed) {
        out.verdict = FecVerdict::ToolError;
    } else if (contains_any(out.raw_log, opts_.fec_failure_markers)) {
        out.verdict = FecVerdict::NotEquivalent;
    } else if (res.exit_code == 0 && contains_any(out.raw_log, opts_.fec_success_markers)) {
        out.verdict = FecVerdict::Equivalent;
    } else if (contains_any(out.raw_log, opts_.fec_inconclusive_markers) || res.exit_code == 0) {
        out.verdict = FecVerdict::Inconclusive;
    } else {
        out.verdict = FecVerdict::ToolError;
    }
    return out;
}

std::string generate_eqy_config(const std::filesystem::path& gold_path,
                                const std::filesystem::path& gate_path, const std::string& top,
                                int depth) {
    if (!std::filesystem::exists(gold_path))
        raise(Errc::MissingFile, "gold design not found: " + gold_path.string());
    if (!std::filesystem::exists(gate_path))
        raise(Errc::MissingFile, "gate design not found: " + gate_path.string());
    auto gold_abs = std::filesystem::absolute(gold_path);
    auto gate_abs = std::filesystem::absolute(gate_path);

    std::ostringstream cfg;
    cfg << "[options]\n\n";
    cfg << "[gold]\n";
    cfg << "read_verilog " << gold_abs.string() << "\n";
    cfg << "prep -top " << top << "\n\n";
    cfg << "[gate]\n";
    cfg << "read_verilog " << gate_abs.string() << "\n";
    cfg << "prep -top " << top << "\n\n";
    cfg << "[strategy sat]\n";
    cfg << "use sat\n";
    cfg << "depth " << depth << "\n";
    return cfg.str();
}

std::vector<Counterexample> extract_counterexamples(const FecOutcome& outcome, int max_records) {
    if (outcome.trace_paths.empty())
        raise(Errc::NoTraceAvailable, "checker produced no waveform dump");

    // Earliest divergence per signal across all produced traces.
    std::map<std::string, Counterexample> per_signal;
    bool any_readable = false;
    for (const auto& p : outcome.trace_paths) {
        VcdTrace trace;
        try {
            trace = VcdTrace::parse_file(p);
        } catch (const Error&) {
            continue;
        }
        any_readable = true;
        for (const auto& d : diff_gold_gate(trace, 0)) {
            Counterexample cex{d.time, d.signal, d.gold_value, d.gate_value};
            auto it = per_signal.find(d.signal);
            if (it == per_signal.end() || cex.time < it->second.time)
                per_signal[d.signal] = std::move(cex);
        }
    }
    if (!any_readable) raise(Errc::NoTraceAvailable, "no readable waveform dump");

    std::vector<Counterexample> out;
    out.reserve(per_signal.size());
    for (auto& [_, cex] : per_signal) out.push_back(std::move(cex));
    std::sort(out.begin(), out.end(), [](const Counterexample& a, const Counterexample& b) {
        return a.time != b.time ? a.time < b.time : a.signal < b.signal;
    });
    if (max_records > 0 && static_cast<int>(out.size()) > max_records)
        out.resize(static_cast<size_t>(max_records));
    return out;
}

std::string format_counterexamples(const std::vector<Counterexample>& cexes) {
    std::string out;
    for (const auto& c : cexes) {
        if (!out.empty()) out += "\n";
        out += "Mismatched Signal:\n";
        out += "t=" + std::to_string(c.time) + " sig=" + c.signal + "\n";
        out += "rtl_reconstruct: " + c.gate_value + "\n";
        out += "rtl_original: " + c.gold_value + "\n";
    }
    return out;
}

Diagnosis classify(const CompileResult& original_compile,
                   const std::optional<CompileResult>& recon_compile,
                   const std::optional<FecOutcome>& fec, int max_counterexamples) {
    Diagnosis d;
    if (!original_compile.ok) {
        d.kind = DiagnosisKind::E1_InvalidOriginal;
        d.evidence = original_compile.stderr_text;
        return d;
    }
    if (!recon_compile || !recon_compile->ok) {
        d.kind = DiagnosisKind::E2_NonCompilableRecon;
        d.evidence = recon_compile ? recon_compile->stderr_text
                                   : std::string("no reconstruction was produced");
        return d;
    }
    if (!fec) {
        d.kind = DiagnosisKind::E4_Inconclusive;
        d.evidence = "no equivalence-check outcome available";
        return d;
    }
    switch (fec->verdict) {
    case FecVerdict::Equivalent:
        d.kind = DiagnosisKind::Pass;
        d.evidence = "";
        return d;
    case FecVerdict::NotEquivalent: {
        try {
            d.counterexamples = extract_counterexamples(*fec, max_counterexamples);
        } catch (const Error& e) {
            if (e.code() != Errc::NoTraceAvailable) throw;
            d.kind = DiagnosisKind::E3_FunctionalMismatch;
            d.evidence = tail_of(fec->raw_log, 16384);
            return d;
        }
        if (d.counterexamples.empty()) {
            // Verdict says inequivalent, trace shows no divergence: the
            // parser and the checker disagree, which is a tool-level issue.
            d.kind = DiagnosisKind::E4_Inconclusive;
            d.evidence = "checker reported inequivalence but the trace shows no divergence";
            return d;
        }
        d.kind = DiagnosisKind::E3_FunctionalMismatch;
        d.evidence = format_counterexamples(d.counterexamples);
        return d;
    }
    case FecVerdict::Inconclusive:
        d.kind = DiagnosisKind::E4_Inconclusive;
        d.evidence = "equivalence check inconclusive (timeout or bound reached)\n" +
                     tail_of(fec->raw_log, 2048);
        return d;
    case FecVerdict::ToolError:
        d.kind = DiagnosisKind::E4_Inconclusive;
        d.evidence = "equivalence checker tool error\n" + tail_of(fec->raw_log, 2048);
        return d;
    }
    return d;
}

} // namespace specloop
