// SPDX-License-Identifier: Apache-2.0

#include "specloop/store.hpp"

#include "specloop/errors.hpp"
#include "specloop/subprocess.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

namespace specloop {

void atomic_write_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    auto tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) raise(Errc::IoError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) raise(Errc::IoError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, p);
}

RunStore RunStore::create(const std::filesystem::path& base_dir, const std::string& case_id) {
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::system_clock::to_time_t(now);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch())
                  .count() %
              1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);

    // Absolute from the start: artifact paths must survive subprocesses that
    // run with their own working directory.
    auto base_abs = std::filesystem::absolute(base_dir);
    std::filesystem::path dir;
    for (int n = 0;; ++n) {
        std::ostringstream name;
        name << stamp << "-" << ms;
        if (n > 0) name << "-" << n;
        dir = base_abs / case_id / name.str();
        if (!std::filesystem::exists(dir)) break;
    }
    std::filesystem::create_directories(dir);

    RunStore store;
    store.dir_ = dir;
    store.case_id_ = case_id;
    return store;
}

RunStore RunStore::open(const std::filesystem::path& run_dir) {
    if (!std::filesystem::is_directory(run_dir))
        raise(Errc::IoError, "run directory not found: " + run_dir.string());
    RunStore store;
    store.dir_ = std::filesystem::absolute(run_dir);
    store.case_id_ = run_dir.parent_path().filename().string();
    return store;
}

std::filesystem::path RunStore::write_text(const std::string& name, const std::string& content,
                                           bool deterministic) {
    auto p = dir_ / name;
    atomic_write_file(p, content);
    for (auto& e : index_)
        if (e.name == name) {
            e.deterministic = deterministic;
            return p;
        }
    index_.push_back({name, deterministic});
    return p;
}

std::string RunStore::read_text(const std::string& name) const {
    std::ifstream in(dir_ / name, std::ios::binary);
    if (!in) raise(Errc::IoError, "cannot read artifact " + (dir_ / name).string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool RunStore::has(const std::string& name) const {
    return std::filesystem::exists(dir_ / name);
}

void RunStore::write_state(const nlohmann::json& state) {
    atomic_write_file(dir_ / "state.json", state.dump(2) + "\n");
}

nlohmann::json RunStore::read_state() const {
    std::ifstream in(dir_ / "state.json");
    if (!in) raise(Errc::IoError, "state.json missing in " + dir_.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::IoError, std::string("state.json unparseable: ") + e.what());
    }
}

std::string tool_version(const std::string& cmd) {
    auto argv = split_command(cmd);
    if (argv.empty() || !executable_exists(argv[0])) return "unknown";
    ExecOptions eo;
    eo.timeout_ms = 5000;
    ExecResult res = run_process({argv[0], "--version"}, eo);
    std::string text = !res.out.empty() ? res.out : res.err;
    auto nl = text.find('\n');
    if (nl != std::string::npos) text = text.substr(0, nl);
    return text.empty() ? "unknown" : text;
}

} // namespace specloop
