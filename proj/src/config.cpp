// SPDX-License-Identifier: Apache-2.0

#include "specloop/config.hpp"

#include "specloop/errors.hpp"

#include <fstream>
#include <sstream>

namespace specloop {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string join_list(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
        if (!out.empty()) out += ",";
        out += s;
    }
    return out;
}

} // namespace

void ToolConfig::set(const std::string& key, const std::string& value) {
    auto as_int = [&]() {
        try {
            return std::stoi(value);
        } catch (...) {
            raise(Errc::ConfigError, "non-integer value for " + key + ": " + value);
        }
    };
    auto as_double = [&]() {
        try {
            return std::stod(value);
        } catch (...) {
            raise(Errc::ConfigError, "non-numeric value for " + key + ": " + value);
        }
    };

    if (key == "compiler_cmd") compiler_cmd = value;
    else if (key == "fec_cmd") fec_cmd = value;
    else if (key == "simulator_cmd") simulator_cmd = value;
    else if (key == "compile_timeout_s") compile_timeout_s = as_int();
    else if (key == "fec_timeout_s") fec_timeout_s = as_int();
    else if (key == "sim_timeout_s") sim_timeout_s = as_int();
    else if (key == "fec_depth") fec_depth = as_int();
    else if (key == "api_base_url") api_base_url = value;
    else if (key == "api_key_env") api_key_env = value;
    else if (key == "generator_model") generator_model = value;
    else if (key == "reconstructor_model") reconstructor_model = value;
    else if (key == "eval_model") eval_model = value;
    else if (key == "temperature") temperature = as_double();
    else if (key == "max_tokens") max_tokens = as_int();
    else if (key == "llm_timeout_s") llm_timeout_s = as_int();
    else if (key == "llm_max_attempts") llm_max_attempts = as_int();
    else if (key == "llm_backoff_ms") llm_backoff_ms = as_int();
    else if (key == "llm_min_interval_ms") llm_min_interval_ms = as_int();
    else if (key == "max_spec_retries") max_spec_retries = as_int();
    else if (key == "max_recon_retries") max_recon_retries = as_int();
    else if (key == "max_counterexamples") max_counterexamples = as_int();
    else if (key == "report_log_budget") report_log_budget = as_int();
    else if (key == "eval_runs") eval_runs = as_int();
    else if (key == "eval_attempts") eval_attempts = as_int();
    else if (key == "workers") workers = as_int();
    else if (key == "sim_failure_markers") sim_failure_markers = split_list(value);
    else if (key == "prompts_dir") prompts_dir = value;
    else raise(Errc::ConfigError, "unknown config key: " + key);

    if (fec_depth < 1) raise(Errc::ConfigError, "fec_depth must be >= 1");
    if (temperature < 0.0 || temperature > 2.0)
        raise(Errc::ConfigError, "temperature must be in [0, 2]");
}

ToolConfig ToolConfig::load_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) raise(Errc::ConfigError, "cannot open config file " + file.string());
    ToolConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            raise(Errc::ConfigError,
                  file.string() + ":" + std::to_string(line_no) + ": expected key = value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

nlohmann::json ToolConfig::to_json() const {
    return {
        {"compiler_cmd", compiler_cmd},
        {"fec_cmd", fec_cmd},
        {"simulator_cmd", simulator_cmd},
        {"compile_timeout_s", compile_timeout_s},
        {"fec_timeout_s", fec_timeout_s},
        {"sim_timeout_s", sim_timeout_s},
        {"fec_depth", fec_depth},
        {"api_base_url", api_base_url},
        {"api_key_env", api_key_env},
        {"generator_model", generator_model},
        {"reconstructor_model", reconstructor_model},
        {"eval_model", eval_model},
        {"temperature", temperature},
        {"max_tokens", max_tokens},
        {"llm_timeout_s", llm_timeout_s},
        {"llm_max_attempts", llm_max_attempts},
        {"llm_backoff_ms", llm_backoff_ms},
        {"llm_min_interval_ms", llm_min_interval_ms},
        {"max_spec_retries", max_spec_retries},
        {"max_recon_retries", max_recon_retries},
        {"max_counterexamples", max_counterexamples},
        {"report_log_budget", report_log_budget},
        {"eval_runs", eval_runs},
        {"eval_attempts", eval_attempts},
        {"workers", workers},
        {"sim_failure_markers", join_list(sim_failure_markers)},
        {"prompts_dir", prompts_dir},
    };
}

ToolConfig ToolConfig::from_json(const nlohmann::json& j) {
    ToolConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.value().is_string())
            cfg.set(it.key(), it.value().get<std::string>());
        else if (it.value().is_number_float())
            cfg.set(it.key(), std::to_string(it.value().get<double>()));
        else
            cfg.set(it.key(), std::to_string(it.value().get<long>()));
    }
    return cfg;
}

std::string ToolConfig::describe() const {
    std::ostringstream out;
    auto j = to_json();
    for (auto it = j.begin(); it != j.end(); ++it) {
        out << "  " << it.key() << " = ";
        if (it.value().is_string())
            out << it.value().get<std::string>();
        else
            out << it.value().dump();
        out << "\n";
    }
    return out.str();
}

} // namespace specloop
