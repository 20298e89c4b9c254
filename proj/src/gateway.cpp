// SPDX-License-Identifier: Apache-2.0

#include "specloop/gateway.hpp"

#include "specloop/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace specloop {

namespace {

using nlohmann::json;

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

bool tag_matches(const std::string& matcher, const std::string& tag) {
    if (!matcher.empty() && matcher.back() == '*')
        return tag.rfind(matcher.substr(0, matcher.size() - 1), 0) == 0;
    return matcher == tag;
}

// "http://host:port/v1" -> ("http://host:port", "/v1")
std::pair<std::string, std::string> split_base_url(const std::string& url) {
    auto scheme_end = url.find("://");
    size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_start = url.find('/', host_start);
    if (path_start == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path_start), prefix};
}

} // namespace

CompletionResult LiveBackend::complete(const CompletionRequest& req) {
    const char* key = std::getenv(opts_.api_key_env.c_str());
    if (key == nullptr || *key == '\0')
        raise(Errc::AuthMissing, "environment variable " + opts_.api_key_env + " is not set");

    auto [origin, prefix] = split_base_url(opts_.base_url);
    if (origin.rfind("https://", 0) == 0)
        raise(Errc::LlmFailure,
              "this build has no TLS support; point api_base_url at an http endpoint or a local "
              "proxy");

    json body = {
        {"model", req.model_id},
        {"temperature", req.temperature},
        {"max_tokens", req.max_tokens},
    };
    body["messages"] = json::array();
    for (const auto& m : req.messages) body["messages"].push_back({{"role", m.role}, {"content", m.text}});

    const std::string payload = body.dump();
    const std::string path = prefix + "/chat/completions";

    std::string last_error;
    for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
        httplib::Client cli(origin);
        cli.set_connection_timeout(opts_.timeout_s, 0);
        cli.set_read_timeout(opts_.timeout_s, 0);
        cli.set_write_timeout(opts_.timeout_s, 0);
        cli.set_default_headers({{"Authorization", std::string("Bearer ") + key}});

        auto t0 = now_ms();
        auto res = cli.Post(path, payload, "application/json");
        auto latency = now_ms() - t0;

        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
        } else if (res->status >= 500) {
            last_error = "server error: HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            raise(Errc::LlmFailure,
                  "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
        } else {
            json parsed;
            try {
                parsed = json::parse(res->body);
            } catch (const json::exception& e) {
                raise(Errc::LlmFailure, std::string("unparseable response body: ") + e.what());
            }
            if (!parsed.contains("choices") || parsed["choices"].empty())
                raise(Errc::LlmFailure, "response has no choices: " + res->body.substr(0, 500));
            CompletionResult out;
            out.text = parsed["choices"][0].value("message", json::object()).value("content", "");
            if (parsed.contains("usage")) {
                out.usage.prompt_tokens = parsed["usage"].value("prompt_tokens", 0L);
                out.usage.completion_tokens = parsed["usage"].value("completion_tokens", 0L);
            }
            out.latency_ms = latency;
            out.backend = name();
            return out;
        }

        if (attempt < opts_.max_attempts) {
            auto delay = opts_.backoff_ms * (1L << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
    raise(Errc::TransportExhausted,
          "gave up after " + std::to_string(opts_.max_attempts) + " attempts; last: " + last_error);
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& req) {
    std::lock_guard<std::mutex> lock(mu_);
    if (next_ >= transcript_.entries.size())
        raise(Errc::ScriptMismatch,
              "transcript exhausted; unexpected call tag '" + req.request_tag + "'");
    const auto& entry = transcript_.entries[next_];
    if (!tag_matches(entry.request_matcher, req.request_tag))
        raise(Errc::ScriptMismatch,
              "expected '" + entry.request_matcher + "', got '" + req.request_tag + "'");
    ++next_;

    CompletionResult out;
    out.text = entry.canned_response;
    long req_chars = 0;
    for (const auto& m : req.messages) req_chars += static_cast<long>(m.text.size());
    out.usage.prompt_tokens = req_chars / 4;
    out.usage.completion_tokens = static_cast<long>(out.text.size()) / 4;
    out.latency_ms = 0;
    out.backend = name();
    return out;
}

void CallLog::append(const std::string& json_line) {
    std::lock_guard<std::mutex> lock(mu_);
    std::ofstream out(file_, std::ios::app | std::ios::binary);
    if (!out) raise(Errc::IoError, "cannot append to call log " + file_.string());
    out << json_line << "\n";
}

CompletionResult Gateway::complete(const CompletionRequest& req) {
    if (req.messages.empty()) raise(Errc::LlmFailure, "request has no messages");

    if (min_interval_ms_ > 0) {
        std::lock_guard<std::mutex> lock(pace_mu_);
        auto since = now_ms() - last_call_ms_;
        if (since < min_interval_ms_)
            std::this_thread::sleep_for(std::chrono::milliseconds(min_interval_ms_ - since));
        last_call_ms_ = now_ms();
    }

    json record = {
        {"tag", req.request_tag},
        {"backend", backend_->name()},
        {"model", req.model_id},
        {"ts_ms", wall_ms()},
    };
    record["request"] = {{"temperature", req.temperature}, {"max_tokens", req.max_tokens}};
    record["request"]["messages"] = json::array();
    for (const auto& m : req.messages)
        record["request"]["messages"].push_back({{"role", m.role}, {"text", m.text}});

    try {
        CompletionResult result = backend_->complete(req);
        record["response"] = {{"text", result.text},
                              {"prompt_tokens", result.usage.prompt_tokens},
                              {"completion_tokens", result.usage.completion_tokens}};
        record["latency_ms"] = result.latency_ms;
        if (log_) log_->append(record.dump());
        return result;
    } catch (const Error& e) {
        record["error"] = std::string(errc_name(e.code())) + ": " + e.detail();
        if (log_) log_->append(record.dump());
        throw;
    }
}

Transcript Transcript::from_call_log(const std::filesystem::path& jsonl) {
    std::ifstream in(jsonl, std::ios::binary);
    if (!in) raise(Errc::CorruptLog, "cannot open call log " + jsonl.string());
    Transcript t;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::exception& e) {
            raise(Errc::CorruptLog,
                  jsonl.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!record.contains("response")) continue; // failed call: nothing to replay
        t.entries.push_back({record.value("tag", ""), record["response"].value("text", "")});
    }
    return t;
}

Transcript Transcript::from_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir))
        raise(Errc::CorruptLog, "transcript directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    Transcript t;
    for (const auto& f : files) {
        std::string stem = f.stem().string();
        size_t i = 0;
        while (i < stem.size() && std::isdigit(static_cast<unsigned char>(stem[i]))) ++i;
        if (i < stem.size() && stem[i] == '_') ++i;
        std::ifstream in(f, std::ios::binary);
        std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        t.entries.push_back({stem.substr(i), std::move(body)});
    }
    return t;
}

Transcript Transcript::load(const std::filesystem::path& path) {
    if (std::filesystem::is_directory(path)) return from_dir(path);
    return from_call_log(path);
}

Transcript record_transcript(const std::filesystem::path& run_dir) {
    return Transcript::from_call_log(run_dir / "llm_calls.jsonl");
}

} // namespace specloop
