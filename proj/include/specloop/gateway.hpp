// SPDX-License-Identifier: Apache-2.0
//
// Uniform chat-completion interface with two interchangeable backends: a live
// HTTP client speaking the OpenAI-compatible chat-completions protocol, and a
// deterministic scripted backend that replays recorded transcripts for tests
// and for `specloop replay`. Every call, success or failure, appends exactly
// one JSONL record to the run's call log; the information-hiding audits read
// those records post hoc.
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace specloop {

struct ChatMessage {
    std::string role;
    std::string text;
};

struct CompletionRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.4;
    int max_tokens = 8192;
    std::string request_tag; // stable identifier used for logging and replay
};

struct TokenUsage {
    long prompt_tokens = 0;
    long completion_tokens = 0;
};

struct CompletionResult {
    std::string text;
    TokenUsage usage;
    long latency_ms = 0;
    std::string backend;
};

struct TranscriptEntry {
    std::string request_matcher; // exact tag, or prefix ending in '*'
    std::string canned_response;
};

struct Transcript {
    std::vector<TranscriptEntry> entries;

    // JSONL call log of a prior run; failed calls (no response) are skipped.
    // Throws Errc::CorruptLog on a truncated or malformed line.
    static Transcript from_call_log(const std::filesystem::path& jsonl);
    // Directory of NN_<tag>.txt response files, replayed in filename order.
    static Transcript from_dir(const std::filesystem::path& dir);
    // Dispatches on the path kind.
    static Transcript load(const std::filesystem::path& path);
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual CompletionResult complete(const CompletionRequest& req) = 0;
    virtual std::string name() const = 0;
};

struct LiveBackendOptions {
    std::string base_url = "https://openrouter.ai/api/v1";
    std::string api_key_env = "SPECLOOP_API_KEY";
    int timeout_s = 300;
    int max_attempts = 3;   // transient transport errors retried with backoff
    int backoff_ms = 200;
};

class LiveBackend : public LlmBackend {
public:
    explicit LiveBackend(LiveBackendOptions opts) : opts_(std::move(opts)) {}
    CompletionResult complete(const CompletionRequest& req) override;
    std::string name() const override { return "live"; }

private:
    LiveBackendOptions opts_;
};

// Replays a transcript strictly in order; a call whose tag does not match the
// next entry raises Errc::ScriptMismatch (a test failure by contract).
class ScriptedBackend : public LlmBackend {
public:
    explicit ScriptedBackend(Transcript transcript) : transcript_(std::move(transcript)) {}
    CompletionResult complete(const CompletionRequest& req) override;
    std::string name() const override { return "scripted"; }

    size_t consumed() const { return next_; }
    size_t remaining() const { return transcript_.entries.size() - next_; }

private:
    Transcript transcript_;
    size_t next_ = 0;
    std::mutex mu_;
};

class CallLog {
public:
    explicit CallLog(std::filesystem::path file) : file_(std::move(file)) {}
    void append(const std::string& json_line);
    const std::filesystem::path& path() const { return file_; }

private:
    std::filesystem::path file_;
    std::mutex mu_;
};

// Front door used by the pipeline: applies the rate limiter, delegates to the
// configured backend and writes the call log.
class Gateway {
public:
    Gateway(std::shared_ptr<LlmBackend> backend, std::shared_ptr<CallLog> log,
            int min_interval_ms = 0)
        : backend_(std::move(backend)), log_(std::move(log)), min_interval_ms_(min_interval_ms) {}

    CompletionResult complete(const CompletionRequest& req);

    LlmBackend& backend() { return *backend_; }
    std::shared_ptr<CallLog> log() { return log_; }

private:
    std::shared_ptr<LlmBackend> backend_;
    std::shared_ptr<CallLog> log_;
    int min_interval_ms_ = 0;
    std::mutex pace_mu_;
    int64_t last_call_ms_ = 0;
};

// Rebuilds the scripted transcript for a recorded run directory.
Transcript record_transcript(const std::filesystem::path& run_dir);

} // namespace specloop
