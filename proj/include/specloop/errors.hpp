// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace specloop {

// Typed failure codes shared across the pipeline. Every throwing path in the
// library raises specloop::Error with one of these, so callers can branch on
// code() instead of parsing messages.
enum class Errc {
    MissingMarkers,
    MissingSection,
    MalformedPortLine,
    EmptyInput,
    ReportIsPass,
    EmptyDiagnostics,
    AuthMissing,
    TransportExhausted,
    ScriptMismatch,
    CorruptLog,
    ToolNotFound,
    Timeout,
    MissingFile,
    NoTraceAvailable,
    MarkerMissing,
    EmptyBenchmark,
    LayoutUnrecognized,
    SimulatorNotFound,
    UnevenRuns,
    DivergenceDetected,
    LlmFailure,
    ConfigError,
    IoError,
};

constexpr const char* errc_name(Errc c) {
    switch (c) {
    case Errc::MissingMarkers: return "MissingMarkers";
    case Errc::MissingSection: return "MissingSection";
    case Errc::MalformedPortLine: return "MalformedPortLine";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ReportIsPass: return "ReportIsPass";
    case Errc::EmptyDiagnostics: return "EmptyDiagnostics";
    case Errc::AuthMissing: return "AuthMissing";
    case Errc::TransportExhausted: return "TransportExhausted";
    case Errc::ScriptMismatch: return "ScriptMismatch";
    case Errc::CorruptLog: return "CorruptLog";
    case Errc::ToolNotFound: return "ToolNotFound";
    case Errc::Timeout: return "Timeout";
    case Errc::MissingFile: return "MissingFile";
    case Errc::NoTraceAvailable: return "NoTraceAvailable";
    case Errc::MarkerMissing: return "MarkerMissing";
    case Errc::EmptyBenchmark: return "EmptyBenchmark";
    case Errc::LayoutUnrecognized: return "LayoutUnrecognized";
    case Errc::SimulatorNotFound: return "SimulatorNotFound";
    case Errc::UnevenRuns: return "UnevenRuns";
    case Errc::DivergenceDetected: return "DivergenceDetected";
    case Errc::LlmFailure: return "LlmFailure";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string detail)
        : std::runtime_error(std::string(errc_name(code)) + ": " + detail),
          code_(code),
          detail_(std::move(detail)) {}

    Errc code() const { return code_; }
    const std::string& detail() const { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

[[noreturn]] inline void raise(Errc code, std::string detail = {}) {
    throw Error(code, std::move(detail));
}

} // namespace specloop
