// SPDX-License-Identifier: Apache-2.0
//
// Structured hardware specification document: the field-typed form a generated
// spec is parsed into, the marker-delimited extraction from raw model output,
// the canonical rendering used for prompts and on-disk artifacts, and the
// format lint checks.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace specloop {

inline constexpr std::string_view kSpecStart = "[SPEC_START]";
inline constexpr std::string_view kSpecEnd = "[SPEC_END]";
inline constexpr std::string_view kRtlStart = "[RTL_START]";
inline constexpr std::string_view kRtlEnd = "[RTL_END]";
inline constexpr std::string_view kReportStart = "[REPORT_START]";
inline constexpr std::string_view kReportEnd = "[REPORT_END]";

struct PortDesc {
    std::string name;
    int width_bits = 1;
    std::string purpose;

    bool operator==(const PortDesc&) const = default;
};

struct StructuredSpec {
    std::string summary;
    std::string module_name;
    std::vector<PortDesc> inputs;
    std::vector<PortDesc> outputs;
    std::string functional_description;
    std::string clocking_and_reset;
    std::string notes; // optional; empty means absent
    std::vector<StructuredSpec> extra_modules;

    bool operator==(const StructuredSpec&) const = default;
};

// Verbatim text between the spec markers (markers themselves excluded).
struct RawSpecText {
    std::string text;
};

struct Violation {
    enum class Kind { EmbeddedCode, UnknownPort, WidthMismatch, OutputNotDescribed };
    Kind kind;
    std::string detail;

    bool operator==(const Violation&) const = default;
};

// Content of the LAST complete start/end pair in `text`. Shared by spec and
// RTL extraction so both follow the same last-pair rule.
// Throws Errc::MissingMarkers when no complete pair exists.
std::string extract_last_block(std::string_view text, std::string_view start_marker,
                               std::string_view end_marker);

RawSpecText extract_spec_block(const std::string& llm_output);

// Parses the sectioned layout (Summary / Module Name / Inputs / Outputs /
// Detailed Functional Description / Clocking and Reset Behavior / Notes).
// Headers match case-insensitively with tolerant whitespace; "Top Module" is
// accepted for "Module Name". Unrecognized trailing sections land in notes.
// Throws Errc::MissingSection / Errc::MalformedPortLine.
StructuredSpec parse_spec(const RawSpecText& raw);

// Canonical serialization, markers included. parse_spec(extract_spec_block(
// render_spec(s))) == s for invariant-satisfying s whose free text is already
// line-normalized (no trailing blanks, no line that itself looks like a
// section header; render does not escape).
std::string render_spec(const StructuredSpec& spec);

std::vector<Violation> lint_spec(const StructuredSpec& spec,
                                 const std::optional<std::vector<PortDesc>>& original_ports =
                                     std::nullopt);

// Invariant check used before rendering and by callers that need a validity
// gate; returns human-readable violations, empty when the spec is sound.
std::vector<std::string> invariant_violations(const StructuredSpec& spec);

bool is_verilog_identifier(std::string_view s);

// Width text accepted in port bullets: "1", "1-bit", "10 bits", "[9:0]".
// Returns nullopt when nothing parseable is present.
std::optional<int> parse_width_text(std::string_view s);

} // namespace specloop
