// SPDX-License-Identifier: Apache-2.0

#include "specloop/spec_model.hpp"

#include "specloop/errors.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace specloop {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            out.emplace_back(text.substr(pos));
            break;
        }
        out.emplace_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    // Strip \r for CRLF input.
    for (auto& l : out)
        if (!l.empty() && l.back() == '\r') l.pop_back();
    return out;
}

// Strips bullet/emphasis decoration so "   - **Inputs:**" matches "inputs".
std::string strip_decoration(std::string line) {
    line = trim(line);
    while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '#' ||
                             line.front() == '.'))
        line.erase(line.begin());
    line = trim(line);
    // Trailing bold markers around "**Header:**"
    while (!line.empty() && line.back() == '*') line.pop_back();
    return trim(line);
}

enum class SectionId { Summary, ModuleName, Inputs, Outputs, Functional, Clocking, Notes, Unknown };

struct HeaderAlias {
    const char* text;
    SectionId id;
};

// Longest aliases first so "detailed functional description" wins over
// "functional description" prefixes.
constexpr HeaderAlias kHeaders[] = {
    {"detailed functional description", SectionId::Functional},
    {"clocking and reset behavior", SectionId::Clocking},
    {"functional description", SectionId::Functional},
    {"clocking and reset", SectionId::Clocking},
    {"notes (if applicable)", SectionId::Notes},
    {"module name", SectionId::ModuleName},
    {"top module", SectionId::ModuleName},
    {"output ports", SectionId::Outputs},
    {"input ports", SectionId::Inputs},
    {"outputs", SectionId::Outputs},
    {"summary", SectionId::Summary},
    {"inputs", SectionId::Inputs},
    {"notes", SectionId::Notes},
};

// Returns the matched section and the inline remainder after the colon, or
// Unknown when the line is not a header. A header must be followed by ':'
// (possibly padded) or end the line, so prose like "Summary of results" is
// not swallowed.
std::pair<SectionId, std::string> match_header(const std::string& raw_line) {
    std::string line = strip_decoration(raw_line);
    std::string low = lower(line);
    for (const auto& h : kHeaders) {
        std::string name = h.text;
        if (low.rfind(name, 0) != 0) continue;
        size_t pos = name.size();
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        if (pos == line.size()) return {h.id, ""};
        if (line[pos] == ':') {
            std::string rest = trim(line.substr(pos + 1));
            return {h.id, rest};
        }
    }
    return {SectionId::Unknown, ""};
}

struct SectionChunk {
    SectionId id = SectionId::Unknown;
    std::string header_line; // original text, kept when the section is unknown
    std::vector<std::string> lines;
};

std::string join_section(const std::vector<std::string>& lines) {
    // Trim leading/trailing blank lines, keep interior structure verbatim.
    size_t b = 0, e = lines.size();
    while (b < e && trim(lines[b]).empty()) ++b;
    while (e > b && trim(lines[e - 1]).empty()) --e;
    std::string out;
    for (size_t i = b; i < e; ++i) {
        if (!out.empty()) out += '\n';
        // Right-trim each line so rendering is stable.
        std::string l = lines[i];
        while (!l.empty() && (l.back() == ' ' || l.back() == '\t')) l.pop_back();
        out += l;
    }
    return out;
}

const std::regex kPortLineRe(R"(^\s*([A-Za-z_][A-Za-z0-9_$]*)\s*[\(\[]([^\)\]]*)[\)\]]\s*(?::\s*(.*))?$)");

std::optional<PortDesc> try_parse_port_fragment(const std::string& fragment) {
    std::smatch m;
    if (!std::regex_match(fragment, m, kPortLineRe)) return std::nullopt;
    auto width = parse_width_text(m[2].str());
    if (!width || *width < 1) return std::nullopt;
    PortDesc p;
    p.name = m[1].str();
    p.width_bits = *width;
    p.purpose = m[3].matched ? trim(m[3].str()) : std::string();
    return p;
}

void parse_port_line(const std::string& raw_line, std::vector<PortDesc>& out) {
    std::string line = strip_decoration(raw_line);
    if (line.empty()) return;
    std::string low = lower(line);
    if (low == "none" || low == "none." || low == "n/a") return;
    // Drop a trailing sentence period that follows a closing paren.
    if (line.size() > 1 && line.back() == '.' && line[line.size() - 2] == ')')
        line.pop_back();

    if (auto p = try_parse_port_fragment(line)) {
        out.push_back(std::move(*p));
        return;
    }
    // Inline comma-separated form: "a (1-bit), b (1-bit)". Only taken when
    // every fragment parses, so purposes containing commas stay intact.
    std::vector<PortDesc> parts;
    std::stringstream ss(line);
    std::string frag;
    bool all_ok = true;
    while (std::getline(ss, frag, ',')) {
        frag = trim(frag);
        if (frag.empty()) continue;
        if (!frag.empty() && frag.back() == '.') frag.pop_back();
        if (auto p = try_parse_port_fragment(trim(frag))) {
            parts.push_back(std::move(*p));
        } else {
            all_ok = false;
            break;
        }
    }
    if (all_ok && !parts.empty()) {
        for (auto& p : parts) out.push_back(std::move(p));
        return;
    }
    raise(Errc::MalformedPortLine, raw_line);
}

StructuredSpec parse_module_chunk(const std::vector<SectionChunk>& chunks) {
    StructuredSpec spec;
    bool saw_name = false, saw_inputs = false, saw_outputs = false, saw_functional = false;
    std::vector<std::string> notes_parts;

    for (const auto& c : chunks) {
        switch (c.id) {
        case SectionId::Summary:
            spec.summary = join_section(c.lines);
            break;
        case SectionId::ModuleName: {
            saw_name = true;
            std::string name = trim(join_section(c.lines));
            // Tolerate "`HalfAdder`." style decoration.
            std::erase(name, '`');
            if (!name.empty() && name.back() == '.') name.pop_back();
            spec.module_name = trim(name);
            break;
        }
        case SectionId::Inputs:
            saw_inputs = true;
            for (const auto& l : c.lines) parse_port_line(l, spec.inputs);
            break;
        case SectionId::Outputs:
            saw_outputs = true;
            for (const auto& l : c.lines) parse_port_line(l, spec.outputs);
            break;
        case SectionId::Functional:
            saw_functional = true;
            spec.functional_description = join_section(c.lines);
            break;
        case SectionId::Clocking:
            spec.clocking_and_reset = join_section(c.lines);
            break;
        case SectionId::Notes:
            notes_parts.push_back(join_section(c.lines));
            break;
        case SectionId::Unknown: {
            // Unrecognized trailing section: preserved in notes, header kept.
            std::string body = join_section(c.lines);
            std::string kept = trim(c.header_line);
            if (!body.empty()) kept += "\n" + body;
            notes_parts.push_back(kept);
            break;
        }
        }
    }

    if (!saw_name || spec.module_name.empty()) raise(Errc::MissingSection, "Module Name");
    if (!saw_inputs) raise(Errc::MissingSection, "Inputs");
    if (!saw_outputs) raise(Errc::MissingSection, "Outputs");
    if (!saw_functional || spec.functional_description.empty())
        raise(Errc::MissingSection, "Functional Description");

    std::string notes;
    for (const auto& n : notes_parts) {
        if (n.empty()) continue;
        if (!notes.empty()) notes += "\n";
        notes += n;
    }
    spec.notes = notes;
    return spec;
}

void render_body(const StructuredSpec& spec, std::string& out) {
    out += "Summary:\n";
    out += spec.summary;
    out += "\n\nModule Name: " + spec.module_name + "\n\nInputs:\n";
    for (const auto& p : spec.inputs) {
        out += "- " + p.name + " (" + std::to_string(p.width_bits) + "-bit)";
        if (!p.purpose.empty()) out += ": " + p.purpose;
        out += "\n";
    }
    out += "\nOutputs:\n";
    for (const auto& p : spec.outputs) {
        out += "- " + p.name + " (" + std::to_string(p.width_bits) + "-bit)";
        if (!p.purpose.empty()) out += ": " + p.purpose;
        out += "\n";
    }
    out += "\nDetailed Functional Description:\n";
    out += spec.functional_description;
    out += "\n";
    if (!spec.clocking_and_reset.empty()) {
        out += "\nClocking and Reset Behavior:\n";
        out += spec.clocking_and_reset;
        out += "\n";
    }
    if (!spec.notes.empty()) {
        out += "\nNotes:\n";
        out += spec.notes;
        out += "\n";
    }
    for (const auto& extra : spec.extra_modules) {
        out += "\n";
        render_body(extra, out);
    }
}

// Code-shaped keyword usage, not bare prose words: "This module implements"
// must pass while "assign {cout,sum} = a+b;" and "always @(posedge clk)" and
// "module Foo (" are flagged.
const std::regex kCodeKeywordRe(
    R"((^|[^A-Za-z0-9_$])endmodule([^A-Za-z0-9_$]|$))"
    R"(|module\s+[A-Za-z_][A-Za-z0-9_$]*\s*(\(|;))"
    R"(|(^|[^A-Za-z0-9_$])assign\b[^;=<>!]*=)"
    R"(|(^|[^A-Za-z0-9_$])always\s*@)");

void collect_embedded_code(const StructuredSpec& spec, std::vector<Violation>& out) {
    auto scan = [&out](const std::string& field, const char* where) {
        if (field.find("```") != std::string::npos) {
            out.push_back({Violation::Kind::EmbeddedCode,
                           std::string(where) + ": fenced code block"});
            return;
        }
        for (const auto& line : split_lines(field)) {
            if (std::regex_search(line, kCodeKeywordRe)) {
                out.push_back({Violation::Kind::EmbeddedCode,
                               std::string(where) + ": " + trim(line)});
            }
        }
    };
    scan(spec.summary, "summary");
    scan(spec.functional_description, "functional_description");
    scan(spec.clocking_and_reset, "clocking_and_reset");
    scan(spec.notes, "notes");
    for (const auto& p : spec.inputs) scan(p.purpose, "input purpose");
    for (const auto& p : spec.outputs) scan(p.purpose, "output purpose");
    for (const auto& extra : spec.extra_modules) collect_embedded_code(extra, out);
}

bool mentions_word(const std::string& text, const std::string& word) {
    size_t pos = 0;
    auto is_word_char = [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
    };
    while ((pos = text.find(word, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !is_word_char(text[pos - 1]);
        size_t end = pos + word.size();
        bool right_ok = end >= text.size() || !is_word_char(text[end]);
        if (left_ok && right_ok) return true;
        pos = end;
    }
    return false;
}

} // namespace

bool is_verilog_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin() + 1, s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
    });
}

std::optional<int> parse_width_text(std::string_view s) {
    // "[9:0]" and bare "9:0" (the brackets may have been consumed by the
    // port-line pattern) both mean a 10-bit range.
    static const std::regex range_re(R"((\d+)\s*:\s*(\d+))");
    static const std::regex int_re(R"((\d+))");
    std::string str(s);
    std::smatch m;
    if (std::regex_search(str, m, range_re)) {
        long hi = std::stol(m[1].str());
        long lo = std::stol(m[2].str());
        return static_cast<int>((hi > lo ? hi - lo : lo - hi) + 1);
    }
    if (std::regex_search(str, m, int_re)) {
        long w = std::stol(m[1].str());
        if (w > 1000000) return std::nullopt;
        return static_cast<int>(w);
    }
    return std::nullopt;
}

std::string extract_last_block(std::string_view text, std::string_view start_marker,
                               std::string_view end_marker) {
    // Last start marker that still has an end marker after it wins; drafts
    // that precede the final block are discarded.
    size_t best_start = std::string_view::npos;
    size_t best_end = std::string_view::npos;
    size_t pos = 0;
    while (true) {
        size_t s = text.find(start_marker, pos);
        if (s == std::string_view::npos) break;
        size_t content_begin = s + start_marker.size();
        size_t e = text.find(end_marker, content_begin);
        if (e == std::string_view::npos) break;
        best_start = content_begin;
        best_end = e;
        pos = content_begin;
    }
    if (best_start == std::string_view::npos)
        raise(Errc::MissingMarkers,
              "no complete " + std::string(start_marker) + "/" + std::string(end_marker) +
                  " pair in model output");
    std::string content(text.substr(best_start, best_end - best_start));
    // Strip the newlines that normally surround the markers.
    while (!content.empty() && (content.front() == '\n' || content.front() == '\r'))
        content.erase(content.begin());
    while (!content.empty() && (content.back() == '\n' || content.back() == '\r'))
        content.pop_back();
    return content;
}

RawSpecText extract_spec_block(const std::string& llm_output) {
    return RawSpecText{extract_last_block(llm_output, kSpecStart, kSpecEnd)};
}

StructuredSpec parse_spec(const RawSpecText& raw) {
    auto lines = split_lines(raw.text);

    // Slice into section chunks first, then into module chunks: a repeated
    // Summary/Module Name header after a complete module starts the next one.
    std::vector<std::vector<SectionChunk>> modules;
    std::vector<SectionChunk> current;
    bool current_has_name = false;
    bool prev_blank = false;
    SectionChunk* open = nullptr;

    auto flush_module = [&] {
        if (!current.empty()) modules.push_back(std::move(current));
        current.clear();
        current_has_name = false;
        open = nullptr;
    };

    for (const auto& line : lines) {
        auto [id, inline_rest] = match_header(line);
        if (id == SectionId::Unknown) {
            std::string trimmed_raw = trim(line);
            bool bulleted = !trimmed_raw.empty() &&
                            (trimmed_raw[0] == '-' || trimmed_raw[0] == '*');
            // Unknown, non-bulleted "Header:" line after the structured
            // sections (or after a paragraph break) starts an unrecognized
            // trailing section that is preserved in notes.
            bool header_shaped = false;
            if (!bulleted) {
                auto colon = trimmed_raw.find(':');
                if (colon != std::string::npos && colon > 0 && colon < 40) {
                    std::string head = trim(trimmed_raw.substr(0, colon));
                    header_shaped = !head.empty() &&
                                    std::all_of(head.begin(), head.end(), [](char c) {
                                        return std::isalnum(static_cast<unsigned char>(c)) ||
                                               c == '_' || c == ' ';
                                    }) &&
                                    std::isalpha(static_cast<unsigned char>(head[0]));
                }
            }
            bool past_structured = open == nullptr || open->id == SectionId::Notes ||
                                   open->id == SectionId::Unknown;
            if (header_shaped && current_has_name && (past_structured || prev_blank)) {
                current.push_back({SectionId::Unknown, trimmed_raw, {}});
                open = &current.back();
                prev_blank = false;
                continue;
            }
            prev_blank = trimmed_raw.empty();
            if (open) {
                open->lines.push_back(line);
            } else if (!trimmed_raw.empty()) {
                // Preamble before the first header: tolerated as summary text.
                current.push_back({SectionId::Summary, "", {line}});
                open = &current.back();
            }
            continue;
        }
        prev_blank = false;

        bool starts_new_module = false;
        if (current_has_name && (id == SectionId::Summary || id == SectionId::ModuleName)) {
            for (const auto& c : current) {
                if (c.id == id) {
                    starts_new_module = true;
                    break;
                }
            }
        }
        if (starts_new_module) flush_module();

        current.push_back({id, line, {}});
        open = &current.back();
        if (!inline_rest.empty()) open->lines.push_back(inline_rest);
        if (id == SectionId::ModuleName) current_has_name = true;
    }
    flush_module();

    if (modules.empty()) raise(Errc::MissingSection, "Module Name");

    StructuredSpec top = parse_module_chunk(modules.front());
    for (size_t i = 1; i < modules.size(); ++i)
        top.extra_modules.push_back(parse_module_chunk(modules[i]));
    return top;
}

std::string render_spec(const StructuredSpec& spec) {
    std::string out;
    out += kSpecStart;
    out += "\n";
    render_body(spec, out);
    out += kSpecEnd;
    out += "\n";
    return out;
}

std::vector<Violation> lint_spec(const StructuredSpec& spec,
                                 const std::optional<std::vector<PortDesc>>& original_ports) {
    std::vector<Violation> out;
    collect_embedded_code(spec, out);

    if (original_ports) {
        for (const auto& spec_port : {std::cref(spec.inputs), std::cref(spec.outputs)}) {
            for (const auto& p : spec_port.get()) {
                auto it = std::find_if(original_ports->begin(), original_ports->end(),
                                       [&p](const PortDesc& o) { return o.name == p.name; });
                if (it == original_ports->end()) {
                    out.push_back({Violation::Kind::UnknownPort, p.name});
                } else if (it->width_bits != p.width_bits) {
                    out.push_back({Violation::Kind::WidthMismatch,
                                   p.name + ": spec " + std::to_string(p.width_bits) + ", rtl " +
                                       std::to_string(it->width_bits)});
                }
            }
        }
    }

    for (const auto& o : spec.outputs) {
        if (!mentions_word(spec.functional_description, o.name))
            out.push_back({Violation::Kind::OutputNotDescribed, o.name});
    }
    return out;
}

std::vector<std::string> invariant_violations(const StructuredSpec& spec) {
    std::vector<std::string> out;
    if (!is_verilog_identifier(spec.module_name))
        out.push_back("module_name is not a legal Verilog identifier: '" + spec.module_name + "'");
    if (trim(spec.summary).empty()) out.push_back("summary is empty");
    if (trim(spec.functional_description).empty()) out.push_back("functional_description is empty");
    for (const auto& ports : {std::cref(spec.inputs), std::cref(spec.outputs)}) {
        for (const auto& p : ports.get()) {
            if (!is_verilog_identifier(p.name)) out.push_back("bad port name: '" + p.name + "'");
            if (p.width_bits < 1)
                out.push_back("port " + p.name + " has non-positive width " +
                              std::to_string(p.width_bits));
        }
    }
    std::vector<Violation> code;
    collect_embedded_code(spec, code);
    for (const auto& v : code)
        if (v.kind == Violation::Kind::EmbeddedCode)
            out.push_back("embedded code in " + v.detail);
    for (const auto& extra : spec.extra_modules)
        for (const auto& v : invariant_violations(extra))
            out.push_back("extra module " + extra.module_name + ": " + v);
    return out;
}

} // namespace specloop
