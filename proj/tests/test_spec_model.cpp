// SPDX-License-Identifier: Apache-2.0

#include "specloop/spec_model.hpp"

#include "specloop/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <regex>
#include <set>

using namespace specloop;
using namespace testsupport;

namespace {

// Independent oracle for the last-pair rule: regex-scan every complete pair,
// take the final capture.
std::string last_pair_oracle(const std::string& text) {
    static const std::regex pair_re(R"(\[SPEC_START\]([\s\S]*?)\[SPEC_END\])");
    std::string found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pair_re);
         it != std::sregex_iterator(); ++it)
        found = (*it)[1].str();
    // Mirror the production trimming of marker-adjacent newlines.
    while (!found.empty() && (found.front() == '\n' || found.front() == '\r'))
        found.erase(found.begin());
    while (!found.empty() && (found.back() == '\n' || found.back() == '\r')) found.pop_back();
    return found;
}

} // namespace

TEST_CASE("extract_spec_block: single well-formed pair") {
    auto raw = extract_spec_block("reasoning... [SPEC_START]Summary: x[SPEC_END]");
    CHECK(raw.text == "Summary: x");
}

TEST_CASE("extract_spec_block: two complete pairs takes the last") {
    std::string input = "draft [SPEC_START]first body[SPEC_END] more reasoning "
                        "[SPEC_START]second body[SPEC_END] trailing";
    auto raw = extract_spec_block(input);
    CHECK(raw.text == "second body");
    CHECK(raw.text == last_pair_oracle(input));

    // Concatenating two rendered blocks also picks the later one.
    std::mt19937_64 rng(7);
    auto a = random_spec(rng, false);
    auto b = random_spec(rng, false);
    std::string both = render_spec(a) + "\nrevision follows\n" + render_spec(b);
    CHECK(extract_spec_block(both).text == last_pair_oracle(both));
}

TEST_CASE("extract_spec_block: unclosed block raises MissingMarkers") {
    try {
        extract_spec_block("[SPEC_START] no end marker");
        FAIL("expected MissingMarkers");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingMarkers);
    }
}

TEST_CASE("extract_spec_block: idempotent on re-wrapped content") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 50; ++i) {
        auto spec = random_spec(rng);
        std::string once = extract_spec_block(render_spec(spec)).text;
        std::string again = extract_spec_block("[SPEC_START]\n" + once + "\n[SPEC_END]").text;
        CHECK(once == again);
    }
}

TEST_CASE("parse_spec: Table-style half adder text") {
    auto spec = parse_spec(RawSpecText{read_fixture("table1_half_adder_spec.txt")});
    CHECK(spec.module_name == "HalfAdder");
    REQUIRE(spec.inputs.size() == 2);
    CHECK(spec.inputs[0].name == "a");
    CHECK(spec.inputs[0].width_bits == 1);
    CHECK(spec.inputs[1].name == "b");
    CHECK(spec.inputs[1].width_bits == 1);
    REQUIRE(spec.outputs.size() == 2);
    CHECK(spec.outputs[0].name == "sum");
    CHECK(spec.outputs[0].width_bits == 1);
    CHECK(spec.outputs[1].name == "cout");
    CHECK(spec.outputs[1].width_bits == 1);
    CHECK(spec.functional_description.find("half adder") != std::string::npos);
}

TEST_CASE("parse_spec: missing Outputs section") {
    std::string text = "Summary:\nsome device.\n\nModule Name: Foo\n\nInputs:\n- a (1-bit): x.\n\n"
                       "Detailed Functional Description:\ndoes things with a.\n";
    try {
        parse_spec(RawSpecText{text});
        FAIL("expected MissingSection");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MissingSection);
        CHECK(e.detail() == "Outputs");
    }
}

TEST_CASE("parse_spec: port width spellings") {
    std::string tpl = "Summary:\ns.\n\nModule Name: M\n\nInputs:\n- WIDTH\n\nOutputs:\n"
                      "- y (1-bit): out.\n\nDetailed Functional Description:\ny mirrors input.\n";
    auto parse_with = [&tpl](const std::string& port_line) {
        std::string text = tpl;
        text.replace(text.find("- WIDTH"), 7, port_line);
        return parse_spec(RawSpecText{text});
    };

    CHECK(parse_with("- q (10-bit): counter output").inputs[0].width_bits == 10);
    CHECK(parse_with("- q (10-bit): counter output").inputs[0].name == "q");
    CHECK(parse_with("- a (1): plain").inputs[0].width_bits == 1);
    CHECK(parse_with("- bus [9:0]: range style").inputs[0].width_bits == 10);
    CHECK(parse_with("- w (3 bits): spaced").inputs[0].width_bits == 3);

    try {
        parse_with("- a: no width at all");
        FAIL("expected MalformedPortLine");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MalformedPortLine);
    }
}

TEST_CASE("parse_spec: unrecognized trailing section lands in notes") {
    std::string text = "Summary:\ns.\n\nModule Name: M\n\nInputs:\n- a (1-bit): in.\n\n"
                       "Outputs:\n- y (1-bit): out.\n\nDetailed Functional Description:\n"
                       "y mirrors a.\n\nLatency: one cycle after the edge.\n";
    auto spec = parse_spec(RawSpecText{text});
    CHECK(spec.notes.find("Latency: one cycle") != std::string::npos);
}

TEST_CASE("render_spec: exactly one marker pair, notes elided when empty") {
    std::mt19937_64 rng(3);
    auto spec = random_spec(rng, false);
    spec.notes.clear();
    std::string text = render_spec(spec);

    size_t starts = 0, ends = 0, pos = 0;
    while ((pos = text.find("[SPEC_START]", pos)) != std::string::npos) ++starts, pos += 5;
    pos = 0;
    while ((pos = text.find("[SPEC_END]", pos)) != std::string::npos) ++ends, pos += 5;
    CHECK(starts == 1);
    CHECK(ends == 1);
    CHECK(text.find("Notes:") == std::string::npos);
}

TEST_CASE("round-trip: half adder and randomized specs") {
    StructuredSpec ha;
    ha.summary = "A combinational half adder.";
    ha.module_name = "HalfAdder";
    ha.inputs = {{"a", 1, "first operand"}, {"b", 1, "second operand"}};
    ha.outputs = {{"sum", 1, "sum bit"}, {"cout", 1, "carry out"}};
    ha.functional_description = "Adds a and b; sum is the low bit, cout the carry.";
    CHECK(parse_spec(extract_spec_block(render_spec(ha))) == ha);

    std::mt19937_64 rng(42);
    for (int i = 0; i < 200; ++i) {
        auto spec = random_spec(rng);
        REQUIRE(invariant_violations(spec).empty());
        auto back = parse_spec(extract_spec_block(render_spec(spec)));
        REQUIRE(back == spec);
    }
}

TEST_CASE("parse_spec: arbitrary input yields a spec or a typed error") {
    std::mt19937_64 rng(99);
    const std::string charset =
        "abcXYZ019:-()[]{}\n\t .,;|#$%&*!\xc3\xa9\xe2\x82\xac"; // includes multi-byte UTF-8
    for (int i = 0; i < 300; ++i) {
        std::string junk;
        size_t len = rng() % 400;
        for (size_t k = 0; k < len; ++k) junk += charset[rng() % charset.size()];
        try {
            (void)parse_spec(RawSpecText{junk});
        } catch (const Error&) {
            // typed error: acceptable outcome
        }
    }
}

TEST_CASE("lint_spec: matching ports are clean") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        auto spec = random_spec(rng, false);
        for (const auto& o : spec.outputs)
            spec.functional_description += " " + o.name + " updates.";
        std::vector<PortDesc> original = spec.inputs;
        original.insert(original.end(), spec.outputs.begin(), spec.outputs.end());
        // Lint what a generated document would actually round-trip to.
        auto rendered = parse_spec(extract_spec_block(render_spec(spec)));
        auto violations = lint_spec(rendered, original);
        for (const auto& v : violations) {
            CHECK(v.kind != Violation::Kind::UnknownPort);
            CHECK(v.kind != Violation::Kind::WidthMismatch);
        }
    }
}

TEST_CASE("lint_spec: unknown port via set difference") {
    StructuredSpec spec;
    spec.summary = "counter";
    spec.module_name = "M";
    spec.inputs = {{"clk", 1, ""}, {"rst", 1, "reset input"}};
    spec.outputs = {{"q", 4, ""}};
    spec.functional_description = "q counts up; rst clears q.";
    std::vector<PortDesc> original = {{"clk", 1, ""}, {"reset", 1, ""}, {"q", 4, ""}};

    auto violations = lint_spec(spec, original);

    // Oracle: set difference over names.
    std::set<std::string> spec_names, rtl_names;
    for (const auto& p : spec.inputs) spec_names.insert(p.name);
    for (const auto& p : spec.outputs) spec_names.insert(p.name);
    for (const auto& p : original) rtl_names.insert(p.name);
    std::vector<std::string> expected_unknown;
    for (const auto& n : spec_names)
        if (!rtl_names.count(n)) expected_unknown.push_back(n);
    REQUIRE(expected_unknown == std::vector<std::string>{"rst"});

    bool found = false;
    for (const auto& v : violations)
        if (v.kind == Violation::Kind::UnknownPort && v.detail == "rst") found = true;
    CHECK(found);
}

TEST_CASE("lint_spec: embedded code, width mismatch, undescribed output") {
    StructuredSpec spec;
    spec.summary = "adder";
    spec.module_name = "HalfAdder";
    spec.inputs = {{"a", 1, ""}, {"b", 1, ""}};
    spec.outputs = {{"sum", 1, ""}, {"cout", 1, ""}};
    spec.functional_description = "assign {cout,sum} = a+b;";

    auto violations = lint_spec(spec);
    bool embedded = false;
    for (const auto& v : violations)
        if (v.kind == Violation::Kind::EmbeddedCode) embedded = true;
    CHECK(embedded);

    // Prose with the bare word "module" must not be flagged.
    spec.functional_description = "This module implements a half adder; sum and cout update.";
    CHECK(lint_spec(spec).empty());

    std::vector<PortDesc> original = {{"a", 1, ""}, {"b", 8, ""}, {"sum", 1, ""}, {"cout", 1, ""}};
    spec.inputs = {{"a", 1, ""}, {"b", 1, ""}};
    spec.functional_description = "This module implements a half adder; sum updates.";
    auto v2 = lint_spec(spec, original);
    bool width = false, undescribed = false;
    for (const auto& v : v2) {
        if (v.kind == Violation::Kind::WidthMismatch) width = true;
        if (v.kind == Violation::Kind::OutputNotDescribed && v.detail == "cout")
            undescribed = true;
    }
    CHECK(width);
    CHECK(undescribed);
}
