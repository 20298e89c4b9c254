// SPDX-License-Identifier: Apache-2.0

#include "specloop/vcd.hpp"

#include "specloop/errors.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace specloop {

namespace {

std::string normalize_value(std::string v, int width) {
    if (static_cast<int>(v.size()) > width) {
        v = v.substr(v.size() - static_cast<size_t>(width));
    } else if (static_cast<int>(v.size()) < width) {
        char pad = (v.empty() || (v.front() != 'x' && v.front() != 'z')) ? '0' : v.front();
        v.insert(v.begin(), static_cast<size_t>(width) - v.size(), pad);
    }
    return v;
}

struct Tokenizer {
    std::string_view text;
    size_t pos = 0;

    std::string next() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
        return std::string(text.substr(start, pos - start));
    }
    bool done() {
        size_t p = pos;
        while (p < text.size() && std::isspace(static_cast<unsigned char>(text[p]))) ++p;
        return p >= text.size();
    }
};

} // namespace

VcdTrace VcdTrace::parse(std::string_view text) {
    VcdTrace trace;
    std::map<std::string, std::vector<size_t>> id_map; // id code -> signal indices (aliases)
    std::vector<std::string> scope_stack;
    Tokenizer tok{text};
    long current_time = 0;
    bool in_defs = true;

    auto skip_until_end = [&tok] {
        while (!tok.done()) {
            if (tok.next() == "$end") return;
        }
    };

    while (!tok.done()) {
        std::string t = tok.next();
        if (t.empty()) break;

        if (t == "$scope") {
            tok.next(); // scope type (module, begin, ...)
            scope_stack.push_back(tok.next());
            skip_until_end();
        } else if (t == "$upscope") {
            if (!scope_stack.empty()) scope_stack.pop_back();
            skip_until_end();
        } else if (t == "$var") {
            tok.next(); // var type (wire, reg, ...)
            std::string width_s = tok.next();
            std::string id = tok.next();
            std::string name = tok.next();
            // Optional bit range token before $end, e.g. "[9:0]".
            std::string rest = tok.next();
            while (rest != "$end" && !rest.empty() && !tok.done()) rest = tok.next();

            VcdSignal sig;
            for (const auto& s : scope_stack) sig.path += s + ".";
            sig.path += name;
            sig.width = std::max(1, std::atoi(width_s.c_str()));
            id_map[id].push_back(trace.signals.size());
            trace.signals.push_back(std::move(sig));
        } else if (t == "$enddefinitions") {
            in_defs = false;
            skip_until_end();
        } else if (t == "$dumpvars" || t == "$dumpall" || t == "$dumpon" || t == "$dumpoff" ||
                   t == "$end") {
            // Value changes inside dump sections are handled by the main loop;
            // the closing $end is a no-op.
        } else if (t[0] == '$') {
            skip_until_end(); // $date, $timescale, $comment, $version, $end
        } else if (t[0] == '#') {
            current_time = std::atol(t.c_str() + 1);
        } else if (t[0] == 'b' || t[0] == 'B') {
            std::string value = t.substr(1);
            std::string id = tok.next();
            auto it = id_map.find(id);
            if (it != id_map.end())
                for (size_t idx : it->second)
                    trace.signals[idx].changes.emplace_back(
                        current_time, normalize_value(value, trace.signals[idx].width));
        } else if (t[0] == 'r' || t[0] == 'R') {
            tok.next(); // real value changes unused here
        } else if (t[0] == '0' || t[0] == '1' || t[0] == 'x' || t[0] == 'X' || t[0] == 'z' ||
                   t[0] == 'Z') {
            // Scalar change: value char directly followed by the id code.
            std::string id = t.substr(1);
            if (id.empty()) id = tok.next();
            char v = static_cast<char>(std::tolower(t[0]));
            auto it = id_map.find(id);
            if (it != id_map.end())
                for (size_t idx : it->second)
                    trace.signals[idx].changes.emplace_back(
                        current_time,
                        normalize_value(std::string(1, v), trace.signals[idx].width));
        }
        (void)in_defs;
    }
    return trace;
}

VcdTrace VcdTrace::parse_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) raise(Errc::IoError, "cannot open VCD file " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    return parse(text);
}

const VcdSignal* VcdTrace::find(std::string_view path) const {
    for (const auto& s : signals)
        if (s.path == path) return &s;
    return nullptr;
}

std::vector<SignalDivergence> diff_gold_gate(const VcdTrace& trace, int max_records) {
    struct Pair {
        const VcdSignal* gold = nullptr;
        const VcdSignal* gate = nullptr;
    };
    std::map<std::string, Pair> pairs;

    for (const auto& sig : trace.signals) {
        // Split the path and look for a "gold" or "gate" component.
        std::vector<std::string> parts;
        std::stringstream ss(sig.path);
        std::string part;
        while (std::getline(ss, part, '.')) parts.push_back(part);
        for (size_t i = 0; i < parts.size(); ++i) {
            if (parts[i] != "gold" && parts[i] != "gate") continue;
            std::string key;
            for (size_t j = i + 1; j < parts.size(); ++j) {
                if (!key.empty()) key += ".";
                key += parts[j];
            }
            if (key.empty()) break;
            if (parts[i] == "gold")
                pairs[key].gold = &sig;
            else
                pairs[key].gate = &sig;
            break;
        }
    }

    std::vector<SignalDivergence> out;
    for (const auto& [key, pair] : pairs) {
        if (!pair.gold || !pair.gate) continue;
        int width = std::max(pair.gold->width, pair.gate->width);
        std::string gold_v(static_cast<size_t>(width), 'x');
        std::string gate_v(static_cast<size_t>(width), 'x');

        size_t gi = 0, ti = 0;
        const auto& gc = pair.gold->changes;
        const auto& tc = pair.gate->changes;
        bool found = false;
        while (gi < gc.size() || ti < tc.size()) {
            long t_gold = gi < gc.size() ? gc[gi].first : LONG_MAX;
            long t_gate = ti < tc.size() ? tc[ti].first : LONG_MAX;
            long t = std::min(t_gold, t_gate);
            while (gi < gc.size() && gc[gi].first == t)
                gold_v = normalize_value(gc[gi++].second, width);
            while (ti < tc.size() && tc[ti].first == t)
                gate_v = normalize_value(tc[ti++].second, width);
            if (gold_v != gate_v) {
                out.push_back({t, key, gold_v, gate_v});
                found = true;
                break;
            }
        }
        (void)found;
    }

    std::sort(out.begin(), out.end(), [](const SignalDivergence& a, const SignalDivergence& b) {
        return a.time != b.time ? a.time < b.time : a.signal < b.signal;
    });
    if (max_records > 0 && static_cast<int>(out.size()) > max_records)
        out.resize(static_cast<size_t>(max_records));
    return out;
}

} // namespace specloop
