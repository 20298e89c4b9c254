// SPDX-License-Identifier: Apache-2.0
//
// Value-change-dump reader used for counterexample extraction. Parses the
// declaration section ($scope/$var/$upscope/$enddefinitions), then the value
// change section (#time stamps, scalar and b-vector changes), per IEEE 1364
// semantics: vector values are left-extended to the declared width with '0',
// or with 'x'/'z' when that is the leading digit.
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace specloop {

struct VcdSignal {
    std::string path;  // scope components and signal name joined with '.'
    int width = 1;
    std::vector<std::pair<long, std::string>> changes; // (time, bit string), time-ordered
};

struct VcdTrace {
    std::vector<VcdSignal> signals;

    static VcdTrace parse(std::string_view text);
    static VcdTrace parse_file(const std::filesystem::path& p);

    const VcdSignal* find(std::string_view path) const;
};

struct SignalDivergence {
    long time = 0;
    std::string signal;      // pair key: path with the gold/gate component removed
    std::string gold_value;
    std::string gate_value;
};

// Pairs gold.* and gate.* signals by their remaining path and reports, for
// each pair that ever differs, the earliest time at which the values differ.
// Records are sorted by (time, signal) and truncated to max_records.
std::vector<SignalDivergence> diff_gold_gate(const VcdTrace& trace, int max_records);

} // namespace specloop
