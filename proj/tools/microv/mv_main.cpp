// SPDX-License-Identifier: Apache-2.0

#include "mv.hpp"

#include <cstring>
#include <iostream>

namespace {

constexpr const char* kVersion = "microv 0.1.0";

int compile_main(const std::vector<std::string>& files) {
    if (files.empty()) {
        std::cerr << "microv compile: no input files\n";
        return 64;
    }
    try {
        microv::Design design = microv::parse_files(files);
        for (const auto& name : design.order)
            microv::check_module(design, design.modules.at(name), /*require_instances=*/true);
    } catch (const microv::MvError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}

void usage() {
    std::cerr << "usage:\n"
              << "  microv compile <file.v> [more.v ...]   parse + structural checks\n"
              << "  microv sim <tb.v> <dut.v> [aux.v ...]   run a testbench\n"
              << "  microv fec <config.eqy>                 bounded equivalence check\n"
              << "  microv --version\n";
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        usage();
        return 64;
    }
    std::string cmd = argv[1];
    std::vector<std::string> rest(argv + 2, argv + argc);

    if (cmd == "--version" || cmd == "-V") {
        std::cout << kVersion << "\n";
        return 0;
    }
    try {
        if (cmd == "compile") return compile_main(rest);
        if (cmd == "sim") {
            if (rest.empty()) {
                std::cerr << "microv sim: no input files\n";
                return 64;
            }
            return microv::sim_main(rest);
        }
        if (cmd == "fec") {
            if (rest.size() != 1) {
                std::cerr << "microv fec: expected exactly one config file\n";
                return 64;
            }
            return microv::fec_main(rest[0]);
        }
    } catch (const microv::MvError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "microv: " << e.what() << "\n";
        return 1;
    }
    usage();
    return 64;
}
