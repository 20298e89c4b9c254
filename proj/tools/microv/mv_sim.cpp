// SPDX-License-Identifier: Apache-2.0
//
// Event-driven testbench simulation. Initial blocks and `always #n` processes
// run as resumable walkers; design logic (continuous assigns, @* blocks,
// edge-triggered blocks) is evaluated by the shared engine after every group
// of process steps at the same timestamp.

#include "mv.hpp"

#include <algorithm>
#include <iostream>

namespace microv {

namespace {

struct Frame {
    std::vector<const Stmt*> seq;
    size_t idx = 0;
};

struct Proc {
    std::vector<Frame> stack;
    long wake = 0;
    bool done = false;
    bool periodic = false;
    long period = 0;
    const Stmt* periodic_body = nullptr;
};

Frame frame_of(const Stmt* s) {
    Frame f;
    if (s->kind == Stmt::Kind::Block) {
        for (const auto& b : s->block) f.seq.push_back(b.get());
    } else {
        f.seq.push_back(s);
    }
    return f;
}

enum class StepResult { Finished, Suspended };

// Runs one process until it suspends on a delay or runs out of statements.
StepResult run_proc(Proc& p, Engine& engine, long now) {
    while (!p.stack.empty()) {
        Frame& f = p.stack.back();
        if (f.idx >= f.seq.size()) {
            p.stack.pop_back();
            continue;
        }
        const Stmt* s = f.seq[f.idx++];
        switch (s->kind) {
        case Stmt::Kind::Block:
            p.stack.push_back(frame_of(s));
            break;
        case Stmt::Kind::If: {
            const Stmt* branch =
                engine.eval(*s->cond).any() ? s->then_branch.get() : s->else_branch.get();
            if (branch) p.stack.push_back(frame_of(branch));
            break;
        }
        case Stmt::Kind::Delay:
            if (s->then_branch) p.stack.push_back(frame_of(s->then_branch.get()));
            if (s->delay > 0) {
                p.wake = now + s->delay;
                return StepResult::Suspended;
            }
            break;
        default:
            engine.exec(*s);
            if (engine.finish_requested || engine.fatal_requested) {
                p.done = true;
                return StepResult::Finished;
            }
            break;
        }
    }
    p.done = true;
    return StepResult::Finished;
}

const Module* pick_testbench_top(const Design& design) {
    const Module* candidate = nullptr;
    for (const auto& name : design.order) {
        const Module& m = design.modules.at(name);
        if (!m.port_order.empty()) continue;
        bool looks_tb = !m.initials.empty() || name.ends_with("_tb") || name.ends_with("tb");
        if (looks_tb) return &m;
        if (!candidate) candidate = &m;
    }
    return candidate;
}

} // namespace

int sim_main(const std::vector<std::string>& files, long max_time) {
    Design design = parse_files(files);
    const Module* top = pick_testbench_top(design);
    if (!top) throw MvError(files.empty() ? "?" : files.front(), 0,
                            "no portless testbench module found");

    Module flat = flatten(design, top->name);
    Engine engine(&flat);
    std::string display;
    engine.display_sink = &display;
    engine.init();

    std::vector<Proc> procs;
    for (const auto& ib : flat.initials) {
        Proc p;
        p.stack.push_back(frame_of(ib.body.get()));
        procs.push_back(std::move(p));
    }
    for (const auto& ab : flat.always_blocks) {
        if (ab.trigger != AlwaysBlock::Trigger::Periodic) continue;
        Proc p;
        p.periodic = true;
        p.period = ab.period;
        p.periodic_body = ab.body.get();
        p.wake = ab.period;
        procs.push_back(std::move(p));
    }

    engine.settle();
    auto prev = engine.snapshot();
    long t = 0;

    auto flush = [&display] {
        if (!display.empty()) {
            std::cout << display;
            display.clear();
        }
    };

    // Time zero: run initial processes once.
    for (auto& p : procs)
        if (!p.periodic && !p.done && p.wake == 0) run_proc(p, engine, 0);
    engine.settle();
    engine.step_edges(prev);
    prev = engine.snapshot();
    flush();

    while (!engine.finish_requested && !engine.fatal_requested) {
        long next = -1;
        for (const auto& p : procs)
            if (!p.done && (next < 0 || p.wake < next)) next = p.wake;
        if (next < 0 || next > max_time) break;
        t = next;

        for (auto& p : procs) {
            if (p.done || p.wake != t) continue;
            if (p.periodic) {
                engine.exec(*p.periodic_body);
                p.wake = t + p.period;
            } else {
                run_proc(p, engine, t);
            }
            if (engine.finish_requested || engine.fatal_requested) break;
        }

        engine.settle();
        engine.step_edges(prev);
        prev = engine.snapshot();
        flush();
    }

    flush();
    return engine.fatal_requested ? 2 : 0;
}

} // namespace microv
