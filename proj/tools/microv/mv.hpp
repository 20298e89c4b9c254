// SPDX-License-Identifier: Apache-2.0
//
// microv: a small, deterministic Verilog toolchain used as the reference
// compiler / simulator / bounded equivalence checker for this project.
// It handles the synthesizable subset that the bundled fixtures and
// reconstructions use: ANSI and non-ANSI ports, wire/reg declarations with
// ranges and initializers, continuous assigns (including concatenation
// targets), always blocks with edge lists / @* / #period, initial blocks,
// if/else, blocking and nonblocking assignment, module instances, $display,
// $finish and $fatal. Two-state values; registers start at zero.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace microv {

// ---------------------------------------------------------------------------
// Values: fixed-width two-state bit vectors, LSB first.
// ---------------------------------------------------------------------------

struct Value {
    int width = 1;
    std::vector<uint8_t> bits; // bits[i] is bit i, each 0 or 1

    static Value zeros(int w);
    static Value from_uint(uint64_t v, int w);
    uint64_t to_uint() const;
    std::string to_bitstring() const; // MSB first, e.g. "0000001010"
    std::string to_hex() const;
    bool any() const;
    Value resized(int w) const;

    bool operator==(const Value& o) const { return width == o.width && bits == o.bits; }
    bool operator!=(const Value& o) const { return !(*this == o); }
};

// ---------------------------------------------------------------------------
// AST
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct Expr {
    enum class Kind { Number, Ident, Index, Slice, Unary, Binary, Ternary, Concat, Repeat };
    Kind kind = Kind::Number;
    int line = 0;

    Value number;                 // Number
    std::string name;             // Ident / Index / Slice base
    ExprPtr a, b, c;              // operands; Index uses a as the bit index
    int msb = 0, lsb = 0;         // Slice (constant bounds)
    std::string op;               // Unary / Binary operator spelling
    std::vector<ExprPtr> parts;   // Concat
    long repeat_count = 0;        // Repeat: {N{a}}
};

struct LValuePart {
    std::string name;
    ExprPtr index;        // bit select when set
    bool has_slice = false;
    int msb = 0, lsb = 0; // constant slice
};

struct LValue {
    std::vector<LValuePart> parts; // MSB-first concat; single part is the common case
};

struct Stmt;
using StmtPtr = std::shared_ptr<Stmt>;

struct Stmt {
    enum class Kind { Block, If, AssignNB, AssignB, Delay, Display, Finish, Fatal, Null };
    Kind kind = Kind::Null;
    int line = 0;

    std::vector<StmtPtr> block;   // Block
    ExprPtr cond;                 // If
    StmtPtr then_branch, else_branch;
    LValue lhs;                   // assignments
    ExprPtr rhs;
    long delay = 0;               // Delay (optional trailing statement in then_branch)
    std::string format;           // Display / Fatal message
    std::vector<ExprPtr> args;
    bool newline = true;          // $display vs $write
};

struct EdgeSense {
    bool posedge = true;
    std::string signal;
};

struct AlwaysBlock {
    enum class Trigger { EdgeList, Star, Periodic };
    Trigger trigger = Trigger::Star;
    std::vector<EdgeSense> edges;
    long period = 0; // Periodic
    StmtPtr body;
    int line = 0;
};

struct InitialBlock {
    StmtPtr body;
    int line = 0;
};

struct ContAssign {
    LValue lhs;
    ExprPtr rhs;
    int line = 0;
};

struct Net {
    std::string name;
    int width = 1;
    bool is_reg = false;
    int direction = 0; // 0 internal, 1 input, 2 output
    ExprPtr init;      // declaration initializer, run at time zero
    int line = 0;
};

struct Connection {
    std::string port; // empty for positional
    ExprPtr expr;
};

struct Instance {
    std::string module_name;
    std::string instance_name;
    std::vector<Connection> conns;
    int line = 0;
};

struct Module {
    std::string name;
    std::vector<std::string> port_order;
    std::map<std::string, Net> nets;
    std::vector<ContAssign> assigns;
    std::vector<AlwaysBlock> always_blocks;
    std::vector<InitialBlock> initials;
    std::vector<Instance> instances;
    int line = 0;
};

struct Design {
    std::map<std::string, Module> modules;
    std::vector<std::string> order; // declaration order
};

class MvError : public std::runtime_error {
public:
    MvError(std::string file, int line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": error: " + msg),
          file_(std::move(file)),
          line_(line) {}
    const std::string& file() const { return file_; }
    int line() const { return line_; }

private:
    std::string file_;
    int line_;
};

// ---------------------------------------------------------------------------
// Front end
// ---------------------------------------------------------------------------

Design parse_source(const std::string& text, const std::string& filename);
void parse_into(Design& design, const std::string& text, const std::string& filename);
Design parse_files(const std::vector<std::string>& paths);

// Name resolution and structural checks for one module (identifiers declared,
// instance targets known when required).
void check_module(const Design& design, const Module& m, bool require_instances);

// Expands the instance tree under `top` into a single flat module; child nets
// are prefixed with "<instance>.".
Module flatten(const Design& design, const std::string& top);

// ---------------------------------------------------------------------------
// Execution engine over a flat module
// ---------------------------------------------------------------------------

class Engine {
public:
    explicit Engine(const Module* flat) : m_(flat) {}

    void init();
    // Evaluates with Verilog context-width semantics: arithmetic and bitwise
    // operands are extended to max(context, self-determined width) before the
    // operation, so `{cout, sum} = a + b` keeps the carry bit.
    Value eval(const Expr& e, int context_width = 0) const;
    int expr_width(const Expr& e) const;
    int lvalue_width(const LValue& lv) const;
    // Writes through an lvalue; returns true when any net value changed.
    bool write_lvalue(const LValue& lv, const Value& v);
    bool write_net(const std::string& name, const Value& v);
    const Value& get(const std::string& name) const;

    // Executes a statement without suspension; Delay raises MvError.
    // Nonblocking assignments are queued until apply_nba().
    void exec(const Stmt& s);
    void apply_nba();
    bool nba_pending() const { return !nba_.empty(); }

    // Re-evaluates continuous assigns and @*/plain-sensitivity blocks until
    // the net values reach a fixed point.
    void settle();

    // Fires edge-triggered blocks given the previous values of their sensed
    // signals; also fires every clk-sensed block when force_clock_edge names
    // the implicit clock of the cycle model. NBAs are applied and the design
    // re-settled before returning.
    void step_edges(const std::map<std::string, Value>& prev,
                    const std::string& force_clock_edge = "");

    std::map<std::string, Value> snapshot() const { return vals_; }

    const Module& module() const { return *m_; }

    // $display sink and simulation control flags.
    std::string* display_sink = nullptr;
    bool finish_requested = false;
    bool fatal_requested = false;

    std::string format_display(const Stmt& s) const;

private:
    const Module* m_;
    std::map<std::string, Value> vals_;
    std::vector<std::pair<LValue, Value>> nba_;
};

std::string format_value_for(char spec, const Value& v);

// ---------------------------------------------------------------------------
// Tool entry points
// ---------------------------------------------------------------------------

int sim_main(const std::vector<std::string>& files, long max_time = 200000);
int fec_main(const std::string& config_path);

} // namespace microv
