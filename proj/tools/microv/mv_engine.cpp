// SPDX-License-Identifier: Apache-2.0

#include "mv.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace microv {

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

Value Value::zeros(int w) {
    Value v;
    v.width = std::max(1, w);
    v.bits.assign(static_cast<size_t>(v.width), 0);
    return v;
}

Value Value::from_uint(uint64_t u, int w) {
    Value v = zeros(w);
    for (int i = 0; i < v.width && i < 64; ++i)
        v.bits[static_cast<size_t>(i)] = static_cast<uint8_t>((u >> i) & 1);
    return v;
}

uint64_t Value::to_uint() const {
    uint64_t u = 0;
    for (int i = 0; i < width && i < 64; ++i)
        if (bits[static_cast<size_t>(i)]) u |= (1ULL << i);
    return u;
}

std::string Value::to_bitstring() const {
    std::string s(static_cast<size_t>(width), '0');
    for (int i = 0; i < width; ++i)
        if (bits[static_cast<size_t>(i)]) s[static_cast<size_t>(width - 1 - i)] = '1';
    return s;
}

std::string Value::to_hex() const {
    std::string s;
    for (int i = 0; i < width; i += 4) {
        int nib = 0;
        for (int k = 0; k < 4 && i + k < width; ++k)
            if (bits[static_cast<size_t>(i + k)]) nib |= 1 << k;
        s.insert(s.begin(), "0123456789abcdef"[nib]);
    }
    return s.empty() ? "0" : s;
}

bool Value::any() const {
    return std::any_of(bits.begin(), bits.end(), [](uint8_t b) { return b != 0; });
}

Value Value::resized(int w) const {
    if (w == width) return *this;
    Value v = zeros(w);
    for (int i = 0; i < std::min(w, width); ++i) v.bits[static_cast<size_t>(i)] = bits[static_cast<size_t>(i)];
    return v;
}

// ---------------------------------------------------------------------------
// Structural checks and flattening
// ---------------------------------------------------------------------------

namespace {

void collect_expr_idents(const Expr& e, std::set<std::string>& out) {
    switch (e.kind) {
    case Expr::Kind::Ident:
    case Expr::Kind::Index:
    case Expr::Kind::Slice:
        out.insert(e.name);
        break;
    default:
        break;
    }
    if (e.a) collect_expr_idents(*e.a, out);
    if (e.b) collect_expr_idents(*e.b, out);
    if (e.c) collect_expr_idents(*e.c, out);
    for (const auto& p : e.parts) collect_expr_idents(*p, out);
}

void collect_stmt_idents(const Stmt& s, std::set<std::string>& out) {
    if (s.cond) collect_expr_idents(*s.cond, out);
    if (s.rhs) collect_expr_idents(*s.rhs, out);
    for (const auto& part : s.lhs.parts) {
        if (!part.name.empty()) out.insert(part.name);
        if (part.index) collect_expr_idents(*part.index, out);
    }
    for (const auto& a : s.args) collect_expr_idents(*a, out);
    if (s.then_branch) collect_stmt_idents(*s.then_branch, out);
    if (s.else_branch) collect_stmt_idents(*s.else_branch, out);
    for (const auto& b : s.block) collect_stmt_idents(*b, out);
}

ExprPtr clone_expr(const ExprPtr& e, const std::string& prefix) {
    if (!e) return nullptr;
    auto out = std::make_shared<Expr>(*e);
    if (!out->name.empty()) out->name = prefix + out->name;
    out->a = clone_expr(e->a, prefix);
    out->b = clone_expr(e->b, prefix);
    out->c = clone_expr(e->c, prefix);
    out->parts.clear();
    for (const auto& p : e->parts) out->parts.push_back(clone_expr(p, prefix));
    return out;
}

LValue clone_lvalue(const LValue& lv, const std::string& prefix) {
    LValue out;
    for (const auto& part : lv.parts) {
        LValuePart p = part;
        p.name = prefix + p.name;
        p.index = clone_expr(part.index, prefix);
        out.parts.push_back(std::move(p));
    }
    return out;
}

StmtPtr clone_stmt(const StmtPtr& s, const std::string& prefix) {
    if (!s) return nullptr;
    auto out = std::make_shared<Stmt>(*s);
    out->cond = clone_expr(s->cond, prefix);
    out->rhs = clone_expr(s->rhs, prefix);
    out->lhs = clone_lvalue(s->lhs, prefix);
    out->then_branch = clone_stmt(s->then_branch, prefix);
    out->else_branch = clone_stmt(s->else_branch, prefix);
    out->block.clear();
    for (const auto& b : s->block) out->block.push_back(clone_stmt(b, prefix));
    out->args.clear();
    for (const auto& a : s->args) out->args.push_back(clone_expr(a, prefix));
    return out;
}

} // namespace

void check_module(const Design& design, const Module& m, bool require_instances) {
    std::set<std::string> used;
    for (const auto& a : m.assigns) {
        collect_expr_idents(*a.rhs, used);
        for (const auto& part : a.lhs.parts) {
            used.insert(part.name);
            if (part.index) collect_expr_idents(*part.index, used);
        }
    }
    for (const auto& ab : m.always_blocks) {
        for (const auto& e : ab.edges) used.insert(e.signal);
        collect_stmt_idents(*ab.body, used);
    }
    for (const auto& ib : m.initials) collect_stmt_idents(*ib.body, used);
    for (const auto& n : m.nets)
        if (n.second.init) collect_expr_idents(*n.second.init, used);

    for (const auto& name : used)
        if (!m.nets.count(name))
            throw MvError(m.name, m.line, "undeclared identifier '" + name + "'");

    for (const auto& p : m.port_order) {
        auto it = m.nets.find(p);
        if (it == m.nets.end() || it->second.direction == 0)
            throw MvError(m.name, m.line, "port '" + p + "' has no direction");
    }

    for (const auto& inst : m.instances) {
        auto it = design.modules.find(inst.module_name);
        if (it == design.modules.end()) {
            if (require_instances)
                throw MvError(m.name, inst.line,
                              "unknown module '" + inst.module_name + "' instantiated as '" +
                                  inst.instance_name + "'");
            continue;
        }
        const Module& child = it->second;
        bool named = !inst.conns.empty() && !inst.conns.front().port.empty();
        if (named) {
            for (const auto& c : inst.conns)
                if (!child.nets.count(c.port) ||
                    std::find(child.port_order.begin(), child.port_order.end(), c.port) ==
                        child.port_order.end())
                    throw MvError(m.name, inst.line,
                                  "module '" + child.name + "' has no port '" + c.port + "'");
        } else if (inst.conns.size() > child.port_order.size()) {
            throw MvError(m.name, inst.line, "too many connections for '" + child.name + "'");
        }
    }
}

Module flatten(const Design& design, const std::string& top) {
    auto it = design.modules.find(top);
    if (it == design.modules.end()) throw MvError(top, 0, "top module '" + top + "' not found");

    std::function<Module(const Module&, int)> expand = [&](const Module& src,
                                                           int depth) -> Module {
        if (depth > 16) throw MvError(src.name, src.line, "instance nesting too deep");
        check_module(design, src, /*require_instances=*/true);

        Module out;
        out.name = src.name;
        out.line = src.line;
        out.port_order = src.port_order;
        out.nets = src.nets;
        out.assigns = src.assigns;
        out.always_blocks = src.always_blocks;
        out.initials = src.initials;

        for (const auto& inst : src.instances) {
            Module child = expand(design.modules.at(inst.module_name), depth + 1);
            const std::string prefix = inst.instance_name + ".";

            for (const auto& [name, net] : child.nets) {
                Net copy = net;
                copy.name = prefix + name;
                copy.direction = 0; // internal once instantiated
                copy.init = clone_expr(net.init, prefix);
                out.nets.emplace(copy.name, std::move(copy));
            }
            for (const auto& a : child.assigns)
                out.assigns.push_back({clone_lvalue(a.lhs, prefix), clone_expr(a.rhs, prefix),
                                       a.line});
            for (const auto& ab : child.always_blocks) {
                AlwaysBlock copy = ab;
                copy.body = clone_stmt(ab.body, prefix);
                for (auto& e : copy.edges) e.signal = prefix + e.signal;
                out.always_blocks.push_back(std::move(copy));
            }
            for (const auto& ib : child.initials)
                out.initials.push_back({clone_stmt(ib.body, prefix), ib.line});

            // Bind connections: inputs become assigns into the child net,
            // outputs become assigns out to the parent target.
            bool named = !inst.conns.empty() && !inst.conns.front().port.empty();
            for (size_t i = 0; i < inst.conns.size(); ++i) {
                const auto& conn = inst.conns[i];
                std::string port = named ? conn.port : child.port_order.at(i);
                const Net& pnet = child.nets.at(port);
                if (!conn.expr) continue; // explicitly unconnected
                if (pnet.direction == 1) {
                    ContAssign ca;
                    ca.lhs.parts.push_back({prefix + port, nullptr, false, 0, 0});
                    ca.rhs = conn.expr;
                    ca.line = inst.line;
                    out.assigns.push_back(std::move(ca));
                } else {
                    if (conn.expr->kind != Expr::Kind::Ident &&
                        conn.expr->kind != Expr::Kind::Index &&
                        conn.expr->kind != Expr::Kind::Slice)
                        throw MvError(src.name, inst.line,
                                      "output port '" + port + "' must connect to a signal");
                    ContAssign ca;
                    LValuePart part;
                    part.name = conn.expr->name;
                    part.index = conn.expr->kind == Expr::Kind::Index ? conn.expr->a : nullptr;
                    part.has_slice = conn.expr->kind == Expr::Kind::Slice;
                    part.msb = conn.expr->msb;
                    part.lsb = conn.expr->lsb;
                    ca.lhs.parts.push_back(std::move(part));
                    auto ref = std::make_shared<Expr>();
                    ref->kind = Expr::Kind::Ident;
                    ref->name = prefix + port;
                    ca.rhs = ref;
                    ca.line = inst.line;
                    out.assigns.push_back(std::move(ca));
                }
            }
        }
        return out;
    };

    return expand(it->second, 0);
}

// ---------------------------------------------------------------------------
// Engine
// ---------------------------------------------------------------------------

const Value& Engine::get(const std::string& name) const {
    auto it = vals_.find(name);
    if (it == vals_.end()) throw MvError(m_->name, 0, "no such net '" + name + "'");
    return it->second;
}

void Engine::init() {
    vals_.clear();
    for (const auto& [name, net] : m_->nets) vals_[name] = Value::zeros(net.width);
    for (const auto& [name, net] : m_->nets)
        if (net.init) write_net(name, eval(*net.init, net.width));
    finish_requested = false;
    fatal_requested = false;
    nba_.clear();
}

bool Engine::write_net(const std::string& name, const Value& v) {
    auto it = vals_.find(name);
    if (it == vals_.end()) throw MvError(m_->name, 0, "write to undeclared net '" + name + "'");
    Value resized = v.resized(it->second.width);
    if (it->second == resized) return false;
    it->second = std::move(resized);
    return true;
}

int Engine::lvalue_width(const LValue& lv) const {
    int total = 0;
    for (const auto& part : lv.parts) {
        if (part.index)
            total += 1;
        else if (part.has_slice)
            total += std::abs(part.msb - part.lsb) + 1;
        else
            total += get(part.name).width;
    }
    return total;
}

bool Engine::write_lvalue(const LValue& lv, const Value& v) {
    // Concat targets consume MSB-first; compute each part's width first.
    int total = 0;
    std::vector<int> widths;
    for (const auto& part : lv.parts) {
        int w;
        if (part.index)
            w = 1;
        else if (part.has_slice)
            w = std::abs(part.msb - part.lsb) + 1;
        else
            w = get(part.name).width;
        widths.push_back(w);
        total += w;
    }
    Value padded = v.resized(total);

    bool changed = false;
    int consumed = 0; // from the MSB side
    for (size_t i = 0; i < lv.parts.size(); ++i) {
        const auto& part = lv.parts[i];
        int w = widths[i];
        int lo = total - consumed - w;
        Value slice = Value::zeros(w);
        for (int k = 0; k < w; ++k) slice.bits[static_cast<size_t>(k)] = padded.bits[static_cast<size_t>(lo + k)];
        consumed += w;

        if (part.index) {
            Value cur = get(part.name);
            long idx = static_cast<long>(eval(*part.index).to_uint());
            if (idx >= 0 && idx < cur.width) {
                Value next = cur;
                next.bits[static_cast<size_t>(idx)] = slice.bits[0];
                changed |= write_net(part.name, next);
            }
        } else if (part.has_slice) {
            Value cur = get(part.name);
            int lo_bit = std::min(part.msb, part.lsb);
            Value next = cur;
            for (int k = 0; k < w && lo_bit + k < cur.width; ++k)
                next.bits[static_cast<size_t>(lo_bit + k)] = slice.bits[static_cast<size_t>(k)];
            changed |= write_net(part.name, next);
        } else {
            changed |= write_net(part.name, slice);
        }
    }
    return changed;
}

int Engine::expr_width(const Expr& e) const {
    switch (e.kind) {
    case Expr::Kind::Number:
        return e.number.width;
    case Expr::Kind::Ident:
        return get(e.name).width;
    case Expr::Kind::Index:
        return 1;
    case Expr::Kind::Slice:
        return std::abs(e.msb - e.lsb) + 1;
    case Expr::Kind::Concat: {
        int total = 0;
        for (const auto& p : e.parts) total += expr_width(*p);
        return total;
    }
    case Expr::Kind::Repeat:
        return static_cast<int>(std::max(0L, e.repeat_count)) * expr_width(*e.a);
    case Expr::Kind::Ternary:
        return std::max(expr_width(*e.b), expr_width(*e.c));
    case Expr::Kind::Unary:
        if (e.op == "!" || e.op == "&" || e.op == "|" || e.op == "^") return 1;
        return expr_width(*e.a);
    case Expr::Kind::Binary:
        if (e.op == "&&" || e.op == "||" || e.op == "==" || e.op == "!=" || e.op == "===" ||
            e.op == "!==" || e.op == "<" || e.op == "<=" || e.op == ">" || e.op == ">=")
            return 1;
        if (e.op == "<<" || e.op == ">>" || e.op == "<<<" || e.op == ">>>")
            return expr_width(*e.a);
        return std::max(expr_width(*e.a), expr_width(*e.b));
    }
    return 1;
}

Value Engine::eval(const Expr& e, int context_width) const {
    switch (e.kind) {
    case Expr::Kind::Number:
        return e.number;
    case Expr::Kind::Ident:
        return get(e.name);
    case Expr::Kind::Index: {
        const Value& base = get(e.name);
        long idx = static_cast<long>(eval(*e.a).to_uint());
        Value out = Value::zeros(1);
        if (idx >= 0 && idx < base.width) out.bits[0] = base.bits[static_cast<size_t>(idx)];
        return out;
    }
    case Expr::Kind::Slice: {
        const Value& base = get(e.name);
        int lo = std::min(e.msb, e.lsb);
        int w = std::abs(e.msb - e.lsb) + 1;
        Value out = Value::zeros(w);
        for (int k = 0; k < w && lo + k < base.width; ++k)
            out.bits[static_cast<size_t>(k)] = base.bits[static_cast<size_t>(lo + k)];
        return out;
    }
    case Expr::Kind::Concat: {
        // Parts are MSB-first and self-determined.
        int total = 0;
        std::vector<Value> vals;
        for (const auto& p : e.parts) {
            vals.push_back(eval(*p));
            total += vals.back().width;
        }
        Value out = Value::zeros(total);
        int pos = total;
        for (const auto& v : vals) {
            pos -= v.width;
            for (int k = 0; k < v.width; ++k)
                out.bits[static_cast<size_t>(pos + k)] = v.bits[static_cast<size_t>(k)];
        }
        return out;
    }
    case Expr::Kind::Repeat: {
        Value unit = eval(*e.a);
        long n = std::max(0L, e.repeat_count);
        Value out = Value::zeros(static_cast<int>(n) * unit.width);
        for (long r = 0; r < n; ++r)
            for (int k = 0; k < unit.width; ++k)
                out.bits[static_cast<size_t>(r * unit.width + k)] =
                    unit.bits[static_cast<size_t>(k)];
        return out;
    }
    case Expr::Kind::Ternary:
        return eval(*e.a).any() ? eval(*e.b, context_width) : eval(*e.c, context_width);
    case Expr::Kind::Unary: {
        if (e.op == "!") return Value::from_uint(eval(*e.a).any() ? 0 : 1, 1);
        if (e.op == "~" || e.op == "-" || e.op == "+") {
            int w = std::max(context_width, expr_width(e));
            Value a = eval(*e.a, w).resized(w);
            if (e.op == "+") return a;
            if (e.op == "~") {
                for (auto& b : a.bits) b = static_cast<uint8_t>(b ? 0 : 1);
                return a;
            }
            return Value::from_uint(~a.to_uint() + 1, w);
        }
        // Reductions are self-determined.
        Value a = eval(*e.a);
        uint8_t acc = e.op == "&" ? 1 : 0;
        for (uint8_t b : a.bits) {
            if (e.op == "&") acc = static_cast<uint8_t>(acc & b);
            if (e.op == "|") acc = static_cast<uint8_t>(acc | b);
            if (e.op == "^") acc = static_cast<uint8_t>(acc ^ b);
        }
        return Value::from_uint(acc, 1);
    }
    case Expr::Kind::Binary: {
        if (e.op == "&&")
            return Value::from_uint(eval(*e.a).any() && eval(*e.b).any() ? 1 : 0, 1);
        if (e.op == "||")
            return Value::from_uint(eval(*e.a).any() || eval(*e.b).any() ? 1 : 0, 1);

        if (e.op == "==" || e.op == "===" || e.op == "!=" || e.op == "!==" || e.op == "<" ||
            e.op == "<=" || e.op == ">" || e.op == ">=") {
            // Comparison operands extend to their own common width.
            int w = std::max(expr_width(*e.a), expr_width(*e.b));
            Value a = eval(*e.a, w).resized(w);
            Value b = eval(*e.b, w).resized(w);
            bool r;
            if (e.op == "==" || e.op == "===") r = a == b;
            else if (e.op == "!=" || e.op == "!==") r = !(a == b);
            else if (e.op == "<") r = a.to_uint() < b.to_uint();
            else if (e.op == "<=") r = a.to_uint() <= b.to_uint();
            else if (e.op == ">") r = a.to_uint() > b.to_uint();
            else r = a.to_uint() >= b.to_uint();
            return Value::from_uint(r ? 1 : 0, 1);
        }

        if (e.op == "<<" || e.op == "<<<" || e.op == ">>" || e.op == ">>>") {
            int w = std::max(context_width, expr_width(*e.a));
            Value a = eval(*e.a, w).resized(w);
            long sh = static_cast<long>(eval(*e.b).to_uint());
            Value out = Value::zeros(w);
            bool left = e.op == "<<" || e.op == "<<<";
            for (int i = 0; i < w; ++i) {
                long src = left ? i - sh : i + sh;
                if (src >= 0 && src < w)
                    out.bits[static_cast<size_t>(i)] = a.bits[static_cast<size_t>(src)];
            }
            return out;
        }

        // Arithmetic and bitwise: context width propagates into operands.
        int w = std::max(context_width, expr_width(e));
        Value a = eval(*e.a, w).resized(w);
        Value b = eval(*e.b, w).resized(w);

        if (e.op == "&" || e.op == "|" || e.op == "^" || e.op == "~^" || e.op == "^~") {
            Value out = Value::zeros(w);
            for (int i = 0; i < w; ++i) {
                uint8_t x = a.bits[static_cast<size_t>(i)], y = b.bits[static_cast<size_t>(i)];
                uint8_t r = 0;
                if (e.op == "&") r = static_cast<uint8_t>(x & y);
                else if (e.op == "|") r = static_cast<uint8_t>(x | y);
                else if (e.op == "^") r = static_cast<uint8_t>(x ^ y);
                else r = static_cast<uint8_t>(1 ^ (x ^ y));
                out.bits[static_cast<size_t>(i)] = r;
            }
            return out;
        }

        if (w <= 64) {
            uint64_t ua = a.to_uint(), ub = b.to_uint();
            if (e.op == "+") return Value::from_uint(ua + ub, w);
            if (e.op == "-") return Value::from_uint(ua - ub, w);
            if (e.op == "*") return Value::from_uint(ua * ub, w);
            if (e.op == "/") return Value::from_uint(ub == 0 ? 0 : ua / ub, w);
            if (e.op == "%") return Value::from_uint(ub == 0 ? 0 : ua % ub, w);
        } else if (e.op == "+" || e.op == "-") {
            // Wide add/sub bit by bit.
            Value out = Value::zeros(w);
            int carry = e.op == "-" ? 1 : 0;
            for (int i = 0; i < w; ++i) {
                int x = a.bits[static_cast<size_t>(i)];
                int y = b.bits[static_cast<size_t>(i)];
                if (e.op == "-") y = 1 - y;
                int s = x + y + carry;
                out.bits[static_cast<size_t>(i)] = static_cast<uint8_t>(s & 1);
                carry = s >> 1;
            }
            return out;
        }
        throw MvError(m_->name, e.line, "unsupported operator '" + e.op + "' at width " +
                                            std::to_string(w));
    }
    }
    throw MvError(m_->name, e.line, "unhandled expression kind");
}

std::string format_value_for(char spec, const Value& v) {
    switch (spec) {
    case 'd': return std::to_string(v.to_uint());
    case 'b': return v.to_bitstring();
    case 'h':
    case 'x': return v.to_hex();
    case 'c': return std::string(1, static_cast<char>(v.to_uint() & 0xff));
    default: return std::to_string(v.to_uint());
    }
}

std::string Engine::format_display(const Stmt& s) const {
    std::string out;
    size_t arg_i = 0;
    for (size_t i = 0; i < s.format.size(); ++i) {
        char c = s.format[i];
        if (c != '%') {
            out += c;
            continue;
        }
        if (i + 1 >= s.format.size()) break;
        ++i;
        while (i < s.format.size() && std::isdigit(static_cast<unsigned char>(s.format[i]))) ++i;
        char spec = s.format[i];
        if (spec == '%') {
            out += '%';
            continue;
        }
        if (arg_i < s.args.size()) out += format_value_for(spec, eval(*s.args[arg_i++]));
    }
    // Bare-argument form: $display(a, b);
    if (s.format.empty()) {
        for (size_t i = 0; i < s.args.size(); ++i) {
            if (i) out += " ";
            out += std::to_string(eval(*s.args[i]).to_uint());
        }
    }
    return out;
}

void Engine::exec(const Stmt& s) {
    if (finish_requested || fatal_requested) return;
    switch (s.kind) {
    case Stmt::Kind::Block:
        for (const auto& b : s.block) exec(*b);
        return;
    case Stmt::Kind::If:
        if (eval(*s.cond).any()) {
            if (s.then_branch) exec(*s.then_branch);
        } else if (s.else_branch) {
            exec(*s.else_branch);
        }
        return;
    case Stmt::Kind::AssignB:
        write_lvalue(s.lhs, eval(*s.rhs, lvalue_width(s.lhs)));
        return;
    case Stmt::Kind::AssignNB:
        nba_.emplace_back(s.lhs, eval(*s.rhs, lvalue_width(s.lhs)));
        return;
    case Stmt::Kind::Delay:
        throw MvError(m_->name, s.line, "delay control is not allowed in this context");
    case Stmt::Kind::Display: {
        std::string text = format_display(s);
        if (s.newline) text += "\n";
        if (display_sink) *display_sink += text;
        return;
    }
    case Stmt::Kind::Finish:
        finish_requested = true;
        return;
    case Stmt::Kind::Fatal: {
        std::string text = format_display(s);
        if (display_sink) *display_sink += "FATAL: " + text + "\n";
        fatal_requested = true;
        return;
    }
    case Stmt::Kind::Null:
        return;
    }
}

void Engine::apply_nba() {
    auto queue = std::move(nba_);
    nba_.clear();
    for (auto& [lhs, value] : queue) write_lvalue(lhs, value);
}

void Engine::settle() {
    for (int iter = 0; iter < 1000; ++iter) {
        bool changed = false;
        for (const auto& a : m_->assigns)
            changed |= write_lvalue(a.lhs, eval(*a.rhs, lvalue_width(a.lhs)));
        for (const auto& ab : m_->always_blocks) {
            if (ab.trigger != AlwaysBlock::Trigger::Star) continue;
            // Blocking assigns inside @* bodies write immediately; detect
            // convergence via the values they produce.
            auto before = vals_;
            exec(*ab.body);
            apply_nba();
            if (vals_ != before) changed = true;
        }
        if (!changed) return;
    }
    throw MvError(m_->name, 0, "combinational logic does not converge");
}

void Engine::step_edges(const std::map<std::string, Value>& prev,
                        const std::string& force_clock_edge) {
    auto rose = [&](const std::string& sig) {
        auto p = prev.find(sig);
        auto c = vals_.find(sig);
        if (p == prev.end() || c == vals_.end()) return false;
        return !p->second.any() && c->second.any();
    };
    auto fell = [&](const std::string& sig) {
        auto p = prev.find(sig);
        auto c = vals_.find(sig);
        if (p == prev.end() || c == vals_.end()) return false;
        return p->second.any() && !c->second.any();
    };

    bool fired = false;
    for (const auto& ab : m_->always_blocks) {
        if (ab.trigger != AlwaysBlock::Trigger::EdgeList) continue;
        bool trigger = false;
        for (const auto& e : ab.edges) {
            if (!force_clock_edge.empty() && e.signal == force_clock_edge && e.posedge) {
                trigger = true;
                break;
            }
            if (e.posedge ? rose(e.signal) : fell(e.signal)) {
                trigger = true;
                break;
            }
        }
        if (trigger) {
            exec(*ab.body);
            fired = true;
        }
    }
    if (fired) {
        apply_nba();
        settle();
    }
}

} // namespace microv
