// SPDX-License-Identifier: Apache-2.0

#include "mv.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace microv {

namespace {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

struct Token {
    enum class Kind { Ident, Number, String, Punct, End };
    Kind kind = Kind::End;
    std::string text;
    int line = 0;
};

class Lexer {
public:
    Lexer(const std::string& src, std::string file) : src_(src), file_(std::move(file)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments();
            if (pos_ >= src_.size()) break;
            char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
                out.push_back(lex_ident());
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '\'') {
                out.push_back(lex_number());
            } else if (c == '"') {
                out.push_back(lex_string());
            } else {
                out.push_back(lex_punct());
            }
        }
        out.push_back({Token::Kind::End, "", line_});
        return out;
    }

private:
    void skip_space_and_comments() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '*') {
                pos_ += 2;
                while (pos_ + 1 < src_.size() && !(src_[pos_] == '*' && src_[pos_ + 1] == '/')) {
                    if (src_[pos_] == '\n') ++line_;
                    ++pos_;
                }
                pos_ = pos_ + 2 <= src_.size() ? pos_ + 2 : src_.size();
            } else if (c == '`') {
                // Compiler directives (`timescale etc.): skip the line.
                while (pos_ < src_.size() && src_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    Token lex_ident() {
        int line = line_;
        size_t start = pos_;
        ++pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' ||
                src_[pos_] == '$'))
            ++pos_;
        return {Token::Kind::Ident, src_.substr(start, pos_ - start), line};
    }

    Token lex_number() {
        int line = line_;
        size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '\'') {
            ++pos_;
            if (pos_ < src_.size() && (src_[pos_] == 's' || src_[pos_] == 'S')) ++pos_;
            if (pos_ < src_.size()) ++pos_; // base char
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
        }
        return {Token::Kind::Number, src_.substr(start, pos_ - start), line};
    }

    Token lex_string() {
        int line = line_;
        ++pos_; // opening quote
        std::string text;
        while (pos_ < src_.size() && src_[pos_] != '"') {
            char c = src_[pos_++];
            if (c == '\\' && pos_ < src_.size()) {
                char e = src_[pos_++];
                switch (e) {
                case 'n': text += '\n'; break;
                case 't': text += '\t'; break;
                case '\\': text += '\\'; break;
                case '"': text += '"'; break;
                default: text += e; break;
                }
            } else {
                if (c == '\n') ++line_;
                text += c;
            }
        }
        if (pos_ < src_.size()) ++pos_; // closing quote
        return {Token::Kind::String, text, line};
    }

    Token lex_punct() {
        int line = line_;
        static const char* two_or_three[] = {"===", "!==", "<<<", ">>>", "<=", ">=", "==",
                                             "!=",  "&&",  "||",  "<<",  ">>", "~^", "^~"};
        for (const char* p : two_or_three) {
            size_t n = std::strlen(p);
            if (src_.compare(pos_, n, p) == 0) {
                pos_ += n;
                return {Token::Kind::Punct, p, line};
            }
        }
        std::string one(1, src_[pos_++]);
        return {Token::Kind::Punct, one, line};
    }

    const std::string& src_;
    std::string file_;
    size_t pos_ = 0;
    int line_ = 1;
};

Value parse_number_literal(const std::string& text, const std::string& file, int line) {
    auto tick = text.find('\'');
    if (tick == std::string::npos) {
        std::string digits;
        for (char c : text)
            if (c != '_') digits += c;
        uint64_t v = digits.empty() ? 0 : std::stoull(digits);
        return Value::from_uint(v, 32);
    }

    int width = 32;
    if (tick > 0) {
        std::string w;
        for (size_t i = 0; i < tick; ++i)
            if (text[i] != '_') w += text[i];
        width = std::stoi(w);
        if (width < 1 || width > 4096) throw MvError(file, line, "bad literal width in " + text);
    }
    size_t p = tick + 1;
    if (p < text.size() && (text[p] == 's' || text[p] == 'S')) ++p;
    if (p >= text.size()) throw MvError(file, line, "truncated literal " + text);
    char base = static_cast<char>(std::tolower(text[p]));
    ++p;
    std::string digits;
    for (size_t i = p; i < text.size(); ++i)
        if (text[i] != '_') digits += static_cast<char>(std::tolower(text[i]));
    if (digits.empty()) throw MvError(file, line, "literal has no digits: " + text);

    Value v = Value::zeros(width);
    if (base == 'd') {
        for (char c : digits)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw MvError(file, line, "bad decimal literal " + text);
        uint64_t u = std::stoull(digits);
        v = Value::from_uint(u, width);
    } else {
        int bits_per = base == 'b' ? 1 : base == 'o' ? 3 : base == 'h' ? 4 : -1;
        if (bits_per < 0) throw MvError(file, line, "unsupported literal base in " + text);
        int bit = 0;
        for (auto it = digits.rbegin(); it != digits.rend(); ++it) {
            char c = *it;
            int d;
            if (c == 'x' || c == 'z')
                d = 0; // two-state engine: x/z collapse to 0
            else if (c >= '0' && c <= '9')
                d = c - '0';
            else if (c >= 'a' && c <= 'f')
                d = 10 + (c - 'a');
            else
                throw MvError(file, line, "bad digit in literal " + text);
            for (int k = 0; k < bits_per && bit < width; ++k, ++bit)
                v.bits[static_cast<size_t>(bit)] = static_cast<uint8_t>((d >> k) & 1);
        }
    }
    return v;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
    Parser(std::vector<Token> toks, std::string file)
        : toks_(std::move(toks)), file_(std::move(file)) {}

    void parse_into(Design& design) {
        while (!at_end()) {
            expect_ident("module");
            Module m = parse_module();
            if (design.modules.count(m.name))
                throw err("duplicate module '" + m.name + "'");
            design.order.push_back(m.name);
            design.modules.emplace(m.name, std::move(m));
        }
    }

private:
    // -- token helpers --
    const Token& peek(int k = 0) const {
        size_t i = idx_ + static_cast<size_t>(k);
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    const Token& advance() { return toks_[idx_ < toks_.size() - 1 ? idx_++ : idx_]; }
    bool at_end() const { return peek().kind == Token::Kind::End; }
    bool check(const std::string& text) const { return peek().text == text; }
    bool check_kind(Token::Kind k) const { return peek().kind == k; }
    bool accept(const std::string& text) {
        if (check(text)) {
            advance();
            return true;
        }
        return false;
    }
    void expect(const std::string& text) {
        if (!accept(text)) throw err("expected '" + text + "', got '" + peek().text + "'");
    }
    void expect_ident(const std::string& kw) {
        if (peek().kind != Token::Kind::Ident || peek().text != kw)
            throw err("expected '" + kw + "', got '" + peek().text + "'");
        advance();
    }
    std::string ident() {
        if (peek().kind != Token::Kind::Ident)
            throw err("expected identifier, got '" + peek().text + "'");
        return advance().text;
    }
    MvError err(const std::string& msg) const { return MvError(file_, peek().line, msg); }

    // Model output is untrusted; cap recursion instead of crashing on
    // pathological nesting.
    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p_(p) {
            if (++p_.depth_ > 200) throw p_.err("expression or statement nesting too deep");
        }
        ~DepthGuard() { --p_.depth_; }
        Parser& p_;
    };

    // -- ranges and declarations --
    // Parses "[msb:lsb]", returning the width; only constant bounds.
    int parse_range() {
        expect("[");
        long msb = const_int();
        expect(":");
        long lsb = const_int();
        expect("]");
        return static_cast<int>((msb > lsb ? msb - lsb : lsb - msb) + 1);
    }

    long const_int() {
        bool neg = accept("-");
        if (peek().kind != Token::Kind::Number) throw err("expected constant integer");
        Value v = parse_number_literal(advance().text, file_, peek().line);
        long out = static_cast<long>(v.to_uint());
        return neg ? -out : out;
    }

    void declare_net(Module& m, const std::string& name, int width, bool is_reg, int dir,
                     ExprPtr init, int line) {
        auto it = m.nets.find(name);
        if (it == m.nets.end()) {
            Net n;
            n.name = name;
            n.width = width;
            n.is_reg = is_reg;
            n.direction = dir;
            n.init = std::move(init);
            n.line = line;
            m.nets.emplace(name, std::move(n));
            return;
        }
        // Header port redeclared in the body ("output reg [9:0] q" twice is
        // rejected, but "output q; reg q;" merges).
        Net& n = it->second;
        if (width != 1 && n.width != 1 && width != n.width)
            throw err("conflicting widths for '" + name + "'");
        if (width != 1) n.width = width;
        n.is_reg = n.is_reg || is_reg;
        if (dir != 0) {
            if (n.direction != 0 && n.direction != dir)
                throw err("conflicting directions for '" + name + "'");
            n.direction = dir;
        }
        if (init) n.init = std::move(init);
    }

    Module parse_module() {
        Module m;
        m.line = peek().line;
        m.name = ident();

        if (accept("(")) {
            if (!check(")")) parse_port_list(m);
            expect(")");
        }
        expect(";");

        while (!check("endmodule")) {
            if (at_end()) throw err("unexpected end of file inside module " + m.name);
            parse_item(m);
        }
        expect("endmodule");
        return m;
    }

    void parse_port_list(Module& m) {
        int dir = 0;
        bool is_reg = false;
        int width = 1;
        while (true) {
            if (check("input") || check("output") || check("inout")) {
                std::string d = advance().text;
                if (d == "inout") throw err("inout ports are not supported");
                dir = d == "input" ? 1 : 2;
                is_reg = false;
                width = 1;
                if (accept("wire")) {
                } else if (accept("reg")) {
                    is_reg = true;
                } else if (accept("logic")) {
                    is_reg = true;
                }
                if (check("[")) width = parse_range();
            }
            std::string name = ident();
            m.port_order.push_back(name);
            declare_net(m, name, width, is_reg, dir, nullptr, peek().line);
            if (!accept(",")) break;
        }
    }

    void parse_item(Module& m) {
        int line = peek().line;
        if (check("input") || check("output")) {
            std::string d = advance().text;
            int dir = d == "input" ? 1 : 2;
            bool is_reg = accept("reg") || accept("logic");
            accept("wire");
            int width = check("[") ? parse_range() : 1;
            do {
                std::string name = ident();
                declare_net(m, name, width, is_reg, dir, nullptr, line);
                if (!m.nets[name].direction) m.nets[name].direction = dir;
            } while (accept(","));
            expect(";");
        } else if (check("wire") || check("reg") || check("logic") || check("integer")) {
            std::string kw = advance().text;
            bool is_reg = kw != "wire";
            int width = kw == "integer" ? 32 : (check("[") ? parse_range() : 1);
            do {
                std::string name = ident();
                ExprPtr init;
                if (accept("=")) init = parse_expr();
                declare_net(m, name, width, is_reg, 0, std::move(init), line);
            } while (accept(","));
            expect(";");
        } else if (accept("assign")) {
            ContAssign ca;
            ca.line = line;
            ca.lhs = parse_lvalue();
            expect("=");
            ca.rhs = parse_expr();
            expect(";");
            m.assigns.push_back(std::move(ca));
        } else if (accept("always")) {
            m.always_blocks.push_back(parse_always(line));
        } else if (accept("initial")) {
            InitialBlock ib;
            ib.line = line;
            ib.body = parse_stmt();
            m.initials.push_back(std::move(ib));
        } else if (check("parameter") || check("localparam") || check("genvar") ||
                   check("generate") || check("function") || check("task")) {
            throw err("unsupported construct '" + peek().text + "'");
        } else if (peek().kind == Token::Kind::Ident && peek(1).kind == Token::Kind::Ident &&
                   peek(2).text == "(") {
            Instance inst;
            inst.line = line;
            inst.module_name = ident();
            inst.instance_name = ident();
            expect("(");
            if (!check(")")) {
                do {
                    Connection c;
                    if (accept(".")) {
                        c.port = ident();
                        expect("(");
                        if (!check(")")) c.expr = parse_expr();
                        expect(")");
                    } else {
                        c.expr = parse_expr();
                    }
                    inst.conns.push_back(std::move(c));
                } while (accept(","));
            }
            expect(")");
            expect(";");
            m.instances.push_back(std::move(inst));
        } else {
            throw err("unexpected token '" + peek().text + "' in module body");
        }
    }

    AlwaysBlock parse_always(int line) {
        AlwaysBlock ab;
        ab.line = line;
        if (accept("@")) {
            if (accept("*")) {
                ab.trigger = AlwaysBlock::Trigger::Star;
            } else {
                expect("(");
                if (accept("*")) {
                    ab.trigger = AlwaysBlock::Trigger::Star;
                } else {
                    bool any_edge = false;
                    do {
                        EdgeSense sense;
                        if (accept("posedge")) {
                            sense.posedge = true;
                            any_edge = true;
                        } else if (accept("negedge")) {
                            sense.posedge = false;
                            any_edge = true;
                        } else {
                            sense.posedge = true; // plain signal: level sensitivity
                        }
                        sense.signal = ident();
                        ab.edges.push_back(std::move(sense));
                    } while (accept("or") || accept(","));
                    ab.trigger = any_edge ? AlwaysBlock::Trigger::EdgeList
                                          : AlwaysBlock::Trigger::Star;
                    if (!any_edge) ab.edges.clear();
                }
                expect(")");
            }
        } else if (accept("#")) {
            ab.trigger = AlwaysBlock::Trigger::Periodic;
            ab.period = const_int();
            if (ab.period <= 0) throw err("always #period must be positive");
        } else {
            throw err("always block needs @(...) or #delay");
        }
        ab.body = parse_stmt();
        return ab;
    }

    // -- statements --
    StmtPtr parse_stmt() {
        DepthGuard guard(*this);
        auto s = std::make_shared<Stmt>();
        s->line = peek().line;

        if (accept("begin")) {
            s->kind = Stmt::Kind::Block;
            while (!accept("end")) {
                if (at_end()) throw err("unexpected end of file inside begin/end");
                s->block.push_back(parse_stmt());
            }
            return s;
        }
        if (accept("if")) {
            s->kind = Stmt::Kind::If;
            expect("(");
            s->cond = parse_expr();
            expect(")");
            s->then_branch = parse_stmt();
            if (accept("else")) s->else_branch = parse_stmt();
            return s;
        }
        if (accept("#")) {
            s->kind = Stmt::Kind::Delay;
            s->delay = const_int();
            if (!accept(";")) s->then_branch = parse_stmt();
            return s;
        }
        if (check("$display") || check("$write")) {
            s->newline = advance().text == "$display";
            s->kind = Stmt::Kind::Display;
            expect("(");
            if (check_kind(Token::Kind::String)) {
                s->format = advance().text;
                while (accept(",")) s->args.push_back(parse_expr());
            } else if (!check(")")) {
                do {
                    s->args.push_back(parse_expr());
                } while (accept(","));
            }
            expect(")");
            expect(";");
            return s;
        }
        if (accept("$finish")) {
            s->kind = Stmt::Kind::Finish;
            if (accept("(")) {
                const_int();
                expect(")");
            }
            expect(";");
            return s;
        }
        if (check("$fatal") || check("$error") || check("$stop")) {
            advance();
            s->kind = Stmt::Kind::Fatal;
            if (accept("(")) {
                if (peek().kind == Token::Kind::Number) const_int();
                if (accept(",") || check_kind(Token::Kind::String)) {
                    if (check_kind(Token::Kind::String)) s->format = advance().text;
                    while (accept(",")) s->args.push_back(parse_expr());
                }
                expect(")");
            }
            expect(";");
            return s;
        }
        if (accept(";")) {
            s->kind = Stmt::Kind::Null;
            return s;
        }

        // Assignment: lvalue then '=' or '<='.
        s->lhs = parse_lvalue();
        if (accept("<=")) {
            s->kind = Stmt::Kind::AssignNB;
        } else if (accept("=")) {
            s->kind = Stmt::Kind::AssignB;
        } else {
            throw err("expected '=' or '<=' after lvalue");
        }
        s->rhs = parse_expr();
        expect(";");
        return s;
    }

    LValuePart parse_lvalue_part() {
        LValuePart part;
        part.name = ident();
        if (accept("[")) {
            ExprPtr first = parse_expr();
            if (accept(":")) {
                if (first->kind != Expr::Kind::Number)
                    throw err("slice bounds must be constant");
                part.has_slice = true;
                part.msb = static_cast<int>(first->number.to_uint());
                part.lsb = static_cast<int>(const_int());
            } else {
                part.index = first;
            }
            expect("]");
        }
        return part;
    }

    LValue parse_lvalue() {
        LValue lv;
        if (accept("{")) {
            do {
                lv.parts.push_back(parse_lvalue_part());
            } while (accept(","));
            expect("}");
        } else {
            lv.parts.push_back(parse_lvalue_part());
        }
        return lv;
    }

    // -- expressions (precedence climbing) --
    ExprPtr parse_expr() { return parse_ternary(); }

    ExprPtr parse_ternary() {
        ExprPtr cond = parse_binary(0);
        if (!accept("?")) return cond;
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Ternary;
        e->line = peek().line;
        e->a = cond;
        e->b = parse_expr();
        expect(":");
        e->c = parse_expr();
        return e;
    }

    struct Level {
        std::vector<const char*> ops;
    };

    static const std::vector<Level>& levels() {
        static const std::vector<Level> lv = {
            {{"||"}},
            {{"&&"}},
            {{"|"}},
            {{"^", "~^", "^~"}},
            {{"&"}},
            {{"==", "!=", "===", "!=="}},
            {{"<", "<=", ">", ">="}},
            {{"<<", ">>", "<<<", ">>>"}},
            {{"+", "-"}},
            {{"*", "/", "%"}},
        };
        return lv;
    }

    ExprPtr parse_binary(size_t level) {
        if (level >= levels().size()) return parse_unary();
        ExprPtr left = parse_binary(level + 1);
        while (true) {
            bool matched = false;
            for (const char* op : levels()[level].ops) {
                if (check(op)) {
                    advance();
                    auto e = std::make_shared<Expr>();
                    e->kind = Expr::Kind::Binary;
                    e->line = peek().line;
                    e->op = op;
                    e->a = left;
                    e->b = parse_binary(level + 1);
                    left = e;
                    matched = true;
                    break;
                }
            }
            if (!matched) return left;
        }
    }

    ExprPtr parse_unary() {
        for (const char* op : {"!", "~", "-", "+", "&", "|", "^"}) {
            if (check(op)) {
                advance();
                auto e = std::make_shared<Expr>();
                e->kind = Expr::Kind::Unary;
                e->line = peek().line;
                e->op = op;
                e->a = parse_unary();
                return e;
            }
        }
        return parse_primary();
    }

    ExprPtr parse_primary() {
        DepthGuard guard(*this);
        auto e = std::make_shared<Expr>();
        e->line = peek().line;

        if (peek().kind == Token::Kind::Number) {
            e->kind = Expr::Kind::Number;
            e->number = parse_number_literal(advance().text, file_, e->line);
            return e;
        }
        if (accept("(")) {
            ExprPtr inner = parse_expr();
            expect(")");
            return inner;
        }
        if (accept("{")) {
            // Concat or replication {N{expr}}.
            ExprPtr first = parse_expr();
            if (check("{") && first->kind == Expr::Kind::Number) {
                advance();
                e->kind = Expr::Kind::Repeat;
                e->repeat_count = static_cast<long>(first->number.to_uint());
                e->a = parse_expr();
                expect("}");
                expect("}");
                return e;
            }
            e->kind = Expr::Kind::Concat;
            e->parts.push_back(first);
            while (accept(",")) e->parts.push_back(parse_expr());
            expect("}");
            return e;
        }
        if (peek().kind == Token::Kind::Ident) {
            std::string name = ident();
            if (accept("[")) {
                ExprPtr first = parse_expr();
                if (accept(":")) {
                    if (first->kind != Expr::Kind::Number)
                        throw err("slice bounds must be constant");
                    e->kind = Expr::Kind::Slice;
                    e->name = name;
                    e->msb = static_cast<int>(first->number.to_uint());
                    e->lsb = static_cast<int>(const_int());
                } else {
                    e->kind = Expr::Kind::Index;
                    e->name = name;
                    e->a = first;
                }
                expect("]");
                return e;
            }
            e->kind = Expr::Kind::Ident;
            e->name = name;
            return e;
        }
        throw err("unexpected token '" + peek().text + "' in expression");
    }

    std::vector<Token> toks_;
    std::string file_;
    size_t idx_ = 0;
    int depth_ = 0;
};

} // namespace

void parse_into(Design& design, const std::string& text, const std::string& filename) {
    Lexer lexer(text, filename);
    Parser parser(lexer.run(), filename);
    parser.parse_into(design);
}

Design parse_source(const std::string& text, const std::string& filename) {
    Design d;
    parse_into(d, text, filename);
    return d;
}

Design parse_files(const std::vector<std::string>& paths) {
    Design d;
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw MvError(p, 0, "cannot open file");
        std::ostringstream ss;
        ss << in.rdbuf();
        parse_into(d, ss.str(), p);
    }
    return d;
}

} // namespace microv
