#pragma once

// A small expression IR for private programs: an s-expression front form,
// static rejection of unsupported constructs (branches on private data), the
// rewrite passes (for-loop vectorization, common-factor extraction,
// common-expression vectorization), a protocol-cost model, and an interpreter
// that drives the engine.

#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "quadshare/derived.hpp"
#include "quadshare/tensor_ops.hpp"

namespace quadshare::ir {

enum class Kind {
    Const,     // cval
    Priv,      // name, shape: private input declaration/reference
    Pub,       // name, shape: public input
    Var,       // name: reference to an assigned or declared variable
    Add,
    Sub,
    Mul,
    Dot,
    Transpose,
    Pack,      // scalar expressions packed into a vector
    Index,     // kids[0] = Var base; index = index_var (+ offset) or literal
    Assign,    // kids[0] = target (Var or Index), kids[1] = value
    Loop,      // loop_var, [lo, hi), kids = body statements
    Branch,    // kids[0] = cond, then kids[1..1+then_count), else the rest
    Reveal,    // kids[0] = expr
};

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;
using Program = std::vector<ExprPtr>;

struct Expr {
    Kind kind;
    double cval = 0.0;
    std::string name;      // Priv/Pub/Var/Loop variable
    Shape shape;           // Priv/Pub declared shape
    std::string index_var; // Index: loop variable name, empty for literals
    long index_lit = 0;    // Index: literal value, or offset added to index_var
    long lo = 0, hi = 0;   // Loop bounds
    std::size_t then_count = 0;
    std::vector<ExprPtr> kids;
};

inline ExprPtr make(Kind k) { return std::make_shared<Expr>(Expr{k}); }

inline ExprPtr make_const(double v) {
    ExprPtr e = make(Kind::Const);
    e->cval = v;
    return e;
}

inline ExprPtr make_var(std::string name) {
    ExprPtr e = make(Kind::Var);
    e->name = std::move(name);
    return e;
}

inline ExprPtr make_binary(Kind k, ExprPtr a, ExprPtr b) {
    ExprPtr e = make(k);
    e->kids = {std::move(a), std::move(b)};
    return e;
}

// ---- printing --------------------------------------------------------------------

inline void print_expr(std::ostream& os, const Expr& e) {
    switch (e.kind) {
        case Kind::Const: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << e.cval;
            os << "(const " << tmp.str() << ")";
            return;
        }
        case Kind::Priv:
        case Kind::Pub: {
            os << (e.kind == Kind::Priv ? "(priv " : "(pub ") << e.name << " (";
            for (std::size_t i = 0; i < e.shape.rank(); ++i) os << (i ? " " : "") << e.shape.dims[i];
            os << "))";
            return;
        }
        case Kind::Var: os << e.name; return;
        case Kind::Index:
            os << "(idx ";
            print_expr(os, *e.kids[0]);
            os << " ";
            if (e.index_var.empty()) os << e.index_lit;
            else if (e.index_lit == 0) os << e.index_var;
            else os << "(" << (e.index_lit > 0 ? "+" : "-") << " " << e.index_var << " "
                    << (e.index_lit > 0 ? e.index_lit : -e.index_lit) << ")";
            os << ")";
            return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Dot:
        case Kind::Transpose:
        case Kind::Pack:
        case Kind::Assign:
        case Kind::Reveal: {
            const char* names[] = {"add",  "sub",    "mul",  "dot",    "transpose", "pack",
                                   "idx",  "assign", "loop", "branch", "reveal"};
            int idx = int(e.kind) - int(Kind::Add);
            os << "(" << names[idx];
            for (const auto& k : e.kids) {
                os << " ";
                print_expr(os, *k);
            }
            os << ")";
            return;
        }
        case Kind::Loop:
            os << "(loop " << e.name << " " << e.lo << " " << e.hi;
            for (const auto& k : e.kids) {
                os << " ";
                print_expr(os, *k);
            }
            os << ")";
            return;
        case Kind::Branch:
            os << "(branch ";
            print_expr(os, *e.kids[0]);
            os << " (";
            for (std::size_t i = 0; i < e.then_count; ++i) {
                if (i) os << " ";
                print_expr(os, *e.kids[1 + i]);
            }
            os << ") (";
            for (std::size_t i = 1 + e.then_count; i < e.kids.size(); ++i) {
                if (i > 1 + e.then_count) os << " ";
                print_expr(os, *e.kids[i]);
            }
            os << "))";
            return;
    }
}

inline std::string to_text(const Expr& e) {
    std::ostringstream os;
    print_expr(os, e);
    return os.str();
}

inline std::string to_text(const Program& p) {
    std::ostringstream os;
    for (const auto& s : p) {
        print_expr(os, *s);
        os << "\n";
    }
    return os.str();
}

inline bool structurally_equal(const Expr& a, const Expr& b) { return to_text(a) == to_text(b); }
inline bool structurally_equal(const Program& a, const Program& b) { return to_text(a) == to_text(b); }

// ---- parsing ---------------------------------------------------------------------

namespace detail {

struct SNode {
    bool is_atom = false;
    std::string atom;
    std::vector<SNode> items;
};

class SexprParser {
public:
    explicit SexprParser(const std::string& text) : text_(text) {}

    std::vector<SNode> parse_all() {
        std::vector<SNode> out;
        skip_ws();
        while (pos_ < text_.size()) {
            out.push_back(parse_node());
            skip_ws();
        }
        return out;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    SNode parse_node() {
        skip_ws();
        if (pos_ >= text_.size()) throw RejectionError("unexpected end of program text");
        if (text_[pos_] == '(') {
            ++pos_;
            SNode n;
            skip_ws();
            while (pos_ < text_.size() && text_[pos_] != ')') {
                n.items.push_back(parse_node());
                skip_ws();
            }
            if (pos_ >= text_.size()) throw RejectionError("missing ')'");
            ++pos_;
            return n;
        }
        if (text_[pos_] == ')') throw RejectionError("unexpected ')'");
        SNode n;
        n.is_atom = true;
        std::size_t start = pos_;
        while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != '#')
            ++pos_;
        n.atom = text_.substr(start, pos_ - start);
        return n;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
};

inline bool is_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

inline long to_long(const SNode& n, const char* what) {
    if (!n.is_atom || !is_number(n.atom)) throw RejectionError(std::string("expected integer for ") + what);
    return std::strtol(n.atom.c_str(), nullptr, 10);
}

inline ExprPtr build_expr(const SNode& n);

inline Shape build_shape(const SNode& n) {
    if (n.is_atom) throw RejectionError("expected a shape list");
    Shape s;
    for (const auto& d : n.items) s.dims.push_back(std::size_t(to_long(d, "shape dimension")));
    return s;
}

inline ExprPtr build_index(const SNode& n) {
    if (n.items.size() != 3)
        throw RejectionError("idx expects (idx base index)");
    ExprPtr base;
    if (n.items[1].is_atom) {
        base = make_var(n.items[1].atom);
    } else {
        base = build_expr(n.items[1]);
        if (base->kind != Kind::Index && base->kind != Kind::Priv && base->kind != Kind::Pub)
            throw RejectionError("idx base must be a variable, an input declaration, or another idx");
    }
    ExprPtr e = make(Kind::Index);
    e->kids.push_back(std::move(base));
    const SNode& ix = n.items[2];
    if (ix.is_atom) {
        if (is_number(ix.atom)) e->index_lit = std::strtol(ix.atom.c_str(), nullptr, 10);
        else e->index_var = ix.atom;
    } else {
        // (+ i 1) / (- i 1)
        if (ix.items.size() != 3 || !ix.items[0].is_atom || !ix.items[1].is_atom)
            throw RejectionError("idx offset expects (+|- var int)");
        long off = to_long(ix.items[2], "index offset");
        e->index_var = ix.items[1].atom;
        e->index_lit = ix.items[0].atom == "-" ? -off : off;
    }
    return e;
}

inline ExprPtr build_expr(const SNode& n) {
    if (n.is_atom) {
        if (is_number(n.atom)) return make_const(std::strtod(n.atom.c_str(), nullptr));
        return make_var(n.atom);
    }
    if (n.items.empty() || !n.items[0].is_atom) throw RejectionError("malformed form");
    const std::string& head = n.items[0].atom;
    auto arity = [&](std::size_t k, const char* what) {
        if (n.items.size() != k + 1) throw RejectionError(std::string(what) + ": wrong arity");
    };
    if (head == "const") {
        arity(1, "const");
        if (!n.items[1].is_atom || !is_number(n.items[1].atom)) throw RejectionError("const expects a number");
        return make_const(std::strtod(n.items[1].atom.c_str(), nullptr));
    }
    if (head == "priv" || head == "pub") {
        arity(2, head.c_str());
        if (!n.items[1].is_atom) throw RejectionError(head + " expects a name");
        ExprPtr e = make(head == "priv" ? Kind::Priv : Kind::Pub);
        e->name = n.items[1].atom;
        e->shape = build_shape(n.items[2]);
        return e;
    }
    if (head == "idx") return build_index(n);
    if (head == "add" || head == "sub" || head == "mul" || head == "dot") {
        arity(2, head.c_str());
        Kind k = head == "add" ? Kind::Add : head == "sub" ? Kind::Sub : head == "mul" ? Kind::Mul : Kind::Dot;
        return make_binary(k, build_expr(n.items[1]), build_expr(n.items[2]));
    }
    if (head == "transpose") {
        arity(1, "transpose");
        ExprPtr e = make(Kind::Transpose);
        e->kids.push_back(build_expr(n.items[1]));
        return e;
    }
    if (head == "pack") {
        if (n.items.size() < 3) throw RejectionError("pack expects at least two items");
        ExprPtr e = make(Kind::Pack);
        for (std::size_t i = 1; i < n.items.size(); ++i) e->kids.push_back(build_expr(n.items[i]));
        return e;
    }
    if (head == "assign") {
        arity(2, "assign");
        ExprPtr target = n.items[1].is_atom ? make_var(n.items[1].atom) : build_expr(n.items[1]);
        if (target->kind != Kind::Var && target->kind != Kind::Index)
            throw RejectionError("assign target must be a variable or an indexed element");
        ExprPtr e = make(Kind::Assign);
        e->kids = {target, build_expr(n.items[2])};
        return e;
    }
    if (head == "loop") {
        if (n.items.size() < 5 || !n.items[1].is_atom) throw RejectionError("loop expects (loop var lo hi stmt...)");
        ExprPtr e = make(Kind::Loop);
        e->name = n.items[1].atom;
        e->lo = to_long(n.items[2], "loop lower bound");
        e->hi = to_long(n.items[3], "loop upper bound");
        for (std::size_t i = 4; i < n.items.size(); ++i) e->kids.push_back(build_expr(n.items[i]));
        return e;
    }
    if (head == "branch") {
        if (n.items.size() != 4 || n.items[2].is_atom || n.items[3].is_atom)
            throw RejectionError("branch expects (branch cond (then...) (else...))");
        ExprPtr e = make(Kind::Branch);
        e->kids.push_back(build_expr(n.items[1]));
        for (const auto& s : n.items[2].items) e->kids.push_back(build_expr(s));
        e->then_count = e->kids.size() - 1;
        for (const auto& s : n.items[3].items) e->kids.push_back(build_expr(s));
        return e;
    }
    if (head == "reveal") {
        arity(1, "reveal");
        ExprPtr e = make(Kind::Reveal);
        e->kids.push_back(build_expr(n.items[1]));
        return e;
    }
    throw RejectionError("unknown form: (" + head + " ...)");
}

} // namespace detail

inline Program parse_program(const std::string& text) {
    detail::SexprParser parser(text);
    Program p;
    for (const auto& n : parser.parse_all()) p.push_back(detail::build_expr(n));
    return p;
}

// ---- static analysis -------------------------------------------------------------

struct VarInfo {
    Shape shape;
    bool is_private = false;
};

struct ExprInfo {
    Shape shape;
    bool is_private = false;
};

namespace detail {

struct LoopBounds {
    long lo = 0, hi = 0;
};

struct StaticCtx {
    std::map<std::string, VarInfo> vars;
    std::map<std::string, LoopBounds> loops; // active loop counters
};

inline ExprInfo analyze_expr(const ExprPtr& e, StaticCtx& ctx);

inline ExprInfo analyze_target_value(const ExprPtr& stmt, StaticCtx& ctx) {
    return analyze_expr(stmt->kids[1], ctx);
}

inline void analyze_stmt(const ExprPtr& s, StaticCtx& ctx);

inline ExprInfo analyze_expr(const ExprPtr& e, StaticCtx& ctx) {
    switch (e->kind) {
        case Kind::Const: return {Shape{}, false};
        case Kind::Priv:
        case Kind::Pub: {
            bool priv = e->kind == Kind::Priv;
            auto it = ctx.vars.find(e->name);
            if (it != ctx.vars.end() && (it->second.shape != e->shape || it->second.is_private != priv))
                throw RejectionError("conflicting declaration of " + e->name);
            ctx.vars[e->name] = {e->shape, priv};
            return {e->shape, priv};
        }
        case Kind::Var: {
            auto it = ctx.vars.find(e->name);
            if (it == ctx.vars.end()) {
                if (ctx.loops.count(e->name))
                    return {Shape{}, false}; // loop counter used as a value
                throw RejectionError("unknown variable: " + e->name);
            }
            return {it->second.shape, it->second.is_private};
        }
        case Kind::Index: {
            ExprInfo base = analyze_expr(e->kids[0], ctx);
            if (base.shape.rank() == 0) throw RejectionError("cannot index a scalar: " + to_text(*e));
            if (!e->index_var.empty() && !ctx.loops.count(e->index_var))
                throw RejectionError("index variable " + e->index_var + " is not a loop counter");
            Shape elem;
            elem.dims.assign(base.shape.dims.begin() + 1, base.shape.dims.end());
            return {elem, base.is_private};
        }
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul: {
            ExprInfo a = analyze_expr(e->kids[0], ctx), b = analyze_expr(e->kids[1], ctx);
            return {broadcast_shape(a.shape, b.shape), a.is_private || b.is_private};
        }
        case Kind::Dot: {
            ExprInfo a = analyze_expr(e->kids[0], ctx), b = analyze_expr(e->kids[1], ctx);
            return {quadshare::detail::dot_dims(a.shape, b.shape).out_shape, a.is_private || b.is_private};
        }
        case Kind::Transpose: {
            ExprInfo a = analyze_expr(e->kids[0], ctx);
            Shape s = a.shape;
            std::reverse(s.dims.begin(), s.dims.end());
            return {s, a.is_private};
        }
        case Kind::Pack: {
            bool priv = false;
            for (const auto& k : e->kids) {
                ExprInfo i = analyze_expr(k, ctx);
                if (i.shape.numel() != 1)
                    throw RejectionError("pack expects scalar items, got " + i.shape.str());
                priv = priv || i.is_private;
            }
            return {Shape{e->kids.size()}, priv};
        }
        default: throw RejectionError("expression expected, found statement: " + to_text(*e));
    }
}

inline void analyze_stmt(const ExprPtr& s, StaticCtx& ctx) {
    switch (s->kind) {
        case Kind::Assign: {
            ExprInfo v = analyze_expr(s->kids[1], ctx);
            const ExprPtr& target = s->kids[0];
            if (target->kind == Kind::Var) {
                ctx.vars[target->name] = {v.shape, v.is_private};
            } else { // Index chain: collect levels down to the root variable
                std::vector<const Expr*> levels; // outermost first
                const Expr* cur = target.get();
                while (cur->kind == Kind::Index) {
                    levels.insert(levels.begin(), cur);
                    cur = cur->kids[0].get();
                }
                if (cur->kind != Kind::Var)
                    throw RejectionError("assignment target must root in a variable");
                const std::string& base = cur->name;
                for (const Expr* lvl : levels)
                    if (!lvl->index_var.empty() && !ctx.loops.count(lvl->index_var))
                        throw RejectionError("index variable " + lvl->index_var + " is not a loop counter");
                auto it = ctx.vars.find(base);
                if (it == ctx.vars.end()) {
                    // Element assignment materializes the variable; each index
                    // level contributes its loop's upper bound as a dimension.
                    Shape full;
                    for (const Expr* lvl : levels) {
                        if (lvl->index_var.empty() || lvl->index_lit != 0)
                            throw RejectionError("element assignment to undeclared " + base +
                                                 " needs plain loop indices");
                        full.dims.push_back(std::size_t(ctx.loops[lvl->index_var].hi));
                    }
                    full.dims.insert(full.dims.end(), v.shape.dims.begin(), v.shape.dims.end());
                    ctx.vars[base] = {full, v.is_private};
                } else {
                    if (it->second.shape.rank() < levels.size())
                        throw RejectionError("too many index levels into " + base);
                    it->second.is_private = it->second.is_private || v.is_private;
                }
            }
            return;
        }
        case Kind::Loop: {
            if (s->hi < s->lo) throw RejectionError("loop bounds are reversed");
            ctx.loops[s->name] = {s->lo, s->hi};
            for (const auto& b : s->kids) analyze_stmt(b, ctx);
            ctx.loops.erase(s->name);
            return;
        }
        case Kind::Branch: {
            ExprInfo cond = analyze_expr(s->kids[0], ctx);
            if (cond.is_private)
                throw RejectionError("branch condition depends on private data: " + to_text(*s->kids[0]));
            for (std::size_t i = 1; i < s->kids.size(); ++i) analyze_stmt(s->kids[i], ctx);
            return;
        }
        case Kind::Reveal: {
            (void)analyze_expr(s->kids[0], ctx);
            return;
        }
        default: throw RejectionError("statement expected, found: " + to_text(*s));
    }
}

} // namespace detail

// Static checking: shape-validates the program and rejects branches whose
// condition (transitively) depends on a private input.
inline void check_reject(const Program& p) {
    detail::StaticCtx ctx;
    for (const auto& s : p) detail::analyze_stmt(s, ctx);
}

// ---- cost model -------------------------------------------------------------------

// Static protocol-cost estimate from the PO cost table: a share-share
// multiply is 1 round / 2 elements per server; dot ships its output size.
struct CostReport {
    long mul_count = 0;
    long dot_count = 0;
    long round_estimate = 0;
    long message_estimate = 0; // ring elements per server
};

namespace detail {

inline void cost_expr(const ExprPtr& e, StaticCtx& ctx, long mult, CostReport& r) {
    switch (e->kind) {
        case Kind::Add:
        case Kind::Sub: {
            cost_expr(e->kids[0], ctx, mult, r);
            cost_expr(e->kids[1], ctx, mult, r);
            return;
        }
        case Kind::Mul: {
            cost_expr(e->kids[0], ctx, mult, r);
            cost_expr(e->kids[1], ctx, mult, r);
            ExprInfo a = analyze_expr(e->kids[0], ctx), b = analyze_expr(e->kids[1], ctx);
            if (a.is_private && b.is_private) {
                Shape out = broadcast_shape(a.shape, b.shape);
                r.mul_count += mult;
                r.round_estimate += mult;
                r.message_estimate += mult * 2 * long(out.numel());
            }
            return;
        }
        case Kind::Dot: {
            cost_expr(e->kids[0], ctx, mult, r);
            cost_expr(e->kids[1], ctx, mult, r);
            ExprInfo a = analyze_expr(e->kids[0], ctx), b = analyze_expr(e->kids[1], ctx);
            if (a.is_private && b.is_private) {
                Shape out = quadshare::detail::dot_dims(a.shape, b.shape).out_shape;
                r.dot_count += mult;
                r.round_estimate += mult;
                r.message_estimate += mult * 2 * long(std::max<std::size_t>(out.numel(), 1));
            }
            return;
        }
        case Kind::Transpose:
        case Kind::Pack:
        case Kind::Reveal: {
            for (const auto& k : e->kids) cost_expr(k, ctx, mult, r);
            return;
        }
        case Kind::Index:
        default: return;
    }
}

inline void cost_stmt(const ExprPtr& s, StaticCtx& ctx, long mult, CostReport& r) {
    switch (s->kind) {
        case Kind::Assign: {
            cost_expr(s->kids[1], ctx, mult, r);
            analyze_stmt(s, ctx);
            return;
        }
        case Kind::Loop: {
            ctx.loops[s->name] = {s->lo, s->hi};
            for (const auto& b : s->kids) cost_stmt(b, ctx, mult * (s->hi - s->lo), r);
            ctx.loops.erase(s->name);
            return;
        }
        case Kind::Branch: {
            // One arm executes; estimate with the wider one.
            StaticCtx then_ctx = ctx, else_ctx = ctx;
            CostReport then_r, else_r;
            for (std::size_t i = 1; i < 1 + s->then_count; ++i) cost_stmt(s->kids[i], then_ctx, mult, then_r);
            for (std::size_t i = 1 + s->then_count; i < s->kids.size(); ++i)
                cost_stmt(s->kids[i], else_ctx, mult, else_r);
            const CostReport& wide = then_r.round_estimate >= else_r.round_estimate ? then_r : else_r;
            r.mul_count += wide.mul_count;
            r.dot_count += wide.dot_count;
            r.round_estimate += wide.round_estimate;
            r.message_estimate += wide.message_estimate;
            for (std::size_t i = 1; i < s->kids.size(); ++i) analyze_stmt(s->kids[i], ctx);
            return;
        }
        case Kind::Reveal: {
            cost_expr(s->kids[0], ctx, mult, r);
            return;
        }
        default: return;
    }
}

} // namespace detail

inline CostReport cost(const Program& p) {
    detail::StaticCtx ctx;
    CostReport r;
    for (const auto& s : p) detail::cost_stmt(s, ctx, 1, r);
    return r;
}

} // namespace quadshare::ir
