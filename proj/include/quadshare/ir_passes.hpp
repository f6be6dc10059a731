#pragma once

// The rewrite passes: for-loop vectorization, common-factor extraction, and
// common-expression vectorization.  Fixed pipeline order: check_reject,
// vectorize_loops, common_factor, vectorize_expr.  Every pass preserves
// revealed semantics (bit-exact for loop vectorization, within the
// truncation budget where the truncation profile changes).

#include <set>

#include "quadshare/ir.hpp"

namespace quadshare::ir {

namespace detail {

inline ExprPtr clone(const ExprPtr& e) {
    ExprPtr c = std::make_shared<Expr>(*e);
    for (auto& k : c->kids) k = clone(k);
    return c;
}

// ---- for-loop vectorization -------------------------------------------------

inline const Expr* index_root(const Expr& e) {
    const Expr* cur = &e;
    while (cur->kind == Kind::Index) cur = cur->kids[0].get();
    return cur;
}

inline bool chain_mentions_var(const Expr& e, const std::string& var) {
    const Expr* cur = &e;
    while (cur->kind == Kind::Index) {
        if (cur->index_var == var) return true;
        cur = cur->kids[0].get();
    }
    return cur->kind == Kind::Var && cur->name == var;
}

// Validates that `var` only appears as the outermost index of chains, with
// zero offset, over the full range [0, hi).
struct VecScan {
    const std::string& var;
    StaticCtx& ctx;
    long hi;
    bool ok = true;

    void expr(const ExprPtr& e, bool in_chain) {
        if (!ok) return;
        switch (e->kind) {
            case Kind::Var:
                if (e->name == var) ok = false; // counter used as a value
                return;
            case Kind::Const:
            case Kind::Priv:
            case Kind::Pub: return;
            case Kind::Index: {
                if (!in_chain && e->index_var == var && e->index_lit == 0) {
                    if (chain_mentions_var(*e->kids[0], var)) { ok = false; return; }
                    try {
                        ExprInfo b = analyze_expr(e->kids[0], ctx);
                        if (b.shape.rank() == 0 || b.shape.dims[0] != std::size_t(hi)) ok = false;
                    } catch (const EngineError&) {
                        ok = false;
                    }
                    return;
                }
                if (e->index_var == var) { ok = false; return; } // offset or nested position
                expr(e->kids[0], true);
                return;
            }
            case Kind::Add:
            case Kind::Sub:
            case Kind::Mul:
            case Kind::Dot:
            case Kind::Transpose:
            case Kind::Pack:
                for (const auto& k : e->kids) expr(k, false);
                return;
            default: ok = false; return;
        }
    }
};

// Maximal index chains and bare variable reads of an expression.
inline void collect_reads(const ExprPtr& e, std::vector<std::pair<std::string, std::string>>& indexed,
                          std::set<std::string>& bare) {
    switch (e->kind) {
        case Kind::Var: bare.insert(e->name); return;
        case Kind::Priv:
        case Kind::Pub: bare.insert(e->name); return;
        case Kind::Index: {
            const Expr* root = index_root(*e);
            if (root->kind == Kind::Var || root->kind == Kind::Priv || root->kind == Kind::Pub)
                indexed.emplace_back(root->name, to_text(*e));
            return;
        }
        case Kind::Const: return;
        default:
            for (const auto& k : e->kids) collect_reads(k, indexed, bare);
            return;
    }
}

// Strips the outermost (idx . var) level of every chain.
inline ExprPtr lift_index(const ExprPtr& e, const std::string& var) {
    if (e->kind == Kind::Index && e->index_var == var && e->index_lit == 0) return clone(e->kids[0]);
    ExprPtr c = std::make_shared<Expr>(*e);
    for (auto& k : c->kids) k = lift_index(k, var);
    return c;
}

// Decides whether every statement of the loop body is an element-wise
// assignment over `var` with no cross-iteration dependence, and if so
// produces the vectorized statements.
inline bool try_vectorize(const Expr& loop, StaticCtx& ctx, std::vector<ExprPtr>& out) {
    const std::string& var = loop.name;
    if (loop.lo != 0 || loop.hi <= 0) return false;

    StaticCtx probe = ctx;
    probe.loops[var] = {loop.lo, loop.hi};

    // Pattern and dependence checks over the original body.
    std::map<std::string, std::string> written; // root -> target text
    for (const auto& stmt : loop.kids) {
        if (stmt->kind != Kind::Assign) return false;
        const ExprPtr& target = stmt->kids[0];
        if (target->kind != Kind::Index || target->index_var != var || target->index_lit != 0) return false;
        if (chain_mentions_var(*target->kids[0], var)) return false;
        const Expr* root = index_root(*target);
        if (root->kind != Kind::Var) return false;
        if (!written.emplace(root->name, to_text(*target)).second) return false; // single assignment

        VecScan scan{var, probe, loop.hi};
        scan.expr(stmt->kids[1], false);
        if (!scan.ok) return false;
        try {
            analyze_stmt(stmt, probe); // defines auto-created targets, checks shapes
        } catch (const EngineError&) {
            return false;
        }
    }
    for (const auto& stmt : loop.kids) {
        std::vector<std::pair<std::string, std::string>> indexed;
        std::set<std::string> bare;
        collect_reads(stmt->kids[1], indexed, bare);
        for (const auto& name : bare)
            if (written.count(name)) return false; // whole-array read of a written root
        for (const auto& [root, text] : indexed)
            if (written.count(root) && written[root] != text) return false; // cross-element read
    }

    // Build and validate the lifted statements.
    std::vector<ExprPtr> rewritten;
    StaticCtx validate = ctx;
    for (const auto& stmt : loop.kids) {
        ExprPtr a = make(Kind::Assign);
        a->kids = {lift_index(stmt->kids[0], var), lift_index(stmt->kids[1], var)};
        try {
            ExprInfo v = analyze_expr(a->kids[1], validate);
            const ExprPtr& t = a->kids[0];
            if (t->kind == Kind::Index) {
                const Expr* root = index_root(*t);
                if (!validate.vars.count(root->name) && probe.vars.count(root->name))
                    validate.vars[root->name] = probe.vars[root->name]; // auto-created in this loop nest
            }
            if (t->kind == Kind::Var) {
                auto it = validate.vars.find(t->name);
                if (it != validate.vars.end()) {
                    if (it->second.shape != v.shape) return false; // partial overwrite
                } else if (v.shape.rank() == 0 || v.shape.dims[0] != std::size_t(loop.hi)) {
                    return false;
                }
            } else {
                ExprInfo telem = analyze_expr(t, validate);
                if (telem.shape != v.shape) return false;
            }
            analyze_stmt(a, validate);
        } catch (const EngineError&) {
            return false;
        }
        rewritten.push_back(std::move(a));
    }
    out = std::move(rewritten);
    return true;
}

inline void vectorize_stmt(const ExprPtr& s, StaticCtx& ctx, std::vector<ExprPtr>& out);

inline void vectorize_body(const std::vector<ExprPtr>& body, StaticCtx& ctx, std::vector<ExprPtr>& out) {
    for (const auto& s : body) vectorize_stmt(s, ctx, out);
}

inline void vectorize_stmt(const ExprPtr& s, StaticCtx& ctx, std::vector<ExprPtr>& out) {
    if (s->kind == Kind::Loop) {
        // Inner loops first, so nested element-wise nests collapse fully.
        ExprPtr inner = std::make_shared<Expr>(*s);
        {
            StaticCtx body_ctx = ctx;
            body_ctx.loops[s->name] = {s->lo, s->hi};
            std::vector<ExprPtr> new_body;
            vectorize_body(s->kids, body_ctx, new_body);
            inner->kids = std::move(new_body);
        }
        std::vector<ExprPtr> vectorized;
        if (try_vectorize(*inner, ctx, vectorized)) {
            for (const auto& v : vectorized) {
                analyze_stmt(v, ctx);
                out.push_back(v);
            }
        } else {
            StaticCtx body_ctx = ctx;
            body_ctx.loops[s->name] = {s->lo, s->hi};
            for (const auto& b : inner->kids) analyze_stmt(b, body_ctx);
            body_ctx.loops.erase(s->name);
            ctx.vars = body_ctx.vars;
            out.push_back(inner);
        }
        return;
    }
    if (s->kind == Kind::Branch) {
        ExprPtr b = std::make_shared<Expr>(*s);
        std::vector<ExprPtr> then_body(b->kids.begin() + 1, b->kids.begin() + 1 + long(b->then_count));
        std::vector<ExprPtr> else_body(b->kids.begin() + 1 + long(b->then_count), b->kids.end());
        std::vector<ExprPtr> new_then, new_else;
        StaticCtx then_ctx = ctx;
        vectorize_body(then_body, then_ctx, new_then);
        StaticCtx else_ctx = ctx;
        vectorize_body(else_body, else_ctx, new_else);
        b->kids.resize(1);
        b->kids.insert(b->kids.end(), new_then.begin(), new_then.end());
        b->then_count = new_then.size();
        b->kids.insert(b->kids.end(), new_else.begin(), new_else.end());
        ctx.vars = then_ctx.vars;
        for (const auto& [k, v] : else_ctx.vars) ctx.vars.emplace(k, v);
        out.push_back(b);
        return;
    }
    analyze_stmt(s, ctx);
    out.push_back(s);
}

} // namespace detail

// Rewrites element-wise for-loops into whole-tensor statements.  Loops with
// cross-iteration dependences (offset indices), uses of the counter as a
// value, or partial-range iteration pass through unchanged.
inline Program pass_vectorize_loops(const Program& p) {
    detail::StaticCtx ctx;
    Program out;
    for (const auto& s : p) detail::vectorize_stmt(s, ctx, out);
    return out;
}

namespace detail {

// ---- common factor extraction -----------------------------------------------

inline void flatten_add(const ExprPtr& e, std::vector<ExprPtr>& terms) {
    if (e->kind == Kind::Add) {
        flatten_add(e->kids[0], terms);
        flatten_add(e->kids[1], terms);
    } else {
        terms.push_back(e);
    }
}

inline ExprPtr build_add_chain(const std::vector<ExprPtr>& terms) {
    ExprPtr acc = terms[0];
    for (std::size_t i = 1; i < terms.size(); ++i) acc = make_binary(Kind::Add, acc, terms[i]);
    return acc;
}

inline ExprPtr cf_rewrite(const ExprPtr& e) {
    ExprPtr c = std::make_shared<Expr>(*e);
    for (auto& k : c->kids) k = cf_rewrite(k);
    if (c->kind != Kind::Add) return c;

    std::vector<ExprPtr> terms;
    flatten_add(c, terms);

    bool changed = true;
    while (changed && terms.size() > 1) {
        changed = false;
        // Count factor occurrences over multiplicative terms, first-seen order.
        std::vector<std::pair<std::string, int>> order;
        auto bump = [&](const std::string& key) {
            for (auto& [k, n] : order)
                if (k == key) {
                    ++n;
                    return;
                }
            order.emplace_back(key, 1);
        };
        for (const auto& t : terms)
            if (t->kind == Kind::Mul) {
                std::string l = to_text(*t->kids[0]), r = to_text(*t->kids[1]);
                bump(l);
                if (r != l) bump(r);
            }
        std::string best;
        int best_n = 1;
        for (const auto& [k, n] : order)
            if (n > best_n) {
                best = k;
                best_n = n;
            }
        if (best.empty()) break;

        std::vector<ExprPtr> grouped_cofactors, rest;
        ExprPtr factor;
        std::size_t insert_pos = terms.size();
        for (const auto& t : terms) {
            if (t->kind == Kind::Mul) {
                std::string l = to_text(*t->kids[0]), r = to_text(*t->kids[1]);
                if (l == best) {
                    if (!factor) {
                        factor = t->kids[0];
                        insert_pos = rest.size();
                    }
                    grouped_cofactors.push_back(t->kids[1]);
                    continue;
                }
                if (r == best) {
                    if (!factor) {
                        factor = t->kids[1];
                        insert_pos = rest.size();
                    }
                    grouped_cofactors.push_back(t->kids[0]);
                    continue;
                }
            }
            rest.push_back(t);
        }
        ExprPtr grouped = make_binary(Kind::Mul, factor, build_add_chain(grouped_cofactors));
        rest.insert(rest.begin() + long(insert_pos), grouped);
        terms = std::move(rest);
        changed = true;
    }
    return build_add_chain(terms);
}

inline ExprPtr cf_stmt(const ExprPtr& s) {
    ExprPtr c = std::make_shared<Expr>(*s);
    switch (c->kind) {
        case Kind::Assign: c->kids[1] = cf_rewrite(c->kids[1]); return c;
        case Kind::Reveal: c->kids[0] = cf_rewrite(c->kids[0]); return c;
        case Kind::Loop:
            for (auto& k : c->kids) k = cf_stmt(k);
            return c;
        case Kind::Branch: {
            c->kids[0] = cf_rewrite(c->kids[0]);
            for (std::size_t i = 1; i < c->kids.size(); ++i) c->kids[i] = cf_stmt(c->kids[i]);
            return c;
        }
        default: return c;
    }
}

} // namespace detail

// x*y1 + x*y2 + ... -> x*(y1 + y2 + ...): one multiplication instead of n.
// Applied over + chains only; subtraction chains pass through.
inline Program pass_common_factor(const Program& p) {
    Program out;
    for (const auto& s : p) out.push_back(detail::cf_stmt(s));
    return out;
}

namespace detail {

// ---- common expression vectorization ------------------------------------------

inline ExprPtr ve_rewrite(const ExprPtr& e, StaticCtx& ctx) {
    if (e->kind != Kind::Add) {
        ExprPtr c = std::make_shared<Expr>(*e);
        for (auto& k : c->kids) k = ve_rewrite(k, ctx);
        return c;
    }
    // Flatten the whole + chain before rewriting so nested adds contribute
    // their product terms to one pack.
    std::vector<ExprPtr> terms;
    flatten_add(e, terms);
    for (auto& t : terms) t = ve_rewrite(t, ctx);
    std::vector<ExprPtr> lhs, rhs, rest;
    for (const auto& t : terms) {
        if (t->kind == Kind::Mul) {
            ExprInfo a = analyze_expr(t->kids[0], ctx), b = analyze_expr(t->kids[1], ctx);
            if (a.shape.numel() == 1 && b.shape.numel() == 1 && a.is_private && b.is_private) {
                lhs.push_back(t->kids[0]);
                rhs.push_back(t->kids[1]);
                continue;
            }
        }
        rest.push_back(t);
    }
    if (lhs.size() < 2) return build_add_chain(terms);

    ExprPtr pa = make(Kind::Pack), pb = make(Kind::Pack);
    pa->kids = lhs;
    pb->kids = rhs;
    ExprPtr d = make_binary(Kind::Dot, pa, pb);
    if (rest.empty()) return d;
    rest.insert(rest.begin(), d);
    return build_add_chain(rest);
}

inline ExprPtr ve_stmt(const ExprPtr& s, StaticCtx& ctx) {
    ExprPtr c = std::make_shared<Expr>(*s);
    switch (c->kind) {
        case Kind::Assign:
            c->kids[1] = ve_rewrite(c->kids[1], ctx);
            analyze_stmt(c, ctx);
            return c;
        case Kind::Reveal: c->kids[0] = ve_rewrite(c->kids[0], ctx); return c;
        case Kind::Loop: {
            ctx.loops[c->name] = {c->lo, c->hi};
            for (auto& k : c->kids) k = ve_stmt(k, ctx);
            ctx.loops.erase(c->name);
            return c;
        }
        case Kind::Branch: {
            for (std::size_t i = 1; i < c->kids.size(); ++i) c->kids[i] = ve_stmt(c->kids[i], ctx);
            return c;
        }
        default: return c;
    }
}

} // namespace detail

// x1*y1 + x2*y2 + ... -> dot(pack(x1,...), pack(y1,...)) for private scalar
// products; the packed scalars may come from arrays of different shapes.
inline Program pass_vectorize_expr(const Program& p) {
    detail::StaticCtx ctx;
    Program out;
    for (const auto& s : p) out.push_back(detail::ve_stmt(s, ctx));
    return out;
}

// The full pipeline in its fixed order.
inline Program optimize(const Program& p) {
    check_reject(p);
    return pass_vectorize_expr(pass_common_factor(pass_vectorize_loops(p)));
}

} // namespace quadshare::ir
