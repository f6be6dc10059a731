#pragma once

// Executes an IR program on the engine: private inputs are shared from
// client 0, statements run over the simulated servers, and reveal statements
// return cleartext tensors.

#include <variant>

#include "quadshare/ir_passes.hpp"

namespace quadshare::ir {

using Value = std::variant<ShareTensor, PublicTensor>;

struct RevealedOutput {
    std::string name;
    PublicTensor value;
};

struct InterpretResult {
    std::vector<RevealedOutput> outputs;
    // Rounds spent on protocol work, excluding input sharing and reveals.
    std::uint64_t compute_rounds = 0;
    NetStats stats_delta;
};

namespace detail {

struct Interp {
    Engine& eng;
    const std::map<std::string, PublicTensor>& bindings;
    std::map<std::string, Value> env;
    std::map<std::string, LoopBounds> loop_bounds;
    std::map<std::string, long> loop_value;
    InterpretResult result;
    std::uint64_t reveal_rounds = 0;

    // Share every private input up front so input distribution is not mixed
    // into the compute-round accounting.
    void materialize_inputs(const Program& p) {
        for (const auto& s : p) scan_priv(s);
    }

    void scan_priv(const ExprPtr& e) {
        if (e->kind == Kind::Priv && !env.count(e->name)) (void)eval(e);
        for (const auto& k : e->kids) scan_priv(k);
    }

    static bool is_share(const Value& v) { return std::holds_alternative<ShareTensor>(v); }
    static const Shape& shape_of(const Value& v) {
        return is_share(v) ? std::get<ShareTensor>(v).shape : std::get<PublicTensor>(v).shape;
    }

    ShareTensor to_share(const Value& v) {
        if (is_share(v)) return std::get<ShareTensor>(v);
        const PublicTensor& p = std::get<PublicTensor>(v);
        return from_public(eng, p.values, p.shape);
    }

    Value binary(Kind kind, const Value& a, const Value& b) {
        bool sa = is_share(a), sb = is_share(b);
        switch (kind) {
            case Kind::Add:
                if (sa && sb) return add(eng, std::get<ShareTensor>(a), std::get<ShareTensor>(b));
                if (sa) return add(eng, std::get<ShareTensor>(a), std::get<PublicTensor>(b));
                if (sb) return add(eng, std::get<ShareTensor>(b), std::get<PublicTensor>(a));
                return pub::add(std::get<PublicTensor>(a), std::get<PublicTensor>(b));
            case Kind::Sub:
                if (sa && sb) return sub(eng, std::get<ShareTensor>(a), std::get<ShareTensor>(b));
                if (sa) return sub(eng, std::get<ShareTensor>(a), std::get<PublicTensor>(b));
                if (sb) return sub(eng, std::get<PublicTensor>(a), std::get<ShareTensor>(b));
                return pub::sub(std::get<PublicTensor>(a), std::get<PublicTensor>(b));
            case Kind::Mul:
                if (sa && sb) return mul(eng, std::get<ShareTensor>(a), std::get<ShareTensor>(b));
                if (sa) return mul(eng, std::get<ShareTensor>(a), std::get<PublicTensor>(b));
                if (sb) return mul(eng, std::get<ShareTensor>(b), std::get<PublicTensor>(a));
                return pub::mul(std::get<PublicTensor>(a), std::get<PublicTensor>(b));
            case Kind::Dot:
                if (sa && sb) return dot(eng, std::get<ShareTensor>(a), std::get<ShareTensor>(b));
                if (sa) return dot_public(eng, std::get<ShareTensor>(a), std::get<PublicTensor>(b));
                if (sb) return dot_public(eng, std::get<PublicTensor>(a), std::get<ShareTensor>(b));
                return pub::dot(std::get<PublicTensor>(a), std::get<PublicTensor>(b));
            default: throw EngineError("not a binary op");
        }
    }

    long resolve_index(const Expr& ix) {
        if (ix.index_var.empty()) return ix.index_lit;
        auto it = loop_value.find(ix.index_var);
        if (it == loop_value.end()) throw EngineError("loose index variable " + ix.index_var);
        return it->second + ix.index_lit;
    }

    Value eval(const ExprPtr& e) {
        switch (e->kind) {
            case Kind::Const: return PublicTensor::scalar(e->cval);
            case Kind::Priv: {
                auto cached = env.find(e->name);
                if (cached != env.end()) return cached->second;
                auto it = bindings.find(e->name);
                if (it == bindings.end()) throw IoError("no input bound for private variable " + e->name);
                if (it->second.shape != e->shape)
                    throw ShapeError("input " + e->name + " has shape " + it->second.shape.str() +
                                     ", declared " + e->shape.str());
                ShareTensor t = ss(eng, 0, it->second.values, it->second.shape);
                env.emplace(e->name, t);
                return t;
            }
            case Kind::Pub: {
                auto it = bindings.find(e->name);
                if (it == bindings.end()) throw IoError("no input bound for public variable " + e->name);
                if (it->second.shape != e->shape)
                    throw ShapeError("input " + e->name + " has shape " + it->second.shape.str() +
                                     ", declared " + e->shape.str());
                env.emplace(e->name, it->second);
                return it->second;
            }
            case Kind::Var: {
                auto it = env.find(e->name);
                if (it != env.end()) return it->second;
                auto lv = loop_value.find(e->name);
                if (lv != loop_value.end()) return PublicTensor::scalar(double(lv->second));
                throw EngineError("unknown variable at runtime: " + e->name);
            }
            case Kind::Add:
            case Kind::Sub:
            case Kind::Mul:
            case Kind::Dot: return binary(e->kind, eval(e->kids[0]), eval(e->kids[1]));
            case Kind::Transpose: {
                Value v = eval(e->kids[0]);
                if (is_share(v)) return transpose(std::get<ShareTensor>(v));
                return pub::transpose(std::get<PublicTensor>(v));
            }
            case Kind::Pack: {
                std::vector<Value> items;
                bool any_share = false;
                for (const auto& k : e->kids) {
                    items.push_back(eval(k));
                    if (shape_of(items.back()).numel() != 1) throw ShapeError("pack expects scalars");
                    any_share = any_share || is_share(items.back());
                }
                if (!any_share) {
                    std::vector<double> vals;
                    for (const auto& v : items) vals.push_back(std::get<PublicTensor>(v).values[0]);
                    return PublicTensor(Shape{items.size()}, std::move(vals));
                }
                std::vector<ShareTensor> parts;
                for (const auto& v : items) parts.push_back(reshape(to_share(v), Shape{}));
                return concat_axis0(parts);
            }
            case Kind::Index: {
                Value base = eval(e->kids[0]);
                long i = resolve_index(*e);
                if (i < 0) throw ShapeError("negative index");
                if (is_share(base)) return index_axis0(std::get<ShareTensor>(base), std::size_t(i));
                return pub::index_axis0(std::get<PublicTensor>(base), std::size_t(i));
            }
            default: throw EngineError("expression expected at runtime");
        }
    }

    // Writes `value` into the element addressed by the index chain.
    void assign_into(const ExprPtr& target, Value value) {
        if (target->kind == Kind::Var) {
            env.insert_or_assign(target->name, std::move(value));
            return;
        }
        // Collect the chain root and per-level indices (outermost level last
        // in the chain walk, so reverse to get root-first order).
        std::vector<long> path;
        const Expr* cur = target.get();
        while (cur->kind == Kind::Index) {
            path.insert(path.begin(), resolve_index(*cur));
            cur = cur->kids[0].get();
        }
        if (cur->kind != Kind::Var) throw EngineError("assignment target must root in a variable");
        const std::string& root = cur->name;

        auto it = env.find(root);
        if (it == env.end()) {
            // Auto-create the container: leading dims from the enclosing
            // loops, element shape from the value.
            std::vector<const Expr*> levels;
            const Expr* walk = target.get();
            while (walk->kind == Kind::Index) {
                levels.insert(levels.begin(), walk);
                walk = walk->kids[0].get();
            }
            Shape full;
            for (const Expr* lvl : levels) {
                auto lb = loop_bounds.find(lvl->index_var);
                if (lvl->index_var.empty() || lb == loop_bounds.end())
                    throw EngineError("element assignment to undeclared " + root + " needs loop indices");
                full.dims.push_back(std::size_t(lb->second.hi));
            }
            const Shape& elem = shape_of(value);
            full.dims.insert(full.dims.end(), elem.dims.begin(), elem.dims.end());
            if (is_share(value)) env.emplace(root, ShareTensor::sized(full));
            else env.emplace(root, PublicTensor(full, std::vector<double>(full.numel(), 0.0)));
            it = env.find(root);
        }

        // Flat offset of the addressed element block.
        const Shape& full = shape_of(it->second);
        if (path.size() > full.rank()) throw ShapeError("too many index levels into " + root);
        std::size_t offset = 0;
        auto strides = full.strides();
        for (std::size_t lvl = 0; lvl < path.size(); ++lvl) {
            if (path[lvl] < 0 || std::size_t(path[lvl]) >= full.dims[lvl])
                throw ShapeError("index out of range writing " + root);
            offset += std::size_t(path[lvl]) * strides[lvl];
        }
        Shape elem;
        elem.dims.assign(full.dims.begin() + long(path.size()), full.dims.end());
        if (shape_of(value) != elem)
            throw ShapeError("element assignment shape mismatch into " + root);

        if (is_share(it->second)) {
            ShareTensor v = to_share(value);
            ShareTensor& dst = std::get<ShareTensor>(it->second);
            for (int p = 0; p < 4; ++p)
                for (std::size_t j = 0; j < elem.numel(); ++j) {
                    dst.party[p].first[offset + j] = v.party[p].first[j];
                    dst.party[p].second[offset + j] = v.party[p].second[j];
                }
        } else {
            if (is_share(value)) {
                // First share written into a public container promotes it.
                PublicTensor& old = std::get<PublicTensor>(it->second);
                ShareTensor promoted = from_public(eng, old.values, old.shape);
                it->second = promoted;
                assign_into(target, std::move(value));
                return;
            }
            PublicTensor& dst = std::get<PublicTensor>(it->second);
            const PublicTensor& v = std::get<PublicTensor>(value);
            for (std::size_t j = 0; j < elem.numel(); ++j) dst.values[offset + j] = v.values[j];
        }
    }

    void exec(const ExprPtr& s) {
        switch (s->kind) {
            case Kind::Assign: {
                Value v = eval(s->kids[1]);
                assign_into(s->kids[0], std::move(v));
                return;
            }
            case Kind::Loop: {
                loop_bounds[s->name] = {s->lo, s->hi};
                for (long i = s->lo; i < s->hi; ++i) {
                    loop_value[s->name] = i;
                    for (const auto& b : s->kids) exec(b);
                }
                loop_value.erase(s->name);
                loop_bounds.erase(s->name);
                return;
            }
            case Kind::Branch: {
                Value cond = eval(s->kids[0]);
                if (is_share(cond))
                    throw RejectionError("branch evaluated a private condition at runtime");
                const PublicTensor& c = std::get<PublicTensor>(cond);
                if (c.size() != 1) throw ShapeError("branch condition must be scalar");
                bool taken = c.values[0] != 0.0;
                if (taken)
                    for (std::size_t i = 1; i < 1 + s->then_count; ++i) exec(s->kids[i]);
                else
                    for (std::size_t i = 1 + s->then_count; i < s->kids.size(); ++i) exec(s->kids[i]);
                return;
            }
            case Kind::Reveal: {
                Value v = eval(s->kids[0]);
                std::string name = s->kids[0]->kind == Kind::Var || s->kids[0]->kind == Kind::Priv
                                       ? s->kids[0]->name
                                       : "out" + std::to_string(result.outputs.size());
                PublicTensor out;
                if (is_share(v)) {
                    NetStats before = eng.net().snapshot();
                    out = reveal_tensor(eng, std::get<ShareTensor>(v));
                    reveal_rounds += stats_diff(before, eng.net().snapshot()).total_rounds;
                } else {
                    out = std::get<PublicTensor>(v);
                }
                result.outputs.push_back({std::move(name), std::move(out)});
                return;
            }
            default: throw EngineError("statement expected at runtime");
        }
    }
};

} // namespace detail

// Runs the program.  check_reject must have accepted it (the interpreter still
// guards against private branch conditions at runtime).
inline InterpretResult interpret(Engine& eng, const Program& p,
                                 const std::map<std::string, PublicTensor>& bindings) {
    detail::Interp interp{eng, bindings};
    NetStats start = eng.net().snapshot();
    interp.materialize_inputs(p);
    NetStats after_inputs = eng.net().snapshot();
    for (const auto& s : p) interp.exec(s);
    NetStats finish = eng.net().snapshot();
    interp.result.compute_rounds =
        stats_diff(after_inputs, finish).total_rounds - interp.reveal_rounds;
    interp.result.stats_delta = stats_diff(start, finish);
    return std::move(interp.result);
}

} // namespace quadshare::ir
