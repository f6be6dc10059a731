#pragma once

// Broadcast-aware tensor operations over shares, the optimized dot/outer
// products, reductions, and the CSV / QSTN container formats.

#include <cstdio>
#include <fstream>
#include <sstream>

#include "quadshare/protocols.hpp"

namespace quadshare {

// Cleartext tensor of reals, the public counterpart of ShareTensor.
struct PublicTensor {
    Shape shape;
    std::vector<double> values;

    PublicTensor() = default;
    PublicTensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
        if (shape.numel() != values.size()) throw ShapeError("public tensor size mismatch");
    }
    static PublicTensor scalar(double v) { return PublicTensor(Shape{}, {v}); }
    std::size_t size() const { return values.size(); }
};

// ---- broadcasting -------------------------------------------------------------

template <typename T>
ShareTensorT<T> broadcast_to(const ShareTensorT<T>& t, const Shape& out) {
    if (t.shape == out) return t;
    BroadcastIndexer ix(t.shape, out);
    std::vector<std::size_t> idx(out.numel());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = ix(i);
    return gather(t, idx, out);
}

inline PublicTensor broadcast_to(const PublicTensor& t, const Shape& out) {
    if (t.shape == out) return t;
    BroadcastIndexer ix(t.shape, out);
    std::vector<double> vals(out.numel());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = t.values[ix(i)];
    return PublicTensor(out, std::move(vals));
}

// ---- element-wise operations ----------------------------------------------------

inline ShareTensor add(Engine& eng, const ShareTensor& a, const ShareTensor& b) {
    Shape out = broadcast_shape(a.shape, b.shape);
    return add_shares(eng, broadcast_to(a, out), broadcast_to(b, out));
}

inline ShareTensor sub(Engine& eng, const ShareTensor& a, const ShareTensor& b) {
    Shape out = broadcast_shape(a.shape, b.shape);
    return sub_shares(eng, broadcast_to(a, out), broadcast_to(b, out));
}

inline ShareTensor mul(Engine& eng, const ShareTensor& a, const ShareTensor& b) {
    Shape out = broadcast_shape(a.shape, b.shape);
    return mul_fixed(eng, broadcast_to(a, out), broadcast_to(b, out));
}

inline BitTensor lt(Engine& eng, const ShareTensor& a, const ShareTensor& b) {
    Shape out = broadcast_shape(a.shape, b.shape);
    return less_than(eng, broadcast_to(a, out), broadcast_to(b, out));
}

inline ShareTensor select(Engine& eng, const BitTensor& c, const ShareTensor& x, const ShareTensor& y) {
    Shape out = broadcast_shape(broadcast_shape(x.shape, y.shape), c.shape);
    return mux(eng, broadcast_to(c, out), broadcast_to(x, out), broadcast_to(y, out));
}

inline std::vector<u128> encode_public(const RingConfig& cfg, const PublicTensor& t) {
    std::vector<u128> raws(t.size());
    for (std::size_t i = 0; i < raws.size(); ++i) raws[i] = encode_fixed(cfg, t.values[i]);
    return raws;
}

inline ShareTensor add(Engine& eng, const ShareTensor& a, const PublicTensor& b) {
    Shape out = broadcast_shape(a.shape, b.shape);
    return add_public_raw(eng, broadcast_to(a, out), encode_public(eng.cfg(), broadcast_to(b, out)));
}

inline ShareTensor sub(Engine& eng, const ShareTensor& a, const PublicTensor& b) {
    Shape out = broadcast_shape(a.shape, b.shape);
    PublicTensor neg = broadcast_to(b, out);
    for (auto& v : neg.values) v = -v;
    return add_public_raw(eng, broadcast_to(a, out), encode_public(eng.cfg(), neg));
}

inline ShareTensor sub(Engine& eng, const PublicTensor& b, const ShareTensor& a) {
    Shape out = broadcast_shape(a.shape, b.shape);
    return add_public_raw(eng, negate_shares(eng, broadcast_to(a, out)),
                          encode_public(eng.cfg(), broadcast_to(b, out)));
}

inline ShareTensor mul(Engine& eng, const ShareTensor& a, const PublicTensor& b) {
    Shape out = broadcast_shape(a.shape, b.shape);
    return mul_public_raw(eng, broadcast_to(a, out), encode_public(eng.cfg(), broadcast_to(b, out)));
}

// ---- dot / outer ---------------------------------------------------------------

namespace detail {

struct DotDims {
    std::size_t m, k, p;
    Shape out_shape;
    bool a_vec, b_vec;
};

inline DotDims dot_dims(const Shape& a, const Shape& b) {
    DotDims d{};
    d.a_vec = a.rank() == 1;
    d.b_vec = b.rank() == 1;
    if (a.rank() == 0 || b.rank() == 0 || a.rank() > 2 || b.rank() > 2)
        throw ShapeError("dot expects 1-D or 2-D operands, got " + a.str() + " and " + b.str());
    d.m = d.a_vec ? 1 : a.dims[0];
    std::size_t ka = d.a_vec ? a.dims[0] : a.dims[1];
    std::size_t kb = d.b_vec ? b.dims[0] : b.dims[0];
    d.p = d.b_vec ? 1 : b.dims[1];
    if (ka != kb) throw ShapeError("dot inner dimensions differ: " + a.str() + " vs " + b.str());
    d.k = ka;
    if (!d.a_vec && !d.b_vec) d.out_shape = Shape{d.m, d.p};
    else if (d.a_vec && !d.b_vec) d.out_shape = Shape{d.p};
    else if (!d.a_vec && d.b_vec) d.out_shape = Shape{d.m};
    else d.out_shape = Shape{};
    return d;
}

inline void local_matmul(const RingConfig& cfg, const std::vector<u128>& A, const std::vector<u128>& B,
                         std::vector<u128>& C, std::size_t m, std::size_t k, std::size_t p) {
    C.assign(m * p, 0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            u128 a = A[i * k + t];
            if (a == 0) continue;
            const u128* brow = &B[t * p];
            u128* crow = &C[i * p];
            for (std::size_t j = 0; j < p; ++j) crow[j] = (crow[j] + a * brow[j]) & cfg.mask();
        }
}

} // namespace detail

// Optimized dot product: each party multiplies its local component matrices
// (A1*B1' + A2*B2' + Aa*Ba' + Ab*Bb' across parties), sums before the single
// truncation, and ships only the output-sized result.  Communication is
// O(output), one round.
inline ShareTensor dot(Engine& eng, const ShareTensor& A, const ShareTensor& B) {
    const RingConfig& cfg = eng.cfg();
    detail::DotDims dims = detail::dot_dims(A.shape, B.shape);
    std::size_t out_n = dims.m * dims.p;
    auto local = [&](int party) {
        std::vector<u128> u, up;
        detail::local_matmul(cfg, A.party[party].first, B.party[party].second, u, dims.m, dims.k, dims.p);
        detail::local_matmul(cfg, A.party[party].second, B.party[party].first, up, dims.m, dims.k, dims.p);
        return std::pair(std::move(u), std::move(up));
    };
    return detail::bilinear_exchange(eng, dims.out_shape, out_n, local, /*truncate=*/true);
}

// Outer product of two vectors, same mechanism as dot.
inline ShareTensor outer(Engine& eng, const ShareTensor& u, const ShareTensor& v) {
    if (u.shape.rank() != 1 || v.shape.rank() != 1)
        throw ShapeError("outer expects 1-D operands, got " + u.shape.str() + " and " + v.shape.str());
    const RingConfig& cfg = eng.cfg();
    std::size_t m = u.shape.dims[0], p = v.shape.dims[0];
    auto local = [&](int party) {
        std::vector<u128> a, ap;
        detail::local_matmul(cfg, u.party[party].first, v.party[party].second, a, m, 1, p);
        detail::local_matmul(cfg, u.party[party].second, v.party[party].first, ap, m, 1, p);
        return std::pair(std::move(a), std::move(ap));
    };
    return detail::bilinear_exchange(eng, Shape{m, p}, m * p, local, /*truncate=*/true);
}

// ---- reductions ------------------------------------------------------------------

namespace detail {

// Collapse `axis` of t to groups: result[g][j] over groups g = outer*inner.
template <typename T>
void axis_layout(const Shape& s, std::size_t axis, std::size_t& outer, std::size_t& len, std::size_t& inner) {
    if (axis >= s.rank()) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + s.str());
    outer = 1;
    inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s.dims[i];
    for (std::size_t i = axis + 1; i < s.rank(); ++i) inner *= s.dims[i];
    len = s.dims[axis];
}

} // namespace detail

// Free addition along an axis (or over everything).
inline ShareTensor sum(Engine& eng, const ShareTensor& t, int axis = -1) {
    const RingConfig& cfg = eng.cfg();
    if (axis < 0) {
        ShareTensor out = ShareTensor::sized(Shape{});
        for (int p = 0; p < 4; ++p)
            for (std::size_t i = 0; i < t.size(); ++i) {
                out.party[p].first[0] = ring_add(cfg, out.party[p].first[0], t.party[p].first[i]);
                out.party[p].second[0] = ring_add(cfg, out.party[p].second[0], t.party[p].second[i]);
            }
        return out;
    }
    std::size_t outer, len, inner;
    detail::axis_layout<u128>(t.shape, std::size_t(axis), outer, len, inner);
    Shape out_shape = t.shape;
    out_shape.dims.erase(out_shape.dims.begin() + axis);
    ShareTensor out = ShareTensor::sized(out_shape);
    for (int p = 0; p < 4; ++p)
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t l = 0; l < len; ++l)
                for (std::size_t i = 0; i < inner; ++i) {
                    std::size_t src = (o * len + l) * inner + i, dst = o * inner + i;
                    out.party[p].first[dst] = ring_add(cfg, out.party[p].first[dst], t.party[p].first[src]);
                    out.party[p].second[dst] = ring_add(cfg, out.party[p].second[dst], t.party[p].second[src]);
                }
    return out;
}

// Sum then one public multiplication by 1/count.
inline ShareTensor mean(Engine& eng, const ShareTensor& t, int axis = -1) {
    std::size_t count = axis < 0 ? t.size() : t.shape.dims[std::size_t(axis)];
    if (count == 0) throw EmptyAxisError("mean over an empty axis");
    return mul_public(eng, sum(eng, t, axis), 1.0 / double(count));
}

namespace detail {

// Tournament reduction along axis 0 of a (len, group) layout.  Comparisons at
// each level run as one batched protocol invocation; ties keep the lower
// index through the strict less_than.
struct TournamentResult {
    ShareTensor value;
    ShareTensor index;
};

inline TournamentResult tournament(Engine& eng, ShareTensor rows, bool want_max, bool with_index) {
    std::size_t len = rows.shape.dims[0];
    if (len == 0) throw EmptyAxisError("reduction over an empty axis");
    Shape row_shape;
    row_shape.dims.assign(rows.shape.dims.begin() + 1, rows.shape.dims.end());
    std::size_t group = row_shape.numel();

    ShareTensor idx = ShareTensor::sized(rows.shape);
    if (with_index) {
        std::vector<double> iv(rows.size());
        for (std::size_t l = 0; l < len; ++l)
            for (std::size_t g = 0; g < group; ++g) iv[l * group + g] = double(l);
        idx = from_public(eng, iv, rows.shape);
    }

    // Pair adjacent rows so each level's winner list preserves the original
    // index order; that is what makes the lowest-index tie rule inductive.
    auto rows_at = [&](const ShareTensor& t, std::size_t start, std::size_t stride, std::size_t count) {
        std::vector<std::size_t> map(count * group);
        for (std::size_t r = 0; r < count; ++r)
            for (std::size_t g = 0; g < group; ++g) map[r * group + g] = (start + r * stride) * group + g;
        Shape s = t.shape;
        s.dims[0] = count;
        return gather(t, map, s);
    };

    while (len > 1) {
        std::size_t half = len / 2;
        ShareTensor even = rows_at(rows, 0, 2, half);
        ShareTensor odd = rows_at(rows, 1, 2, half);
        // Challenger wins only on strict improvement.
        BitTensor c = want_max ? less_than(eng, even, odd) : less_than(eng, odd, even);
        ShareTensor merged_vals;
        if (with_index) {
            ShareTensor ieven = rows_at(idx, 0, 2, half), iodd = rows_at(idx, 1, 2, half);
            ShareTensor packed_odd = vstack(odd, iodd), packed_even = vstack(even, ieven);
            BitTensor cc = vstack(c, c);
            ShareTensor winners = mux(eng, cc, packed_odd, packed_even);
            merged_vals = slice_axis0(winners, 0, half);
            ShareTensor merged_idx = slice_axis0(winners, half, 2 * half);
            if (len % 2) {
                merged_vals = vstack(merged_vals, slice_axis0(rows, len - 1, len));
                merged_idx = vstack(merged_idx, slice_axis0(idx, len - 1, len));
            }
            idx = merged_idx;
        } else {
            merged_vals = mux(eng, c, odd, even);
            if (len % 2) merged_vals = vstack(merged_vals, slice_axis0(rows, len - 1, len));
        }
        rows = merged_vals;
        len = rows.shape.dims[0];
    }
    TournamentResult res;
    res.value = reshape(rows, row_shape);
    if (with_index) res.index = reshape(idx, row_shape);
    return res;
}

// Move `axis` to the front as (len, rest) for tournament reduction.
inline ShareTensor axis_front(const ShareTensor& t, std::size_t axis) {
    std::vector<std::size_t> perm;
    perm.push_back(axis);
    for (std::size_t i = 0; i < t.shape.rank(); ++i)
        if (i != axis) perm.push_back(i);
    return transpose(t, perm);
}

inline TournamentResult reduce_axis(Engine& eng, const ShareTensor& t, int axis, bool want_max,
                                    bool with_index) {
    if (t.size() == 0) throw EmptyAxisError("reduction over an empty tensor");
    if (axis < 0) {
        ShareTensor flat = flatten(t);
        return tournament(eng, flat, want_max, with_index);
    }
    if (std::size_t(axis) >= t.shape.rank()) throw ShapeError("axis out of range for " + t.shape.str());
    return tournament(eng, axis_front(t, std::size_t(axis)), want_max, with_index);
}

} // namespace detail

inline ShareTensor max(Engine& eng, const ShareTensor& t, int axis = -1) {
    return detail::reduce_axis(eng, t, axis, true, false).value;
}
inline ShareTensor min(Engine& eng, const ShareTensor& t, int axis = -1) {
    return detail::reduce_axis(eng, t, axis, false, false).value;
}
// Smallest index achieving the extreme, encoded as a fixed-point integer share.
inline ShareTensor argmax(Engine& eng, const ShareTensor& t, int axis = -1) {
    return detail::reduce_axis(eng, t, axis, true, true).index;
}
inline ShareTensor argmin(Engine& eng, const ShareTensor& t, int axis = -1) {
    return detail::reduce_axis(eng, t, axis, false, true).index;
}

// Clamp into [lo, hi] with two comparisons and muxes.
inline ShareTensor clip(Engine& eng, const ShareTensor& t, double lo, double hi) {
    if (lo > hi) throw DomainError("clip: lo > hi");
    std::vector<double> lov(t.size(), lo), hiv(t.size(), hi);
    ShareTensor lot = from_public(eng, lov, t.shape), hit = from_public(eng, hiv, t.shape);
    ShareTensor clipped = mux(eng, less_than(eng, t, lot), lot, t);
    return mux(eng, less_than(eng, hit, clipped), hit, clipped);
}

// ---- revealed / public helpers -----------------------------------------------

inline PublicTensor reveal_tensor(Engine& eng, const ShareTensor& t, int client = 0) {
    return PublicTensor(t.shape, reveal(eng, t, client));
}

inline ShareTensor ss_tensor(Engine& eng, int client, const PublicTensor& t) {
    return ss(eng, client, t.values, t.shape);
}

// ---- cleartext tensor arithmetic -------------------------------------------------

namespace pub {

inline PublicTensor binary(const PublicTensor& a, const PublicTensor& b, double (*op)(double, double)) {
    Shape out = broadcast_shape(a.shape, b.shape);
    PublicTensor ea = broadcast_to(a, out), eb = broadcast_to(b, out);
    std::vector<double> vals(out.numel());
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = op(ea.values[i], eb.values[i]);
    return PublicTensor(out, std::move(vals));
}

inline PublicTensor add(const PublicTensor& a, const PublicTensor& b) {
    return binary(a, b, [](double x, double y) { return x + y; });
}
inline PublicTensor sub(const PublicTensor& a, const PublicTensor& b) {
    return binary(a, b, [](double x, double y) { return x - y; });
}
inline PublicTensor mul(const PublicTensor& a, const PublicTensor& b) {
    return binary(a, b, [](double x, double y) { return x * y; });
}

inline PublicTensor transpose(const PublicTensor& t, std::vector<std::size_t> perm = {}) {
    std::size_t r = t.shape.rank();
    if (perm.empty()) {
        perm.resize(r);
        for (std::size_t i = 0; i < r; ++i) perm[i] = r - 1 - i;
    }
    Shape out_shape;
    out_shape.dims.resize(r);
    for (std::size_t i = 0; i < r; ++i) out_shape.dims[i] = t.shape.dims[perm[i]];
    auto in_strides = t.shape.strides();
    auto out_strides = out_shape.strides();
    std::vector<double> vals(t.size());
    for (std::size_t flat = 0; flat < vals.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t axis = 0; axis < r; ++axis)
            src += ((flat / out_strides[axis]) % out_shape.dims[axis]) * in_strides[perm[axis]];
        vals[flat] = t.values[src];
    }
    return PublicTensor(out_shape, std::move(vals));
}

inline PublicTensor dot(const PublicTensor& a, const PublicTensor& b) {
    detail::DotDims dims = detail::dot_dims(a.shape, b.shape);
    std::vector<double> vals(dims.m * dims.p, 0.0);
    for (std::size_t i = 0; i < dims.m; ++i)
        for (std::size_t t = 0; t < dims.k; ++t)
            for (std::size_t j = 0; j < dims.p; ++j)
                vals[i * dims.p + j] += a.values[i * dims.k + t] * b.values[t * dims.p + j];
    return PublicTensor(dims.out_shape, std::move(vals));
}

inline PublicTensor index_axis0(const PublicTensor& t, std::size_t i) {
    if (t.shape.rank() == 0 || i >= t.shape.dims[0]) throw ShapeError("public index out of range");
    Shape out;
    out.dims.assign(t.shape.dims.begin() + 1, t.shape.dims.end());
    std::size_t inner = out.numel();
    std::vector<double> vals(t.values.begin() + long(i * inner), t.values.begin() + long((i + 1) * inner));
    return PublicTensor(out, std::move(vals));
}

} // namespace pub

// Dot with a public right operand: local matrix products and the local shift,
// no communication needed.
inline ShareTensor dot_public(Engine& eng, const ShareTensor& A, const PublicTensor& B) {
    const RingConfig& cfg = eng.cfg();
    detail::DotDims dims = detail::dot_dims(A.shape, B.shape);
    std::vector<u128> braw = encode_public(cfg, B);
    ShareTensor out = ShareTensor::sized(dims.out_shape);
    for (int p = 0; p < 4; ++p) {
        std::vector<u128> c;
        detail::local_matmul(cfg, A.party[p].first, braw, c, dims.m, dims.k, dims.p);
        for (std::size_t i = 0; i < c.size(); ++i)
            out.party[p].first[i] = arith_shift_right(cfg, c[i], cfg.d);
        detail::local_matmul(cfg, A.party[p].second, braw, c, dims.m, dims.k, dims.p);
        for (std::size_t i = 0; i < c.size(); ++i)
            out.party[p].second[i] = arith_shift_right(cfg, c[i], cfg.d);
    }
    post_check(eng, out);
    return out;
}

inline ShareTensor dot_public(Engine& eng, const PublicTensor& A, const ShareTensor& B) {
    const RingConfig& cfg = eng.cfg();
    detail::DotDims dims = detail::dot_dims(A.shape, B.shape);
    std::vector<u128> araw = encode_public(cfg, A);
    ShareTensor out = ShareTensor::sized(dims.out_shape);
    for (int p = 0; p < 4; ++p) {
        std::vector<u128> c;
        detail::local_matmul(cfg, araw, B.party[p].first, c, dims.m, dims.k, dims.p);
        for (std::size_t i = 0; i < c.size(); ++i)
            out.party[p].first[i] = arith_shift_right(cfg, c[i], cfg.d);
        detail::local_matmul(cfg, araw, B.party[p].second, c, dims.m, dims.k, dims.p);
        for (std::size_t i = 0; i < c.size(); ++i)
            out.party[p].second[i] = arith_shift_right(cfg, c[i], cfg.d);
    }
    post_check(eng, out);
    return out;
}

// ---- CSV and QSTN container formats --------------------------------------------

// CSV: one header line "shape: d1,d2,...", then row-major decimal reals.
inline void write_tensor_csv(const std::string& path, const PublicTensor& t) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "shape:";
    for (std::size_t i = 0; i < t.shape.rank(); ++i) out << (i ? "," : " ") << t.shape.dims[i];
    out << "\n";
    out.precision(17);
    std::size_t row = t.shape.rank() >= 1 ? t.shape.dims[t.shape.rank() - 1] : 1;
    if (row == 0) row = 1;
    for (std::size_t i = 0; i < t.values.size(); ++i) {
        out << t.values[i];
        out << (((i + 1) % row == 0) ? '\n' : ',');
    }
    if (t.values.empty()) out << "\n";
    if (!out) throw IoError("failed writing " + path);
}

inline PublicTensor read_tensor_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("shape:", 0) != 0)
        throw IoError(path + ": missing 'shape:' header");
    Shape shape;
    {
        std::string dims = header.substr(6);
        std::stringstream ss(dims);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.find_first_not_of(" \t\r") == std::string::npos) continue;
            long v = std::stol(tok);
            if (v < 0) throw IoError(path + ": negative dimension");
            shape.dims.push_back(std::size_t(v));
        }
    }
    std::vector<double> vals;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            vals.push_back(std::stod(tok));
        }
    }
    if (vals.size() != shape.numel())
        throw IoError(path + ": expected " + std::to_string(shape.numel()) + " values, found " +
                      std::to_string(vals.size()));
    return PublicTensor(std::move(shape), std::move(vals));
}

// QSTN: magic "QSTN", u32 rank, u64 dims..., little-endian n/8-byte raw ring
// elements, row-major.
inline void write_tensor_qstn(const std::string& path, const RingConfig& cfg, const Shape& shape,
                              const std::vector<u128>& raws) {
    if (shape.numel() != raws.size()) throw ShapeError("qstn: size mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("QSTN", 4);
    std::uint32_t rank = std::uint32_t(shape.rank());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (auto d : shape.dims) {
        std::uint64_t v = d;
        out.write(reinterpret_cast<const char*>(&v), 8);
    }
    int width = cfg.elem_bytes();
    for (u128 r : raws) {
        char buf[16];
        for (int b = 0; b < width; ++b) buf[b] = char(std::uint8_t(r >> (8 * b)));
        out.write(buf, width);
    }
    if (!out) throw IoError("failed writing " + path);
}

inline std::pair<Shape, std::vector<u128>> read_tensor_qstn(const std::string& path, const RingConfig& cfg) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "QSTN") throw IoError(path + ": bad magic");
    std::uint32_t rank = 0;
    in.read(reinterpret_cast<char*>(&rank), 4);
    if (!in || rank > 16) throw IoError(path + ": bad rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) {
        std::uint64_t d = 0;
        in.read(reinterpret_cast<char*>(&d), 8);
        if (!in) throw IoError(path + ": truncated dims");
        shape.dims.push_back(std::size_t(d));
    }
    int width = cfg.elem_bytes();
    std::vector<u128> raws(shape.numel());
    for (auto& r : raws) {
        char buf[16];
        in.read(buf, width);
        if (!in) throw IoError(path + ": truncated payload");
        u128 v = 0;
        for (int b = width - 1; b >= 0; --b) v = (v << 8) | u128(std::uint8_t(buf[b]));
        r = v & cfg.mask();
    }
    char extra;
    if (in.read(&extra, 1)) throw IoError(path + ": trailing bytes");
    return {std::move(shape), std::move(raws)};
}

} // namespace quadshare
