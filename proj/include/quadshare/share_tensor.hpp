#pragma once

// N-dimensional arrays of replicated shares.  Each of the four parties holds
// one flat pair of component vectors; the full 8-component tuple of any
// element exists only in test/oracle code.  Shape manipulation never
// communicates: it reindexes all party views identically.

#include <array>
#include <cstdint>
#include <vector>

#include "quadshare/ring.hpp"
#include "quadshare/shape.hpp"

namespace quadshare {

template <typename T>
struct PartyShares {
    std::vector<T> first;  // x_i
    std::vector<T> second; // x_i'
};

// T = u128 for arithmetic shares over Z_{2^n}; T = uint8_t for bit shares
// over Z_2 (one logical bit per element).
template <typename T>
struct ShareTensorT {
    Shape shape;
    std::array<PartyShares<T>, 4> party;

    std::size_t size() const { return shape.numel(); }

    static ShareTensorT sized(Shape s) {
        ShareTensorT t;
        std::size_t n = s.numel();
        t.shape = std::move(s);
        for (auto& p : t.party) {
            p.first.assign(n, T(0));
            p.second.assign(n, T(0));
        }
        return t;
    }
};

using ShareTensor = ShareTensorT<u128>;
using BitTensor = ShareTensorT<std::uint8_t>;

// ---- zero-communication reindexing -----------------------------------------

template <typename T>
ShareTensorT<T> gather(const ShareTensorT<T>& t, const std::vector<std::size_t>& idx, Shape out_shape) {
    ShareTensorT<T> out = ShareTensorT<T>::sized(std::move(out_shape));
    for (int p = 0; p < 4; ++p)
        for (std::size_t i = 0; i < idx.size(); ++i) {
            out.party[p].first[i] = t.party[p].first[idx[i]];
            out.party[p].second[i] = t.party[p].second[idx[i]];
        }
    return out;
}

template <typename T>
ShareTensorT<T> reshape(const ShareTensorT<T>& t, Shape s) {
    if (s.numel() != t.size())
        throw ShapeError("cannot reshape " + t.shape.str() + " into " + s.str());
    ShareTensorT<T> out = t;
    out.shape = std::move(s);
    return out;
}

template <typename T>
ShareTensorT<T> flatten(const ShareTensorT<T>& t) {
    return reshape(t, Shape{t.size()});
}

template <typename T>
ShareTensorT<T> transpose(const ShareTensorT<T>& t, std::vector<std::size_t> perm = {}) {
    std::size_t r = t.shape.rank();
    if (perm.empty()) {
        perm.resize(r);
        for (std::size_t i = 0; i < r; ++i) perm[i] = r - 1 - i;
    }
    if (perm.size() != r) throw ShapeError("transpose permutation rank mismatch");
    Shape out_shape;
    out_shape.dims.resize(r);
    for (std::size_t i = 0; i < r; ++i) out_shape.dims[i] = t.shape.dims[perm[i]];
    auto in_strides = t.shape.strides();
    auto out_strides = out_shape.strides();
    std::vector<std::size_t> idx(t.size());
    for (std::size_t flat = 0; flat < idx.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t axis = 0; axis < r; ++axis)
            src += ((flat / out_strides[axis]) % out_shape.dims[axis]) * in_strides[perm[axis]];
        idx[flat] = src;
    }
    return gather(t, idx, out_shape);
}

template <typename T>
ShareTensorT<T> repeat(const ShareTensorT<T>& t, std::size_t count, std::size_t axis) {
    if (axis >= std::max<std::size_t>(t.shape.rank(), 1))
        throw ShapeError("repeat axis out of range for " + t.shape.str());
    Shape in = t.shape.rank() ? t.shape : Shape{1};
    Shape out_shape = in;
    out_shape.dims[axis] *= count;
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= in.dims[i];
    for (std::size_t i = axis + 1; i < in.rank(); ++i) inner *= in.dims[i];
    std::size_t dim = in.dims[axis];
    std::vector<std::size_t> idx;
    idx.reserve(out_shape.numel());
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t d = 0; d < dim; ++d)
            for (std::size_t c = 0; c < count; ++c)
                for (std::size_t i = 0; i < inner; ++i)
                    idx.push_back((o * dim + d) * inner + i);
    return gather(t, idx, out_shape);
}

template <typename T>
ShareTensorT<T> tile(const ShareTensorT<T>& t, const std::vector<std::size_t>& reps) {
    Shape in = t.shape;
    std::size_t r = std::max(in.rank(), reps.size());
    while (in.rank() < r) in.dims.insert(in.dims.begin(), 1);
    std::vector<std::size_t> rep(r, 1);
    for (std::size_t i = 0; i < reps.size(); ++i) rep[r - reps.size() + i] = reps[i];
    Shape out_shape = in;
    for (std::size_t i = 0; i < r; ++i) out_shape.dims[i] *= rep[i];
    auto in_strides = in.strides();
    auto out_strides = out_shape.strides();
    std::vector<std::size_t> idx(out_shape.numel());
    for (std::size_t flat = 0; flat < idx.size(); ++flat) {
        std::size_t src = 0;
        for (std::size_t axis = 0; axis < r; ++axis)
            src += (((flat / out_strides[axis]) % out_shape.dims[axis]) % in.dims[axis]) * in_strides[axis];
        idx[flat] = src;
    }
    return gather(t, idx, out_shape);
}

// Select along the first axis (x[i] in ndarray terms).
template <typename T>
ShareTensorT<T> index_axis0(const ShareTensorT<T>& t, std::size_t i) {
    if (t.shape.rank() == 0) throw ShapeError("cannot index a scalar");
    if (i >= t.shape.dims[0]) throw ShapeError("index " + std::to_string(i) + " out of range for " + t.shape.str());
    Shape out_shape;
    out_shape.dims.assign(t.shape.dims.begin() + 1, t.shape.dims.end());
    std::size_t inner = out_shape.numel();
    std::vector<std::size_t> idx(inner);
    for (std::size_t j = 0; j < inner; ++j) idx[j] = i * inner + j;
    return gather(t, idx, out_shape);
}

// Rows [begin, end) along the first axis.
template <typename T>
ShareTensorT<T> slice_axis0(const ShareTensorT<T>& t, std::size_t begin, std::size_t end) {
    if (t.shape.rank() == 0) throw ShapeError("cannot slice a scalar");
    if (begin > end || end > t.shape.dims[0]) throw ShapeError("bad slice range for " + t.shape.str());
    Shape out_shape = t.shape;
    out_shape.dims[0] = end - begin;
    std::size_t inner = 1;
    for (std::size_t i = 1; i < t.shape.rank(); ++i) inner *= t.shape.dims[i];
    std::vector<std::size_t> idx(out_shape.numel());
    for (std::size_t j = 0; j < idx.size(); ++j) idx[j] = begin * inner + j;
    return gather(t, idx, out_shape);
}

// Write a scalar/sub-tensor into position i along the first axis.
template <typename T>
void assign_axis0(ShareTensorT<T>& t, std::size_t i, const ShareTensorT<T>& value) {
    Shape expected;
    expected.dims.assign(t.shape.dims.begin() + 1, t.shape.dims.end());
    if (value.shape != expected)
        throw ShapeError("element assignment shape mismatch: " + value.shape.str() + " into " + t.shape.str());
    std::size_t inner = expected.numel();
    for (int p = 0; p < 4; ++p)
        for (std::size_t j = 0; j < inner; ++j) {
            t.party[p].first[i * inner + j] = value.party[p].first[j];
            t.party[p].second[i * inner + j] = value.party[p].second[j];
        }
}

// Concatenate along an existing first axis.
template <typename T>
ShareTensorT<T> vstack(const ShareTensorT<T>& a, const ShareTensorT<T>& b) {
    if (a.shape.rank() == 0 || b.shape.rank() == 0) throw ShapeError("vstack needs rank >= 1");
    Shape tail_a = a.shape, tail_b = b.shape;
    tail_a.dims[0] = tail_b.dims[0] = 1;
    if (tail_a != tail_b) throw ShapeError("vstack: trailing dims differ: " + a.shape.str() + " vs " + b.shape.str());
    Shape out_shape = a.shape;
    out_shape.dims[0] += b.shape.dims[0];
    ShareTensorT<T> out = ShareTensorT<T>::sized(out_shape);
    std::size_t na = a.size();
    for (int p = 0; p < 4; ++p) {
        for (std::size_t i = 0; i < na; ++i) {
            out.party[p].first[i] = a.party[p].first[i];
            out.party[p].second[i] = a.party[p].second[i];
        }
        for (std::size_t i = 0; i < b.size(); ++i) {
            out.party[p].first[na + i] = b.party[p].first[i];
            out.party[p].second[na + i] = b.party[p].second[i];
        }
    }
    return out;
}

template <typename T>
ShareTensorT<T> concat_axis0(const std::vector<ShareTensorT<T>>& parts) {
    if (parts.empty()) throw ShapeError("concat of nothing");
    Shape elem = parts[0].shape;
    Shape out_shape;
    out_shape.dims.push_back(parts.size());
    out_shape.dims.insert(out_shape.dims.end(), elem.dims.begin(), elem.dims.end());
    ShareTensorT<T> out = ShareTensorT<T>::sized(out_shape);
    std::size_t inner = elem.numel();
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (parts[k].shape != elem) throw ShapeError("concat parts must share one shape");
        for (int p = 0; p < 4; ++p)
            for (std::size_t j = 0; j < inner; ++j) {
                out.party[p].first[k * inner + j] = parts[k].party[p].first[j];
                out.party[p].second[k * inner + j] = parts[k].party[p].second[j];
            }
    }
    return out;
}

} // namespace quadshare
