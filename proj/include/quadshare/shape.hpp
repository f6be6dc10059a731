#pragma once

// Tensor shapes and the trailing-dimension broadcasting rule.

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "quadshare/errors.hpp"

namespace quadshare {

struct Shape {
    std::vector<std::size_t> dims; // empty = scalar

    Shape() = default;
    Shape(std::initializer_list<std::size_t> d) : dims(d) {}
    explicit Shape(std::vector<std::size_t> d) : dims(std::move(d)) {}

    std::size_t rank() const { return dims.size(); }

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }

    bool operator==(const Shape& o) const { return dims == o.dims; }
    bool operator!=(const Shape& o) const { return dims != o.dims; }

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < dims.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(dims[i]);
        }
        s += ")";
        return s;
    }

    // Row-major strides.
    std::vector<std::size_t> strides() const {
        std::vector<std::size_t> st(dims.size(), 1);
        for (std::size_t i = dims.size(); i-- > 1;) st[i - 1] = st[i] * dims[i];
        return st;
    }
};

// Element-wise result shape of combining a and b, or ShapeError naming the
// offending axis pair.
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    std::size_t ra = a.rank(), rb = b.rank();
    std::size_t r = std::max(ra, rb);
    Shape out;
    out.dims.resize(r);
    for (std::size_t i = 0; i < r; ++i) {
        std::size_t da = i < ra ? a.dims[ra - 1 - i] : 1;
        std::size_t db = i < rb ? b.dims[rb - 1 - i] : 1;
        if (da != db && da != 1 && db != 1)
            throw ShapeError("cannot broadcast " + a.str() + " with " + b.str() +
                             ": axis " + std::to_string(r - 1 - i) + " has sizes " +
                             std::to_string(da) + " and " + std::to_string(db));
        out.dims[r - 1 - i] = std::max(da, db);
    }
    return out;
}

// Maps a flat index in `out` back to the flat index in the (broadcast) input
// of shape `in`.  Precomputed per-axis to keep element-wise loops cheap.
class BroadcastIndexer {
public:
    BroadcastIndexer(const Shape& in, const Shape& out) {
        std::size_t r = out.rank();
        auto out_strides = out.strides();
        auto in_strides = in.strides();
        std::size_t ri = in.rank();
        out_stride_.resize(r);
        in_stride_.resize(r);
        dim_.resize(r);
        for (std::size_t i = 0; i < r; ++i) {
            std::size_t axis = r - 1 - i;
            std::size_t din = i < ri ? in.dims[ri - 1 - i] : 1;
            dim_[axis] = out.dims[axis];
            out_stride_[axis] = out_strides[axis];
            in_stride_[axis] = (din == 1) ? 0 : in_strides[ri - 1 - i];
        }
    }

    std::size_t operator()(std::size_t flat) const {
        std::size_t src = 0;
        for (std::size_t axis = 0; axis < dim_.size(); ++axis) {
            std::size_t idx = (flat / out_stride_[axis]) % dim_[axis];
            src += idx * in_stride_[axis];
        }
        return src;
    }

private:
    std::vector<std::size_t> out_stride_, in_stride_, dim_;
};

} // namespace quadshare
