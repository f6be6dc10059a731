#pragma once

// Disk-backed share arrays for datasets too large to hold in memory.  Rows
// (first-axis slices) are stored contiguously; random batches are served by a
// sequential chunk scan, and IO time is accounted separately from
// compute/communication.

#include <chrono>
#include <cstdio>
#include <fstream>

#include "quadshare/share_tensor.hpp"

namespace quadshare {

class LargeArray {
public:
    static constexpr std::size_t kDefaultChunkBytes = 4 << 20;

    // Creates (or overwrites) the backing file from an in-memory tensor.
    LargeArray(std::string path, const RingConfig& cfg, const ShareTensor& t,
               std::size_t chunk_bytes = kDefaultChunkBytes)
        : path_(std::move(path)), cfg_(cfg), shape_(t.shape) {
        if (shape_.rank() == 0) throw ShapeError("LargeArray needs rank >= 1");
        init_layout(chunk_bytes);
        std::ofstream out(path_, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot create " + path_);
        std::vector<char> rec(record_bytes_);
        for (std::size_t e = 0; e < t.size(); ++e) {
            char* p = rec.data();
            for (int party = 0; party < 4; ++party) {
                encode_elem(t.party[party].first[e], p);
                p += elem_bytes_;
                encode_elem(t.party[party].second[e], p);
                p += elem_bytes_;
            }
            out.write(rec.data(), std::streamsize(rec.size()));
        }
        if (!out) throw IoError("failed writing " + path_);
    }

    // Opens an existing backing file; the caller supplies the shape.
    LargeArray(std::string path, const RingConfig& cfg, Shape shape,
               std::size_t chunk_bytes = kDefaultChunkBytes)
        : path_(std::move(path)), cfg_(cfg), shape_(std::move(shape)) {
        if (shape_.rank() == 0) throw ShapeError("LargeArray needs rank >= 1");
        init_layout(chunk_bytes);
        std::ifstream in(path_, std::ios::binary | std::ios::ate);
        if (!in) throw IoError("cannot open " + path_);
        std::uint64_t expect = std::uint64_t(shape_.numel()) * record_bytes_;
        if (std::uint64_t(in.tellg()) != expect)
            throw IoError(path_ + ": size mismatch, expected " + std::to_string(expect) + " bytes");
    }

    const Shape& shape() const { return shape_; }
    std::size_t rows() const { return shape_.dims[0]; }
    std::size_t chunk_rows() const { return chunk_rows_; }
    double io_ms() const { return io_ms_; }

    // Retrieves the given rows by scanning the file chunk by chunk in order;
    // the result is identical to slicing an in-memory tensor.
    ShareTensor get_batch(const std::vector<std::size_t>& indices) {
        for (std::size_t r : indices)
            if (r >= rows()) throw IoError(path_ + ": row " + std::to_string(r) + " out of range");

        Shape out_shape = shape_;
        out_shape.dims[0] = indices.size();
        ShareTensor out = ShareTensor::sized(out_shape);

        std::ifstream in(path_, std::ios::binary);
        if (!in) throw IoError("cannot open " + path_);
        std::vector<char> chunk;
        std::size_t nchunks = (rows() + chunk_rows_ - 1) / chunk_rows_;
        for (std::size_t c = 0; c < nchunks; ++c) {
            std::size_t first_row = c * chunk_rows_;
            std::size_t nrows = std::min(chunk_rows_, rows() - first_row);
            bool wanted = false;
            for (std::size_t r : indices)
                if (r >= first_row && r < first_row + nrows) { wanted = true; break; }
            if (!wanted) continue;
            load_chunk(in, first_row, nrows, chunk);
            for (std::size_t oi = 0; oi < indices.size(); ++oi) {
                std::size_t r = indices[oi];
                if (r < first_row || r >= first_row + nrows) continue;
                const char* src = chunk.data() + (r - first_row) * row_bytes_;
                decode_row(src, out, oi);
            }
        }
        return out;
    }

    ShareTensor get_row(std::size_t index) { return get_batch({index}); }

private:
    void init_layout(std::size_t chunk_bytes) {
        elem_bytes_ = std::size_t(cfg_.elem_bytes());
        record_bytes_ = 8 * elem_bytes_;
        row_elems_ = 1;
        for (std::size_t i = 1; i < shape_.rank(); ++i) row_elems_ *= shape_.dims[i];
        row_bytes_ = row_elems_ * record_bytes_;
        chunk_rows_ = std::max<std::size_t>(1, chunk_bytes / std::max<std::size_t>(1, row_bytes_));
    }

    void encode_elem(u128 v, char* p) const {
        for (std::size_t b = 0; b < elem_bytes_; ++b) p[b] = char(std::uint8_t(v >> (8 * b)));
    }

    u128 decode_elem(const char* p) const {
        u128 v = 0;
        for (std::size_t b = elem_bytes_; b-- > 0;) v = (v << 8) | u128(std::uint8_t(p[b]));
        return v & cfg_.mask();
    }

    void load_chunk(std::ifstream& in, std::size_t first_row, std::size_t nrows, std::vector<char>& chunk) {
        auto t0 = std::chrono::steady_clock::now();
        chunk.resize(nrows * row_bytes_);
        in.seekg(std::streamoff(first_row * row_bytes_));
        in.read(chunk.data(), std::streamsize(chunk.size()));
        if (!in) throw IoError(path_ + ": read failed");
        io_ms_ += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }

    void decode_row(const char* src, ShareTensor& out, std::size_t out_row) const {
        for (std::size_t j = 0; j < row_elems_; ++j) {
            const char* rec = src + j * record_bytes_;
            std::size_t dst = out_row * row_elems_ + j;
            for (int party = 0; party < 4; ++party) {
                out.party[party].first[dst] = decode_elem(rec);
                rec += elem_bytes_;
                out.party[party].second[dst] = decode_elem(rec);
                rec += elem_bytes_;
            }
        }
    }

    std::string path_;
    RingConfig cfg_;
    Shape shape_;
    std::size_t elem_bytes_ = 0, record_bytes_ = 0, row_elems_ = 0, row_bytes_ = 0, chunk_rows_ = 0;
    double io_ms_ = 0.0;
};

} // namespace quadshare
