#pragma once

// The 2-out-of-4 replicated share algebra: client-side splitting, server-side
// share initialization, free addition and affine ops, and reveal.
//
// Share layout for a secret x:  S1 holds (x1, x1'), S2 holds (x2, x2'),
// Sa holds (xa, xa') = (x2, x1'), Sb holds (xb, xb') = (x1, x2'),
// with x1 + x2 = x1' + x2' = x mod 2^n.

#include <utility>
#include <vector>

#include "quadshare/engine.hpp"
#include "quadshare/share_tensor.hpp"

namespace quadshare {

// Client-side split: x1 uniform, x2 = x - x1.
inline std::pair<u128, u128> client_split(Engine& eng, int client_index, u128 raw) {
    const RingConfig& cfg = eng.cfg();
    u128 x1 = eng.client_stream(client_index).next_ring(cfg);
    return {x1, ring_sub(cfg, raw, x1)};
}

// Shares raw values held by a client across the four servers.  Two rounds on
// the transport: the client distributes (x1, x2), then S1/S2 derive and
// forward the primed components (S1 and S2 send two elements each; Sa and Sb
// send nothing).
inline ShareTensor ss_raw(Engine& eng, int client_index, const std::vector<u128>& raws, Shape shape) {
    const RingConfig& cfg = eng.cfg();
    std::size_t m = raws.size();
    if (shape.numel() != m) throw ShapeError("ss: value count does not match shape " + shape.str());
    ShareTensor out = ShareTensor::sized(std::move(shape));
    if (m == 0) return out;

    int client = client_party(client_index);
    eng.run_round({{client, [&](PartyCtx& ctx) {
        std::vector<u128> x1(m), x2(m);
        for (std::size_t i = 0; i < m; ++i) {
            auto [a, b] = client_split(eng, client_index, raws[i]);
            x1[i] = a;
            x2[i] = b;
        }
        ctx.send_ring(S1, x1);
        ctx.send_ring(S2, x2);
    }}});

    eng.server_phase({[&](PartyCtx& ctx) { // S1
                          std::vector<u128> x1 = ctx.recv_ring(client, m);
                          std::vector<u128> x1p(m);
                          PairStream& r12 = ctx.pair(P12);
                          for (std::size_t i = 0; i < m; ++i) x1p[i] = ring_sub(cfg, x1[i], r12.next_ring(cfg));
                          ctx.send_ring(Sb, x1);
                          ctx.send_ring(Sa, x1p);
                          out.party[S1].first = std::move(x1);
                          out.party[S1].second = std::move(x1p);
                      },
                      [&](PartyCtx& ctx) { // S2
                          std::vector<u128> x2 = ctx.recv_ring(client, m);
                          std::vector<u128> x2p(m);
                          PairStream& r12 = ctx.pair(P12);
                          for (std::size_t i = 0; i < m; ++i) x2p[i] = ring_add(cfg, x2[i], r12.next_ring(cfg));
                          ctx.send_ring(Sa, x2);
                          ctx.send_ring(Sb, x2p);
                          out.party[S2].first = std::move(x2);
                          out.party[S2].second = std::move(x2p);
                      },
                      [](PartyCtx&) {}, [](PartyCtx&) {}});

    eng.run_round({{Sa, [&](PartyCtx& ctx) {
                        out.party[Sa].first = ctx.recv_ring(S2, m);  // xa = x2
                        out.party[Sa].second = ctx.recv_ring(S1, m); // xa' = x1'
                    }},
                   {Sb, [&](PartyCtx& ctx) {
                        out.party[Sb].first = ctx.recv_ring(S1, m);  // xb = x1
                        out.party[Sb].second = ctx.recv_ring(S2, m); // xb' = x2'
                    }}});
    return out;
}

inline ShareTensor ss(Engine& eng, int client_index, const std::vector<double>& values, Shape shape) {
    std::vector<u128> raws(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) raws[i] = encode_fixed(eng.cfg(), values[i]);
    return ss_raw(eng, client_index, raws, std::move(shape));
}

inline ShareTensor ss_scalar(Engine& eng, double v, int client_index = 0) {
    return ss(eng, client_index, {v}, Shape{});
}

// Recipients learn x = x1 + x2; two messages per recipient (x1 from S1, x2
// from S2), one round.
inline std::vector<u128> reveal_raw(Engine& eng, const ShareTensor& t, int client_index = 0) {
    std::size_t m = t.size();
    if (m == 0) return {};
    int client = client_party(client_index);
    eng.server_phase({[&](PartyCtx& ctx) { ctx.send_ring(client, t.party[S1].first); },
                      [&](PartyCtx& ctx) { ctx.send_ring(client, t.party[S2].first); },
                      [](PartyCtx&) {}, [](PartyCtx&) {}});
    std::vector<u128> out(m);
    eng.run_round({{client, [&](PartyCtx& ctx) {
                        std::vector<u128> x1 = ctx.recv_ring(S1, m);
                        std::vector<u128> x2 = ctx.recv_ring(S2, m);
                        for (std::size_t i = 0; i < m; ++i) out[i] = ring_add(eng.cfg(), x1[i], x2[i]);
                    }}});
    return out;
}

inline std::vector<double> reveal(Engine& eng, const ShareTensor& t, int client_index = 0) {
    std::vector<u128> raws = reveal_raw(eng, t, client_index);
    std::vector<double> out(raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i) out[i] = decode_fixed(eng.cfg(), raws[i]);
    return out;
}

inline double reveal_scalar(Engine& eng, const ShareTensor& t, int client_index = 0) {
    return reveal(eng, t, client_index).at(0);
}

inline std::vector<std::uint8_t> reveal_bits(Engine& eng, const BitTensor& t, int client_index = 0) {
    std::size_t m = t.size();
    if (m == 0) return {};
    int client = client_party(client_index);
    eng.server_phase({[&](PartyCtx& ctx) { ctx.send_bits(client, t.party[S1].first); },
                      [&](PartyCtx& ctx) { ctx.send_bits(client, t.party[S2].first); },
                      [](PartyCtx&) {}, [](PartyCtx&) {}});
    std::vector<std::uint8_t> out(m);
    eng.run_round({{client, [&](PartyCtx& ctx) {
                        auto c1 = ctx.recv_bits(S1, m);
                        auto c2 = ctx.recv_bits(S2, m);
                        for (std::size_t i = 0; i < m; ++i) out[i] = c1[i] ^ c2[i];
                    }}});
    return out;
}

// ---- local (free) share algebra ---------------------------------------------

inline void expect_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (a != b) throw ShapeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}

inline ShareTensor add_shares(Engine& eng, const ShareTensor& a, const ShareTensor& b) {
    expect_same_shape(a.shape, b.shape, "add");
    const RingConfig& cfg = eng.cfg();
    ShareTensor out = ShareTensor::sized(a.shape);
    for (int p = 0; p < 4; ++p)
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.party[p].first[i] = ring_add(cfg, a.party[p].first[i], b.party[p].first[i]);
            out.party[p].second[i] = ring_add(cfg, a.party[p].second[i], b.party[p].second[i]);
        }
    return out;
}

inline ShareTensor negate_shares(Engine& eng, const ShareTensor& a) {
    const RingConfig& cfg = eng.cfg();
    ShareTensor out = ShareTensor::sized(a.shape);
    for (int p = 0; p < 4; ++p)
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.party[p].first[i] = ring_neg(cfg, a.party[p].first[i]);
            out.party[p].second[i] = ring_neg(cfg, a.party[p].second[i]);
        }
    return out;
}

inline ShareTensor sub_shares(Engine& eng, const ShareTensor& a, const ShareTensor& b) {
    expect_same_shape(a.shape, b.shape, "sub");
    const RingConfig& cfg = eng.cfg();
    ShareTensor out = ShareTensor::sized(a.shape);
    for (int p = 0; p < 4; ++p)
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.party[p].first[i] = ring_sub(cfg, a.party[p].first[i], b.party[p].first[i]);
            out.party[p].second[i] = ring_sub(cfg, a.party[p].second[i], b.party[p].second[i]);
        }
    return out;
}

// Public constant folds into the x1/x1' components, mirrored on Sb/Sa per the
// replication layout.
inline ShareTensor add_public_raw(Engine& eng, const ShareTensor& a, const std::vector<u128>& craw) {
    const RingConfig& cfg = eng.cfg();
    if (craw.size() != a.size()) throw ShapeError("add_public: constant size mismatch");
    ShareTensor out = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.party[S1].first[i] = ring_add(cfg, out.party[S1].first[i], craw[i]);
        out.party[S1].second[i] = ring_add(cfg, out.party[S1].second[i], craw[i]);
        out.party[Sb].first[i] = ring_add(cfg, out.party[Sb].first[i], craw[i]);  // xb = x1
        out.party[Sa].second[i] = ring_add(cfg, out.party[Sa].second[i], craw[i]); // xa' = x1'
    }
    return out;
}

inline ShareTensor add_public(Engine& eng, const ShareTensor& a, double c) {
    std::vector<u128> craw(a.size(), encode_fixed(eng.cfg(), c));
    return add_public_raw(eng, a, craw);
}

inline ShareTensor sub_public(Engine& eng, const ShareTensor& a, double c) { return add_public(eng, a, -c); }

// c - a for public c.
inline ShareTensor sub_from_public(Engine& eng, double c, const ShareTensor& a) {
    return add_public(eng, negate_shares(eng, a), c);
}

// Exact scaling by a public integer (no truncation).
inline ShareTensor mul_int_public(Engine& eng, const ShareTensor& a, i128 factor) {
    const RingConfig& cfg = eng.cfg();
    u128 f = ring_from_signed(cfg, factor);
    ShareTensor out = ShareTensor::sized(a.shape);
    for (int p = 0; p < 4; ++p)
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.party[p].first[i] = ring_mul(cfg, a.party[p].first[i], f);
            out.party[p].second[i] = ring_mul(cfg, a.party[p].second[i], f);
        }
    return out;
}

// Shares of a public tensor: x1 carries the value, x2 is zero, mirrored per
// the replication layout.  Valid shares, no secrecy intended.
inline ShareTensor from_public_raw(const std::vector<u128>& raws, Shape shape) {
    ShareTensor out = ShareTensor::sized(std::move(shape));
    if (raws.size() != out.size()) throw ShapeError("from_public: size mismatch");
    out.party[S1].first = raws;
    out.party[S1].second = raws;
    out.party[Sb].first = raws;  // xb = x1
    out.party[Sa].second = raws; // xa' = x1'
    return out;
}

inline ShareTensor from_public(Engine& eng, const std::vector<double>& values, Shape shape) {
    std::vector<u128> raws(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) raws[i] = encode_fixed(eng.cfg(), values[i]);
    return from_public_raw(raws, std::move(shape));
}

inline ShareTensor shares_zeros(Shape shape) { return ShareTensor::sized(std::move(shape)); }

inline ShareTensor shares_ones(Engine& eng, Shape shape) {
    std::vector<double> v(shape.numel(), 1.0);
    return from_public(eng, v, std::move(shape));
}

inline BitTensor bit_from_public(const std::vector<std::uint8_t>& bits, Shape shape) {
    BitTensor out = BitTensor::sized(std::move(shape));
    if (bits.size() != out.size()) throw ShapeError("bit_from_public: size mismatch");
    for (std::size_t i = 0; i < bits.size(); ++i) {
        std::uint8_t b = bits[i] & 1;
        out.party[S1].first[i] = b;
        out.party[S1].second[i] = b;
        out.party[Sb].first[i] = b;
        out.party[Sa].second[i] = b;
    }
    return out;
}

// ---- test/oracle-side helpers ------------------------------------------------
// These read party state directly (no messages), so NetStats only ever
// reflects protocol traffic.

namespace debug {

// Full 8-component tuple (x1, x1', x2, x2', xa, xa', xb, xb') per element.
template <typename T>
std::vector<std::array<T, 8>> collect(const ShareTensorT<T>& t) {
    std::vector<std::array<T, 8>> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = {t.party[S1].first[i], t.party[S1].second[i], t.party[S2].first[i], t.party[S2].second[i],
                  t.party[Sa].first[i], t.party[Sa].second[i], t.party[Sb].first[i], t.party[Sb].second[i]};
    return out;
}

// Replication equalities: xa = x2, xa' = x1', xb = x1, xb' = x2'.
template <typename T>
void check_replication(const ShareTensorT<T>& t) {
    for (std::size_t i = 0; i < t.size(); ++i) {
        bool ok = t.party[Sa].first[i] == t.party[S2].first[i] &&
                  t.party[Sa].second[i] == t.party[S1].second[i] &&
                  t.party[Sb].first[i] == t.party[S1].first[i] &&
                  t.party[Sb].second[i] == t.party[S2].second[i];
        if (!ok) throw EngineError("replication consistency violated at element " + std::to_string(i));
    }
}

inline std::vector<u128> reconstruct_raw(const RingConfig& cfg, const ShareTensor& t) {
    std::vector<u128> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = ring_add(cfg, t.party[S1].first[i], t.party[S2].first[i]);
    return out;
}

inline std::vector<u128> reconstruct_raw_primed(const RingConfig& cfg, const ShareTensor& t) {
    std::vector<u128> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = ring_add(cfg, t.party[S1].second[i], t.party[S2].second[i]);
    return out;
}

inline std::vector<std::uint8_t> reconstruct_bits(const BitTensor& t) {
    std::vector<std::uint8_t> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = std::uint8_t((t.party[S1].first[i] ^ t.party[S2].first[i]) & 1);
    return out;
}

} // namespace debug

// Debug-mode post-check used by every protocol.
template <typename T>
inline void post_check(Engine& eng, const ShareTensorT<T>& t) {
    if (eng.debug_checks()) debug::check_replication(t);
}

} // namespace quadshare
