#pragma once

// Basic private operations: fixed-point multiplication, bit extraction
// (ripple and parallel-prefix variants), 4-party OT, comparison, and bitwise
// XOR/AND on bit shares.  Every operation is batched: one call moves one
// round's worth of traffic no matter how many elements it carries.

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "quadshare/sharing.hpp"

namespace quadshare {

// Per-party intermediate values, captured only when a caller asks for them.
struct MulTranscript {
    // t and t' per party, indexed S1,S2,Sa,Sb.
    std::array<std::vector<u128>, 4> t, tp;
};
struct OtTranscript {
    std::array<std::vector<u128>, 4> t, tp, e, ep;
};
struct BitExtractTranscript {
    std::vector<std::uint8_t> u1, u2, ua;                 // step a-c masks/products
    std::vector<std::array<std::uint8_t, 4>> carry_halves; // (c1',c2',ca',cb') after each iteration
};

namespace detail {

// The multiplication exchange shared by mul, dot and outer: each server
// computes a local bilinear term pair (u, u') of size m, masks it with the
// pairwise randomness of Protocol 1, and sends each half to the server that
// completes the sum.  One round, two ring elements per server.
template <typename LocalFn>
ShareTensor bilinear_exchange(Engine& eng, Shape out_shape, std::size_t m, LocalFn local,
                              bool truncate, MulTranscript* transcript = nullptr) {
    const RingConfig& cfg = eng.cfg();
    ShareTensor out = ShareTensor::sized(std::move(out_shape));
    if (m == 0) return out;

    std::array<std::vector<u128>, 4> t, tp;

    eng.server_phase({[&](PartyCtx& ctx) { // S1: t1 = u - r12, t1' = u' - r12'
                          auto [u, up] = local(S1);
                          PairStream& s = ctx.pair(P12);
                          std::vector<u128> r(m), rp(m);
                          for (std::size_t i = 0; i < m; ++i) {
                              r[i] = s.next_ring(cfg);
                              rp[i] = s.next_ring(cfg);
                          }
                          for (std::size_t i = 0; i < m; ++i) {
                              u[i] = ring_sub(cfg, u[i], r[i]);
                              up[i] = ring_sub(cfg, up[i], rp[i]);
                          }
                          ctx.send_ring(Sb, u);
                          ctx.send_ring(Sa, up);
                          t[S1] = std::move(u);
                          tp[S1] = std::move(up);
                      },
                      [&](PartyCtx& ctx) { // S2: t2 = u + r12, t2' = u' + r12'
                          auto [u, up] = local(S2);
                          PairStream& s = ctx.pair(P12);
                          std::vector<u128> r(m), rp(m);
                          for (std::size_t i = 0; i < m; ++i) {
                              r[i] = s.next_ring(cfg);
                              rp[i] = s.next_ring(cfg);
                          }
                          for (std::size_t i = 0; i < m; ++i) {
                              u[i] = ring_add(cfg, u[i], r[i]);
                              up[i] = ring_add(cfg, up[i], rp[i]);
                          }
                          ctx.send_ring(Sa, u);
                          ctx.send_ring(Sb, up);
                          t[S2] = std::move(u);
                          tp[S2] = std::move(up);
                      },
                      [&](PartyCtx& ctx) { // Sa: ta = u - rab, ta' = u' - rab'
                          auto [u, up] = local(Sa);
                          PairStream& s = ctx.pair(Pab);
                          std::vector<u128> r(m), rp(m);
                          for (std::size_t i = 0; i < m; ++i) {
                              r[i] = s.next_ring(cfg);
                              rp[i] = s.next_ring(cfg);
                          }
                          for (std::size_t i = 0; i < m; ++i) {
                              u[i] = ring_sub(cfg, u[i], r[i]);
                              up[i] = ring_sub(cfg, up[i], rp[i]);
                          }
                          ctx.send_ring(S2, u);
                          ctx.send_ring(S1, up);
                          t[Sa] = std::move(u);
                          tp[Sa] = std::move(up);
                      },
                      [&](PartyCtx& ctx) { // Sb: tb = u + rab, tb' = u' + rab'
                          auto [u, up] = local(Sb);
                          PairStream& s = ctx.pair(Pab);
                          std::vector<u128> r(m), rp(m);
                          for (std::size_t i = 0; i < m; ++i) {
                              r[i] = s.next_ring(cfg);
                              rp[i] = s.next_ring(cfg);
                          }
                          for (std::size_t i = 0; i < m; ++i) {
                              u[i] = ring_add(cfg, u[i], r[i]);
                              up[i] = ring_add(cfg, up[i], rp[i]);
                          }
                          ctx.send_ring(S1, u);
                          ctx.send_ring(S2, up);
                          t[Sb] = std::move(u);
                          tp[Sb] = std::move(up);
                      }});

    int shift = truncate ? cfg.d : 0;
    auto combine = [&](const std::vector<u128>& a, const std::vector<u128>& b, std::vector<u128>& dst) {
        dst.resize(m);
        for (std::size_t i = 0; i < m; ++i) dst[i] = arith_shift_right(cfg, ring_add(cfg, a[i], b[i]), shift);
    };

    eng.run_round({{S1, [&](PartyCtx& ctx) {
                        std::vector<u128> tb = ctx.recv_ring(Sb, m), tap = ctx.recv_ring(Sa, m);
                        combine(t[S1], tb, out.party[S1].first);
                        combine(tp[S1], tap, out.party[S1].second);
                    }},
                   {S2, [&](PartyCtx& ctx) {
                        std::vector<u128> ta = ctx.recv_ring(Sa, m), tbp = ctx.recv_ring(Sb, m);
                        combine(t[S2], ta, out.party[S2].first);
                        combine(tp[S2], tbp, out.party[S2].second);
                    }},
                   {Sa, [&](PartyCtx& ctx) {
                        std::vector<u128> t1p = ctx.recv_ring(S1, m), t2 = ctx.recv_ring(S2, m);
                        combine(t[Sa], t2, out.party[Sa].first);
                        combine(tp[Sa], t1p, out.party[Sa].second);
                    }},
                   {Sb, [&](PartyCtx& ctx) {
                        std::vector<u128> t1 = ctx.recv_ring(S1, m), t2p = ctx.recv_ring(S2, m);
                        combine(t[Sb], t1, out.party[Sb].first);
                        combine(tp[Sb], t2p, out.party[Sb].second);
                    }}});

    if (transcript) {
        transcript->t = t;
        transcript->tp = tp;
    }
    post_check(eng, out);
    return out;
}

} // namespace detail

// Fixed-point multiplication: reveals to x*y / 2^d.  One round; each server
// sends exactly two ring elements.
inline ShareTensor mul_fixed(Engine& eng, const ShareTensor& x, const ShareTensor& y,
                             MulTranscript* transcript = nullptr) {
    expect_same_shape(x.shape, y.shape, "mul");
    const RingConfig& cfg = eng.cfg();
    std::size_t m = x.size();
    auto local = [&](int p) {
        std::vector<u128> u(m), up(m);
        for (std::size_t i = 0; i < m; ++i) {
            u[i] = ring_mul(cfg, x.party[p].first[i], y.party[p].second[i]);
            up[i] = ring_mul(cfg, x.party[p].second[i], y.party[p].first[i]);
        }
        return std::pair(std::move(u), std::move(up));
    };
    return detail::bilinear_exchange(eng, x.shape, m, local, /*truncate=*/true, transcript);
}

// Multiplication by a public fixed-point constant: local share scaling
// followed by the local shift, no communication.
inline ShareTensor mul_public_raw(Engine& eng, const ShareTensor& x, const std::vector<u128>& craw) {
    const RingConfig& cfg = eng.cfg();
    if (craw.size() != x.size()) throw ShapeError("mul_public: constant size mismatch");
    ShareTensor out = ShareTensor::sized(x.shape);
    for (int p = 0; p < 4; ++p)
        for (std::size_t i = 0; i < x.size(); ++i) {
            out.party[p].first[i] = arith_shift_right(cfg, ring_mul(cfg, x.party[p].first[i], craw[i]), cfg.d);
            out.party[p].second[i] = arith_shift_right(cfg, ring_mul(cfg, x.party[p].second[i], craw[i]), cfg.d);
        }
    post_check(eng, out);
    return out;
}

inline ShareTensor mul_public(Engine& eng, const ShareTensor& x, double c) {
    std::vector<u128> craw(x.size(), encode_fixed(eng.cfg(), c));
    return mul_public_raw(eng, x, craw);
}

// ---- bitwise operations on bit shares ---------------------------------------

// XOR is addition mod 2: free.
inline BitTensor bit_xor(Engine& eng, const BitTensor& a, const BitTensor& b) {
    expect_same_shape(a.shape, b.shape, "xor");
    BitTensor out = BitTensor::sized(a.shape);
    for (int p = 0; p < 4; ++p)
        for (std::size_t i = 0; i < a.size(); ++i) {
            out.party[p].first[i] = (a.party[p].first[i] ^ b.party[p].first[i]) & 1;
            out.party[p].second[i] = (a.party[p].second[i] ^ b.party[p].second[i]) & 1;
        }
    post_check(eng, out);
    return out;
}

inline BitTensor bit_not(Engine& eng, const BitTensor& a) {
    BitTensor out = a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.party[S1].first[i] ^= 1;
        out.party[S1].second[i] ^= 1;
        out.party[Sb].first[i] ^= 1;
        out.party[Sa].second[i] ^= 1;
    }
    post_check(eng, out);
    return out;
}

// AND is multiplication mod 2: the Protocol 1 exchange over Z_2.  One round,
// two bits per server.
inline BitTensor bit_and(Engine& eng, const BitTensor& a, const BitTensor& b) {
    expect_same_shape(a.shape, b.shape, "and");
    std::size_t m = a.size();
    BitTensor out = BitTensor::sized(a.shape);
    if (m == 0) return out;

    std::array<std::vector<std::uint8_t>, 4> t, tp;

    auto mask_phase = [&](PartyCtx& ctx, int p, PairId pid, int dst_t, int dst_tp) {
        std::vector<std::uint8_t> u(m), up(m), r(m), rp(m);
        PairStream& s = ctx.pair(pid);
        s.next_bits(m, r.data());
        s.next_bits(m, rp.data());
        for (std::size_t i = 0; i < m; ++i) {
            u[i] = std::uint8_t(((a.party[p].first[i] & b.party[p].second[i]) ^ r[i]) & 1);
            up[i] = std::uint8_t(((a.party[p].second[i] & b.party[p].first[i]) ^ rp[i]) & 1);
        }
        ctx.send_bits(dst_t, u);
        ctx.send_bits(dst_tp, up);
        t[p] = std::move(u);
        tp[p] = std::move(up);
    };

    eng.server_phase({[&](PartyCtx& ctx) { mask_phase(ctx, S1, P12, Sb, Sa); },
                      [&](PartyCtx& ctx) { mask_phase(ctx, S2, P12, Sa, Sb); },
                      [&](PartyCtx& ctx) { mask_phase(ctx, Sa, Pab, S2, S1); },
                      [&](PartyCtx& ctx) { mask_phase(ctx, Sb, Pab, S1, S2); }});

    auto combine = [&](const std::vector<std::uint8_t>& x, const std::vector<std::uint8_t>& y,
                       std::vector<std::uint8_t>& dst) {
        dst.resize(m);
        for (std::size_t i = 0; i < m; ++i) dst[i] = std::uint8_t((x[i] ^ y[i]) & 1);
    };

    eng.run_round({{S1, [&](PartyCtx& ctx) {
                        auto tb = ctx.recv_bits(Sb, m), tap = ctx.recv_bits(Sa, m);
                        combine(t[S1], tb, out.party[S1].first);
                        combine(tp[S1], tap, out.party[S1].second);
                    }},
                   {S2, [&](PartyCtx& ctx) {
                        auto ta = ctx.recv_bits(Sa, m), tbp = ctx.recv_bits(Sb, m);
                        combine(t[S2], ta, out.party[S2].first);
                        combine(tp[S2], tbp, out.party[S2].second);
                    }},
                   {Sa, [&](PartyCtx& ctx) {
                        auto t1p = ctx.recv_bits(S1, m), t2 = ctx.recv_bits(S2, m);
                        combine(t[Sa], t2, out.party[Sa].first);
                        combine(tp[Sa], t1p, out.party[Sa].second);
                    }},
                   {Sb, [&](PartyCtx& ctx) {
                        auto t1 = ctx.recv_bits(S1, m), t2p = ctx.recv_bits(S2, m);
                        combine(t[Sb], t1, out.party[Sb].first);
                        combine(tp[Sb], t2p, out.party[Sb].second);
                    }}});

    post_check(eng, out);
    return out;
}

// ---- bit extraction ----------------------------------------------------------

namespace detail {

inline std::vector<std::uint8_t> component_bits(const RingConfig& cfg, const std::vector<u128>& vals,
                                                int bit /*1-based*/) {
    std::vector<std::uint8_t> out(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) out[i] = std::uint8_t(ring_bit(vals[i], bit));
    (void)cfg;
    return out;
}

} // namespace detail

// Extracts bit k of x1 + x2 via the shared-carry ripple adder.  The carry is
// held as the primed half-sharing (c1' at S1/Sa, c2' at S2/Sb); each of the
// k-1 carry iterations costs one round and one bit per server.  In plain
// mode S1 sends the k masked low bits of x1 up front (<= 2k bits per server
// in total); in half-shared mode S1 and Sb split that mask (<= 1.5k).
inline BitTensor extract_bit(Engine& eng, const ShareTensor& x, int k,
                             BitExtractTranscript* transcript = nullptr) {
    const RingConfig& cfg = eng.cfg();
    if (k < 1 || k > cfg.n) throw DomainError("bit index must be in [1, n]");
    std::size_t m = x.size();
    BitTensor out = BitTensor::sized(x.shape);
    if (m == 0) return out;

    bool half = eng.options().extract_mode == BitExtractMode::half_shared;
    // Carry propagation consumes AND-shares of bits 1..k-1 only; plain mode
    // masks all k bits exactly as written, half-shared mode splits the k-1
    // useful ones between S1 and Sb.
    std::size_t ksplit = half ? std::size_t(k - 1) : std::size_t(k);
    std::size_t h1 = half ? (ksplit + 1) / 2 : ksplit;
    std::size_t h2 = ksplit - h1;

    // Per-party protocol state. Each server touches only its own slots.
    std::vector<std::uint8_t> c1p(m, 0), c2p(m, 0), cap(m, 0), cbp(m, 0);
    std::vector<std::uint8_t> u2(m * ksplit, 0), ua(m * ksplit, 0);
    std::vector<std::uint8_t> u1_mask, ub_mask; // senders' copies of r12 / rab

    // Step a-c: establish u2 ^ ua = x1[1:ksplit] & x2[1:ksplit].
    if (ksplit > 0) {
        eng.server_phase({[&](PartyCtx& ctx) { // S1 masks its low bits with r12
                              if (h1 == 0) return;
                              std::vector<std::uint8_t> r(m * h1), u1(m * h1);
                              ctx.pair(P12).next_bits(r.size(), r.data());
                              for (std::size_t j = 0; j < h1; ++j)
                                  for (std::size_t i = 0; i < m; ++i)
                                      u1[j * m + i] = std::uint8_t(
                                          (ring_bit(x.party[S1].first[i], int(j) + 1) ^ r[j * m + i]) & 1);
                              ctx.send_bits(Sa, u1);
                          },
                          [&](PartyCtx& ctx) { // S2: u2 = x2 & r12 on the first span
                              if (h1 == 0) return;
                              std::vector<std::uint8_t> r(m * h1);
                              ctx.pair(P12).next_bits(r.size(), r.data());
                              for (std::size_t j = 0; j < h1; ++j)
                                  for (std::size_t i = 0; i < m; ++i)
                                      u2[j * m + i] = std::uint8_t(
                                          (ring_bit(x.party[S2].first[i], int(j) + 1) & r[j * m + i]) & 1);
                          },
                          [&](PartyCtx& ctx) { // Sa: ua = rab & xa on the second span
                              if (h2 == 0) return;
                              std::vector<std::uint8_t> r(m * h2);
                              ctx.pair(Pab).next_bits(r.size(), r.data());
                              for (std::size_t j = 0; j < h2; ++j)
                                  for (std::size_t i = 0; i < m; ++i)
                                      ua[(h1 + j) * m + i] = std::uint8_t(
                                          (r[j * m + i] & ring_bit(x.party[Sa].first[i], int(h1 + j) + 1)) & 1);
                          },
                          [&](PartyCtx& ctx) { // Sb masks its copy of x1 with rab
                              if (h2 == 0) return;
                              std::vector<std::uint8_t> r(m * h2), ub(m * h2);
                              ctx.pair(Pab).next_bits(r.size(), r.data());
                              for (std::size_t j = 0; j < h2; ++j)
                                  for (std::size_t i = 0; i < m; ++i)
                                      ub[j * m + i] = std::uint8_t(
                                          (ring_bit(x.party[Sb].first[i], int(h1 + j) + 1) ^ r[j * m + i]) & 1);
                              ctx.send_bits(S2, ub);
                          }});

        // Consume: Sa completes ua on the first span, S2 on the second.
        eng.run_round({{Sa, [&](PartyCtx& ctx) {
                            if (h1 == 0) return;
                            auto u1 = ctx.recv_bits(S1, m * h1);
                            for (std::size_t j = 0; j < h1; ++j)
                                for (std::size_t i = 0; i < m; ++i)
                                    ua[j * m + i] = std::uint8_t(
                                        (u1[j * m + i] & ring_bit(x.party[Sa].first[i], int(j) + 1)) & 1);
                            if (transcript) transcript->u1 = u1;
                        }},
                       {S2, [&](PartyCtx& ctx) {
                            if (h2 == 0) return;
                            auto ub = ctx.recv_bits(Sb, m * h2);
                            for (std::size_t j = 0; j < h2; ++j)
                                for (std::size_t i = 0; i < m; ++i)
                                    u2[(h1 + j) * m + i] = std::uint8_t(
                                        (ub[j * m + i] & ring_bit(x.party[S2].first[i], int(h1 + j) + 1)) & 1);
                        }}});
    }

    // Carry loop: c[i+1] = x1[i]&x2[i] ^ (x1[i]^x2[i])&c[i], kept as the
    // primed half-sharing.  One round and one bit per server per iteration.
    for (int it = 1; it <= k - 1; ++it) {
        std::array<std::vector<std::uint8_t>, 4> sent;
        eng.server_phase({[&](PartyCtx& ctx) { // S1 -> Sa
                              std::vector<std::uint8_t> b(m), msg(m);
                              ctx.pair(P12).next_bits(m, b.data());
                              for (std::size_t i = 0; i < m; ++i)
                                  msg[i] = std::uint8_t(((ring_bit(x.party[S1].first[i], it) & c1p[i]) ^ b[i]) & 1);
                              ctx.send_bits(Sa, msg);
                              sent[S1] = std::move(msg);
                          },
                          [&](PartyCtx& ctx) { // S2 -> Sb
                              std::vector<std::uint8_t> b(m), msg(m);
                              ctx.pair(P12).next_bits(m, b.data());
                              for (std::size_t i = 0; i < m; ++i)
                                  msg[i] = std::uint8_t(((ring_bit(x.party[S2].first[i], it) & c2p[i]) ^
                                                         u2[std::size_t(it - 1) * m + i] ^ b[i]) & 1);
                              ctx.send_bits(Sb, msg);
                              sent[S2] = std::move(msg);
                          },
                          [&](PartyCtx& ctx) { // Sa -> S1
                              std::vector<std::uint8_t> b(m), msg(m);
                              ctx.pair(Pab).next_bits(m, b.data());
                              for (std::size_t i = 0; i < m; ++i)
                                  msg[i] = std::uint8_t(((ring_bit(x.party[Sa].first[i], it) & cap[i]) ^
                                                         ua[std::size_t(it - 1) * m + i] ^ b[i]) & 1);
                              ctx.send_bits(S1, msg);
                              sent[Sa] = std::move(msg);
                          },
                          [&](PartyCtx& ctx) { // Sb -> S2
                              std::vector<std::uint8_t> b(m), msg(m);
                              ctx.pair(Pab).next_bits(m, b.data());
                              for (std::size_t i = 0; i < m; ++i)
                                  msg[i] = std::uint8_t(((ring_bit(x.party[Sb].first[i], it) & cbp[i]) ^ b[i]) & 1);
                              ctx.send_bits(S2, msg);
                              sent[Sb] = std::move(msg);
                          }});

        eng.run_round({{S1, [&](PartyCtx& ctx) {
                            auto tap = ctx.recv_bits(Sa, m);
                            for (std::size_t i = 0; i < m; ++i) c1p[i] = std::uint8_t((sent[S1][i] ^ tap[i]) & 1);
                        }},
                       {S2, [&](PartyCtx& ctx) {
                            auto tbp = ctx.recv_bits(Sb, m);
                            for (std::size_t i = 0; i < m; ++i) c2p[i] = std::uint8_t((sent[S2][i] ^ tbp[i]) & 1);
                        }},
                       {Sa, [&](PartyCtx& ctx) {
                            auto t1p = ctx.recv_bits(S1, m);
                            for (std::size_t i = 0; i < m; ++i) cap[i] = std::uint8_t((sent[Sa][i] ^ t1p[i]) & 1);
                        }},
                       {Sb, [&](PartyCtx& ctx) {
                            auto t2p = ctx.recv_bits(S2, m);
                            for (std::size_t i = 0; i < m; ++i) cbp[i] = std::uint8_t((sent[Sb][i] ^ t2p[i]) & 1);
                        }}});
        if (transcript) {
            transcript->carry_halves.push_back({});
            auto& row = transcript->carry_halves.back();
            row = {c1p[0], c2p[0], cap[0], cbp[0]};
        }
    }

    // Final round: full-adder output bit sum[k] = x1[k] ^ x2[k] ^ c[k],
    // re-established as a complete replicated bit share.  One bit per server.
    std::vector<std::uint8_t> v1p(m), v2p(m), va(m), vb(m);
    eng.server_phase({[&](PartyCtx& ctx) {
                          std::vector<std::uint8_t> b(m);
                          ctx.pair(P12).next_bits(m, b.data());
                          for (std::size_t i = 0; i < m; ++i)
                              v1p[i] = std::uint8_t((ring_bit(x.party[S1].first[i], k) ^ c1p[i] ^ b[i]) & 1);
                          ctx.send_bits(Sa, v1p);
                      },
                      [&](PartyCtx& ctx) {
                          std::vector<std::uint8_t> b(m);
                          ctx.pair(P12).next_bits(m, b.data());
                          for (std::size_t i = 0; i < m; ++i)
                              v2p[i] = std::uint8_t((ring_bit(x.party[S2].first[i], k) ^ c2p[i] ^ b[i]) & 1);
                          ctx.send_bits(Sb, v2p);
                      },
                      [&](PartyCtx& ctx) {
                          std::vector<std::uint8_t> b(m);
                          ctx.pair(Pab).next_bits(m, b.data());
                          for (std::size_t i = 0; i < m; ++i)
                              va[i] = std::uint8_t((ring_bit(x.party[Sa].first[i], k) ^ cap[i] ^ b[i]) & 1);
                          ctx.send_bits(S2, va);
                      },
                      [&](PartyCtx& ctx) {
                          std::vector<std::uint8_t> b(m);
                          ctx.pair(Pab).next_bits(m, b.data());
                          for (std::size_t i = 0; i < m; ++i)
                              vb[i] = std::uint8_t((ring_bit(x.party[Sb].first[i], k) ^ cbp[i] ^ b[i]) & 1);
                          ctx.send_bits(S1, vb);
                      }});

    eng.run_round({{S1, [&](PartyCtx& ctx) {
                        out.party[S1].first = ctx.recv_bits(Sb, m); // c1 = cb
                        out.party[S1].second = v1p;
                    }},
                   {S2, [&](PartyCtx& ctx) {
                        out.party[S2].first = ctx.recv_bits(Sa, m); // c2 = ca
                        out.party[S2].second = v2p;
                    }},
                   {Sa, [&](PartyCtx& ctx) {
                        out.party[Sa].first = va;
                        out.party[Sa].second = ctx.recv_bits(S1, m); // ca' = c1'
                    }},
                   {Sb, [&](PartyCtx& ctx) {
                        out.party[Sb].first = vb;
                        out.party[Sb].second = ctx.recv_bits(S2, m); // cb' = c2'
                    }}});

    if (transcript) {
        transcript->u2 = u2;
        transcript->ua = ua;
    }
    post_check(eng, out);
    return out;
}

namespace detail {

// Shares a bit vector known to both members of an owner pair as a full
// replicated bit share.  All messages travel in the caller's current epoch.
struct PairInputShare {
    std::vector<std::uint8_t> v1, v2, v1p, v2p;
};

} // namespace detail

// Parallel-prefix (Kogge-Stone) variant: same output as extract_bit, round
// count 2 + ceil(log2(k-1)) instead of k+1.
inline BitTensor extract_bit_ppa(Engine& eng, const ShareTensor& x, int k) {
    const RingConfig& cfg = eng.cfg();
    if (k < 1 || k > cfg.n) throw DomainError("bit index must be in [1, n]");
    std::size_t m = x.size();
    BitTensor outbit = BitTensor::sized(x.shape);
    if (m == 0) return outbit;

    std::size_t kk = std::size_t(k);
    std::size_t width = m * kk;
    Shape flat{width};

    // One round: share the k low bits of x1 (owner pair S1/Sb) and of x2
    // (owner pair S2/Sa) as full bit shares, bit-major layout.
    BitTensor x1b = BitTensor::sized(flat), x2b = BitTensor::sized(flat);

    auto bits_of = [&](int party, int whichfirst) {
        std::vector<std::uint8_t> w(width);
        const std::vector<u128>& src = whichfirst ? x.party[party].first : x.party[party].second;
        for (std::size_t j = 0; j < kk; ++j)
            for (std::size_t i = 0; i < m; ++i) w[j * m + i] = std::uint8_t(ring_bit(src[i], int(j) + 1));
        return w;
    };

    eng.server_phase({[&](PartyCtx& ctx) { // S1: owner of x1 with Sb
                          std::vector<std::uint8_t> w = bits_of(S1, 1);
                          std::vector<std::uint8_t> r1b(width), r1ap(width), v2(width), v2p(width);
                          ctx.pair(P1b).next_bits(width, r1b.data());
                          ctx.pair(P1a).next_bits(width, r1ap.data());
                          for (std::size_t i = 0; i < width; ++i) {
                              v2[i] = std::uint8_t((w[i] ^ r1b[i]) & 1);
                              v2p[i] = std::uint8_t((w[i] ^ r1ap[i]) & 1);
                          }
                          ctx.send_bits(S2, v2);
                          ctx.send_bits(S2, v2p);
                          ctx.send_bits(Sb, v2p);
                          x1b.party[S1].first = std::move(r1b);
                          x1b.party[S1].second = std::move(r1ap);
                      },
                      [&](PartyCtx& ctx) { // S2: owner of x2 with Sa
                          std::vector<std::uint8_t> w = bits_of(S2, 1);
                          std::vector<std::uint8_t> r2a(width), r2bp(width), v1(width), v1p(width);
                          ctx.pair(P2a).next_bits(width, r2a.data());
                          ctx.pair(P2b).next_bits(width, r2bp.data());
                          for (std::size_t i = 0; i < width; ++i) {
                              v1[i] = std::uint8_t((w[i] ^ r2a[i]) & 1);
                              v1p[i] = std::uint8_t((w[i] ^ r2bp[i]) & 1);
                          }
                          ctx.send_bits(S1, v1);
                          ctx.send_bits(S1, v1p);
                          ctx.send_bits(Sa, v1p);
                          x2b.party[S2].first = std::move(r2a);
                          x2b.party[S2].second = std::move(r2bp);
                      },
                      [&](PartyCtx& ctx) { // Sa holds x2 (= xa) and seed halves r2a, r1a'
                          std::vector<std::uint8_t> w = bits_of(Sa, 1);
                          std::vector<std::uint8_t> r2a(width), r1ap(width), v1(width);
                          ctx.pair(P2a).next_bits(width, r2a.data());
                          ctx.pair(P1a).next_bits(width, r1ap.data());
                          for (std::size_t i = 0; i < width; ++i) v1[i] = std::uint8_t((w[i] ^ r2a[i]) & 1);
                          ctx.send_bits(Sb, v1);           // vb of the x2 share
                          x2b.party[Sa].first = std::move(r2a); // va = v2 = r2a
                          x1b.party[Sa].second = std::move(r1ap); // va' = v1' = r1a'
                      },
                      [&](PartyCtx& ctx) { // Sb holds x1 (= xb) and seed halves r1b, r2b'
                          std::vector<std::uint8_t> w = bits_of(Sb, 1);
                          std::vector<std::uint8_t> r1b(width), r2bp(width), v2(width);
                          ctx.pair(P1b).next_bits(width, r1b.data());
                          ctx.pair(P2b).next_bits(width, r2bp.data());
                          for (std::size_t i = 0; i < width; ++i) v2[i] = std::uint8_t((w[i] ^ r1b[i]) & 1);
                          ctx.send_bits(Sa, v2);           // va of the x1 share
                          x1b.party[Sb].first = std::move(r1b);   // vb = v1 = r1b
                          x2b.party[Sb].second = std::move(r2bp); // vb' = v2' = r2b'
                      }});

    eng.run_round({{S1, [&](PartyCtx& ctx) {
                        x2b.party[S1].first = ctx.recv_bits(S2, width);  // v1 of x2
                        x2b.party[S1].second = ctx.recv_bits(S2, width); // v1' of x2
                    }},
                   {S2, [&](PartyCtx& ctx) {
                        x1b.party[S2].first = ctx.recv_bits(S1, width);  // v2 of x1
                        x1b.party[S2].second = ctx.recv_bits(S1, width); // v2' of x1
                    }},
                   {Sa, [&](PartyCtx& ctx) {
                        x1b.party[Sa].first = ctx.recv_bits(Sb, width);  // va = v2 of x1
                        x2b.party[Sa].second = ctx.recv_bits(S2, width); // va' = v1' of x2
                    }},
                   {Sb, [&](PartyCtx& ctx) {
                        x2b.party[Sb].first = ctx.recv_bits(Sa, width);  // vb = v1 of x2
                        x1b.party[Sb].second = ctx.recv_bits(S1, width); // vb' = v2' of x1
                    }}});
    post_check(eng, x1b);
    post_check(eng, x2b);

    auto block = [&](const BitTensor& t, std::size_t j, std::size_t count) {
        return slice_axis0(reshape(t, Shape{kk, m}), j, j + count);
    };

    // Generate/propagate prefix over bits 1..k-1; the carry into bit k is the
    // combined generate term.
    BitTensor carry;
    if (k > 1) {
        std::size_t kc = kk - 1;
        BitTensor x1low = block(x1b, 0, kc), x2low = block(x2b, 0, kc);
        BitTensor g = bit_and(eng, x1low, x2low);
        BitTensor p = bit_xor(eng, x1low, x2low);
        for (std::size_t shift = 1; shift < kc; shift <<= 1) {
            std::size_t span = kc - shift; // positions shift..kc-1 combine with their lower neighbour
            BitTensor g_hi = slice_axis0(g, shift, kc), g_lo = slice_axis0(g, 0, span);
            BitTensor p_hi = slice_axis0(p, shift, kc), p_lo = slice_axis0(p, 0, span);
            // Batch both prefix products into a single round.
            BitTensor lhs = vstack(p_hi, p_hi), rhs = vstack(g_lo, p_lo);
            BitTensor both = bit_and(eng, lhs, rhs);
            BitTensor pg = slice_axis0(both, 0, span), pp = slice_axis0(both, span, 2 * span);
            BitTensor g_new = bit_xor(eng, g_hi, pg);
            for (std::size_t row = 0; row < span; ++row) {
                assign_axis0(g, shift + row, index_axis0(g_new, row));
                assign_axis0(p, shift + row, index_axis0(pp, row));
            }
        }
        carry = index_axis0(g, kc - 1);
    }

    BitTensor sum = bit_xor(eng, reshape(block(x1b, kk - 1, 1), Shape{m}),
                            reshape(block(x2b, kk - 1, 1), Shape{m}));
    if (k > 1) sum = bit_xor(eng, sum, carry);
    outbit = reshape(sum, x.shape);
    post_check(eng, outbit);
    return outbit;
}

// ---- oblivious selection -----------------------------------------------------

// 4-party OT: reveals to x when c = 1 and to 0 when c = 0, exactly (no
// truncation).  One round; each server sends 4 ring elements.
inline ShareTensor ot_select(Engine& eng, const BitTensor& c, const ShareTensor& x,
                             OtTranscript* transcript = nullptr) {
    expect_same_shape(c.shape, x.shape, "ot_select");
    const RingConfig& cfg = eng.cfg();
    std::size_t m = x.size();
    ShareTensor out = ShareTensor::sized(x.shape);
    if (m == 0) return out;

    // one_minus_2c in the ring: bit 0 -> 1, bit 1 -> -1
    auto sel = [&](std::uint8_t bit) { return bit ? ring_sub(cfg, 0, 1) : u128(1); };

    std::array<std::vector<u128>, 4> t, tp, e, ep;
    std::array<std::vector<u128>, 4> own_r, own_rp; // the pair-local r kept for step e

    struct Draws {
        std::vector<u128> r, rp, rx, rxp;
    };

    auto compute = [&](PartyCtx& ctx, int p, PairId main, PairId extra_un, PairId extra_pr) {
        Draws d;
        d.r.resize(m);
        d.rp.resize(m);
        d.rx.resize(m);
        d.rxp.resize(m);
        PairStream& main_s = ctx.pair(main);
        for (std::size_t i = 0; i < m; ++i) d.r[i] = main_s.next_ring(cfg);
        for (std::size_t i = 0; i < m; ++i) d.rp[i] = main_s.next_ring(cfg);
        PairStream& un_s = ctx.pair(extra_un);
        for (std::size_t i = 0; i < m; ++i) d.rx[i] = un_s.next_ring(cfg);
        PairStream& pr_s = ctx.pair(extra_pr);
        for (std::size_t i = 0; i < m; ++i) d.rxp[i] = pr_s.next_ring(cfg);

        std::vector<u128> tv(m), tpv(m), ev(m), epv(m);
        for (std::size_t i = 0; i < m; ++i) {
            u128 cb = u128(c.party[p].second[i] & 1); // c_i'
            u128 cu = u128(c.party[p].first[i] & 1);  // c_i
            tv[i] = ring_sub(cfg, ring_mul(cfg, cb, x.party[p].first[i]), d.r[i]);
            tpv[i] = ring_sub(cfg, ring_mul(cfg, cu, x.party[p].second[i]), d.rp[i]);
            ev[i] = ring_add(cfg, ring_mul(cfg, sel(std::uint8_t(cb)), d.r[i]), d.rx[i]);
            epv[i] = ring_add(cfg, ring_mul(cfg, sel(std::uint8_t(cu)), d.rp[i]), d.rxp[i]);
        }
        t[p] = std::move(tv);
        tp[p] = std::move(tpv);
        e[p] = std::move(ev);
        ep[p] = std::move(epv);
        own_r[p] = std::move(d.rx);
        own_rp[p] = std::move(d.rxp);
    };

    eng.server_phase({[&](PartyCtx& ctx) { // S1: r12, r12', r1b, r1a'
                          compute(ctx, S1, P12, P1b, P1a);
                          ctx.send_ring(Sa, tp[S1]);
                          ctx.send_ring(Sa, e[S1]);
                          ctx.send_ring(Sb, t[S1]);
                          ctx.send_ring(Sb, ep[S1]);
                      },
                      [&](PartyCtx& ctx) { // S2: r12, r12', r2a, r2b'
                          compute(ctx, S2, P12, P2a, P2b);
                          ctx.send_ring(Sb, tp[S2]);
                          ctx.send_ring(Sb, e[S2]);
                          ctx.send_ring(Sa, t[S2]);
                          ctx.send_ring(Sa, ep[S2]);
                      },
                      [&](PartyCtx& ctx) { // Sa: rab, rab', r2a, r1a'
                          compute(ctx, Sa, Pab, P2a, P1a);
                          ctx.send_ring(S1, tp[Sa]);
                          ctx.send_ring(S1, e[Sa]);
                          ctx.send_ring(S2, t[Sa]);
                          ctx.send_ring(S2, ep[Sa]);
                      },
                      [&](PartyCtx& ctx) { // Sb: rab, rab', r1b, r2b'
                          compute(ctx, Sb, Pab, P1b, P2b);
                          ctx.send_ring(S2, tp[Sb]);
                          ctx.send_ring(S2, e[Sb]);
                          ctx.send_ring(S1, t[Sb]);
                          ctx.send_ring(S1, ep[Sb]);
                      }});

    auto finish = [&](int p, const std::vector<u128>& t_in, const std::vector<u128>& tp_in,
                      const std::vector<u128>& e_in, const std::vector<u128>& ep_in) {
        auto& fst = out.party[p].first;
        auto& snd = out.party[p].second;
        fst.resize(m);
        snd.resize(m);
        for (std::size_t i = 0; i < m; ++i) {
            u128 cb = u128(c.party[p].second[i] & 1);
            u128 cu = u128(c.party[p].first[i] & 1);
            fst[i] = ring_sub(cfg,
                              ring_add(cfg, ring_add(cfg, ring_mul(cfg, sel(std::uint8_t(cb)), t_in[i]),
                                                     ring_mul(cfg, cb, x.party[p].first[i])),
                                       e_in[i]),
                              own_r[p][i]);
            snd[i] = ring_sub(cfg,
                              ring_add(cfg, ring_add(cfg, ring_mul(cfg, sel(std::uint8_t(cu)), tp_in[i]),
                                                     ring_mul(cfg, cu, x.party[p].second[i])),
                                       ep_in[i]),
                              own_rp[p][i]);
        }
    };

    eng.run_round({{S1, [&](PartyCtx& ctx) {
                        auto tap = ctx.recv_ring(Sa, m), ea = ctx.recv_ring(Sa, m);
                        auto tb = ctx.recv_ring(Sb, m), ebp = ctx.recv_ring(Sb, m);
                        finish(S1, tb, tap, ea, ebp);
                    }},
                   {S2, [&](PartyCtx& ctx) {
                        auto tbp = ctx.recv_ring(Sb, m), eb = ctx.recv_ring(Sb, m);
                        auto ta = ctx.recv_ring(Sa, m), eap = ctx.recv_ring(Sa, m);
                        finish(S2, ta, tbp, eb, eap);
                    }},
                   {Sa, [&](PartyCtx& ctx) {
                        auto t1p = ctx.recv_ring(S1, m), e1 = ctx.recv_ring(S1, m);
                        auto t2 = ctx.recv_ring(S2, m), e2p = ctx.recv_ring(S2, m);
                        finish(Sa, t2, t1p, e1, e2p);
                    }},
                   {Sb, [&](PartyCtx& ctx) {
                        auto t2p = ctx.recv_ring(S2, m), e2 = ctx.recv_ring(S2, m);
                        auto t1 = ctx.recv_ring(S1, m), e1p = ctx.recv_ring(S1, m);
                        finish(Sb, t1, t2p, e2, e1p);
                    }}});

    if (transcript) {
        transcript->t = t;
        transcript->tp = tp;
        transcript->e = e;
        transcript->ep = ep;
    }
    post_check(eng, out);
    return out;
}

// mux(c, x, y): reveals to x when c = 1 and to y otherwise; one OT plus free
// additions (delta trick).
inline ShareTensor mux(Engine& eng, const BitTensor& c, const ShareTensor& x, const ShareTensor& y) {
    ShareTensor delta = sub_shares(eng, x, y);
    return add_shares(eng, y, ot_select(eng, c, delta));
}

// Comparison: the sign bit of x - y.
inline BitTensor less_than(Engine& eng, const ShareTensor& x, const ShareTensor& y) {
    ShareTensor z = sub_shares(eng, x, y);
    if (eng.options().use_ppa) return extract_bit_ppa(eng, z, eng.cfg().n);
    return extract_bit(eng, z, eng.cfg().n);
}

} // namespace quadshare
