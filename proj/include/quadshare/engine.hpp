#pragma once

// The simulation engine: four server parties plus m clients over the
// lock-step network, each party owning its half of the pairwise PRF seeds.
// Protocol code runs as per-party step functions; a step can touch only its
// own party's streams and mailbox, which is what keeps the simulation honest.

#include <array>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "quadshare/net.hpp"
#include "quadshare/prf.hpp"
#include "quadshare/ring.hpp"

namespace quadshare {

// Unordered server pairs that share a PRF seed.
enum PairId : int { P12 = 0, Pab = 1, P1b = 2, P2a = 3, P1a = 4, P2b = 5 };
constexpr int kPairCount = 6;

inline bool pair_has_member(PairId pair, int server) {
    switch (pair) {
        case P12: return server == S1 || server == S2;
        case Pab: return server == Sa || server == Sb;
        case P1b: return server == S1 || server == Sb;
        case P2a: return server == S2 || server == Sa;
        case P1a: return server == S1 || server == Sa;
        case P2b: return server == S2 || server == Sb;
    }
    return false;
}

enum class BitExtractMode { plain, half_shared };

struct EngineOptions {
    RingConfig ring{};
    std::uint64_t seed = 1;
    LatencyModel latency = LatencyModel::none();
    int num_clients = 1;
    bool debug_checks = true;   // replication post-checks after every protocol
    bool parallel = false;      // actor mode: one thread per server per phase
    BitExtractMode extract_mode = BitExtractMode::plain;
    bool use_ppa = false;       // route comparisons through the prefix adder
};

class Engine;

// A party's working view during one step: its own PRF streams and its own
// channels, nothing else.
class PartyCtx {
public:
    PartyCtx(Engine& eng, int self) : eng_(eng), self_(self) {}

    int self() const { return self_; }
    const RingConfig& cfg() const;
    PairStream& pair(PairId p);

    void send_ring(int to, const u128* vals, std::size_t count);
    void send_ring(int to, const std::vector<u128>& vals) { send_ring(to, vals.data(), vals.size()); }
    std::vector<u128> recv_ring(int from, std::size_t count);

    void send_bits(int to, const std::uint8_t* bits, std::size_t count);
    void send_bits(int to, const std::vector<std::uint8_t>& bits) { send_bits(to, bits.data(), bits.size()); }
    std::vector<std::uint8_t> recv_bits(int from, std::size_t count);

private:
    Engine& eng_;
    int self_;
};

class Engine {
public:
    using Step = std::function<void(PartyCtx&)>;

    explicit Engine(EngineOptions opt = {})
        : opt_(opt), net_(kServerCount + opt.num_clients, opt.latency) {
        for (int s = 0; s < kServerCount; ++s)
            for (int p = 0; p < kPairCount; ++p)
                if (pair_has_member(PairId(p), s))
                    server_streams_[std::size_t(s)][std::size_t(p)] =
                        PairStream(mix64(opt_.seed ^ (0xA11CE000ULL + std::uint64_t(p))));
        client_streams_.reserve(std::size_t(opt.num_clients));
        for (int c = 0; c < opt.num_clients; ++c)
            client_streams_.emplace_back(mix64(opt_.seed ^ (0xC11E0000ULL + std::uint64_t(c))));
    }

    const RingConfig& cfg() const { return opt_.ring; }
    const EngineOptions& options() const { return opt_; }
    Network& net() { return net_; }
    const Network& net() const { return net_; }

    PairStream& server_stream(int server, PairId pair) {
        if (!pair_has_member(pair, server))
            throw EngineError(party_name(server) + " does not hold the seed of pair " + std::to_string(int(pair)));
        return server_streams_[std::size_t(server)][std::size_t(pair)];
    }

    PairStream& client_stream(int client_index) { return client_streams_.at(std::size_t(client_index)); }

    // One lock-step epoch over an explicit set of parties.  Every message sent
    // inside the steps is delivered at the closing barrier.
    void run_round(const std::vector<std::pair<int, Step>>& steps) {
        for (const auto& [party, fn] : steps) {
            PartyCtx ctx(*this, party);
            fn(ctx);
        }
        net_.barrier();
    }

    // One epoch where all four servers act; in actor mode each server runs on
    // its own thread and the barrier is the join point.
    void server_phase(const std::array<Step, 4>& steps) {
        if (opt_.parallel) {
            std::array<std::thread, 4> workers;
            for (int s = 0; s < kServerCount; ++s)
                workers[std::size_t(s)] = std::thread([this, s, &steps] {
                    PartyCtx ctx(*this, s);
                    steps[std::size_t(s)](ctx);
                });
            for (auto& w : workers) w.join();
        } else {
            for (int s = 0; s < kServerCount; ++s) {
                PartyCtx ctx(*this, s);
                steps[std::size_t(s)](ctx);
            }
        }
        net_.barrier();
    }

    // Same step body on every server.
    void server_phase(const Step& step) {
        server_phase(std::array<Step, 4>{step, step, step, step});
    }

    bool debug_checks() const { return opt_.debug_checks; }
    void set_debug_checks(bool on) { opt_.debug_checks = on; }

private:
    friend class PartyCtx;

    EngineOptions opt_;
    Network net_;
    std::array<std::array<PairStream, kPairCount>, 4> server_streams_{};
    std::vector<PairStream> client_streams_;
};

inline const RingConfig& PartyCtx::cfg() const { return eng_.cfg(); }

inline PairStream& PartyCtx::pair(PairId p) {
    if (self_ >= kServerCount) throw EngineError("clients hold no pairwise seeds");
    return eng_.server_stream(self_, p);
}

inline void PartyCtx::send_ring(int to, const u128* vals, std::size_t count) {
    const RingConfig& c = eng_.cfg();
    int width = c.elem_bytes();
    std::vector<std::uint8_t> buf(count * std::size_t(width));
    for (std::size_t i = 0; i < count; ++i) {
        u128 v = vals[i] & c.mask();
        for (int b = 0; b < width; ++b) buf[i * std::size_t(width) + std::size_t(b)] = std::uint8_t(v >> (8 * b));
    }
    eng_.net_.send(self_, to, std::move(buf), count * std::uint64_t(width) * 8);
}

inline std::vector<u128> PartyCtx::recv_ring(int from, std::size_t count) {
    const RingConfig& c = eng_.cfg();
    int width = c.elem_bytes();
    Message m = eng_.net_.recv(self_, from);
    if (m.payload.size() != count * std::size_t(width))
        throw EngineError("ring payload size mismatch on " + party_name(from) + "->" + party_name(self_));
    std::vector<u128> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        u128 v = 0;
        for (int b = width - 1; b >= 0; --b)
            v = (v << 8) | u128(m.payload[i * std::size_t(width) + std::size_t(b)]);
        out[i] = v & c.mask();
    }
    return out;
}

inline void PartyCtx::send_bits(int to, const std::uint8_t* bits, std::size_t count) {
    std::vector<std::uint8_t> buf((count + 7) / 8, 0);
    for (std::size_t i = 0; i < count; ++i)
        if (bits[i] & 1) buf[i / 8] |= std::uint8_t(1u << (i % 8));
    eng_.net_.send(self_, to, std::move(buf), count);
}

inline std::vector<std::uint8_t> PartyCtx::recv_bits(int from, std::size_t count) {
    Message m = eng_.net_.recv(self_, from);
    if (m.payload_bits != count || m.payload.size() != (count + 7) / 8)
        throw EngineError("bit payload size mismatch on " + party_name(from) + "->" + party_name(self_));
    std::vector<std::uint8_t> out(count);
    for (std::size_t i = 0; i < count; ++i)
        out[i] = std::uint8_t((m.payload[i / 8] >> (i % 8)) & 1);
    return out;
}

} // namespace quadshare
