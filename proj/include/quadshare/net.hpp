#pragma once

// Deterministic in-process network: ordered point-to-point channels, a
// send-barrier-receive scheduler, and exact message/byte/round accounting.
// One "round" is one barrier step in which traffic was in flight.

#include <cstdint>
#include <deque>
#include <string>
#include <vector>

#include "quadshare/errors.hpp"

namespace quadshare {

// Server indices are fixed; clients attach after them as transient parties.
enum ServerId : int { S1 = 0, S2 = 1, Sa = 2, Sb = 3 };
constexpr int kServerCount = 4;

inline int client_party(int client_index) { return kServerCount + client_index; }

inline std::string party_name(int p) {
    switch (p) {
        case S1: return "S1";
        case S2: return "S2";
        case Sa: return "Sa";
        case Sb: return "Sb";
        default: return "C" + std::to_string(p - kServerCount);
    }
}

struct Message {
    int from = -1;
    int to = -1;
    std::uint64_t round_tag = 0;      // barrier epoch in which it was sent
    std::vector<std::uint8_t> payload;
    std::uint64_t payload_bits = 0;   // logical size; payload is bit-packed
};

struct PartyStats {
    std::uint64_t messages = 0;
    std::uint64_t bytes = 0;
    std::uint64_t bits = 0;   // logical payload bits, exact for bit protocols
    std::uint64_t rounds = 0; // epochs in which the party both sent and received
};

struct NetStats {
    std::vector<PartyStats> party;
    std::uint64_t total_rounds = 0;
    double simulated_ms = 0.0;

    const PartyStats& operator[](int p) const { return party.at(std::size_t(p)); }
};

inline NetStats stats_diff(const NetStats& before, const NetStats& after) {
    NetStats d;
    d.party.resize(after.party.size());
    for (std::size_t i = 0; i < after.party.size(); ++i) {
        const PartyStats& b = i < before.party.size() ? before.party[i] : PartyStats{};
        d.party[i].messages = after.party[i].messages - b.messages;
        d.party[i].bytes = after.party[i].bytes - b.bytes;
        d.party[i].bits = after.party[i].bits - b.bits;
        d.party[i].rounds = after.party[i].rounds - b.rounds;
    }
    d.total_rounds = after.total_rounds - before.total_rounds;
    d.simulated_ms = after.simulated_ms - before.simulated_ms;
    return d;
}

// Affects the simulated-time metric only, never ordering or results.
struct LatencyModel {
    enum class Mode { none, lan, wan };
    Mode mode = Mode::none;
    double rtt_ms = 0.0;
    double bandwidth_mbps = 0.0;

    static LatencyModel none() { return {}; }
    static LatencyModel lan() { return {Mode::lan, 0.2, 10000.0}; }
    static LatencyModel wan() { return {Mode::wan, 100.0, 50.0}; }
};

struct TraceEntry {
    int from;
    int to;
    std::uint64_t epoch;
    std::uint64_t bits;
    std::vector<std::uint8_t> payload;
};

class Network {
public:
    explicit Network(int nparties, LatencyModel latency = LatencyModel::none())
        : n_(nparties), latency_(latency), staged_(std::size_t(nparties)),
          inbox_(std::size_t(nparties) * std::size_t(nparties)) {
        stats_.party.resize(std::size_t(nparties));
    }

    int party_count() const { return n_; }

    void send(int from, int to, std::vector<std::uint8_t> payload, std::uint64_t bits) {
        if (from < 0 || from >= n_ || to < 0 || to >= n_ || from == to)
            throw EngineError("invalid send endpoint");
        Message m;
        m.from = from;
        m.to = to;
        m.round_tag = epoch_;
        m.payload_bits = bits;
        m.payload = std::move(payload);
        staged_[std::size_t(from)].push_back(std::move(m));
    }

    // Pops the oldest delivered message on the (from -> to) channel.
    Message recv(int to, int from) {
        auto& q = inbox_[chan(from, to)];
        if (q.empty())
            throw DeadlockError("party " + party_name(to) + " awaits a message from " +
                                party_name(from) + " that was never sent");
        Message m = std::move(q.front());
        q.pop_front();
        return m;
    }

    bool has_message(int to, int from) const { return !inbox_[chan(from, to)].empty(); }

    // Delivers everything staged this epoch and advances the round counters.
    // Returns true if any message was in flight.
    bool barrier() {
        bool traffic = false;
        std::vector<std::uint64_t> sent_bytes(std::size_t(n_), 0);
        std::vector<bool> sent(std::size_t(n_), false), received(std::size_t(n_), false);
        for (int from = 0; from < n_; ++from) {
            for (Message& m : staged_[std::size_t(from)]) {
                traffic = true;
                sent[std::size_t(from)] = true;
                received[std::size_t(m.to)] = true;
                std::uint64_t nbytes = m.payload.size();
                auto& ps = stats_.party[std::size_t(from)];
                ps.messages += 1;
                ps.bytes += nbytes;
                ps.bits += m.payload_bits;
                sent_bytes[std::size_t(from)] += nbytes;
                if (record_trace_)
                    trace_.push_back(TraceEntry{m.from, m.to, epoch_, m.payload_bits, m.payload});
                inbox_[chan(m.from, m.to)].push_back(std::move(m));
            }
            staged_[std::size_t(from)].clear();
        }
        if (traffic) {
            stats_.total_rounds += 1;
            for (int p = 0; p < n_; ++p)
                if (sent[std::size_t(p)] && received[std::size_t(p)])
                    stats_.party[std::size_t(p)].rounds += 1;
            if (latency_.mode != LatencyModel::Mode::none) {
                std::uint64_t widest = 0;
                for (auto b : sent_bytes) widest = std::max(widest, b);
                stats_.simulated_ms += latency_.rtt_ms + double(widest) * 8.0 / (latency_.bandwidth_mbps * 1000.0);
            }
        }
        ++epoch_;
        return traffic;
    }

    std::uint64_t epoch() const { return epoch_; }
    const NetStats& stats() const { return stats_; }
    NetStats snapshot() const { return stats_; }
    const LatencyModel& latency() const { return latency_; }

    void set_record_trace(bool on) { record_trace_ = on; }
    const std::vector<TraceEntry>& trace() const { return trace_; }
    void clear_trace() { trace_.clear(); }

    // Any message left undelivered or unread indicates a protocol bug.
    bool idle() const {
        for (const auto& v : staged_)
            if (!v.empty()) return false;
        for (const auto& q : inbox_)
            if (!q.empty()) return false;
        return true;
    }

private:
    std::size_t chan(int from, int to) const { return std::size_t(from) * std::size_t(n_) + std::size_t(to); }

    int n_;
    LatencyModel latency_;
    std::uint64_t epoch_ = 0;
    std::vector<std::vector<Message>> staged_;
    std::vector<std::deque<Message>> inbox_;
    NetStats stats_;
    bool record_trace_ = false;
    std::vector<TraceEntry> trace_;
};

} // namespace quadshare
