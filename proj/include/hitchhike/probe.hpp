#pragma once

#include "hitchhike/discovery.hpp"
#include "hitchhike/error.hpp"
#include "hitchhike/ip.hpp"
#include "hitchhike/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace hitchhike::probe {

enum class Protocol { icmp, udp, tcp };

inline std::string_view to_string(Protocol p) {
    switch (p) {
    case Protocol::icmp: return "icmp";
    case Protocol::udp: return "udp";
    case Protocol::tcp: return "tcp";
    }
    return "?";
}

inline std::optional<Protocol> protocol_from_name(std::string_view s) {
    if (s == "icmp") return Protocol::icmp;
    if (s == "udp") return Protocol::udp;
    if (s == "tcp") return Protocol::tcp;
    return std::nullopt;
}

enum class ReplyKind { ttl_expired, echo_reply, port_unreachable, tcp_response };

struct ProbeRequest {
    IpAddress target;
    Protocol protocol = Protocol::icmp;
    int ttl = 64;
    std::uint32_t flow_id = 0;
    std::uint64_t trace_id = 0; // 0: not part of a traceroute
    std::int64_t at_us = 0;     // send time, UNIX microseconds
    std::int64_t timeout_us = 2'000'000;
};

struct ProbeReply {
    IpAddress responder;
    std::int64_t rtt_us = 0;
    ReplyKind kind = ReplyKind::ttl_expired;
};

/// Sends one probe and waits for its reply. `nullopt` means silence within the
/// timeout. Failures of the transport itself throw TransportError.
/// Implementations must tolerate concurrent calls.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::optional<ProbeReply> send(const ProbeRequest& request) = 0;
};

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t now_us() = 0;
    virtual void sleep_until_us(std::int64_t t_us) = 0;
};

class SystemClock final : public Clock {
public:
    std::int64_t now_us() override {
        using namespace std::chrono;
        return duration_cast<microseconds>(system_clock::now().time_since_epoch()).count();
    }
    void sleep_until_us(std::int64_t t_us) override {
        auto delta = t_us - now_us();
        if (delta > 0) std::this_thread::sleep_for(std::chrono::microseconds(delta));
    }
};

/// Time that only moves when its owner sleeps.
class VirtualClock final : public Clock {
public:
    explicit VirtualClock(std::int64_t start_us = 0) : now_(start_us) {}
    std::int64_t now_us() override { return now_; }
    void sleep_until_us(std::int64_t t_us) override { now_ = std::max(now_, t_us); }
    void advance_us(std::int64_t d) { now_ += d; }

private:
    std::int64_t now_;
};

// ---------------------------------------------------------------------------
// Traceroute

struct TraceHop {
    int ttl = 0;
    std::optional<IpAddress> responder;
    std::vector<std::int64_t> rtt_samples_us;

    bool responsive() const noexcept { return responder.has_value(); }
    double median_ms() const {
        std::vector<double> ms;
        for (auto us : rtt_samples_us) ms.push_back(static_cast<double>(us) / 1000.0);
        return stats::median(ms);
    }
};

struct TracerouteResult {
    IpAddress target;
    Protocol protocol = Protocol::icmp;
    std::uint32_t flow_id = 0;
    std::vector<TraceHop> hops;
    bool reached = false;
};

struct TraceOptions {
    Protocol protocol = Protocol::icmp;
    std::uint32_t flow_id = 0;
    int max_ttl = 32;
    int probes_per_hop = 3;
    std::int64_t inter_probe_gap_us = 1'000;
    std::int64_t timeout_us = 2'000'000;
    std::uint64_t trace_id = 0; // 0: derive from target, flow and start time
};

/// Flow-stable traceroute: every probe carries the same flow id, so
/// per-flow load balancers keep the path fixed.
inline TracerouteResult run_traceroute(Transport& transport, Clock& clock, const IpAddress& target,
                                       const TraceOptions& opts = {}) {
    if (opts.max_ttl < 1 || opts.max_ttl > 64) throw ConfigError("max_ttl", "must lie in [1, 64]");
    if (opts.probes_per_hop < 1) throw ConfigError("probes_per_hop", "must be at least 1");

    TracerouteResult result{target, opts.protocol, opts.flow_id, {}, false};
    std::uint64_t trace_id = opts.trace_id;
    if (trace_id == 0) trace_id = std::hash<IpAddress>{}(target) ^ (static_cast<std::uint64_t>(clock.now_us()) << 1) ^ 1;

    for (int ttl = 1; ttl <= opts.max_ttl; ++ttl) {
        TraceHop hop{ttl, std::nullopt, {}};
        for (int k = 0; k < opts.probes_per_hop; ++k) {
            ProbeRequest req{target, opts.protocol, ttl, opts.flow_id, trace_id, clock.now_us(), opts.timeout_us};
            auto reply = transport.send(req);
            if (reply && reply->rtt_us > 0) {
                if (!hop.responder) hop.responder = reply->responder;
                if (reply->responder == *hop.responder) hop.rtt_samples_us.push_back(reply->rtt_us);
            }
            clock.sleep_until_us(req.at_us + std::min(opts.timeout_us, reply ? reply->rtt_us : opts.timeout_us) +
                                 opts.inter_probe_gap_us);
        }
        result.hops.push_back(std::move(hop));
        if (result.hops.back().responder == target) {
            result.reached = true;
            break;
        }
    }
    bool any = std::any_of(result.hops.begin(), result.hops.end(), [](const TraceHop& h) { return h.responsive(); });
    if (!any) throw UnreachableError("no hop answered a traceroute to " + target.to_string());
    return result;
}

struct SatLinkPath {
    IpAddress target;
    int pre_sat_ttl = 0;
    IpAddress pre_sat_router;
    int post_sat_ttl = 0;
    double jump_ms = 0.0;
};

inline constexpr double kDefaultJumpThresholdMs = 10.0;

/// The satellite link sits between the last two responsive hops; the RTT jump
/// across them must be at least `jump_threshold_ms`.
inline SatLinkPath identify_sat_link(const TracerouteResult& trace, double jump_threshold_ms = kDefaultJumpThresholdMs) {
    std::vector<const TraceHop*> responsive;
    for (const auto& h : trace.hops)
        if (h.responsive()) responsive.push_back(&h);
    if (!trace.reached || responsive.size() < 2)
        throw InsufficientVisibilityError("traceroute to " + trace.target.to_string() +
                                          " does not expose two responsive hops ending at the target");
    const auto& pre = *responsive[responsive.size() - 2];
    const auto& post = *responsive.back();
    double jump = post.median_ms() - pre.median_ms();
    if (!(jump >= jump_threshold_ms))
        throw NoSatelliteJumpError("last-hop jump of " + std::to_string(jump) + " ms to " + trace.target.to_string() +
                                   " is below " + std::to_string(jump_threshold_ms) + " ms");
    return {trace.target, pre.ttl, *pre.responder, post.ttl, jump};
}

// ---------------------------------------------------------------------------
// Hop stability

struct StabilityReport {
    IpAddress target;
    int trials = 0;
    double endpoint_hop_consistency = 0.0;
    double terrestrial_hop_consistency = 0.0;
    bool ip_stable = false;
    bool complete = true;
    std::string failure; // why the run stopped early
};

inline StabilityReport validate_hop_stability(Transport& transport, Clock& clock, const SatLinkPath& path,
                                              int trials = 100, double interval_s = 1.0, TraceOptions opts = {}) {
    if (trials < 2) throw ConfigError("trials", "must be at least 2");
    StabilityReport rep{path.target, 0, 0.0, 0.0, false, true, {}};
    int endpoint_ok = 0, terrestrial_ok = 0;
    auto interval_us = static_cast<std::int64_t>(interval_s * 1e6);
    std::int64_t start = clock.now_us();
    opts.max_ttl = std::max(opts.max_ttl, path.post_sat_ttl + 8);
    for (int i = 0; i < trials; ++i) {
        clock.sleep_until_us(start + i * interval_us);
        TracerouteResult tr;
        try {
            opts.trace_id = 0;
            tr = run_traceroute(transport, clock, path.target, opts);
        } catch (const TransportError& e) {
            rep.complete = false;
            rep.failure = e.what();
            break;
        } catch (const UnreachableError&) {
            ++rep.trials;
            continue;
        }
        ++rep.trials;
        auto at = [&](int ttl) -> const TraceHop* {
            for (const auto& h : tr.hops)
                if (h.ttl == ttl) return &h;
            return nullptr;
        };
        const auto* pre = at(path.pre_sat_ttl);
        if (pre && pre->responder == path.pre_sat_router) ++terrestrial_ok;
        const auto* post = at(path.post_sat_ttl);
        if (tr.reached && post && post->responder == path.target && tr.hops.back().ttl == path.post_sat_ttl) ++endpoint_ok;
    }
    if (rep.trials == 0) throw TransportError("hop stability check failed before any trial: " + rep.failure);
    rep.endpoint_hop_consistency = static_cast<double>(endpoint_ok) / rep.trials;
    rep.terrestrial_hop_consistency = static_cast<double>(terrestrial_ok) / rep.trials;
    rep.ip_stable = endpoint_ok == rep.trials && terrestrial_ok == rep.trials;
    return rep;
}

// ---------------------------------------------------------------------------
// TTL pings and sessions

struct ProbeSample {
    std::int64_t timestamp_ms = 0;
    int target_ttl = 0;
    std::optional<std::int64_t> rtt_us;

    bool lost() const noexcept { return !rtt_us.has_value(); }
};

/// One probe whose initial and maximum TTL are both `hop_ttl`, so it expires
/// exactly at that hop (or is answered by the target if the path is shorter).
inline ProbeSample ttl_ping(Transport& transport, Clock& clock, const IpAddress& target, int hop_ttl,
                            std::uint32_t flow_id = 0, std::int64_t timeout_us = 2'000'000,
                            Protocol protocol = Protocol::icmp) {
    if (hop_ttl < 1) throw ConfigError("hop_ttl", "must be at least 1");
    ProbeRequest req{target, protocol, hop_ttl, flow_id, 0, clock.now_us(), timeout_us};
    auto reply = transport.send(req);
    ProbeSample s{req.at_us / 1000, hop_ttl, std::nullopt};
    if (reply && reply->rtt_us > 0 && reply->rtt_us <= timeout_us) s.rtt_us = reply->rtt_us;
    return s;
}

struct MeasurementSession {
    discovery::Endpoint endpoint;
    SatLinkPath path;
    std::int64_t start_ms = 0;
    int duration_s = 0;
    int cadence_hz = 1;
    std::vector<ProbeSample> terrestrial_samples;
    std::vector<ProbeSample> endpoint_samples;
    bool usable = true;

    double terrestrial_loss() const noexcept {
        if (terrestrial_samples.empty()) return 1.0;
        auto lost = std::count_if(terrestrial_samples.begin(), terrestrial_samples.end(),
                                  [](const ProbeSample& s) { return s.lost(); });
        return static_cast<double>(lost) / static_cast<double>(terrestrial_samples.size());
    }
};

struct SessionOptions {
    int duration_s = 300;
    int cadence_hz = 1;
    std::uint32_t flow_id = 0;
    std::int64_t timeout_us = 2'000'000;
    std::int64_t pair_offset_us = 10'000; // endpoint probe follows the terrestrial one
    double max_terrestrial_loss = 0.5;
};

/// Each tick sends one TTL ping to the pre-satellite hop and one to the
/// endpoint. Ticks that have already passed when the loop gets to them are
/// skipped, never sent late, so the satellite link sees at most `cadence_hz`
/// probes per second.
inline MeasurementSession measure_session(Transport& transport, Clock& clock, const discovery::Endpoint& endpoint,
                                          const SatLinkPath& path, const SessionOptions& opts = {}) {
    if (opts.duration_s < 1) throw ConfigError("duration_s", "must be positive");
    if (opts.cadence_hz < 1 || opts.cadence_hz > 10) throw ConfigError("cadence_hz", "must lie in [1, 10]");
    if (path.post_sat_ttl <= path.pre_sat_ttl) throw ConfigError("path", "post-satellite hop must follow pre-satellite hop");
    std::int64_t period_us = 1'000'000 / opts.cadence_hz;
    if (opts.pair_offset_us >= period_us) throw ConfigError("pair_offset_us", "must be shorter than the tick period");

    MeasurementSession session;
    session.endpoint = endpoint;
    session.path = path;
    session.duration_s = opts.duration_s;
    session.cadence_hz = opts.cadence_hz;
    std::int64_t start_us = clock.now_us();
    session.start_ms = start_us / 1000;
    std::int64_t ticks = static_cast<std::int64_t>(opts.duration_s) * opts.cadence_hz;
    for (std::int64_t i = 0; i < ticks; ++i) {
        std::int64_t tick = start_us + i * period_us;
        if (clock.now_us() > tick) continue;
        clock.sleep_until_us(tick);
        session.terrestrial_samples.push_back(
            ttl_ping(transport, clock, path.target, path.pre_sat_ttl, opts.flow_id, opts.timeout_us));
        clock.sleep_until_us(tick + opts.pair_offset_us);
        session.endpoint_samples.push_back(
            ttl_ping(transport, clock, path.target, path.post_sat_ttl, opts.flow_id, opts.timeout_us));
    }
    session.usable = session.terrestrial_loss() <= opts.max_terrestrial_loss;
    return session;
}

// ---------------------------------------------------------------------------
// Session CSV: timestamp_ms,target,hop_ttl,rtt_us,lost

inline void write_session_csv(std::ostream& os, const MeasurementSession& s) {
    os << "timestamp_ms,target,hop_ttl,rtt_us,lost\n";
    auto target = s.path.target.to_string();
    auto row = [&](const ProbeSample& p) {
        os << p.timestamp_ms << ',' << target << ',' << p.target_ttl << ',';
        if (p.rtt_us) os << *p.rtt_us;
        os << ',' << (p.lost() ? 1 : 0) << '\n';
    };
    // Interleave by time so the file reads as the probe log.
    std::size_t i = 0, j = 0;
    while (i < s.terrestrial_samples.size() || j < s.endpoint_samples.size()) {
        bool take_t = j >= s.endpoint_samples.size() ||
                      (i < s.terrestrial_samples.size() &&
                       s.terrestrial_samples[i].timestamp_ms <= s.endpoint_samples[j].timestamp_ms);
        row(take_t ? s.terrestrial_samples[i++] : s.endpoint_samples[j++]);
    }
}

/// Read back session samples; `path` must carry the TTLs used to split rows.
inline MeasurementSession read_session_csv(std::istream& in, const discovery::Endpoint& endpoint, const SatLinkPath& path,
                                           int duration_s) {
    MeasurementSession s;
    s.endpoint = endpoint;
    s.path = path;
    s.duration_s = duration_s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (lineno == 1 && line.starts_with("timestamp_ms"))) continue;
        auto f = csv::split(line);
        auto where = "session.csv:" + std::to_string(lineno);
        if (f.size() != 5) throw ConfigError(where, "expected 5 columns");
        auto ts = csv::parse_int(f[0]);
        auto ttl = csv::parse_int(f[2]);
        if (!ts || !ttl) throw ConfigError(where, "invalid timestamp or ttl");
        ProbeSample p{*ts, static_cast<int>(*ttl), std::nullopt};
        if (f[4] != "1") {
            auto rtt = csv::parse_int(f[3]);
            if (!rtt) throw ConfigError(where, "invalid rtt");
            p.rtt_us = *rtt;
        }
        if (p.target_ttl == path.pre_sat_ttl) {
            s.terrestrial_samples.push_back(p);
        } else if (p.target_ttl == path.post_sat_ttl) {
            s.endpoint_samples.push_back(p);
        } else {
            throw ConfigError(where, "ttl matches neither satellite hop");
        }
    }
    if (!s.terrestrial_samples.empty()) s.start_ms = s.terrestrial_samples.front().timestamp_ms;
    s.usable = s.terrestrial_loss() <= 0.5;
    return s;
}

} // namespace hitchhike::probe
