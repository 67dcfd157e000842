#pragma once

#include "hitchhike/discovery.hpp"
#include "hitchhike/error.hpp"
#include "hitchhike/ip.hpp"
#include "hitchhike/probe.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace hitchhike::simnet {

inline constexpr const char* kScenarioSchema = "hitchhike.scenario/1";

struct SimHop {
    std::string label;
    IpAddress address;
    bool ttl_expired = true; // answers probes whose TTL runs out here
    bool echo = true;        // answers ICMP echo addressed to it
    bool udp = false;        // answers UDP (port unreachable) addressed to it
    bool tcp = false;        // answers TCP addressed to it
    /// Alternative interface addresses behind a per-flow load balancer.
    std::vector<IpAddress> lb_addresses;
};

enum class JitterDist { none, gaussian, lognormal };

struct JitterModel {
    JitterDist dist = JitterDist::gaussian;
    double sigma_ms = 0.5;           // terrestrial part, per probe RTT
    double satellite_sigma_ms = 1.5; // satellite segment, per probe RTT
};

enum class EventKind { gs_switch, isl_reroute, satellite_switch };

inline std::string_view to_string(EventKind k) {
    switch (k) {
    case EventKind::gs_switch: return "gs_switch";
    case EventKind::isl_reroute: return "isl_reroute";
    case EventKind::satellite_switch: return "satellite_switch";
    }
    return "?";
}

struct RerouteEvent {
    double at_s = 0;
    EventKind kind = EventKind::isl_reroute;
    std::optional<double> delta_ms;   // added to the satellite segment RTT
    std::optional<double> new_rtt_ms; // replaces the satellite segment RTT
    double duration_s = 15;

    double end_s() const noexcept { return at_s + duration_s; }
    bool active(double t) const noexcept { return t >= at_s && t < end_s(); }
};

/// Extra unresponsive routers spliced in after the first hop for a while.
struct HopFlap {
    double at_s = 0;
    double duration_s = 1;
    int extra_hops = 1;

    bool active(double t) const noexcept { return t >= at_s && t < at_s + duration_s; }
};

struct Scenario {
    std::string name;
    std::uint64_t seed = 1;
    double duration_s = 300;
    std::int64_t start_unix_ms = 1'684'368'000'000;
    discovery::Endpoint endpoint;
    std::vector<SimHop> hops;
    std::vector<double> base_latencies_ms; // one-way latency of the link into hop i
    int pre_sat = 0;                       // TTL of the last router before the satellite
    int post_sat = 0;                      // TTL of the first address after it
    JitterModel jitter;
    double loss_probability = 0.0;
    std::vector<RerouteEvent> events;
    std::vector<HopFlap> hop_flaps;

    int chain_length() const noexcept { return static_cast<int>(hops.size()); }
    std::int64_t start_us() const noexcept { return start_unix_ms * 1000; }

    /// RTT of the satellite segment with no event active.
    double base_satellite_rtt_ms() const {
        double s = 0;
        for (int i = pre_sat; i < post_sat; ++i) s += base_latencies_ms[static_cast<std::size_t>(i)];
        return 2.0 * s;
    }

    /// Active event at `t`; the latest-starting one wins when several overlap.
    const RerouteEvent* active_event(double t) const {
        const RerouteEvent* best = nullptr;
        for (const auto& e : events)
            if (e.active(t) && (!best || e.at_s >= best->at_s)) best = &e;
        return best;
    }

    double satellite_rtt_ms(double t) const {
        double base = base_satellite_rtt_ms();
        const auto* e = active_event(t);
        if (!e) return base;
        if (e->new_rtt_ms) return *e->new_rtt_ms;
        return std::max(0.0, base + e->delta_ms.value_or(0.0));
    }

    int extra_hops(double t) const {
        int n = 0;
        for (const auto& f : hop_flaps)
            if (f.active(t)) n = std::max(n, f.extra_hops);
        return n;
    }

    void validate() const;
};

namespace detail {

inline bool multiple_of_15(double v) { return std::abs(v / 15.0 - std::round(v / 15.0)) < 1e-9; }

} // namespace detail

inline void Scenario::validate() const {
    if (hops.empty()) throw ConfigError("hops", "at least one hop is required");
    if (base_latencies_ms.size() != hops.size())
        throw ConfigError("base_latencies_ms", "needs one entry per hop (" + std::to_string(hops.size()) + ")");
    for (std::size_t i = 0; i < base_latencies_ms.size(); ++i)
        if (!(base_latencies_ms[i] > 0))
            throw ConfigError("base_latencies_ms[" + std::to_string(i) + "]", "must be positive");
    if (!(duration_s > 0)) throw ConfigError("duration_s", "must be positive");
    if (pre_sat < 1 || post_sat <= pre_sat || post_sat > chain_length())
        throw ConfigError("satellite_segment", "need 1 <= pre_sat < post_sat <= number of hops");
    if (jitter.sigma_ms < 0 || jitter.satellite_sigma_ms < 0) throw ConfigError("jitter", "sigma must be non-negative");
    if (!(loss_probability >= 0 && loss_probability <= 1)) throw ConfigError("loss_probability", "must lie in [0, 1]");
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        auto f = "events[" + std::to_string(i) + "]";
        if (!detail::multiple_of_15(e.at_s)) throw ConfigError(f + ".at_s", "must be a multiple of 15 seconds");
        if (!(e.duration_s > 0) || !detail::multiple_of_15(e.duration_s))
            throw ConfigError(f + ".duration_s", "must be a positive multiple of 15 seconds");
        if (e.at_s < 0 || e.end_s() > duration_s) throw ConfigError(f, "falls outside the scenario");
        if (e.delta_ms.has_value() == e.new_rtt_ms.has_value())
            throw ConfigError(f, "needs exactly one of delta_ms and new_rtt_ms");
        if (e.new_rtt_ms && !(*e.new_rtt_ms > 0)) throw ConfigError(f + ".new_rtt_ms", "must be positive");
        for (std::size_t j = 0; j < i; ++j) {
            const auto& o = events[j];
            if (o.kind == e.kind && o.at_s < e.end_s() && e.at_s < o.end_s())
                throw ConfigError(f, "overlaps an earlier " + std::string(to_string(e.kind)) + " event");
        }
        if (i > 0 && events[i - 1].at_s > e.at_s) throw ConfigError(f, "events must be sorted by at_s");
    }
    for (std::size_t i = 0; i < hop_flaps.size(); ++i)
        if (hop_flaps[i].extra_hops < 1 || !(hop_flaps[i].duration_s > 0))
            throw ConfigError("hop_flaps[" + std::to_string(i) + "]", "needs extra_hops >= 1 and positive duration");
}

// ---------------------------------------------------------------------------
// Scenario files

namespace detail {

inline IpAddress address_field(const nlohmann::json& j, const std::string& field) {
    if (!j.is_string()) throw ConfigError(field, "expected an address string");
    auto a = IpAddress::parse(j.get<std::string>());
    if (!a) throw ConfigError(field, "invalid address " + j.get<std::string>());
    return *a;
}

inline double number_field(const nlohmann::json& j, const char* key, const std::string& field, double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) throw ConfigError(field + "." + key, "expected a number");
    return it->get<double>();
}

} // namespace detail

inline Scenario build_scenario(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("scenario", "expected an object");
    if (j.value("schema", std::string{}) != kScenarioSchema)
        throw ConfigError("schema", std::string("expected \"") + kScenarioSchema + "\"");
    Scenario s;
    s.name = j.value("name", std::string{"scenario"});
    if (auto it = j.find("seed"); it != j.end()) {
        if (!it->is_number_unsigned() && !it->is_number_integer()) throw ConfigError("seed", "expected an integer");
        s.seed = it->get<std::uint64_t>();
    }
    s.duration_s = detail::number_field(j, "duration_s", "", s.duration_s);
    if (auto it = j.find("start_unix_ms"); it != j.end()) {
        if (!it->is_number_integer()) throw ConfigError("start_unix_ms", "expected an integer");
        s.start_unix_ms = it->get<std::int64_t>();
    }

    auto hops = j.find("hops");
    if (hops == j.end() || !hops->is_array() || hops->empty()) throw ConfigError("hops", "expected a non-empty array");
    for (std::size_t i = 0; i < hops->size(); ++i) {
        const auto& h = (*hops)[i];
        auto f = "hops[" + std::to_string(i) + "]";
        if (!h.is_object()) throw ConfigError(f, "expected an object");
        SimHop hop;
        hop.label = h.value("label", "hop" + std::to_string(i + 1));
        if (!h.contains("address")) throw ConfigError(f + ".address", "missing");
        hop.address = detail::address_field(h["address"], f + ".address");
        if (auto r = h.find("responds_to"); r != h.end()) {
            if (!r->is_array()) throw ConfigError(f + ".responds_to", "expected an array");
            hop.ttl_expired = hop.echo = false;
            for (const auto& v : *r) {
                auto name = v.is_string() ? v.get<std::string>() : "";
                if (name == "ttl_expired") hop.ttl_expired = true;
                else if (name == "echo") hop.echo = true;
                else if (name == "udp") hop.udp = true;
                else if (name == "tcp") hop.tcp = true;
                else throw ConfigError(f + ".responds_to", "unknown response kind '" + name + "'");
            }
        }
        if (auto lb = h.find("lb_addresses"); lb != h.end()) {
            if (!lb->is_array()) throw ConfigError(f + ".lb_addresses", "expected an array");
            for (std::size_t k = 0; k < lb->size(); ++k)
                hop.lb_addresses.push_back(
                    detail::address_field((*lb)[k], f + ".lb_addresses[" + std::to_string(k) + "]"));
        }
        s.hops.push_back(std::move(hop));
    }

    auto lat = j.find("base_latencies_ms");
    if (lat == j.end() || !lat->is_array()) throw ConfigError("base_latencies_ms", "expected an array");
    for (std::size_t i = 0; i < lat->size(); ++i) {
        if (!(*lat)[i].is_number()) throw ConfigError("base_latencies_ms[" + std::to_string(i) + "]", "expected a number");
        s.base_latencies_ms.push_back((*lat)[i].get<double>());
    }

    auto seg = j.find("satellite_segment");
    if (seg == j.end() || !seg->is_object()) throw ConfigError("satellite_segment", "expected {pre_sat, post_sat}");
    if (!seg->contains("pre_sat") || !(*seg)["pre_sat"].is_number_integer())
        throw ConfigError("satellite_segment.pre_sat", "expected an integer TTL");
    if (!seg->contains("post_sat") || !(*seg)["post_sat"].is_number_integer())
        throw ConfigError("satellite_segment.post_sat", "expected an integer TTL");
    s.pre_sat = (*seg)["pre_sat"].get<int>();
    s.post_sat = (*seg)["post_sat"].get<int>();

    if (auto jt = j.find("jitter"); jt != j.end()) {
        if (!jt->is_object()) throw ConfigError("jitter", "expected an object");
        auto dist = jt->value("dist", std::string{"gaussian"});
        if (dist == "none") s.jitter.dist = JitterDist::none;
        else if (dist == "gaussian") s.jitter.dist = JitterDist::gaussian;
        else if (dist == "lognormal") s.jitter.dist = JitterDist::lognormal;
        else throw ConfigError("jitter.dist", "expected none, gaussian or lognormal");
        s.jitter.sigma_ms = detail::number_field(*jt, "sigma_ms", "jitter", s.jitter.sigma_ms);
        s.jitter.satellite_sigma_ms = detail::number_field(*jt, "satellite_sigma_ms", "jitter", s.jitter.satellite_sigma_ms);
    }
    s.loss_probability = detail::number_field(j, "loss_probability", "", 0.0);

    if (auto ev = j.find("events"); ev != j.end()) {
        if (!ev->is_array()) throw ConfigError("events", "expected an array");
        for (std::size_t i = 0; i < ev->size(); ++i) {
            const auto& e = (*ev)[i];
            auto f = "events[" + std::to_string(i) + "]";
            if (!e.is_object()) throw ConfigError(f, "expected an object");
            RerouteEvent r;
            if (!e.contains("at_s")) throw ConfigError(f + ".at_s", "missing");
            r.at_s = detail::number_field(e, "at_s", f, 0);
            r.duration_s = detail::number_field(e, "duration_s", f, 15);
            auto kind = e.value("kind", std::string{"isl_reroute"});
            if (kind == "gs_switch") r.kind = EventKind::gs_switch;
            else if (kind == "isl_reroute") r.kind = EventKind::isl_reroute;
            else if (kind == "satellite_switch") r.kind = EventKind::satellite_switch;
            else throw ConfigError(f + ".kind", "unknown event kind '" + kind + "'");
            if (e.contains("delta_ms")) r.delta_ms = detail::number_field(e, "delta_ms", f, 0);
            if (e.contains("new_rtt_ms")) r.new_rtt_ms = detail::number_field(e, "new_rtt_ms", f, 0);
            s.events.push_back(r);
        }
    }
    if (auto fl = j.find("hop_flaps"); fl != j.end()) {
        if (!fl->is_array()) throw ConfigError("hop_flaps", "expected an array");
        for (std::size_t i = 0; i < fl->size(); ++i) {
            auto f = "hop_flaps[" + std::to_string(i) + "]";
            HopFlap h;
            h.at_s = detail::number_field((*fl)[i], "at_s", f, 0);
            h.duration_s = detail::number_field((*fl)[i], "duration_s", f, 1);
            h.extra_hops = static_cast<int>(detail::number_field((*fl)[i], "extra_hops", f, 1));
            s.hop_flaps.push_back(h);
        }
    }

    s.endpoint.address = s.hops.back().address;
    if (auto ep = j.find("endpoint"); ep != j.end()) {
        if (!ep->is_object()) throw ConfigError("endpoint", "expected an object");
        if (ep->contains("address")) s.endpoint.address = detail::address_field((*ep)["address"], "endpoint.address");
        s.endpoint.pop_code = ep->value("pop_code", std::string{});
        if (!s.endpoint.pop_code.empty()) {
            auto catalog = discovery::PopCatalog::embedded();
            if (const auto* loc = catalog.find(s.endpoint.pop_code)) s.endpoint.pop = *loc;
        }
        if (auto c = ep->find("customer"); c != ep->end()) {
            geo::LatLon p{detail::number_field(*c, "lat", "endpoint.customer", 999),
                          detail::number_field(*c, "lon", "endpoint.customer", 999)};
            if (!geo::valid(p)) throw ConfigError("endpoint.customer", "coordinates out of range");
            s.endpoint.customer_location = p;
        }
    }
    if (s.endpoint.address != s.hops.back().address)
        throw ConfigError("endpoint.address", "must equal the last hop address");
    s.validate();
    return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scenario " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path.string(), "not valid JSON");
    try {
        return build_scenario(j);
    } catch (const ConfigError& e) {
        throw ConfigError(e.field(), path.filename().string() + ": " + e.what());
    }
}

inline nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["schema"] = kScenarioSchema;
    j["name"] = s.name;
    j["seed"] = s.seed;
    j["duration_s"] = s.duration_s;
    j["start_unix_ms"] = s.start_unix_ms;
    nlohmann::json ep{{"address", s.endpoint.address.to_string()}};
    if (!s.endpoint.pop_code.empty()) ep["pop_code"] = s.endpoint.pop_code;
    if (s.endpoint.customer_location)
        ep["customer"] = {{"lat", s.endpoint.customer_location->lat_deg}, {"lon", s.endpoint.customer_location->lon_deg}};
    j["endpoint"] = ep;
    for (const auto& h : s.hops) {
        nlohmann::json r = nlohmann::json::array();
        if (h.ttl_expired) r.push_back("ttl_expired");
        if (h.echo) r.push_back("echo");
        if (h.udp) r.push_back("udp");
        if (h.tcp) r.push_back("tcp");
        nlohmann::json hj{{"label", h.label}, {"address", h.address.to_string()}, {"responds_to", r}};
        if (!h.lb_addresses.empty()) {
            hj["lb_addresses"] = nlohmann::json::array();
            for (const auto& a : h.lb_addresses) hj["lb_addresses"].push_back(a.to_string());
        }
        j["hops"].push_back(hj);
    }
    j["base_latencies_ms"] = s.base_latencies_ms;
    j["satellite_segment"] = {{"pre_sat", s.pre_sat}, {"post_sat", s.post_sat}};
    const char* dist = s.jitter.dist == JitterDist::none ? "none" : s.jitter.dist == JitterDist::gaussian ? "gaussian" : "lognormal";
    j["jitter"] = {{"dist", dist}, {"sigma_ms", s.jitter.sigma_ms}, {"satellite_sigma_ms", s.jitter.satellite_sigma_ms}};
    j["loss_probability"] = s.loss_probability;
    j["events"] = nlohmann::json::array();
    for (const auto& e : s.events) {
        nlohmann::json ej{{"at_s", e.at_s}, {"kind", to_string(e.kind)}, {"duration_s", e.duration_s}};
        if (e.delta_ms) ej["delta_ms"] = *e.delta_ms;
        if (e.new_rtt_ms) ej["new_rtt_ms"] = *e.new_rtt_ms;
        j["events"].push_back(ej);
    }
    if (!s.hop_flaps.empty()) {
        for (const auto& f : s.hop_flaps)
            j["hop_flaps"].push_back({{"at_s", f.at_s}, {"duration_s", f.duration_s}, {"extra_hops", f.extra_hops}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Responder

enum class RouteKind { relay, isl, remote_gs, satellite_switch };

inline std::string_view to_string(RouteKind k) {
    switch (k) {
    case RouteKind::relay: return "relay";
    case RouteKind::isl: return "isl";
    case RouteKind::remote_gs: return "remote_gs";
    case RouteKind::satellite_switch: return "satellite_switch";
    }
    return "?";
}

struct GroundTruth {
    RouteKind route = RouteKind::relay;
    double satellite_rtt_ms = 0.0;
    bool in_event = false;
};

inline GroundTruth ground_truth(const Scenario& s, double t) {
    const auto* e = s.active_event(t);
    if (!e) return {RouteKind::relay, s.base_satellite_rtt_ms(), false};
    RouteKind k = e->kind == EventKind::isl_reroute ? RouteKind::isl
                  : e->kind == EventKind::gs_switch ? RouteKind::remote_gs
                                                    : RouteKind::satellite_switch;
    return {k, s.satellite_rtt_ms(t), true};
}

struct SimProbe {
    IpAddress target;
    probe::Protocol protocol = probe::Protocol::icmp;
    int ttl = 64;
    std::uint32_t flow_id = 0;
    std::int64_t at_us = 0; // absolute UNIX microseconds
};

namespace detail {

enum Stream : std::uint64_t { kTerrestrial = 1, kSatellite = 2, kLoss = 3 };

/// Independent generator for one (seed, instant, stream) triple, so a reply
/// depends only on what was asked and when.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::int64_t at_us, std::uint64_t stream) {
    auto t = static_cast<std::uint64_t>(at_us);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32),
                      static_cast<std::uint32_t>(stream)};
    return std::mt19937_64(seq);
}

inline double jitter_draw(JitterDist dist, double sigma, std::uint64_t seed, std::int64_t at_us, std::uint64_t stream) {
    if (dist == JitterDist::none || sigma == 0) return 0.0;
    auto rng = stream_rng(seed, at_us, stream);
    std::normal_distribution<double> z(0.0, 1.0);
    double x = z(rng);
    if (dist == JitterDist::gaussian) return sigma * x;
    // Zero-mean lognormal with standard deviation sigma (shape 0.5).
    constexpr double shape = 0.5;
    double m = std::exp(shape * shape / 2);
    double sd = std::sqrt((std::exp(shape * shape) - 1) * std::exp(shape * shape));
    return sigma * (std::exp(shape * x) - m) / sd;
}

inline std::uint64_t mix(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

} // namespace detail

/// Reply to one probe, or silence. Pure in (scenario, probe).
inline std::optional<probe::ProbeReply> respond_to_probe(const Scenario& s, const SimProbe& p) {
    double t = static_cast<double>(p.at_us - s.start_us()) / 1e6;
    if (t < 0) return std::nullopt;
    if (p.ttl < 1) return std::nullopt;

    int dest = -1;
    for (int i = s.chain_length() - 1; i >= 0; --i)
        if (s.hops[static_cast<std::size_t>(i)].address == p.target) {
            dest = i;
            break;
        }
    if (dest < 0) return std::nullopt;

    if (s.loss_probability > 0) {
        auto rng = detail::stream_rng(s.seed, p.at_us, detail::kLoss);
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < s.loss_probability) return std::nullopt;
    }

    // Flapping routers sit after hop 1 and never answer.
    int extra = s.extra_hops(t);
    int ttl = p.ttl;
    if (extra > 0 && dest >= 1) {
        if (ttl >= 2 && ttl <= 1 + extra) return std::nullopt;
        if (ttl > 1 + extra) ttl -= extra;
    }

    int reached = std::min(ttl, dest + 1); // 1-based index of the hop that handles the probe
    const auto& hop = s.hops[static_cast<std::size_t>(reached - 1)];
    probe::ReplyKind kind;
    if (reached - 1 == dest) {
        bool answers = p.protocol == probe::Protocol::icmp ? hop.echo
                       : p.protocol == probe::Protocol::udp ? hop.udp
                                                            : hop.tcp;
        if (!answers) return std::nullopt;
        kind = p.protocol == probe::Protocol::icmp  ? probe::ReplyKind::echo_reply
               : p.protocol == probe::Protocol::udp ? probe::ReplyKind::port_unreachable
                                                    : probe::ReplyKind::tcp_response;
    } else {
        if (!hop.ttl_expired) return std::nullopt;
        kind = probe::ReplyKind::ttl_expired;
    }

    double terrestrial = 0.0;
    for (int i = 0; i < reached; ++i)
        if (i < s.pre_sat || i >= s.post_sat) terrestrial += 2.0 * s.base_latencies_ms[static_cast<std::size_t>(i)];
    double satellite = 0.0;
    if (reached > s.pre_sat) {
        double scale = s.satellite_rtt_ms(t) / s.base_satellite_rtt_ms();
        for (int i = s.pre_sat; i < std::min(reached, s.post_sat); ++i)
            satellite += 2.0 * s.base_latencies_ms[static_cast<std::size_t>(i)] * scale;
    }

    double jt = detail::jitter_draw(s.jitter.dist, s.jitter.sigma_ms, s.seed, p.at_us, detail::kTerrestrial);
    double js = detail::jitter_draw(s.jitter.dist, s.jitter.satellite_sigma_ms, s.seed, p.at_us, detail::kSatellite);
    double rtt = std::max(0.001, terrestrial + jt);
    if (reached > s.pre_sat) rtt += std::max(0.0, satellite + js);

    IpAddress responder = hop.address;
    if (!hop.lb_addresses.empty()) {
        std::size_t n = hop.lb_addresses.size() + 1;
        std::size_t pick = detail::mix(p.flow_id ^ (static_cast<std::uint64_t>(reached) << 40)) % n;
        if (pick > 0) responder = hop.lb_addresses[pick - 1];
    }
    return probe::ProbeReply{responder, std::llround(rtt * 1000.0), kind};
}

/// Probe transport backed by a set of scenarios, one per endpoint.
class SimTransport final : public probe::Transport {
public:
    SimTransport() = default;
    explicit SimTransport(std::vector<Scenario> scenarios) {
        for (auto& s : scenarios) add(std::move(s));
    }

    void add(Scenario s) {
        s.validate();
        auto key = s.endpoint.address;
        scenarios_.insert_or_assign(key, std::move(s));
    }

    const Scenario* find(const IpAddress& target) const {
        if (auto it = scenarios_.find(target); it != scenarios_.end()) return &it->second;
        for (const auto& [_, s] : scenarios_)
            for (const auto& h : s.hops)
                if (h.address == target) return &s;
        return nullptr;
    }

    const std::map<IpAddress, Scenario>& scenarios() const noexcept { return scenarios_; }

    std::optional<probe::ProbeReply> send(const probe::ProbeRequest& r) override {
        if (r.trace_id != 0) {
            std::lock_guard lock(mu_);
            auto [it, inserted] = flows_.try_emplace(r.trace_id, FlowKey{r.target, r.protocol, r.flow_id});
            if (!inserted && !(it->second == FlowKey{r.target, r.protocol, r.flow_id}))
                throw std::logic_error("flow-identifying fields changed within traceroute " + std::to_string(r.trace_id));
        }
        {
            std::lock_guard lock(mu_);
            ++probes_sent_;
        }
        const auto* s = find(r.target);
        if (!s) return std::nullopt;
        auto reply = respond_to_probe(*s, {r.target, r.protocol, r.ttl, r.flow_id, r.at_us});
        if (reply && reply->rtt_us > r.timeout_us) return std::nullopt;
        return reply;
    }

    std::uint64_t probes_sent() const {
        std::lock_guard lock(mu_);
        return probes_sent_;
    }

private:
    struct FlowKey {
        IpAddress target;
        probe::Protocol protocol;
        std::uint32_t flow_id;
        bool operator==(const FlowKey&) const = default;
    };

    std::map<IpAddress, Scenario> scenarios_;
    mutable std::mutex mu_;
    std::unordered_map<std::uint64_t, FlowKey> flows_;
    std::uint64_t probes_sent_ = 0;
};

/// Simple chain builder for tests and generated cohorts: `n_hops` routers with
/// `terrestrial_ms` one-way per link, the satellite link entering the last hop.
inline Scenario make_bent_pipe(std::string name, int n_hops, double terrestrial_one_way_ms, double satellite_rtt_ms,
                               std::uint64_t seed = 1, std::uint32_t net = 0x0A000000) {
    if (n_hops < 2) throw ConfigError("n_hops", "need at least two hops");
    Scenario s;
    s.name = std::move(name);
    s.seed = seed;
    for (int i = 1; i <= n_hops; ++i) {
        SimHop h;
        h.label = i == n_hops ? "customer" : "router" + std::to_string(i);
        h.address = IpAddress::v4(net + static_cast<std::uint32_t>(i));
        s.hops.push_back(h);
        s.base_latencies_ms.push_back(i == n_hops ? satellite_rtt_ms / 2.0 : terrestrial_one_way_ms);
    }
    s.pre_sat = n_hops - 1;
    s.post_sat = n_hops;
    s.endpoint.address = s.hops.back().address;
    return s;
}

} // namespace hitchhike::simnet
