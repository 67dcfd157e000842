#pragma once

#include "hitchhike/analysis.hpp"
#include "hitchhike/discovery.hpp"
#include "hitchhike/error.hpp"
#include "hitchhike/probe.hpp"
#include "hitchhike/simnet.hpp"
#include "hitchhike/store.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace hitchhike::campaign {

inline constexpr const char* kCampaignSchema = "hitchhike.campaign/1";

struct DatasetRef {
    std::filesystem::path path;
    discovery::DatasetFormat format = discovery::DatasetFormat::json_lines;
};

enum class TransportKind { raw, simnet };
enum class Schedule { once, daily };

struct CampaignConfig {
    std::vector<DatasetRef> datasets;
    std::optional<std::filesystem::path> pop_catalog;
    std::optional<std::filesystem::path> geofeed;
    std::vector<std::string> pep_blocklist{"peplink"};
    TransportKind transport = TransportKind::simnet;
    std::filesystem::path scenario_dir;
    probe::Protocol protocol = probe::Protocol::icmp;
    int max_ttl = 32;
    int probes_per_hop = 3;
    int cadence_hz = 1;
    int duration_s = 300;
    int concurrency = 64;
    double jump_threshold_ms = probe::kDefaultJumpThresholdMs;
    double smoothing_window_s = 15.0;
    analysis::SpikeOptions spikes;
    double jitter_filter_ms = 1.0;
    std::filesystem::path output_dir = "store";
    Schedule schedule = Schedule::once;
    std::vector<IpPrefix> exclusions;

    void validate() const {
        auto range = [](const char* f, double v, double lo, double hi) {
            if (!(v >= lo && v <= hi))
                throw ConfigError(f, "must lie in [" + csv::format_double(lo) + ", " + csv::format_double(hi) + "]");
        };
        range("max_ttl", max_ttl, 1, 64);
        range("probes_per_hop", probes_per_hop, 1, 16);
        range("cadence_hz", cadence_hz, 1, 10);
        range("duration_s", duration_s, 1, 86400);
        range("concurrency", concurrency, 1, 1024);
        range("jump_threshold_ms", jump_threshold_ms, 0, 1000);
        range("smoothing_window_s", smoothing_window_s, 1, 600);
        range("spikes.sustained_sigmas", spikes.sustained_sigmas, 0, 10);
        range("spikes.standard_sigmas", spikes.standard_sigmas, 0, spikes.sustained_sigmas);
        range("spikes.min_sustained_s", spikes.min_sustained_s, 1, 3600);
        range("jitter_filter_ms", jitter_filter_ms, 0, 1000);
        if (transport == TransportKind::simnet && scenario_dir.empty())
            throw ConfigError("transport.scenario_dir", "required for the simnet transport");
        if (output_dir.empty()) throw ConfigError("output_dir", "required");
    }

    /// Canonical form used for provenance hashing.
    nlohmann::json to_json() const {
        nlohmann::json j;
        j["schema"] = kCampaignSchema;
        for (const auto& d : datasets)
            j["datasets"].push_back(
                {{"path", d.path.string()}, {"format", d.format == discovery::DatasetFormat::csv ? "csv" : "json_lines"}});
        if (pop_catalog) j["pop_catalog"] = pop_catalog->string();
        if (geofeed) j["geofeed"] = geofeed->string();
        j["pep_blocklist"] = pep_blocklist;
        j["transport"] = transport == TransportKind::raw
                             ? nlohmann::json{{"kind", "raw"}}
                             : nlohmann::json{{"kind", "simnet"}, {"scenario_dir", scenario_dir.string()}};
        j["trace"] = {{"protocol", probe::to_string(protocol)}, {"max_ttl", max_ttl}, {"probes_per_hop", probes_per_hop}};
        j["cadence_hz"] = cadence_hz;
        j["duration_s"] = duration_s;
        j["concurrency"] = concurrency;
        j["jump_threshold_ms"] = jump_threshold_ms;
        j["smoothing_window_s"] = smoothing_window_s;
        j["spikes"] = {{"sustained_sigmas", spikes.sustained_sigmas},
                       {"standard_sigmas", spikes.standard_sigmas},
                       {"min_sustained_s", spikes.min_sustained_s}};
        j["jitter_filter_ms"] = jitter_filter_ms;
        j["output_dir"] = output_dir.string();
        j["schedule"] = schedule == Schedule::daily ? "daily" : "once";
        j["exclusions"] = nlohmann::json::array();
        for (const auto& p : exclusions) j["exclusions"].push_back(p.to_string());
        return j;
    }

    std::string hash() const { return store::config_hash(to_json()); }

    /// Relative paths resolve against `base_dir` (the config file's directory).
    static CampaignConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
        if (!j.is_object()) throw ConfigError("config", "expected an object");
        if (auto s = j.find("schema"); s != j.end() && *s != kCampaignSchema)
            throw ConfigError("schema", std::string("expected \"") + kCampaignSchema + "\"");
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
        };
        auto number = [&](const nlohmann::json& obj, const char* key, const std::string& field, auto fallback) {
            auto it = obj.find(key);
            if (it == obj.end()) return fallback;
            if (!it->is_number()) throw ConfigError(field, "expected a number");
            return it->template get<decltype(fallback)>();
        };
        auto string = [&](const nlohmann::json& obj, const char* key, const std::string& field) -> std::optional<std::string> {
            auto it = obj.find(key);
            if (it == obj.end() || it->is_null()) return std::nullopt;
            if (!it->is_string()) throw ConfigError(field, "expected a string");
            return it->get<std::string>();
        };

        CampaignConfig c;
        if (auto ds = j.find("datasets"); ds != j.end()) {
            if (!ds->is_array()) throw ConfigError("datasets", "expected an array");
            for (std::size_t i = 0; i < ds->size(); ++i) {
                auto f = "datasets[" + std::to_string(i) + "]";
                const auto& d = (*ds)[i];
                auto path = string(d, "path", f + ".path");
                if (!path) throw ConfigError(f + ".path", "missing");
                auto fmt = discovery::format_from_name(string(d, "format", f + ".format").value_or("json_lines"));
                if (!fmt) throw ConfigError(f + ".format", "expected json_lines or csv");
                c.datasets.push_back({resolve(*path), *fmt});
            }
        }
        if (auto p = string(j, "pop_catalog", "pop_catalog")) c.pop_catalog = resolve(*p);
        if (auto p = string(j, "geofeed", "geofeed")) c.geofeed = resolve(*p);
        if (auto b = j.find("pep_blocklist"); b != j.end()) {
            if (!b->is_array()) throw ConfigError("pep_blocklist", "expected an array of strings");
            c.pep_blocklist.clear();
            for (const auto& s : *b) {
                if (!s.is_string()) throw ConfigError("pep_blocklist", "expected an array of strings");
                c.pep_blocklist.push_back(s.get<std::string>());
            }
        }
        if (auto t = j.find("transport"); t != j.end()) {
            if (!t->is_object()) throw ConfigError("transport", "expected an object");
            auto kind = string(*t, "kind", "transport.kind").value_or("simnet");
            if (kind == "raw") c.transport = TransportKind::raw;
            else if (kind == "simnet") c.transport = TransportKind::simnet;
            else throw ConfigError("transport.kind", "expected raw or simnet");
            if (auto d = string(*t, "scenario_dir", "transport.scenario_dir")) c.scenario_dir = resolve(*d);
        }
        if (auto t = j.find("trace"); t != j.end()) {
            auto proto = probe::protocol_from_name(string(*t, "protocol", "trace.protocol").value_or("icmp"));
            if (!proto) throw ConfigError("trace.protocol", "expected icmp, udp or tcp");
            c.protocol = *proto;
            c.max_ttl = number(*t, "max_ttl", "trace.max_ttl", c.max_ttl);
            c.probes_per_hop = number(*t, "probes_per_hop", "trace.probes_per_hop", c.probes_per_hop);
        }
        c.cadence_hz = number(j, "cadence_hz", "cadence_hz", c.cadence_hz);
        c.duration_s = number(j, "duration_s", "duration_s", c.duration_s);
        c.concurrency = number(j, "concurrency", "concurrency", c.concurrency);
        c.jump_threshold_ms = number(j, "jump_threshold_ms", "jump_threshold_ms", c.jump_threshold_ms);
        c.smoothing_window_s = number(j, "smoothing_window_s", "smoothing_window_s", c.smoothing_window_s);
        if (auto s = j.find("spikes"); s != j.end()) {
            c.spikes.sustained_sigmas = number(*s, "sustained_sigmas", "spikes.sustained_sigmas", c.spikes.sustained_sigmas);
            c.spikes.standard_sigmas = number(*s, "standard_sigmas", "spikes.standard_sigmas", c.spikes.standard_sigmas);
            c.spikes.min_sustained_s = number(*s, "min_sustained_s", "spikes.min_sustained_s", c.spikes.min_sustained_s);
        }
        c.jitter_filter_ms = number(j, "jitter_filter_ms", "jitter_filter_ms", c.jitter_filter_ms);
        if (auto o = string(j, "output_dir", "output_dir")) c.output_dir = resolve(*o);
        auto sched = string(j, "schedule", "schedule").value_or("once");
        if (sched == "daily") c.schedule = Schedule::daily;
        else if (sched != "once") throw ConfigError("schedule", "expected once or daily");
        if (auto ex = j.find("exclusions"); ex != j.end()) {
            if (!ex->is_array()) throw ConfigError("exclusions", "expected an array of prefixes");
            for (std::size_t i = 0; i < ex->size(); ++i) {
                auto f = "exclusions[" + std::to_string(i) + "]";
                if (!(*ex)[i].is_string()) throw ConfigError(f, "expected a prefix string");
                auto p = IpPrefix::parse((*ex)[i].get<std::string>());
                if (!p) throw ConfigError(f, "invalid prefix");
                c.exclusions.push_back(*p);
            }
        }
        c.validate();
        return c;
    }

    static CampaignConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config", "cannot read " + path.string());
        auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError("config", path.string() + " is not valid JSON");
        return from_json(j, path.parent_path());
    }
};

inline bool excluded(const CampaignConfig& c, const IpAddress& a) {
    return std::any_of(c.exclusions.begin(), c.exclusions.end(), [&](const IpPrefix& p) { return p.contains(a); });
}

/// Drops probes to opted-out addresses before they reach the wire.
class ExclusionTransport final : public probe::Transport {
public:
    ExclusionTransport(probe::Transport& inner, std::vector<IpPrefix> exclusions)
        : inner_(inner), exclusions_(std::move(exclusions)) {}

    std::optional<probe::ProbeReply> send(const probe::ProbeRequest& r) override {
        for (const auto& p : exclusions_)
            if (p.contains(r.target)) {
                blocked_.fetch_add(1);
                return std::nullopt;
            }
        return inner_.send(r);
    }

    std::uint64_t blocked() const noexcept { return blocked_.load(); }

private:
    probe::Transport& inner_;
    std::vector<IpPrefix> exclusions_;
    std::atomic<std::uint64_t> blocked_{0};
};

// ---------------------------------------------------------------------------
// Discovery stage

struct DiscoveryReport {
    std::vector<discovery::Endpoint> endpoints;
    std::size_t records = 0;
    std::size_t malformed = 0;
    std::size_t customer_ptr = 0;
    std::size_t pep_removed = 0;
    std::size_t geolocated = 0;
    std::size_t geofeed_skipped = 0;
    std::vector<std::pair<IpAddress, std::string>> unknown_pop;
    std::vector<IpAddress> ambiguous;
};

inline DiscoveryReport run_discovery(const CampaignConfig& c) {
    if (c.datasets.empty()) throw ConfigError("datasets", "at least one dataset is required for discovery");
    auto catalog = c.pop_catalog ? discovery::PopCatalog::load(*c.pop_catalog) : discovery::PopCatalog::embedded();
    DiscoveryReport rep;
    std::vector<discovery::ScanRecord> records;
    for (const auto& d : c.datasets) {
        auto parsed = discovery::parse_scan_dataset(d.path, d.format);
        rep.malformed += parsed.malformed_rows;
        records.insert(records.end(), parsed.records.begin(), parsed.records.end());
    }
    rep.records = records.size();
    auto customers = discovery::filter_customer_endpoints(records, catalog);
    rep.customer_ptr = customers.endpoints.size();
    rep.unknown_pop = customers.unknown_pop;
    rep.ambiguous = customers.ambiguous;
    auto peps = discovery::exclude_peps(customers.endpoints, records, discovery::PepBlocklist{c.pep_blocklist});
    rep.pep_removed = peps.removed;
    rep.endpoints = std::move(peps.endpoints);
    if (c.geofeed) {
        auto feed = discovery::Geofeed::load(*c.geofeed);
        rep.geofeed_skipped = feed.skipped_rows();
        for (auto& e : rep.endpoints) {
            e = discovery::geolocate_customer(std::move(e), feed);
            if (e.customer_location) ++rep.geolocated;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Measurement stage

struct EndpointFailure {
    std::string stage;
    IpAddress address;
    std::string message;
};

struct EndpointResult {
    discovery::Endpoint endpoint;
    std::optional<probe::TracerouteResult> trace;
    std::optional<probe::SatLinkPath> path;
    std::optional<std::filesystem::path> session_dir;
    std::optional<EndpointFailure> failure;
};

struct CohortOptions {
    bool trace_only = false;
    // Session length given the aligned start time; overrides the config, e.g.
    // to fit the session inside a scenario.
    std::function<int(const discovery::Endpoint&, std::int64_t start_us)> duration_for;
};

using ClockFactory = std::function<std::unique_ptr<probe::Clock>(const discovery::Endpoint&)>;

/// Per endpoint: traceroute, locate the satellite hop, measure, store. Up to
/// `concurrency` endpoints run at once; each endpoint is probed sequentially on
/// its own clock. A failure is recorded against its stage and the cohort
/// carries on.
inline std::vector<EndpointResult> run_cohort(probe::Transport& transport, const ClockFactory& clocks,
                                              const std::vector<discovery::Endpoint>& endpoints,
                                              const CampaignConfig& c, const std::filesystem::path& partition,
                                              const CohortOptions& opts = {}) {
    ExclusionTransport guarded(transport, c.exclusions);
    std::vector<EndpointResult> results(endpoints.size());
    std::atomic<std::size_t> next{0};
    auto hash = c.hash();

    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= endpoints.size()) return;
            auto& r = results[i];
            r.endpoint = endpoints[i];
            const auto& ep = endpoints[i];
            auto fail = [&](const char* stage, const std::string& msg) { r.failure = EndpointFailure{stage, ep.address, msg}; };
            if (excluded(c, ep.address)) {
                fail("exclude", "address is on the opt-out list");
                continue;
            }
            std::string stage = "trace";
            try {
                auto clock = clocks(ep);
                probe::TraceOptions to;
                to.protocol = c.protocol;
                to.max_ttl = c.max_ttl;
                to.probes_per_hop = c.probes_per_hop;
                to.flow_id = static_cast<std::uint32_t>(std::hash<IpAddress>{}(ep.address) & 0xFFFF);
                r.trace = probe::run_traceroute(guarded, *clock, ep.address, to);
                stage = "identify";
                r.path = probe::identify_sat_link(*r.trace, c.jump_threshold_ms);
                if (opts.trace_only) continue;

                stage = "measure";
                // Start on a whole second so ticks line up across endpoints.
                auto now = clock->now_us();
                clock->sleep_until_us((now + 999'999) / 1'000'000 * 1'000'000);
                probe::SessionOptions so;
                so.duration_s = opts.duration_for ? opts.duration_for(ep, clock->now_us()) : c.duration_s;
                so.cadence_hz = c.cadence_hz;
                so.flow_id = to.flow_id;
                auto session = probe::measure_session(guarded, *clock, ep, *r.path, so);
                stage = "store";
                r.session_dir = store::MeasurementStore::write_session(partition, session, {{"config_hash", hash}});
                if (!session.usable) fail("measure", "terrestrial hop lost more than half of its probes");
            } catch (const std::exception& e) {
                fail(stage.c_str(), e.what());
            }
        }
    };

    std::size_t n = std::min<std::size_t>(static_cast<std::size_t>(c.concurrency), std::max<std::size_t>(1, endpoints.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t k = 0; k < n; ++k) pool.emplace_back(work);
    }
    return results;
}

// ---------------------------------------------------------------------------
// Analysis stage

struct SessionAnalysis {
    discovery::Endpoint endpoint;
    std::string partition;
    analysis::Isolation isolation;
    analysis::LatencySeries terrestrial;
    analysis::LatencySeries smoothed;
    std::vector<analysis::SpikeEvent> spikes;
    analysis::SessionStats stats;
    bool jitter_ok = true;
};

inline SessionAnalysis analyze_session(const probe::MeasurementSession& s, const CampaignConfig& c) {
    SessionAnalysis a;
    a.endpoint = s.endpoint;
    a.isolation = analysis::isolate_satellite_latency(s);
    a.terrestrial = analysis::raw_series(s.terrestrial_samples, analysis::SeriesSource::raw_terrestrial);
    a.smoothed = analysis::smooth(a.isolation.series, c.smoothing_window_s);
    if (a.smoothed.duration_s() >= c.spikes.min_series_s) a.spikes = analysis::detect_spikes(a.smoothed, c.spikes);
    std::size_t total = s.endpoint_samples.size();
    double loss = total == 0 ? 1.0 : static_cast<double>(a.isolation.unpaired) / static_cast<double>(total);
    a.stats = analysis::session_stats(a.isolation.series, loss, a.spikes);
    a.jitter_ok = analysis::max_deviation_from_median(a.terrestrial) <= c.jitter_filter_ms;
    return a;
}

struct AnalyzeSummary {
    std::vector<SessionAnalysis> sessions;
    std::vector<EndpointFailure> failures;
    std::size_t sustained = 0;
    std::size_t standard = 0;
};

/// Analyse every stored session and write per-partition tables under
/// <partition>/analysis/. Session files are only read.
inline AnalyzeSummary analyze_store(const store::MeasurementStore& st, const CampaignConfig& c, bool write = true) {
    AnalyzeSummary out;
    std::map<std::string, std::vector<std::size_t>> by_partition;
    for (const auto& stored : st.list_sessions()) {
        try {
            auto session = store::MeasurementStore::load_session(stored);
            auto a = analyze_session(session, c);
            a.partition = stored.partition;
            for (const auto& e : a.spikes) (e.kind == analysis::SpikeKind::sustained ? out.sustained : out.standard) += 1;
            by_partition[stored.partition].push_back(out.sessions.size());
            out.sessions.push_back(std::move(a));
        } catch (const std::exception& e) {
            auto addr = IpAddress::parse(stored.meta.value("endpoint", nlohmann::json::object()).value("address", ""));
            out.failures.push_back({"analyze", addr.value_or(IpAddress{}), e.what()});
        }
    }
    if (!write) return out;
    auto hash = c.hash();
    for (const auto& [part, idx] : by_partition) {
        auto dir = st.root() / part / "analysis";
        std::filesystem::create_directories(dir);
        std::vector<std::pair<discovery::Endpoint, analysis::SessionStats>> stats;
        std::vector<std::pair<std::string, analysis::SpikeEvent>> spikes;
        std::ofstream series(dir / "smoothed.csv");
        series << "# config " << hash << '\n';
        series << "target,timestamp_ms,isolated_ms,smoothed_ms\n";
        for (auto i : idx) {
            const auto& a = out.sessions[i];
            stats.emplace_back(a.endpoint, a.stats);
            for (const auto& e : a.spikes) spikes.emplace_back(a.endpoint.address.to_string(), e);
            for (std::size_t k = 0; k < a.smoothed.size(); ++k)
                series << a.endpoint.address.to_string() << ',' << a.smoothed.timestamps_ms[k] << ','
                       << csv::format_fixed(a.isolation.series.values_ms[k]) << ','
                       << csv::format_fixed(a.smoothed.values_ms[k]) << '\n';
        }
        std::ofstream so(dir / "stats.csv");
        so << "# config " << hash << '\n';
        analysis::write_stats_csv(so, stats);
        std::ofstream sp(dir / "spikes.csv");
        sp << "# config " << hash << '\n';
        analysis::write_spikes_csv(sp, spikes);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Report stage

struct ReportSummary {
    std::size_t sessions = 0;
    std::size_t jitter_excluded = 0;
    std::size_t pops = 0;
    std::size_t sustained = 0;
    std::size_t standard = 0;
    std::optional<double> spearman;
    std::vector<analysis::TrendPoint> trend;
    std::string text;
};

inline ReportSummary report_store(const store::MeasurementStore& st, const CampaignConfig& c,
                                  const std::filesystem::path& out_dir) {
    auto analyzed = analyze_store(st, c, false);
    if (analyzed.sessions.empty()) throw InsufficientDataError("no sessions");
    ReportSummary rep;
    rep.sessions = analyzed.sessions.size();
    std::filesystem::create_directories(out_dir);
    auto hash = c.hash();

    std::map<std::string, std::vector<std::pair<discovery::Endpoint, analysis::SessionStats>>> by_day;
    std::vector<std::pair<discovery::Endpoint, analysis::SessionStats>> all;
    std::vector<std::pair<std::string, analysis::SpikeEvent>> spikes;
    for (const auto& a : analyzed.sessions) {
        for (const auto& e : a.spikes) {
            spikes.emplace_back(a.endpoint.address.to_string(), e);
            (e.kind == analysis::SpikeKind::sustained ? rep.sustained : rep.standard) += 1;
        }
        if (!a.jitter_ok) {
            ++rep.jitter_excluded;
            continue;
        }
        by_day[a.partition.substr(0, 10)].emplace_back(a.endpoint, a.stats);
        all.emplace_back(a.endpoint, a.stats);
    }

    std::vector<analysis::PopAggregate> aggs;
    if (!all.empty()) aggs = analysis::aggregate_by_pop(all);
    rep.pops = aggs.size();
    std::vector<std::pair<std::string, std::vector<analysis::PopAggregate>>> days;
    for (const auto& [day, items] : by_day) days.emplace_back(day, analysis::aggregate_by_pop(items));
    rep.trend = analysis::temporal_trend(days);
    auto dist = analysis::min_rtt_vs_pop_distance(all);
    rep.spearman = dist.spearman;

    auto open = [&](const char* name) {
        std::ofstream os(out_dir / name);
        if (!os) throw IoError("cannot write " + (out_dir / name).string());
        os << "# config " << hash << '\n';
        return os;
    };
    {
        auto os = open("pop_aggregates.csv");
        analysis::write_aggregates_csv(os, aggs);
    }
    {
        auto os = open("spikes.csv");
        analysis::write_spikes_csv(os, spikes);
    }
    {
        auto os = open("min_rtt_distance.csv");
        analysis::write_distance_csv(os, dist);
    }
    {
        auto os = open("trend.csv");
        analysis::write_trend_csv(os, rep.trend);
    }

    std::ostringstream txt;
    txt << "config " << hash << "\n";
    txt << "sessions " << rep.sessions << " (jitter-filtered out: " << rep.jitter_excluded << ")\n";
    txt << "spikes sustained=" << rep.sustained << " standard=" << rep.standard << "\n\n";
    txt << "pop        endpoints  mean_ms   stddev_ms\n";
    for (const auto& a : aggs) {
        char line[128];
        std::snprintf(line, sizeof line, "%-10s %9zu  %8.2f  %9.2f\n", a.pop_code.empty() ? "-" : a.pop_code.c_str(),
                      a.n_endpoints, a.mean_of_means_ms, a.stddev_ms);
        txt << line;
    }
    txt << "\nmin RTT vs POP distance: " << dist.points.size() << " endpoints";
    if (dist.spearman) txt << ", spearman " << csv::format_fixed(*dist.spearman, 3);
    txt << "\n\ndate        median_ms\n";
    for (const auto& p : rep.trend) txt << p.date << "  " << csv::format_fixed(p.median_ms, 2) << "\n";
    rep.text = txt.str();
    std::ofstream(out_dir / "summary.txt") << rep.text;
    return rep;
}

// ---------------------------------------------------------------------------
// Simulation

/// Every scenario file (*.json) in a directory, or a single file, in name order.
inline std::vector<simnet::Scenario> load_scenarios(const std::filesystem::path& p) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(p)) {
        for (const auto& e : std::filesystem::directory_iterator(p))
            if (e.path().extension() == ".json") files.push_back(e.path());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(p);
    }
    if (files.empty()) throw ConfigError("scenario_dir", "no scenario files in " + p.string());
    std::vector<simnet::Scenario> out;
    for (const auto& f : files) out.push_back(simnet::load_scenario(f));
    return out;
}

/// Virtual clocks that start each endpoint at its scenario's origin.
inline ClockFactory scenario_clocks(const simnet::SimTransport& t) {
    return [&t](const discovery::Endpoint& ep) -> std::unique_ptr<probe::Clock> {
        const auto* s = t.find(ep.address);
        return std::make_unique<probe::VirtualClock>(s ? s->start_us() : 0);
    };
}

/// Sessions run to the end of their scenario.
inline std::function<int(const discovery::Endpoint&, std::int64_t)> scenario_durations(const simnet::SimTransport& t) {
    return [&t](const discovery::Endpoint& ep, std::int64_t start_us) {
        const auto* s = t.find(ep.address);
        if (!s) return 1;
        auto end_us = s->start_us() + static_cast<std::int64_t>(s->duration_s * 1e6);
        return static_cast<int>(std::max<std::int64_t>(1, (end_us - start_us) / 1'000'000));
    };
}

struct SimulationResult {
    std::filesystem::path partition;
    std::vector<EndpointResult> cohort;
    AnalyzeSummary analysis;
};

/// Measure every scenario endpoint through simnet into a fresh partition
/// dated by the earliest scenario start, then analyse the store.
inline SimulationResult simulate(const std::vector<simnet::Scenario>& scenarios, const CampaignConfig& c) {
    if (scenarios.empty()) throw ConfigError("scenario_dir", "no scenarios");
    simnet::SimTransport transport(scenarios);
    std::vector<discovery::Endpoint> endpoints;
    std::int64_t first_ms = scenarios.front().start_unix_ms;
    for (const auto& s : scenarios) {
        endpoints.push_back(s.endpoint);
        first_ms = std::min(first_ms, s.start_unix_ms);
    }
    store::MeasurementStore st(c.output_dir);
    SimulationResult r;
    r.partition = st.new_partition(store::utc_date(first_ms));
    CohortOptions opts;
    opts.duration_for = scenario_durations(transport);
    r.cohort = run_cohort(transport, scenario_clocks(transport), endpoints, c, r.partition, opts);
    r.analysis = analyze_store(st, c);
    return r;
}

} // namespace hitchhike::campaign
