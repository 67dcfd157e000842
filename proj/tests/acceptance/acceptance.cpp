// One PASS/FAIL line per acceptance criterion. Exit status is the number of failures.

#include "oracles.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <unistd.h>

using namespace hitchhike;
namespace fs = std::filesystem;
using constellation::AccessAccounting;
using constellation::CompositeOptions;
using constellation::RouteSpec;

namespace {

fs::path data_dir() { return HITCHHIKE_DATA_DIR; }

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s %2d %-34s %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = fs::temp_directory_path() / ("hitchhike-acceptance-" + tag + "-" + std::to_string(::getpid()));
        fs::remove_all(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

campaign::CampaignConfig sim_config(const fs::path& out, int duration_s, int concurrency = 8) {
    campaign::CampaignConfig c;
    c.scenario_dir = "generated";
    c.output_dir = out;
    c.duration_s = duration_s;
    c.concurrency = concurrency;
    return c;
}

simnet::Scenario chain(std::uint32_t k, std::uint64_t seed, double duration_s) {
    auto s = simnet::make_bent_pipe("c" + std::to_string(k), 5, 2.0, 40.0, seed, 0x0A000000U + (k << 8));
    s.duration_s = duration_s;
    s.jitter.sigma_ms = 0.2;
    return s;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct Sites {
    constellation::ConstellationConfig config;
    constellation::DishSite dish;
    constellation::GroundStation ikeja, lepe, pop;
    double terrestrial_ms = 0;
    double window_start = 0;
};

Sites nigeria() {
    auto j = nlohmann::json::parse(std::ifstream(data_dir() / "constellation/nigeria.json"));
    Sites s;
    s.config = constellation::ConstellationConfig::load(data_dir() / "constellation/starlink_shell1.json");
    s.dish = constellation::dish_from_json(j["dish"], "dish");
    s.ikeja = constellation::ground_station_from_json(j["ground_stations"][0], "ground_stations[0]");
    s.lepe = constellation::ground_station_from_json(j["remote_ground_station"], "remote_ground_station");
    s.pop = constellation::ground_station_from_json(j["pop"], "pop");
    s.terrestrial_ms = j["terrestrial_rtt_ms"]["lepe"].get<double>();
    s.window_start = j["window"]["start_unix_s"].get<double>();
    return s;
}

// ---------------------------------------------------------------------------

void spike_recall() {
    std::mt19937_64 rng(101);
    std::vector<simnet::Scenario> scenarios;
    for (std::uint32_t k = 1; k <= 20; ++k) {
        auto s = chain(k, 1000 + k, 1200);
        for (double at : {15.0 * static_cast<double>(14 + rng() % 13), 15.0 * static_cast<double>(47 + rng() % 20)}) {
            simnet::RerouteEvent e;
            e.at_s = at;
            e.kind = simnet::EventKind::isl_reroute;
            e.delta_ms = 80.0 + static_cast<double>(rng() % 71);
            e.duration_s = 15.0 * static_cast<double>(1 + rng() % 3);
            s.events.push_back(e);
        }
        scenarios.push_back(std::move(s));
    }
    TempDir tmp("recall");
    auto res = campaign::simulate(scenarios, sim_config(tmp.path(), 1200));
    std::size_t events = 0, found = 0, below_2sigma = 0;
    for (const auto& s : scenarios) {
        auto it = std::find_if(res.analysis.sessions.begin(), res.analysis.sessions.end(),
                               [&](const auto& a) { return a.endpoint.address == s.endpoint.address; });
        for (const auto& e : s.events) {
            ++events;
            if (it == res.analysis.sessions.end()) continue;
            double sigma = stats::stddev(it->smoothed.values_ms);
            below_2sigma += *e.delta_ms < 2 * sigma;
            std::int64_t from = s.start_unix_ms + static_cast<std::int64_t>(e.at_s * 1000);
            std::int64_t to = from + static_cast<std::int64_t>(e.duration_s * 1000);
            found += std::any_of(it->spikes.begin(), it->spikes.end(), [&](const analysis::SpikeEvent& x) {
                return x.kind == analysis::SpikeKind::sustained && x.start_ms < to && x.end_ms > from;
            });
        }
    }
    report(1, "spike detection recall", found == events && below_2sigma == 0 && events == 40,
           fmt("recall=%zu/%zu (events under 2 sigma: %zu) tol=exact", found, events, below_2sigma));
}

void false_positives() {
    std::vector<simnet::Scenario> scenarios;
    for (std::uint32_t k = 1; k <= 34; ++k) scenarios.push_back(chain(k, k, 300));
    auto noisy = chain(99, 99, 300);
    noisy.jitter.sigma_ms = 10.0;
    scenarios.push_back(noisy);

    TempDir tmp("fp");
    auto res = campaign::simulate(scenarios, sim_config(tmp.path(), 300));
    std::size_t clean_fp = 0, noisy_fp = 0, filtered_fp = 0, clean_seconds = 0;
    double worst_clean_dev = 0;
    bool noisy_rejected = false;
    for (const auto& a : res.analysis.sessions) {
        auto n = static_cast<std::size_t>(std::count_if(a.spikes.begin(), a.spikes.end(), [](const auto& e) {
            return e.kind == analysis::SpikeKind::sustained;
        }));
        bool is_noisy = a.endpoint.address == noisy.endpoint.address;
        if (is_noisy) {
            noisy_fp += n;
            noisy_rejected = !a.jitter_ok;
        } else {
            clean_fp += n;
            clean_seconds += a.isolation.series.size();
            worst_clean_dev = std::max(worst_clean_dev, analysis::max_deviation_from_median(a.terrestrial));
        }
        if (a.jitter_ok) filtered_fp += n;
    }
    bool bound = res.analysis.sessions.size() == scenarios.size() && clean_seconds >= 10'000 &&
                 worst_clean_dev <= 1.0 && clean_fp <= 1;
    bool filtered = noisy_rejected && filtered_fp == 0;
    report(2, "sustained false positives", bound && filtered,
           fmt("jitter-only=%zu over %zus, max terrestrial dev %.2f ms (<=1); with 10 ms scenario: unfiltered=%zu, "
               "10 ms scenario rejected=%s, after filter=%zu (0)",
               clean_fp, clean_seconds, worst_clean_dev, clean_fp + noisy_fp, noisy_rejected ? "yes" : "no",
               filtered_fp));
}

void isolation_accuracy() {
    std::size_t n = 0, within10 = 0, within3 = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto s = simnet::make_bent_pipe("iso", 6, 3.0, 35.0 + static_cast<double>(seed), seed, 0x0A000000);
        s.duration_s = 600;
        simnet::RerouteEvent e;
        e.at_s = 195;
        e.kind = simnet::EventKind::gs_switch;
        e.new_rtt_ms = 60;
        e.duration_s = 45;
        s.events.push_back(e);
        simnet::SimTransport t({s});
        probe::VirtualClock clock(s.start_us());
        probe::SatLinkPath path{s.endpoint.address, s.pre_sat, s.hops[static_cast<std::size_t>(s.pre_sat - 1)].address,
                                s.post_sat, 30};
        probe::SessionOptions o;
        o.duration_s = 600;
        auto session = probe::measure_session(t, clock, s.endpoint, path, o);
        auto iso = analysis::isolate_satellite_latency(session);
        std::map<std::int64_t, std::int64_t> sent_at;
        for (const auto& p : session.endpoint_samples) sent_at[(p.timestamp_ms - session.start_ms) / 1000] = p.timestamp_ms;
        for (std::size_t i = 0; i < iso.series.size(); ++i) {
            auto tick = (iso.series.timestamps_ms[i] - session.start_ms) / 1000;
            double t_s = static_cast<double>(sent_at[tick] - s.start_unix_ms) / 1000.0;
            double err = std::abs(iso.series.values_ms[i] - simnet::ground_truth(s, t_s).satellite_rtt_ms);
            ++n;
            within10 += err <= 10.0;
            within3 += err <= 3.0;
        }
    }
    double f10 = static_cast<double>(within10) / static_cast<double>(n);
    double f3 = static_cast<double>(within3) / static_cast<double>(n);
    report(3, "satellite isolation accuracy", f10 >= 0.96 && f3 >= 0.50,
           fmt("n=%zu within10ms=%.4f (>=0.96) within3ms=%.4f (>=0.50)", n, f10, f3));
}

void composite_equation() {
    double stated = constellation::composite_from_terms(11, 11, 110).total_rtt_ms;
    auto s = nigeria();
    double lo = 1e9, hi = -1e9, worst = 0;
    int covered = 0;
    for (int t = 0; t < 3600; t += 10) {
        auto snap = constellation::propagate(s.config, s.window_start + t);
        try {
            auto r = constellation::composite_route_rtt(s.config, snap, s.dish, RouteSpec::isl(1), s.lepe, s.pop,
                                                        s.terrestrial_ms);
            lo = std::min(lo, r.total_rtt_ms);
            hi = std::max(hi, r.total_rtt_ms);
            worst = std::max(worst, std::abs(r.total_rtt_ms - 154.0));
            ++covered;
        } catch (const NoCoverageError&) {
        }
    }
    bool ok = std::abs(stated - 154.0) <= 1.0 && covered > 0 && worst <= 5.0;
    report(4, "composite route 154 ms", ok,
           fmt("terms=%.3f (tol 1); geometry %.2f..%.2f over %d ticks, max|dev|=%.2f (tol 5)", stated, lo, hi, covered,
               worst));
}

void isl_penalty() {
    auto s = nigeria();
    double extra = constellation::isl_extra_hop_rtt(s.config);
    constellation::VisibilityParams elevation_only{std::numeric_limits<double>::infinity(), 25.0};
    auto spread = [&](const constellation::VisibilityParams& vp) {
        double m = 0;
        for (int t = 0; t < 3600; t += 10) {
            auto snap = constellation::propagate(s.config, s.window_start + t);
            try {
                auto b = constellation::best_case_rtt(s.dish, s.ikeja, snap, vp);
                auto w = constellation::worst_case_rtt(s.dish, s.ikeja, snap, vp);
                m = std::max(m, w.rtt_ms - b.rtt_ms);
            } catch (const NoCoverageError&) {
            }
        }
        return m;
    };
    double doubled = 2.0 * spread(elevation_only);
    double physical = doubled / 2.0;
    double slant_capped = 2.0 * spread({});
    bool ok = std::abs(extra - 13.0) <= 1.0 && std::abs(doubled - 12.0) <= 3.0;
    report(5, "ISL extra hop / selection penalty", ok,
           fmt("extra hop=%.3f (13+-1); worst-best=%.2f (12+-3) [physical %.2f, 965.6 km slant cap %.2f]", extra,
               doubled, physical, slant_capped));
}

void selection_oracle() {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> lat(-45.0, 45.0), lon(-180.0, 180.0), off(-4.0, 4.0), az(0.0, 360.0);
    int mismatches = 0, compared = 0;
    for (int k = 0; k < 100; ++k) {
        constellation::ConstellationConfig c;
        constellation::Shell sh;
        sh.altitude_km = 500.0 + static_cast<double>(rng() % 200);
        sh.inclination_deg = 40.0 + static_cast<double>(rng() % 60);
        sh.n_orbits = 8 + static_cast<int>(rng() % 30);
        sh.sats_per_orbit = 8 + static_cast<int>(rng() % 20);
        sh.phase_offset_deg = static_cast<double>(rng() % 30);
        c.shells.push_back(sh);
        c.epoch_unix_s = 1.68e9;
        auto snap = constellation::propagate(c, c.epoch_unix_s + static_cast<double>(rng() % 10000));
        constellation::DishSite dish{"d", {lat(rng), lon(rng)}, static_cast<double>(rng() % 500), az(rng)};
        constellation::GroundStation gs{
            "g", {dish.position.lat_deg + off(rng), std::remainder(dish.position.lon_deg + off(rng), 360.0)}, 0.0};
        constellation::VisibilityParams vp{800.0 + static_cast<double>(rng() % 800), 10.0 + static_cast<double>(rng() % 30)};
        for (bool worst : {false, true}) {
            auto want = oracle::brute_select(dish, gs, snap, vp, worst);
            std::optional<constellation::Selection> got;
            try {
                got = worst ? constellation::worst_case_rtt(dish, gs, snap, vp)
                            : constellation::best_case_rtt(dish, gs, snap, vp);
            } catch (const NoCoverageError&) {
            }
            ++compared;
            if (want.has_value() != got.has_value()) ++mismatches;
            else if (want && (want->index != got->index || std::abs(want->rtt_ms - got->rtt_ms) > 1e-9)) ++mismatches;
        }
    }
    report(6, "selection equals brute force", mismatches == 0,
           fmt("mismatches=%d of %d selections over 100 constellations tol=exact", mismatches, compared));
}

void light_floor() {
    auto c = constellation::ConstellationConfig::load(data_dir() / "constellation/starlink_shell1.json");
    std::mt19937_64 rng(707);
    std::uniform_real_distribution<double> lat(-50.0, 50.0), lon(-180.0, 180.0), off(-6.0, 6.0), tms(0.0, 150.0);
    int routes = 0, violations = 0, attempts = 0;
    while (routes < 10'000 && attempts < 200'000) {
        ++attempts;
        auto snap = constellation::propagate(c, c.epoch_unix_s + static_cast<double>(rng() % 86400));
        constellation::DishSite dish{"d", {lat(rng), lon(rng)}, 0.0, std::nullopt};
        constellation::GroundStation gs{"g", {std::clamp(dish.position.lat_deg + off(rng), -89.0, 89.0),
                                              std::remainder(dish.position.lon_deg + off(rng), 360.0)}, 0.0};
        bool isl = rng() % 2;
        if (isl) gs.position = {lat(rng), lon(rng)};
        constellation::GroundStation pop{"p", {lat(rng), lon(rng)}, 0.0};
        auto route = isl ? RouteSpec::isl(1 + static_cast<int>(rng() % 5)) : RouteSpec::relay();
        std::optional<double> terrestrial;
        CompositeOptions o;
        if (rng() % 2) o.accounting = AccessAccounting::physical;
        try {
            auto r = constellation::composite_route_rtt(c, snap, dish, route, gs, pop, terrestrial, o);
            ++routes;
            double floor = 2.0 * geo::vacuum_ms(geo::haversine_km(dish.position, pop.position));
            violations += r.total_rtt_ms < floor - 1e-9;
        } catch (const NoCoverageError&) {
        }
    }
    report(7, "speed-of-light floor", routes == 10'000 && violations == 0,
           fmt("routes=%d violations=%d tol=0", routes, violations));
}

void relay_classification() {
    auto s = nigeria();
    // Six hours of per-second threshold and best bent-pipe RTT; NaN where uncovered.
    const int span = 6 * 3600;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> all_thr(span, nan), all_best(span, nan);
    for (int t = 0; t < span; ++t) {
        auto snap = constellation::propagate(s.config, s.window_start + t);
        try {
            double thr = constellation::min_isl_ng_threshold(s.config, snap, s.dish, s.ikeja);
            all_best[static_cast<std::size_t>(t)] = constellation::best_case_rtt(s.dish, s.ikeja, snap).rtt_ms;
            all_thr[static_cast<std::size_t>(t)] = thr;
        } catch (const NoCoverageError&) {
        }
    }
    // The 600 s window with the fewest uncovered seconds. Uncovered ticks are not classified.
    int offset = 0, fewest = 601;
    for (int from = 0; from + 600 <= span; from += 15) {
        int missing = static_cast<int>(std::count_if(all_thr.begin() + from, all_thr.begin() + from + 600,
                                                     [](double v) { return std::isnan(v); }));
        if (missing < fewest) fewest = missing, offset = from;
    }
    double start = s.window_start + offset;
    std::vector<double> threshold(all_thr.begin() + offset, all_thr.begin() + offset + 600);
    std::vector<double> best(all_best.begin() + offset, all_best.begin() + offset + 600);

    std::vector<bool> relay_block(40, false);
    std::fill(relay_block.begin(), relay_block.begin() + 28, true);
    std::shuffle(relay_block.begin(), relay_block.end(), std::mt19937_64(808));

    auto sc = simnet::make_bent_pipe("classify", 5, 2.0, 20.0, 808, 0x0A000000);
    sc.start_unix_ms = static_cast<std::int64_t>(start * 1000);
    sc.duration_s = 600;
    for (int b = 0; b < 40; ++b) {
        bool relay = relay_block[static_cast<std::size_t>(b)];
        double sum = 0, top = 0;
        int n = 0;
        for (int t = b * 15; t < b * 15 + 15; ++t) {
            auto k = static_cast<std::size_t>(t);
            if (std::isnan(threshold[k])) continue;
            sum += best[k];
            top = std::max(top, threshold[k]);
            ++n;
        }
        simnet::RerouteEvent e;
        e.at_s = b * 15;
        e.kind = relay ? simnet::EventKind::satellite_switch : simnet::EventKind::isl_reroute;
        e.new_rtt_ms = relay ? (n ? sum / n : 10.0) : top + 5.0;
        e.duration_s = 15;
        sc.events.push_back(e);
    }
    simnet::SimTransport t({sc});
    probe::VirtualClock clock(sc.start_us());
    probe::SatLinkPath path{sc.endpoint.address, sc.pre_sat, sc.hops[static_cast<std::size_t>(sc.pre_sat - 1)].address,
                            sc.post_sat, 10};
    probe::SessionOptions o;
    o.duration_s = 600;
    auto iso = analysis::isolate_satellite_latency(probe::measure_session(t, clock, sc.endpoint, path, o));
    std::size_t below = 0, classified = 0;
    for (std::size_t i = 0; i < iso.series.size(); ++i) {
        auto tick = static_cast<std::size_t>((iso.series.timestamps_ms[i] - sc.start_unix_ms) / 1000);
        if (std::isnan(threshold[tick])) continue;
        ++classified;
        below += iso.series.values_ms[i] < threshold[tick];
    }
    double frac = static_cast<double>(below) / static_cast<double>(classified);
    report(8, "relay/ISL classification", std::abs(frac - 0.70) <= 0.02,
           fmt("below Min(ISL-NG)=%.4f over %zu ticks, %d uncovered skipped (0.70+-0.02)", frac, classified, fewest));
}

void discovery_fixtures() {
    const std::map<std::string, std::size_t> table1 = {
        {"sttlwax1", 243}, {"atlagax1", 210}, {"dllstxx1", 186}, {"chcoilx1", 182}, {"lsancax1", 173},
        {"sydyaus1", 148}, {"nwyynyx1", 144}, {"frntdeu1", 124}, {"dnvrcox1", 87},  {"lndngbr1", 56},
        {"mdrdesp1", 20},  {"sntoch1", 19},   {"acklnzl1", 11},  {"lgosnga1", 6},   {"bgtacol1", 5},
        {"limaper1", 3},   {"prthaus1", 3},   {"qrtomex1", 3},   {"splobra1", 3},   {"tkyojpn1", 3},
    };
    auto catalog = discovery::PopCatalog::embedded();
    auto d = discovery::parse_scan_dataset(data_dir() / "fixtures/scan_2023-05-10.jsonl",
                                           discovery::DatasetFormat::json_lines);
    auto cust = discovery::filter_customer_endpoints(d.records, catalog);
    auto kept = discovery::exclude_peps(cust.endpoints, d.records, discovery::PepBlocklist{});
    std::map<std::string, std::size_t> counts;
    for (const auto& e : kept.endpoints) ++counts[e.pop_code];
    int wrong = 0;
    for (const auto& [code, n] : table1) wrong += counts[code] != n;
    wrong += counts.size() != table1.size();

    auto p = discovery::parse_scan_dataset(data_dir() / "fixtures/pep_100.jsonl", discovery::DatasetFormat::json_lines);
    auto pc = discovery::filter_customer_endpoints(p.records, catalog);
    auto pk = discovery::exclude_peps(pc.endpoints, p.records, discovery::PepBlocklist{});
    bool ok = wrong == 0 && kept.endpoints.size() == 1629 && p.records.size() == 100 && pc.endpoints.size() == 100 &&
              pk.removed == 9;
    report(9, "discovery fixtures", ok,
           fmt("catalog rows wrong=%d kept=%zu (1629); PEP removed=%zu of %zu (9) tol=exact", wrong,
               kept.endpoints.size(), pk.removed, p.records.size()));
}

void obstruction_correlation() {
    // 5 sustained (+100 ms, 30 s) and 20 standard (+40 ms, 20 s) spikes on a 40 ms baseline.
    // Three sustained and nineteen standard spikes begin on a satellite switch.
    const double duration = 2000;
    std::vector<double> starts;
    for (int i = 0; i < 25; ++i) starts.push_back(30.0 + 78.0 * i);
    std::vector<bool> sustained(25, false);
    for (int i : {2, 7, 12, 17, 22}) sustained[static_cast<std::size_t>(i)] = true;
    std::set<int> no_switch{7, 17, 10};
    std::vector<double> jumps;
    for (int i = 0; i < 25; ++i)
        if (!no_switch.count(i)) jumps.push_back(starts[static_cast<std::size_t>(i)]);
    jumps.push_back(starts[4] + 50); // switches with no spike nearby
    jumps.push_back(starts[15] + 45);
    std::sort(jumps.begin(), jumps.end());

    std::mt19937_64 rng(1010);
    std::normal_distribution<double> noise(0.0, 0.3);
    analysis::LatencySeries series;
    series.source = analysis::SeriesSource::isolated;
    for (int t = 0; t < static_cast<int>(duration); ++t) {
        double v = 40.0 + noise(rng);
        for (std::size_t i = 0; i < starts.size(); ++i) {
            double len = sustained[i] ? 30 : 20;
            if (t >= starts[i] && t < starts[i] + len) v += sustained[i] ? 100 : 40;
        }
        series.timestamps_ms.push_back(t * 1000LL);
        series.values_ms.push_back(v);
    }
    auto spikes = analysis::detect_spikes(analysis::smooth(series));

    auto syn = oracle::obstruction_timeline(duration, jumps, 123, 123, 1011);
    auto switches = obstruction::detect_switches(obstruction::build_track(syn.frames));
    bool switches_exact = switches.size() == syn.switch_times.size();
    for (std::size_t i = 0; switches_exact && i < switches.size(); ++i)
        switches_exact = switches[i].at_s == syn.switch_times[i];

    auto c = obstruction::correlate_spikes(switches, spikes);
    double fs = c.sustained_fraction().value_or(-1);
    double fstd = c.standard_fraction().value_or(-1);
    bool ok = switches_exact && c.sustained_total == 5 && c.standard_total == 20 && c.sustained_without_switch == 2 &&
              c.standard_without_switch == 1;
    report(10, "obstruction correlation", ok,
           fmt("switches %zu/%zu exact=%s; sustained same-sat=%.3f (0.4) standard=%.3f (0.05) tol=exact",
               switches.size(), syn.switch_times.size(), switches_exact ? "yes" : "no", fs, fstd));
}

void determinism() {
    std::vector<simnet::Scenario> scenarios;
    for (std::uint32_t k = 1; k <= 6; ++k) {
        auto s = chain(k, 7 * k, 180);
        s.loss_probability = 0.02;
        s.jitter.dist = k % 2 ? simnet::JitterDist::lognormal : simnet::JitterDist::gaussian;
        simnet::RerouteEvent e;
        e.at_s = 60;
        e.delta_ms = 30;
        e.duration_s = 30;
        s.events.push_back(e);
        scenarios.push_back(std::move(s));
    }
    std::vector<std::map<std::string, std::string>> runs;
    for (int workers : {8, 3}) {
        TempDir tmp("det" + std::to_string(workers));
        auto res = campaign::simulate(scenarios, sim_config(tmp.path(), 180, workers));
        std::map<std::string, std::string> files;
        for (const auto& r : res.cohort)
            if (r.session_dir) files[r.endpoint.address.to_string()] = slurp(*r.session_dir / "session.csv");
        runs.push_back(std::move(files));
    }
    bool ok = runs[0].size() == scenarios.size() && runs[0] == runs[1];
    report(11, "determinism", ok, fmt("sessions=%zu identical=%s", runs[0].size(), runs[0] == runs[1] ? "yes" : "no"));
}

} // namespace

int main() {
    const std::vector<void (*)()> criteria{spike_recall,     false_positives,      isolation_accuracy,
                                           composite_equation, isl_penalty,        selection_oracle,
                                           light_floor,      relay_classification, discovery_fixtures,
                                           obstruction_correlation, determinism};
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(static_cast<int>(i + 1), "criterion raised", false, e.what());
        }
    }
    return failures;
}
