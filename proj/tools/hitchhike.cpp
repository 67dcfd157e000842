// hitchhike: discover, trace, measure, analyze, simulate and report.
// Exit status: 0 success, 1 partial failure, 2 configuration error.

#include "hitchhike.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

namespace hh = hitchhike;
namespace fs = std::filesystem;

namespace {

struct Args {
    std::string config;
    std::string scenario;
    std::string endpoints;
    std::string out;
};

hh::campaign::CampaignConfig load_config(const Args& a, bool need_scenarios) {
    hh::campaign::CampaignConfig c;
    if (!a.config.empty()) {
        auto j = nlohmann::json::object();
        std::ifstream in(a.config);
        if (!in) throw hh::ConfigError("config", "cannot read " + a.config);
        j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw hh::ConfigError("config", a.config + " is not valid JSON");
        // Command-line overrides land before validation.
        if (!a.scenario.empty()) j["transport"] = {{"kind", "simnet"}, {"scenario_dir", fs::absolute(a.scenario).string()}};
        if (!a.out.empty()) j["output_dir"] = fs::absolute(a.out).string();
        c = hh::campaign::CampaignConfig::from_json(j, fs::path(a.config).parent_path());
    } else {
        if (!a.scenario.empty()) c.scenario_dir = a.scenario;
        if (!a.out.empty()) c.output_dir = a.out;
        if (!need_scenarios && c.scenario_dir.empty()) c.transport = hh::campaign::TransportKind::raw;
        c.validate();
    }
    return c;
}

std::int64_t now_ms() {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void print_failures(const std::vector<hh::campaign::EndpointResult>& rs) {
    for (const auto& r : rs)
        if (r.failure)
            std::cerr << "failure stage=" << r.failure->stage << " endpoint=" << r.failure->address.to_string() << ": "
                      << r.failure->message << '\n';
}

std::size_t count_failures(const std::vector<hh::campaign::EndpointResult>& rs) {
    return static_cast<std::size_t>(std::count_if(rs.begin(), rs.end(), [](const auto& r) { return r.failure.has_value(); }));
}

// Transport, clocks and endpoints for trace/measure.
struct Probing {
    std::unique_ptr<hh::probe::Transport> transport;
    hh::campaign::ClockFactory clocks;
    std::vector<hh::discovery::Endpoint> endpoints;
    hh::campaign::CohortOptions opts;
    std::int64_t date_ms = 0;
};

Probing setup_probing(const hh::campaign::CampaignConfig& c, const Args& a) {
    Probing p;
    fs::path ep_path = a.endpoints.empty() ? c.output_dir / "endpoints.csv" : fs::path(a.endpoints);
    if (c.transport == hh::campaign::TransportKind::simnet) {
        auto sim = std::make_unique<hh::simnet::SimTransport>(hh::campaign::load_scenarios(c.scenario_dir));
        p.clocks = hh::campaign::scenario_clocks(*sim);
        p.opts.duration_for = hh::campaign::scenario_durations(*sim);
        if (fs::exists(ep_path)) {
            p.endpoints = hh::discovery::read_endpoints_csv(ep_path);
        } else {
            for (const auto& [_, s] : sim->scenarios()) p.endpoints.push_back(s.endpoint);
        }
        p.date_ms = sim->scenarios().begin()->second.start_unix_ms;
        p.transport = std::move(sim);
    } else {
        p.transport = std::make_unique<hh::probe::RawTransport>();
        p.clocks = [](const hh::discovery::Endpoint&) { return std::make_unique<hh::probe::SystemClock>(); };
        p.endpoints = hh::discovery::read_endpoints_csv(ep_path);
        p.date_ms = now_ms();
    }
    return p;
}

int cmd_discover(const Args& a) {
    auto c = load_config(a, false);
    auto rep = hh::campaign::run_discovery(c);
    fs::create_directories(c.output_dir);
    auto out = c.output_dir / "endpoints.csv";
    {
        std::ofstream os(out);
        if (!os) throw hh::IoError("cannot write " + out.string());
        os << "# config " << c.hash() << '\n';
        hh::discovery::write_endpoints_csv(os, rep.endpoints);
    }
    for (const auto& [addr, code] : rep.unknown_pop)
        std::cerr << "failure stage=discover endpoint=" << addr.to_string() << ": unknown POP code '" << code << "'\n";
    std::cout << "discover status=ok records=" << rep.records << " malformed=" << rep.malformed
              << " customer_ptr=" << rep.customer_ptr << " pep_removed=" << rep.pep_removed
              << " endpoints=" << rep.endpoints.size() << " unknown_pop=" << rep.unknown_pop.size()
              << " geolocated=" << rep.geolocated << " out=" << out.string() << " config=" << c.hash() << '\n';
    return rep.malformed + rep.unknown_pop.size() > 0 ? 1 : 0;
}

int cmd_trace(const Args& a) {
    auto c = load_config(a, false);
    auto p = setup_probing(c, a);
    p.opts.trace_only = true;
    auto results = hh::campaign::run_cohort(*p.transport, p.clocks, p.endpoints, c, {}, p.opts);
    fs::create_directories(c.output_dir);
    auto out = c.output_dir / "paths.csv";
    std::ofstream os(out);
    os << "# config " << c.hash() << '\n';
    os << "target,pre_sat_ttl,pre_sat_router,post_sat_ttl,jump_ms\n";
    std::size_t found = 0;
    for (const auto& r : results)
        if (r.path) {
            ++found;
            os << r.path->target.to_string() << ',' << r.path->pre_sat_ttl << ',' << r.path->pre_sat_router.to_string()
               << ',' << r.path->post_sat_ttl << ',' << hh::csv::format_fixed(r.path->jump_ms) << '\n';
        }
    print_failures(results);
    auto failed = count_failures(results);
    std::cout << "trace status=" << (failed ? "partial" : "ok") << " endpoints=" << results.size() << " paths=" << found
              << " failures=" << failed << " out=" << out.string() << " config=" << c.hash() << '\n';
    return failed ? 1 : 0;
}

int cmd_measure(const Args& a) {
    auto c = load_config(a, false);
    auto p = setup_probing(c, a);
    hh::store::MeasurementStore st(c.output_dir);
    auto part = st.new_partition(hh::store::utc_date(p.date_ms));
    auto results = hh::campaign::run_cohort(*p.transport, p.clocks, p.endpoints, c, part, p.opts);
    print_failures(results);
    auto failed = count_failures(results);
    auto stored = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.session_dir.has_value(); });
    std::cout << "measure status=" << (failed ? "partial" : "ok") << " endpoints=" << results.size()
              << " sessions=" << stored << " failures=" << failed << " partition=" << part.string()
              << " config=" << c.hash() << '\n';
    return failed ? 1 : 0;
}

int cmd_analyze(const Args& a) {
    auto c = load_config(a, false);
    hh::store::MeasurementStore st(c.output_dir);
    auto s = hh::campaign::analyze_store(st, c);
    for (const auto& f : s.failures)
        std::cerr << "failure stage=" << f.stage << " endpoint=" << f.address.to_string() << ": " << f.message << '\n';
    std::cout << "analyze status=" << (s.failures.empty() ? "ok" : "partial") << " sessions=" << s.sessions.size()
              << " sustained=" << s.sustained << " standard=" << s.standard << " failures=" << s.failures.size()
              << " config=" << c.hash() << '\n';
    return s.failures.empty() ? 0 : 1;
}

int cmd_simulate(const Args& a) {
    auto c = load_config(a, true);
    auto r = hh::campaign::simulate(hh::campaign::load_scenarios(c.scenario_dir), c);
    std::size_t sustained = 0, standard = 0, sessions = 0;
    auto part = r.partition.filename().string();
    for (const auto& s : r.analysis.sessions) {
        if (s.partition != part) continue;
        ++sessions;
        for (const auto& e : s.spikes) (e.kind == hh::analysis::SpikeKind::sustained ? sustained : standard) += 1;
    }
    print_failures(r.cohort);
    auto failed = count_failures(r.cohort);
    std::cout << "simulate status=" << (failed ? "partial" : "ok") << " scenarios=" << r.cohort.size()
              << " sessions=" << sessions << " sustained=" << sustained << " standard=" << standard
              << " failures=" << failed << " partition=" << r.partition.string() << " config=" << c.hash() << '\n';
    return failed ? 1 : 0;
}

int cmd_report(const Args& a) {
    auto c = load_config(a, false);
    hh::store::MeasurementStore st(c.output_dir);
    auto out = c.output_dir / "report";
    try {
        auto r = hh::campaign::report_store(st, c, out);
        std::cout << r.text;
        std::cout << "report status=ok sessions=" << r.sessions << " pops=" << r.pops << " sustained=" << r.sustained
                  << " standard=" << r.standard << " out=" << out.string() << " config=" << c.hash() << '\n';
        return 0;
    } catch (const hh::InsufficientDataError&) {
        std::cout << "report status=no_sessions store=" << c.output_dir.string() << " config=" << c.hash() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Starlink latency measurement through exposed customer endpoints"};
    app.require_subcommand(1);
    Args args;
    auto common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", args.config, "campaign config (JSON)");
        sub->add_option("-o,--out", args.out, "store / output directory (overrides the config)");
    };
    auto* discover = app.add_subcommand("discover", "filter scan datasets into a cohort of customer endpoints");
    common(discover);
    auto* trace = app.add_subcommand("trace", "traceroute the cohort and locate the satellite hop");
    common(trace);
    trace->add_option("-e,--endpoints", args.endpoints, "endpoint CSV (default <out>/endpoints.csv)");
    trace->add_option("-s,--scenario", args.scenario, "simnet scenario file or directory");
    auto* measure = app.add_subcommand("measure", "trace, then TTL-ping both sides of the satellite hop");
    common(measure);
    measure->add_option("-e,--endpoints", args.endpoints, "endpoint CSV (default <out>/endpoints.csv)");
    measure->add_option("-s,--scenario", args.scenario, "simnet scenario file or directory");
    auto* analyze = app.add_subcommand("analyze", "isolate, smooth and detect spikes for every stored session");
    common(analyze);
    auto* simulate = app.add_subcommand("simulate", "measure simnet scenarios into the store and analyse them");
    common(simulate);
    simulate->add_option("-s,--scenario", args.scenario, "scenario file or directory");
    auto* report = app.add_subcommand("report", "per-POP tables, spike inventory, distance and trend tables");
    common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        if (*discover) return cmd_discover(args);
        if (*trace) return cmd_trace(args);
        if (*measure) return cmd_measure(args);
        if (*analyze) return cmd_analyze(args);
        if (*simulate) return cmd_simulate(args);
        if (*report) return cmd_report(args);
    } catch (const hh::ConfigError& e) {
        std::cout << "error stage=config field=" << e.field() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cout << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
