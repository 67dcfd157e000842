#pragma once

#include "hitchhike/csv.hpp"
#include "hitchhike/discovery.hpp"
#include "hitchhike/error.hpp"
#include "hitchhike/geo.hpp"
#include "hitchhike/probe.hpp"
#include "hitchhike/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace hitchhike::analysis {

enum class SeriesSource { raw_endpoint, raw_terrestrial, isolated, smoothed };

struct LatencySeries {
    std::vector<std::int64_t> timestamps_ms;
    std::vector<double> values_ms;
    SeriesSource source = SeriesSource::isolated;

    std::size_t size() const noexcept { return values_ms.size(); }
    bool empty() const noexcept { return values_ms.empty(); }

    /// Typical gap between samples (median), 1000 ms when undefined.
    std::int64_t sample_period_ms() const {
        if (timestamps_ms.size() < 2) return 1000;
        std::vector<double> d;
        for (std::size_t i = 1; i < timestamps_ms.size(); ++i)
            d.push_back(static_cast<double>(timestamps_ms[i] - timestamps_ms[i - 1]));
        return std::max<std::int64_t>(1, std::llround(stats::median(d)));
    }

    /// Span covered by the samples, counting the last sample's own period.
    double duration_s() const {
        if (empty()) return 0.0;
        return static_cast<double>(timestamps_ms.back() - timestamps_ms.front() + sample_period_ms()) / 1000.0;
    }
};

inline LatencySeries raw_series(const std::vector<probe::ProbeSample>& samples, SeriesSource source) {
    LatencySeries s;
    s.source = source;
    for (const auto& p : samples) {
        if (p.lost()) continue;
        s.timestamps_ms.push_back(p.timestamp_ms);
        s.values_ms.push_back(static_cast<double>(*p.rtt_us) / 1000.0);
    }
    return s;
}

struct Isolation {
    LatencySeries series;
    std::size_t clamped = 0;   // negative differences set to zero
    std::size_t unpaired = 0;  // ticks missing either side
};

/// Satellite-segment latency: endpoint RTT minus terrestrial-hop RTT, tick by
/// tick. Values carry the tick's terrestrial timestamp.
inline Isolation isolate_satellite_latency(const probe::MeasurementSession& session) {
    if (!session.usable) throw InsufficientDataError("session to " + session.path.target.to_string() + " is unusable");
    std::int64_t period = 1000 / std::max(1, session.cadence_hz);
    auto tick = [&](std::int64_t ts) { return (ts - session.start_ms) / period; };

    std::map<std::int64_t, const probe::ProbeSample*> terrestrial;
    for (const auto& p : session.terrestrial_samples) terrestrial[tick(p.timestamp_ms)] = &p;

    Isolation out;
    out.series.source = SeriesSource::isolated;
    std::set<std::int64_t> paired;
    for (const auto& e : session.endpoint_samples) {
        auto k = tick(e.timestamp_ms);
        auto it = terrestrial.find(k);
        if (it == terrestrial.end() || e.lost() || it->second->lost()) continue;
        double v = static_cast<double>(*e.rtt_us - *it->second->rtt_us) / 1000.0;
        if (v < 0) {
            v = 0;
            ++out.clamped;
        }
        out.series.timestamps_ms.push_back(it->second->timestamp_ms);
        out.series.values_ms.push_back(v);
        paired.insert(k);
    }
    std::set<std::int64_t> ticks;
    for (const auto& p : session.terrestrial_samples) ticks.insert(tick(p.timestamp_ms));
    for (const auto& p : session.endpoint_samples) ticks.insert(tick(p.timestamp_ms));
    out.unpaired = ticks.size() - paired.size();
    if (out.series.empty())
        throw EmptySeriesError("no tick of the session to " + session.path.target.to_string() + " has both samples");
    return out;
}

/// Centred moving median over samples within +-window/2 of each timestamp.
/// Edges use whatever part of the window exists.
inline LatencySeries smooth(const LatencySeries& series, double window_s = 15.0) {
    if (series.empty()) throw EmptySeriesError("cannot smooth an empty series");
    if (!(window_s > 0)) throw ConfigError("window_s", "must be positive");
    auto half = static_cast<std::int64_t>(std::floor(window_s * 1000.0 / 2.0));
    LatencySeries out;
    out.source = SeriesSource::smoothed;
    out.timestamps_ms = series.timestamps_ms;
    out.values_ms.reserve(series.size());
    std::size_t lo = 0, hi = 0;
    std::vector<double> window;
    for (std::size_t i = 0; i < series.size(); ++i) {
        auto t = series.timestamps_ms[i];
        while (series.timestamps_ms[lo] < t - half) ++lo;
        while (hi < series.size() && series.timestamps_ms[hi] <= t + half) ++hi;
        window.assign(series.values_ms.begin() + static_cast<std::ptrdiff_t>(lo),
                      series.values_ms.begin() + static_cast<std::ptrdiff_t>(hi));
        out.values_ms.push_back(stats::median(window));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Spikes

enum class SpikeKind { sustained, standard };

inline std::string_view to_string(SpikeKind k) { return k == SpikeKind::sustained ? "sustained" : "standard"; }

struct SpikeEvent {
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0; // exclusive: last sample plus one period
    SpikeKind kind = SpikeKind::standard;
    double peak_ms = 0.0;
    double baseline_median_ms = 0.0;
    double sigma_ms = 0.0;

    double duration_s() const noexcept { return static_cast<double>(end_ms - start_ms) / 1000.0; }
};

struct SpikeOptions {
    double sustained_sigmas = 2.0;
    double standard_sigmas = 1.0;
    double min_sustained_s = 15.0;
    double min_series_s = 60.0;
};

/// Runs above median + 1 sigma become events. A run that contains at least
/// `min_sustained_s` of consecutive samples above median + 2 sigma is
/// sustained; every other run is standard.
inline std::vector<SpikeEvent> detect_spikes(const LatencySeries& series, const SpikeOptions& opts = {}) {
    if (series.empty()) throw EmptySeriesError("cannot detect spikes in an empty series");
    if (series.duration_s() < opts.min_series_s)
        throw InsufficientDataError("series spans " + std::to_string(series.duration_s()) + " s; need " +
                                    std::to_string(opts.min_series_s) + " s");
    double m = stats::median(series.values_ms);
    double sigma = stats::stddev(series.values_ms);
    std::vector<SpikeEvent> events;
    if (!(sigma > 0)) return events;

    double hi_thr = m + opts.sustained_sigmas * sigma;
    double lo_thr = m + opts.standard_sigmas * sigma;
    auto period = series.sample_period_ms();
    auto contiguous = [&](std::size_t i) {
        return series.timestamps_ms[i] - series.timestamps_ms[i - 1] <= period + period / 2;
    };
    auto span_s = [&](std::size_t a, std::size_t b) {
        return static_cast<double>(series.timestamps_ms[b] - series.timestamps_ms[a] + period) / 1000.0;
    };

    std::size_t n = series.size();
    for (std::size_t i = 0; i < n;) {
        if (!(series.values_ms[i] > lo_thr)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < n && series.values_ms[j + 1] > lo_thr && contiguous(j + 1)) ++j;

        bool sustained = false;
        double peak = series.values_ms[i];
        for (std::size_t k = i; k <= j;) {
            peak = std::max(peak, series.values_ms[k]);
            if (!(series.values_ms[k] > hi_thr)) {
                ++k;
                continue;
            }
            std::size_t l = k;
            while (l + 1 <= j && series.values_ms[l + 1] > hi_thr) ++l;
            for (std::size_t q = k; q <= l; ++q) peak = std::max(peak, series.values_ms[q]);
            if (span_s(k, l) >= opts.min_sustained_s) sustained = true;
            k = l + 1;
        }
        events.push_back({series.timestamps_ms[i], series.timestamps_ms[j] + period,
                          sustained ? SpikeKind::sustained : SpikeKind::standard, peak, m, sigma});
        i = j + 1;
    }
    return events;
}

// ---------------------------------------------------------------------------
// Jitter filter

inline double max_deviation_from_median(const LatencySeries& s) {
    if (s.empty()) return std::numeric_limits<double>::infinity();
    double m = stats::median(s.values_ms);
    double d = 0;
    for (double v : s.values_ms) d = std::max(d, std::abs(v - m));
    return d;
}

/// Keep endpoints whose terrestrial-hop series never strays more than
/// `max_deviation_ms` from its own median.
inline std::vector<discovery::Endpoint> jitter_filter(
    const std::vector<std::pair<discovery::Endpoint, LatencySeries>>& reports, double max_deviation_ms = 1.0) {
    std::vector<discovery::Endpoint> out;
    for (const auto& [ep, series] : reports)
        if (max_deviation_from_median(series) <= max_deviation_ms) out.push_back(ep);
    return out;
}

// ---------------------------------------------------------------------------
// Statistics and aggregation

struct SessionStats {
    std::size_t n_samples = 0;
    double min_ms = 0, median_ms = 0, mean_ms = 0, stddev_ms = 0, max_ms = 0;
    double loss_fraction = 0;
    double spike_time_fraction = 0; // share of the series inside sustained spikes
};

inline SessionStats session_stats(const LatencySeries& series, double loss_fraction = 0.0,
                                  const std::vector<SpikeEvent>& spikes = {}) {
    if (series.empty()) throw EmptySeriesError("no samples for statistics");
    SessionStats s;
    s.n_samples = series.size();
    s.min_ms = *std::min_element(series.values_ms.begin(), series.values_ms.end());
    s.max_ms = *std::max_element(series.values_ms.begin(), series.values_ms.end());
    s.median_ms = stats::median(series.values_ms);
    s.mean_ms = stats::mean(series.values_ms);
    s.stddev_ms = stats::stddev(series.values_ms);
    s.loss_fraction = std::clamp(loss_fraction, 0.0, 1.0);
    double in_spike = 0;
    for (const auto& e : spikes)
        if (e.kind == SpikeKind::sustained) in_spike += e.duration_s();
    s.spike_time_fraction = std::clamp(in_spike / series.duration_s(), 0.0, 1.0);
    return s;
}

struct PopAggregate {
    std::string pop_code;
    std::size_t n_endpoints = 0;
    double mean_of_means_ms = 0;
    double stddev_ms = 0; // population deviation of all samples pooled
    std::vector<std::pair<discovery::Endpoint, SessionStats>> endpoints;
};

inline std::vector<PopAggregate> aggregate_by_pop(const std::vector<std::pair<discovery::Endpoint, SessionStats>>& items) {
    if (items.empty()) throw InsufficientDataError("nothing to aggregate");
    std::map<std::string, PopAggregate> groups;
    for (const auto& item : items) {
        auto& g = groups[item.first.pop_code];
        g.pop_code = item.first.pop_code;
        g.endpoints.push_back(item);
    }
    std::vector<PopAggregate> out;
    for (auto& [code, g] : groups) {
        g.n_endpoints = g.endpoints.size();
        double sum_means = 0, total_n = 0, weighted = 0;
        for (const auto& [_, st] : g.endpoints) {
            sum_means += st.mean_ms;
            total_n += static_cast<double>(st.n_samples);
            weighted += st.mean_ms * static_cast<double>(st.n_samples);
        }
        g.mean_of_means_ms = sum_means / static_cast<double>(g.n_endpoints);
        double grand = total_n > 0 ? weighted / total_n : g.mean_of_means_ms;
        double var = 0;
        for (const auto& [_, st] : g.endpoints)
            var += static_cast<double>(st.n_samples) *
                   (st.stddev_ms * st.stddev_ms + (st.mean_ms - grand) * (st.mean_ms - grand));
        g.stddev_ms = total_n > 0 ? std::sqrt(var / total_n) : 0.0;
        out.push_back(std::move(g));
    }
    return out;
}

struct TrendPoint {
    std::string date;
    double median_ms = 0;
    std::size_t n_endpoints = 0;
};

/// Per-day median of endpoint medians, in date order.
inline std::vector<TrendPoint> temporal_trend(const std::vector<std::pair<std::string, std::vector<PopAggregate>>>& days) {
    std::map<std::string, std::vector<double>> by_day;
    for (const auto& [date, aggs] : days)
        for (const auto& a : aggs)
            for (const auto& [_, st] : a.endpoints) by_day[date].push_back(st.median_ms);
    std::vector<TrendPoint> out;
    for (const auto& [date, medians] : by_day)
        if (!medians.empty()) out.push_back({date, stats::median(medians), medians.size()});
    return out;
}

/// Relative change from the first to the last trend point (negative: decrease).
inline std::optional<double> trend_change(const std::vector<TrendPoint>& trend) {
    if (trend.size() < 2 || trend.front().median_ms == 0) return std::nullopt;
    return (trend.back().median_ms - trend.front().median_ms) / trend.front().median_ms;
}

struct DistancePoint {
    discovery::Endpoint endpoint;
    double distance_km = 0;
    double min_rtt_ms = 0;
};

struct DistanceAnalysis {
    std::vector<DistancePoint> points;
    std::optional<double> spearman;
    std::size_t skipped = 0; // endpoints without customer or POP coordinates
};

/// Customer-to-POP great-circle distance against session minimum RTT.
inline DistanceAnalysis min_rtt_vs_pop_distance(const std::vector<std::pair<discovery::Endpoint, SessionStats>>& items) {
    DistanceAnalysis out;
    std::vector<double> xs, ys;
    for (const auto& [ep, st] : items) {
        if (!ep.customer_location || !ep.pop) {
            ++out.skipped;
            continue;
        }
        double d = geo::haversine_km(*ep.customer_location, ep.pop->position);
        out.points.push_back({ep, d, st.min_ms});
        xs.push_back(d);
        ys.push_back(st.min_ms);
    }
    out.spearman = stats::spearman(xs, ys);
    return out;
}

// ---------------------------------------------------------------------------
// Report tables

inline void write_series_csv(std::ostream& os, const std::string& target, const LatencySeries& s) {
    os << "target,timestamp_ms,value_ms\n";
    for (std::size_t i = 0; i < s.size(); ++i)
        os << target << ',' << s.timestamps_ms[i] << ',' << csv::format_double(s.values_ms[i]) << '\n';
}

inline void write_spikes_csv(std::ostream& os, const std::vector<std::pair<std::string, SpikeEvent>>& events) {
    os << "target,start_ms,end_ms,kind,peak_ms,baseline_median_ms,sigma_ms\n";
    for (const auto& [target, e] : events)
        os << target << ',' << e.start_ms << ',' << e.end_ms << ',' << to_string(e.kind) << ','
           << csv::format_fixed(e.peak_ms) << ',' << csv::format_fixed(e.baseline_median_ms) << ','
           << csv::format_fixed(e.sigma_ms) << '\n';
}

inline void write_stats_csv(std::ostream& os, const std::vector<std::pair<discovery::Endpoint, SessionStats>>& items) {
    os << "address,pop_code,n_samples,min_ms,median_ms,mean_ms,stddev_ms,max_ms,loss_fraction,spike_time_fraction\n";
    for (const auto& [ep, s] : items)
        os << ep.address.to_string() << ',' << ep.pop_code << ',' << s.n_samples << ',' << csv::format_fixed(s.min_ms)
           << ',' << csv::format_fixed(s.median_ms) << ',' << csv::format_fixed(s.mean_ms) << ','
           << csv::format_fixed(s.stddev_ms) << ',' << csv::format_fixed(s.max_ms) << ','
           << csv::format_fixed(s.loss_fraction, 4) << ',' << csv::format_fixed(s.spike_time_fraction, 4) << '\n';
}

inline void write_aggregates_csv(std::ostream& os, const std::vector<PopAggregate>& aggs) {
    os << "pop_code,pop_city,n_endpoints,mean_of_means_ms,stddev_ms\n";
    for (const auto& a : aggs) {
        std::string city;
        if (!a.endpoints.empty() && a.endpoints.front().first.pop) city = a.endpoints.front().first.pop->city;
        os << csv::quote(a.pop_code) << ',' << csv::quote(city) << ',' << a.n_endpoints << ','
           << csv::format_fixed(a.mean_of_means_ms) << ',' << csv::format_fixed(a.stddev_ms) << '\n';
    }
}

inline void write_trend_csv(std::ostream& os, const std::vector<TrendPoint>& trend) {
    os << "date,median_ms,n_endpoints\n";
    for (const auto& p : trend) os << p.date << ',' << csv::format_fixed(p.median_ms) << ',' << p.n_endpoints << '\n';
}

inline void write_distance_csv(std::ostream& os, const DistanceAnalysis& d) {
    os << "address,pop_code,distance_km,min_rtt_ms\n";
    for (const auto& p : d.points)
        os << p.endpoint.address.to_string() << ',' << p.endpoint.pop_code << ',' << csv::format_fixed(p.distance_km, 1)
           << ',' << csv::format_fixed(p.min_rtt_ms) << '\n';
}

} // namespace hitchhike::analysis
