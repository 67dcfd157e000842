#pragma once

#include "hitchhike/error.hpp"
#include "hitchhike/geo.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace hitchhike::constellation {

struct Shell {
    double altitude_km = 550.0;
    double inclination_deg = 53.0;
    int n_orbits = 72;
    int sats_per_orbit = 22;
    double phase_offset_deg = 0.0; // extra anomaly per successive plane

    double radius_km() const noexcept { return geo::kEarthRadiusKm + altitude_km; }
    double mean_motion_rad_s() const noexcept { return std::sqrt(geo::kMuKm3PerS2 / std::pow(radius_km(), 3)); }
    double period_s() const noexcept { return 2.0 * std::numbers::pi / mean_motion_rad_s(); }
    /// In-plane arc between neighbouring satellites at orbital radius.
    double in_plane_spacing_km() const noexcept { return 2.0 * std::numbers::pi * radius_km() / sats_per_orbit; }
};

struct ConstellationConfig {
    std::vector<Shell> shells;
    double epoch_unix_s = 0.0;

    void validate() const {
        if (shells.empty()) throw ConfigError("shells", "at least one shell is required");
        for (std::size_t i = 0; i < shells.size(); ++i) {
            const auto& s = shells[i];
            auto f = "shells[" + std::to_string(i) + "].";
            if (!(s.altitude_km > 0)) throw ConfigError(f + "altitude_km", "must be positive");
            if (!(s.inclination_deg >= 0 && s.inclination_deg <= 180))
                throw ConfigError(f + "inclination_deg", "must lie in [0, 180]");
            if (s.n_orbits < 1) throw ConfigError(f + "n_orbits", "must be at least 1");
            if (s.sats_per_orbit < 1) throw ConfigError(f + "sats_per_orbit", "must be at least 1");
        }
    }

    std::size_t satellite_count() const noexcept {
        std::size_t n = 0;
        for (const auto& s : shells) n += static_cast<std::size_t>(s.n_orbits) * static_cast<std::size_t>(s.sats_per_orbit);
        return n;
    }

    static ConstellationConfig from_json(const nlohmann::json& j) {
        ConstellationConfig c;
        if (!j.is_object()) throw ConfigError("constellation", "expected an object");
        if (auto it = j.find("epoch_unix_s"); it != j.end()) {
            if (!it->is_number()) throw ConfigError("epoch_unix_s", "expected a number");
            c.epoch_unix_s = it->get<double>();
        }
        auto shells = j.find("shells");
        if (shells == j.end() || !shells->is_array()) throw ConfigError("shells", "expected an array");
        for (std::size_t i = 0; i < shells->size(); ++i) {
            const auto& sj = (*shells)[i];
            auto f = "shells[" + std::to_string(i) + "].";
            auto num = [&](const char* key, auto fallback) {
                auto it = sj.find(key);
                if (it == sj.end()) return fallback;
                if (!it->is_number()) throw ConfigError(f + key, "expected a number");
                return it->template get<decltype(fallback)>();
            };
            Shell s;
            s.altitude_km = num("altitude_km", s.altitude_km);
            s.inclination_deg = num("inclination_deg", s.inclination_deg);
            s.n_orbits = num("n_orbits", s.n_orbits);
            s.sats_per_orbit = num("sats_per_orbit", s.sats_per_orbit);
            s.phase_offset_deg = num("phase_offset_deg", s.phase_offset_deg);
            c.shells.push_back(s);
        }
        c.validate();
        return c;
    }

    static ConstellationConfig load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read constellation config " + path.string());
        auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw ConfigError(path.string(), "not valid JSON");
        return from_json(j);
    }
};

struct SatelliteState {
    int shell_index = 0;
    int orbit_index = 0;
    int slot_index = 0;
    geo::Vec3 position; // Earth-centred inertial, km; coincides with Earth-fixed at epoch
};

/// Constellation state at one instant, plus the Earth rotation needed to place
/// ground sites in the same frame.
struct Snapshot {
    double t_unix_s = 0.0;
    double earth_rotation_rad = 0.0;
    std::vector<SatelliteState> satellites;
};

inline Snapshot propagate(const ConstellationConfig& config, double t_unix_s) {
    if (t_unix_s < config.epoch_unix_s) throw ConfigError("t", "time precedes the constellation epoch");
    double dt = t_unix_s - config.epoch_unix_s;
    Snapshot snap;
    snap.t_unix_s = t_unix_s;
    snap.earth_rotation_rad = std::fmod(geo::kEarthRotationRadPerS * dt, 2.0 * std::numbers::pi);
    snap.satellites.reserve(config.satellite_count());
    for (std::size_t si = 0; si < config.shells.size(); ++si) {
        const auto& s = config.shells[si];
        double r = s.radius_km();
        double inc = geo::deg2rad(s.inclination_deg);
        double advance = std::fmod(s.mean_motion_rad_s() * dt, 2.0 * std::numbers::pi);
        for (int p = 0; p < s.n_orbits; ++p) {
            double raan = 2.0 * std::numbers::pi * p / s.n_orbits;
            double co = std::cos(raan), so = std::sin(raan);
            for (int k = 0; k < s.sats_per_orbit; ++k) {
                double u = 2.0 * std::numbers::pi * k / s.sats_per_orbit + geo::deg2rad(s.phase_offset_deg) * p + advance;
                double cu = std::cos(u), su = std::sin(u);
                geo::Vec3 pos{r * (co * cu - so * su * std::cos(inc)), r * (so * cu + co * su * std::cos(inc)),
                              r * su * std::sin(inc)};
                snap.satellites.push_back({static_cast<int>(si), p, k, pos});
            }
        }
    }
    return snap;
}

// ---------------------------------------------------------------------------
// Ground segment

struct GroundStation {
    std::string name;
    geo::LatLon position;
    double altitude_m = 0.0;
};

struct DishSite {
    std::string name;
    geo::LatLon position;
    double altitude_m = 0.0;
    /// Boresight azimuth in [0, 360). Absent: the dish accepts any azimuth.
    std::optional<double> boresight_azimuth_deg;

    /// Half-sky field of view: azimuths strictly clockwise of the boresight by
    /// less than 180 degrees. Boresight 338 admits (338, 360) and [0, 158).
    bool azimuth_allowed(double azimuth_deg) const noexcept {
        if (!boresight_azimuth_deg) return true;
        double rel = std::fmod(azimuth_deg - *boresight_azimuth_deg, 360.0);
        if (rel < 0) rel += 360.0;
        return rel > 0.0 && rel < 180.0;
    }
};

template <class Site>
geo::Vec3 site_position(const Site& site, const Snapshot& snap) {
    return geo::rotate_z(geo::to_cartesian(site.position, site.altitude_m / 1000.0), snap.earth_rotation_rad);
}

struct VisibilityParams {
    double max_slant_km = 965.6; // 600 miles
    double min_elevation_deg = 25.0;
};

struct VisibleSatellite {
    std::size_t index = 0; // into Snapshot::satellites
    geo::LookAngles look;
};

template <class Site>
std::vector<VisibleSatellite> visible_satellites(const Site& site, const Snapshot& snap,
                                                 const VisibilityParams& params = {}, bool apply_fov = true) {
    std::vector<VisibleSatellite> out;
    auto pos = site_position(site, snap);
    double reach = params.max_slant_km;
    for (std::size_t i = 0; i < snap.satellites.size(); ++i) {
        const auto& sat = snap.satellites[i].position;
        geo::Vec3 d = sat - pos;
        if (std::abs(d.x) > reach || std::abs(d.y) > reach || std::abs(d.z) > reach) continue;
        auto look = geo::look_angles(site.position, pos, sat, snap.earth_rotation_rad);
        if (look.range_km > params.max_slant_km || look.elevation_deg < params.min_elevation_deg) continue;
        if constexpr (requires { site.boresight_azimuth_deg; }) {
            if (apply_fov && !site.azimuth_allowed(look.azimuth_deg)) continue;
        }
        out.push_back({i, look});
    }
    return out;
}

struct Selection {
    double rtt_ms = 0.0;
    std::size_t index = 0;
    SatelliteState satellite;
};

/// Bent-pipe round trip dish -> satellite -> ground station over the given pair
/// of slant ranges.
inline double bent_pipe_rtt_ms(double up_km, double down_km) noexcept {
    return 2.0 * geo::vacuum_ms(up_km + down_km);
}

namespace detail {

template <class Better>
Selection select(const DishSite& dish, const GroundStation& gs, const Snapshot& snap, const VisibilityParams& params,
                 bool dish_fov, Better better) {
    auto from_dish = visible_satellites(dish, snap, params, dish_fov);
    auto from_gs = visible_satellites(gs, snap, params);
    std::vector<double> gs_range(snap.satellites.size(), -1.0);
    for (const auto& v : from_gs) gs_range[v.index] = v.look.range_km;
    std::optional<Selection> best;
    for (const auto& v : from_dish) {
        if (gs_range[v.index] < 0) continue;
        double rtt = bent_pipe_rtt_ms(v.look.range_km, gs_range[v.index]);
        if (!best || better(rtt, best->rtt_ms)) best = Selection{rtt, v.index, snap.satellites[v.index]};
    }
    if (!best) throw NoCoverageError("no satellite is jointly visible to " + dish.name + " and " + gs.name);
    return *best;
}

} // namespace detail

/// Lowest bent-pipe RTT over satellites visible to both ends. The dish azimuth
/// rule is not applied here, so this is the unconstrained optimum.
inline Selection best_case_rtt(const DishSite& dish, const GroundStation& gs, const Snapshot& snap,
                               const VisibilityParams& params = {}) {
    return detail::select(dish, gs, snap, params, false, [](double a, double b) { return a < b; });
}

/// Highest bent-pipe RTT over satellites inside the dish field of view that the
/// ground station can also see.
inline Selection worst_case_rtt(const DishSite& dish, const GroundStation& gs, const Snapshot& snap,
                                const VisibilityParams& params = {}) {
    return detail::select(dish, gs, snap, params, true, [](double a, double b) { return a > b; });
}

/// RTT of one additional in-plane laser hop.
inline double isl_extra_hop_rtt(const ConstellationConfig& config, std::size_t shell_index = 0) {
    config.validate();
    if (shell_index >= config.shells.size()) throw ConfigError("shell_index", "out of range");
    return 2.0 * geo::vacuum_ms(config.shells[shell_index].in_plane_spacing_km());
}

// ---------------------------------------------------------------------------
// Composite routes

enum class Medium { vacuum, fiber };

struct RouteSegment {
    std::string from;
    std::string to;
    Medium medium = Medium::vacuum;
    double length_km = 0.0;
    int traversals = 1; // round trips over this segment

    double rtt_ms() const noexcept {
        double one_way = medium == Medium::vacuum ? geo::vacuum_ms(length_km) : geo::fiber_ms(length_km);
        return 2.0 * traversals * one_way;
    }
};

struct RoutePath {
    std::vector<RouteSegment> segments;
    double satellite_access_ms = 0.0;
    double isl_ms = 0.0;
    double terrestrial_ms = 0.0;
    double total_rtt_ms = 0.0;
};

struct RouteSpec {
    enum class Kind { relay, isl } kind = Kind::relay;
    int n_hops = 0;

    static RouteSpec relay() { return {Kind::relay, 0}; }
    static RouteSpec isl(int hops) { return {Kind::isl, hops}; }
};

/// How the satellite access term enters a composite. `doubled` counts the
/// bent-pipe figure once per direction, as in the published decomposition
/// 154 = 11*2 + 11*2 + 110; `physical` counts it once.
enum class AccessAccounting { doubled, physical };

struct CompositeOptions {
    VisibilityParams visibility;
    std::size_t shell_index = 0;
    AccessAccounting accounting = AccessAccounting::doubled;
};

/// Great-circle distance between two ground points, scaled to orbital radius.
inline double orbital_arc_km(const geo::LatLon& a, const geo::LatLon& b, double altitude_km) {
    return geo::haversine_km(a, b, geo::kEarthRadiusKm + altitude_km);
}

inline RoutePath composite_from_terms(double satellite_access_ms, double isl_one_way_ms, double terrestrial_rtt_ms) {
    RoutePath r;
    r.satellite_access_ms = 2.0 * satellite_access_ms;
    r.isl_ms = 2.0 * isl_one_way_ms;
    r.terrestrial_ms = terrestrial_rtt_ms;
    r.total_rtt_ms = r.satellite_access_ms + r.isl_ms + r.terrestrial_ms;
    return r;
}

/// RTT estimate for a customer dish whose traffic lands at `gs` (directly for a
/// relay route, over laser links for an ISL route) and is tunnelled to `pop`.
/// The first laser hop follows the orbital great circle from dish to `gs`; each
/// further hop adds one in-plane spacing. The terrestrial tail is the measured value when supplied, otherwise
/// the great-circle distance in fibre.
inline RoutePath composite_route_rtt(const ConstellationConfig& config, const Snapshot& snap, const DishSite& dish,
                                     const RouteSpec& route, const GroundStation& gs, const GroundStation& pop,
                                     std::optional<double> terrestrial_rtt_ms = std::nullopt,
                                     const CompositeOptions& opts = {}) {
    config.validate();
    for (const auto* p : {&dish.position, &gs.position, &pop.position})
        if (!geo::valid(*p) || std::isnan(p->lat_deg) || std::isnan(p->lon_deg))
            throw ConfigError("coordinates", "dish, ground station and POP need valid coordinates");
    if (route.kind == RouteSpec::Kind::relay && route.n_hops != 0)
        throw ConfigError("n_hops", "a relay route has no laser hops");
    if (opts.shell_index >= config.shells.size()) throw ConfigError("shell_index", "out of range");
    const auto& shell = config.shells[opts.shell_index];
    int copies = opts.accounting == AccessAccounting::doubled ? 2 : 1;

    RoutePath path;
    if (route.kind == RouteSpec::Kind::relay) {
        auto sel = best_case_rtt(dish, gs, snap, opts.visibility);
        auto sat = sel.satellite.position;
        double up = geo::distance(site_position(dish, snap), sat);
        double down = geo::distance(site_position(gs, snap), sat);
        path.segments.push_back({dish.name, "satellite", Medium::vacuum, up, copies});
        path.segments.push_back({"satellite", gs.name, Medium::vacuum, down, copies});
    } else {
        if (route.n_hops < 1) throw ConfigError("n_hops", "a laser route needs at least one hop");
        double arc = orbital_arc_km(dish.position, gs.position, shell.altitude_km);
        auto up = visible_satellites(dish, snap, opts.visibility, false);
        auto down = visible_satellites(gs, snap, opts.visibility);
        if (up.empty() || down.empty()) throw NoCoverageError("no satellite in view for the laser route");
        auto nearest = [](const std::vector<VisibleSatellite>& v) {
            double m = std::numeric_limits<double>::infinity();
            for (const auto& s : v) m = std::min(m, s.look.range_km);
            return m;
        };
        path.segments.push_back({dish.name, "satellite", Medium::vacuum, nearest(up), copies});
        path.segments.push_back({"satellite", gs.name, Medium::vacuum, nearest(down), copies});
        double isl_km = arc + (route.n_hops - 1) * shell.in_plane_spacing_km();
        path.segments.push_back({"first satellite", "last satellite", Medium::vacuum, isl_km, 1});
    }

    double tail_km = terrestrial_rtt_ms ? *terrestrial_rtt_ms / 2.0 / 1000.0 * geo::kFiberSpeedKmPerS
                                        : geo::haversine_km(gs.position, pop.position);
    path.segments.push_back({gs.name, pop.name, Medium::fiber, tail_km, 1});

    for (std::size_t i = 0; i < path.segments.size(); ++i) {
        double ms = path.segments[i].rtt_ms();
        if (path.segments[i].medium == Medium::fiber) {
            path.terrestrial_ms += ms;
        } else if (route.kind == RouteSpec::Kind::isl && i == 2) {
            path.isl_ms += ms;
        } else {
            path.satellite_access_ms += ms;
        }
    }
    if (terrestrial_rtt_ms) path.terrestrial_ms = *terrestrial_rtt_ms;
    path.total_rtt_ms = path.satellite_access_ms + path.isl_ms + path.terrestrial_ms;
    return path;
}

/// Direct laser route lower bound between two ground points: one bounce up,
/// the orbital arc, one bounce down. `zigzag` scales the arc for routes that
/// cannot follow the great circle.
inline double isl_direct_rtt(const geo::LatLon& a, const geo::LatLon& b, double altitude_km, double zigzag = 1.0) {
    return 2.0 * geo::vacuum_ms(2.0 * altitude_km + zigzag * orbital_arc_km(a, b, altitude_km));
}

// ---------------------------------------------------------------------------
// Relay / ISL threshold

enum class IslTopology {
    plus_grid, // in-plane neighbours and same-slot neighbours in adjacent planes
    any_pair,  // any two distinct satellites
};

inline bool isl_adjacent(const Shell& shell, const SatelliteState& a, const SatelliteState& b) {
    if (a.shell_index != b.shell_index) return false;
    auto ring = [](int x, int y, int n) {
        int d = ((x - y) % n + n) % n;
        return std::min(d, n - d);
    };
    int dp = ring(a.orbit_index, b.orbit_index, shell.n_orbits);
    int ds = ring(a.slot_index, b.slot_index, shell.sats_per_orbit);
    return (dp == 0 && ds == 1) || (dp == 1 && ds == 0);
}

/// Smallest RTT reaching `gs` over exactly two satellites joined by one laser
/// link. Samples below it cannot have crossed a laser link.
inline double min_isl_ng_threshold(const ConstellationConfig& config, const Snapshot& snap, const DishSite& dish,
                                   const GroundStation& gs, const VisibilityParams& params = {},
                                   IslTopology topology = IslTopology::plus_grid) {
    auto up = visible_satellites(dish, snap, params, false);
    auto down = visible_satellites(gs, snap, params);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& a : up) {
        for (const auto& b : down) {
            if (a.index == b.index) continue;
            const auto& sa = snap.satellites[a.index];
            const auto& sb = snap.satellites[b.index];
            if (topology == IslTopology::plus_grid && !isl_adjacent(config.shells[sa.shell_index], sa, sb)) continue;
            double km = a.look.range_km + geo::distance(sa.position, sb.position) + b.look.range_km;
            best = std::min(best, 2.0 * geo::vacuum_ms(km));
        }
    }
    if (!std::isfinite(best)) throw NoCoverageError("no laser-linked satellite pair serves " + gs.name);
    return best;
}

// ---------------------------------------------------------------------------
// Site files

inline geo::LatLon latlon_from_json(const nlohmann::json& j, const std::string& field) {
    if (!j.is_object() || !j.contains("lat") || !j.contains("lon") || !j["lat"].is_number() || !j["lon"].is_number())
        throw ConfigError(field, "expected lat and lon");
    geo::LatLon p{j["lat"].get<double>(), j["lon"].get<double>()};
    if (!geo::valid(p)) throw ConfigError(field, "coordinates out of range");
    return p;
}

inline GroundStation ground_station_from_json(const nlohmann::json& j, const std::string& field) {
    GroundStation g;
    g.name = j.value("name", field);
    g.position = latlon_from_json(j, field);
    g.altitude_m = j.value("altitude_m", 0.0);
    return g;
}

inline DishSite dish_from_json(const nlohmann::json& j, const std::string& field) {
    DishSite d;
    d.name = j.value("name", field);
    d.position = latlon_from_json(j, field);
    d.altitude_m = j.value("altitude_m", 0.0);
    if (auto it = j.find("boresight_azimuth_deg"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw ConfigError(field + ".boresight_azimuth_deg", "expected a number");
        double az = std::fmod(it->get<double>(), 360.0);
        d.boresight_azimuth_deg = az < 0 ? az + 360.0 : az;
    }
    return d;
}

} // namespace hitchhike::constellation
