#include "oracles.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace hitchhike;
using namespace hitchhike::constellation;

namespace {

std::filesystem::path data_dir() { return HITCHHIKE_DATA_DIR; }

ConstellationConfig shell1() {
    return ConstellationConfig::load(data_dir() / "constellation/starlink_shell1.json");
}

ConstellationConfig random_config(std::mt19937_64& rng) {
    ConstellationConfig c;
    Shell s;
    s.altitude_km = 500.0 + static_cast<double>(rng() % 200);
    s.inclination_deg = 40.0 + static_cast<double>(rng() % 60);
    s.n_orbits = 8 + static_cast<int>(rng() % 30);
    s.sats_per_orbit = 8 + static_cast<int>(rng() % 20);
    s.phase_offset_deg = static_cast<double>(rng() % 30);
    c.shells.push_back(s);
    c.epoch_unix_s = 1.68e9;
    return c;
}

double wrap(double lon) { return std::remainder(lon, 360.0); }

double vnorm(const geo::Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

} // namespace

TEST(Propagation, CircularOrbitsReturnAfterOnePeriod) {
    auto c = shell1();
    auto a = propagate(c, c.epoch_unix_s);
    ASSERT_EQ(a.satellites.size(), 72U * 22U);
    EXPECT_EQ(a.satellites.size(), c.satellite_count());
    auto b = propagate(c, c.epoch_unix_s + c.shells[0].period_s());
    for (std::size_t i = 0; i < a.satellites.size(); i += 37) {
        EXPECT_NEAR(vnorm(a.satellites[i].position), 6921.0, 1e-6);
        EXPECT_NEAR(geo::distance(a.satellites[i].position, b.satellites[i].position), 0.0, 1e-5);
    }
    // 2 pi sqrt(r^3 / mu) with r = 6921 km
    EXPECT_NEAR(c.shells[0].period_s(), 5730.13, 0.01);
    EXPECT_DOUBLE_EQ(a.earth_rotation_rad, 0.0);
}

TEST(Propagation, InclinationBoundsLatitude) {
    std::mt19937_64 rng(2);
    auto c = random_config(rng);
    for (double t : {0.0, 1234.5, 4000.0}) {
        auto snap = propagate(c, c.epoch_unix_s + t);
        for (const auto& s : snap.satellites) {
            double lat = std::asin(s.position.z / vnorm(s.position)) * 180.0 / std::numbers::pi;
            EXPECT_LE(std::abs(lat), c.shells[0].inclination_deg + 1e-9);
        }
    }
}

TEST(Selection, AgreesWithExhaustiveSearch) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> lat(-45.0, 45.0), lon(-180.0, 180.0), off(-4.0, 4.0), az(0.0, 360.0);
    int covered = 0;
    for (int k = 0; k < 100; ++k) {
        auto c = random_config(rng);
        auto snap = propagate(c, c.epoch_unix_s + static_cast<double>(rng() % 10000));
        DishSite dish{"d", {lat(rng), lon(rng)}, static_cast<double>(rng() % 500), az(rng)};
        GroundStation gs{"g", {dish.position.lat_deg + off(rng), wrap(dish.position.lon_deg + off(rng))}, 0.0};
        VisibilityParams vp{800.0 + static_cast<double>(rng() % 800), 10.0 + static_cast<double>(rng() % 30)};
        for (bool worst : {false, true}) {
            auto want = oracle::brute_select(dish, gs, snap, vp, worst);
            if (!want) {
                EXPECT_THROW(worst ? worst_case_rtt(dish, gs, snap, vp) : best_case_rtt(dish, gs, snap, vp), NoCoverageError);
                continue;
            }
            auto got = worst ? worst_case_rtt(dish, gs, snap, vp) : best_case_rtt(dish, gs, snap, vp);
            EXPECT_EQ(got.index, want->index) << k;
            EXPECT_NEAR(got.rtt_ms, want->rtt_ms, 1e-9) << k;
            covered += !worst;
        }
    }
    EXPECT_GT(covered, 30);
}

TEST(Selection, WorstNeverBeatsBest) {
    auto c = shell1();
    auto sites = nlohmann::json::parse(std::ifstream(data_dir() / "constellation/nigeria.json"));
    auto dish = dish_from_json(sites["dish"], "dish");
    auto gs = ground_station_from_json(sites["ground_stations"][0], "gs");
    int checked = 0;
    for (int t = 0; t < 3600; t += 30) {
        auto snap = propagate(c, c.epoch_unix_s + t);
        try {
            auto w = worst_case_rtt(dish, gs, snap);
            auto b = best_case_rtt(dish, gs, snap);
            EXPECT_GE(w.rtt_ms, b.rtt_ms);
            // Nothing below the straight-up-and-down bound.
            EXPECT_GE(b.rtt_ms, 2.0 * geo::vacuum_ms(2.0 * 550.0) - 1e-9);
            ++checked;
        } catch (const NoCoverageError&) {
        }
    }
    EXPECT_GT(checked, 60);
}

TEST(Selection, FieldOfViewBoundaries) {
    DishSite d{"d", {6.4, 5.25}, 0, 338.0};
    EXPECT_FALSE(d.azimuth_allowed(338.0));
    EXPECT_TRUE(d.azimuth_allowed(338.5));
    EXPECT_TRUE(d.azimuth_allowed(0.0));
    EXPECT_TRUE(d.azimuth_allowed(157.9));
    EXPECT_FALSE(d.azimuth_allowed(158.0));
    EXPECT_FALSE(d.azimuth_allowed(250.0));
    d.boresight_azimuth_deg.reset();
    EXPECT_TRUE(d.azimuth_allowed(250.0));
}

TEST(Composite, PublishedDecomposition) {
    auto r = composite_from_terms(11, 11, 110);
    EXPECT_DOUBLE_EQ(r.total_rtt_ms, 154.0);
    EXPECT_DOUBLE_EQ(r.satellite_access_ms, 22.0);
    EXPECT_DOUBLE_EQ(r.isl_ms, 22.0);
}

TEST(Composite, ExtraLaserHop) {
    // 2 * (2 * pi * 6921 km / 22) / c
    EXPECT_NEAR(isl_extra_hop_rtt(shell1()), 2.0 * 2.0 * std::numbers::pi * 6921.0 / 22.0 / 299792.458 * 1000.0, 1e-9);
    EXPECT_NEAR(isl_extra_hop_rtt(shell1()), 13.187, 1e-3);
    EXPECT_THROW(isl_extra_hop_rtt(shell1(), 1), ConfigError);
}

TEST(Composite, AccountingAndHops) {
    auto c = shell1();
    auto sites = nlohmann::json::parse(std::ifstream(data_dir() / "constellation/nigeria.json"));
    auto dish = dish_from_json(sites["dish"], "dish");
    auto lepe = ground_station_from_json(sites["remote_ground_station"], "lepe");
    auto pop = ground_station_from_json(sites["pop"], "pop");
    auto snap = propagate(c, c.epoch_unix_s + 60);
    CompositeOptions phys;
    phys.accounting = AccessAccounting::physical;
    auto d1 = composite_route_rtt(c, snap, dish, RouteSpec::isl(1), lepe, pop, 110.0);
    auto p1 = composite_route_rtt(c, snap, dish, RouteSpec::isl(1), lepe, pop, 110.0, phys);
    EXPECT_NEAR(d1.satellite_access_ms, 2.0 * p1.satellite_access_ms, 1e-9);
    EXPECT_DOUBLE_EQ(d1.terrestrial_ms, 110.0);
    EXPECT_NEAR(d1.total_rtt_ms, d1.satellite_access_ms + d1.isl_ms + 110.0, 1e-9);
    auto d3 = composite_route_rtt(c, snap, dish, RouteSpec::isl(3), lepe, pop, 110.0);
    EXPECT_NEAR(d3.total_rtt_ms - d1.total_rtt_ms, 2.0 * isl_extra_hop_rtt(c), 1e-9);
    EXPECT_NEAR(d1.isl_ms, 2.0 * geo::vacuum_ms(orbital_arc_km(dish.position, lepe.position, 550.0)), 1e-9);
    EXPECT_THROW(composite_route_rtt(c, snap, dish, RouteSpec::isl(0), lepe, pop), ConfigError);
    EXPECT_THROW(composite_route_rtt(c, snap, dish, RouteSpec{RouteSpec::Kind::relay, 2}, lepe, pop), ConfigError);
    auto bad = pop;
    bad.position.lat_deg = 95;
    EXPECT_THROW(composite_route_rtt(c, snap, dish, RouteSpec::isl(1), lepe, bad), ConfigError);
}

TEST(Composite, NeverFasterThanLightAlongTheGround) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> lat(-50.0, 50.0), lon(-180.0, 180.0), off(-3.0, 3.0), far(-30.0, 30.0);
    auto c = shell1();
    int done = 0;
    for (int k = 0; k < 300; ++k) {
        auto snap = propagate(c, c.epoch_unix_s + static_cast<double>(rng() % 5000));
        DishSite dish{"d", {lat(rng), lon(rng)}, 0, std::nullopt};
        GroundStation gs{"g", {dish.position.lat_deg + off(rng), wrap(dish.position.lon_deg + off(rng))}, 0};
        GroundStation pop{"p", {std::clamp(dish.position.lat_deg + far(rng), -89.0, 89.0), wrap(dish.position.lon_deg + far(rng))}, 0};
        auto spec = k % 2 ? RouteSpec::relay() : RouteSpec::isl(1 + static_cast<int>(rng() % 4));
        try {
            auto r = composite_route_rtt(c, snap, dish, spec, gs, pop);
            EXPECT_GE(r.total_rtt_ms, 2.0 * geo::vacuum_ms(geo::haversine_km(dish.position, pop.position)));
            ++done;
        } catch (const NoCoverageError&) {
        }
    }
    EXPECT_GT(done, 200);
}

TEST(Threshold, AnyPairIsNoHigherThanPlusGrid) {
    auto c = shell1();
    auto sites = nlohmann::json::parse(std::ifstream(data_dir() / "constellation/nigeria.json"));
    auto dish = dish_from_json(sites["dish"], "dish");
    auto gs = ground_station_from_json(sites["ground_stations"][0], "gs");
    int checked = 0;
    for (int t = 0; t < 1800; t += 60) {
        auto snap = propagate(c, c.epoch_unix_s + t);
        try {
            double grid = min_isl_ng_threshold(c, snap, dish, gs);
            double any = min_isl_ng_threshold(c, snap, dish, gs, {}, IslTopology::any_pair);
            EXPECT_LE(any, grid);
            ++checked;
        } catch (const NoCoverageError&) {
        }
    }
    EXPECT_GT(checked, 5);
}

TEST(Threshold, PlusGridAdjacency) {
    Shell s;
    s.n_orbits = 6;
    s.sats_per_orbit = 10;
    auto at = [](int o, int k) { return SatelliteState{0, o, k, {}}; };
    EXPECT_TRUE(isl_adjacent(s, at(0, 0), at(0, 9)));
    EXPECT_TRUE(isl_adjacent(s, at(5, 3), at(0, 3)));
    EXPECT_FALSE(isl_adjacent(s, at(0, 0), at(1, 1)));
    EXPECT_FALSE(isl_adjacent(s, at(0, 0), at(0, 0)));
    EXPECT_FALSE(isl_adjacent(s, at(0, 0), at(0, 2)));
    EXPECT_FALSE(isl_adjacent(s, SatelliteState{1, 0, 1, {}}, at(0, 0)));
}

TEST(Threshold, NoCoverageFarAway) {
    auto c = shell1();
    auto snap = propagate(c, c.epoch_unix_s);
    DishSite dish{"d", {6.4, 5.25}, 0, std::nullopt};
    GroundStation gs{"g", {-40.0, 150.0}, 0};
    EXPECT_THROW(min_isl_ng_threshold(c, snap, dish, gs), NoCoverageError);
    EXPECT_THROW(best_case_rtt(dish, gs, snap), NoCoverageError);
}

TEST(IslDirect, Formula) {
    geo::LatLon a{0, 0}, b{0, 10};
    double arc = (6371.0 + 550.0) * 10.0 * std::numbers::pi / 180.0;
    EXPECT_NEAR(isl_direct_rtt(a, b, 550.0), 2.0 * (1100.0 + arc) / 299792.458 * 1000.0, 1e-9);
    EXPECT_NEAR(isl_direct_rtt(a, b, 550.0, 1.5), 2.0 * (1100.0 + 1.5 * arc) / 299792.458 * 1000.0, 1e-9);
}

TEST(ConfigFiles, ValidationNamesTheField) {
    auto field_of = [](const nlohmann::json& j) {
        try {
            ConstellationConfig::from_json(j).validate();
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("none");
    };
    nlohmann::json ok = {{"shells", {{{"altitude_km", 550}, {"inclination_deg", 53}, {"n_orbits", 72}, {"sats_per_orbit", 22}}}}};
    EXPECT_EQ(field_of(ok), "none");
    auto bad = ok;
    bad["shells"][0]["n_orbits"] = 0;
    EXPECT_EQ(field_of(bad), "shells[0].n_orbits");
    bad = ok;
    bad["shells"][0]["inclination_deg"] = 200;
    EXPECT_EQ(field_of(bad), "shells[0].inclination_deg");
    bad = ok;
    bad["shells"] = nlohmann::json::array();
    EXPECT_EQ(field_of(bad), "shells");
    EXPECT_THROW(dish_from_json({{"lat", 6.4}}, "dish"), ConfigError);
    auto d = dish_from_json({{"lat", 6.4}, {"lon", 5.25}, {"boresight_azimuth_deg", -22}}, "dish");
    EXPECT_DOUBLE_EQ(*d.boresight_azimuth_deg, 338.0);
}
