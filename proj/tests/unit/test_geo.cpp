#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace hitchhike;

TEST(Geo, HaversineMatchesLawOfCosines) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lat(-89.0, 89.0), lon(-180.0, 180.0);
    for (int i = 0; i < 2000; ++i) {
        geo::LatLon a{lat(rng), lon(rng)}, b{lat(rng), lon(rng)};
        double want = 6371.0 * oracle::central_angle(a.lat_deg, a.lon_deg, b.lat_deg, b.lon_deg);
        // The cosine form loses precision for short arcs.
        EXPECT_NEAR(geo::haversine_km(a, b), want, 1e-3 + 1e-9 * want);
    }
}

TEST(Geo, HaversineKnownDistances) {
    EXPECT_NEAR(geo::haversine_km({0, 0}, {0, 180}), std::numbers::pi * 6371.0, 1e-6);
    EXPECT_NEAR(geo::haversine_km({90, 0}, {-90, 0}), std::numbers::pi * 6371.0, 1e-6);
    EXPECT_DOUBLE_EQ(geo::haversine_km({12.5, 7.25}, {12.5, 7.25}), 0.0);
    // Lagos to Madrid; reference from an independent Python haversine.
    EXPECT_NEAR(geo::haversine_km({6.5244, 3.3792}, {40.4168, -3.7038}), 3834.1152, 1e-3);
}

TEST(Geo, LightTimes) {
    EXPECT_NEAR(geo::vacuum_ms(299792.458), 1000.0, 1e-9);
    EXPECT_NEAR(geo::fiber_ms(299792.458), 1500.0, 1e-9);
}

TEST(Geo, LookAnglesAgreeWithOracle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> lat(-70.0, 70.0), lon(-180.0, 180.0), d(-8.0, 8.0), rot(0.0, 6.28);
    int checked = 0;
    for (int i = 0; i < 3000; ++i) {
        geo::LatLon site{lat(rng), lon(rng)};
        geo::LatLon below{site.lat_deg + d(rng), site.lon_deg + d(rng)};
        double r = rot(rng);
        auto sat = geo::rotate_z(geo::to_cartesian(below, 550.0), r);
        auto pos = geo::rotate_z(geo::to_cartesian(site), r);
        auto got = geo::look_angles(site, pos, sat, r);
        auto want = oracle::look(site, 0.0, sat, r);
        EXPECT_NEAR(got.range_km, want.range, 1e-6);
        EXPECT_NEAR(got.elevation_deg, want.el, 1e-6);
        if (want.el < 89.0) {
            double daz = std::fmod(std::abs(got.azimuth_deg - want.az), 360.0);
            EXPECT_NEAR(std::min(daz, 360.0 - daz), 0.0, 1e-6);
            ++checked;
        }
    }
    EXPECT_GT(checked, 2500);
}

TEST(Geo, OverheadSatelliteIsAtZenith) {
    geo::LatLon site{6.4, 5.25};
    auto look = geo::look_angles(site, geo::to_cartesian(site), geo::to_cartesian(site, 550.0));
    EXPECT_NEAR(look.elevation_deg, 90.0, 1e-9);
    EXPECT_NEAR(look.range_km, 550.0, 1e-9);
}

TEST(Ip, ParseAndFormat) {
    auto a = IpAddress::parse("98.97.104.23");
    ASSERT_TRUE(a);
    EXPECT_TRUE(a->is_v4());
    EXPECT_EQ(a->to_string(), "98.97.104.23");
    auto b = IpAddress::parse("2605:59C8:0::1");
    ASSERT_TRUE(b);
    EXPECT_EQ(b->to_string(), "2605:59c8::1");
    EXPECT_FALSE(IpAddress::parse("98.97.0.300"));
    EXPECT_FALSE(IpAddress::parse(""));
    EXPECT_FALSE(IpAddress::parse("host.example"));
    EXPECT_EQ(IpAddress::v4(0x62616817), *a);
}

TEST(Ip, PrefixContainmentMatchesBitwiseOracle) {
    std::mt19937_64 rng(3);
    std::vector<IpPrefix> prefixes;
    for (int i = 0; i < 60; ++i) {
        auto net = IpAddress::v4(0x62610000U | static_cast<std::uint32_t>(rng() & 0xFFFF));
        unsigned len = 16 + static_cast<unsigned>(rng() % 17);
        prefixes.push_back(*IpPrefix::parse(net.to_string() + "/" + std::to_string(len)));
    }
    prefixes.push_back(*IpPrefix::parse("0.0.0.0/0"));
    for (int i = 0; i < 5000; ++i) {
        auto a = IpAddress::v4(0x62610000U | static_cast<std::uint32_t>(rng() & 0xFFFF));
        for (std::size_t k = 0; k < prefixes.size(); ++k)
            EXPECT_EQ(prefixes[k].contains(a), oracle::longest_prefix({prefixes[k]}, a).has_value());
    }
}

TEST(Ip, PrefixParseRejectsBadInput) {
    EXPECT_FALSE(IpPrefix::parse("98.97.0.0/33"));
    EXPECT_FALSE(IpPrefix::parse("98.97.0.0/"));
    EXPECT_FALSE(IpPrefix::parse("98.97.0.0/2x"));
    EXPECT_TRUE(IpPrefix::parse("2605:59c8::/32"));
    EXPECT_FALSE(IpPrefix::parse("2605:59c8::/129"));
}

TEST(Csv, SplitHonoursQuotes) {
    auto f = csv::split(R"(a,"b,c","d ""e""",,)");
    ASSERT_EQ(f.size(), 5U);
    EXPECT_EQ(f[1], "b,c");
    EXPECT_EQ(f[2], "d \"e\"");
    EXPECT_EQ(f[4], "");
}

TEST(Csv, QuoteRoundTrips) {
    for (std::string s : {"plain", "with,comma", "with \"quote\"", ""}) {
        std::ostringstream os;
        csv::write_row(os, {s, "x"});
        auto line = os.str();
        line.pop_back();
        auto back = csv::split(line);
        ASSERT_EQ(back.size(), 2U);
        EXPECT_EQ(back[0], s);
    }
}

TEST(Csv, NumberParsing) {
    EXPECT_EQ(csv::parse_double("1.5"), 1.5);
    EXPECT_FALSE(csv::parse_double("1.5x"));
    EXPECT_FALSE(csv::parse_double(""));
    EXPECT_EQ(csv::parse_int("-42"), -42);
    EXPECT_FALSE(csv::parse_int("4.2"));
}

TEST(Stats, MedianMeanStddev) {
    std::vector<double> v{4, 1, 3, 2};
    EXPECT_DOUBLE_EQ(stats::median(v), 2.5);
    EXPECT_DOUBLE_EQ(stats::mean(v), 2.5);
    EXPECT_DOUBLE_EQ(stats::stddev(v), std::sqrt(1.25));
    std::vector<double> odd{5, 1, 9};
    EXPECT_DOUBLE_EQ(stats::median(odd), 5);
}

TEST(Stats, SpearmanKnownValues) {
    std::vector<double> x{1, 2, 3, 4, 5}, y{5, 6, 7, 8, 7};
    // scipy.stats.spearmanr gives 0.8207826816681233
    EXPECT_NEAR(*stats::spearman(x, y), 0.8207826816681233, 1e-12);
    std::vector<double> rev{5, 4, 3, 2, 1};
    EXPECT_NEAR(*stats::spearman(x, rev), -1.0, 1e-12);
    std::vector<double> two{1, 2};
    EXPECT_FALSE(stats::spearman(two, two));
}

TEST(Stats, AverageRanksTies) {
    std::vector<double> v{10, 20, 10, 30};
    auto r = stats::average_ranks(v);
    EXPECT_EQ(r, (std::vector<double>{1.5, 3, 1.5, 4}));
}
