#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hitchhike::geo {

inline constexpr double kEarthRadiusKm = 6371.0;
inline constexpr double kSpeedOfLightKmPerS = 299792.458;
inline constexpr double kFiberSpeedKmPerS = kSpeedOfLightKmPerS * 2.0 / 3.0;
inline constexpr double kMuKm3PerS2 = 398600.4418;
inline constexpr double kEarthRotationRadPerS = 7.2921150e-5;
inline constexpr double kKmPerMile = 1.609344;

constexpr double deg2rad(double d) noexcept { return d * std::numbers::pi / 180.0; }
constexpr double rad2deg(double r) noexcept { return r * 180.0 / std::numbers::pi; }

struct LatLon {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const noexcept { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const noexcept { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double k) const noexcept { return {x * k, y * k, z * k}; }
    double dot(const Vec3& o) const noexcept { return x * o.x + y * o.y + z * o.z; }
    double norm() const noexcept { return std::sqrt(dot(*this)); }
};

inline double distance(const Vec3& a, const Vec3& b) noexcept { return (a - b).norm(); }

inline bool valid(const LatLon& p) noexcept {
    return p.lat_deg >= -90.0 && p.lat_deg <= 90.0 && p.lon_deg >= -180.0 && p.lon_deg <= 180.0;
}

/// Great-circle distance on a sphere of `radius_km` (haversine form).
inline double haversine_km(const LatLon& a, const LatLon& b, double radius_km = kEarthRadiusKm) noexcept {
    double dlat = deg2rad(b.lat_deg - a.lat_deg);
    double dlon = deg2rad(b.lon_deg - a.lon_deg);
    double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
               std::cos(deg2rad(a.lat_deg)) * std::cos(deg2rad(b.lat_deg)) * std::sin(dlon / 2) * std::sin(dlon / 2);
    s = std::min(1.0, std::max(0.0, s));
    return 2.0 * radius_km * std::asin(std::sqrt(s));
}

/// Earth-fixed Cartesian position (km) of a point on the spherical Earth.
inline Vec3 to_cartesian(const LatLon& p, double altitude_km = 0.0) noexcept {
    double r = kEarthRadiusKm + altitude_km;
    double la = deg2rad(p.lat_deg), lo = deg2rad(p.lon_deg);
    return {r * std::cos(la) * std::cos(lo), r * std::cos(la) * std::sin(lo), r * std::sin(la)};
}

inline LatLon sub_point(const Vec3& v) noexcept {
    double r = v.norm();
    return {rad2deg(std::asin(v.z / r)), rad2deg(std::atan2(v.y, v.x))};
}

/// Rotate about the polar axis by `angle_rad`.
inline Vec3 rotate_z(const Vec3& v, double angle_rad) noexcept {
    double c = std::cos(angle_rad), s = std::sin(angle_rad);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

struct LookAngles {
    double azimuth_deg = 0.0;   // clockwise from north, [0, 360)
    double elevation_deg = 0.0; // above the local horizon
    double range_km = 0.0;
};

/// Look angles from an observer at `site` (given both as lat/lon and in the same
/// Cartesian frame as `target`) toward `target`. Spherical local vertical.
inline LookAngles look_angles(const LatLon& site_ll, const Vec3& site, const Vec3& target,
                              double frame_rotation_rad = 0.0) noexcept {
    Vec3 d = target - site;
    double range = d.norm();
    double la = deg2rad(site_ll.lat_deg), lo = deg2rad(site_ll.lon_deg) + frame_rotation_rad;
    Vec3 up{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
    Vec3 east{-std::sin(lo), std::cos(lo), 0.0};
    Vec3 north{-std::sin(la) * std::cos(lo), -std::sin(la) * std::sin(lo), std::cos(la)};
    double el = rad2deg(std::asin(std::clamp(d.dot(up) / range, -1.0, 1.0)));
    double az = rad2deg(std::atan2(d.dot(east), d.dot(north)));
    if (az < 0) az += 360.0;
    if (az >= 360.0) az -= 360.0;
    return {az, el, range};
}

/// One-way light time in milliseconds over `km` in vacuum.
constexpr double vacuum_ms(double km) noexcept { return km / kSpeedOfLightKmPerS * 1000.0; }
/// One-way light time in milliseconds over `km` of optical fiber.
constexpr double fiber_ms(double km) noexcept { return km / kFiberSpeedKmPerS * 1000.0; }

} // namespace hitchhike::geo
