#pragma once

#include "hitchhike/discovery.hpp"
#include "hitchhike/error.hpp"
#include "hitchhike/probe.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace hitchhike::store {

inline constexpr int kSchemaVersion = 1;

/// 64-bit FNV-1a, hex encoded.
inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Hash of the canonical (sorted-key, compact) JSON form of a configuration.
inline std::string config_hash(const nlohmann::json& config) { return fnv1a_hex(config.dump()); }

/// UTC calendar date of a UNIX millisecond timestamp, as YYYY-MM-DD.
inline std::string utc_date(std::int64_t unix_ms) {
    std::time_t t = static_cast<std::time_t>(unix_ms / 1000);
    std::tm tm{};
    ::gmtime_r(&t, &tm);
    char buf[16];
    std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
    return buf;
}

/// Directory-safe form of an address (':' is awkward on some filesystems).
inline std::string address_dir(const IpAddress& a) {
    auto s = a.to_string();
    std::replace(s.begin(), s.end(), ':', '_');
    return s;
}

inline nlohmann::json endpoint_json(const discovery::Endpoint& e) {
    nlohmann::json j{{"address", e.address.to_string()},
                     {"pop_code", e.pop_code},
                     {"source", discovery::to_string(e.source)}};
    if (e.pop)
        j["pop"] = {{"city", e.pop->city}, {"country", e.pop->country}, {"lat", e.pop->position.lat_deg},
                    {"lon", e.pop->position.lon_deg}};
    if (e.customer_location)
        j["customer"] = {{"lat", e.customer_location->lat_deg}, {"lon", e.customer_location->lon_deg}};
    return j;
}

inline discovery::Endpoint endpoint_from_json(const nlohmann::json& j) {
    discovery::Endpoint e;
    auto a = IpAddress::parse(j.at("address").get<std::string>());
    if (!a) throw ConfigError("endpoint.address", "invalid address");
    e.address = *a;
    e.pop_code = j.value("pop_code", std::string{});
    if (auto p = j.find("pop"); p != j.end())
        e.pop = discovery::PopLocation{p->value("city", ""), p->value("country", ""),
                                       {p->value("lat", 0.0), p->value("lon", 0.0)}};
    if (auto c = j.find("customer"); c != j.end()) e.customer_location = geo::LatLon{c->value("lat", 0.0), c->value("lon", 0.0)};
    e.source = j.value("source", std::string{}) == "oneweb_blocklist" ? discovery::EndpointSource::oneweb_blocklist
                                                                      : discovery::EndpointSource::starlink_ptr;
    return e;
}

inline nlohmann::json path_json(const probe::SatLinkPath& p) {
    return {{"target", p.target.to_string()},
            {"pre_sat_ttl", p.pre_sat_ttl},
            {"pre_sat_router", p.pre_sat_router.to_string()},
            {"post_sat_ttl", p.post_sat_ttl},
            {"jump_ms", p.jump_ms}};
}

inline probe::SatLinkPath path_from_json(const nlohmann::json& j) {
    probe::SatLinkPath p;
    auto t = IpAddress::parse(j.at("target").get<std::string>());
    auto r = IpAddress::parse(j.at("pre_sat_router").get<std::string>());
    if (!t || !r) throw ConfigError("path", "invalid address");
    p.target = *t;
    p.pre_sat_router = *r;
    p.pre_sat_ttl = j.at("pre_sat_ttl").get<int>();
    p.post_sat_ttl = j.at("post_sat_ttl").get<int>();
    p.jump_ms = j.value("jump_ms", 0.0);
    return p;
}

struct StoredSession {
    std::filesystem::path dir; // .../<partition>/<address>
    std::string partition;
    nlohmann::json meta;
};

/// root/<date>[_n]/<address>/{session.csv, meta.json}. Sessions are written
/// once; an existing session file is never replaced.
class MeasurementStore {
public:
    explicit MeasurementStore(std::filesystem::path root) : root_(std::move(root)) {}

    const std::filesystem::path& root() const noexcept { return root_; }

    /// Fresh partition for `date`: the bare date first, then date_1, date_2, ...
    std::filesystem::path new_partition(const std::string& date) {
        std::lock_guard lock(mu_);
        std::filesystem::create_directories(root_);
        for (int n = 0;; ++n) {
            auto name = n == 0 ? date : date + "_" + std::to_string(n);
            auto dir = root_ / name;
            std::error_code ec;
            if (std::filesystem::create_directory(dir, ec)) return dir;
            if (ec) throw IoError("cannot create partition " + dir.string() + ": " + ec.message());
        }
    }

    static std::filesystem::path write_session(const std::filesystem::path& partition, const probe::MeasurementSession& s,
                                               nlohmann::json meta) {
        auto dir = partition / address_dir(s.path.target);
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
        auto csv_path = dir / "session.csv";
        if (std::filesystem::exists(csv_path)) throw IoError(csv_path.string() + " already exists; sessions are append-only");

        std::ostringstream body;
        probe::write_session_csv(body, s);
        {
            std::ofstream os(csv_path, std::ios::binary);
            if (!os) throw IoError("cannot write " + csv_path.string());
            os << body.str();
        }
        meta["schema_version"] = kSchemaVersion;
        meta["endpoint"] = endpoint_json(s.endpoint);
        meta["path"] = path_json(s.path);
        meta["start_ms"] = s.start_ms;
        meta["duration_s"] = s.duration_s;
        meta["cadence_hz"] = s.cadence_hz;
        meta["usable"] = s.usable;
        meta["session_sha"] = fnv1a_hex(body.str());
        std::ofstream mo(dir / "meta.json", std::ios::binary);
        if (!mo) throw IoError("cannot write meta for " + dir.string());
        mo << meta.dump(2) << '\n';
        return dir;
    }

    std::vector<StoredSession> list_sessions() const {
        std::vector<StoredSession> out;
        if (!std::filesystem::is_directory(root_)) return out;
        std::vector<std::filesystem::path> parts;
        for (const auto& e : std::filesystem::directory_iterator(root_))
            if (e.is_directory() && !e.path().filename().string().empty() && std::isdigit(static_cast<unsigned char>(e.path().filename().string()[0])))
                parts.push_back(e.path());
        std::sort(parts.begin(), parts.end());
        for (const auto& p : parts) {
            std::vector<std::filesystem::path> dirs;
            for (const auto& e : std::filesystem::directory_iterator(p))
                if (e.is_directory() && std::filesystem::exists(e.path() / "session.csv") &&
                    std::filesystem::exists(e.path() / "meta.json"))
                    dirs.push_back(e.path());
            std::sort(dirs.begin(), dirs.end());
            for (const auto& d : dirs) {
                std::ifstream in(d / "meta.json");
                auto meta = nlohmann::json::parse(in, nullptr, false);
                if (meta.is_discarded() || meta.value("schema_version", 0) != kSchemaVersion) continue;
                out.push_back({d, p.filename().string(), meta});
            }
        }
        return out;
    }

    static probe::MeasurementSession load_session(const StoredSession& s) {
        std::ifstream in(s.dir / "session.csv");
        if (!in) throw IoError("cannot read " + (s.dir / "session.csv").string());
        auto session = probe::read_session_csv(in, endpoint_from_json(s.meta.at("endpoint")),
                                               path_from_json(s.meta.at("path")), s.meta.value("duration_s", 0));
        session.cadence_hz = s.meta.value("cadence_hz", 1);
        session.start_ms = s.meta.value("start_ms", session.start_ms);
        return session;
    }

private:
    std::filesystem::path root_;
    std::mutex mu_;
};

} // namespace hitchhike::store
