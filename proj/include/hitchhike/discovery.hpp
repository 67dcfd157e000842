#pragma once

#include "hitchhike/csv.hpp"
#include "hitchhike/error.hpp"
#include "hitchhike/geo.hpp"
#include "hitchhike/ip.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hitchhike::discovery {

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

// ---------------------------------------------------------------------------
// Scan records

struct Service {
    int port = 0;
    std::string protocol;
};

struct ScanRecord {
    IpAddress address;
    std::optional<std::string> ptr_name;
    std::optional<std::string> soa_name;
    std::vector<std::string> tls_subject_names;
    std::vector<Service> open_services;
    std::int64_t asn = 0;
};

enum class DatasetFormat { json_lines, csv };

struct ParsedDataset {
    std::vector<ScanRecord> records;
    std::size_t malformed_rows = 0;
};

namespace detail {

inline std::optional<std::string> optional_string(const nlohmann::json& j, std::initializer_list<const char*> keys) {
    for (const char* k : keys) {
        auto it = j.find(k);
        if (it != j.end() && it->is_string() && !it->get<std::string>().empty()) return it->get<std::string>();
    }
    return std::nullopt;
}

inline std::optional<ScanRecord> record_from_json(const nlohmann::json& j) {
    if (!j.is_object()) return std::nullopt;
    auto ip = optional_string(j, {"address", "ip"});
    if (!ip) return std::nullopt;
    auto addr = IpAddress::parse(*ip);
    if (!addr) return std::nullopt;

    ScanRecord r;
    r.address = *addr;
    r.ptr_name = optional_string(j, {"ptr_name", "ptr"});
    r.soa_name = optional_string(j, {"soa_name", "soa"});
    for (const char* key : {"tls_subject_names", "tls_names"}) {
        auto it = j.find(key);
        if (it == j.end()) continue;
        if (!it->is_array()) return std::nullopt;
        for (const auto& n : *it) {
            if (!n.is_string()) return std::nullopt;
            r.tls_subject_names.push_back(n.get<std::string>());
        }
    }
    for (const char* key : {"open_services", "services"}) {
        auto it = j.find(key);
        if (it == j.end()) continue;
        if (!it->is_array()) return std::nullopt;
        for (const auto& s : *it) {
            if (!s.is_object() || !s.contains("port") || !s["port"].is_number_integer()) return std::nullopt;
            Service svc;
            auto port = s["port"].get<std::int64_t>();
            if (port < 1 || port > 65535) return std::nullopt;
            svc.port = static_cast<int>(port);
            if (auto p = s.find("protocol"); p != s.end() && p->is_string()) svc.protocol = p->get<std::string>();
            r.open_services.push_back(std::move(svc));
        }
    }
    if (auto it = j.find("asn"); it != j.end()) {
        if (!it->is_number_integer()) return std::nullopt;
        r.asn = it->get<std::int64_t>();
    }
    return r;
}

inline std::vector<std::string> split_list(std::string_view s, char sep = ';') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(sep, start);
        auto item = s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!item.empty()) out.emplace_back(item);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// address,ptr_name,soa_name,tls_subject_names,open_services,asn
inline std::optional<ScanRecord> record_from_csv(const std::vector<std::string>& f) {
    if (f.size() != 6) return std::nullopt;
    auto addr = IpAddress::parse(f[0]);
    if (!addr) return std::nullopt;
    ScanRecord r;
    r.address = *addr;
    if (!f[1].empty()) r.ptr_name = f[1];
    if (!f[2].empty()) r.soa_name = f[2];
    r.tls_subject_names = split_list(f[3]);
    for (const auto& item : split_list(f[4])) {
        auto slash = item.find('/');
        auto port = csv::parse_int(std::string_view(item).substr(0, slash));
        if (!port || *port < 1 || *port > 65535) return std::nullopt;
        r.open_services.push_back({static_cast<int>(*port), slash == std::string::npos ? "" : item.substr(slash + 1)});
    }
    if (!f[5].empty()) {
        auto asn = csv::parse_int(f[5]);
        if (!asn) return std::nullopt;
        r.asn = *asn;
    }
    return r;
}

} // namespace detail

/// Read a scan dataset. Malformed rows are counted and skipped. A file with no
/// data rows yields an empty result; a file whose rows are all malformed throws.
inline ParsedDataset parse_scan_dataset(std::istream& in, DatasetFormat format) {
    ParsedDataset out;
    std::string line;
    bool header_seen = false;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        if (format == DatasetFormat::csv && !header_seen) {
            header_seen = true;
            if (to_lower(line).starts_with("address")) continue;
        }
        ++rows;
        std::optional<ScanRecord> rec;
        if (format == DatasetFormat::json_lines) {
            auto j = nlohmann::json::parse(line, nullptr, false);
            if (!j.is_discarded()) rec = detail::record_from_json(j);
        } else {
            rec = detail::record_from_csv(csv::split(line));
        }
        if (rec) {
            out.records.push_back(std::move(*rec));
        } else {
            ++out.malformed_rows;
        }
    }
    if (rows > 0 && out.records.empty())
        throw EmptyDatasetError("scan dataset has " + std::to_string(rows) + " rows but none are well-formed");
    return out;
}

inline ParsedDataset parse_scan_dataset(const std::filesystem::path& path, DatasetFormat format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read scan dataset " + path.string());
    return parse_scan_dataset(in, format);
}

inline std::optional<DatasetFormat> format_from_name(std::string_view name) {
    if (name == "json_lines" || name == "jsonl" || name == "json") return DatasetFormat::json_lines;
    if (name == "csv") return DatasetFormat::csv;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// POP catalog

struct PopLocation {
    std::string city;
    std::string country;
    geo::LatLon position;
};

/// Known Starlink POP codes and where they are. Coordinates are city centers.
class PopCatalog {
public:
    PopCatalog() = default;

    /// The twenty POPs seen on exposed customer services.
    static PopCatalog embedded() {
        PopCatalog c;
        c.add("sttlwax1", {"Seattle", "Washington", {47.6062, -122.3321}});
        c.add("atlagax1", {"Atlanta", "Georgia", {33.7490, -84.3880}});
        c.add("dllstxx1", {"Dallas", "Texas", {32.7767, -96.7970}});
        c.add("chcoilx1", {"Chicago", "Illinois", {41.8781, -87.6298}});
        c.add("lsancax1", {"Los Angeles", "California", {34.0522, -118.2437}});
        c.add("sydyaus1", {"Sydney", "Australia", {-33.8688, 151.2093}});
        c.add("nwyynyx1", {"New York City", "New York", {40.7128, -74.0060}});
        c.add("frntdeu1", {"Frankfurt", "Germany", {50.1109, 8.6821}});
        c.add("dnvrcox1", {"Denver", "Colorado", {39.7392, -104.9903}});
        c.add("lndngbr1", {"Heathrow", "England", {51.4700, -0.4543}});
        c.add("mdrdesp1", {"Madrid", "Spain", {40.4168, -3.7038}});
        c.add("sntoch1", {"Santiago", "Chile", {-33.4489, -70.6693}});
        c.add("acklnzl1", {"Auckland", "New Zealand", {-36.8485, 174.7633}});
        c.add("lgosnga1", {"Lagos", "Nigeria", {6.5244, 3.3792}});
        c.add("bgtacol1", {"Bogata", "Columbia", {4.7110, -74.0721}});
        c.add("limaper1", {"Lima", "Peru", {-12.0464, -77.0428}});
        c.add("prthaus1", {"Perth", "Australia", {-31.9505, 115.8605}});
        c.add("qrtomex1", {"Mexico City", "Mexico", {19.4326, -99.1332}});
        c.add("splobra1", {"San Paulo", "Brazil", {-23.5505, -46.6333}});
        c.add("tkyojpn1", {"Tokyo", "Japan", {35.6762, 139.6503}});
        return c;
    }

    /// CSV with header `pop_code,city,country,lat,lon`. Entries override the
    /// embedded defaults when `merge_with_embedded` is set.
    static PopCatalog load(const std::filesystem::path& path, bool merge_with_embedded = true) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read POP catalog " + path.string());
        PopCatalog c = merge_with_embedded ? embedded() : PopCatalog{};
        std::string line;
        std::size_t lineno = 0;
        std::set<std::string> seen;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            auto f = csv::split(line);
            if (lineno == 1 && !f.empty() && to_lower(f[0]) == "pop_code") continue;
            auto where = path.string() + ":" + std::to_string(lineno);
            if (f.size() != 5) throw ConfigError(where, "expected 5 columns");
            auto lat = csv::parse_double(f[3]);
            auto lon = csv::parse_double(f[4]);
            geo::LatLon pos{lat.value_or(999), lon.value_or(999)};
            if (!lat || !lon || !geo::valid(pos)) throw ConfigError(where, "invalid coordinates");
            auto code = to_lower(f[0]);
            if (!seen.insert(code).second) throw ConfigError(where, "duplicate pop code " + code);
            c.entries_[code] = {f[1], f[2], pos};
        }
        return c;
    }

    void add(std::string code, PopLocation loc) { entries_[to_lower(code)] = std::move(loc); }

    const PopLocation* find(std::string_view code) const {
        auto it = entries_.find(to_lower(code));
        return it == entries_.end() ? nullptr : &it->second;
    }

    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }
    const std::map<std::string, PopLocation>& entries() const noexcept { return entries_; }

private:
    std::map<std::string, PopLocation> entries_;
};

// ---------------------------------------------------------------------------
// Endpoints

enum class EndpointSource { starlink_ptr, oneweb_blocklist };

inline std::string_view to_string(EndpointSource s) {
    return s == EndpointSource::starlink_ptr ? "starlink_ptr" : "oneweb_blocklist";
}

struct Endpoint {
    IpAddress address;
    std::string pop_code;                   // empty for blocklist-derived endpoints
    std::optional<PopLocation> pop;         // absent when pop_code is empty
    std::optional<geo::LatLon> customer_location;
    EndpointSource source = EndpointSource::starlink_ptr;
};

/// Extract the POP code from `customer.<pop>.pop.starlinkisp.net` (whole-name,
/// case-insensitive, optional trailing dot). Returns nullopt for anything else.
inline std::optional<std::string> starlink_customer_pop(std::string_view ptr) {
    std::string name = to_lower(ptr);
    if (!name.empty() && name.back() == '.') name.pop_back();
    constexpr std::string_view prefix = "customer.";
    constexpr std::string_view suffix = ".pop.starlinkisp.net";
    if (name.size() <= prefix.size() + suffix.size()) return std::nullopt;
    if (!name.starts_with(prefix) || !name.ends_with(suffix)) return std::nullopt;
    std::string code = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    if (code.empty()) return std::nullopt;
    for (char c : code)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') return std::nullopt;
    return code;
}

struct CustomerFilterResult {
    std::vector<Endpoint> endpoints;
    /// Matching PTRs whose POP code is not in the catalog: (address, code).
    std::vector<std::pair<IpAddress, std::string>> unknown_pop;
    /// Addresses whose records disagree on the POP code.
    std::vector<IpAddress> ambiguous;
};

inline CustomerFilterResult filter_customer_endpoints(const std::vector<ScanRecord>& records,
                                                      const PopCatalog& catalog) {
    if (catalog.empty()) throw ConfigError("catalog", "POP catalog is empty");

    std::vector<IpAddress> order;
    std::unordered_map<IpAddress, std::set<std::string>> codes;
    for (const auto& r : records) {
        if (!r.ptr_name) continue;
        auto code = starlink_customer_pop(*r.ptr_name);
        if (!code) continue;
        auto [it, inserted] = codes.try_emplace(r.address);
        if (inserted) order.push_back(r.address);
        it->second.insert(*code);
    }

    CustomerFilterResult out;
    for (const auto& addr : order) {
        const auto& set = codes[addr];
        if (set.size() > 1) {
            out.ambiguous.push_back(addr);
            continue;
        }
        const auto& code = *set.begin();
        const auto* loc = catalog.find(code);
        if (!loc) {
            out.unknown_pop.emplace_back(addr, code);
            continue;
        }
        out.endpoints.push_back({addr, code, *loc, std::nullopt, EndpointSource::starlink_ptr});
    }
    return out;
}

struct PepBlocklist {
    std::vector<std::string> tls_name_substrings{"peplink"};

    static PepBlocklist none() { return PepBlocklist{{}}; }
};

struct PepExclusionResult {
    std::vector<Endpoint> endpoints;
    std::size_t removed = 0;
};

inline PepExclusionResult exclude_peps(const std::vector<Endpoint>& endpoints, const std::vector<ScanRecord>& records,
                                       const PepBlocklist& blocklist) {
    std::vector<std::string> needles;
    for (const auto& s : blocklist.tls_name_substrings)
        if (!s.empty()) needles.push_back(to_lower(s));
    if (needles.empty()) return {endpoints, 0};

    std::unordered_map<IpAddress, bool> flagged;
    for (const auto& r : records) {
        for (const auto& name : r.tls_subject_names) {
            auto lower = to_lower(name);
            for (const auto& n : needles)
                if (lower.find(n) != std::string::npos) flagged[r.address] = true;
        }
    }
    PepExclusionResult out;
    for (const auto& e : endpoints) {
        if (flagged.contains(e.address)) {
            ++out.removed;
        } else {
            out.endpoints.push_back(e);
        }
    }
    return out;
}

inline const std::vector<std::string>& default_rir_domains() {
    static const std::vector<std::string> d{"afrinic.net", "arin.net", "apnic.net", "lacnic.net", "ripe.net"};
    return d;
}

struct OneWebFilterResult {
    std::vector<Endpoint> endpoints;
    std::size_t missing_names = 0;     // neither PTR nor SOA
    std::size_t blocked = 0;           // provider or registry domain
};

/// Keep records whose PTR or SOA names exist and mention neither the provider's
/// domains nor a regional Internet registry.
inline OneWebFilterResult filter_oneweb_customers(const std::vector<ScanRecord>& records,
                                                  const std::vector<std::string>& provider_domains,
                                                  const std::vector<std::string>& rir_domains = default_rir_domains()) {
    if (provider_domains.empty()) throw ConfigError("provider_domains", "must not be empty");
    if (rir_domains.empty()) throw ConfigError("rir_domains", "must not be empty");
    std::vector<std::string> blocked;
    for (const auto& d : provider_domains) blocked.push_back(to_lower(d));
    for (const auto& d : rir_domains) blocked.push_back(to_lower(d));

    OneWebFilterResult out;
    std::set<IpAddress> seen;
    for (const auto& r : records) {
        if (!r.ptr_name && !r.soa_name) {
            ++out.missing_names;
            continue;
        }
        bool hit = false;
        for (const auto* name : {&r.ptr_name, &r.soa_name}) {
            if (!*name) continue;
            auto lower = to_lower(**name);
            for (const auto& b : blocked)
                if (lower.find(b) != std::string::npos) hit = true;
        }
        if (hit) {
            ++out.blocked;
            continue;
        }
        if (!seen.insert(r.address).second) continue;
        out.endpoints.push_back({r.address, "", std::nullopt, std::nullopt, EndpointSource::oneweb_blocklist});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Geofeed

struct GeofeedEntry {
    IpPrefix prefix;
    std::string country, region, city;
    std::optional<geo::LatLon> position;
};

/// Self-published geolocation feed: `prefix,country,region,city[,lat,lon]`.
class Geofeed {
public:
    static Geofeed parse(std::istream& in) {
        Geofeed g;
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            auto f = csv::split(line);
            auto prefix = f.empty() ? std::nullopt : IpPrefix::parse(f[0]);
            if (!prefix || f.size() < 4 || f.size() > 6) {
                if (!f.empty() && to_lower(f[0]) == "prefix") continue;
                ++g.skipped_;
                continue;
            }
            GeofeedEntry e{*prefix, f[1], f[2], f[3], std::nullopt};
            if (f.size() == 6 && !f[4].empty() && !f[5].empty()) {
                auto lat = csv::parse_double(f[4]);
                auto lon = csv::parse_double(f[5]);
                if (!lat || !lon || !geo::valid({*lat, *lon})) {
                    ++g.skipped_;
                    continue;
                }
                e.position = geo::LatLon{*lat, *lon};
            } else if (f.size() == 5) {
                ++g.skipped_;
                continue;
            }
            g.entries_.push_back(std::move(e));
        }
        return g;
    }

    static Geofeed load(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read geofeed " + path.string());
        return parse(in);
    }

    /// Longest-prefix match; nullptr when nothing covers `addr`.
    const GeofeedEntry* lookup(const IpAddress& addr) const {
        const GeofeedEntry* best = nullptr;
        for (const auto& e : entries_)
            if (e.prefix.contains(addr) && (!best || e.prefix.length > best->prefix.length)) best = &e;
        return best;
    }

    std::size_t skipped_rows() const noexcept { return skipped_; }
    const std::vector<GeofeedEntry>& entries() const noexcept { return entries_; }

private:
    std::vector<GeofeedEntry> entries_;
    std::size_t skipped_ = 0;
};

inline Endpoint geolocate_customer(Endpoint endpoint, const Geofeed& feed) {
    if (const auto* e = feed.lookup(endpoint.address); e && e->position) endpoint.customer_location = e->position;
    return endpoint;
}

inline Endpoint geolocate_customer(Endpoint endpoint, const std::filesystem::path& geofeed_path) {
    return geolocate_customer(std::move(endpoint), Geofeed::load(geofeed_path));
}

// ---------------------------------------------------------------------------
// Endpoint CSV

inline const std::vector<std::string>& endpoint_csv_header() {
    static const std::vector<std::string> h{"address", "pop_code", "pop_city", "pop_country", "pop_lat",
                                            "pop_lon", "cust_lat", "cust_lon", "source"};
    return h;
}

inline void write_endpoints_csv(std::ostream& os, const std::vector<Endpoint>& endpoints) {
    csv::write_row(os, endpoint_csv_header());
    for (const auto& e : endpoints) {
        std::vector<std::string> row{e.address.to_string(), e.pop_code};
        if (e.pop) {
            row.insert(row.end(), {e.pop->city, e.pop->country, csv::format_double(e.pop->position.lat_deg),
                                   csv::format_double(e.pop->position.lon_deg)});
        } else {
            row.insert(row.end(), {"", "", "", ""});
        }
        if (e.customer_location) {
            row.push_back(csv::format_double(e.customer_location->lat_deg));
            row.push_back(csv::format_double(e.customer_location->lon_deg));
        } else {
            row.insert(row.end(), {"", ""});
        }
        row.emplace_back(to_string(e.source));
        csv::write_row(os, row);
    }
}

inline std::vector<Endpoint> read_endpoints_csv(std::istream& in) {
    std::vector<Endpoint> out;
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto f = csv::split(line);
        bool first = std::exchange(header, false);
        if (first && f[0] == "address") continue;
        auto where = "endpoints:" + std::to_string(lineno);
        if (f.size() != 9) throw ConfigError(where, "expected 9 columns");
        auto addr = IpAddress::parse(f[0]);
        if (!addr) throw ConfigError(where, "invalid address " + f[0]);
        Endpoint e;
        e.address = *addr;
        e.pop_code = f[1];
        if (!f[1].empty()) {
            auto lat = csv::parse_double(f[4]), lon = csv::parse_double(f[5]);
            if (!lat || !lon) throw ConfigError(where, "invalid pop coordinates");
            e.pop = PopLocation{f[2], f[3], {*lat, *lon}};
        }
        if (!f[6].empty() || !f[7].empty()) {
            auto lat = csv::parse_double(f[6]), lon = csv::parse_double(f[7]);
            if (!lat || !lon) throw ConfigError(where, "invalid customer coordinates");
            e.customer_location = geo::LatLon{*lat, *lon};
        }
        e.source = f[8] == "oneweb_blocklist" ? EndpointSource::oneweb_blocklist : EndpointSource::starlink_ptr;
        out.push_back(std::move(e));
    }
    return out;
}

inline std::vector<Endpoint> read_endpoints_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read endpoints " + path.string());
    return read_endpoints_csv(in);
}

} // namespace hitchhike::discovery
