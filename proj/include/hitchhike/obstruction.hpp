#pragma once

#include "hitchhike/analysis.hpp"
#include "hitchhike/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace hitchhike::obstruction {

/// One dish obstruction snapshot: per sky cell, the fraction of successful
/// connections seen in that direction so far.
struct ObstructionMap {
    double timestamp_s = 0.0;
    int rows = 0;
    int cols = 0;
    std::vector<float> cells; // row-major

    ObstructionMap() = default;
    ObstructionMap(double t, int r, int c, float fill = 0.0F)
        : timestamp_s(t), rows(r), cols(c), cells(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    float& at(int r, int c) { return cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
    float at(int r, int c) const { return cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)]; }
};

struct Cell {
    int row = 0;
    int col = 0;
    bool operator==(const Cell&) const = default;
};

inline int chebyshev(const Cell& a, const Cell& b) noexcept {
    return std::max(std::abs(a.row - b.row), std::abs(a.col - b.col));
}

inline constexpr double kDefaultEpsilon = 0.05;

/// Cell whose value grew the most since `previous`, if that growth exceeds
/// `epsilon`. Ties go to the first cell in row-major order.
inline std::optional<Cell> diff_maps(const ObstructionMap& current, const ObstructionMap& previous,
                                     double epsilon = kDefaultEpsilon) {
    if (current.rows != previous.rows || current.cols != previous.cols || current.cells.size() != previous.cells.size())
        throw IncompatibleMapsError("obstruction maps differ in shape: " + std::to_string(current.rows) + "x" +
                                    std::to_string(current.cols) + " vs " + std::to_string(previous.rows) + "x" +
                                    std::to_string(previous.cols));
    if (!(current.timestamp_s > previous.timestamp_s))
        throw IncompatibleMapsError("obstruction maps are not in time order");
    std::optional<Cell> best;
    double best_diff = epsilon;
    for (int r = 0; r < current.rows; ++r)
        for (int c = 0; c < current.cols; ++c) {
            double d = static_cast<double>(current.at(r, c)) - static_cast<double>(previous.at(r, c));
            if (d > best_diff) {
                best_diff = d;
                best = Cell{r, c};
            }
        }
    return best;
}

struct TrackPoint {
    double timestamp_s = 0.0;
    Cell cell;
};

struct SatTrack {
    std::vector<TrackPoint> points;
    std::vector<double> gaps; // frame timestamps where no cell changed
};

inline SatTrack build_track(const std::vector<ObstructionMap>& maps, double epsilon = kDefaultEpsilon) {
    if (maps.size() < 2) throw InsufficientDataError("a track needs at least two obstruction maps");
    SatTrack track;
    for (std::size_t i = 1; i < maps.size(); ++i) {
        if (auto cell = diff_maps(maps[i], maps[i - 1], epsilon)) {
            track.points.push_back({maps[i].timestamp_s, *cell});
        } else {
            track.gaps.push_back(maps[i].timestamp_s);
        }
    }
    return track;
}

struct SwitchEvent {
    double at_s = 0.0;
    Cell from;
    Cell to;
    int displacement_cells = 0;
};

inline constexpr int kDefaultNeighborRadius = 2;

/// A jump to a cell that does not neighbour the previous position means the
/// dish moved to a different satellite.
inline std::vector<SwitchEvent> detect_switches(const SatTrack& track, int neighbor_radius_cells = kDefaultNeighborRadius) {
    if (neighbor_radius_cells < 0) throw ConfigError("neighbor_radius_cells", "must be non-negative");
    std::vector<SwitchEvent> out;
    for (std::size_t i = 1; i < track.points.size(); ++i) {
        const auto& a = track.points[i - 1];
        const auto& b = track.points[i];
        int d = chebyshev(a.cell, b.cell);
        if (d > neighbor_radius_cells) out.push_back({b.timestamp_s, a.cell, b.cell, d});
    }
    return out;
}

struct SpikeSwitchMatch {
    std::size_t spike_index = 0;
    std::size_t switch_index = 0;
};

struct Correlation {
    std::size_t sustained_total = 0;
    std::size_t sustained_without_switch = 0;
    std::size_t standard_total = 0;
    std::size_t standard_without_switch = 0;
    std::vector<SpikeSwitchMatch> matches; // each spike with its nearest switch inside the window

    /// Share of spikes of a kind that began with no switch nearby (same satellite).
    std::optional<double> sustained_fraction() const {
        if (sustained_total == 0) return std::nullopt;
        return static_cast<double>(sustained_without_switch) / static_cast<double>(sustained_total);
    }
    std::optional<double> standard_fraction() const {
        if (standard_total == 0) return std::nullopt;
        return static_cast<double>(standard_without_switch) / static_cast<double>(standard_total);
    }
};

inline Correlation correlate_spikes(const std::vector<SwitchEvent>& switches,
                                    const std::vector<analysis::SpikeEvent>& spikes, double window_s = 15.0) {
    Correlation c;
    for (std::size_t i = 0; i < spikes.size(); ++i) {
        double start = static_cast<double>(spikes[i].start_ms) / 1000.0;
        std::optional<std::size_t> nearest;
        double best = window_s;
        for (std::size_t k = 0; k < switches.size(); ++k) {
            double d = std::abs(switches[k].at_s - start);
            if (d <= best) {
                if (!nearest || d < best) nearest = k;
                best = d;
            }
        }
        bool sustained = spikes[i].kind == analysis::SpikeKind::sustained;
        (sustained ? c.sustained_total : c.standard_total) += 1;
        if (nearest) {
            c.matches.push_back({i, *nearest});
        } else {
            (sustained ? c.sustained_without_switch : c.standard_without_switch) += 1;
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Frame container
//
//   "OBSM" | u32 version | u32 rows | u32 cols | u32 frames
//   frames x ( f64 timestamp_s | rows*cols f32 row-major )
// All integers and floats little-endian.

inline constexpr std::uint32_t kContainerVersion = 1;

namespace detail {

template <class T>
void put(std::ostream& os, T v) {
    static_assert(std::endian::native == std::endian::little, "container I/O assumes a little-endian host");
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& in) {
    char buf[sizeof(T)];
    if (!in.read(buf, sizeof(T))) throw IoError("truncated obstruction container");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

} // namespace detail

inline void write_frames(std::ostream& os, const std::vector<ObstructionMap>& maps) {
    int rows = maps.empty() ? 0 : maps.front().rows;
    int cols = maps.empty() ? 0 : maps.front().cols;
    os.write("OBSM", 4);
    detail::put<std::uint32_t>(os, kContainerVersion);
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(rows));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(cols));
    detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(maps.size()));
    for (const auto& m : maps) {
        if (m.rows != rows || m.cols != cols) throw IncompatibleMapsError("all frames of a recording share one shape");
        detail::put<double>(os, m.timestamp_s);
        for (float v : m.cells) detail::put<float>(os, v);
    }
}

inline std::vector<ObstructionMap> read_frames(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "OBSM", 4) != 0) throw IoError("not an obstruction container");
    auto version = detail::get<std::uint32_t>(in);
    if (version != kContainerVersion) throw IoError("unsupported obstruction container version " + std::to_string(version));
    auto rows = detail::get<std::uint32_t>(in);
    auto cols = detail::get<std::uint32_t>(in);
    auto frames = detail::get<std::uint32_t>(in);
    if (rows > 4096 || cols > 4096) throw IoError("implausible obstruction map shape");
    std::vector<ObstructionMap> maps;
    maps.reserve(frames);
    for (std::uint32_t f = 0; f < frames; ++f) {
        ObstructionMap m(detail::get<double>(in), static_cast<int>(rows), static_cast<int>(cols));
        for (auto& v : m.cells) {
            v = detail::get<float>(in);
            if (!(v >= 0.0F && v <= 1.0F)) throw IoError("obstruction cell value outside [0, 1]");
        }
        maps.push_back(std::move(m));
    }
    return maps;
}

inline void save_frames(const std::filesystem::path& path, const std::vector<ObstructionMap>& maps) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    write_frames(os, maps);
}

inline std::vector<ObstructionMap> load_frames(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    return read_frames(in);
}

inline void write_track_csv(std::ostream& os, const SatTrack& t) {
    os << "timestamp_s,row,col\n";
    std::size_t g = 0;
    for (const auto& p : t.points) {
        while (g < t.gaps.size() && t.gaps[g] < p.timestamp_s) os << csv::format_double(t.gaps[g++]) << ",,\n";
        os << csv::format_double(p.timestamp_s) << ',' << p.cell.row << ',' << p.cell.col << '\n';
    }
    while (g < t.gaps.size()) os << csv::format_double(t.gaps[g++]) << ",,\n";
}

inline void write_switches_csv(std::ostream& os, const std::vector<SwitchEvent>& s, int neighbor_radius) {
    os << "at_s,from_row,from_col,to_row,to_col,displacement_cells,neighbor_radius\n";
    for (const auto& e : s)
        os << csv::format_double(e.at_s) << ',' << e.from.row << ',' << e.from.col << ',' << e.to.row << ','
           << e.to.col << ',' << e.displacement_cells << ',' << neighbor_radius << '\n';
}

} // namespace hitchhike::obstruction
