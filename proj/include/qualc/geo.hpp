#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "qualc/calculus.hpp"
#include "qualc/error.hpp"
#include "qualc/network.hpp"
#include "qualc/solver.hpp"
#include "qualc/spec_io.hpp"

namespace qualc {

/// Spherical Mercator radius (meters).
inline constexpr double kEarthRadiusM = 6378137.0;
/// Latitude cutoff beyond which the projection is not accepted.
inline constexpr double kMercatorMaxLatDeg = 85.06;
/// Case-study coverage radius (meters).
inline constexpr double kDefaultCoverageRadiusM = 300.0;
inline constexpr double kDefaultGeometryEpsM = 1e-6;

struct Antenna {
    std::string id;
    double lat = 0.0; // degrees, WGS84
    double lon = 0.0;
};

/// A coverage disk in the projected plane.
struct Region {
    std::string id;
    double x = 0.0; // meters
    double y = 0.0;
    double radius = 0.0;
};

struct Projected {
    double x = 0.0;
    double y = 0.0;
};

/// Spherical Mercator forward projection:
///   x = R * lon_rad,  y = R * ln(tan(pi/4 + lat_rad/2))
inline Projected project_mercator(double lat_deg, double lon_deg) {
    if (!(std::abs(lat_deg) <= kMercatorMaxLatDeg))
        throw Error("latitude " + std::to_string(lat_deg) + " outside the Mercator cutoff of +/-" +
                    std::to_string(kMercatorMaxLatDeg) + " degrees");
    if (!(std::abs(lon_deg) <= 180.0))
        throw Error("longitude " + std::to_string(lon_deg) + " outside [-180, 180]");
    const double lat = lat_deg * std::numbers::pi / 180.0;
    const double lon = lon_deg * std::numbers::pi / 180.0;
    return {kEarthRadiusM * lon, kEarthRadiusM * std::log(std::tan(std::numbers::pi / 4.0 + lat / 2.0))};
}

inline std::pair<double, double> inverse_mercator(double x, double y) {
    const double lon = x / kEarthRadiusM * 180.0 / std::numbers::pi;
    const double lat = (2.0 * std::atan(std::exp(y / kEarthRadiusM)) - std::numbers::pi / 2.0) * 180.0 /
                       std::numbers::pi;
    return {lat, lon};
}

/// Projects an antenna and attaches the coverage radius.
inline Region buffer(const Antenna& antenna, double radius_m) {
    if (!(radius_m > 0.0)) throw Error("coverage radius must be positive");
    Projected p = project_mercator(antenna.lat, antenna.lon);
    return {antenna.id, p.x, p.y, radius_m};
}

enum class De9imClass { Disjoint, Touches, Overlap, CoveredBy, Covers, Equal };

inline const char* de9im_name(De9imClass c) {
    switch (c) {
        case De9imClass::Disjoint: return "disjoint";
        case De9imClass::Touches: return "touches";
        case De9imClass::Overlap: return "overlap";
        case De9imClass::CoveredBy: return "coveredby";
        case De9imClass::Covers: return "covers";
        case De9imClass::Equal: return "equal";
    }
    return "?";
}

/// rcc5 relation name for a topological class: disjoint and touches collapse
/// to dr, overlap is po, coveredby/covers are pp/ppi, equal is eq.
inline const char* rcc5_for_de9im(De9imClass c) {
    switch (c) {
        case De9imClass::Disjoint:
        case De9imClass::Touches: return "dr";
        case De9imClass::Overlap: return "po";
        case De9imClass::CoveredBy: return "pp";
        case De9imClass::Covers: return "ppi";
        case De9imClass::Equal: return "eq";
    }
    return "?";
}

struct SpatialPair {
    std::string a;
    std::string b;
    De9imClass de9im = De9imClass::Disjoint;
    std::string rcc5;
};

/// Exact disk-disk classification with tolerance eps (meters):
///   equal      d <= eps and |r1 - r2| <= eps
///   coveredby  d + r1 <= r2 + eps
///   covers     d + r2 <= r1 + eps
///   touches    |d - (r1 + r2)| <= eps
///   disjoint   d > r1 + r2 + eps
///   overlap    otherwise
inline SpatialPair classify_pair(const Region& a, const Region& b, double eps = kDefaultGeometryEpsM) {
    if (a.id == b.id) throw Error("classify_pair needs two distinct regions (got '" + a.id + "' twice)");
    const double d = std::hypot(a.x - b.x, a.y - b.y);
    const double r1 = a.radius, r2 = b.radius;

    De9imClass cls;
    if (d <= eps && std::abs(r1 - r2) <= eps)
        cls = De9imClass::Equal;
    else if (d + r1 <= r2 + eps)
        cls = De9imClass::CoveredBy;
    else if (d + r2 <= r1 + eps)
        cls = De9imClass::Covers;
    else if (std::abs(d - (r1 + r2)) <= eps)
        cls = De9imClass::Touches;
    else if (d > r1 + r2 + eps)
        cls = De9imClass::Disjoint;
    else
        cls = De9imClass::Overlap;

    return {a.id, b.id, cls, rcc5_for_de9im(cls)};
}

/// The exhaustively classified pair table plus the partial network fed to the
/// solver. Network element i is regions[i]; ids live in element_names.
struct GeoNetwork {
    ConstraintNetwork network;            // known_per_region constraints per region
    std::vector<SpatialPair> pair_table;  // all n(n-1)/2 rows, by pair index
};

/// Classifies every unordered region pair and keeps `known_per_region`
/// constraints per region in the emitted network: each region (in id order)
/// picks its nearest partners, skipping pairs some earlier region already
/// claimed. The pair table always covers all pairs.
inline GeoNetwork build_network(const std::vector<Region>& regions, std::size_t known_per_region,
                                double eps = kDefaultGeometryEpsM) {
    const std::size_t n = regions.size();
    if (n == 0) throw Error("build_network needs at least one region");
    {
        std::set<std::string> ids;
        for (const auto& r : regions)
            if (!ids.insert(r.id).second) throw Error("duplicate region id '" + r.id + "'");
    }

    GeoNetwork out;
    out.network = ConstraintNetwork::with_elements(n);
    for (std::size_t i = 0; i < n; ++i) out.network.element_names[i] = regions[i].id;

    out.pair_table.reserve(Assignment::pair_count(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            out.pair_table.push_back(classify_pair(regions[i], regions[j], eps));

    if (known_per_region == 0 || n < 2) {
        out.network.normalized = false;
        return out;
    }

    auto distance = [&](std::size_t i, std::size_t j) {
        return std::hypot(regions[i].x - regions[j].x, regions[i].y - regions[j].y);
    };

    // deterministic selection: regions in id order pick nearest partners
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return regions[a].id < regions[b].id; });

    std::set<std::pair<std::size_t, std::size_t>> chosen;
    for (std::size_t idx : order) {
        std::vector<std::size_t> partners;
        for (std::size_t j = 0; j < n; ++j)
            if (j != idx) partners.push_back(j);
        std::sort(partners.begin(), partners.end(), [&](std::size_t a, std::size_t b) {
            double da = distance(idx, a), db = distance(idx, b);
            if (da != db) return da < db;
            return regions[a].id < regions[b].id;
        });
        std::size_t kept = 0;
        for (std::size_t j : partners) {
            if (kept == known_per_region) break;
            auto key = std::make_pair(std::min(idx, j), std::max(idx, j));
            if (!chosen.insert(key).second) continue;
            ++kept;
        }
    }

    for (const auto& [i, j] : chosen) {
        const auto& row = out.pair_table[Assignment::pair_index(i, j, n)];
        out.network.add_constraint(i, j, {row.rcc5});
    }
    std::sort(out.network.constraints.begin(), out.network.constraints.end(),
              [](const NetworkConstraint& a, const NetworkConstraint& b) {
                  return a.x != b.x ? a.x < b.x : a.y < b.y;
              });
    return out;
}

/// Overlap graph of a model; arcs are undirected element index pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> build_overlap_graph(
    const Calculus& calc, const Assignment& model, RelationSet overlap) {
    return overlap_arcs(calc, model, overlap);
}

// ---------------------------------------------------------------------------
// Antenna CSV (header: id,lat,lon) and the pair-table CSV
// ---------------------------------------------------------------------------

inline std::vector<Antenna> parse_antenna_csv(std::string_view text) {
    std::vector<Antenna> out;
    std::set<std::string> ids;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string line(text.substr(pos, nl - pos));
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t advance = nl + 1;

        if (!line.empty()) {
            std::vector<std::string> fields;
            std::stringstream ss(line);
            std::string field;
            while (std::getline(ss, field, ',')) {
                // trim surrounding blanks
                std::size_t b = field.find_first_not_of(" \t");
                std::size_t e = field.find_last_not_of(" \t");
                fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
            }
            if (!header_seen) {
                if (fields.size() != 3 || fields[0] != "id" || fields[1] != "lat" || fields[2] != "lon")
                    throw ParseError(lineno, 1, "expected CSV header 'id,lat,lon'", line);
                header_seen = true;
            } else {
                if (fields.size() != 3) throw ParseError(lineno, 1, "expected 3 CSV fields", line);
                Antenna a;
                a.id = fields[0];
                if (a.id.empty()) throw ParseError(lineno, 1, "empty antenna id", line);
                if (!ids.insert(a.id).second)
                    throw ParseError(lineno, 1, "duplicate antenna id '" + a.id + "'", line);
                try {
                    a.lat = std::stod(fields[1]);
                    a.lon = std::stod(fields[2]);
                } catch (const std::exception&) {
                    throw ParseError(lineno, 1, "malformed coordinate", line);
                }
                if (!(a.lat >= -90.0 && a.lat <= 90.0))
                    throw ParseError(lineno, 1, "latitude outside [-90, 90]", fields[1]);
                if (!(a.lon >= -180.0 && a.lon <= 180.0))
                    throw ParseError(lineno, 1, "longitude outside [-180, 180]", fields[2]);
                out.push_back(std::move(a));
            }
        }
        if (nl == text.size()) break;
        pos = advance;
    }
    if (!header_seen) throw ParseError(1, 1, "empty antenna CSV", "");
    return out;
}

inline std::string write_antenna_csv(const std::vector<Antenna>& antennas) {
    std::ostringstream out;
    out << "id,lat,lon\n";
    out.precision(12);
    for (const auto& a : antennas) out << a.id << "," << a.lat << "," << a.lon << "\n";
    return out.str();
}

inline std::string write_pair_table_csv(const std::vector<SpatialPair>& table) {
    std::ostringstream out;
    out << "a,b,de9im,rcc5\n";
    for (const auto& p : table) out << p.a << "," << p.b << "," << de9im_name(p.de9im) << "," << p.rcc5 << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Synthetic datasets
// ---------------------------------------------------------------------------

/// Uniform random antennas in a square box of projected meters, anchored
/// near Los Angeles. box_side_m == 0 picks a density-preserving default of
/// ceil(sqrt(n)) * 800 m, which yields a healthy mix of overlapping and
/// disjoint 300 m disks. Deterministic for a fixed seed.
inline std::vector<Antenna> synthetic_antennas(std::size_t n, std::uint64_t seed,
                                               double box_side_m = 0.0) {
    if (box_side_m <= 0.0)
        box_side_m = std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(n, 1)))) * 800.0;
    const Projected anchor = project_mercator(34.05, -118.25);
    std::mt19937_64 rng(seed);
    auto uniform = [&rng]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53; // [0, 1), bit-stable
    };
    std::vector<Antenna> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double x = anchor.x + uniform() * box_side_m;
        double y = anchor.y + uniform() * box_side_m;
        auto [lat, lon] = inverse_mercator(x, y);
        out.push_back({"a" + std::to_string(i), lat, lon});
    }
    return out;
}

inline std::vector<Region> buffer_all(const std::vector<Antenna>& antennas, double radius_m) {
    std::vector<Region> out;
    out.reserve(antennas.size());
    for (const auto& a : antennas) out.push_back(buffer(a, radius_m));
    return out;
}

} // namespace qualc
