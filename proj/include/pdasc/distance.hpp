#pragma once

/// \file distance.hpp
/// Dissimilarity functions and the evaluation counter (NDC).
///
/// All arithmetic is carried out in double precision regardless of the storage
/// type of the operands. Nothing downstream relies on the triangle inequality,
/// so any of these kinds (or a non-metric one) can drive the index.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>

#include "pdasc/error.hpp"

namespace pdasc {

enum class DistanceKind : std::uint8_t {
    Euclidean = 0,
    Cosine = 1,
    Jaccard = 2,
    Haversine = 3,
};

inline constexpr double kEarthRadiusKm = 6371.0;

inline std::string_view to_string(DistanceKind kind) {
    switch (kind) {
    case DistanceKind::Euclidean: return "euclidean";
    case DistanceKind::Cosine: return "cosine";
    case DistanceKind::Jaccard: return "jaccard";
    case DistanceKind::Haversine: return "haversine";
    }
    return "unknown";
}

inline DistanceKind parse_distance_kind(std::string_view name) {
    if (name == "euclidean") return DistanceKind::Euclidean;
    if (name == "cosine") return DistanceKind::Cosine;
    if (name == "jaccard") return DistanceKind::Jaccard;
    if (name == "haversine") return DistanceKind::Haversine;
    throw ParameterError("unknown distance '" + std::string(name) + "'");
}

/// Packed bit vector: bit j lives in byte j/8 at position j%8, LSB first.
/// Bits past `bits` in the last byte are ignored.
struct BitsetView {
    std::span<const std::uint8_t> bytes;
    std::size_t bits = 0;
};

/// Latitude and longitude in degrees.
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;
};

/// A borrowed view of one object of any supported data type.
using Point = std::variant<std::span<const float>, BitsetView, GeoPoint>;

/// Number of distance evaluations. Owned by one execution context at a time;
/// parallel tasks keep their own counter and the totals are summed at the join.
struct DistanceCounter {
    std::uint64_t evaluations = 0;

    void add(std::uint64_t n) { evaluations += n; }
};

template <typename A, typename B>
double euclidean(std::span<const A> a, std::span<const B> b) {
    if (a.size() != b.size()) {
        throw DimensionError("euclidean: arity " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        sum += diff * diff;
    }
    return std::sqrt(sum);
}

/// 1 - cos(a, b), in [0, 2].
template <typename A, typename B>
double cosine_distance(std::span<const A> a, std::span<const B> b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine: arity " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i];
        const double y = b[i];
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        throw DomainError("cosine: zero-norm vector");
    }
    const double sim = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
    // Rounding can push |sim| slightly past 1.
    return 1.0 - std::clamp(sim, -1.0, 1.0);
}

/// 1 - |a & b| / |a | b|; two empty sets are identical (distance 0).
inline double jaccard_distance(const BitsetView& a, const BitsetView& b) {
    if (a.bits != b.bits || a.bytes.size() != b.bytes.size()) {
        throw DimensionError("jaccard: arity " + std::to_string(a.bits) + " vs " +
                             std::to_string(b.bits));
    }
    std::uint64_t inter = 0;
    std::uint64_t uni = 0;
    const std::size_t full = a.bits / 8;
    for (std::size_t i = 0; i < full; ++i) {
        inter += std::popcount(static_cast<unsigned>(a.bytes[i] & b.bytes[i]));
        uni += std::popcount(static_cast<unsigned>(a.bytes[i] | b.bytes[i]));
    }
    if (const std::size_t tail = a.bits % 8; tail != 0) {
        const unsigned mask = (1u << tail) - 1u;
        inter += std::popcount(static_cast<unsigned>(a.bytes[full] & b.bytes[full]) & mask);
        uni += std::popcount(static_cast<unsigned>(a.bytes[full] | b.bytes[full]) & mask);
    }
    if (uni == 0) {
        return 0.0;
    }
    return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

inline bool valid_geo(const GeoPoint& p) {
    return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

/// Great-circle distance in kilometres on a sphere of radius kEarthRadiusKm.
inline double haversine(const GeoPoint& a, const GeoPoint& b) {
    if (!valid_geo(a) || !valid_geo(b)) {
        throw DomainError("haversine: coordinates out of range");
    }
    constexpr double to_rad = std::numbers::pi / 180.0;
    const double phi1 = a.lat * to_rad;
    const double phi2 = b.lat * to_rad;
    const double dphi = (b.lat - a.lat) * to_rad;
    const double dlambda = (b.lon - a.lon) * to_rad;
    const double s1 = std::sin(dphi / 2.0);
    const double s2 = std::sin(dlambda / 2.0);
    const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

/// Computes d(a, b) for the given kind and counts one evaluation.
inline double evaluate(DistanceKind kind, const Point& a, const Point& b,
                       DistanceCounter& counter) {
    double result = 0.0;
    switch (kind) {
    case DistanceKind::Euclidean:
    case DistanceKind::Cosine: {
        const auto* x = std::get_if<std::span<const float>>(&a);
        const auto* y = std::get_if<std::span<const float>>(&b);
        if (x == nullptr || y == nullptr) {
            throw DomainError(std::string(to_string(kind)) + " requires dense vectors");
        }
        result = kind == DistanceKind::Euclidean ? euclidean(*x, *y) : cosine_distance(*x, *y);
        break;
    }
    case DistanceKind::Jaccard: {
        const auto* x = std::get_if<BitsetView>(&a);
        const auto* y = std::get_if<BitsetView>(&b);
        if (x == nullptr || y == nullptr) {
            throw DomainError("jaccard requires bitset vectors");
        }
        result = jaccard_distance(*x, *y);
        break;
    }
    case DistanceKind::Haversine: {
        const auto* x = std::get_if<GeoPoint>(&a);
        const auto* y = std::get_if<GeoPoint>(&b);
        if (x == nullptr || y == nullptr) {
            throw DomainError("haversine requires geo points");
        }
        result = haversine(*x, *y);
        break;
    }
    }
    counter.add(1);
    return result;
}

} // namespace pdasc
