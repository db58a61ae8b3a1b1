#pragma once

/// \file synthetic.hpp
/// Seeded generators for test and benchmark data.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pdasc/dataset.hpp"
#include "pdasc/random.hpp"

namespace pdasc::synthetic {

/// Components uniform in [lo, hi). Rows are never all-zero, so the result is
/// also valid for cosine.
inline Dataset uniform_dense(std::size_t n, std::size_t dim, std::uint64_t seed, double lo = -1.0,
                             double hi = 1.0) {
    Rng rng(seed);
    std::vector<float> values(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        bool nonzero = false;
        while (!nonzero) {
            for (std::size_t j = 0; j < dim; ++j) {
                const auto v = static_cast<float>(lo + (hi - lo) * rng.uniform());
                values[i * dim + j] = v;
                nonzero = nonzero || v != 0.0f;
            }
        }
    }
    return Dataset::dense(dim, std::move(values));
}

/// Integer-valued components in [0, levels); produces many exactly tied distances.
inline Dataset lattice_dense(std::size_t n, std::size_t dim, std::size_t levels, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> values(n * dim);
    for (auto& v : values) {
        v = static_cast<float>(rng.below(levels));
    }
    return Dataset::dense(dim, std::move(values));
}

struct ClusterSpec {
    std::size_t clusters = 50;
    /// Clusters are grouped into this many super-clusters, so the data has
    /// structure at two scales.
    std::size_t super_clusters = 5;
    double super_spread = 2.0;
    double center_spread = 2.0;
    double point_spread = 1.0;
};

/// Isotropic Gaussian clusters whose centres are themselves scattered around a
/// few super-cluster centres. Point i belongs to cluster i % clusters.
inline Dataset gaussian_clusters(std::size_t n, std::size_t dim, const ClusterSpec& spec,
                                 std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> supers(spec.super_clusters * dim);
    for (auto& v : supers) {
        v = spec.super_spread * rng.normal();
    }
    std::vector<double> centres(spec.clusters * dim);
    for (std::size_t c = 0; c < spec.clusters; ++c) {
        const std::size_t s = c % spec.super_clusters;
        for (std::size_t j = 0; j < dim; ++j) {
            centres[c * dim + j] = supers[s * dim + j] + spec.center_spread * rng.normal();
        }
    }
    std::vector<float> values(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = i % spec.clusters;
        for (std::size_t j = 0; j < dim; ++j) {
            values[i * dim + j] =
                static_cast<float>(centres[c * dim + j] + spec.point_spread * rng.normal());
        }
    }
    return Dataset::dense(dim, std::move(values));
}

/// Each bit set independently with probability `density`.
inline Dataset random_bitsets(std::size_t n, std::size_t bits, double density, std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t stride = (bits + 7) / 8;
    std::vector<std::uint8_t> packed(n * stride, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < bits; ++j) {
            if (rng.uniform() < density) {
                packed[i * stride + j / 8] |= static_cast<std::uint8_t>(1u << (j % 8));
            }
        }
    }
    return Dataset::bitset(bits, std::move(packed));
}

/// Points inside a lat/lon box (defaults roughly cover mainland Spain).
inline Dataset random_geo(std::size_t n, std::uint64_t seed, double lat_lo = 36.0,
                          double lat_hi = 43.8, double lon_lo = -9.3, double lon_hi = 3.3) {
    Rng rng(seed);
    std::vector<double> values(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        values[2 * i] = lat_lo + (lat_hi - lat_lo) * rng.uniform();
        values[2 * i + 1] = lon_lo + (lon_hi - lon_lo) * rng.uniform();
    }
    return Dataset::geo(std::move(values));
}

} // namespace pdasc::synthetic
