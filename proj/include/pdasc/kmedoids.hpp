#pragma once

/// \file kmedoids.hpp
/// Classical k-medoids (PAM: greedy BUILD followed by best-improvement SWAP)
/// over an arbitrary dissimilarity. Medoids are always members of the input.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pdasc/dataset.hpp"
#include "pdasc/distance.hpp"
#include "pdasc/error.hpp"

namespace pdasc {

/// Dense symmetric n x n dissimilarity table. Only pairs i < j are evaluated.
class DissimilarityMatrix {
public:
    DissimilarityMatrix() = default;

    template <typename DistFn>
    static DissimilarityMatrix compute(std::size_t n, DistFn&& dist) {
        DissimilarityMatrix m;
        m.n_ = n;
        m.values_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double d = dist(i, j);
                m.values_[i * n + j] = d;
                m.values_[j * n + i] = d;
            }
        }
        return m;
    }

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }

private:
    std::size_t n_ = 0;
    std::vector<double> values_;
};

struct ClusteringResult {
    /// Positions into the input group, in medoid-position order.
    std::vector<std::size_t> medoids;
    /// For each input point, the position (0..k-1) of its medoid.
    std::vector<std::size_t> assignment;
    double total_deviation = 0.0;
    /// Deviation after BUILD, then after every accepted swap.
    std::vector<double> deviation_trace;
};

struct KMedoidsOptions {
    /// Accepted for reproducibility of the call signature. Every tie is resolved by
    /// index order, so the result does not depend on it.
    std::uint64_t seed = 0;
    std::size_t max_swaps = 100;
};

namespace detail {

inline double assign_to_medoids(const DissimilarityMatrix& d, std::span<const std::size_t> medoids,
                                std::vector<std::size_t>& assignment) {
    const std::size_t n = d.size();
    std::vector<std::ptrdiff_t> medoid_pos(n, -1);
    for (std::size_t m = 0; m < medoids.size(); ++m) {
        medoid_pos[medoids[m]] = static_cast<std::ptrdiff_t>(m);
    }
    assignment.assign(n, 0);
    double total = 0.0;
    for (std::size_t o = 0; o < n; ++o) {
        if (medoid_pos[o] >= 0) {
            // A medoid belongs to its own cluster even when a duplicate medoid ties at 0.
            assignment[o] = static_cast<std::size_t>(medoid_pos[o]);
            continue;
        }
        std::size_t best = 0;
        double best_d = d(o, medoids[0]);
        for (std::size_t m = 1; m < medoids.size(); ++m) {
            const double dm = d(o, medoids[m]);
            if (dm < best_d) {
                best_d = dm;
                best = m;
            }
        }
        assignment[o] = best;
        total += best_d;
    }
    return total;
}

inline double deviation_of(const DissimilarityMatrix& d, std::span<const std::size_t> medoids) {
    double total = 0.0;
    for (std::size_t o = 0; o < d.size(); ++o) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto m : medoids) {
            best = std::min(best, d(o, m));
        }
        total += best;
    }
    return total;
}

} // namespace detail

/// PAM on a precomputed dissimilarity table.
inline ClusteringResult pam(const DissimilarityMatrix& d, std::size_t k, std::size_t max_swaps = 100) {
    const std::size_t n = d.size();
    if (k == 0) {
        throw ParameterError("k-medoids: k must be positive");
    }
    if (k > n) {
        throw ParameterError("k-medoids: k=" + std::to_string(k) + " exceeds group size " +
                             std::to_string(n));
    }
    constexpr double inf = std::numeric_limits<double>::infinity();

    ClusteringResult result;
    std::vector<char> is_medoid(n, 0);
    std::vector<double> nearest(n, inf);

    // BUILD: first medoid minimises total deviation.
    {
        std::size_t best = 0;
        double best_sum = inf;
        for (std::size_t x = 0; x < n; ++x) {
            double sum = 0.0;
            for (std::size_t o = 0; o < n; ++o) {
                sum += d(o, x);
            }
            if (sum < best_sum) {
                best_sum = sum;
                best = x;
            }
        }
        result.medoids.push_back(best);
        is_medoid[best] = 1;
        for (std::size_t o = 0; o < n; ++o) {
            nearest[o] = d(o, best);
        }
    }
    // BUILD: each further medoid gives the largest decrease in deviation.
    while (result.medoids.size() < k) {
        std::size_t best = n;
        double best_gain = -1.0;
        for (std::size_t x = 0; x < n; ++x) {
            if (is_medoid[x]) {
                continue;
            }
            double gain = 0.0;
            for (std::size_t o = 0; o < n; ++o) {
                const double diff = nearest[o] - d(o, x);
                if (diff > 0.0) {
                    gain += diff;
                }
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = x;
            }
        }
        result.medoids.push_back(best);
        is_medoid[best] = 1;
        for (std::size_t o = 0; o < n; ++o) {
            nearest[o] = std::min(nearest[o], d(o, best));
        }
    }

    double total = detail::deviation_of(d, result.medoids);
    result.deviation_trace.push_back(total);

    // SWAP: apply the single best exchange while it strictly lowers the deviation.
    std::vector<std::size_t> near_pos(n);
    std::vector<double> near_d(n);
    std::vector<double> second_d(n);
    for (std::size_t swaps = 0; swaps < max_swaps && k < n; ++swaps) {
        for (std::size_t o = 0; o < n; ++o) {
            double d1 = inf;
            double d2 = inf;
            std::size_t p1 = 0;
            for (std::size_t m = 0; m < k; ++m) {
                const double dm = d(o, result.medoids[m]);
                if (dm < d1) {
                    d2 = d1;
                    d1 = dm;
                    p1 = m;
                } else if (dm < d2) {
                    d2 = dm;
                }
            }
            near_pos[o] = p1;
            near_d[o] = d1;
            second_d[o] = d2;
        }

        double best_delta = 0.0;
        std::size_t best_pos = k;
        std::size_t best_x = n;
        for (std::size_t x = 0; x < n; ++x) {
            if (is_medoid[x]) {
                continue;
            }
            const auto to_x = d.row(x);
            for (std::size_t m = 0; m < k; ++m) {
                double delta = 0.0;
                for (std::size_t o = 0; o < n; ++o) {
                    const double dx = to_x[o];
                    if (near_pos[o] == m) {
                        delta += std::min(dx, second_d[o]) - near_d[o];
                    } else if (dx < near_d[o]) {
                        delta += dx - near_d[o];
                    }
                }
                if (best_x == n || delta < best_delta) {
                    best_delta = delta;
                    best_pos = m;
                    best_x = x;
                }
            }
        }
        if (best_x == n || !(best_delta < -1e-12 * total)) {
            break;
        }

        const std::size_t old = result.medoids[best_pos];
        result.medoids[best_pos] = best_x;
        const double updated = detail::deviation_of(d, result.medoids);
        if (!(updated < total)) {
            result.medoids[best_pos] = old;
            break;
        }
        is_medoid[old] = 0;
        is_medoid[best_x] = 1;
        total = updated;
        result.deviation_trace.push_back(total);
    }

    result.total_deviation = detail::assign_to_medoids(d, result.medoids, result.assignment);
    return result;
}

/// Generic entry point: `dist(i, j)` returns the dissimilarity of group members i and j.
template <typename DistFn>
ClusteringResult kmedoids(std::size_t group_size, DistFn&& dist, std::size_t k,
                          const KMedoidsOptions& options = {}) {
    if (k == 0 || k > group_size) {
        throw ParameterError("k-medoids: need 1 <= k <= |group| (k=" + std::to_string(k) +
                             ", |group|=" + std::to_string(group_size) + ")");
    }
    if (options.max_swaps == 0) {
        throw ParameterError("k-medoids: max_swaps must be positive");
    }
    return pam(DissimilarityMatrix::compute(group_size, dist), k, options.max_swaps);
}

/// k-medoids over dataset rows `group`; positions in the result index into `group`.
inline ClusteringResult kmedoids(const Dataset& data, std::span<const std::uint32_t> group,
                                 std::size_t k, DistanceKind kind, DistanceCounter& counter,
                                 const KMedoidsOptions& options = {}) {
    return kmedoids(
        group.size(),
        [&](std::size_t i, std::size_t j) {
            return evaluate(kind, data.point(group[i]), data.point(group[j]), counter);
        },
        k, options);
}

/// Maps every point to its nearest medoid (ties go to the lowest medoid position).
/// Counts exactly |points| * |medoids| evaluations.
inline std::vector<std::size_t> assign(const Dataset& data, std::span<const std::uint32_t> points,
                                       std::span<const std::uint32_t> medoids, DistanceKind kind,
                                       DistanceCounter& counter) {
    if (medoids.empty()) {
        throw ParameterError("assign: no medoids");
    }
    std::vector<std::size_t> out(points.size(), 0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        const Point p = data.point(points[i]);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m = 0; m < medoids.size(); ++m) {
            const double dm = evaluate(kind, p, data.point(medoids[m]), counter);
            if (dm < best) {
                best = dm;
                out[i] = m;
            }
        }
    }
    return out;
}

} // namespace pdasc
