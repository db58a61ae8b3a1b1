#pragma once

/// \file bench.hpp
/// Exact-search oracle, recall, radius selection and the parameter sweep that
/// produces recall / NDC-per-node / index-bytes-per-node tables.

#include <algorithm>
#include <cmath>
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
#include "pdasc/msa.hpp"
#include "pdasc/nsa.hpp"
#include "pdasc/parallel.hpp"
#include "pdasc/random.hpp"
#include "pdasc/storage.hpp"

namespace pdasc {

/// Exact k-NN of every query by linear scan, ranked by (distance, id).
/// Costs exactly |data| evaluations per query.
inline GroundTruth brute_force_knn(const Dataset& data, const Dataset& queries, std::size_t k,
                                   DistanceKind kind, unsigned threads = 1,
                                   std::vector<std::uint64_t>* ndc_per_query = nullptr) {
    if (k == 0 || k > data.size()) {
        throw ParameterError("brute force: need 1 <= k <= n (k=" + std::to_string(k) +
                             ", n=" + std::to_string(data.size()) + ")");
    }
    GroundTruth gt;
    gt.k = k;
    gt.rows.resize(queries.size());
    std::vector<std::uint64_t> ndc(queries.size(), 0);
    parallel_for(queries.size(), threads, [&](std::size_t q) {
        DistanceCounter counter;
        const Point query = queries.point(q);
        std::vector<Neighbour> all(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) {
            all[i] = {static_cast<std::uint32_t>(i), evaluate(kind, query, data.point(i), counter)};
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                          neighbour_less);
        all.resize(k);
        gt.rows[q] = std::move(all);
        ndc[q] = counter.evaluations;
    });
    if (ndc_per_query != nullptr) {
        *ndc_per_query = std::move(ndc);
    }
    return gt;
}

/// |result ∩ truth| / k, looking at no more than the first k results.
inline double recall_at_k(std::span<const std::uint32_t> result, std::span<const std::uint32_t> truth,
                          std::size_t k) {
    if (k == 0) {
        throw ParameterError("recall: k must be positive");
    }
    std::vector<std::uint32_t> expected(truth.begin(), truth.begin() + std::min(k, truth.size()));
    std::sort(expected.begin(), expected.end());
    std::vector<std::uint32_t> got(result.begin(), result.begin() + std::min(k, result.size()));
    std::sort(got.begin(), got.end());
    got.erase(std::unique(got.begin(), got.end()), got.end());
    std::size_t hits = 0;
    for (const auto id : got) {
        hits += std::binary_search(expected.begin(), expected.end(), id) ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

inline std::vector<std::uint32_t> ids_of(std::span<const Neighbour> neighbours) {
    std::vector<std::uint32_t> ids;
    ids.reserve(neighbours.size());
    for (const auto& nb : neighbours) {
        ids.push_back(nb.id);
    }
    return ids;
}

/// Empirical q-quantile (linear interpolation) of the distance between random
/// unordered pairs of distinct points. All pairs are used when there are no more
/// than `sample_pairs` of them, so q = 1 then gives the maximum pairwise distance.
inline double radius_from_quantile(const Dataset& data, DistanceKind kind, double q,
                                   std::size_t sample_pairs = 10000, std::uint64_t seed = 42) {
    if (!(q > 0.0 && q <= 1.0)) {
        throw ParameterError("quantile must lie in (0, 1]");
    }
    if (data.size() < 2) {
        throw ParameterError("radius estimation needs at least two points");
    }
    if (sample_pairs == 0) {
        throw ParameterError("sample_pairs must be positive");
    }
    const std::size_t n = data.size();
    DistanceCounter counter;
    std::vector<double> dists;
    const std::uint64_t total_pairs = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    if (total_pairs <= sample_pairs) {
        dists.reserve(total_pairs);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                dists.push_back(evaluate(kind, data.point(i), data.point(j), counter));
            }
        }
    } else {
        Rng rng(seed);
        dists.reserve(sample_pairs);
        for (std::size_t s = 0; s < sample_pairs; ++s) {
            const auto i = static_cast<std::size_t>(rng.below(n));
            auto j = static_cast<std::size_t>(rng.below(n - 1));
            if (j >= i) {
                ++j;
            }
            dists.push_back(evaluate(kind, data.point(i), data.point(j), counter));
        }
    }
    std::sort(dists.begin(), dists.end());
    const double pos = q * static_cast<double>(dists.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, dists.size() - 1);
    return dists[lo] + (pos - static_cast<double>(lo)) * (dists[hi] - dists[lo]);
}

struct TrainTestSplit {
    std::vector<std::uint32_t> train;
    std::vector<std::uint32_t> queries;
};

/// Seeded disjoint split; both id lists come back sorted.
inline TrainTestSplit train_test_split(std::size_t n, std::size_t n_queries, std::uint64_t seed) {
    if (n_queries >= n) {
        throw ParameterError("need fewer queries (" + std::to_string(n_queries) +
                             ") than points (" + std::to_string(n) + ")");
    }
    auto perm = random_permutation(n, seed);
    TrainTestSplit split;
    split.queries.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_queries));
    split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_queries), perm.end());
    std::sort(split.queries.begin(), split.queries.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

/// np for a target np/gl ratio: round(ratio * gl) clamped to [1, gl - 1].
inline std::uint32_t derive_np(double ratio, std::uint32_t gl) {
    const auto np = static_cast<long long>(std::llround(ratio * static_cast<double>(gl)));
    return static_cast<std::uint32_t>(std::clamp<long long>(np, 1, static_cast<long long>(gl) - 1));
}

/// Absolute radius, or a quantile of the pairwise distance distribution.
struct RadiusSpec {
    enum class Type { Absolute, Quantile };
    Type type = Type::Absolute;
    double value = kUnboundedRadius;

    static RadiusSpec absolute(double r) { return {Type::Absolute, r}; }
    static RadiusSpec quantile(double q) { return {Type::Quantile, q}; }
};

struct SweepGrid {
    std::vector<double> ratios{0.02, 0.05, 0.1, 0.2, 0.33, 0.5};
    std::vector<std::uint32_t> gl_values{50};
    std::vector<std::uint32_t> n_nodes_values{1, 3, 5, 10};
    std::vector<RadiusSpec> radii{RadiusSpec::quantile(0.25)};
    std::size_t k = 10;

    void validate() const {
        if (ratios.empty() || gl_values.empty() || n_nodes_values.empty() || radii.empty()) {
            throw ParameterError("sweep grid has an empty axis");
        }
        for (const double r : ratios) {
            if (!(r > 0.0 && r < 1.0)) {
                throw ParameterError("ratios must lie in (0, 1)");
            }
        }
        for (const auto gl : gl_values) {
            if (gl < 2) {
                throw ParameterError("gl values must be at least 2");
            }
        }
        for (const auto n : n_nodes_values) {
            if (n == 0) {
                throw ParameterError("nNodes values must be positive");
            }
        }
        for (const auto& r : radii) {
            if (r.type == RadiusSpec::Type::Quantile ? !(r.value > 0.0 && r.value <= 1.0)
                                                     : !(r.value >= 0.0)) {
                throw ParameterError("invalid radius specification");
            }
        }
        if (k == 0) {
            throw ParameterError("k must be positive");
        }
    }
};

struct SweepConfig {
    std::string dataset_name = "dataset";
    DistanceKind kind = DistanceKind::Euclidean;
    std::uint64_t seed = 42;
    std::uint32_t max_swaps = 100;
    std::size_t sample_pairs = 10000;
    unsigned threads = 1;
};

/// Per-(node) aggregates of a batch of query outcomes.
struct NodeLoad {
    double mean_ndc_per_node = 0.0;
    double max_ndc_per_node = 0.0;
};

/// Average NDC per query of every node, then the mean and max over nodes.
inline NodeLoad node_load(std::span<const QueryOutcome> outcomes, std::size_t n_shards) {
    NodeLoad load;
    if (outcomes.empty() || n_shards == 0) {
        return load;
    }
    std::vector<double> per_node(n_shards, 0.0);
    for (const auto& o : outcomes) {
        for (std::size_t s = 0; s < n_shards; ++s) {
            per_node[s] += static_cast<double>(o.per_shard_ndc[s]);
        }
    }
    double sum = 0.0;
    for (auto& v : per_node) {
        v /= static_cast<double>(outcomes.size());
        sum += v;
        load.max_ndc_per_node = std::max(load.max_ndc_per_node, v);
    }
    load.mean_ndc_per_node = sum / static_cast<double>(n_shards);
    return load;
}

inline double mean_recall(std::span<const QueryOutcome> outcomes, const GroundTruth& truth,
                          std::size_t k) {
    if (outcomes.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (std::size_t q = 0; q < outcomes.size(); ++q) {
        total += recall_at_k(ids_of(outcomes[q].neighbours), ids_of(truth.rows[q]), k);
    }
    return total / static_cast<double>(outcomes.size());
}

/// Builds one index per (nNodes, gl, ratio) cell and queries it at every radius.
/// Rows follow grid order (nNodes, then gl, then ratio, then radius) and do not
/// depend on config.threads.
inline std::vector<SweepRow> run_sweep(const Dataset& train, const Dataset& queries,
                                       const SweepGrid& grid, const SweepConfig& config) {
    grid.validate();
    train.validate_for(config.kind);
    queries.validate_for(config.kind);
    if (queries.empty()) {
        throw ParameterError("sweep needs at least one query");
    }
    const GroundTruth truth = brute_force_knn(train, queries, grid.k, config.kind, config.threads);

    std::vector<double> radii;
    for (const auto& spec : grid.radii) {
        radii.push_back(spec.type == RadiusSpec::Type::Absolute
                            ? spec.value
                            : radius_from_quantile(train, config.kind, spec.value,
                                                   config.sample_pairs, config.seed));
    }

    std::vector<SweepRow> rows;
    for (const auto n_nodes : grid.n_nodes_values) {
        for (const auto gl : grid.gl_values) {
            for (const double ratio : grid.ratios) {
                BuildParams params;
                params.n_nodes = n_nodes;
                params.gl = gl;
                params.np = derive_np(ratio, gl);
                params.kind = config.kind;
                params.seed = config.seed;
                params.max_swaps = config.max_swaps;
                const PdascIndex index = build_index(train, params, nullptr, config.threads);

                double bytes_sum = 0.0;
                std::size_t bytes_max = 0;
                for (const auto& shard : index.shards) {
                    const auto b = shard_serialized_bytes(shard);
                    bytes_sum += static_cast<double>(b);
                    bytes_max = std::max(bytes_max, b);
                }

                for (const double r : radii) {
                    SearchParams sp;
                    sp.k = grid.k;
                    sp.radius = r;
                    const auto outcomes = batch_search(index, train, queries, sp, config.threads);
                    const auto load = node_load(outcomes, index.shards.size());

                    SweepRow row;
                    row.dataset = config.dataset_name;
                    row.distance = std::string(to_string(config.kind));
                    row.n_nodes = n_nodes;
                    row.gl = gl;
                    row.np = params.np;
                    row.ratio = params.ratio();
                    row.radius = r;
                    row.k = static_cast<std::uint32_t>(grid.k);
                    row.recall = mean_recall(outcomes, truth, grid.k);
                    row.mean_ndc_per_node = load.mean_ndc_per_node;
                    row.max_ndc_per_node = load.max_ndc_per_node;
                    row.mean_index_bytes_per_node = bytes_sum / static_cast<double>(index.shards.size());
                    row.max_index_bytes_per_node = bytes_max;
                    row.n_queries = static_cast<std::uint32_t>(queries.size());
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

} // namespace pdasc
