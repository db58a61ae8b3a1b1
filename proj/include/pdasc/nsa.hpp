#pragma once

/// \file nsa.hpp
/// Radius-pruned top-down search over every shard, followed by a merge and an
/// exact ranking of the pooled level-0 candidates.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "pdasc/dataset.hpp"
#include "pdasc/distance.hpp"
#include "pdasc/error.hpp"
#include "pdasc/msa.hpp"
#include "pdasc/parallel.hpp"

namespace pdasc {

inline constexpr double kUnboundedRadius = std::numeric_limits<double>::infinity();

struct SearchParams {
    std::size_t k = 10;
    /// Pruning radius in the units of the index's distance; +inf disables pruning.
    double radius = kUnboundedRadius;

    void validate() const {
        if (k == 0) {
            throw ParameterError("k must be positive");
        }
        if (!(radius >= 0.0)) {
            throw ParameterError("radius must be non-negative");
        }
    }
};

struct Neighbour {
    std::uint32_t id = 0;
    double distance = 0.0;

    friend bool operator==(const Neighbour&, const Neighbour&) = default;
};

/// Ranking order: distance ascending, then id ascending.
inline bool neighbour_less(const Neighbour& a, const Neighbour& b) {
    if (a.distance != b.distance) {
        return a.distance < b.distance;
    }
    return a.id < b.id;
}

struct QueryOutcome {
    std::vector<Neighbour> neighbours;
    std::vector<std::uint64_t> per_shard_ndc;
    std::size_t candidates_examined = 0;

    std::uint64_t total_ndc() const {
        return std::accumulate(per_shard_ndc.begin(), per_shard_ndc.end(), std::uint64_t{0});
    }

    friend bool operator==(const QueryOutcome&, const QueryOutcome&) = default;
};

/// Level-0 candidates of one shard, in depth-first order, each with the distance
/// computed while descending. Every prototype reached is evaluated (and counted)
/// again at each level it appears on.
inline std::vector<Neighbour> search_shard(const ShardIndex& shard, const Dataset& data,
                                           const Point& query, double radius, DistanceKind kind,
                                           DistanceCounter& counter) {
    std::vector<Neighbour> candidates;
    struct Frame {
        std::size_t level;
        std::uint32_t begin;
        std::uint32_t end;
    };
    // Children of a surviving entry are evaluated together, then survivors are
    // expanded in order; the explicit stack keeps that order without recursion.
    std::vector<Frame> stack;
    std::vector<std::uint32_t> survivors;
    stack.push_back({shard.levels.size() - 1, 0, static_cast<std::uint32_t>(shard.top().size())});

    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        const Level& level = shard.levels[frame.level];
        survivors.clear();
        for (std::uint32_t pos = frame.begin; pos < frame.end; ++pos) {
            const double d = evaluate(kind, query, data.point(level[pos].global_id), counter);
            if (d <= radius) {
                if (frame.level == 0) {
                    candidates.push_back({level[pos].global_id, d});
                } else {
                    survivors.push_back(pos);
                }
            }
        }
        for (auto it = survivors.rbegin(); it != survivors.rend(); ++it) {
            const auto& e = level[*it];
            stack.push_back({frame.level - 1, e.child_start, e.child_start + e.child_len});
        }
    }
    return candidates;
}

/// k-ANN query against every shard. Shards run concurrently when threads != 1;
/// the outcome does not depend on it.
inline QueryOutcome search(const PdascIndex& index, const Dataset& data, const Point& query,
                           const SearchParams& params, unsigned threads = 1) {
    params.validate();
    const std::size_t n_shards = index.shards.size();
    std::vector<std::vector<Neighbour>> pools(n_shards);
    std::vector<DistanceCounter> counters(n_shards);
    parallel_for(n_shards, threads, [&](std::size_t s) {
        pools[s] = search_shard(index.shards[s], data, query, params.radius, index.params.kind,
                                counters[s]);
    });

    QueryOutcome outcome;
    std::vector<Neighbour> merged;
    for (std::size_t s = 0; s < n_shards; ++s) {
        outcome.per_shard_ndc.push_back(counters[s].evaluations);
        merged.insert(merged.end(), pools[s].begin(), pools[s].end());
    }
    outcome.candidates_examined = merged.size();
    std::sort(merged.begin(), merged.end(), neighbour_less);
    for (std::size_t i = 1; i < merged.size(); ++i) {
        if (merged[i].id == merged[i - 1].id && merged[i].distance == merged[i - 1].distance) {
            throw Error("shard candidate pools overlap on id " + std::to_string(merged[i].id));
        }
    }
    merged.resize(std::min(merged.size(), params.k));
    outcome.neighbours = std::move(merged);
    return outcome;
}

/// One outcome per row of `queries`, in order. Queries run concurrently.
inline std::vector<QueryOutcome> batch_search(const PdascIndex& index, const Dataset& data,
                                              const Dataset& queries, const SearchParams& params,
                                              unsigned threads = 1) {
    params.validate();
    std::vector<QueryOutcome> outcomes(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t q) {
        outcomes[q] = search(index, data, queries.point(q), params, 1);
    });
    return outcomes;
}

} // namespace pdasc
