#pragma once

/// \file msa.hpp
/// Construction of the sharded multilevel prototype index.
///
/// The dataset is cut into nNodes balanced shards. Inside a shard, level 0 holds
/// the shard's points; every level above is built by clustering groups of at most
/// gl entries of the level below with k-medoids and promoting np medoids per
/// group. Construction stops at the first level with at most np entries.
///
/// Each upper-level entry owns a contiguous span of children one level below
/// (its cluster, which always contains the medoid itself), so a level is a flat
/// array and the whole shard serialises as ids plus spans.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdasc/dataset.hpp"
#include "pdasc/distance.hpp"
#include "pdasc/error.hpp"
#include "pdasc/kmedoids.hpp"
#include "pdasc/parallel.hpp"
#include "pdasc/random.hpp"

namespace pdasc {

struct BuildParams {
    std::uint32_t n_nodes = 1;
    std::uint32_t gl = 10;
    std::uint32_t np = 3;
    DistanceKind kind = DistanceKind::Euclidean;
    std::uint64_t seed = 42;
    std::uint32_t max_swaps = 100;

    double ratio() const { return static_cast<double>(np) / static_cast<double>(gl); }

    void validate() const {
        if (n_nodes == 0) {
            throw ParameterError("nNodes must be positive");
        }
        if (gl < 2) {
            throw ParameterError("gl must be at least 2");
        }
        if (np == 0 || np >= gl) {
            throw ParameterError("np must satisfy 0 < np < gl (np=" + std::to_string(np) +
                                 ", gl=" + std::to_string(gl) + ")");
        }
        if (max_swaps == 0) {
            throw ParameterError("max_swaps must be positive");
        }
    }

    friend bool operator==(const BuildParams&, const BuildParams&) = default;
};

struct LevelEntry {
    std::uint32_t global_id = 0;
    /// Children in the level below; empty at level 0.
    std::uint32_t child_start = 0;
    std::uint32_t child_len = 0;

    friend bool operator==(const LevelEntry&, const LevelEntry&) = default;
};

using Level = std::vector<LevelEntry>;

struct ShardIndex {
    /// Dataset ids owned by this shard, in shard order.
    std::vector<std::uint32_t> global_ids;
    /// levels[0] are the points; levels.back() is the top.
    std::vector<Level> levels;

    /// Index of the top level (0 when the shard is a single level).
    std::size_t n_levels() const { return levels.empty() ? 0 : levels.size() - 1; }
    const Level& top() const { return levels.back(); }

    std::vector<std::size_t> level_sizes() const {
        std::vector<std::size_t> sizes;
        for (const auto& level : levels) {
            sizes.push_back(level.size());
        }
        return sizes;
    }

    std::size_t total_entries() const {
        std::size_t total = 0;
        for (const auto& level : levels) {
            total += level.size();
        }
        return total;
    }

    friend bool operator==(const ShardIndex&, const ShardIndex&) = default;
};

struct PdascIndex {
    BuildParams params;
    std::uint32_t dataset_size = 0;
    /// Identifies the dataset the index was built from (see dataset_fingerprint()).
    std::uint64_t dataset_fingerprint = 0;
    std::vector<ShardIndex> shards;

    friend bool operator==(const PdascIndex&, const PdascIndex&) = default;
};

struct BuildStats {
    std::vector<std::uint64_t> shard_ndc;

    std::uint64_t total_ndc() const {
        return std::accumulate(shard_ndc.begin(), shard_ndc.end(), std::uint64_t{0});
    }
};

/// Contiguous range of entry positions within a level.
struct GroupSpan {
    std::size_t start = 0;
    std::size_t len = 0;

    friend bool operator==(const GroupSpan&, const GroupSpan&) = default;
};

/// FNV-1a over the dtype, shape and payload of a dataset.
inline std::uint64_t dataset_fingerprint(const Dataset& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](const void* bytes, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    const auto dtype = static_cast<std::uint8_t>(data.dtype());
    const auto n = static_cast<std::uint64_t>(data.size());
    const auto d = static_cast<std::uint64_t>(data.dim());
    mix(&dtype, 1);
    mix(&n, sizeof n);
    mix(&d, sizeof d);
    switch (data.dtype()) {
    case DataType::DenseF32:
        mix(data.dense_values().data(), data.dense_values().size_bytes());
        break;
    case DataType::Bitset:
        mix(data.bitset_bytes().data(), data.bitset_bytes().size_bytes());
        break;
    case DataType::GeoF64:
        mix(data.geo_values().data(), data.geo_values().size_bytes());
        break;
    }
    return h;
}

/// Seeded uniform permutation of 0..n-1 cut into n_nodes chunks whose sizes
/// differ by at most one (the first n % n_nodes chunks get the extra element).
inline std::vector<std::vector<std::uint32_t>> split_shards(std::size_t n, std::uint32_t n_nodes,
                                                            std::uint64_t seed) {
    if (n_nodes == 0) {
        throw ParameterError("nNodes must be positive");
    }
    if (n_nodes > n) {
        throw ParameterError("nNodes=" + std::to_string(n_nodes) + " exceeds dataset size " +
                             std::to_string(n));
    }
    const auto perm = random_permutation(n, seed);
    std::vector<std::vector<std::uint32_t>> shards(n_nodes);
    const std::size_t base = n / n_nodes;
    const std::size_t extra = n % n_nodes;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < n_nodes; ++s) {
        const std::size_t len = base + (s < extra ? 1 : 0);
        shards[s].assign(perm.begin() + static_cast<std::ptrdiff_t>(pos),
                         perm.begin() + static_cast<std::ptrdiff_t>(pos + len));
        pos += len;
    }
    return shards;
}

/// Consecutive slices of gl entries; the last slice holds the remainder.
inline std::vector<GroupSpan> group_points(std::size_t count, std::size_t gl) {
    if (gl < 2) {
        throw ParameterError("gl must be at least 2");
    }
    std::vector<GroupSpan> groups;
    for (std::size_t start = 0; start < count; start += gl) {
        groups.push_back({start, std::min(gl, count - start)});
    }
    return groups;
}

/// Greedy left-to-right packing of consecutive prototype lists into groups of at
/// most gl entries. A list is never split across groups.
inline std::vector<GroupSpan> assemble_upper_groups(std::span<const std::size_t> list_sizes,
                                                    std::size_t gl) {
    std::vector<GroupSpan> groups;
    std::size_t start = 0;
    std::size_t running = 0;
    for (const auto size : list_sizes) {
        if (size == 0 || size > gl) {
            throw ParameterError("prototype list of size " + std::to_string(size) +
                                 " cannot be packed into groups of " + std::to_string(gl));
        }
        if (running + size > gl) {
            groups.push_back({start, running});
            start += running;
            running = 0;
        }
        running += size;
    }
    if (running > 0) {
        groups.push_back({start, running});
    }
    return groups;
}

/// Result of clustering one group: the group's entries reordered cluster by
/// cluster, and one prototype per cluster whose children span is relative to the
/// start of the group.
struct GroupClustering {
    std::vector<LevelEntry> members;
    std::vector<LevelEntry> prototypes;
};

/// Clusters `group` into np prototypes. Groups of at most np entries are promoted
/// verbatim, each entry becoming its own singleton cluster.
inline GroupClustering cluster_group(const Dataset& data, std::span<const LevelEntry> group,
                                     std::uint32_t np, DistanceKind kind,
                                     const KMedoidsOptions& options, DistanceCounter& counter) {
    if (group.empty()) {
        throw ParameterError("cluster_group: empty group");
    }
    GroupClustering out;
    if (group.size() <= np) {
        out.members.assign(group.begin(), group.end());
        for (std::size_t i = 0; i < group.size(); ++i) {
            out.prototypes.push_back({group[i].global_id, static_cast<std::uint32_t>(i), 1});
        }
        return out;
    }

    std::vector<std::uint32_t> ids;
    ids.reserve(group.size());
    for (const auto& e : group) {
        ids.push_back(e.global_id);
    }
    const auto clustering = kmedoids(data, ids, np, kind, counter, options);

    out.members.reserve(group.size());
    for (std::size_t m = 0; m < clustering.medoids.size(); ++m) {
        const auto begin = static_cast<std::uint32_t>(out.members.size());
        for (std::size_t i = 0; i < group.size(); ++i) {
            if (clustering.assignment[i] == m) {
                out.members.push_back(group[i]);
            }
        }
        const auto len = static_cast<std::uint32_t>(out.members.size()) - begin;
        out.prototypes.push_back({group[clustering.medoids[m]].global_id, begin, len});
    }
    return out;
}

/// Builds one shard's hierarchy bottom-up. Groups of one level are clustered
/// independently (in parallel when threads != 1); levels are built in sequence.
inline ShardIndex build_shard_index(const Dataset& data, std::span<const std::uint32_t> shard_ids,
                                    const BuildParams& params, DistanceCounter& counter,
                                    unsigned threads = 1) {
    params.validate();
    if (shard_ids.empty()) {
        throw ParameterError("cannot index an empty shard");
    }
    ShardIndex shard;
    shard.global_ids.assign(shard_ids.begin(), shard_ids.end());
    Level base;
    base.reserve(shard_ids.size());
    for (const auto id : shard_ids) {
        base.push_back({id, 0, 0});
    }
    shard.levels.push_back(std::move(base));

    std::vector<std::size_t> list_sizes;
    while (shard.levels.back().size() > params.np) {
        const std::size_t level_no = shard.levels.size() - 1;
        Level& current = shard.levels.back();

        auto groups = level_no == 0 ? group_points(current.size(), params.gl)
                                    : assemble_upper_groups(list_sizes, params.gl);
        // Packing whole lists can leave every group at or below np (e.g. np > gl/2),
        // which would repeat the same level forever; plain slicing always shrinks it.
        const bool shrinks = std::any_of(groups.begin(), groups.end(),
                                         [&](const GroupSpan& g) { return g.len > params.np; });
        if (!shrinks) {
            groups = group_points(current.size(), params.gl);
        }

        std::vector<GroupClustering> results(groups.size());
        std::vector<DistanceCounter> counters(groups.size());
        parallel_for(groups.size(), threads, [&](std::size_t g) {
            const KMedoidsOptions options{
                mix_seed(params.seed, (static_cast<std::uint64_t>(level_no) << 32) | g),
                params.max_swaps};
            results[g] = cluster_group(
                data, std::span<const LevelEntry>(current).subspan(groups[g].start, groups[g].len),
                params.np, params.kind, options, counters[g]);
        });

        Level next;
        list_sizes.clear();
        for (std::size_t g = 0; g < groups.size(); ++g) {
            counter.add(counters[g].evaluations);
            std::copy(results[g].members.begin(), results[g].members.end(),
                      current.begin() + static_cast<std::ptrdiff_t>(groups[g].start));
            for (auto proto : results[g].prototypes) {
                proto.child_start += static_cast<std::uint32_t>(groups[g].start);
                next.push_back(proto);
            }
            list_sizes.push_back(results[g].prototypes.size());
        }
        shard.levels.push_back(std::move(next));
    }

    // Clustering a level reorders it, which scrambles the spans pointing into it
    // from below. Relay each level out top-down in the order of its parents.
    for (std::size_t l = shard.levels.size() - 1; l >= 1; --l) {
        Level& lower = shard.levels[l - 1];
        Level relaid;
        relaid.reserve(lower.size());
        for (auto& e : shard.levels[l]) {
            const auto start = static_cast<std::uint32_t>(relaid.size());
            relaid.insert(relaid.end(), lower.begin() + e.child_start,
                          lower.begin() + e.child_start + e.child_len);
            e.child_start = start;
        }
        lower = std::move(relaid);
    }
    return shard;
}

/// Splits the dataset and builds every shard. Shards are independent tasks; the
/// result does not depend on `threads`.
inline PdascIndex build_index(const Dataset& data, const BuildParams& params,
                              BuildStats* stats = nullptr, unsigned threads = 1) {
    params.validate();
    data.validate_for(params.kind);
    const auto parts = split_shards(data.size(), params.n_nodes, params.seed);

    PdascIndex index;
    index.params = params;
    index.dataset_size = static_cast<std::uint32_t>(data.size());
    index.dataset_fingerprint = dataset_fingerprint(data);
    index.shards.resize(parts.size());
    std::vector<DistanceCounter> counters(parts.size());

    const unsigned workers = resolve_threads(threads);
    // Spread spare workers over the groups inside each shard.
    const unsigned inner = parts.size() >= workers ? 1u
                                                   : std::max(1u, workers / static_cast<unsigned>(parts.size()));
    parallel_for(parts.size(), workers, [&](std::size_t s) {
        index.shards[s] = build_shard_index(data, parts[s], params, counters[s], inner);
    });

    if (stats != nullptr) {
        stats->shard_ndc.clear();
        for (const auto& c : counters) {
            stats->shard_ndc.push_back(c.evaluations);
        }
    }
    return index;
}

/// Checks every structural invariant of a shard; returns a description of the
/// first violation, or nothing when the shard is well formed.
inline std::optional<std::string> check_shard(const ShardIndex& shard, std::uint32_t np,
                                              std::uint32_t dataset_size) {
    if (shard.levels.empty()) {
        return "shard has no levels";
    }
    const Level& base = shard.levels.front();
    if (base.size() != shard.global_ids.size()) {
        return "level 0 size differs from shard size";
    }
    for (const auto id : shard.global_ids) {
        if (id >= dataset_size) {
            return "shard id " + std::to_string(id) + " outside dataset";
        }
    }
    {
        std::vector<std::uint32_t> a = shard.global_ids;
        std::vector<std::uint32_t> b;
        b.reserve(base.size());
        for (const auto& e : base) {
            if (e.child_len != 0 || e.child_start != 0) {
                return "level 0 entry has children";
            }
            b.push_back(e.global_id);
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        if (a != b) {
            return "level 0 is not a permutation of the shard ids";
        }
        if (std::adjacent_find(a.begin(), a.end()) != a.end()) {
            return "duplicate id in shard";
        }
    }
    for (std::size_t l = 1; l < shard.levels.size(); ++l) {
        const Level& below = shard.levels[l - 1];
        std::size_t expected = 0;
        for (const auto& e : shard.levels[l]) {
            if (e.child_len == 0) {
                return "level " + std::to_string(l) + " entry without children";
            }
            if (e.child_start != expected) {
                return "level " + std::to_string(l) + " children spans are not contiguous";
            }
            if (static_cast<std::size_t>(e.child_start) + e.child_len > below.size()) {
                return "level " + std::to_string(l) + " span out of bounds";
            }
            bool self_found = false;
            for (std::uint32_t c = e.child_start; c < e.child_start + e.child_len; ++c) {
                self_found = self_found || below[c].global_id == e.global_id;
            }
            if (!self_found) {
                return "level " + std::to_string(l) + " prototype is not among its children";
            }
            expected += e.child_len;
        }
        if (expected != below.size()) {
            return "level " + std::to_string(l) + " does not cover level " + std::to_string(l - 1);
        }
    }
    if (shard.top().size() > np) {
        return "top level holds more than np entries";
    }
    return std::nullopt;
}

/// check_shard() on every shard, plus: the shards partition 0..dataset_size-1 and
/// their sizes differ by at most one.
inline std::optional<std::string> check_index(const PdascIndex& index) {
    if (index.shards.size() != index.params.n_nodes) {
        return "shard count differs from nNodes";
    }
    std::vector<char> seen(index.dataset_size, 0);
    std::size_t smallest = index.dataset_size;
    std::size_t largest = 0;
    for (std::size_t s = 0; s < index.shards.size(); ++s) {
        const auto& shard = index.shards[s];
        if (auto problem = check_shard(shard, index.params.np, index.dataset_size)) {
            return "shard " + std::to_string(s) + ": " + *problem;
        }
        for (const auto id : shard.global_ids) {
            if (seen[id]) {
                return "id " + std::to_string(id) + " appears in two shards";
            }
            seen[id] = 1;
        }
        smallest = std::min(smallest, shard.global_ids.size());
        largest = std::max(largest, shard.global_ids.size());
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        return "shards do not cover the dataset";
    }
    if (largest - smallest > 1) {
        return "shard sizes are unbalanced";
    }
    return std::nullopt;
}

/// Global ids of the level-0 entries reachable from the top of the shard.
inline std::vector<std::uint32_t> reachable_leaves(const ShardIndex& shard) {
    std::vector<std::uint32_t> out;
    std::vector<std::pair<std::size_t, std::size_t>> stack;  // (level, position)
    const std::size_t top = shard.levels.size() - 1;
    for (std::size_t i = shard.top().size(); i > 0; --i) {
        stack.emplace_back(top, i - 1);
    }
    while (!stack.empty()) {
        const auto [level, pos] = stack.back();
        stack.pop_back();
        const auto& e = shard.levels[level][pos];
        if (level == 0) {
            out.push_back(e.global_id);
            continue;
        }
        for (std::uint32_t c = e.child_start + e.child_len; c > e.child_start; --c) {
            stack.emplace_back(level - 1, c - 1);
        }
    }
    return out;
}

} // namespace pdasc
