// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "../oracles.hpp"
#include "pdasc/pdasc.hpp"

using namespace pdasc;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

BuildParams make_params(std::uint32_t nodes, std::uint32_t gl, std::uint32_t np, DistanceKind kind) {
    BuildParams p;
    p.n_nodes = nodes;
    p.gl = gl;
    p.np = np;
    p.kind = kind;
    return p;
}

// Exact agreement of unbounded-radius search with the full-sort oracle over the
// (nNodes, gl, ratio) cells used by criteria 1 and 10.
std::string oracle_mismatch(const Dataset& data, const Dataset& queries, DistanceKind kind) {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> truth;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        truth.push_back(oracle::knn(data, queries.point(q), 10, kind));
    }
    for (std::uint32_t nodes : {1u, 3u}) {
        for (std::uint32_t gl : {10u, 50u}) {
            for (double ratio : {0.1, 0.33}) {
                const auto params = make_params(nodes, gl, derive_np(ratio, gl), kind);
                const auto index = build_index(data, params);
                SearchParams sp;
                sp.k = 10;
                const auto outcomes = batch_search(index, data, queries, sp);
                for (std::size_t q = 0; q < queries.size(); ++q) {
                    const auto& got = outcomes[q].neighbours;
                    bool same = got.size() == truth[q].size();
                    for (std::size_t i = 0; same && i < got.size(); ++i) {
                        same = got[i].id == truth[q][i].first && got[i].distance == truth[q][i].second;
                    }
                    if (!same) {
                        return fmt("%s nNodes=%u gl=%u ratio=%.2f query %zu differs",
                                   std::string(to_string(kind)).c_str(), nodes, gl, ratio, q);
                    }
                }
            }
        }
    }
    return {};
}

Verdict criterion_oracle_equivalence() {
    struct Case {
        const char* name;
        DistanceKind kind;
        Dataset data;
        Dataset queries;
    };
    const std::vector<Case> cases = {
        {"euclidean-d16", DistanceKind::Euclidean, synthetic::uniform_dense(2000, 16, 101),
         synthetic::uniform_dense(50, 16, 102)},
        {"cosine-d16", DistanceKind::Cosine, synthetic::uniform_dense(2000, 16, 103),
         synthetic::uniform_dense(50, 16, 104)},
        {"jaccard-64", DistanceKind::Jaccard, synthetic::random_bitsets(2000, 64, 0.3, 105),
         synthetic::random_bitsets(50, 64, 0.3, 106)},
        {"haversine", DistanceKind::Haversine, synthetic::random_geo(2000, 107, -80, 80, -180, 180),
         synthetic::random_geo(50, 108, -80, 80, -180, 180)},
        // Integer lattice: many exact distance ties exercise the (distance, id) order.
        {"euclidean-lattice", DistanceKind::Euclidean, synthetic::lattice_dense(2000, 4, 4, 109),
         synthetic::lattice_dense(50, 4, 4, 110)},
    };
    for (const auto& c : cases) {
        if (auto problem = oracle_mismatch(c.data, c.queries, c.kind); !problem.empty()) {
            return {false, std::string(c.name) + ": " + problem};
        }
    }
    return {true, "5 datasets x 8 cells x 50 queries identical to brute force"};
}

Verdict criterion_radius_monotonicity() {
    const auto all = synthetic::gaussian_clusters(3050, 16, {}, 21);
    const auto split = train_test_split(all.size(), 50, 22);
    const auto data = all.subset(split.train);
    const auto queries = all.subset(split.queries);
    const auto index = build_index(data, make_params(2, 30, 8, DistanceKind::Euclidean));
    const auto truth = brute_force_knn(data, queries, 10, DistanceKind::Euclidean);

    std::vector<double> ladder;
    for (double q : {0.01, 0.05, 0.15, 0.3, 0.6, 1.0}) {
        ladder.push_back(radius_from_quantile(data, DistanceKind::Euclidean, q));
    }
    for (std::size_t q = 0; q < queries.size(); ++q) {
        std::set<std::uint32_t> prev_ids;
        std::uint64_t prev_ndc = 0;
        double prev_recall = 0.0;
        for (const double r : ladder) {
            SearchParams sp;
            sp.k = data.size();
            sp.radius = r;
            const auto out = search(index, data, queries.point(q), sp);
            std::set<std::uint32_t> ids;
            for (const auto& nb : out.neighbours) ids.insert(nb.id);
            std::vector<std::uint32_t> top;
            for (std::size_t i = 0; i < std::min<std::size_t>(10, out.neighbours.size()); ++i) {
                top.push_back(out.neighbours[i].id);
            }
            const double rec = recall_at_k(top, ids_of(truth.rows[q]), 10);
            if (!std::includes(ids.begin(), ids.end(), prev_ids.begin(), prev_ids.end())) {
                return {false, fmt("query %zu: candidates at r=%g do not contain the smaller set", q, r)};
            }
            if (out.total_ndc() < prev_ndc) {
                return {false, fmt("query %zu: NDC fell at r=%g", q, r)};
            }
            if (rec < prev_recall) {
                return {false, fmt("query %zu: recall fell at r=%g", q, r)};
            }
            prev_ids = std::move(ids);
            prev_ndc = out.total_ndc();
            prev_recall = rec;
        }
    }
    return {true, "50 queries x 6 radii: nested candidates, monotone NDC and recall"};
}

Verdict criterion_structure() {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(800);
        const auto gl = static_cast<std::uint32_t>(2 + rng.below(60));
        const auto np = static_cast<std::uint32_t>(1 + rng.below(gl - 1));
        const auto nodes = static_cast<std::uint32_t>(1 + rng.below(std::min<std::size_t>(n, 8)));
        const auto data = synthetic::uniform_dense(n, 3, 1000 + static_cast<std::uint64_t>(trial));
        auto params = make_params(nodes, gl, np, DistanceKind::Euclidean);
        params.seed = rng.next();
        const auto index = build_index(data, params);
        const auto where = fmt("trial %d (n=%zu gl=%u np=%u nNodes=%u)", trial, n, gl, np, nodes);
        if (auto problem = check_index(index)) {
            return {false, where + ": " + *problem};
        }
        for (const auto& shard : index.shards) {
            auto leaves = reachable_leaves(shard);
            std::sort(leaves.begin(), leaves.end());
            auto ids = shard.global_ids;
            std::sort(ids.begin(), ids.end());
            if (leaves != ids) {
                return {false, where + ": leaves not covered exactly once"};
            }
            if (shard.top().size() > np) {
                return {false, where + ": top level exceeds np"};
            }
        }
        if (decode_index(encode_index(index)) != index) {
            return {false, where + ": serialization round trip differs"};
        }
    }
    return {true, "100 random configurations"};
}

Verdict criterion_topology() {
    const auto data = synthetic::uniform_dense(32, 2, 41);
    const auto index = build_index(data, make_params(1, 10, 3, DistanceKind::Euclidean));
    const auto sizes = index.shards[0].level_sizes();
    const std::vector<std::size_t> expected{32, 11, 5, 3};
    std::string shown;
    for (auto s : sizes) shown += std::to_string(s) + " ";
    return {sizes == expected, "level sizes " + shown};
}

struct ClusteredCase {
    Dataset train;
    Dataset queries;
    GroundTruth truth;
    double radius = 0.0;
};

const ClusteredCase& clustered() {
    static const ClusteredCase c = [] {
        ClusteredCase out;
        const auto all = synthetic::gaussian_clusters(20100, 32, {}, 7);
        const auto split = train_test_split(all.size(), 100, 11);
        out.train = all.subset(split.train);
        out.queries = all.subset(split.queries);
        out.truth = brute_force_knn(out.train, out.queries, 10, DistanceKind::Euclidean);
        out.radius = radius_from_quantile(out.train, DistanceKind::Euclidean, 0.25);
        return out;
    }();
    return c;
}

struct CellResult {
    double recall = 0.0;
    double mean_ndc = 0.0;
    std::size_t max_bytes = 0;
};

CellResult run_cell(std::uint32_t nodes, double ratio) {
    const auto& c = clustered();
    const auto index =
        build_index(c.train, make_params(nodes, 60, derive_np(ratio, 60), DistanceKind::Euclidean));
    SearchParams sp;
    sp.k = 10;
    sp.radius = c.radius;
    const auto outcomes = batch_search(index, c.train, c.queries, sp);
    CellResult r;
    r.recall = mean_recall(outcomes, c.truth, 10);
    r.mean_ndc = node_load(outcomes, index.shards.size()).mean_ndc_per_node;
    for (const auto& shard : index.shards) {
        r.max_bytes = std::max(r.max_bytes, shard_serialized_bytes(shard));
    }
    return r;
}

Verdict criterion_recall_target() {
    const auto r = run_cell(1, 0.33);
    const double n = static_cast<double>(clustered().train.size());
    const bool pass = r.recall >= 0.85 && r.mean_ndc <= 0.6 * n;
    return {pass, fmt("recall@10=%.4f (>=0.85), NDC/query=%.0f = %.3f n (<=0.6 n), r=%.4f", r.recall,
                      r.mean_ndc, r.mean_ndc / n, clustered().radius)};
}

Verdict criterion_ratio_shape() {
    const auto low = run_cell(1, 0.02);
    const auto high = run_cell(1, 0.5);
    const bool pass = low.recall >= high.recall && low.mean_ndc >= high.mean_ndc;
    return {pass, fmt("ratio 0.02: recall=%.4f NDC=%.0f; ratio 0.5: recall=%.4f NDC=%.0f", low.recall,
                      low.mean_ndc, high.recall, high.mean_ndc)};
}

Verdict criterion_distribution() {
    std::vector<CellResult> cells;
    std::string detail;
    for (std::uint32_t nodes : {1u, 3u, 5u, 10u}) {
        cells.push_back(run_cell(nodes, 0.33));
        detail += fmt("nNodes=%u bytes=%zu ndc=%.0f; ", nodes, cells.back().max_bytes, cells.back().mean_ndc);
    }
    bool pass = true;
    for (std::size_t i = 1; i < cells.size(); ++i) {
        pass = pass && cells[i].max_bytes < cells[i - 1].max_bytes;
        pass = pass && cells[i].mean_ndc <= 1.05 * cells[i - 1].mean_ndc;
    }
    return {pass, detail};
}

Verdict criterion_kmedoids() {
    Rng rng(81);
    int over_bound = 0;
    double worst = 1.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng.below(7);
        const std::size_t k = 1 + rng.below(std::min<std::size_t>(3, n));
        std::vector<std::pair<double, double>> pts(n);
        for (auto& p : pts) p = {rng.normal(), rng.normal()};
        const auto d = [&](std::size_t i, std::size_t j) {
            return std::hypot(pts[i].first - pts[j].first, pts[i].second - pts[j].second);
        };
        const auto got = kmedoids(n, d, k);
        const auto best = oracle::exhaustive_kmedoids(n, k, d);
        if (got.total_deviation > 1.05 * best.deviation + 1e-12) {
            ++over_bound;
            worst = std::max(worst, got.total_deviation / best.deviation);
        }
        for (std::size_t i = 1; i < got.deviation_trace.size(); ++i) {
            if (!(got.deviation_trace[i] < got.deviation_trace[i - 1])) {
                return {false, fmt("trial %d: swap %zu did not reduce deviation", trial, i)};
            }
        }
        std::set<std::size_t> distinct(got.medoids.begin(), got.medoids.end());
        if (got.medoids.size() != k || distinct.size() != k || *distinct.rbegin() >= n) {
            return {false, fmt("trial %d: medoids are not k distinct members", trial)};
        }
    }
    return {over_bound == 0,
            fmt("%d of 200 instances above 1.05x the exhaustive optimum (worst %.3fx); swap traces "
                "strictly decreasing, medoids distinct members",
                over_bound, worst)};
}

Verdict criterion_determinism() {
    const auto& c = clustered();
    SweepGrid grid;
    grid.ratios = {0.02, 0.33, 0.5};
    grid.gl_values = {60};
    grid.n_nodes_values = {1, 3};
    grid.radii = {RadiusSpec::quantile(0.25)};
    SweepConfig config;
    config.dataset_name = "clusters20k";
    config.threads = 1;
    const auto serial = format_results_csv(run_sweep(c.train, c.queries, grid, config));
    config.threads = std::max(4u, std::thread::hardware_concurrency());
    const auto parallel = format_results_csv(run_sweep(c.train, c.queries, grid, config));
    return {serial == parallel, fmt("1 thread vs %u threads, %zu CSV bytes", config.threads, serial.size())};
}

Verdict criterion_geo() {
    const auto data = synthetic::random_geo(1000, 91);
    const auto queries = synthetic::random_geo(50, 92);
    if (auto problem = oracle_mismatch(data, queries, DistanceKind::Haversine); !problem.empty()) {
        return {false, problem};
    }
    const double got = haversine({40.4168, -3.7038}, {41.3874, 2.1686});
    const double expected = oracle::great_circle_km(40.4168, -3.7038, 41.3874, 2.1686);
    return {std::abs(got - expected) <= 0.1,
            fmt("oracle equivalent; Madrid-Barcelona %.3f km vs %.3f km", got, expected)};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
        {"1 oracle equivalence", criterion_oracle_equivalence},
        {"2 radius monotonicity", criterion_radius_monotonicity},
        {"3 structural invariants", criterion_structure},
        {"4 reference topology", criterion_topology},
        {"5 recall target", criterion_recall_target},
        {"6 ratio shape", criterion_ratio_shape},
        {"7 load distribution", criterion_distribution},
        {"8 k-medoids correctness", criterion_kmedoids},
        {"9 determinism under parallelism", criterion_determinism},
        {"10 geo check", criterion_geo},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s: %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str(), secs);
        std::fflush(stdout);
        failures += v.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
