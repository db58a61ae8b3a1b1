// pdasc: build, query and benchmark PDASC indexes from the command line.
//
// Exit status: 0 on success, 2 for usage or validation errors (bad flags, bad
// input data, incompatible files), 1 for anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pdasc/pdasc.hpp"

namespace {

using namespace pdasc;

struct Common {
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

std::string join_sizes(const std::vector<std::size_t>& sizes) {
    std::string out = "[";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        out += (i ? "," : "") + std::to_string(sizes[i]);
    }
    return out + "]";
}

DistanceKind distance_flag(const std::string& s) { return parse_distance_kind(s); }

double radius_flag(const std::string& s) {
    try {
        return io::parse_real(s);
    } catch (const FormatError&) {
        throw ParameterError("--radius: not a number: '" + s + "'");
    }
}

// ------------------------------------------------------------------ convert

struct ConvertArgs {
    std::string input;
    std::string output;
    std::string dtype = "f32";
};

int run_convert(const ConvertArgs& a) {
    const DataType dtype = parse_data_type(a.dtype);
    const Dataset data = import_csv(a.input, dtype);
    save_dataset(a.output, data);
    std::cout << "rows " << data.size() << " dim " << data.dim() << " dtype " << to_string(dtype)
              << "\n";
    return 0;
}

// ----------------------------------------------------------------- generate

struct GenerateArgs {
    std::string shape = "clusters";
    std::size_t n = 10000;
    std::size_t dim = 32;
    std::size_t clusters = 50;
    double density = 0.2;
    std::string output;
};

int run_generate(const GenerateArgs& a, const Common& c) {
    if (a.n == 0) {
        throw ParameterError("--n must be positive");
    }
    Dataset data;
    if (a.shape == "clusters") {
        synthetic::ClusterSpec spec;
        spec.clusters = a.clusters;
        data = synthetic::gaussian_clusters(a.n, a.dim, spec, c.seed);
    } else if (a.shape == "uniform") {
        data = synthetic::uniform_dense(a.n, a.dim, c.seed);
    } else if (a.shape == "bitset") {
        data = synthetic::random_bitsets(a.n, a.dim, a.density, c.seed);
    } else if (a.shape == "geo") {
        data = synthetic::random_geo(a.n, c.seed);
    } else {
        throw ParameterError("unknown shape '" + a.shape + "'");
    }
    save_dataset(a.output, data);
    std::cout << "rows " << data.size() << " dim " << data.dim() << " dtype "
              << to_string(data.dtype()) << "\n";
    return 0;
}

// -------------------------------------------------------------------- build

struct BuildArgs {
    std::string data;
    std::string distance = "euclidean";
    std::uint32_t n_nodes = 1;
    std::uint32_t gl = 50;
    std::uint32_t np = 17;
    std::uint32_t max_swaps = 100;
    std::string output;
};

int run_build(const BuildArgs& a, const Common& c) {
    BuildParams params;
    params.kind = distance_flag(a.distance);
    params.n_nodes = a.n_nodes;
    params.gl = a.gl;
    params.np = a.np;
    params.seed = c.seed;
    params.max_swaps = a.max_swaps;
    params.validate();

    const Dataset data = load_dataset(a.data);
    data.validate_for(params.kind);
    BuildStats stats;
    const PdascIndex index = build_index(data, params, &stats, c.threads);
    save_index(a.output, index);

    std::cout << "shards " << index.shards.size() << " points " << data.size() << " distance "
              << to_string(params.kind) << "\n";
    for (std::size_t s = 0; s < index.shards.size(); ++s) {
        const auto& shard = index.shards[s];
        std::cout << "shard " << s << " levels " << join_sizes(shard.level_sizes()) << " bytes "
                  << shard_serialized_bytes(shard) << " build_ndc " << stats.shard_ndc[s] << "\n";
    }
    std::cout << "build_ndc_total " << stats.total_ndc() << "\n";
    return 0;
}

// ----------------------------------------------------------------------- gt

struct GtArgs {
    std::string data;
    std::string queries;
    std::size_t k = 10;
    std::string distance = "euclidean";
    std::string output;
};

int run_gt(const GtArgs& a, const Common& c) {
    const DistanceKind kind = distance_flag(a.distance);
    if (a.k == 0) {
        throw ParameterError("--k must be positive");
    }
    const Dataset data = load_dataset(a.data, kind);
    const Dataset queries = load_dataset(a.queries, kind);
    const GroundTruth gt = brute_force_knn(data, queries, a.k, kind, c.threads);
    save_ground_truth(a.output, gt);
    std::cout << "queries " << gt.rows.size() << " k " << gt.k << "\n";
    return 0;
}

// -------------------------------------------------------------------- query

struct QueryArgs {
    std::string index;
    std::string data;
    std::string queries;
    std::size_t k = 10;
    std::string radius = "inf";
    std::optional<double> quantile;
    std::size_t sample_pairs = 10000;
    bool json = false;
};

int run_query(const QueryArgs& a, const Common& c) {
    SearchParams sp;
    sp.k = a.k;
    if (!a.quantile) {
        sp.radius = radius_flag(a.radius);
    } else if (!(*a.quantile > 0.0 && *a.quantile <= 1.0)) {
        throw ParameterError("--radius-quantile must lie in (0, 1]");
    }
    sp.validate();

    const Dataset data = load_dataset(a.data);
    const PdascIndex index = load_index(a.index, data);
    const DistanceKind kind = index.params.kind;
    const Dataset queries = load_dataset(a.queries, kind);
    data.validate_for(kind);
    if (a.quantile) {
        sp.radius = radius_from_quantile(data, kind, *a.quantile, a.sample_pairs, c.seed);
    }

    const auto outcomes = batch_search(index, data, queries, sp, c.threads);
    if (a.json) {
        for (std::size_t q = 0; q < outcomes.size(); ++q) {
            nlohmann::json rec;
            rec["query"] = q;
            rec["radius"] = io::exact_real(sp.radius);
            rec["neighbours"] = nlohmann::json::array();
            for (const auto& nb : outcomes[q].neighbours) {
                rec["neighbours"].push_back({{"id", nb.id}, {"distance", nb.distance}});
            }
            rec["shard_ndc"] = outcomes[q].per_shard_ndc;
            rec["ndc"] = outcomes[q].total_ndc();
            std::cout << rec.dump() << "\n";
        }
    } else {
        std::cout << "radius " << io::exact_real(sp.radius) << "\n";
        for (std::size_t q = 0; q < outcomes.size(); ++q) {
            std::cout << "query " << q << " ndc";
            for (const auto n : outcomes[q].per_shard_ndc) {
                std::cout << ' ' << n;
            }
            std::cout << " |";
            for (const auto& nb : outcomes[q].neighbours) {
                std::cout << ' ' << nb.id << ':' << io::exact_real(nb.distance);
            }
            std::cout << "\n";
        }
    }
    return 0;
}

// -------------------------------------------------------------------- sweep

struct SweepArgs {
    std::string data;
    std::string name;
    std::string distance = "euclidean";
    std::vector<double> ratios{0.02, 0.05, 0.1, 0.2, 0.33, 0.5};
    std::vector<std::uint32_t> gl_list{50};
    std::vector<std::uint32_t> n_nodes_list{1, 3, 5, 10};
    std::vector<std::string> radii;
    std::vector<double> quantiles;
    std::size_t k = 10;
    std::size_t n_queries = 100;
    std::size_t sample_pairs = 10000;
    std::uint32_t max_swaps = 100;
    std::string output;
};

int run_sweep_cmd(const SweepArgs& a, const Common& c) {
    SweepGrid grid;
    grid.ratios = a.ratios;
    grid.gl_values = a.gl_list;
    grid.n_nodes_values = a.n_nodes_list;
    grid.k = a.k;
    grid.radii.clear();
    for (const auto& r : a.radii) {
        grid.radii.push_back(RadiusSpec::absolute(radius_flag(r)));
    }
    for (const double q : a.quantiles) {
        grid.radii.push_back(RadiusSpec::quantile(q));
    }
    if (grid.radii.empty()) {
        grid.radii.push_back(RadiusSpec::quantile(0.25));
    }
    grid.validate();

    SweepConfig config;
    config.kind = distance_flag(a.distance);
    config.seed = c.seed;
    config.threads = c.threads;
    config.max_swaps = a.max_swaps;
    config.sample_pairs = a.sample_pairs;
    config.dataset_name =
        a.name.empty() ? std::filesystem::path(a.data).stem().string() : a.name;
    if (config.max_swaps == 0) {
        throw ParameterError("--max-swaps must be positive");
    }

    const Dataset all = load_dataset(a.data, config.kind);
    const auto split = train_test_split(all.size(), a.n_queries, c.seed);
    const Dataset train = all.subset(split.train);
    const Dataset queries = all.subset(split.queries);
    const auto rows = run_sweep(train, queries, grid, config);
    if (a.output.empty() || a.output == "-") {
        std::cout << format_results_csv(rows);
    } else {
        write_results_csv(a.output, rows);
        std::cerr << "wrote " << rows.size() << " rows to " << a.output << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"PDASC: sharded hierarchical k-medoids index for approximate nearest neighbours"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "pdasc 0.1.0");

    Common common;
    const auto add_common = [&common](CLI::App* cmd) {
        cmd->add_option("--seed", common.seed, "Random seed")->capture_default_str();
        cmd->add_option("--threads", common.threads, "Worker threads (0 = all cores)")
            ->capture_default_str();
    };
    const auto distance_option = [](CLI::App* cmd, std::string& target) {
        return cmd
            ->add_option("--distance", target, "euclidean | cosine | jaccard | haversine")
            ->capture_default_str();
    };

    ConvertArgs convert;
    auto* c_convert = app.add_subcommand("convert", "Import a CSV file as a dataset file");
    c_convert->add_option("--input", convert.input, "CSV input")->required();
    c_convert->add_option("--output", convert.output, "Dataset output (.pdv)")->required();
    c_convert->add_option("--dtype", convert.dtype, "f32 | bitset | geo")
        ->check(CLI::IsMember({"f32", "bitset", "geo"}))
        ->capture_default_str();

    GenerateArgs generate;
    auto* c_generate = app.add_subcommand("generate", "Write a synthetic dataset file");
    c_generate->add_option("--shape", generate.shape, "clusters | uniform | bitset | geo")
        ->check(CLI::IsMember({"clusters", "uniform", "bitset", "geo"}))
        ->capture_default_str();
    c_generate->add_option("--n", generate.n, "Number of points")->capture_default_str();
    c_generate->add_option("--dim", generate.dim, "Dimension (bits for bitset)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_generate->add_option("--clusters", generate.clusters, "Gaussian clusters")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_generate->add_option("--density", generate.density, "Bit density")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    c_generate->add_option("--output", generate.output, "Dataset output (.pdv)")->required();
    add_common(c_generate);

    BuildArgs build;
    auto* c_build = app.add_subcommand("build", "Build an index");
    c_build->add_option("--data", build.data, "Dataset file")->required();
    distance_option(c_build, build.distance);
    c_build->add_option("--nnodes", build.n_nodes, "Number of shards")->capture_default_str();
    c_build->add_option("--gl", build.gl, "Group length")->capture_default_str();
    c_build->add_option("--np", build.np, "Prototypes per group")->capture_default_str();
    c_build->add_option("--max-swaps", build.max_swaps, "PAM swap cap")->capture_default_str();
    c_build->add_option("--output", build.output, "Index output (.pdx)")->required();
    add_common(c_build);

    GtArgs gt;
    auto* c_gt = app.add_subcommand("gt", "Exact k-NN ground truth by linear scan");
    c_gt->add_option("--data", gt.data, "Dataset file")->required();
    c_gt->add_option("--queries", gt.queries, "Query dataset file")->required();
    c_gt->add_option("--k", gt.k, "Neighbours per query")->capture_default_str();
    distance_option(c_gt, gt.distance);
    c_gt->add_option("--output", gt.output, "Ground-truth output (.pdg)")->required();
    add_common(c_gt);

    QueryArgs query;
    auto* c_query = app.add_subcommand("query", "Search an index");
    c_query->add_option("--index", query.index, "Index file")->required();
    c_query->add_option("--data", query.data, "Dataset the index was built from")->required();
    c_query->add_option("--queries", query.queries, "Query dataset file")->required();
    c_query->add_option("--k", query.k, "Neighbours per query")->capture_default_str();
    auto* o_radius =
        c_query->add_option("--radius", query.radius, "Pruning radius or 'inf'")->capture_default_str();
    auto* o_quantile = c_query->add_option("--radius-quantile", query.quantile,
                                           "Radius as a quantile of pairwise distances");
    o_radius->excludes(o_quantile);
    c_query->add_option("--sample-pairs", query.sample_pairs, "Pairs sampled for the quantile")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_query->add_flag("--json", query.json, "One JSON record per query");
    add_common(c_query);

    SweepArgs sweep;
    auto* c_sweep = app.add_subcommand("sweep", "Recall / cost sweep over a parameter grid");
    c_sweep->add_option("--data", sweep.data, "Dataset file")->required();
    c_sweep->add_option("--name", sweep.name, "Dataset label for the CSV (default: file stem)");
    distance_option(c_sweep, sweep.distance);
    c_sweep->add_option("--ratios", sweep.ratios, "np/gl ratios")->delimiter(',')->capture_default_str();
    c_sweep->add_option("--gl-list", sweep.gl_list, "Group lengths")->delimiter(',')->capture_default_str();
    c_sweep->add_option("--nnodes-list", sweep.n_nodes_list, "Shard counts")
        ->delimiter(',')
        ->capture_default_str();
    auto* o_radii = c_sweep->add_option("--radii", sweep.radii, "Absolute radii")->delimiter(',');
    auto* o_quantiles =
        c_sweep->add_option("--radius-quantiles", sweep.quantiles, "Radius quantiles (default 0.25)")
            ->delimiter(',');
    o_radii->excludes(o_quantiles);
    c_sweep->add_option("--k", sweep.k, "Neighbours per query")->capture_default_str();
    c_sweep->add_option("--queries", sweep.n_queries, "Points held out as queries")
        ->capture_default_str();
    c_sweep->add_option("--sample-pairs", sweep.sample_pairs, "Pairs sampled for quantiles")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_sweep->add_option("--max-swaps", sweep.max_swaps, "PAM swap cap")->capture_default_str();
    c_sweep->add_option("--output", sweep.output, "CSV output ('-' for stdout)");
    add_common(c_sweep);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c_convert) return run_convert(convert);
        if (*c_generate) return run_generate(generate, common);
        if (*c_build) return run_build(build, common);
        if (*c_gt) return run_gt(gt, common);
        if (*c_query) return run_query(query, common);
        if (*c_sweep) return run_sweep_cmd(sweep, common);
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
