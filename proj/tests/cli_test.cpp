#include <gtest/gtest.h>
#include <sys/wait.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pdasc/bench.hpp"
#include "pdasc/storage.hpp"
#include "pdasc/synthetic.hpp"

using namespace pdasc;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               (std::string("pdasc_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name) const { return (dir_ / name).string(); }

    RunResult run(const std::string& args) const {
        const auto out = dir_ / "stdout.txt";
        const auto err = dir_ / "stderr.txt";
        const std::string cmd = std::string(PDASC_CLI_PATH) + " " + args + " >" + out.string() +
                                " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        RunResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    void write_text(const std::string& name, const std::string& text) const {
        std::ofstream(file(name)) << text;
    }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, ConvertSmallCsv) {
    write_text("a.csv", "1,2\n3,4\n");
    const auto r = run("convert --input " + file("a.csv") + " --output " + file("a.pdv"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("rows 2 dim 2"), std::string::npos);
    const auto data = load_dataset(file("a.pdv"));
    EXPECT_EQ(data.size(), 2u);
    EXPECT_EQ(data.dim(), 2u);
}

TEST_F(CliTest, ConvertReportsBadLine) {
    write_text("bad.csv", "1,2\n3,4\n5,abc\n");
    const auto r = run("convert --input " + file("bad.csv") + " --output " + file("b.pdv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
    EXPECT_FALSE(fs::exists(file("b.pdv")));
}

TEST_F(CliTest, ConvertRejectsOutOfRangeLatitude) {
    write_text("geo.csv", "40,3\n95,1\n");
    const auto r = run("convert --dtype geo --input " + file("geo.csv") + " --output " + file("g.pdv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
}

TEST_F(CliTest, BuildPrintsLevelSizesPerShard) {
    save_dataset(file("d.pdv"), synthetic::uniform_dense(320, 4, 1));
    const auto r = run("build --data " + file("d.pdv") +
                       " --nnodes 10 --gl 10 --np 3 --output " + file("i.pdx"));
    ASSERT_EQ(r.code, 0) << r.err;
    std::size_t count = 0;
    for (std::size_t pos = 0; (pos = r.out.find("levels [32,11,5,3]", pos)) != std::string::npos; ++pos) {
        ++count;
    }
    EXPECT_EQ(count, 10u) << r.out;
    EXPECT_NE(r.out.find("build_ndc_total"), std::string::npos);
    const auto index = load_index(file("i.pdx"), load_dataset(file("d.pdv")));
    EXPECT_EQ(index.shards.size(), 10u);
}

TEST_F(CliTest, BuildValidatesBeforeReading) {
    // The data file does not exist: a flag error must win over the I/O error.
    const auto r = run("build --data " + file("missing.pdv") + " --np 0 --gl 10 --output " +
                       file("i.pdx"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("np"), std::string::npos);
}

TEST_F(CliTest, BuildRejectsIncompatibleDistance) {
    save_dataset(file("b.pdv"), synthetic::random_bitsets(50, 16, 0.5, 1));
    const auto r = run("build --data " + file("b.pdv") + " --distance cosine --gl 10 --np 3 --output " +
                       file("i.pdx"));
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, MissingFileIsRuntimeError) {
    const auto r = run("build --data " + file("missing.pdv") + " --gl 10 --np 3 --output " +
                       file("i.pdx"));
    EXPECT_EQ(r.code, 1);
}

TEST_F(CliTest, UnknownFlagIsUsageError) {
    EXPECT_EQ(run("build --bogus").code, 2);
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("--help").code, 0);
}

TEST_F(CliTest, GroundTruthAndUnboundedQueryAgree) {
    const auto all = synthetic::gaussian_clusters(600, 5, {}, 3);
    const auto split = train_test_split(all.size(), 20, 1);
    save_dataset(file("d.pdv"), all.subset(split.train));
    save_dataset(file("q.pdv"), all.subset(split.queries));

    ASSERT_EQ(run("gt --data " + file("d.pdv") + " --queries " + file("q.pdv") + " --k 10 --output " +
                  file("g.pdg"))
                  .code,
              0);
    const auto first = slurp(file("g.pdg"));
    ASSERT_EQ(run("gt --data " + file("d.pdv") + " --queries " + file("q.pdv") + " --k 10 --output " +
                  file("g2.pdg"))
                  .code,
              0);
    EXPECT_EQ(first, slurp(file("g2.pdg")));

    ASSERT_EQ(run("build --data " + file("d.pdv") + " --nnodes 3 --gl 20 --np 6 --output " +
                  file("i.pdx"))
                  .code,
              0);
    const auto r = run("query --index " + file("i.pdx") + " --data " + file("d.pdv") + " --queries " +
                       file("q.pdv") + " --k 10 --radius inf --json");
    ASSERT_EQ(r.code, 0) << r.err;

    const auto gt = load_ground_truth(file("g.pdg"));
    std::istringstream lines(r.out);
    std::string line;
    std::size_t q = 0;
    while (std::getline(lines, line)) {
        const auto rec = nlohmann::json::parse(line);
        EXPECT_EQ(rec["query"].get<std::size_t>(), q);
        EXPECT_EQ(rec["radius"].get<std::string>(), "inf");
        ASSERT_EQ(rec["neighbours"].size(), 10u);
        for (std::size_t i = 0; i < 10; ++i) {
            EXPECT_EQ(rec["neighbours"][i]["id"].get<std::uint32_t>(), gt.rows[q][i].id);
        }
        EXPECT_EQ(rec["shard_ndc"].size(), 3u);
        ++q;
    }
    EXPECT_EQ(q, 20u);
}

TEST_F(CliTest, GroundTruthRejectsTooLargeK) {
    save_dataset(file("d.pdv"), synthetic::uniform_dense(5, 2, 1));
    const auto r = run("gt --data " + file("d.pdv") + " --queries " + file("d.pdv") + " --k 6 --output " +
                       file("g.pdg"));
    EXPECT_EQ(r.code, 2);
}

TEST_F(CliTest, QueryRadiusZeroAndQuantileEcho) {
    save_dataset(file("d.pdv"), synthetic::uniform_dense(200, 3, 4));
    save_dataset(file("q.pdv"), synthetic::uniform_dense(5, 3, 5));
    ASSERT_EQ(run("build --data " + file("d.pdv") + " --gl 10 --np 3 --output " + file("i.pdx")).code, 0);

    const auto zero = run("query --index " + file("i.pdx") + " --data " + file("d.pdv") + " --queries " +
                          file("q.pdv") + " --radius 0");
    EXPECT_EQ(zero.code, 0) << zero.err;
    EXPECT_EQ(zero.out.rfind("radius 0\n", 0), 0u) << zero.out;

    const auto quant = run("query --index " + file("i.pdx") + " --data " + file("d.pdv") + " --queries " +
                           file("q.pdv") + " --radius-quantile 0.2");
    ASSERT_EQ(quant.code, 0) << quant.err;
    const double expected =
        radius_from_quantile(load_dataset(file("d.pdv")), DistanceKind::Euclidean, 0.2, 10000, 42);
    EXPECT_EQ(quant.out.rfind("radius " + io::exact_real(expected) + "\n", 0), 0u) << quant.out;

    EXPECT_EQ(run("query --index " + file("i.pdx") + " --data " + file("d.pdv") + " --queries " +
                  file("q.pdv") + " --radius 1 --radius-quantile 0.2")
                  .code,
              2);
}

TEST_F(CliTest, QueryRejectsIndexFromOtherDataset) {
    save_dataset(file("d.pdv"), synthetic::uniform_dense(100, 3, 4));
    save_dataset(file("e.pdv"), synthetic::uniform_dense(100, 3, 5));
    ASSERT_EQ(run("build --data " + file("d.pdv") + " --gl 10 --np 3 --output " + file("i.pdx")).code, 0);
    const auto r = run("query --index " + file("i.pdx") + " --data " + file("e.pdv") + " --queries " +
                       file("e.pdv"));
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("different dataset"), std::string::npos);
}

TEST_F(CliTest, SweepIsDeterministicAndExactAtUnboundedRadius) {
    save_dataset(file("d.pdv"), synthetic::gaussian_clusters(500, 4, {}, 2));
    const std::string args = "sweep --data " + file("d.pdv") +
                             " --ratios 0.2 --gl-list 20 --nnodes-list 2 --radii inf --queries 25 ";
    const auto a = run(args + "--output " + file("a.csv"));
    ASSERT_EQ(a.code, 0) << a.err;
    const auto b = run(args + "--threads 3 --output " + file("b.csv"));
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(slurp(file("a.csv")), slurp(file("b.csv")));

    std::ifstream in(file("a.csv"));
    const auto rows = parse_results_csv(in);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].dataset, "d");
    EXPECT_EQ(rows[0].np, 4u);
    EXPECT_NE(slurp(file("a.csv")).find(",inf,10,1.000000,"), std::string::npos);
}

TEST_F(CliTest, GenerateWritesDataset) {
    const auto r = run("generate --shape geo --n 30 --output " + file("g.pdv"));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_dataset(file("g.pdv"), DistanceKind::Haversine).size(), 30u);
}
