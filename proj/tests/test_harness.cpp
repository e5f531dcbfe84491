#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netreg/experiments.hpp"
#include "netreg/pipeline.hpp"

using namespace netreg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("netreg_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int cli(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(NETREG_CLI) + " " + args + " > " + (log / "stdout.txt").string() + " 2> " +
                      (log / "stderr.txt").string();
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) {
    return json::parse(slurp(p));
}

/* Writes the first data set of a small custom experiment as CLI inputs. */
Sample write_sample(const fs::path& dir, int n = 200) {
    ExperimentConfig c = default_config("custom");
    c.n = n;
    Sample s = first_sample(c);
    write_edge_csv(s.graph, (dir / "edges.csv").string());
    Eigen::MatrixXd vals(n, 2);
    vals << s.X.col(1), s.Y;
    write_table_csv((dir / "nodes.csv").string(), {"x1", "y"}, vals);
    return s;
}

std::string io_flags(const fs::path& dir) {
    return "--graph " + (dir / "edges.csv").string() + " --covariates " + (dir / "nodes.csv").string();
}

}

TEST(Config, ValidationAndParsing) {
    ExperimentConfig c = default_config("fig1_bias");
    EXPECT_NO_THROW(validate_config(c));
    c.n = 1;
    EXPECT_THROW(validate_config(c), ConfigError);
    c = default_config("fig1_bias");
    c.deltas = {0.1};
    EXPECT_THROW(validate_config(c), ConfigError);
    EXPECT_THROW(default_config("table9"), ConfigError);
    EXPECT_THROW(config_from_json(json{{"experiment", "custom"}, {"sample_size", 10}}), ConfigError);
    ExperimentConfig parsed = config_from_json(json{{"experiment", "table2_grdpg"}, {"n", 123}});
    EXPECT_EQ(parsed.n, 123);
    EXPECT_EQ(parsed.B, 200);
    EXPECT_EQ(config_from_json(config_to_json(parsed)).n, 123);
}

TEST(Config, HashTracksContentOnly) {
    ExperimentConfig a = default_config("custom");
    ExperimentConfig b = a;
    b.out_dir = "/elsewhere";
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.n += 1;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Simulate, SmallRunIsSelfConsistent) {
    ExperimentConfig c = default_config("custom");
    c.n = 50;
    c.mc = 2;
    c.B = 60;
    ResultBundle b = cmd_simulate(c);
    EXPECT_EQ(b.runs.size(), 2u);
    json j = json::parse(b.to_json().dump());
    EXPECT_TRUE(bundle_consistent(j));
    EXPECT_EQ(j["provenance"]["config_hash"], config_hash(c));
    ResultBundle again = cmd_simulate(c);
    EXPECT_EQ(again.to_json().dump(), b.to_json().dump());
    j["config"]["n"] = 51;
    EXPECT_FALSE(bundle_consistent(j));
}

TEST(Cli, InterceptOnlyFitOnCompleteGraphIsTheMean) {
    fs::path d = scratch("k4");
    std::ofstream(d / "edges.csv") << "src,dst\n0,1\n0,2\n0,3\n1,2\n1,3\n2,3\n";
    std::ofstream(d / "nodes.csv") << "node,y\n0,2.5\n1,2.5\n2,2.5\n3,2.5\n";
    ASSERT_EQ(cli("fit " + io_flags(d) + " --out-dir " + d.string(), d), 0) << slurp(d / "stderr.txt");
    json fit = read_json(d / "fit.json");
    EXPECT_DOUBLE_EQ(fit["beta"][0].get<double>(), 2.5);
    EXPECT_DOUBLE_EQ(fit["rho_hat"].get<double>(), 1.0);
}

TEST(Cli, DumpedSampleRefitsToTheInMemoryFit) {
    fs::path d = scratch("roundtrip");
    ASSERT_EQ(cli("simulate --experiment custom --n 150 --mc 1 --B 60 --dump-sample --out-dir " + d.string(), d), 0)
        << slurp(d / "stderr.txt");
    ASSERT_EQ(cli("fit --graph " + (d / "sample_edges.csv").string() + " --covariates " +
                      (d / "sample_covariates.csv").string() + " --motifs rooted_two_star --out-dir " + d.string(),
                  d),
              0)
        << slurp(d / "stderr.txt");
    ExperimentConfig c = default_config("custom");
    c.n = 150;
    Sample s = first_sample(c);
    FitResult direct = ols_fit(motif_design(s, c.motifs));
    json fit = read_json(d / "fit.json");
    ASSERT_EQ(fit["beta"].size(), static_cast<std::size_t>(direct.beta.size()));
    for (Eigen::Index k = 0; k < direct.beta.size(); ++k) {
        EXPECT_NEAR(fit["beta"][k].get<double>(), direct.beta[k], 1e-9 * std::max(1.0, std::fabs(direct.beta[k])));
    }
}

TEST(Cli, MissingNodeRowIsNamed) {
    fs::path d = scratch("missing");
    std::ofstream(d / "edges.csv") << "src,dst\n0,1\n1,2\n2,3\n";
    std::ofstream(d / "nodes.csv") << "x1,y\n0.1,1\n0.2,2\n0.3,3\n";
    EXPECT_EQ(cli("fit " + io_flags(d) + " --out-dir " + d.string(), d), 2);
    EXPECT_NE(slurp(d / "stderr.txt").find("no row for node 3"), std::string::npos) << slurp(d / "stderr.txt");
    std::ofstream(d / "nodes.csv") << "node,x1,y\n0,0.1,1\n1,0.2,2\n3,0.3,3\n";
    EXPECT_EQ(cli("fit " + io_flags(d) + " --out-dir " + d.string(), d), 2);
    EXPECT_NE(slurp(d / "stderr.txt").find("no row for node 2"), std::string::npos) << slurp(d / "stderr.txt");
}

TEST(Cli, BootstrapIsReproducibleAndDefaultsToFiveHundred) {
    fs::path d = scratch("boot");
    write_sample(d);
    fs::create_directories(d / "a");
    fs::create_directories(d / "b");
    std::string args = "bootstrap " + io_flags(d) + " --motifs rooted_two_star --seed 11 --out-dir ";
    ASSERT_EQ(cli(args + (d / "a").string(), d), 0) << slurp(d / "stderr.txt");
    ASSERT_EQ(cli(args + (d / "b").string(), d), 0) << slurp(d / "stderr.txt");
    std::string ra = slurp(d / "a" / "replicates.csv");
    EXPECT_FALSE(ra.empty());
    EXPECT_EQ(ra, slurp(d / "b" / "replicates.csv"));
    json boot = read_json(d / "a" / "bootstrap.json");
    EXPECT_EQ(boot["B"].get<int>(), 500);
    EXPECT_EQ(boot["scheme"].get<std::string>(), "linear_multiplier");
    EXPECT_TRUE(boot.contains("test"));
}

TEST(Cli, LinearSchemeOnSpectralOnlyDesignIsACapabilityError) {
    fs::path d = scratch("capability");
    write_sample(d);
    EXPECT_EQ(cli("bootstrap " + io_flags(d) + " --d 2 --scheme linear --B 60 --out-dir " + d.string(), d), 3);
    EXPECT_NE(slurp(d / "stderr.txt").find("independent"), std::string::npos);
    EXPECT_EQ(cli("test-network-effect " + io_flags(d) + " --d 2 --B 60 --out-dir " + d.string(), d), 0)
        << slurp(d / "stderr.txt");
    json t = read_json(d / "test.json");
    EXPECT_EQ(t["scheme"].get<std::string>(), "independent_multiplier");
    EXPECT_GE(t["p_value"].get<double>(), 0.0);
}

TEST(Cli, RecipeMatchesFlags) {
    fs::path d = scratch("recipe");
    write_sample(d);
    std::ofstream(d / "recipe.json") << R"({"response": "y", "covariates": ["x1"], "motifs": ["edge"], "corrected": true})";
    fs::create_directories(d / "r");
    fs::create_directories(d / "f");
    ASSERT_EQ(cli("fit " + io_flags(d) + " --recipe " + (d / "recipe.json").string() + " --out-dir " +
                      (d / "r").string(),
                  d),
              0)
        << slurp(d / "stderr.txt");
    ASSERT_EQ(cli("fit " + io_flags(d) + " --covariate x1 --motifs edge --corrected --out-dir " + (d / "f").string(),
                  d),
              0)
        << slurp(d / "stderr.txt");
    json r = read_json(d / "r" / "fit.json");
    json f = read_json(d / "f" / "fit.json");
    EXPECT_EQ(r["beta"], f["beta"]);
    EXPECT_EQ(r["variant"].get<std::string>(), "bias_corrected");
    std::ofstream(d / "bad.json") << R"({"motif": ["edge"]})";
    EXPECT_EQ(cli("fit " + io_flags(d) + " --recipe " + (d / "bad.json").string() + " --out-dir " + d.string(), d), 2);
}

TEST(Cli, CountMotifsAndEmbedding) {
    fs::path d = scratch("counts");
    std::ofstream(d / "edges.csv") << "src,dst\n0,1\n0,2\n0,3\n1,2\n1,3\n2,3\n";
    ASSERT_EQ(cli("count-motifs --graph " + (d / "edges.csv").string() +
                      " --motifs triangle --motifs two_star --decompose --out-dir " + d.string(),
                  d),
              0)
        << slurp(d / "stderr.txt");
    json g = read_json(d / "global_counts.json");
    EXPECT_NEAR(g["motifs"][0]["global"].get<double>(), 1.0, 1e-12);
    EXPECT_TRUE(fs::exists(d / "decompositions.json"));
    EXPECT_TRUE(fs::exists(d / "local_counts.csv"));
    ASSERT_EQ(cli("ase --graph " + (d / "edges.csv").string() + " --d 1 --out-dir " + d.string(), d), 0);
    json e = read_json(d / "embedding.json");
    EXPECT_NEAR(e["eigenvalues"][0].get<double>(), 3.0, 1e-10);
}
