#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netreg/experiments.hpp"
#include "netreg/pipeline.hpp"

namespace fs = std::filesystem;
using namespace netreg;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv("NETREG_OUTPUT_DIR");
    return env && *env ? env : ".";
}

struct FitFlags {
    std::string graph;
    std::string covariates;
    std::string recipe;
    std::optional<std::string> response;
    std::vector<std::string> covariate_columns;
    bool no_intercept = false;
    std::vector<std::string> motifs;
    std::optional<int> d;
    std::string blocks;
    bool corrected = false;
    std::string downsample;
    int downsample_size = 0;
    std::optional<double> downsample_eps;
    std::string composite;
    std::string composite_column;
    std::optional<std::uint64_t> seed;
    std::string out_dir = default_out_dir();

    void attach(CLI::App* app) {
        app->add_option("--graph", graph, "edge list CSV (src,dst)")->required()->check(CLI::ExistingFile);
        app->add_option("--covariates", covariates, "node table CSV with a header row")
            ->required()
            ->check(CLI::ExistingFile);
        app->add_option("--recipe", recipe, "JSON design recipe; flags override its fields")->check(CLI::ExistingFile);
        app->add_option("--response", response, "response column (default y)");
        app->add_option("--covariate", covariate_columns, "covariate column (repeatable; default all others)");
        app->add_flag("--no-intercept", no_intercept, "omit the intercept column");
        app->add_option("--motifs", motifs, "motif names or motif files (repeatable)");
        app->add_option("--d", d, "adjacency spectral embedding dimension");
        app->add_option("--blocks", blocks, "node,block CSV for block-wise embedding")->check(CLI::ExistingFile);
        app->add_flag("--corrected", corrected, "bias-corrected least squares");
        app->add_option("--downsample", downsample, "transitivity | neighborhood_average | grdpg_ase");
        app->add_option("--downsample-size", downsample_size, "explicit down-sampled row count");
        app->add_option("--downsample-eps", downsample_eps, "exponent slack for the automatic size");
        app->add_option("--composite", composite, "transitivity | neighborhood_average");
        app->add_option("--composite-column", composite_column, "source column for neighborhood_average");
        app->add_option("--seed", seed, "seed for row selection and bootstrap multipliers");
        app->add_option("--out-dir", out_dir, "output directory (default $NETREG_OUTPUT_DIR or .)");
    }

    Recipe recipe_value() const {
        Recipe r = recipe.empty() ? Recipe{} : load_recipe(recipe);
        if (response) {
            r.response = *response;
        }
        if (!covariate_columns.empty()) {
            r.covariates = covariate_columns;
        }
        if (no_intercept) {
            r.intercept = false;
        }
        if (!motifs.empty()) {
            r.motifs = motifs;
        }
        if (d) {
            r.d = *d;
        }
        if (!blocks.empty()) {
            r.blocks = blocks;
        }
        if (corrected) {
            r.corrected = true;
        }
        if (!downsample.empty()) {
            r.downsample = downsample;
        }
        if (downsample_size > 0) {
            r.downsample_size = downsample_size;
        }
        if (downsample_eps) {
            r.downsample_eps = *downsample_eps;
        }
        if (!composite.empty()) {
            r.composite = composite;
        }
        if (!composite_column.empty()) {
            r.composite_column = composite_column;
        }
        if (seed) {
            r.seed = *seed;
        }
        return r;
    }
};

struct BootFlags {
    int B = 500;
    std::string scheme = "auto";
    double level = 0.95;
    double ratio_direction = 1.0;
    int eliminate_rounds = 0;

    void attach(CLI::App* app) {
        app->add_option("--B", B, "bootstrap replicates")->check(CLI::PositiveNumber)->capture_default_str();
        app->add_option("--scheme", scheme, "linear | independent | auto")->capture_default_str();
        app->add_option("--level", level, "confidence level")->capture_default_str();
        app->add_option("--ratio-direction", ratio_direction, "sign of the sparsity-ratio exponent (linear scheme)")
            ->capture_default_str();
        app->add_option("--eliminate-rounds", eliminate_rounds,
                        "backward elimination rounds over conventional covariates")
            ->capture_default_str();
    }

    BootstrapOptions options(std::uint64_t seed) const {
        BootstrapOptions opt;
        opt.B = B;
        opt.seed = seed;
        opt.ratio_direction = ratio_direction;
        return opt;
    }
};

void print_table(const std::vector<json>& rows) {
    if (rows.empty()) {
        return;
    }
    for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
        std::cout << (it == rows.front().begin() ? "" : "\t") << it.key();
    }
    std::cout << "\n";
    for (const auto& r : rows) {
        bool first = true;
        for (auto it = r.begin(); it != r.end(); ++it) {
            std::cout << (first ? "" : "\t");
            if (it->is_number_float()) {
                std::cout << std::setprecision(4) << it->get<double>();
            } else if (it->is_string()) {
                std::cout << it->get<std::string>();
            } else {
                std::cout << it->dump();
            }
            first = false;
        }
        std::cout << "\n";
    }
}

int run(int argc, char** argv) {
    CLI::App app{"netreg: regression with network-derived covariates"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "run a registered simulation experiment");
    std::string config_path;
    std::string experiment;
    std::optional<int> sim_n;
    std::optional<int> sim_mc;
    std::optional<int> sim_B;
    std::optional<std::uint64_t> sim_seed;
    std::vector<double> sim_deltas;
    std::optional<double> sim_rho;
    bool paper_scale = false;
    bool dump_sample = false;
    std::string sim_out = default_out_dir();
    sim->add_option("--config", config_path, "experiment config JSON")->check(CLI::ExistingFile);
    sim->add_option("--experiment", experiment, "experiment id");
    sim->add_option("--n", sim_n, "nodes per graph");
    sim->add_option("--mc", sim_mc, "Monte Carlo runs");
    sim->add_option("--B", sim_B, "bootstrap replicates");
    sim->add_option("--seed", sim_seed, "master seed");
    sim->add_option("--delta", sim_deltas, "sparsity exponents (repeatable)");
    sim->add_option("--rho", sim_rho, "fixed sparsity level");
    sim->add_flag("--paper-scale", paper_scale, "use n = 4000");
    sim->add_flag("--dump-sample", dump_sample, "also write the first simulated data set");
    sim->add_option("--out-dir", sim_out, "output directory (default $NETREG_OUTPUT_DIR or .)");

    auto* fit = app.add_subcommand("fit", "fit a regression on a graph and node table");
    FitFlags fit_flags;
    fit_flags.attach(fit);

    auto* boot = app.add_subcommand("bootstrap", "fit and run a multiplier bootstrap");
    FitFlags boot_fit;
    BootFlags boot_flags;
    double boot_alpha = 0.05;
    boot_fit.attach(boot);
    boot_flags.attach(boot);
    boot->add_option("--alpha", boot_alpha, "level for elimination and the network-effect test")
        ->capture_default_str();

    auto* test = app.add_subcommand("test-network-effect", "bootstrap test of zero network coefficients");
    FitFlags test_fit;
    BootFlags test_boot;
    double test_alpha = 0.05;
    test_fit.attach(test);
    test_boot.attach(test);
    test->add_option("--alpha", test_alpha, "test level in [0,1]")->capture_default_str();

    auto* ase_cmd = app.add_subcommand("ase", "adjacency spectral embedding");
    std::string ase_graph;
    int ase_d = 2;
    std::optional<double> ase_rho;
    std::optional<int> ase_n;
    std::string ase_blocks;
    std::string ase_out = default_out_dir();
    ase_cmd->add_option("--graph", ase_graph, "edge list CSV")->required()->check(CLI::ExistingFile);
    ase_cmd->add_option("--d", ase_d, "embedding dimension")->capture_default_str();
    ase_cmd->add_option("--rho", ase_rho, "normalization (default edge density)");
    ase_cmd->add_option("--n", ase_n, "node count (default largest id + 1)");
    ase_cmd->add_option("--blocks", ase_blocks, "node,block CSV for block-wise embedding")->check(CLI::ExistingFile);
    ase_cmd->add_option("--out-dir", ase_out, "output directory");

    auto* cm = app.add_subcommand("count-motifs", "local and global motif frequencies");
    std::string cm_graph;
    std::vector<std::string> cm_motifs;
    std::optional<double> cm_rho;
    std::optional<int> cm_n;
    bool cm_decompose = false;
    std::string cm_out = default_out_dir();
    cm->add_option("--graph", cm_graph, "edge list CSV")->required()->check(CLI::ExistingFile);
    cm->add_option("--motifs", cm_motifs, "motif names or files")->required();
    cm->add_option("--rho", cm_rho, "normalization (default edge density)");
    cm->add_option("--n", cm_n, "node count (default largest id + 1)");
    cm->add_flag("--decompose", cm_decompose, "write merge decompositions for every motif pair");
    cm->add_option("--out-dir", cm_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    if (sim->parsed()) {
        json j = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            try {
                j = json::parse(in);
            } catch (const json::exception& e) {
                throw ConfigError(config_path + ": " + e.what());
            }
        }
        if (!experiment.empty()) {
            j["experiment"] = experiment;
        }
        if (!j.contains("experiment")) {
            throw ConfigError("simulate: give --experiment or a config with 'experiment'");
        }
        if (paper_scale) {
            j["n"] = 4000;
        }
        if (sim_n) {
            j["n"] = *sim_n;
        }
        if (sim_mc) {
            j["mc"] = *sim_mc;
        }
        if (sim_B) {
            j["B"] = *sim_B;
        }
        if (sim_seed) {
            j["seed"] = *sim_seed;
        }
        if (!sim_deltas.empty()) {
            j["deltas"] = sim_deltas;
        }
        if (sim_rho) {
            j["rho"] = *sim_rho;
        }
        ExperimentConfig cfg = config_from_json(j);
        std::string dir = sim->count("--out-dir") || cfg.out_dir.empty() ? sim_out : cfg.out_dir;
        ResultBundle b = cmd_simulate(cfg);
        write_bundle(b, dir);
        if (dump_sample) {
            Sample s = first_sample(cfg);
            write_edge_csv(s.graph, dir + "/sample_edges.csv");
            std::vector<std::string> cols;
            Eigen::MatrixXd vals(s.X.rows(), s.X.cols());
            int c = 0;
            for (Eigen::Index k = 0; k < s.X.cols(); ++k) {
                if ((s.X.col(k).array() == 1.0).all()) {
                    continue;
                }
                cols.push_back("x" + std::to_string(++c));
                vals.col(c - 1) = s.X.col(k);
            }
            cols.push_back("y");
            vals.conservativeResize(Eigen::NoChange, c + 1);
            vals.col(c) = s.Y;
            write_table_csv(dir + "/sample_covariates.csv", cols, vals);
        }
        print_table(b.aggregate);
        std::cout << "config_hash " << config_hash(cfg) << "\nwrote " << dir << "/bundle.json\n";
        return 0;
    }

    if (fit->parsed()) {
        Recipe r = fit_flags.recipe_value();
        Inputs in = load_inputs(fit_flags.graph, fit_flags.covariates);
        Design des = build_design(in, r);
        FitResult res = fit_design(in, des, r);
        json out = fit_json(res);
        out["recipe"] = recipe_json(r);
        fs::create_directories(fit_flags.out_dir);
        write_json(out, fit_flags.out_dir + "/fit.json");
        auto names = des.names();
        for (Eigen::Index k = 0; k < res.beta.size(); ++k) {
            std::cout << names[k] << "\t" << std::setprecision(10) << res.beta[k] << "\n";
        }
        return 0;
    }

    if (boot->parsed() || test->parsed()) {
        bool is_test = test->parsed();
        FitFlags& ff = is_test ? test_fit : boot_fit;
        BootFlags& bf = is_test ? test_boot : boot_flags;
        double alpha = is_test ? test_alpha : boot_alpha;
        Recipe r = ff.recipe_value();
        Inputs in = load_inputs(ff.graph, ff.covariates);
        Analysis a = analyze(in, r, bf.scheme, bf.options(r.seed), is_test ? 0 : bf.eliminate_rounds, alpha);
        fs::create_directories(ff.out_dir);
        std::optional<TestResult> tr;
        if (a.design.d() > 0) {
            tr = network_effect_test(a.fit, a.run, alpha);
        }
        if (is_test) {
            if (!tr) {
                throw SchemaError("test-network-effect: the design has no network covariates");
            }
            json out = test_json(*tr);
            out["scheme"] = to_string(a.run.scheme);
            out["seed"] = r.seed;
            out["flagged"] = a.run.flagged_count;
            write_json(out, ff.out_dir + "/test.json");
            std::cout << "statistic\t" << std::setprecision(10) << tr->statistic << "\ncritical_value\t"
                      << tr->critical << "\np_value\t" << tr->p_value << "\nreject\t" << (tr->reject ? "true" : "false")
                      << "\n";
            return 0;
        }
        write_replicates_csv(a.run, ff.out_dir + "/replicates.csv");
        json out = bootstrap_json(a.run, bf.level, tr);
        out["fit"] = fit_json(a.fit);
        out["recipe"] = recipe_json(r);
        if (bf.eliminate_rounds > 0) {
            out["eliminated"] = a.dropped;
        }
        write_json(out, ff.out_dir + "/bootstrap.json");
        auto names = a.design.names();
        auto ci = percentile_ci(a.run, bf.level);
        Eigen::VectorXd se = bootstrap_se(a.run);
        for (Eigen::Index k = 0; k < a.fit.beta.size(); ++k) {
            std::cout << names[k] << "\t" << std::setprecision(6) << a.fit.beta[k] << "\t" << se[k] << "\t["
                      << ci[k].lower << ", " << ci[k].upper << "]\n";
        }
        std::cout << "flagged\t" << a.run.flagged_count << "\n";
        return 0;
    }

    if (ase_cmd->parsed()) {
        Graph g = load_graph(ase_graph, ase_n);
        Embedding e = ase_blocks.empty() ? ase(g, ase_d, ase_rho ? *ase_rho : edge_density(g))
                                         : block_ase(g, read_block_csv(ase_blocks, g.n()), ase_d);
        fs::create_directories(ase_out);
        write_embedding_csv(e, ase_out + "/embedding.csv");
        write_json(json{{"d", e.d}, {"rho", e.rho}, {"eigenvalues", vector_json(e.eigvals)}, {"warnings", e.warnings}},
                   ase_out + "/embedding.json");
        for (const auto& w : e.warnings) {
            std::cerr << "warning: " << w << "\n";
        }
        std::cout << "wrote " << ase_out << "/embedding.csv\n";
        return 0;
    }

    if (cm->parsed()) {
        Graph g = load_graph(cm_graph, cm_n);
        double rho = cm_rho ? *cm_rho : edge_density(g);
        std::vector<MotifSpec> motifs;
        for (const auto& m : cm_motifs) {
            motifs.push_back(load_motif(m));
        }
        std::vector<std::string> cols;
        Eigen::MatrixXd vals(g.n(), static_cast<Eigen::Index>(motifs.size()));
        for (std::size_t k = 0; k < motifs.size(); ++k) {
            cols.push_back(motifs[k].label());
            vals.col(static_cast<Eigen::Index>(k)) = count_local(g, motifs[k], rho).values;
        }
        fs::create_directories(cm_out);
        write_table_csv(cm_out + "/local_counts.csv", cols, vals);
        json summary = counts_json(g, motifs, rho);
        write_json(summary, cm_out + "/global_counts.json");
        if (cm_decompose) {
            json decs = json::array();
            for (std::size_t a = 0; a < motifs.size(); ++a) {
                for (std::size_t b = a; b < motifs.size(); ++b) {
                    decs.push_back(decomposition_json(merge_motifs(motifs[a], motifs[b], MergeMode::full)));
                }
            }
            write_json(decs, cm_out + "/decompositions.json");
        }
        for (const auto& m : summary["motifs"]) {
            std::cout << m["motif"]["name"].get<std::string>() << "\t" << std::setprecision(10)
                      << m["global"].get<double>() << "\n";
        }
        return 0;
    }
    return 0;
}

}

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const CapabilityError& e) {
        std::cerr << "unsupported: " << e.what() << "\n";
        return 3;
    } catch (const SingularError& e) {
        std::cerr << "singular system: " << e.what() << "\n";
        return 4;
    } catch (const DegenerateError& e) {
        std::cerr << "degenerate input: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
