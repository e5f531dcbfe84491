#ifndef NETREG_PIPELINE_HPP
#define NETREG_PIPELINE_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/bootstrap.hpp"
#include "netreg/counting.hpp"
#include "netreg/estimators.hpp"
#include "netreg/hajek.hpp"
#include "netreg/io.hpp"
#include "netreg/motif.hpp"
#include "netreg/spectral.hpp"

namespace netreg {

/* How a design is assembled from a graph and a covariate table. */
struct Recipe {
    std::string response = "y";
    /* Unset means every column except the response and composite source. */
    std::optional<std::vector<std::string>> covariates;
    bool intercept = true;
    std::vector<std::string> motifs;
    int d = 0;
    std::string blocks;
    std::string composite;
    std::string composite_column;
    bool corrected = false;
    std::string downsample;
    int downsample_size = 0;
    double downsample_eps = 0.05;
    std::uint64_t seed = 0;
};

inline json recipe_json(const Recipe& r) {
    return json{{"response", r.response},
                {"covariates", r.covariates ? json(*r.covariates) : json(nullptr)},
                {"intercept", r.intercept},   {"motifs", r.motifs},
                {"d", r.d},                   {"blocks", r.blocks},
                {"composite", r.composite},   {"composite_column", r.composite_column},
                {"corrected", r.corrected},   {"downsample", r.downsample},
                {"downsample_size", r.downsample_size}, {"downsample_eps", r.downsample_eps},
                {"seed", r.seed}};
}

inline Recipe recipe_from_json(const json& j, Recipe r = {}) {
    if (!j.is_object()) {
        throw ConfigError("recipe: top level must be an object");
    }
    json known = recipe_json(r);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.contains(it.key())) {
            throw ConfigError("recipe: unknown key '" + it.key() + "'");
        }
    }
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) {
                field = j.at(key).get<std::decay_t<decltype(field)>>();
            }
        };
        get("response", r.response);
        if (j.contains("covariates")) {
            r.covariates = j.at("covariates").is_null()
                               ? std::nullopt
                               : std::optional<std::vector<std::string>>(j.at("covariates").get<std::vector<std::string>>());
        }
        get("intercept", r.intercept);
        get("motifs", r.motifs);
        get("d", r.d);
        get("blocks", r.blocks);
        get("composite", r.composite);
        get("composite_column", r.composite_column);
        get("corrected", r.corrected);
        get("downsample", r.downsample);
        get("downsample_size", r.downsample_size);
        get("downsample_eps", r.downsample_eps);
        get("seed", r.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("recipe: ") + e.what());
    }
    return r;
}

inline Recipe load_recipe(const std::string& path, Recipe base = {}) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open recipe " + path);
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    return recipe_from_json(j, std::move(base));
}

/* A built-in name such as "triangle" or "k_star(3)", or a path to a motif edge-list file. */
inline MotifSpec load_motif(const std::string& name) {
    if (std::filesystem::is_regular_file(name)) {
        std::ifstream in(name);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_motif(ss.str());
    }
    return builtin_motif(name);
}

inline Graph load_graph(const std::string& path, std::optional<int> n = std::nullopt) {
    return read_edge_csv(path, n);
}

struct Inputs {
    Graph graph;
    Table table;
};

/* Node count comes from the covariate table; every edge endpoint needs a row. */
inline Inputs load_inputs(const std::string& graph_path, const std::string& covariates_path) {
    Table t = read_table_csv(covariates_path);
    Graph g0 = read_edge_csv(graph_path);
    auto rows = static_cast<int>(t.values.rows());
    if (g0.n() > rows) {
        throw SchemaError(covariates_path + ": no row for node " + std::to_string(g0.n() - 1) +
                          " (referenced by " + graph_path + ")");
    }
    return Inputs{read_edge_csv(graph_path, rows), std::move(t)};
}

inline CompositeKind composite_kind(const std::string& s) {
    if (s == "transitivity") {
        return CompositeKind::transitivity;
    }
    if (s == "neighborhood_average") {
        return CompositeKind::neighborhood_average;
    }
    throw ConfigError("unknown composite covariate '" + s + "'");
}

inline DownsampleKind downsample_kind(const std::string& s) {
    if (s == "transitivity") {
        return DownsampleKind::transitivity;
    }
    if (s == "neighborhood_average") {
        return DownsampleKind::neighborhood_average;
    }
    if (s == "grdpg_ase") {
        return DownsampleKind::grdpg_ase;
    }
    throw ConfigError("unknown down-sampling kind '" + s + "'");
}

inline Design build_design(const Inputs& in, const Recipe& r) {
    const Table& t = in.table;
    const Graph& g = in.graph;
    Eigen::VectorXd Y = t.values.col(t.column(r.response));
    std::vector<std::string> cols = r.covariates.value_or(std::vector<std::string>{});
    if (!r.covariates) {
        for (const auto& c : t.columns) {
            if (c != r.response && c != r.composite_column) {
                cols.push_back(c);
            }
        }
    }
    Eigen::MatrixXd X(g.n(), static_cast<Eigen::Index>(cols.size()) + (r.intercept ? 1 : 0));
    Eigen::Index k = 0;
    if (r.intercept) {
        X.col(k++).setOnes();
    }
    for (const auto& c : cols) {
        if (c == r.response) {
            throw ConfigError("recipe: response column '" + c + "' listed as a covariate");
        }
        X.col(k++) = t.values.col(t.column(c));
    }
    Design des = base_design(g, Y, X, r.intercept);
    des.x_names.resize(r.intercept ? 1 : 0);
    des.x_names.insert(des.x_names.end(), cols.begin(), cols.end());
    for (const auto& name : r.motifs) {
        add_motif_column(des, g, load_motif(name));
    }
    if (!r.composite.empty()) {
        CompositeKind kind = composite_kind(r.composite);
        Eigen::VectorXd x;
        if (kind == CompositeKind::neighborhood_average) {
            if (r.composite_column.empty()) {
                throw ConfigError("recipe: neighborhood_average needs composite_column");
            }
            x = t.values.col(t.column(r.composite_column));
        }
        auto comp = composite_covariate(g, kind, des.rho, x);
        append_column(des, comp.values,
                      Provenance{kind == CompositeKind::transitivity ? ColumnKind::transitivity
                                                                     : ColumnKind::neighborhood_average,
                                 std::nullopt, kind == CompositeKind::transitivity ? "transitivity"
                                                                                    : "nbr_" + r.composite_column});
    }
    if (r.d > 0) {
        Embedding e = r.blocks.empty() ? ase(g, r.d, des.rho) : block_ase(g, read_block_csv(r.blocks, g.n()), r.d);
        for (const auto& w : e.warnings) {
            std::cerr << "warning: " << w << "\n";
        }
        add_spectral_columns(des, e.Zhat);
    }
    des.validate();
    return des;
}

inline FitResult fit_design(const Inputs& in, const Design& des, const Recipe& r) {
    if (!r.downsample.empty()) {
        if (r.corrected) {
            throw ConfigError("recipe: down-sampling and bias correction are exclusive");
        }
        int m = r.downsample_size > 0
                    ? r.downsample_size
                    : choose_downsample_size(mean_degree(in.graph), downsample_kind(r.downsample), in.graph.n(),
                                             static_cast<int>(des.q()), r.downsample_eps);
        return downsample_fit(des, m, Selection::seeded_random, r.seed);
    }
    if (r.corrected) {
        return bias_corrected_fit(des, in.graph, merges_for(des));
    }
    return ols_fit(des);
}

inline Scheme resolve_scheme(const std::string& s, const Design& des, const FitResult& fit) {
    if (s == "linear") {
        return Scheme::linear_multiplier;
    }
    if (s == "independent") {
        return Scheme::independent_multiplier;
    }
    if (s != "auto") {
        throw ConfigError("unknown bootstrap scheme '" + s + "' (linear, independent, auto)");
    }
    bool motif = std::any_of(des.provenance.begin(), des.provenance.end(),
                             [](const Provenance& p) { return p.is_motif(); });
    return motif && fit.variant != Variant::downsampled ? Scheme::linear_multiplier : Scheme::independent_multiplier;
}

inline BootstrapRun run_bootstrap(const Inputs& in, const Design& des, const FitResult& fit, Scheme scheme,
                                  const BootstrapOptions& opt) {
    if (scheme == Scheme::linear_multiplier) {
        return linear_multiplier_bootstrap(fit, hajek_projection(in.graph, des, fit.variant == Variant::bias_corrected),
                                           opt);
    }
    return independent_multiplier_bootstrap(des, fit, opt);
}

struct Analysis {
    Design design;
    FitResult fit;
    BootstrapRun run;
    std::vector<std::string> dropped;
};

/* Each round drops every conventional covariate whose interval at level 1 - alpha covers zero. */
inline Analysis analyze(const Inputs& in, Recipe r, const std::string& scheme, const BootstrapOptions& opt,
                        int eliminate_rounds = 0, double alpha = 0.05) {
    Analysis a;
    for (int round = 0;; ++round) {
        a.design = build_design(in, r);
        a.fit = fit_design(in, a.design, r);
        a.run = run_bootstrap(in, a.design, a.fit, resolve_scheme(scheme, a.design, a.fit), opt);
        if (round >= eliminate_rounds) {
            break;
        }
        auto ci = percentile_ci(a.run, 1.0 - alpha);
        std::vector<std::string> keep;
        std::vector<std::string> names = a.design.names();
        for (Eigen::Index k = r.intercept ? 1 : 0; k < a.design.p(); ++k) {
            if (ci[k].covers(0.0)) {
                a.dropped.push_back(names[k]);
            } else {
                keep.push_back(names[k]);
            }
        }
        if (static_cast<Eigen::Index>(keep.size()) == a.design.p() - (r.intercept ? 1 : 0)) {
            break;
        }
        if (keep.empty() && !r.intercept && a.design.d() == 0) {
            throw DegenerateError("backward elimination removed every covariate");
        }
        r.covariates = keep;
    }
    return a;
}

inline json counts_json(const Graph& g, const std::vector<MotifSpec>& motifs, double rho) {
    json out = json::array();
    for (const auto& m : motifs) {
        out.push_back(json{{"motif", motif_json(m)}, {"global", count_global(g, m, rho)}});
    }
    return json{{"n", g.n()}, {"edges", g.num_edges()}, {"rho", rho}, {"motifs", out}};
}

}

#endif
