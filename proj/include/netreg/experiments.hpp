#ifndef NETREG_EXPERIMENTS_HPP
#define NETREG_EXPERIMENTS_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netreg/bootstrap.hpp"
#include "netreg/counting.hpp"
#include "netreg/estimators.hpp"
#include "netreg/graphgen.hpp"
#include "netreg/hajek.hpp"
#include "netreg/io.hpp"
#include "netreg/spectral.hpp"

namespace netreg {

constexpr const char* library_version = "1.0.0";

struct ExperimentConfig {
    std::string experiment = "custom";
    int n = 1000;
    std::vector<double> deltas;
    std::optional<double> rho;
    int mc = 200;
    int B = 500;
    int d = 3;
    std::vector<std::string> motifs{"rooted_two_star"};
    std::vector<std::string> signals{"strong", "weak"};
    std::string downsample_kind = "neighborhood_average";
    double downsample_eps = 0.05;
    long N = 100000;
    int target_n = 0;
    double level = 0.95;
    double alpha = 0.05;
    double ratio_direction = 1.0;
    std::string graphon = "inverse_sum";
    std::string response = "linear";
    bool corrected = true;
    std::uint64_t seed = 1;
    std::string out_dir;
};

inline const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"fig1_bias",      "table2_grdpg", "table3_targets", "table4_coverage",
                                              "downsample_coverage", "custom"};
    return ids;
}

/* Desk-scale defaults per experiment; fields already present in the JSON config win. */
inline ExperimentConfig default_config(const std::string& id) {
    ExperimentConfig c;
    c.experiment = id;
    if (id == "fig1_bias") {
        c.deltas = {-0.75, -0.4, -0.25};
    } else if (id == "table2_grdpg") {
        c.n = 500;
        c.B = 200;
        c.rho = 1.0;
    } else if (id == "table3_targets") {
        c.n = 4000;
        c.deltas = {-0.70, -0.40, -0.25};
    } else if (id == "table4_coverage") {
        c.deltas = {-0.70, -0.40, -0.25};
        c.N = 100000;
    } else if (id == "downsample_coverage") {
        c.n = 4000;
        c.deltas = {-0.4};
        c.B = 500;
    } else if (id == "custom") {
        c.deltas = {-0.4};
        c.mc = 20;
    } else {
        throw ConfigError("unknown experiment '" + id + "'");
    }
    return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j{{"experiment", c.experiment},
                     {"n", c.n},
                     {"deltas", c.deltas},
                     {"mc", c.mc},
                     {"B", c.B},
                     {"d", c.d},
                     {"motifs", c.motifs},
                     {"signals", c.signals},
                     {"downsample_kind", c.downsample_kind},
                     {"downsample_eps", c.downsample_eps},
                     {"N", c.N},
                     {"target_n", c.target_n},
                     {"level", c.level},
                     {"alpha", c.alpha},
                     {"ratio_direction", c.ratio_direction},
                     {"graphon", c.graphon},
                     {"response", c.response},
                     {"corrected", c.corrected},
                     {"seed", c.seed}};
    j["rho"] = c.rho ? nlohmann::json(*c.rho) : nlohmann::json(nullptr);
    return j;
}

inline void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    const auto& ids = experiment_ids();
    if (std::find(ids.begin(), ids.end(), c.experiment) == ids.end()) {
        fail("unknown experiment '" + c.experiment + "'");
    }
    if (c.n < 2) {
        fail("n must be at least 2");
    }
    if (c.mc < 1 || c.B < 1 || c.d < 1 || c.N < 1) {
        fail("mc, B, d and N must be positive");
    }
    for (double dl : c.deltas) {
        if (!(dl < 0.0)) {
            fail("sparsity exponents must be negative (got " + std::to_string(dl) + ")");
        }
    }
    if (c.rho && (!(*c.rho > 0.0) || *c.rho > 1.0)) {
        fail("rho must lie in (0,1]");
    }
    if (!(c.level > 0.0) || c.level > 1.0 || c.alpha < 0.0 || c.alpha > 1.0) {
        fail("level must lie in (0,1] and alpha in [0,1]");
    }
    for (const auto& m : c.motifs) {
        builtin_motif(m);
    }
    for (const auto& s : c.signals) {
        if (s != "strong" && s != "weak") {
            fail("signals must be 'strong' or 'weak'");
        }
    }
    if (c.downsample_kind != "neighborhood_average" && c.downsample_kind != "transitivity" &&
        c.downsample_kind != "grdpg_ase") {
        fail("unknown downsample_kind '" + c.downsample_kind + "'");
    }
    if (c.graphon != "inverse_sum" && c.graphon != "bilinear" && c.graphon != "constant") {
        fail("unknown graphon '" + c.graphon + "'");
    }
    if (c.response != "linear" && c.response != "nonlinear") {
        fail("unknown response '" + c.response + "'");
    }
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) {
        throw ConfigError("config: top level must be an object");
    }
    if (!j.contains("experiment")) {
        throw ConfigError("config: missing 'experiment'");
    }
    ExperimentConfig c = default_config(j.at("experiment").get<std::string>());
    static const std::vector<std::string> known{
        "experiment", "n",      "deltas", "rho",      "mc",       "B",           "d",     "motifs",          "signals",
        "downsample_kind", "downsample_eps", "N", "target_n", "level", "alpha", "ratio_direction", "graphon",
        "response", "corrected", "seed", "out_dir"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw ConfigError("config: unknown key '" + it.key() + "'");
        }
    }
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key) && !j.at(key).is_null()) {
                field = j.at(key).get<std::decay_t<decltype(field)>>();
            }
        };
        get("n", c.n);
        get("deltas", c.deltas);
        if (j.contains("rho")) {
            c.rho = j.at("rho").is_null() ? std::nullopt : std::optional<double>(j.at("rho").get<double>());
        }
        get("mc", c.mc);
        get("B", c.B);
        get("d", c.d);
        get("motifs", c.motifs);
        get("signals", c.signals);
        get("downsample_kind", c.downsample_kind);
        get("downsample_eps", c.downsample_eps);
        get("N", c.N);
        get("target_n", c.target_n);
        get("level", c.level);
        get("alpha", c.alpha);
        get("ratio_direction", c.ratio_direction);
        get("graphon", c.graphon);
        get("response", c.response);
        get("corrected", c.corrected);
        get("seed", c.seed);
        get("out_dir", c.out_dir);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate_config(c);
    return c;
}

/* FNV-1a over the compact, key-sorted serialization of the effective config. */
inline std::string config_hash(const ExperimentConfig& c) {
    std::string text = config_to_json(c).dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct ResultBundle {
    ExperimentConfig config;
    std::vector<json> runs;
    std::vector<json> aggregate;
    json extra = json::object();

    json to_json() const {
        return json{{"provenance",
                     {{"config_hash", config_hash(config)},
                      {"seed", config.seed},
                      {"library", "netreg"},
                      {"version", library_version},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                    std::to_string(EIGEN_MINOR_VERSION)}}},
                    {"config", config_to_json(config)},
                    {"aggregate", aggregate},
                    {"extra", extra},
                    {"runs", runs}};
    }
};

inline std::uint64_t run_seed(std::uint64_t seed, std::uint64_t block, std::uint64_t run) {
    return Stream(seed).child(StreamId::monte_carlo).child(block).child(run).key();
}

inline Sparsity sparsity_for(const ExperimentConfig& c, double delta) {
    return c.rho ? Sparsity::constant(*c.rho) : Sparsity::power(delta);
}

inline GraphonSpec graphon_for(const ExperimentConfig& c, double delta) {
    Sparsity sp = sparsity_for(c, delta);
    if (c.graphon == "bilinear") {
        return bilinear_graphon(1.2, 1.6, sp);
    }
    if (c.graphon == "constant") {
        return constant_graphon(1.0, sp);
    }
    return inverse_sum_graphon(sp);
}

inline Design motif_design(const Sample& s, const std::vector<std::string>& motifs, bool intercept = true) {
    Design des = base_design(s.graph, s.Y, s.X, intercept);
    for (const auto& name : motifs) {
        add_motif_column(des, s.graph, builtin_motif(name));
    }
    return des;
}

inline Eigen::MatrixXd oracle_regressors(const Sample& s) {
    Eigen::MatrixXd L(s.X.rows(), s.X.cols() + s.truth.Z.cols());
    L << s.X, s.truth.Z;
    return L;
}

inline TargetProblem graphon_target_problem(const GraphonSpec& spec, const ResponseModel& dgp,
                                            const std::vector<std::string>& motifs) {
    TargetProblem p;
    p.draw = [spec, dgp](int n, std::uint64_t seed, bool with_graph) {
        return with_graph ? sample_graphon(spec, n, dgp, seed) : sample_population(spec, n, dgp, seed);
    };
    p.oracle_regressors = oracle_regressors;
    p.noisy_regressors = [motifs](const Sample& s) { return motif_design(s, motifs).L(); };
    return p;
}

namespace detail {

inline json summarize(const std::vector<double>& v) {
    std::vector<double> x = v;
    std::sort(x.begin(), x.end());
    Accumulator acc;
    for (double t : v) {
        acc.add(t);
    }
    double mean = static_cast<double>(acc.value() / v.size());
    Accumulator var;
    for (double t : v) {
        var.add((t - mean) * (t - mean));
    }
    double sd = v.size() > 1 ? std::sqrt(static_cast<double>(var.value() / (v.size() - 1))) : 0.0;
    return json{{"mean", mean}, {"sd", sd}, {"q05", quantile_sorted(x, 0.05)}, {"q50", quantile_sorted(x, 0.5)},
                {"q95", quantile_sorted(x, 0.95)}};
}

inline double rate(const std::vector<json>& runs, const std::function<bool(const json&)>& sel, const std::string& key) {
    int hit = 0;
    int total = 0;
    for (const auto& r : runs) {
        if (sel(r)) {
            ++total;
            hit += r.at(key).get<int>();
        }
    }
    return total ? static_cast<double>(hit) / total : 0.0;
}

inline std::vector<double> column(const std::vector<json>& runs, const std::function<bool(const json&)>& sel,
                                  const std::string& key) {
    std::vector<double> out;
    for (const auto& r : runs) {
        if (sel(r)) {
            out.push_back(r.at(key).get<double>());
        }
    }
    return out;
}

inline std::vector<std::string> coef_names(const std::vector<json>& runs, const std::string& prefix) {
    std::vector<std::string> out;
    if (runs.empty()) {
        return out;
    }
    for (auto it = runs.front().begin(); it != runs.front().end(); ++it) {
        if (it.key().rfind(prefix, 0) == 0) {
            out.push_back(it.key().substr(prefix.size()));
        }
    }
    return out;
}

}

/* Aggregates are a pure function of the per-run records. */
inline std::vector<json> aggregate_runs(const ExperimentConfig& c, const std::vector<json>& runs) {
    std::vector<json> out;
    const std::string& id = c.experiment;
    if (id == "fig1_bias") {
        for (double dl : c.deltas) {
            auto sel = [dl](const json& r) { return r.at("delta").get<double>() == dl; };
            json row{{"delta", dl}};
            for (const char* key : {"beta_z_ols", "beta_z_mod"}) {
                json s = detail::summarize(detail::column(runs, sel, key));
                for (auto it = s.begin(); it != s.end(); ++it) {
                    row[std::string(key) + "_" + it.key()] = it.value();
                }
            }
            out.push_back(row);
        }
    } else if (id == "table2_grdpg") {
        for (const auto& sig : c.signals) {
            auto sel = [sig](const json& r) { return r.at("signal").get<std::string>() == sig; };
            out.push_back(json{{"signal", sig},
                               {"coverage_beta1", detail::rate(runs, sel, "cover_x1")},
                               {"coverage_beta2", detail::rate(runs, sel, "cover_x2")},
                               {"rejection_rate", detail::rate(runs, sel, "reject")}});
        }
    } else if (id == "table3_targets") {
        out = runs;
    } else if (id == "table4_coverage" || id == "downsample_coverage" || id == "custom") {
        std::vector<std::string> prefixes;
        if (id == "table4_coverage") {
            prefixes = {"cover_mod_star_", "cover_ols_star_", "cover_ols_tilde_"};
        } else {
            prefixes = {"cover_"};
        }
        for (double dl : c.deltas) {
            auto sel = [dl](const json& r) { return r.at("delta").get<double>() == dl; };
            json row{{"delta", dl}};
            for (const auto& pre : prefixes) {
                for (const auto& name : detail::coef_names(runs, pre)) {
                    row[pre + name] = detail::rate(runs, sel, pre + name);
                }
            }
            if (id == "downsample_coverage") {
                auto m = detail::column(runs, sel, "m");
                row["m_mean"] = m.empty() ? 0.0 : std::accumulate(m.begin(), m.end(), 0.0) / m.size();
            }
            out.push_back(row);
        }
    }
    return out;
}

inline bool bundle_consistent(const json& bundle) {
    ExperimentConfig c = config_from_json(bundle.at("config"));
    std::vector<json> runs(bundle.at("runs").begin(), bundle.at("runs").end());
    json recomputed = aggregate_runs(c, runs);
    return recomputed == bundle.at("aggregate") && bundle.at("provenance").at("config_hash") == config_hash(c);
}

namespace detail {

inline std::vector<json> run_parallel(int count, const std::function<json(int)>& body) {
    std::vector<json> out(static_cast<std::size_t>(count));
    parallel_for(count, [&](std::int64_t r) { out[r] = body(static_cast<int>(r)); });
    return out;
}

inline void add_coverage(json& rec, const std::string& prefix, const std::vector<Interval>& ci,
                         const Eigen::VectorXd& target, const std::vector<std::string>& names) {
    for (std::size_t k = 0; k < ci.size(); ++k) {
        rec[prefix + names[k]] = ci[k].covers(target[static_cast<Eigen::Index>(k)]) ? 1 : 0;
    }
}

inline std::vector<std::string> short_names(const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (const auto& s : names) {
        std::string t;
        for (char ch : s) {
            t += std::isalnum(static_cast<unsigned char>(ch)) ? ch : '_';
        }
        out.push_back(t);
    }
    return out;
}

}

inline ResultBundle run_fig1(const ExperimentConfig& c) {
    ResultBundle b;
    b.config = c;
    for (std::size_t k = 0; k < c.deltas.size(); ++k) {
        double dl = c.deltas[k];
        GraphonSpec spec = graphon_for(c, dl);
        ResponseModel dgp = linear_response(spec);
        auto runs = detail::run_parallel(c.mc, [&](int r) {
            Sample s = sample_graphon(spec, c.n, dgp, run_seed(c.seed, k, r));
            Design des = motif_design(s, c.motifs);
            FitResult ols = ols_fit(des);
            FitResult mod = bias_corrected_fit(des, s.graph, merges_for(des));
            Eigen::Index z = des.p();
            return json{{"delta", dl}, {"run", r}, {"beta_z_ols", ols.beta[z]}, {"beta_z_mod", mod.beta[z]}};
        });
        b.runs.insert(b.runs.end(), runs.begin(), runs.end());
    }
    b.aggregate = aggregate_runs(c, b.runs);
    return b;
}

inline GrdpgSpec table2_model(const ExperimentConfig& c) {
    GrdpgSpec g;
    g.d = c.d;
    g.r_plus = c.d;
    g.r_minus = 0;
    BlockModel bm;
    bm.pi = {0.65, 0.25, 0.10};
    bm.B.resize(3, 3);
    bm.B << 0.80, 0.20, 0.10, 0.20, 0.70, 0.15, 0.10, 0.15, 0.90;
    g.blocks = bm;
    g.sparsity = c.rho ? Sparsity::constant(*c.rho) : Sparsity::power(c.deltas.empty() ? -0.25 : c.deltas.front());
    return g;
}

inline Eigen::VectorXd table2_network_coefficients(const std::string& signal) {
    Eigen::VectorXd bz(3);
    if (signal == "strong") {
        bz << 1.0, 2.0, 1.0;
    } else {
        bz << 0.0, 0.01, 0.0;
    }
    return bz;
}

inline ResultBundle run_table2(const ExperimentConfig& c) {
    ResultBundle b;
    b.config = c;
    GrdpgSpec model = table2_model(c);
    for (std::size_t k = 0; k < c.signals.size(); ++k) {
        const std::string& sig = c.signals[k];
        ResponseModel dgp = grdpg_linear_response(Eigen::Vector2d(1.0, 2.0), table2_network_coefficients(sig));
        auto runs = detail::run_parallel(c.mc, [&](int r) {
            std::uint64_t seed = run_seed(c.seed, k, r);
            Sample s = sample_grdpg(model, c.n, dgp, seed);
            Design des = base_design(s.graph, s.Y, s.X, false);
            Embedding e = ase(s.graph, c.d, des.rho);
            add_spectral_columns(des, e.Zhat);
            FitResult fit = ols_fit(des);
            BootstrapOptions opt;
            opt.B = c.B;
            opt.seed = seed;
            BootstrapRun run = independent_multiplier_bootstrap(des, fit, opt);
            auto ci = percentile_ci(run, c.level);
            TestResult t = network_effect_test(fit, run, c.alpha);
            return json{{"signal", sig},
                        {"run", r},
                        {"beta1", fit.beta[0]},
                        {"beta2", fit.beta[1]},
                        {"cover_x1", ci[0].covers(1.0) ? 1 : 0},
                        {"cover_x2", ci[1].covers(2.0) ? 1 : 0},
                        {"statistic", t.statistic},
                        {"critical", t.critical},
                        {"p_value", t.p_value},
                        {"reject", t.reject ? 1 : 0},
                        {"flagged", run.flagged_count}};
        });
        b.runs.insert(b.runs.end(), runs.begin(), runs.end());
    }
    b.aggregate = aggregate_runs(c, b.runs);
    return b;
}

inline const std::vector<std::string>& nonlinear_names() {
    static const std::vector<std::string> names{"intercept", "x1", "x2", "z"};
    return names;
}

inline TargetApprox nonlinear_targets(const ExperimentConfig& c, double delta, int n, std::uint64_t seed,
                                      bool with_tilde = true) {
    GraphonSpec spec = graphon_for(c, delta);
    return approximate_targets(graphon_target_problem(spec, nonlinear_response(spec), c.motifs), c.N, n, seed, 20,
                               with_tilde);
}

inline ResultBundle run_table3(const ExperimentConfig& c) {
    ResultBundle b;
    b.config = c;
    int n = c.target_n > 0 ? c.target_n : c.n;
    for (std::size_t k = 0; k < c.deltas.size(); ++k) {
        TargetApprox t = nonlinear_targets(c, c.deltas[k], n, run_seed(c.seed, 1000, k), true);
        json row{{"delta", c.deltas[k]}, {"N", t.N}, {"graphs", t.graphs}};
        const auto& names = nonlinear_names();
        for (std::size_t j = 0; j < names.size(); ++j) {
            row["beta_star_" + names[j]] = t.beta_star[j];
            row["se_star_" + names[j]] = t.se_star[j];
            row["beta_tilde_" + names[j]] = t.beta_tilde[j];
            row["se_tilde_" + names[j]] = t.se_tilde[j];
        }
        b.runs.push_back(row);
    }
    b.aggregate = aggregate_runs(c, b.runs);
    return b;
}

inline ResultBundle run_table4(const ExperimentConfig& c) {
    ResultBundle b;
    b.config = c;
    const auto& names = nonlinear_names();
    json targets = json::array();
    for (std::size_t k = 0; k < c.deltas.size(); ++k) {
        double dl = c.deltas[k];
        int tn = c.target_n > 0 ? c.target_n : c.n;
        TargetApprox t = nonlinear_targets(c, dl, tn, run_seed(c.seed, 1000, k), true);
        targets.push_back(json{{"delta", dl}, {"beta_star", vector_json(t.beta_star)},
                               {"beta_tilde", vector_json(t.beta_tilde)}});
        GraphonSpec spec = graphon_for(c, dl);
        ResponseModel dgp = nonlinear_response(spec);
        auto runs = detail::run_parallel(c.mc, [&](int r) {
            std::uint64_t seed = run_seed(c.seed, k, r);
            Sample s = sample_graphon(spec, c.n, dgp, seed);
            Design des = motif_design(s, c.motifs);
            FitResult ols = ols_fit(des);
            FitResult mod = bias_corrected_fit(des, s.graph, merges_for(des));
            BootstrapOptions opt;
            opt.B = c.B;
            opt.seed = seed;
            opt.ratio_direction = c.ratio_direction;
            BootstrapRun run_ols = linear_multiplier_bootstrap(ols, hajek_projection(s.graph, des, false), opt);
            BootstrapRun run_mod = linear_multiplier_bootstrap(mod, hajek_projection(s.graph, des, true), opt);
            auto ci_ols = percentile_ci(run_ols, c.level);
            auto ci_mod = percentile_ci(run_mod, c.level);
            json rec{{"delta", dl}, {"run", r}};
            for (std::size_t j = 0; j < names.size(); ++j) {
                rec["ols_" + names[j]] = ols.beta[j];
                rec["mod_" + names[j]] = mod.beta[j];
            }
            detail::add_coverage(rec, "cover_mod_star_", ci_mod, t.beta_star, names);
            detail::add_coverage(rec, "cover_ols_star_", ci_ols, t.beta_star, names);
            detail::add_coverage(rec, "cover_ols_tilde_", ci_ols, t.beta_tilde, names);
            return rec;
        });
        b.runs.insert(b.runs.end(), runs.begin(), runs.end());
    }
    b.extra["targets"] = targets;
    b.aggregate = aggregate_runs(c, b.runs);
    return b;
}

/* Neighborhood-average covariate on w(u,v) = 1.2 + 1.6uv; Y = 1 + 2 X1 + 3 Z + eps. */
inline ResultBundle run_downsample(const ExperimentConfig& c) {
    ResultBundle b;
    b.config = c;
    const std::vector<std::string> names{"intercept", "x1", "z"};
    for (std::size_t k = 0; k < c.deltas.size(); ++k) {
        double dl = c.deltas[k];
        GraphonSpec spec = bilinear_graphon(1.2, 1.6, sparsity_for(c, dl));
        ResponseModel dgp = neighborhood_response(1.2, 1.6, 3.0);
        auto runs = detail::run_parallel(c.mc, [&](int r) {
            std::uint64_t seed = run_seed(c.seed, k, r);
            Sample s = sample_graphon(spec, c.n, dgp, seed);
            Design des = base_design(s.graph, s.Y, s.X, true);
            auto comp = composite_covariate(s.graph, CompositeKind::neighborhood_average, des.rho, s.X.col(1));
            append_column(des, comp.values, Provenance{ColumnKind::neighborhood_average, std::nullopt, "z"});
            DownsampleKind kind = c.downsample_kind == "transitivity" ? DownsampleKind::transitivity
                                  : c.downsample_kind == "grdpg_ase" ? DownsampleKind::grdpg_ase
                                                                     : DownsampleKind::neighborhood_average;
            int m = choose_downsample_size(mean_degree(s.graph), kind, c.n, static_cast<int>(des.q()),
                                           c.downsample_eps);
            FitResult fit = downsample_fit(des, m, Selection::seeded_random, seed);
            BootstrapOptions opt;
            opt.B = c.B;
            opt.seed = seed;
            BootstrapRun run = independent_multiplier_bootstrap(des, fit, opt);
            auto ci = percentile_ci(run, c.level);
            json rec{{"delta", dl}, {"run", r}, {"m", m}, {"imputed", std::count(comp.imputed.begin(), comp.imputed.end(), 1)}};
            for (std::size_t j = 0; j < names.size(); ++j) {
                rec["beta_" + names[j]] = fit.beta[j];
            }
            detail::add_coverage(rec, "cover_", ci, *dgp.beta, names);
            return rec;
        });
        b.runs.insert(b.runs.end(), runs.begin(), runs.end());
    }
    b.aggregate = aggregate_runs(c, b.runs);
    return b;
}

/* Graphon model with motif covariates; linear bootstrap CIs scored against the known
 * coefficients (linear response) or Monte-Carlo beta_star (nonlinear response). */
inline ResultBundle run_custom(const ExperimentConfig& c) {
    ResultBundle b;
    b.config = c;
    for (std::size_t k = 0; k < c.deltas.size(); ++k) {
        double dl = c.deltas[k];
        GraphonSpec spec = graphon_for(c, dl);
        ResponseModel dgp = c.response == "nonlinear" ? nonlinear_response(spec) : linear_response(spec);
        if (c.motifs.size() != 1 || c.motifs.front() != "rooted_two_star") {
            dgp.beta.reset();
        }
        Eigen::VectorXd target;
        if (dgp.beta) {
            target = *dgp.beta;
        } else {
            target = approximate_targets(graphon_target_problem(spec, dgp, c.motifs), c.N, c.n,
                                         run_seed(c.seed, 1000, k), 20, false)
                         .beta_star;
        }
        auto runs = detail::run_parallel(c.mc, [&](int r) {
            std::uint64_t seed = run_seed(c.seed, k, r);
            Sample s = sample_graphon(spec, c.n, dgp, seed);
            Design des = motif_design(s, c.motifs);
            FitResult fit = c.corrected ? bias_corrected_fit(des, s.graph, merges_for(des)) : ols_fit(des);
            BootstrapOptions opt;
            opt.B = c.B;
            opt.seed = seed;
            opt.ratio_direction = c.ratio_direction;
            BootstrapRun run = linear_multiplier_bootstrap(fit, hajek_projection(s.graph, des, c.corrected), opt);
            auto ci = percentile_ci(run, c.level);
            auto names = detail::short_names(des.names());
            json rec{{"delta", dl}, {"run", r}};
            for (std::size_t j = 0; j < names.size(); ++j) {
                rec["beta_" + names[j]] = fit.beta[j];
            }
            if (target.size() == fit.beta.size()) {
                detail::add_coverage(rec, "cover_", ci, target, names);
            }
            return rec;
        });
        b.runs.insert(b.runs.end(), runs.begin(), runs.end());
    }
    b.aggregate = aggregate_runs(c, b.runs);
    return b;
}

/* The data set of the first Monte Carlo run at the first sparsity level. */
inline Sample first_sample(const ExperimentConfig& c) {
    double dl = c.deltas.empty() ? -0.25 : c.deltas.front();
    std::uint64_t seed = run_seed(c.seed, 0, 0);
    if (c.experiment == "table2_grdpg") {
        const std::string sig = c.signals.empty() ? "strong" : c.signals.front();
        return sample_grdpg(table2_model(c), c.n,
                            grdpg_linear_response(Eigen::Vector2d(1.0, 2.0), table2_network_coefficients(sig)), seed);
    }
    if (c.experiment == "downsample_coverage") {
        return sample_graphon(bilinear_graphon(1.2, 1.6, sparsity_for(c, dl)), c.n,
                              neighborhood_response(1.2, 1.6, 3.0), seed);
    }
    GraphonSpec spec = graphon_for(c, dl);
    bool nonlinear = c.experiment == "table3_targets" || c.experiment == "table4_coverage" ||
                     (c.experiment == "custom" && c.response == "nonlinear");
    return sample_graphon(spec, c.n, nonlinear ? nonlinear_response(spec) : linear_response(spec), seed);
}

using ExperimentFn = std::function<ResultBundle(const ExperimentConfig&)>;

inline const std::map<std::string, ExperimentFn>& experiment_registry() {
    static const std::map<std::string, ExperimentFn> reg{{"fig1_bias", run_fig1},
                                                         {"table2_grdpg", run_table2},
                                                         {"table3_targets", run_table3},
                                                         {"table4_coverage", run_table4},
                                                         {"downsample_coverage", run_downsample},
                                                         {"custom", run_custom}};
    return reg;
}

inline ResultBundle cmd_simulate(const ExperimentConfig& c) {
    validate_config(c);
    return experiment_registry().at(c.experiment)(c);
}

inline void write_rows_csv(const std::vector<json>& rows, const std::string& path) {
    auto out = detail::open_out(path);
    if (rows.empty()) {
        return;
    }
    bool first = true;
    for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
        out << (first ? "" : ",") << it.key();
        first = false;
    }
    out << "\n";
    for (const auto& r : rows) {
        first = true;
        for (auto it = rows.front().begin(); it != rows.front().end(); ++it) {
            const json& v = r.contains(it.key()) ? r.at(it.key()) : json(nullptr);
            out << (first ? "" : ",");
            if (v.is_string()) {
                out << v.get<std::string>();
            } else if (!v.is_null()) {
                out << v.dump();
            }
            first = false;
        }
        out << "\n";
    }
}

inline void write_bundle(const ResultBundle& b, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_json(b.to_json(), dir + "/bundle.json");
    write_rows_csv(b.runs, dir + "/runs.csv");
    write_rows_csv(b.aggregate, dir + "/aggregate.csv");
}

}

#endif
