#ifndef NETREG_ESTIMATORS_HPP
#define NETREG_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netreg/common.hpp"
#include "netreg/counting.hpp"
#include "netreg/decomposition.hpp"
#include "netreg/graph.hpp"
#include "netreg/graphgen.hpp"
#include "netreg/motif.hpp"
#include "netreg/rng.hpp"

namespace netreg {

enum class ColumnKind { motif, rooted_motif, spectral, transitivity, neighborhood_average, external };

inline std::string to_string(ColumnKind k) {
    switch (k) {
    case ColumnKind::motif:
        return "motif";
    case ColumnKind::rooted_motif:
        return "rooted_motif";
    case ColumnKind::spectral:
        return "spectral";
    case ColumnKind::transitivity:
        return "transitivity";
    case ColumnKind::neighborhood_average:
        return "neighborhood_average";
    default:
        return "external";
    }
}

struct Provenance {
    ColumnKind kind = ColumnKind::external;
    std::optional<MotifSpec> motif;
    std::string label;

    bool is_motif() const { return kind == ColumnKind::motif || kind == ColumnKind::rooted_motif; }
};

struct Design {
    Eigen::VectorXd Y;
    Eigen::MatrixXd X;
    Eigen::MatrixXd Zhat;
    std::vector<Provenance> provenance;
    std::vector<std::string> x_names;
    double rho = 0.0;
    bool intercept = true;
    /* d_i / ((n-1) rho) - 1 when built from a graph; drives the sparsity-ratio bootstrap coordinate. */
    Eigen::VectorXd degree_term;

    Eigen::Index n() const { return Y.size(); }
    Eigen::Index p() const { return X.cols(); }
    Eigen::Index d() const { return Zhat.cols(); }
    Eigen::Index q() const { return X.cols() + Zhat.cols(); }

    Eigen::MatrixXd L() const {
        Eigen::MatrixXd out(n(), q());
        out << X, Zhat;
        return out;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (Eigen::Index k = 0; k < p(); ++k) {
            out.push_back(k < static_cast<Eigen::Index>(x_names.size()) ? x_names[k] : "x" + std::to_string(k));
        }
        for (Eigen::Index k = 0; k < d(); ++k) {
            out.push_back(k < static_cast<Eigen::Index>(provenance.size()) && !provenance[k].label.empty()
                              ? provenance[k].label
                              : "z" + std::to_string(k));
        }
        return out;
    }

    void validate() const {
        if (X.rows() != n() || Zhat.rows() != n()) {
            throw SchemaError("design: row counts of Y, X and Z disagree");
        }
        if (static_cast<Eigen::Index>(provenance.size()) != d()) {
            throw SchemaError("design: one provenance entry per network column required");
        }
        if (p() < 1 && d() < 1) {
            throw SchemaError("design: no covariates");
        }
        if (!Y.allFinite() || !X.allFinite() || !Zhat.allFinite()) {
            throw SchemaError("design: non-finite entries");
        }
        if (intercept && (p() < 1 || (X.col(0).array() != 1.0).any())) {
            throw SchemaError("design: intercept requested but the first X column is not all ones");
        }
        if (degree_term.size() != 0 && degree_term.size() != n()) {
            throw SchemaError("design: degree term length mismatch");
        }
    }
};

inline Eigen::VectorXd degree_term(const Graph& g, double rho) {
    Eigen::VectorXd t(g.n());
    for (int i = 0; i < g.n(); ++i) {
        t[i] = g.degree(i) / ((g.n() - 1) * rho) - 1.0;
    }
    return t;
}

inline Design base_design(const Graph& g, const Eigen::VectorXd& Y, const Eigen::MatrixXd& X, bool intercept) {
    Design des;
    des.Y = Y;
    des.X = X;
    des.intercept = intercept;
    des.rho = edge_density(g);
    require_density(des.rho);
    des.degree_term = degree_term(g, des.rho);
    des.Zhat.resize(g.n(), 0);
    if (intercept) {
        des.x_names.push_back("intercept");
    }
    for (Eigen::Index k = intercept ? 1 : 0; k < X.cols(); ++k) {
        des.x_names.push_back("x" + std::to_string(intercept ? k : k + 1));
    }
    return des;
}

inline void append_column(Design& des, const Eigen::VectorXd& col, Provenance prov) {
    Eigen::MatrixXd z(des.n(), des.d() + 1);
    z << des.Zhat, col;
    des.Zhat = std::move(z);
    des.provenance.push_back(std::move(prov));
}

inline void add_motif_column(Design& des, const Graph& g, const MotifSpec& m) {
    auto lc = count_local(g, m, des.rho);
    append_column(des, lc.values,
                  Provenance{m.rooted() ? ColumnKind::rooted_motif : ColumnKind::motif, m, m.label()});
}

inline void add_spectral_columns(Design& des, const Eigen::MatrixXd& zhat, const std::string& prefix = "ase") {
    for (Eigen::Index c = 0; c < zhat.cols(); ++c) {
        append_column(des, zhat.col(c), Provenance{ColumnKind::spectral, std::nullopt, prefix + std::to_string(c + 1)});
    }
}

enum class Variant { ols, bias_corrected, downsampled };

inline std::string to_string(Variant v) {
    switch (v) {
    case Variant::ols:
        return "ols";
    case Variant::bias_corrected:
        return "bias_corrected";
    default:
        return "downsampled";
    }
}

struct FitResult {
    Eigen::VectorXd beta;
    Variant variant = Variant::ols;
    int m = 0;
    Eigen::MatrixXd Lambda;
    Eigen::MatrixXd Lambda_mod;
    Eigen::VectorXd gamma;
    double rho = 0.0;
    double min_singular = 0.0;
    double condition = 0.0;
    std::vector<int> rows;
    Eigen::Index p = 0;
    Eigen::Index d = 0;
    std::vector<std::string> names;
    std::vector<Provenance> provenance;

    const Eigen::MatrixXd& system() const { return variant == Variant::bias_corrected ? Lambda_mod : Lambda; }
    Eigen::VectorXd beta_z() const { return beta.tail(d); }
};

struct SolveInfo {
    Eigen::VectorXd x;
    double min_singular = 0.0;
    double condition = 0.0;
    bool singular = false;
};

constexpr double singular_threshold = 1e-10;

inline SolveInfo checked_solve(const Eigen::MatrixXd& M, const Eigen::VectorXd& b) {
    SolveInfo out;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    double mx = sv.size() ? sv[0] : 0.0;
    out.min_singular = sv.size() ? sv[sv.size() - 1] : 0.0;
    out.condition = out.min_singular > 0 ? mx / out.min_singular : std::numeric_limits<double>::infinity();
    out.singular = !(out.min_singular > singular_threshold * mx) || !M.allFinite() || !b.allFinite();
    if (!out.singular) {
        out.x = M.colPivHouseholderQr().solve(b);
    }
    return out;
}

inline std::string singular_message(const std::string& what, const Eigen::MatrixXd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    std::string msg = what + ": rank-deficient system, singular values [";
    const auto& sv = svd.singularValues();
    for (Eigen::Index k = 0; k < sv.size(); ++k) {
        msg += (k ? ", " : "") + std::to_string(sv[k]);
    }
    return msg + "]";
}

namespace detail {

inline FitResult ols_rows(const Design& des, const std::vector<int>& rows) {
    des.validate();
    Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd Lfull = des.L();
    Eigen::MatrixXd L(m, des.q());
    Eigen::VectorXd Y(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        L.row(k) = Lfull.row(rows[k]);
        Y[k] = des.Y[rows[k]];
    }
    FitResult fit;
    fit.Lambda = L.transpose() * L / static_cast<double>(m);
    fit.Lambda = 0.5 * (fit.Lambda + fit.Lambda.transpose());
    fit.gamma = L.transpose() * Y / static_cast<double>(m);
    SolveInfo info = checked_solve(fit.Lambda, fit.gamma);
    if (info.singular) {
        throw SingularError(singular_message("ols_fit", fit.Lambda));
    }
    fit.beta = info.x;
    fit.min_singular = info.min_singular;
    fit.condition = info.condition;
    fit.rho = des.rho;
    fit.rows = rows;
    fit.p = des.p();
    fit.d = des.d();
    fit.names = des.names();
    fit.provenance = des.provenance;
    return fit;
}

}

inline FitResult ols_fit(const Design& des) {
    std::vector<int> rows(static_cast<std::size_t>(des.n()));
    std::iota(rows.begin(), rows.end(), 0);
    FitResult fit = detail::ols_rows(des, rows);
    fit.m = static_cast<int>(des.n());
    return fit;
}

using MergeMap = std::map<std::pair<int, int>, MotifDecomposition>;

/* Decompositions for every motif column pair (j <= k). */
inline MergeMap merges_for(const Design& des) {
    MergeMap out;
    for (Eigen::Index j = 0; j < des.d(); ++j) {
        for (Eigen::Index k = j; k < des.d(); ++k) {
            if (!des.provenance[j].is_motif() || !des.provenance[k].is_motif()) {
                throw SchemaError("bias correction applies to motif covariates only; column " +
                                  des.provenance[des.provenance[j].is_motif() ? k : j].label + " is not one");
            }
            out.emplace(std::make_pair(static_cast<int>(j), static_cast<int>(k)),
                        merge_motifs(*des.provenance[j].motif, *des.provenance[k].motif, MergeMode::leading_only));
        }
    }
    return out;
}

inline Eigen::MatrixXd leading_block(const Graph& g, const Design& des, const MergeMap& merges) {
    Eigen::Index d = des.d();
    Eigen::MatrixXd S(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = j; k < d; ++k) {
            if (!des.provenance[j].is_motif() || !des.provenance[k].is_motif()) {
                throw SchemaError("bias correction applies to motif covariates only");
            }
            auto it = merges.find({static_cast<int>(j), static_cast<int>(k)});
            if (it == merges.end()) {
                throw SchemaError("bias correction: missing decomposition for columns (" + std::to_string(j) + "," +
                                  std::to_string(k) + ")");
            }
            S(j, k) = S(k, j) = leading_term(g, it->second, des.rho);
        }
    }
    return S;
}

/* Replaces the ZZ block of the Gram matrix by S (symmetrized) and solves. */
inline FitResult bias_corrected_fit(const Design& des, const Eigen::MatrixXd& S) {
    FitResult fit = ols_fit(des);
    Eigen::Index p = des.p();
    Eigen::Index d = des.d();
    if (S.rows() != d || S.cols() != d) {
        throw SchemaError("bias_corrected_fit: leading block has the wrong shape");
    }
    fit.Lambda_mod = fit.Lambda;
    fit.Lambda_mod.bottomRightCorner(d, d) = 0.5 * (S + S.transpose());
    SolveInfo info = checked_solve(fit.Lambda_mod, fit.gamma);
    if (info.singular) {
        throw SingularError(singular_message("bias_corrected_fit", fit.Lambda_mod));
    }
    fit.beta = info.x;
    fit.min_singular = info.min_singular;
    fit.condition = info.condition;
    fit.variant = Variant::bias_corrected;
    (void)p;
    return fit;
}

inline FitResult bias_corrected_fit(const Design& des, const Graph& g, const MergeMap& merges) {
    return bias_corrected_fit(des, leading_block(g, des, merges));
}

enum class Selection { first_m, seeded_random };

inline std::vector<int> select_rows(Eigen::Index n, int m, Selection sel, std::uint64_t seed) {
    std::vector<int> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    if (sel == Selection::seeded_random) {
        Stream s = Stream(seed).child(StreamId::selection);
        for (int k = 0; k < m; ++k) {
            auto span = static_cast<std::uint64_t>(n - k);
            auto j = k + static_cast<int>(s.bits(static_cast<std::uint64_t>(k)) % span);
            std::swap(rows[k], rows[j]);
        }
        rows.resize(m);
        std::sort(rows.begin(), rows.end());
    } else {
        rows.resize(m);
    }
    return rows;
}

inline FitResult downsample_fit(const Design& des, int m, Selection sel = Selection::seeded_random,
                                std::uint64_t seed = 0) {
    if (m < des.q() || m > des.n()) {
        throw ConfigError("downsample_fit: need p+d <= m <= n (m=" + std::to_string(m) + ")");
    }
    FitResult fit = detail::ols_rows(des, select_rows(des.n(), m, sel, seed));
    fit.variant = Variant::downsampled;
    fit.m = m;
    return fit;
}

enum class DownsampleKind { transitivity, neighborhood_average, grdpg_ase };

inline int choose_downsample_size(double lambda, DownsampleKind kind, int n, int pd, double eps = 0.05) {
    double raw = 0.0;
    if (lambda > 0.0) {
        switch (kind) {
        case DownsampleKind::transitivity:
            raw = std::pow(std::min(lambda, lambda * lambda * lambda / n), 0.5 - eps);
            break;
        case DownsampleKind::neighborhood_average:
            raw = std::pow(lambda, 0.5 - eps);
            break;
        case DownsampleKind::grdpg_ase: {
            double l4 = std::pow(std::log(static_cast<double>(n)), 4);
            raw = std::min(std::pow(std::min(lambda * lambda / l4, static_cast<double>(n)), 1.0 - eps),
                           static_cast<double>(n));
            break;
        }
        }
    }
    double m = std::floor(raw);
    if (kind != DownsampleKind::grdpg_ase) {
        while (m > 1 && m * std::log(m) > n) {
            m -= 1;
        }
    }
    m = std::clamp(m, static_cast<double>(pd + 1), static_cast<double>(n));
    return static_cast<int>(m);
}

enum class CompositeKind { transitivity, neighborhood_average };

struct CompositeCovariate {
    Eigen::VectorXd values;
    std::vector<char> imputed;
};

/* Local transitivity 3 t_i / (rho W_i) with W_i the local two-star count, or the neighbor mean of x.
 * Nodes with a zero denominator get the mean of the well-defined nodes. */
inline CompositeCovariate composite_covariate(const Graph& g, CompositeKind kind, double rho,
                                              const Eigen::VectorXd& x = Eigen::VectorXd()) {
    int n = g.n();
    CompositeCovariate out;
    out.values = Eigen::VectorXd::Zero(n);
    out.imputed.assign(n, 0);
    if (kind == CompositeKind::transitivity) {
        require_density(rho);
        auto t = detail::triangles_at(g);
        auto w = raw_local_counts(g, two_star());
        for (int i = 0; i < n; ++i) {
            if (w[i] == 0) {
                out.imputed[i] = 1;
            } else {
                out.values[i] = static_cast<double>(3.0L * t[i] / (rho * w[i]));
            }
        }
    } else {
        if (x.size() != n) {
            throw SchemaError("neighborhood_average: covariate length must equal n");
        }
        for (int i = 0; i < n; ++i) {
            if (g.degree(i) == 0) {
                out.imputed[i] = 1;
                continue;
            }
            Accumulator acc;
            for (int l : g.neighbors(i)) {
                acc.add(x[l]);
            }
            out.values[i] = static_cast<double>(acc.value() / g.degree(i));
        }
    }
    Accumulator acc;
    int good = 0;
    for (int i = 0; i < n; ++i) {
        if (!out.imputed[i]) {
            acc.add(out.values[i]);
            ++good;
        }
    }
    double fill = good ? static_cast<double>(acc.value() / good) : 0.0;
    for (int i = 0; i < n; ++i) {
        if (out.imputed[i]) {
            out.values[i] = fill;
        }
    }
    return out;
}

struct TargetApprox {
    Eigen::VectorXd beta_star;
    Eigen::VectorXd beta_tilde;
    Eigen::VectorXd se_star;
    Eigen::VectorXd se_tilde;
    long N = 0;
    int graphs = 0;
};

/* Callbacks describing the model: draw(n, seed, with_graph) and the two regressor recipes. */
struct TargetProblem {
    std::function<Sample(int, std::uint64_t, bool)> draw;
    std::function<Eigen::MatrixXd(const Sample&)> oracle_regressors;
    std::function<Eigen::MatrixXd(const Sample&)> noisy_regressors;
};

namespace detail {

struct Moments {
    Eigen::MatrixXd LL;
    Eigen::VectorXd LY;
    double count = 0.0;

    void add(const Eigen::MatrixXd& L, const Eigen::VectorXd& Y) {
        if (LL.size() == 0) {
            LL = Eigen::MatrixXd::Zero(L.cols(), L.cols());
            LY = Eigen::VectorXd::Zero(L.cols());
        }
        LL += L.transpose() * L;
        LY += L.transpose() * Y;
        count += static_cast<double>(L.rows());
    }

    Eigen::VectorXd solve(const std::string& what) const {
        SolveInfo info = checked_solve(LL / count, LY / count);
        if (info.singular) {
            throw SingularError(singular_message(what, LL / count));
        }
        return info.x;
    }
};

inline Eigen::VectorXd batch_se(const std::vector<Eigen::VectorXd>& b) {
    Eigen::Index q = b.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
    for (const auto& v : b) {
        mean += v;
    }
    mean /= static_cast<double>(b.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(q);
    for (const auto& v : b) {
        var += (v - mean).cwiseAbs2();
    }
    var /= static_cast<double>(b.size() - 1);
    return (var / static_cast<double>(b.size())).cwiseSqrt();
}

}

/* beta_star from N i.i.d. draws with noiseless covariates (no graph needed); beta_tilde from
 * ceil(N/n) (at least 10) independent graphs of size n with estimated covariates. SEs by batching. */
inline TargetApprox approximate_targets(const TargetProblem& prob, long N, int n, std::uint64_t seed,
                                        int batches = 20, bool with_tilde = true) {
    if (N < 1000) {
        throw ConfigError("approximate_targets: need N >= 1000");
    }
    Stream root = Stream(seed).child(StreamId::monte_carlo);
    TargetApprox out;
    out.N = N;
    long per = N / batches;
    std::vector<detail::Moments> parts(batches);
    parallel_for(batches, [&](std::int64_t b) {
        long size = b == batches - 1 ? N - per * (batches - 1) : per;
        Sample s = prob.draw(static_cast<int>(size), root.child(2 * b).key(), false);
        parts[b].add(prob.oracle_regressors(s), s.Y);
    });
    detail::Moments total;
    std::vector<Eigen::VectorXd> est;
    for (auto& m : parts) {
        est.push_back(m.solve("approximate_targets"));
        if (total.LL.size() == 0) {
            total = m;
        } else {
            total.LL += m.LL;
            total.LY += m.LY;
            total.count += m.count;
        }
    }
    out.beta_star = total.solve("approximate_targets");
    out.se_star = detail::batch_se(est);
    if (with_tilde) {
        int graphs = static_cast<int>(std::max<long>(10, (N + n - 1) / n));
        std::vector<detail::Moments> g(graphs);
        parallel_for(graphs, [&](std::int64_t b) {
            Sample s = prob.draw(n, root.child(2 * b + 1).key(), true);
            g[b].add(prob.noisy_regressors(s), s.Y);
        });
        detail::Moments gt;
        std::vector<Eigen::VectorXd> ge;
        for (auto& m : g) {
            ge.push_back(m.solve("approximate_targets"));
            if (gt.LL.size() == 0) {
                gt = m;
            } else {
                gt.LL += m.LL;
                gt.LY += m.LY;
                gt.count += m.count;
            }
        }
        out.beta_tilde = gt.solve("approximate_targets");
        out.se_tilde = detail::batch_se(ge);
        out.graphs = graphs;
    }
    return out;
}

}

#endif
