#ifndef NETREG_BOOTSTRAP_HPP
#define NETREG_BOOTSTRAP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/common.hpp"
#include "netreg/estimators.hpp"
#include "netreg/hajek.hpp"
#include "netreg/rng.hpp"

namespace netreg {

enum class Scheme { linear_multiplier, independent_multiplier };

inline std::string to_string(Scheme s) {
    return s == Scheme::linear_multiplier ? "linear_multiplier" : "independent_multiplier";
}

enum class Multipliers { normal, ones };

struct BootstrapOptions {
    int B = 500;
    std::uint64_t seed = 0;
    Multipliers multipliers = Multipliers::normal;
    /* Sign of the sparsity-ratio exponent in the linear scheme: +1 multiplies by (rho_b/rho)^alpha. */
    double ratio_direction = 1.0;
    double max_flagged_fraction = 0.02;
    /* Independent scheme only: rescale by the bootstrap sparsity ratio. */
    bool scale_sparsity = true;
};

struct BootstrapRun {
    Eigen::MatrixXd replicates;
    std::vector<char> flagged;
    int flagged_count = 0;
    Scheme scheme = Scheme::linear_multiplier;
    bool corrected = false;
    int B = 0;
    std::uint64_t seed = 0;
    FitResult point;

    std::vector<int> usable() const {
        std::vector<int> out;
        for (int b = 0; b < B; ++b) {
            if (!flagged[b]) {
                out.push_back(b);
            }
        }
        return out;
    }
};

inline Eigen::VectorXd draw_multipliers(const BootstrapOptions& opt, int b, Eigen::Index n) {
    Eigen::VectorXd w(n);
    if (opt.multipliers == Multipliers::ones) {
        w.setOnes();
        return w;
    }
    Stream s = Stream(opt.seed).child(StreamId::multipliers).child(static_cast<std::uint64_t>(b));
    for (Eigen::Index i = 0; i < n; ++i) {
        w[i] = s.normal(static_cast<std::uint64_t>(i));
    }
    return w;
}

namespace detail {

inline void finish_run(BootstrapRun& run, const BootstrapOptions& opt) {
    run.flagged_count = static_cast<int>(std::count(run.flagged.begin(), run.flagged.end(), 1));
    if (run.flagged_count > opt.max_flagged_fraction * run.B) {
        throw Error("bootstrap: " + std::to_string(run.flagged_count) + " of " + std::to_string(run.B) +
                    " replicates flagged (limit " + std::to_string(opt.max_flagged_fraction * 100.0) + "%)");
    }
}

}

/* Perturbations n^{-1} sum_i (W_i - 1) D g_i, one row per replicate. */
inline Eigen::MatrixXd linear_perturbations(const HajekTable& h, const BootstrapOptions& opt) {
    Eigen::Index n = h.G.rows();
    Eigen::MatrixXd out(opt.B, h.width());
    parallel_for(opt.B, [&](std::int64_t b) {
        Eigen::VectorXd w = draw_multipliers(opt, static_cast<int>(b), n).array() - 1.0;
        out.row(b) = ((h.G.transpose() * w).cwiseProduct(h.order) / static_cast<double>(n)).transpose();
    });
    return out;
}

inline BootstrapRun linear_multiplier_bootstrap(const FitResult& fit, const HajekTable& h,
                                                const BootstrapOptions& opt = {}) {
    if (fit.variant == Variant::downsampled) {
        throw CapabilityError("linear multiplier bootstrap needs an ols or bias_corrected fit");
    }
    Eigen::Index q = h.q;
    if (fit.beta.size() != q) {
        throw SchemaError("linear multiplier bootstrap: Hajek table not aligned with the fit");
    }
    const Eigen::MatrixXd& M0 = fit.system();
    BootstrapRun run;
    run.scheme = Scheme::linear_multiplier;
    run.corrected = fit.variant == Variant::bias_corrected;
    run.B = opt.B;
    run.seed = opt.seed;
    run.point = fit;
    run.replicates = Eigen::MatrixXd::Zero(opt.B, q);
    run.flagged.assign(opt.B, 0);
    Eigen::Index n = h.G.rows();
    parallel_for(opt.B, [&](std::int64_t b) {
        Eigen::VectorXd w = draw_multipliers(opt, static_cast<int>(b), n).array() - 1.0;
        Eigen::VectorXd delta = (h.G.transpose() * w).cwiseProduct(h.order) / static_cast<double>(n);
        double ratio = 1.0 + delta[h.rho_index()];
        if (!(ratio > 0.0)) {
            run.flagged[b] = 1;
            return;
        }
        Eigen::MatrixXd M(q, q);
        Eigen::VectorXd v(q);
        for (Eigen::Index c = 0; c < q; ++c) {
            for (Eigen::Index a = 0; a < q; ++a) {
                Eigen::Index k = h.lambda_index(a, c);
                M(a, c) = (M0(a, c) + delta[k]) * std::pow(ratio, opt.ratio_direction * h.alpha[k]);
            }
            Eigen::Index k = h.gamma_index(c);
            v[c] = (fit.gamma[c] + delta[k]) * std::pow(ratio, opt.ratio_direction * h.alpha[k]);
        }
        M = 0.5 * (M + M.transpose());
        SolveInfo info = checked_solve(M, v);
        if (info.singular || !info.x.allFinite()) {
            run.flagged[b] = 1;
            return;
        }
        run.replicates.row(b) = info.x.transpose();
    });
    detail::finish_run(run, opt);
    return run;
}

inline BootstrapRun independent_multiplier_bootstrap(const Design& des, const FitResult& fit,
                                                     BootstrapOptions opt = {}) {
    des.validate();
    Eigen::Index q = des.q();
    const std::vector<int>& rows = fit.rows;
    Eigen::Index m = static_cast<Eigen::Index>(rows.size());
    if (m == 0 || fit.beta.size() != q) {
        throw SchemaError("independent multiplier bootstrap: fit not aligned with the design");
    }
    bool downsampled = fit.variant == Variant::downsampled;
    if (downsampled || des.degree_term.size() == 0) {
        opt.scale_sparsity = false;
    }
    Eigen::MatrixXd Lfull = des.L();
    Eigen::MatrixXd L(m, q);
    Eigen::VectorXd Y(m);
    Eigen::VectorXd dt = Eigen::VectorXd::Zero(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        L.row(k) = Lfull.row(rows[k]);
        Y[k] = des.Y[rows[k]];
        if (opt.scale_sparsity) {
            dt[k] = des.degree_term[rows[k]];
        }
    }
    const Eigen::MatrixXd& Lam = fit.system();
    const Eigen::VectorXd& gam = fit.gamma;
    BootstrapRun run;
    run.scheme = Scheme::independent_multiplier;
    run.corrected = fit.variant == Variant::bias_corrected;
    run.B = opt.B;
    run.seed = opt.seed;
    run.point = fit;
    run.replicates = Eigen::MatrixXd::Zero(opt.B, q);
    run.flagged.assign(opt.B, 0);
    double md = static_cast<double>(m);
    parallel_for(opt.B, [&](std::int64_t b) {
        // sum_i W_i (L_i L_i' - Lambda) written with W_i - 1; the two agree since Lambda is the row mean.
        Eigen::VectorXd w = draw_multipliers(opt, static_cast<int>(b), m).array() - 1.0;
        double wsum = w.sum();
        Eigen::MatrixXd M = Lam + (L.transpose() * w.asDiagonal() * L - wsum * Lam) / md;
        Eigen::VectorXd v = gam + (L.transpose() * w.cwiseProduct(Y) - wsum * gam) / md;
        double ratio = 1.0;
        if (opt.scale_sparsity) {
            ratio = 1.0 + 2.0 * w.dot(dt) / md;
        }
        if (!(ratio > 0.0)) {
            run.flagged[b] = 1;
            return;
        }
        M *= 1.0 / ratio;
        v *= std::sqrt(1.0 / ratio);
        M = 0.5 * (M + M.transpose());
        SolveInfo info = checked_solve(M, v);
        if (info.singular || !info.x.allFinite()) {
            run.flagged[b] = 1;
            return;
        }
        run.replicates.row(b) = info.x.transpose();
    });
    detail::finish_run(run, opt);
    return run;
}

/* Linear-interpolation sample quantile of sorted data. */
inline double quantile_sorted(const std::vector<double>& x, double prob) {
    if (x.empty()) {
        throw Error("quantile of empty sample");
    }
    double h = (static_cast<double>(x.size()) - 1.0) * std::clamp(prob, 0.0, 1.0);
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    bool covers(double v) const { return lower <= v && v <= upper; }
};

inline std::vector<Interval> percentile_ci(const BootstrapRun& run, double level, bool centered = true) {
    auto keep = run.usable();
    if (keep.size() < 50) {
        throw Error("percentile_ci: need at least 50 unflagged replicates, have " + std::to_string(keep.size()));
    }
    if (!(level > 0.0) || level > 1.0) {
        throw ConfigError("percentile_ci: level must lie in (0,1]");
    }
    double a = 1.0 - level;
    Eigen::Index q = run.replicates.cols();
    std::vector<Interval> out(q);
    for (Eigen::Index c = 0; c < q; ++c) {
        double point = run.point.beta[c];
        std::vector<double> v;
        v.reserve(keep.size());
        for (int b : keep) {
            v.push_back(centered ? run.replicates(b, c) - point : run.replicates(b, c));
        }
        std::sort(v.begin(), v.end());
        double lo = quantile_sorted(v, a / 2.0);
        double hi = quantile_sorted(v, 1.0 - a / 2.0);
        out[c] = centered ? Interval{point - hi, point - lo} : Interval{lo, hi};
    }
    return out;
}

inline Eigen::VectorXd bootstrap_se(const BootstrapRun& run) {
    auto keep = run.usable();
    Eigen::Index q = run.replicates.cols();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(q);
    for (int b : keep) {
        mean += run.replicates.row(b).transpose();
    }
    mean /= static_cast<double>(keep.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(q);
    for (int b : keep) {
        var += (run.replicates.row(b).transpose() - mean).cwiseAbs2();
    }
    return (var / std::max<double>(1.0, static_cast<double>(keep.size()) - 1.0)).cwiseSqrt();
}

struct TestResult {
    double statistic = 0.0;
    double critical = 0.0;
    double p_value = 1.0;
    double alpha = 0.05;
    int B = 0;
    bool reject = false;
};

/* T = n ||beta_z||^2 against n ||beta_z^b - beta_z||^2. The critical value is the
 * (floor((1-alpha) B) + 1)-th order statistic, so reject <=> T > c <=> p < alpha. */
inline TestResult network_effect_test(const FitResult& fit, const BootstrapRun& run, double alpha,
                                      std::vector<Eigen::Index> coords = {}) {
    if (alpha < 0.0 || alpha > 1.0) {
        throw ConfigError("network_effect_test: alpha must lie in [0,1]");
    }
    if (coords.empty()) {
        for (Eigen::Index k = fit.p; k < fit.p + fit.d; ++k) {
            coords.push_back(k);
        }
    }
    if (coords.empty()) {
        throw SchemaError("network_effect_test: no network coefficients");
    }
    double n = static_cast<double>(fit.variant == Variant::downsampled ? fit.m : fit.rows.size());
    auto keep = run.usable();
    TestResult out;
    out.alpha = alpha;
    out.B = static_cast<int>(keep.size());
    for (auto k : coords) {
        out.statistic += fit.beta[k] * fit.beta[k];
    }
    out.statistic *= n;
    std::vector<double> ref;
    for (int b : keep) {
        double t = 0.0;
        for (auto k : coords) {
            double dlt = run.replicates(b, k) - fit.beta[k];
            t += dlt * dlt;
        }
        ref.push_back(n * t);
    }
    std::sort(ref.begin(), ref.end());
    std::size_t B = ref.size();
    if (alpha == 0.0) {
        out.critical = std::numeric_limits<double>::infinity();
    } else {
        auto k = static_cast<std::size_t>(std::floor((1.0 - alpha) * static_cast<double>(B) + 1e-9)) + 1;
        k = std::clamp<std::size_t>(k, 1, B);
        out.critical = ref[k - 1];
    }
    auto tail = static_cast<double>(ref.end() - std::lower_bound(ref.begin(), ref.end(), out.statistic));
    out.p_value = tail / static_cast<double>(B);
    out.reject = out.statistic > out.critical;
    return out;
}

}

#endif
