#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "netreg/bootstrap.hpp"
#include "netreg/experiments.hpp"
#include "netreg/hajek.hpp"
#include "oracle.hpp"

using namespace netreg;

namespace {

struct Fixture {
    Graph g;
    Design des;
};

Fixture motif_fixture(int n, std::uint64_t seed, const std::vector<MotifSpec>& motifs) {
    GraphonSpec spec = inverse_sum_graphon(Sparsity::power(-0.25));
    Sample s = sample_graphon(spec, n, linear_response(spec), seed);
    Design des = base_design(s.graph, s.Y, s.X, true);
    for (const auto& m : motifs) {
        add_motif_column(des, s.graph, m);
    }
    return {s.graph, des};
}

Fixture spectral_fixture(int n, std::uint64_t seed, const Eigen::Vector3d& bz) {
    ExperimentConfig c = default_config("table2_grdpg");
    Sample s = sample_grdpg(table2_model(c), n, grdpg_linear_response(Eigen::Vector2d(1.0, 2.0), bz), seed);
    Design des = base_design(s.graph, s.Y, s.X, false);
    add_spectral_columns(des, ase(s.graph, 3, des.rho).Zhat);
    return {s.graph, des};
}

BootstrapOptions options(int B, std::uint64_t seed) {
    BootstrapOptions o;
    o.B = B;
    o.seed = seed;
    return o;
}

BootstrapRun synthetic_run(const Eigen::VectorXd& point, const Eigen::MatrixXd& reps) {
    BootstrapRun run;
    run.point.beta = point;
    run.replicates = reps;
    run.B = static_cast<int>(reps.rows());
    run.flagged.assign(run.B, 0);
    return run;
}

}

TEST(Hajek, ColumnsAreCentered) {
    for (auto f : {motif_fixture(150, 3, {rooted_k_star(2), edge_motif()}), motif_fixture(40, 3, {triangle()})}) {
        for (bool corrected : {false, true}) {
            HajekTable h = hajek_projection(f.g, f.des, corrected);
            ASSERT_EQ(h.G.cols(), h.width());
            for (Eigen::Index c = 0; c < h.G.cols(); ++c) {
                double scale = std::max(1.0, h.G.col(c).cwiseAbs().maxCoeff());
                EXPECT_LT(std::fabs(h.G.col(c).sum()), 1e-9 * scale * h.G.rows()) << c;
            }
        }
    }
}

TEST(Hajek, SparsityCoordinateVanishesOnRegularGraph) {
    int n = 12;
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) {
        e.emplace_back(i, (i + 1) % n);
    }
    Graph ring(n, e);
    Design des = base_design(ring, Eigen::VectorXd::LinSpaced(n, 0, 1), Eigen::MatrixXd::Ones(n, 1), true);
    add_motif_column(des, ring, edge_motif());
    HajekTable h = hajek_projection(ring, des, false);
    EXPECT_LT(h.G.col(h.rho_index()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(h.order[h.rho_index()], 2.0);
}

TEST(Hajek, RootedStarResponseBlockMatchesDirectFormula) {
    Graph g = oracle::random_graph(10, 0.5, 21);
    int n = 10;
    double rho = edge_density(g);
    Eigen::VectorXd Y = Eigen::VectorXd::LinSpaced(n, -1.0, 2.0);
    Design des = base_design(g, Y, Eigen::MatrixXd::Ones(n, 1), true);
    add_motif_column(des, g, rooted_k_star(2));
    HajekTable h = hajek_projection(g, des, false);
    Eigen::MatrixXd A = g.adjacency();
    const int r = 3;
    const int k = r - 1;
    double N = oracle::choose(n - 1, r - 1);
    Eigen::VectorXd deg = A.rowwise().sum();
    double mean_yz = 0.0;
    for (int i = 0; i < n; ++i) {
        mean_yz += Y[i] * oracle::choose(deg[i], k) / (rho * rho * N) / n;
    }
    for (int i = 0; i < n; ++i) {
        double rooted = Y[i] * oracle::choose(deg[i], k) / r;
        double peripheral = 0.0;
        for (int j = 0; j < n; ++j) {
            if (A(i, j) == 1.0) {
                peripheral += Y[j] * oracle::choose(deg[j] - 1, k - 1) / r;
            }
        }
        double g1 = (rooted + peripheral) / (rho * rho * N) - mean_yz;
        EXPECT_NEAR(h.G(i, h.gamma_index(1)), g1, 1e-12) << i;
    }
    EXPECT_EQ(h.order[h.gamma_index(1)], 3.0);
    EXPECT_EQ(h.alpha[h.gamma_index(1)], 2.0);
}

TEST(Hajek, CapabilityChecks) {
    auto f = motif_fixture(60, 4, {cycle(4)});
    EXPECT_THROW(hajek_projection(f.g, f.des, false), CapabilityError);
    auto s = spectral_fixture(120, 1, Eigen::Vector3d(1, 2, 1));
    EXPECT_THROW(hajek_projection(s.g, s.des, false), CapabilityError);
}

TEST(Bootstrap, DegenerateMultipliersReproducePointEstimate) {
    auto f = motif_fixture(200, 5, {rooted_k_star(2)});
    BootstrapOptions o = options(60, 1);
    o.multipliers = Multipliers::ones;
    FitResult ols = ols_fit(f.des);
    FitResult mod = bias_corrected_fit(f.des, f.g, merges_for(f.des));
    for (const FitResult* fit : {&ols, &mod}) {
        bool corrected = fit->variant == Variant::bias_corrected;
        BootstrapRun lin = linear_multiplier_bootstrap(*fit, hajek_projection(f.g, f.des, corrected), o);
        BootstrapRun ind = independent_multiplier_bootstrap(f.des, *fit, o);
        for (int b = 0; b < o.B; ++b) {
            EXPECT_EQ(Eigen::VectorXd(lin.replicates.row(b).transpose()), fit->beta);
            EXPECT_EQ(Eigen::VectorXd(ind.replicates.row(b).transpose()), fit->beta);
        }
        EXPECT_EQ(lin.flagged_count, 0);
    }
}

TEST(Bootstrap, SeedDeterminism) {
    auto f = motif_fixture(150, 6, {rooted_k_star(2)});
    FitResult fit = ols_fit(f.des);
    HajekTable h = hajek_projection(f.g, f.des, false);
    BootstrapRun a = linear_multiplier_bootstrap(fit, h, options(100, 9));
    BootstrapRun b = linear_multiplier_bootstrap(fit, h, options(100, 9));
    BootstrapRun c = linear_multiplier_bootstrap(fit, h, options(100, 10));
    EXPECT_EQ(a.replicates, b.replicates);
    EXPECT_NE(a.replicates, c.replicates);
    BootstrapRun longer = linear_multiplier_bootstrap(fit, h, options(150, 9));
    EXPECT_EQ(Eigen::MatrixXd(longer.replicates.topRows(100)), a.replicates);
}

TEST(Bootstrap, PerturbationCovarianceApproachesClosedForm) {
    auto f = motif_fixture(200, 7, {rooted_k_star(2)});
    HajekTable h = hajek_projection(f.g, f.des, false);
    Eigen::MatrixXd target = hajek_covariance(h);
    for (int B : {5000, 20000}) {
        Eigen::MatrixXd P = linear_perturbations(h, options(B, 3));
        Eigen::MatrixXd centered = P.rowwise() - P.colwise().mean();
        Eigen::MatrixXd cov = centered.transpose() * centered / (B - 1.0);
        double err = (cov - target).norm() / target.norm();
        EXPECT_LT(err, 0.1) << B;
    }
}

TEST(Bootstrap, IndependentSchemeMatchesPairsBootstrap) {
    auto f = spectral_fixture(500, 11, Eigen::Vector3d(1, 2, 1));
    FitResult fit = ols_fit(f.des);
    const int B = 10000;
    BootstrapOptions o = options(B, 5);
    o.scale_sparsity = false;
    BootstrapRun run = independent_multiplier_bootstrap(f.des, fit, o);
    Eigen::VectorXd se = bootstrap_se(run);
    Eigen::MatrixXd L = f.des.L();
    std::mt19937_64 gen(17);
    std::uniform_int_distribution<int> pick(0, 499);
    Eigen::MatrixXd reps(B, L.cols());
    for (int b = 0; b < B; ++b) {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(L.cols(), L.cols());
        Eigen::VectorXd v = Eigen::VectorXd::Zero(L.cols());
        for (int k = 0; k < 500; ++k) {
            int i = pick(gen);
            M.noalias() += L.row(i).transpose() * L.row(i);
            v += L.row(i).transpose() * f.des.Y[i];
        }
        reps.row(b) = M.ldlt().solve(v).transpose();
    }
    Eigen::MatrixXd c = reps.rowwise() - reps.colwise().mean();
    Eigen::VectorXd pairs_se = (c.colwise().squaredNorm() / (B - 1.0)).cwiseSqrt().transpose();
    for (int k = 0; k < 2; ++k) {
        EXPECT_NEAR(se[k] / pairs_se[k], 1.0, 0.1) << k;
    }
}

TEST(Bootstrap, CapabilityAndFlagPolicy) {
    auto f = motif_fixture(120, 8, {rooted_k_star(2)});
    FitResult ds = downsample_fit(f.des, 40, Selection::seeded_random, 1);
    EXPECT_THROW(linear_multiplier_bootstrap(ds, hajek_projection(f.g, f.des, false), options(10, 1)),
                 CapabilityError);
    EXPECT_NO_THROW(independent_multiplier_bootstrap(f.des, ds, options(60, 1)));
    BootstrapRun run;
    run.B = 100;
    run.flagged.assign(100, 0);
    std::fill(run.flagged.begin(), run.flagged.begin() + 3, 1);
    EXPECT_THROW(detail::finish_run(run, options(100, 1)), Error);
    std::fill(run.flagged.begin(), run.flagged.end(), 0);
    run.flagged[0] = 1;
    EXPECT_NO_THROW(detail::finish_run(run, options(100, 1)));
    EXPECT_EQ(run.flagged_count, 1);
}

TEST(Intervals, Examples) {
    Eigen::VectorXd point = Eigen::VectorXd::Constant(1, 2.0);
    BootstrapRun flat = synthetic_run(point, Eigen::MatrixXd::Constant(100, 1, 2.0));
    auto ci = percentile_ci(flat, 0.95);
    EXPECT_EQ(ci[0].lower, 2.0);
    EXPECT_EQ(ci[0].upper, 2.0);

    Eigen::MatrixXd sym(100, 1);
    for (int b = 0; b < 100; ++b) {
        sym(b, 0) = 2.0 + (b % 2 == 0 ? 1.0 : -1.0);
    }
    BootstrapRun s = synthetic_run(point, sym);
    auto half = percentile_ci(s, 0.5);
    EXPECT_DOUBLE_EQ(half[0].lower, 1.0);
    EXPECT_DOUBLE_EQ(half[0].upper, 3.0);

    Eigen::MatrixXd spread(100, 1);
    for (int b = 0; b < 100; ++b) {
        spread(b, 0) = 2.0 + 0.01 * b - 0.3;
    }
    BootstrapRun r = synthetic_run(point, spread);
    auto full = percentile_ci(r, 1.0);
    EXPECT_NEAR(full[0].upper - full[0].lower, spread.maxCoeff() - spread.minCoeff(), 1e-12);
    auto plain = percentile_ci(r, 1.0, false);
    EXPECT_DOUBLE_EQ(plain[0].lower, spread.minCoeff());
    EXPECT_DOUBLE_EQ(plain[0].upper, spread.maxCoeff());
    EXPECT_NEAR(full[0].lower, 2.0 * 2.0 - spread.maxCoeff(), 1e-12);

    BootstrapRun few = synthetic_run(point, Eigen::MatrixXd::Constant(49, 1, 2.0));
    EXPECT_THROW(percentile_ci(few, 0.95), Error);
    EXPECT_THROW(percentile_ci(flat, 0.0), ConfigError);
}

TEST(NetworkTest, DecisionConsistencyAndBoundaries) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 200; ++trial) {
        int B = 50 + trial;
        Eigen::VectorXd point(3);
        point << z(gen), 0.3 * z(gen), 0.3 * z(gen);
        Eigen::MatrixXd reps(B, 3);
        for (int b = 0; b < B; ++b) {
            for (int k = 0; k < 3; ++k) {
                reps(b, k) = point[k] + 0.2 * z(gen);
            }
        }
        BootstrapRun run = synthetic_run(point, reps);
        FitResult fit;
        fit.beta = point;
        fit.p = 1;
        fit.d = 2;
        fit.rows.assign(40, 0);
        for (double alpha : {0.0, 0.01, 0.05, 0.1, 0.5, 1.0}) {
            TestResult t = network_effect_test(fit, run, alpha);
            ASSERT_GE(t.p_value, 0.0);
            ASSERT_LE(t.p_value, 1.0);
            ASSERT_EQ(t.reject, t.statistic > t.critical);
            ASSERT_EQ(t.reject, t.p_value < alpha) << alpha << " trial " << trial;
            if (alpha == 0.0) {
                ASSERT_FALSE(t.reject);
            }
        }
    }
    auto f = spectral_fixture(300, 2, Eigen::Vector3d(1, 2, 1));
    FitResult fit = ols_fit(f.des);
    BootstrapRun run = independent_multiplier_bootstrap(f.des, fit, options(200, 4));
    EXPECT_TRUE(network_effect_test(fit, run, 0.05).reject);
    TestResult one = network_effect_test(fit, run, 1.0);
    EXPECT_TRUE(one.reject);
    EXPECT_THROW(network_effect_test(fit, run, 1.5), ConfigError);
}

TEST(NetworkTest, InvariantUnderEmbeddingRotation) {
    auto f = spectral_fixture(300, 12, Eigen::Vector3d(0, 0, 0));
    std::srand(5);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd::Random(3, 3));
    Eigen::MatrixXd Q = qr.householderQ();
    Design rotated = f.des;
    rotated.Zhat = f.des.Zhat * Q;
    FitResult a = ols_fit(f.des);
    FitResult b = ols_fit(rotated);
    BootstrapRun ra = independent_multiplier_bootstrap(f.des, a, options(200, 8));
    BootstrapRun rb = independent_multiplier_bootstrap(rotated, b, options(200, 8));
    TestResult ta = network_effect_test(a, ra, 0.05);
    TestResult tb = network_effect_test(b, rb, 0.05);
    EXPECT_NEAR(ta.statistic, tb.statistic, 1e-10 * std::max(1.0, ta.statistic));
    EXPECT_NEAR(ta.critical, tb.critical, 1e-10 * std::max(1.0, ta.critical));
    EXPECT_EQ(ta.reject, tb.reject);
    for (int k = 0; k < 200; ++k) {
        Eigen::VectorXd da = ra.replicates.row(k).tail(3).transpose() - a.beta.tail(3);
        Eigen::VectorXd db = rb.replicates.row(k).tail(3).transpose() - b.beta.tail(3);
        EXPECT_NEAR(da.norm(), db.norm(), 1e-10 * std::max(1.0, da.norm()));
    }
}

TEST(NetworkTest, NullRejectionRateNearNominal) {
    const int runs = 500;
    const double alpha = 0.05;
    ExperimentConfig c = default_config("table2_grdpg");
    GrdpgSpec model = table2_model(c);
    ResponseModel dgp = grdpg_linear_response(Eigen::Vector2d(1.0, 2.0), Eigen::Vector3d::Zero());
    std::vector<int> reject(runs, 0);
    parallel_for(runs, [&](std::int64_t r) {
        Sample s = sample_grdpg(model, 200, dgp, 1000 + r);
        Design des = base_design(s.graph, s.Y, s.X, false);
        add_spectral_columns(des, ase(s.graph, 3, des.rho).Zhat);
        FitResult fit = ols_fit(des);
        BootstrapRun run = independent_multiplier_bootstrap(des, fit, options(200, 7 + r));
        reject[r] = network_effect_test(fit, run, alpha).reject ? 1 : 0;
    });
    double rate = std::accumulate(reject.begin(), reject.end(), 0.0) / runs;
    EXPECT_NEAR(rate, alpha, 0.03);
}
