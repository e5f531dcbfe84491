#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "netreg/estimators.hpp"
#include "netreg/experiments.hpp"
#include "netreg/graphgen.hpp"
#include "netreg/spectral.hpp"
#include "oracle.hpp"

using namespace netreg;

namespace {

ResponseModel null_response() {
    ResponseModel m;
    m.name = "none";
    m.respond = [](const Eigen::MatrixXd& xi, const Eigen::MatrixXd&, const Stream&) {
        ResponseDraw out;
        out.X = Eigen::MatrixXd::Ones(xi.rows(), 1);
        out.Y = Eigen::VectorXd::Zero(xi.rows());
        return out;
    };
    return m;
}

GrdpgSpec one_block(double p) {
    GrdpgSpec g;
    g.d = 1;
    g.r_plus = 1;
    BlockModel bm;
    bm.pi = {1.0};
    bm.B = Eigen::MatrixXd::Constant(1, 1, p);
    g.blocks = bm;
    g.sparsity = Sparsity::constant(1.0);
    return g;
}

Eigen::MatrixXd orthonormal(int n, int d, unsigned seed) {
    std::srand(seed);
    Eigen::MatrixXd r = Eigen::MatrixXd::Random(n, d);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(r);
    return qr.householderQ() * Eigen::MatrixXd::Identity(n, d);
}

Eigen::MatrixXd random_rotation(int d, unsigned seed) { return orthonormal(d, d, seed); }

}

TEST(Graphgen, ConstantKernelFullDensityIsComplete) {
    Sample s = sample_graphon(constant_graphon(1.0, Sparsity::constant(1.0)), 4, null_response(), 3);
    EXPECT_EQ(s.graph.num_edges(), 6);
    Sample t = sample_graphon(constant_graphon(1.0, Sparsity::constant(1.0)), 57, null_response(), 8);
    EXPECT_EQ(edge_density(t.graph), 1.0);
}

TEST(Graphgen, HalfDensityWithinBinomialBand) {
    int n = 10000;
    Sample s = sample_graphon(constant_graphon(1.0, Sparsity::constant(0.5)), n, null_response(), 17);
    double pairs = 0.5 * n * (n - 1.0);
    double sigma = std::sqrt(0.25 / pairs);
    EXPECT_NEAR(edge_density(s.graph), 0.5, 3.0 * sigma);
}

TEST(Graphgen, SeedDeterminismAndGraphInvariants) {
    GraphonSpec spec = inverse_sum_graphon(Sparsity::power(-0.4));
    Sample a = sample_graphon(spec, 300, linear_response(spec), 5);
    Sample b = sample_graphon(spec, 300, linear_response(spec), 5);
    EXPECT_EQ(a.graph.edge_list(), b.graph.edge_list());
    EXPECT_EQ(a.Y, b.Y);
    EXPECT_EQ(a.X, b.X);
    Sample c = sample_graphon(spec, 300, linear_response(spec), 6);
    EXPECT_NE(a.graph.edge_list(), c.graph.edge_list());
    for (int i = 0; i < a.graph.n(); ++i) {
        for (int j : a.graph.neighbors(i)) {
            EXPECT_NE(i, j);
            EXPECT_TRUE(a.graph.has_edge(j, i));
        }
    }
}

TEST(Graphgen, PrefixStableAcrossSizes) {
    GraphonSpec spec = constant_graphon(0.3, Sparsity::constant(1.0));
    Sample small = sample_graphon(spec, 40, null_response(), 12);
    Sample big = sample_graphon(spec, 80, null_response(), 12);
    EXPECT_EQ(big.graph.induced([] {
        std::vector<int> v(40);
        std::iota(v.begin(), v.end(), 0);
        return v;
    }()).edge_list(),
              small.graph.edge_list());
}

TEST(Graphgen, MeanDensityMatchesTruncatedKernelMass) {
    double rho = 0.3;
    GraphonSpec spec = inverse_sum_graphon(Sparsity::constant(rho));
    double expected = rho * spec.total_mass(rho);
    const int draws = 30;
    const int n = 300;
    std::vector<double> dens;
    for (int k = 0; k < draws; ++k) {
        dens.push_back(edge_density(sample_graphon(spec, n, null_response(), 100 + k).graph));
    }
    double mean = std::accumulate(dens.begin(), dens.end(), 0.0) / draws;
    double var = 0.0;
    for (double d : dens) {
        var += (d - mean) * (d - mean);
    }
    double se = std::sqrt(var / (draws - 1) / draws);
    EXPECT_NEAR(mean, expected, 4.0 * se + 1e-4);
}

TEST(Graphgen, InverseSumDegreeClosedForms) {
    GraphonSpec spec = inverse_sum_graphon(Sparsity::constant(0.2));
    for (double u : {0.05, 0.1, 0.3, 0.9}) {
        EXPECT_NEAR(spec.degree(u), std::log1p(1.0 / u), 1e-12);
        double rho = 0.2;
        double numeric = 0.0;
        const int K = 200000;
        for (int k = 0; k < K; ++k) {
            double v = (k + 0.5) / K;
            numeric += std::min(rho / (u + v), 1.0) / rho;
        }
        EXPECT_NEAR(spec.degree(u, rho), numeric / K, 1e-6) << u;
    }
}

TEST(Graphgen, LinearDesignHasStatedCoefficients) {
    GraphonSpec spec = inverse_sum_graphon(Sparsity::power(-0.25));
    Sample s = sample_graphon(spec, 2000, linear_response(spec), 21);
    ASSERT_TRUE(s.truth.beta.has_value());
    Eigen::VectorXd beta(4);
    beta << 1.0, 3.0, 2.0, 20.0;
    EXPECT_EQ(*s.truth.beta, beta);
    Eigen::MatrixXd L = oracle_regressors(s);
    Eigen::VectorXd eps = s.Y - L * beta;
    EXPECT_NEAR(eps.mean(), 0.0, 0.1);
    EXPECT_NEAR(eps.squaredNorm() / eps.size(), 1.0, 0.1);
    EXPECT_NEAR(s.X.col(1).mean(), 1.0, 0.1);
    EXPECT_NEAR(s.X.col(2).mean(), 3.0, 0.2);
    EXPECT_GT(s.truth.Z.minCoeff(), 0.0);
    EXPECT_NEAR(s.truth.Z.array().sqrt().mean(), 1.0, 0.05);
}

TEST(Graphgen, OneBlockIsErdosRenyi) {
    int n = 1500;
    Sample s = sample_grdpg(one_block(0.3), n, null_response(), 4);
    double pairs = 0.5 * n * (n - 1.0);
    EXPECT_NEAR(edge_density(s.graph), 0.3, 3.0 * std::sqrt(0.21 / pairs));
}

TEST(Graphgen, ThreeBlockModel) {
    ExperimentConfig c = default_config("table2_grdpg");
    GrdpgSpec model = table2_model(c);
    Sample s = sample_grdpg(model, 3000, grdpg_linear_response(Eigen::Vector2d(1, 2), Eigen::Vector3d(1, 2, 1)), 9);
    std::vector<double> freq(3, 0.0);
    for (int b : s.block) {
        freq[b] += 1.0 / 3000.0;
    }
    EXPECT_NEAR(freq[0], 0.65, 0.03);
    EXPECT_NEAR(freq[1], 0.25, 0.03);
    EXPECT_NEAR(freq[2], 0.10, 0.02);
    EXPECT_NEAR(edge_density(s.graph), 0.47625, 0.01);
    EXPECT_EQ(s.truth.Z.cols(), 3);
    Eigen::Map<const Eigen::VectorXd> pi(model.blocks->pi.data(), 3);
    BlockPositions bp = block_positions(*model.blocks, 3);
    Eigen::MatrixXd recon = bp.positions * bp.eigvals.cwiseSign().asDiagonal() * bp.positions.transpose();
    EXPECT_LT((recon - model.blocks->B).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Graphgen, DegenerateBlockProportions) {
    ExperimentConfig c = default_config("table2_grdpg");
    GrdpgSpec model = table2_model(c);
    model.blocks->pi = {1.0, 0.0, 0.0};
    Sample s = sample_grdpg(model, 200, null_response(), 1);
    for (int i = 0; i < 200; ++i) {
        EXPECT_EQ(s.block[i], 0);
        EXPECT_EQ(s.xi.row(i), s.xi.row(0));
    }
}

TEST(Graphgen, SignatureMismatchRejected) {
    ExperimentConfig c = default_config("table2_grdpg");
    GrdpgSpec model = table2_model(c);
    model.r_plus = 2;
    model.r_minus = 1;
    EXPECT_THROW(sample_grdpg(model, 50, null_response(), 1), ConfigError);
    GrdpgSpec bad = one_block(0.3);
    bad.blocks->pi = {0.5};
    EXPECT_THROW(sample_grdpg(bad, 50, null_response(), 1), ConfigError);
}

TEST(Graphgen, SparsityValidation) {
    EXPECT_THROW(Sparsity::constant(0.0).at(10), ConfigError);
    EXPECT_THROW(Sparsity::constant(1.5).at(10), ConfigError);
    EXPECT_NEAR(Sparsity::power(-0.5).at(100), 0.1, 1e-15);
}

TEST(Spectral, NoiselessPsdRecovery) {
    int n = 80;
    int d = 3;
    Eigen::MatrixXd U = orthonormal(n, d, 1);
    Eigen::Vector3d s(9.0, 5.0, 2.0);
    double rho = 0.4;
    Eigen::MatrixXd X = U * s.cwiseSqrt().asDiagonal();
    Eigen::MatrixXd P = rho * X * X.transpose();
    Embedding e = ase_matrix(P, d, rho);
    Alignment a = procrustes_align(e.Zhat, X);
    EXPECT_LT(a.residual, 1e-8);
    EXPECT_TRUE(e.warnings.empty());
}

TEST(Spectral, NoiselessIndefiniteRecovery) {
    int n = 70;
    Eigen::MatrixXd U = orthonormal(n, 3, 2);
    Eigen::Vector3d s(6.0, -4.0, 1.5);
    Eigen::MatrixXd X = U * s.cwiseAbs().cwiseSqrt().asDiagonal();
    Eigen::MatrixXd P = U * s.asDiagonal() * U.transpose();
    Embedding e = ase_matrix(P, 3, 1.0);
    EXPECT_NEAR(e.eigvals[0], 6.0, 1e-10);
    EXPECT_NEAR(e.eigvals[1], -4.0, 1e-10);
    EXPECT_NEAR(e.eigvals[2], 1.5, 1e-10);
    EXPECT_LT(procrustes_align(e.Zhat, X).residual, 1e-8);
}

TEST(Spectral, FullRankReconstructionOfK4) {
    Graph k4 = oracle::complete_graph(4);
    Embedding e = ase(k4, 4, 1.0);
    Eigen::MatrixXd recon = e.Zhat * e.eigvals.cwiseSign().asDiagonal() * e.Zhat.transpose();
    EXPECT_LT((recon - k4.adjacency()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Spectral, AmbiguousCutoffWarns) {
    Graph k4 = oracle::complete_graph(4);
    Embedding e = ase(k4, 2, 1.0);
    EXPECT_FALSE(e.warnings.empty());
}

TEST(Spectral, SignConventionAndOrdering) {
    Graph g = oracle::random_graph(30, 0.3, 6);
    Embedding e = ase(g, 3, edge_density(g));
    for (int c = 0; c < 3; ++c) {
        Eigen::Index arg;
        e.Zhat.col(c).cwiseAbs().maxCoeff(&arg);
        EXPECT_GT(e.Zhat(arg, c), 0.0);
        if (c > 0) {
            EXPECT_GE(std::fabs(e.eigvals[c - 1]), std::fabs(e.eigvals[c]));
        }
    }
    EXPECT_THROW(ase(Graph(5), 1, 0.0), DegenerateError);
    EXPECT_THROW(ase(g, 0, 0.3), ConfigError);
}

TEST(Spectral, PermutationEquivariance) {
    Graph g = oracle::random_graph(40, 0.3, 12);
    std::vector<int> perm(40);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), std::mt19937(3));
    double rho = edge_density(g);
    Embedding a = ase(g, 2, rho);
    Embedding b = ase(g.permuted(perm), 2, rho);
    for (int c = 0; c < 2; ++c) {
        double sign = 0.0;
        for (int i = 0; i < 40; ++i) {
            if (sign == 0.0 && std::fabs(a.Zhat(i, c)) > 1e-6) {
                sign = b.Zhat(perm[i], c) / a.Zhat(i, c) > 0 ? 1.0 : -1.0;
            }
        }
        for (int i = 0; i < 40; ++i) {
            EXPECT_NEAR(sign * b.Zhat(perm[i], c), a.Zhat(i, c), 1e-9);
        }
    }
}

TEST(Spectral, TwoBlockSeparation) {
    int n = 2000;
    GrdpgSpec g;
    g.d = 2;
    g.r_plus = 2;
    BlockModel bm;
    bm.pi = {0.5, 0.5};
    bm.B.resize(2, 2);
    bm.B << 0.8, 0.2, 0.2, 0.8;
    g.blocks = bm;
    g.sparsity = Sparsity::constant(1.0);
    Sample s = sample_grdpg(g, n, null_response(), 77);
    Embedding e = ase(s.graph, 2, 1.0);
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(2, 2);
    Eigen::Vector2d counts = Eigen::Vector2d::Zero();
    for (int i = 0; i < n; ++i) {
        centers.row(s.block[i]) += e.Zhat.row(i);
        counts[s.block[i]] += 1.0;
    }
    centers.row(0) /= counts[0];
    centers.row(1) /= counts[1];
    double spread = 0.0;
    for (int i = 0; i < n; ++i) {
        spread = std::max(spread, (e.Zhat.row(i) - centers.row(s.block[i])).norm());
    }
    EXPECT_GT((centers.row(0) - centers.row(1)).norm(), 2.0 * spread);
}

TEST(Spectral, BlockAse) {
    Graph g = oracle::random_graph(30, 0.4, 2);
    std::vector<int> one(30, 7);
    Embedding a = block_ase(g, one, 2);
    Embedding b = ase(g, 2, edge_density(g));
    EXPECT_LT((a.Zhat - b.Zhat).cwiseAbs().maxCoeff(), 1e-12);

    std::vector<std::pair<int, int>> e;
    for (int base : {0, 5}) {
        for (int i = 0; i < 5; ++i) {
            for (int j = i + 1; j < 5; ++j) {
                e.emplace_back(base + i, base + j);
            }
        }
    }
    Graph k5k5(10, e);
    std::vector<int> labels = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    Embedding z = block_ase(k5k5, labels, 1);
    ASSERT_EQ(z.Zhat.cols(), 2);
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(z.Zhat(i, 0), 2.0 / std::sqrt(5.0), 1e-12);
        EXPECT_EQ(z.Zhat(i, 1), 0.0);
        EXPECT_EQ(z.Zhat(i + 5, 0), 0.0);
        EXPECT_NEAR(z.Zhat(i + 5, 1), z.Zhat(i, 0), 1e-12);
    }
    std::vector<int> lonely = {0, 0, 0, 0, 0, 1, 1, 1, 1, 2};
    EXPECT_THROW(block_ase(k5k5, lonely, 1), DegenerateError);
}

TEST(Spectral, Procrustes) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(20, 3);
    Alignment id = procrustes_align(a, a);
    EXPECT_LT((id.Q - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(id.residual, 1e-12);
    Eigen::MatrixXd R = random_rotation(3, 4);
    Alignment rot = procrustes_align(a, a * R);
    EXPECT_LT((rot.Q - R).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(rot.residual, 1e-10);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(10, 1);
    EXPECT_NEAR(procrustes_align(v, -v).Q(0, 0), -1.0, 1e-14);
}

TEST(Estimators, ExactLinearDataIsInterpolated) {
    Graph g = oracle::random_graph(60, 0.3, 1);
    Eigen::MatrixXd X(60, 2);
    X.col(0).setOnes();
    X.col(1) = Eigen::VectorXd::Random(60);
    Design des = base_design(g, Eigen::VectorXd::Zero(60), X, true);
    add_motif_column(des, g, rooted_k_star(2));
    Eigen::Vector3d beta(0.5, -2.0, 3.0);
    des.Y = des.L() * beta;
    EXPECT_LT((ols_fit(des).beta - beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Estimators, InterceptOnlyMean) {
    Graph g(2, {{0, 1}});
    Design des = base_design(g, Eigen::Vector2d(1.0, 3.0), Eigen::MatrixXd::Ones(2, 1), true);
    EXPECT_NEAR(ols_fit(des).beta[0], 2.0, 1e-14);
}

TEST(Estimators, MatchesExtendedPrecisionNormalEquations) {
    Graph g = oracle::random_graph(50, 0.3, 9);
    Eigen::MatrixXd X(50, 3);
    X.col(0).setOnes();
    X.rightCols(2) = Eigen::MatrixXd::Random(50, 2);
    Design des = base_design(g, Eigen::VectorXd::Random(50), X, true);
    add_motif_column(des, g, two_star());
    FitResult fit = ols_fit(des);
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    MatL L = des.L().cast<long double>();
    Eigen::Matrix<long double, Eigen::Dynamic, 1> y = des.Y.cast<long double>();
    MatL M = L.transpose() * L;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> v = L.transpose() * y;
    Eigen::Matrix<long double, Eigen::Dynamic, 1> ref = M.fullPivLu().solve(v);
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(fit.beta[k], static_cast<double>(ref[k]), 1e-10);
    }
    Eigen::VectorXd resid = des.Y - des.L() * fit.beta;
    EXPECT_LT((des.L().transpose() * resid).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Estimators, EquivarianceUnderInvertibleTransform) {
    Graph g = oracle::random_graph(80, 0.25, 10);
    Eigen::MatrixXd X(80, 2);
    X.col(0).setOnes();
    X.col(1) = Eigen::VectorXd::Random(80);
    Design des = base_design(g, Eigen::VectorXd::Random(80), X, false);
    add_motif_column(des, g, rooted_k_star(2));
    FitResult fit = ols_fit(des);
    Eigen::Matrix3d M;
    M << 2.0, 0.5, 0.0, -1.0, 1.0, 0.3, 0.2, 0.0, 1.5;
    Design t = des;
    Eigen::MatrixXd LM = des.L() * M;
    t.X = LM.leftCols(2);
    t.Zhat = LM.rightCols(1);
    FitResult ft = ols_fit(t);
    EXPECT_LT((ft.beta - M.inverse() * fit.beta).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((t.L() * ft.beta - des.L() * fit.beta).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Estimators, SingularDesignRaises) {
    Graph g = oracle::random_graph(30, 0.3, 2);
    Eigen::MatrixXd X(30, 3);
    X.col(0).setOnes();
    X.col(1) = Eigen::VectorXd::Random(30);
    X.col(2) = 2.0 * X.col(1);
    Design des = base_design(g, Eigen::VectorXd::Random(30), X, true);
    EXPECT_THROW(ols_fit(des), SingularError);
}

TEST(Estimators, CorrectedWithRawBlockEqualsOls) {
    Graph g = oracle::random_graph(60, 0.3, 3);
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(60, 1);
    Design des = base_design(g, Eigen::VectorXd::Random(60), X, true);
    add_motif_column(des, g, two_star());
    add_motif_column(des, g, triangle());
    FitResult ols = ols_fit(des);
    FitResult mod = bias_corrected_fit(des, ols.Lambda.bottomRightCorner(2, 2));
    EXPECT_EQ(mod.beta, ols.beta);
}

TEST(Estimators, CorrectedBlockIsRawMinusRemainder) {
    Graph g = oracle::random_graph(40, 0.3, 4);
    double rho = edge_density(g);
    Design des = base_design(g, Eigen::VectorXd::Random(40), Eigen::MatrixXd::Ones(40, 1), true);
    add_motif_column(des, g, two_star());
    FitResult mod = bias_corrected_fit(des, g, merges_for(des));
    auto full = merge_motifs(two_star(), two_star(), MergeMode::full);
    double raw = mod.Lambda(1, 1);
    EXPECT_NEAR(mod.Lambda_mod(1, 1), raw - remainder_term(g, full, rho), 1e-10);
}

TEST(Estimators, CorrectionRequiresMotifColumns) {
    Graph g = oracle::random_graph(40, 0.3, 4);
    Design des = base_design(g, Eigen::VectorXd::Random(40), Eigen::MatrixXd::Ones(40, 1), true);
    add_spectral_columns(des, ase(g, 1, des.rho).Zhat);
    EXPECT_THROW(merges_for(des), SchemaError);
}

TEST(Estimators, DownsampleEdgeCases) {
    Graph g = oracle::random_graph(50, 0.3, 5);
    Eigen::MatrixXd X(50, 2);
    X.col(0).setOnes();
    X.col(1) = Eigen::VectorXd::Random(50);
    Design des = base_design(g, Eigen::VectorXd::Random(50), X, true);
    add_motif_column(des, g, rooted_k_star(2));
    FitResult full = downsample_fit(des, 50, Selection::first_m);
    EXPECT_EQ(full.beta, ols_fit(des).beta);
    FitResult exact = downsample_fit(des, 3, Selection::seeded_random, 11);
    Eigen::MatrixXd L = des.L();
    for (int r : exact.rows) {
        EXPECT_NEAR(des.Y[r] - L.row(r).dot(exact.beta), 0.0, 1e-9);
    }
    EXPECT_EQ(downsample_fit(des, 10, Selection::seeded_random, 4).rows,
              downsample_fit(des, 10, Selection::seeded_random, 4).rows);
    EXPECT_THROW(downsample_fit(des, 2), ConfigError);
}

TEST(Estimators, DownsampleSizeRule) {
    EXPECT_EQ(choose_downsample_size(100.0, DownsampleKind::neighborhood_average, 100000, 2, 0.05), 7);
    EXPECT_EQ(choose_downsample_size(100.0, DownsampleKind::neighborhood_average, 100000, 9, 0.05), 10);
    EXPECT_EQ(choose_downsample_size(0.5, DownsampleKind::transitivity, 1000, 3, 0.05), 4);
    int n = 500;
    int m = choose_downsample_size(1e6, DownsampleKind::grdpg_ase, n, 3, 0.05);
    EXPECT_LT(m, n);
    EXPECT_GE(m, 4);
    int t = choose_downsample_size(1e4, DownsampleKind::neighborhood_average, 200, 2, 0.0);
    EXPECT_LE(t * std::log(static_cast<double>(t)), 200.0);
}

TEST(Estimators, CompositeCovariates) {
    Graph k4 = oracle::complete_graph(4);
    auto tr = composite_covariate(k4, CompositeKind::transitivity, 1.0);
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(tr.values[i], 1.0, 1e-14);
    }
    Graph star(7, {{0, 1}, {0, 2}, {0, 3}, {0, 4}, {0, 5}});
    Eigen::VectorXd c = Eigen::VectorXd::Constant(7, 2.5);
    auto na = composite_covariate(star, CompositeKind::neighborhood_average, edge_density(star), c);
    EXPECT_DOUBLE_EQ(na.values[0], 2.5);
    EXPECT_TRUE(na.imputed[6]);
    EXPECT_FALSE(na.imputed[0]);
    EXPECT_DOUBLE_EQ(na.values[6], 2.5);
}

TEST(Estimators, TargetsForCorrectlySpecifiedModel) {
    GraphonSpec spec = inverse_sum_graphon(Sparsity::power(-0.25));
    ResponseModel dgp = linear_response(spec);
    TargetApprox t = approximate_targets(graphon_target_problem(spec, dgp, {"rooted_two_star"}), 20000, 500, 3, 20,
                                         false);
    for (int k = 0; k < 4; ++k) {
        EXPECT_NEAR(t.beta_star[k], (*dgp.beta)[k], 4.0 * t.se_star[k]) << k;
        EXPECT_GT(t.se_star[k], 0.0);
    }
    EXPECT_EQ(t.N, 20000);
    TargetApprox again = approximate_targets(graphon_target_problem(spec, dgp, {"rooted_two_star"}), 20000, 500, 3,
                                             20, false);
    EXPECT_EQ(t.beta_star, again.beta_star);
}

TEST(Estimators, TargetStandardErrorScaling) {
    GraphonSpec spec = inverse_sum_graphon(Sparsity::power(-0.25));
    auto prob = graphon_target_problem(spec, nonlinear_response(spec), {"rooted_two_star"});
    std::vector<double> logN;
    std::vector<double> logse;
    for (long N : {1000L, 10000L, 100000L}) {
        TargetApprox t = approximate_targets(prob, N, 500, 8, 20, false);
        logN.push_back(std::log(static_cast<double>(N)));
        logse.push_back(std::log(t.se_star.mean()));
    }
    double slope = (logse[2] - logse[0]) / (logN[2] - logN[0]);
    EXPECT_NEAR(slope, -0.5, 0.15);
}
