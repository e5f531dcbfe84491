#ifndef NETREG_GRAPHGEN_HPP
#define NETREG_GRAPHGEN_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "netreg/common.hpp"
#include "netreg/graph.hpp"
#include "netreg/rng.hpp"

namespace netreg {

/* rho_n given either as a constant or as n^exponent. */
struct Sparsity {
    double value = 1.0;
    std::optional<double> exponent;

    static Sparsity constant(double rho) { return Sparsity{rho, std::nullopt}; }
    static Sparsity power(double delta) { return Sparsity{1.0, delta}; }

    double at(int n) const {
        double rho = exponent ? std::pow(static_cast<double>(n), *exponent) : value;
        if (!(rho > 0.0) || rho > 1.0) {
            throw ConfigError("sparsity: rho_n must lie in (0,1], got " + std::to_string(rho));
        }
        return rho;
    }
};

struct GraphonSpec {
    std::string name = "custom";
    std::function<double(double, double)> kernel;
    Sparsity sparsity;
    double bound = 1.0;
    /* u -> integral of w(u,v) dv; filled numerically when empty. */
    std::function<double(double)> degree_fn;
    /* integral of w over the unit square; computed numerically when not positive. */
    double mass = 0.0;
    /* (u, rho) -> integral of min(rho w(u,v), 1)/rho dv. */
    std::function<double(double, double)> truncated_degree_fn;
    /* degree function of the truncated kernel is smooth away from u = kink * rho. */
    double kink = 0.0;

    void validate() const {
        if (!kernel) {
            throw ConfigError("graphon: missing kernel");
        }
        if (!(bound > 0.0)) {
            throw ConfigError("graphon: bound must be positive");
        }
    }

    /* Degree function of the generating kernel min(rho w, 1)/rho; rho <= 0 gives the untruncated limit. */
    double degree(double u, double rho = 0.0) const {
        if (rho <= 0.0 || rho * bound <= 1.0) {
            if (degree_fn) {
                return degree_fn(u);
            }
            auto f = [&](double v) { return kernel(u, v); };
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-12);
        }
        if (truncated_degree_fn) {
            return truncated_degree_fn(u, rho);
        }
        auto f = [&](double v) { return std::min(rho * kernel(u, v), 1.0) / rho; };
        return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 15, 1e-12);
    }

    double total_mass(double rho = 0.0) const {
        bool truncated = rho > 0.0 && rho * bound > 1.0;
        if (!truncated && mass > 0.0) {
            return mass;
        }
        auto f = [&](double u) { return degree(u, truncated ? rho : 0.0); };
        using gk = boost::math::quadrature::gauss_kronrod<double, 31>;
        if (truncated && kink > 0.0) {
            double split = std::min(kink * rho, 1.0);
            return gk::integrate(f, 0.0, split, 15, 1e-11) + (split < 1.0 ? gk::integrate(f, split, 1.0, 15, 1e-11) : 0.0);
        }
        return gk::integrate(f, 0.0, 1.0, 15, 1e-11);
    }
};

inline GraphonSpec constant_graphon(double c, Sparsity sparsity) {
    GraphonSpec g;
    g.name = "constant";
    g.kernel = [c](double, double) { return c; };
    g.sparsity = sparsity;
    g.bound = c;
    g.degree_fn = [c](double) { return c; };
    g.mass = c;
    return g;
}

/* w(u,v) = 1/(u+v), unbounded near the origin; per-pair truncation keeps probabilities valid. */
inline GraphonSpec inverse_sum_graphon(Sparsity sparsity) {
    GraphonSpec g;
    g.name = "inverse_sum";
    g.kernel = [](double u, double v) { return 1.0 / (u + v); };
    g.sparsity = sparsity;
    g.bound = std::numeric_limits<double>::infinity();
    g.degree_fn = [](double u) { return std::log1p(1.0 / u); };
    g.mass = 2.0 * std::log(2.0);
    g.truncated_degree_fn = [](double u, double rho) {
        if (u >= rho) {
            return std::log1p(1.0 / u);
        }
        return (rho - u) / rho + std::log((1.0 + u) / rho);
    };
    g.kink = 1.0;
    return g;
}

/* w(u,v) = a + b u v. */
inline GraphonSpec bilinear_graphon(double a, double b, Sparsity sparsity) {
    GraphonSpec g;
    g.name = "bilinear";
    g.kernel = [a, b](double u, double v) { return a + b * u * v; };
    g.sparsity = sparsity;
    g.bound = a + b;
    g.degree_fn = [a, b](double u) { return a + 0.5 * b * u; };
    g.mass = a + 0.25 * b;
    return g;
}

struct BlockModel {
    std::vector<double> pi;
    Eigen::MatrixXd B;
};

struct GrdpgSpec {
    int d = 1;
    int r_plus = 1;
    int r_minus = 0;
    std::optional<BlockModel> blocks;
    /* (stream, node) -> (chi, zeta) with dims (r_plus, r_minus). */
    std::function<std::pair<Eigen::VectorXd, Eigen::VectorXd>(const Stream&, int)> sampler;
    Sparsity sparsity;

    void validate() const {
        if (d < 1 || r_plus < 0 || r_minus < 0 || r_plus + r_minus != d) {
            throw ConfigError("grdpg: signature must satisfy r_plus + r_minus = d >= 1");
        }
        if (blocks) {
            const auto& bm = *blocks;
            int k = static_cast<int>(bm.pi.size());
            if (k == 0 || bm.B.rows() != k || bm.B.cols() != k) {
                throw ConfigError("grdpg: B must be K x K with K = len(pi)");
            }
            double total = 0.0;
            for (double p : bm.pi) {
                if (p < 0.0) {
                    throw ConfigError("grdpg: negative block probability");
                }
                total += p;
            }
            if (std::fabs(total - 1.0) > 1e-9) {
                throw ConfigError("grdpg: block probabilities must sum to 1");
            }
            if ((bm.B - bm.B.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
                throw ConfigError("grdpg: B must be symmetric");
            }
            if (bm.B.minCoeff() < 0.0 || bm.B.maxCoeff() > 1.0) {
                throw ConfigError("grdpg: B entries must lie in [0,1]");
            }
            if (d > k) {
                throw ConfigError("grdpg: d exceeds number of blocks");
            }
        } else if (!sampler) {
            throw ConfigError("grdpg: need a block model or a latent sampler");
        }
    }
};

struct Truth {
    Eigen::MatrixXd Z;
    std::optional<Eigen::VectorXd> beta;
};

struct Sample {
    Graph graph;
    Eigen::MatrixXd xi;
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    Truth truth;
    std::vector<int> block;
    double rho_n = 1.0;
};

struct ResponseDraw {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
};

struct ResponseModel {
    std::string name = "custom";
    /* (latent n x k, rho_n) -> noiseless network covariates (n x d); rho_n = 0 is the
     * untruncated limit. Unused for GRDPG samples. */
    std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)> network_truth;
    /* (latent, Z, noise stream) -> (X, Y). */
    std::function<ResponseDraw(const Eigen::MatrixXd&, const Eigen::MatrixXd&, const Stream&)> respond;
    std::optional<Eigen::VectorXd> beta;
};

constexpr std::uint64_t draws_per_node = 16;

inline Eigen::MatrixXd correlated_normals(const Stream& s, int n, const Eigen::VectorXd& mean,
                                          const Eigen::MatrixXd& cov, int offset = 0) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw ConfigError("covariance matrix is not positive definite");
    }
    Eigen::MatrixXd L = llt.matrixL();
    int p = static_cast<int>(mean.size());
    Eigen::MatrixXd out(n, p);
    Eigen::VectorXd z(p);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < p; ++k) {
            z[k] = s.normal(static_cast<std::uint64_t>(i) * draws_per_node + offset + k);
        }
        out.row(i) = (mean + L * z).transpose();
    }
    return out;
}

inline double noise_draw(const Stream& s, int i) {
    return s.normal(static_cast<std::uint64_t>(i) * draws_per_node + draws_per_node - 1);
}

/* Z(u) = (D(u)/M)^k: the noiseless rooted k-star frequency of the generating kernel
 * min(rho w, 1)/rho rescaled to unit integral (D its degree function, M its mass). */
inline std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, double)> rooted_star_truth(const GraphonSpec& spec, int k) {
    return [spec, k](const Eigen::MatrixXd& latent, double rho) {
        double mass = spec.total_mass(rho);
        Eigen::MatrixXd z(latent.rows(), 1);
        for (Eigen::Index i = 0; i < latent.rows(); ++i) {
            z(i, 0) = std::pow(spec.degree(latent(i, 0), rho) / mass, k);
        }
        return z;
    };
}

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out(x.rows(), x.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(x.cols()) = x;
    return out;
}

/* Y = 1 + 20 Z + 3 X1 + 2 X2 + eps, X ~ N((1,3), [[1,.6],[.6,4]]). */
inline ResponseModel linear_response(const GraphonSpec& spec) {
    ResponseModel m;
    m.name = "linear";
    m.network_truth = rooted_star_truth(spec, 2);
    m.respond = [](const Eigen::MatrixXd&, const Eigen::MatrixXd& Z, const Stream& s) {
        int n = static_cast<int>(Z.rows());
        Eigen::Vector2d mu(1.0, 3.0);
        Eigen::Matrix2d cov;
        cov << 1.0, 0.6, 0.6, 4.0;
        Eigen::MatrixXd x = correlated_normals(s, n, mu, cov);
        ResponseDraw out;
        out.Y.resize(n);
        for (int i = 0; i < n; ++i) {
            out.Y[i] = 1.0 + 20.0 * Z(i, 0) + 3.0 * x(i, 0) + 2.0 * x(i, 1) + noise_draw(s, i);
        }
        out.X = with_intercept(x);
        return out;
    };
    Eigen::VectorXd beta(4);
    beta << 1.0, 3.0, 2.0, 20.0;
    m.beta = beta;
    return m;
}

/* Y = b1 X1 + b2 X2 + bz' Z + eps, no intercept, X standard bivariate normal with correlation 0.3. */
inline ResponseModel grdpg_linear_response(const Eigen::Vector2d& bx, const Eigen::VectorXd& bz) {
    ResponseModel m;
    m.name = "grdpg_linear";
    m.respond = [bx, bz](const Eigen::MatrixXd&, const Eigen::MatrixXd& Z, const Stream& s) {
        int n = static_cast<int>(Z.rows());
        if (Z.cols() != bz.size()) {
            throw ConfigError("grdpg_linear: coefficient length does not match embedding dimension");
        }
        Eigen::Matrix2d cov;
        cov << 1.0, 0.3, 0.3, 1.0;
        ResponseDraw out;
        out.X = correlated_normals(s, n, Eigen::Vector2d::Zero(), cov);
        out.Y = out.X * bx + Z * bz;
        for (int i = 0; i < n; ++i) {
            out.Y[i] += noise_draw(s, i);
        }
        return out;
    };
    Eigen::VectorXd beta(2 + bz.size());
    beta << bx, bz;
    m.beta = beta;
    return m;
}

/* Y = log(1 + 5 Z |X1|) + sqrt(5 Z) sin(X2 / 2) + eps, X standard bivariate normal, corr 0.3. */
inline ResponseModel nonlinear_response(const GraphonSpec& spec) {
    ResponseModel m;
    m.name = "nonlinear";
    m.network_truth = rooted_star_truth(spec, 2);
    m.respond = [](const Eigen::MatrixXd&, const Eigen::MatrixXd& Z, const Stream& s) {
        int n = static_cast<int>(Z.rows());
        Eigen::Matrix2d cov;
        cov << 1.0, 0.3, 0.3, 1.0;
        Eigen::MatrixXd x = correlated_normals(s, n, Eigen::Vector2d::Zero(), cov);
        ResponseDraw out;
        out.Y.resize(n);
        for (int i = 0; i < n; ++i) {
            double z = Z(i, 0);
            out.Y[i] = std::log1p(5.0 * z * std::fabs(x(i, 0))) + std::sqrt(5.0 * z) * std::sin(0.5 * x(i, 1)) +
                       noise_draw(s, i);
        }
        out.X = with_intercept(x);
        return out;
    };
    return m;
}

/* Neighborhood-average design on w(u,v) = a + b u v: X1 = 2 xi - 1 + N(0, 1/4),
 * Z_i = E[X1_j | i ~ j, xi_i], Y = 1 + 2 X1 + beta_z Z + eps. */
inline ResponseModel neighborhood_response(double a, double b, double beta_z) {
    ResponseModel m;
    m.name = "neighborhood_linear";
    m.network_truth = [a, b](const Eigen::MatrixXd& latent, double) {
        Eigen::MatrixXd z(latent.rows(), 1);
        for (Eigen::Index i = 0; i < latent.rows(); ++i) {
            double u = latent(i, 0);
            z(i, 0) = (b * u / 6.0) / (a + 0.5 * b * u);
        }
        return z;
    };
    m.respond = [beta_z](const Eigen::MatrixXd& latent, const Eigen::MatrixXd& Z, const Stream& s) {
        int n = static_cast<int>(Z.rows());
        ResponseDraw out;
        Eigen::MatrixXd x(n, 1);
        out.Y.resize(n);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = 2.0 * latent(i, 0) - 1.0 + 0.5 * s.normal(static_cast<std::uint64_t>(i) * draws_per_node);
            out.Y[i] = 1.0 + 2.0 * x(i, 0) + beta_z * Z(i, 0) + noise_draw(s, i);
        }
        out.X = with_intercept(x);
        return out;
    };
    Eigen::VectorXd beta(3);
    beta << 1.0, 2.0, beta_z;
    m.beta = beta;
    return m;
}

namespace detail {

inline std::uint64_t pair_index(int i, int j) {
    return static_cast<std::uint64_t>(j) * static_cast<std::uint64_t>(j - 1) / 2 + static_cast<std::uint64_t>(i);
}

/* Pair (i<j) is an edge iff U_ij < p(i,j); U_ij depends only on (seed, i, j). */
template <class Prob>
Graph bernoulli_graph(int n, const Stream& edges, Prob&& prob) {
    std::vector<std::vector<int>> lower(static_cast<std::size_t>(n));
    parallel_for(n, [&](std::int64_t jj) {
        int j = static_cast<int>(jj);
        auto& row = lower[j];
        for (int i = 0; i < j; ++i) {
            double p = prob(i, j);
            if (p <= 0.0) {
                continue;
            }
            if (edges.uniform(pair_index(i, j)) < p) {
                row.push_back(i);
            }
        }
    });
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        for (int i : lower[j]) {
            adj[i].push_back(j);
            adj[j].push_back(i);
        }
    }
    return Graph::from_adjacency(std::move(adj));
}

inline void attach_response(Sample& s, const ResponseModel& dgp, const Stream& root) {
    if (!dgp.respond) {
        throw ConfigError("response model '" + dgp.name + "' has no response function");
    }
    ResponseDraw draw = dgp.respond(s.xi, s.truth.Z, root.child(StreamId::noise));
    if (draw.X.rows() != s.graph.n() || draw.Y.size() != s.graph.n()) {
        throw ConfigError("response model '" + dgp.name + "' returned arrays of the wrong length");
    }
    s.X = std::move(draw.X);
    s.Y = std::move(draw.Y);
    s.truth.beta = dgp.beta;
}

}

inline Sample sample_graphon(const GraphonSpec& spec, int n, const ResponseModel& dgp, std::uint64_t seed) {
    spec.validate();
    if (n < 2) {
        throw ConfigError("sample_graphon: need n >= 2");
    }
    double rho = spec.sparsity.at(n);
    Stream root(seed);
    Stream lat = root.child(StreamId::latents);
    Sample s;
    s.rho_n = rho;
    s.xi.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        s.xi(i, 0) = lat.open_uniform(static_cast<std::uint64_t>(i));
    }
    const auto& w = spec.kernel;
    const Eigen::MatrixXd& xi = s.xi;
    s.graph = detail::bernoulli_graph(n, root.child(StreamId::edges), [&](int i, int j) {
        return std::min(rho * w(xi(i, 0), xi(j, 0)), 1.0);
    });
    if (dgp.network_truth) {
        s.truth.Z = dgp.network_truth(s.xi, rho);
    } else {
        s.truth.Z = Eigen::MatrixXd(n, 0);
    }
    detail::attach_response(s, dgp, root);
    return s;
}

/* Latents, truth and response only; the graph has n isolated nodes. Streams match sample_graphon. */
inline Sample sample_population(const GraphonSpec& spec, int n, const ResponseModel& dgp, std::uint64_t seed) {
    spec.validate();
    Stream root(seed);
    Stream lat = root.child(StreamId::latents);
    Sample s;
    s.rho_n = spec.sparsity.exponent ? 0.0 : spec.sparsity.value;
    s.xi.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        s.xi(i, 0) = lat.open_uniform(static_cast<std::uint64_t>(i));
    }
    s.graph = Graph(n);
    s.truth.Z = dgp.network_truth ? dgp.network_truth(s.xi, 0.0) : Eigen::MatrixXd(n, 0);
    detail::attach_response(s, dgp, root);
    return s;
}

struct BlockPositions {
    Eigen::MatrixXd positions;
    Eigen::VectorXd eigvals;
    double normalizer = 1.0;
};

/* Rows of V |D|^{1/2} for the top-d eigenpairs of B by magnitude, largest entry of each
 * eigenvector positive; normalizer = sqrt(pi' B pi). */
inline BlockPositions block_positions(const BlockModel& bm, int d) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(bm.B);
    int k = static_cast<int>(bm.pi.size());
    std::vector<int> order(k);
    for (int i = 0; i < k; ++i) {
        order[i] = i;
    }
    const auto& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::fabs(ev[a]) != std::fabs(ev[b])) {
            return std::fabs(ev[a]) > std::fabs(ev[b]);
        }
        return ev[a] > ev[b];
    });
    BlockPositions out;
    out.positions.resize(k, d);
    out.eigvals.resize(d);
    for (int c = 0; c < d; ++c) {
        Eigen::VectorXd v = es.eigenvectors().col(order[c]);
        Eigen::Index arg;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) {
            v = -v;
        }
        out.eigvals[c] = ev[order[c]];
        out.positions.col(c) = v * std::sqrt(std::fabs(ev[order[c]]));
    }
    Eigen::Map<const Eigen::VectorXd> pi(bm.pi.data(), k);
    out.normalizer = std::sqrt(pi.dot(bm.B * pi));
    return out;
}

inline Sample sample_grdpg(const GrdpgSpec& spec, int n, const ResponseModel& dgp, std::uint64_t seed) {
    spec.validate();
    if (n < 2) {
        throw ConfigError("sample_grdpg: need n >= 2");
    }
    double rho = spec.sparsity.at(n);
    Stream root(seed);
    Stream lat = root.child(StreamId::latents);
    Sample s;
    s.rho_n = rho;
    if (spec.blocks) {
        const auto& bm = *spec.blocks;
        BlockPositions bp = block_positions(bm, spec.d);
        int pos = 0;
        int neg = 0;
        for (int c = 0; c < spec.d; ++c) {
            (bp.eigvals[c] >= 0 ? pos : neg)++;
        }
        if (pos != spec.r_plus || neg != spec.r_minus) {
            throw ConfigError("grdpg: B has signature (" + std::to_string(pos) + "," + std::to_string(neg) +
                              ") on its top-" + std::to_string(spec.d) + " eigenvalues, spec says (" +
                              std::to_string(spec.r_plus) + "," + std::to_string(spec.r_minus) + ")");
        }
        int k = static_cast<int>(bm.pi.size());
        s.block.resize(n);
        for (int i = 0; i < n; ++i) {
            double u = lat.uniform(static_cast<std::uint64_t>(i));
            double acc = 0.0;
            int b = k - 1;
            for (int c = 0; c < k; ++c) {
                acc += bm.pi[c];
                if (u < acc) {
                    b = c;
                    break;
                }
            }
            while (bm.pi[b] == 0.0 && b > 0) {
                --b;
            }
            s.block[i] = b;
        }
        s.xi.resize(n, spec.d);
        for (int i = 0; i < n; ++i) {
            s.xi.row(i) = bp.positions.row(s.block[i]);
        }
        s.truth.Z = s.xi / bp.normalizer;
        const auto& block = s.block;
        s.graph = detail::bernoulli_graph(n, root.child(StreamId::edges), [&](int i, int j) {
            return std::clamp(rho * bm.B(block[i], block[j]), 0.0, 1.0);
        });
    } else {
        s.xi.resize(n, spec.d);
        for (int i = 0; i < n; ++i) {
            auto [chi, zeta] = spec.sampler(lat, i);
            if (chi.size() != spec.r_plus || zeta.size() != spec.r_minus) {
                throw ConfigError("grdpg: sampler output does not match the signature");
            }
            s.xi.row(i) << chi.transpose(), zeta.transpose();
        }
        s.truth.Z = s.xi;
        int rp = spec.r_plus;
        const Eigen::MatrixXd& x = s.xi;
        s.graph = detail::bernoulli_graph(n, root.child(StreamId::edges), [&](int i, int j) {
            double ip = x.row(i).head(rp).dot(x.row(j).head(rp)) -
                        x.row(i).tail(spec.r_minus).dot(x.row(j).tail(spec.r_minus));
            return std::clamp(rho * ip, 0.0, 1.0);
        });
    }
    detail::attach_response(s, dgp, root);
    return s;
}

}

#endif
