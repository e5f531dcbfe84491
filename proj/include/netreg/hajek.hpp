#ifndef NETREG_HAJEK_HPP
#define NETREG_HAJEK_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/common.hpp"
#include "netreg/counting.hpp"
#include "netreg/decomposition.hpp"
#include "netreg/estimators.hpp"
#include "netreg/graph.hpp"
#include "netreg/motif.hpp"

namespace netreg {

/* Per-node first-order projections aligned with the stacked statistic
 * (vec(Lambda) column-major, gamma, sparsity ratio). */
struct HajekTable {
    Eigen::MatrixXd G;
    Eigen::VectorXd order;
    Eigen::VectorXd alpha;
    Eigen::Index q = 0;
    bool corrected = false;

    Eigen::Index width() const { return q * q + q + 1; }
    Eigen::Index lambda_index(Eigen::Index a, Eigen::Index b) const { return b * q + a; }
    Eigen::Index gamma_index(Eigen::Index a) const { return q * q + a; }
    Eigen::Index rho_index() const { return q * q + q; }
};

namespace detail {

inline void require_kernel(const MotifSpec& m) {
    if (m.shape() == Shape::generic) {
        throw CapabilityError("hajek_projection: no projection kernel for motif " + m.label() +
                              " (supported: edge, k-star, rooted k-star, triangle)");
    }
}

inline long double kernel_norm(const MotifSpec& m, int n, double rho) {
    return m.r() * binom(n - 1, m.r() - 1) * std::pow(static_cast<long double>(rho), m.s()) *
           static_cast<long double>(m.iso_count());
}

/* Local term of n^{-1} sum_l V_l Z_l(m): (1/(r N rho^s Iso)) sum_{S ∋ i} sum_{l in roots(S)} V_l. */
inline Eigen::VectorXd linear_kernel(const Graph& g, const MotifSpec& m, const Eigen::VectorXd& V, double rho) {
    Eigen::MatrixXd w = weighted_local_sums(g, m, V);
    return w.col(0) / static_cast<double>(kernel_norm(m, g.n(), rho));
}

inline void center(Eigen::Ref<Eigen::VectorXd> col) {
    Accumulator acc;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
        acc.add(col[i]);
    }
    double mean = static_cast<double>(acc.value() / col.size());
    col.array() -= mean;
}

}

inline HajekTable hajek_projection(const Graph& g, const Design& des, bool corrected) {
    des.validate();
    if (des.n() != g.n()) {
        throw SchemaError("hajek_projection: design and graph sizes differ");
    }
    double rho = des.rho;
    require_density(rho);
    int n = g.n();
    Eigen::Index p = des.p();
    Eigen::Index q = des.q();
    Eigen::MatrixXd L = des.L();
    std::vector<const MotifSpec*> motif(q, nullptr);
    for (Eigen::Index k = 0; k < des.d(); ++k) {
        if (des.provenance[k].is_motif()) {
            motif[p + k] = &*des.provenance[k].motif;
            detail::require_kernel(*motif[p + k]);
        }
    }
    bool any_motif = std::any_of(motif.begin(), motif.end(), [](const MotifSpec* m) { return m != nullptr; });
    bool any_spectral = std::any_of(des.provenance.begin(), des.provenance.end(),
                                    [](const Provenance& pr) { return pr.kind == ColumnKind::spectral; });
    if (any_spectral && !any_motif) {
        throw CapabilityError("linear multiplier scheme needs motif covariates; use the independent scheme for "
                              "spectral-only designs");
    }
    HajekTable h;
    h.q = q;
    h.corrected = corrected;
    h.G = Eigen::MatrixXd::Zero(n, h.width());
    h.order = Eigen::VectorXd::Ones(h.width());
    h.alpha = Eigen::VectorXd::Zero(h.width());
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    for (Eigen::Index b = 0; b < q; ++b) {
        for (Eigen::Index a = 0; a <= b; ++a) {
            Eigen::VectorXd col;
            double order = 1.0;
            double alpha = 0.0;
            const MotifSpec* ma = motif[a];
            const MotifSpec* mb = motif[b];
            if (!ma && !mb) {
                col = L.col(a).cwiseProduct(L.col(b));
            } else if (!ma || !mb) {
                const MotifSpec* m = ma ? ma : mb;
                Eigen::Index other = ma ? b : a;
                col = detail::linear_kernel(g, *m, L.col(other), rho);
                order = m->r();
                alpha = m->s();
            } else {
                auto dec = merge_motifs(*ma, *mb, MergeMode::leading_only);
                col = Eigen::VectorXd::Zero(n);
                for (const auto& mc : dec.leading) {
                    col += mc.weight * detail::linear_kernel(g, mc.motif, ones, rho);
                }
                order = ma->r() + mb->r() - 1;
                alpha = ma->s() + mb->s();
            }
            detail::center(col);
            for (Eigen::Index idx : {h.lambda_index(a, b), h.lambda_index(b, a)}) {
                h.G.col(idx) = col;
                h.order[idx] = order;
                h.alpha[idx] = alpha;
            }
        }
        Eigen::Index gi = h.gamma_index(b);
        if (motif[b]) {
            h.G.col(gi) = detail::linear_kernel(g, *motif[b], des.Y, rho);
            h.order[gi] = motif[b]->r();
            h.alpha[gi] = motif[b]->s();
        } else {
            h.G.col(gi) = L.col(b).cwiseProduct(des.Y);
        }
        detail::center(h.G.col(gi));
    }
    Eigen::Index ri = h.rho_index();
    h.G.col(ri) = degree_term(g, rho);
    h.order[ri] = 2.0;
    return h;
}

/* n^{-2} sum_i D g_i g_i' D: conditional covariance of the linear multiplier perturbation. */
inline Eigen::MatrixXd hajek_covariance(const HajekTable& h) {
    Eigen::MatrixXd DG = h.G * h.order.asDiagonal();
    double n = static_cast<double>(h.G.rows());
    return DG.transpose() * DG / (n * n);
}

}

#endif
