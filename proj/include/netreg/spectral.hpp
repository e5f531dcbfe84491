#ifndef NETREG_SPECTRAL_HPP
#define NETREG_SPECTRAL_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/common.hpp"
#include "netreg/graph.hpp"

namespace netreg {

struct Embedding {
    Eigen::MatrixXd Zhat;
    Eigen::VectorXd eigvals;
    double rho = 0.0;
    int d = 0;
    std::vector<std::string> warnings;
};

/* Ẑ = rho^{-1/2} U |S|^{1/2} from the top-d eigenpairs of a symmetric matrix by |eigenvalue|. */
inline Embedding ase_matrix(const Eigen::MatrixXd& A, int d, double rho) {
    Eigen::Index n = A.rows();
    if (d < 1 || d > n) {
        throw ConfigError("ase: need 1 <= d <= n");
    }
    if (!(rho > 0.0)) {
        throw DegenerateError("ase: rho_hat must be positive");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) {
        throw Error("ase: eigendecomposition failed");
    }
    const Eigen::VectorXd& ev = es.eigenvalues();
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        double fa = std::fabs(ev[a]);
        double fb = std::fabs(ev[b]);
        if (fa != fb) {
            return fa > fb;
        }
        return ev[a] > ev[b];
    });
    Embedding e;
    e.d = d;
    e.rho = rho;
    e.Zhat.resize(n, d);
    e.eigvals.resize(d);
    for (int c = 0; c < d; ++c) {
        Eigen::VectorXd u = es.eigenvectors().col(order[c]);
        Eigen::Index arg = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::fabs(u[i]) > best + 1e-12) {
                best = std::fabs(u[i]);
                arg = i;
            }
        }
        if (u[arg] < 0) {
            u = -u;
        }
        e.eigvals[c] = ev[order[c]];
        e.Zhat.col(c) = u * std::sqrt(std::fabs(ev[order[c]]) / rho);
    }
    if (d < n && std::fabs(std::fabs(ev[order[d - 1]]) - std::fabs(ev[order[d]])) <= 1e-12) {
        e.warnings.push_back("ambiguous cutoff: |eigenvalue| " + std::to_string(d) + " and " + std::to_string(d + 1) +
                             " coincide");
    }
    return e;
}

inline Embedding ase(const Graph& g, int d, double rho) {
    if (d < 1 || d > g.n()) {
        throw ConfigError("ase: need 1 <= d <= n");
    }
    if (!(rho > 0.0)) {
        throw DegenerateError("ase: rho_hat must be positive");
    }
    return ase_matrix(g.adjacency(), d, rho);
}

/* Per-block embeddings with block-local density, zero-padded into disjoint column groups
 * ordered by sorted block label. */
inline Embedding block_ase(const Graph& g, const std::vector<int>& labels, int d) {
    if (static_cast<int>(labels.size()) != g.n()) {
        throw SchemaError("block_ase: one label per node required");
    }
    std::map<int, std::vector<int>> members;
    for (int i = 0; i < g.n(); ++i) {
        members[labels[i]].push_back(i);
    }
    Embedding out;
    out.d = d * static_cast<int>(members.size());
    out.Zhat = Eigen::MatrixXd::Zero(g.n(), out.d);
    out.eigvals.resize(out.d);
    out.rho = edge_density(g);
    int group = 0;
    for (const auto& [label, nodes] : members) {
        if (static_cast<int>(nodes.size()) < std::max(d, 2)) {
            throw DegenerateError("block_ase: block " + std::to_string(label) + " has " +
                                  std::to_string(nodes.size()) + " node(s), fewer than needed for d=" +
                                  std::to_string(d));
        }
        Graph sub = g.induced(nodes);
        double rho = edge_density(sub);
        if (rho == 0.0) {
            throw DegenerateError("block_ase: block " + std::to_string(label) + " has no internal edges");
        }
        Embedding e = ase(sub, d, rho);
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            out.Zhat.block(nodes[k], group * d, 1, d) = e.Zhat.row(static_cast<Eigen::Index>(k));
        }
        out.eigvals.segment(group * d, d) = e.eigvals;
        for (const auto& w : e.warnings) {
            out.warnings.push_back("block " + std::to_string(label) + ": " + w);
        }
        ++group;
    }
    return out;
}

struct Alignment {
    Eigen::MatrixXd Q;
    double residual = 0.0;
    bool rank_deficient = false;
};

inline Alignment procrustes_align(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ConfigError("procrustes_align: shapes differ");
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Alignment out;
    out.Q = svd.matrixU() * svd.matrixV().transpose();
    const auto& sv = svd.singularValues();
    out.rank_deficient = sv.size() > 0 && sv[sv.size() - 1] <= 1e-12 * std::max(sv[0], 1e-300);
    out.residual = (a * out.Q - b).norm();
    return out;
}

}

#endif
