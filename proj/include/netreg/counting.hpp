#ifndef NETREG_COUNTING_HPP
#define NETREG_COUNTING_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netreg/common.hpp"
#include "netreg/graph.hpp"
#include "netreg/motif.hpp"

namespace netreg {

struct LocalCounts {
    MotifSpec motif;
    Eigen::VectorXd values;
    double rho = 0.0;
    int exponent = 0;
    long double denominator = 0.0L;
};

namespace detail {

struct EmbeddingPlan {
    std::vector<int> order;
    std::vector<int> parent;
    std::vector<std::vector<int>> checks;
};

inline EmbeddingPlan plan_embedding(const MotifSpec& m) {
    int r = m.r();
    std::vector<std::vector<int>> adj(r);
    for (auto [u, v] : m.edges()) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    EmbeddingPlan p;
    std::vector<int> pos(r, -1);
    p.order.push_back(0);
    pos[0] = 0;
    for (std::size_t head = 0; head < p.order.size(); ++head) {
        for (int v : adj[p.order[head]]) {
            if (pos[v] < 0) {
                pos[v] = static_cast<int>(p.order.size());
                p.order.push_back(v);
            }
        }
    }
    p.parent.assign(r, -1);
    p.checks.assign(r, {});
    for (int k = 1; k < r; ++k) {
        int v = p.order[k];
        for (int u : adj[v]) {
            if (pos[u] < k) {
                if (p.parent[k] < 0) {
                    p.parent[k] = pos[u];
                } else {
                    p.checks[k].push_back(pos[u]);
                }
            }
        }
    }
    return p;
}

/* Visits every injective edge-preserving map phi (indexed by pattern vertex) with phi[0] = start. */
template <class Visit>
void embeddings_from(const Graph& g, const EmbeddingPlan& p, int start, Visit&& visit) {
    int r = static_cast<int>(p.order.size());
    std::vector<int> img(r, -1);
    std::vector<int> phi(r, -1);
    std::vector<std::size_t> cursor(r, 0);
    img[0] = start;
    phi[p.order[0]] = start;
    if (r == 1) {
        visit(phi);
        return;
    }
    int k = 1;
    cursor[1] = 0;
    while (k >= 1) {
        const auto& cand = g.neighbors(img[p.parent[k]]);
        bool placed = false;
        while (cursor[k] < cand.size()) {
            int v = cand[cursor[k]++];
            bool ok = true;
            for (int t = 0; t < k && ok; ++t) {
                ok = img[t] != v;
            }
            for (int t : p.checks[k]) {
                if (!ok) {
                    break;
                }
                ok = g.has_edge(img[t], v);
            }
            if (ok) {
                img[k] = v;
                phi[p.order[k]] = v;
                placed = true;
                break;
            }
        }
        if (!placed) {
            --k;
            continue;
        }
        if (k == r - 1) {
            visit(phi);
        } else {
            ++k;
            cursor[k] = 0;
        }
    }
}

template <class Visit>
void for_each_embedding(const Graph& g, const MotifSpec& m, Visit&& visit) {
    EmbeddingPlan p = plan_embedding(m);
    for (int v = 0; v < g.n(); ++v) {
        embeddings_from(g, p, v, visit);
    }
}

inline std::int64_t codegree(const Graph& g, int a, int b) {
    const auto& x = g.neighbors(a);
    const auto& y = g.neighbors(b);
    std::int64_t c = 0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] < y[j]) {
            ++i;
        } else if (x[i] > y[j]) {
            ++j;
        } else {
            ++c;
            ++i;
            ++j;
        }
    }
    return c;
}

inline std::vector<long double> triangles_at(const Graph& g) {
    std::vector<long double> t(g.n(), 0.0L);
    for (int i = 0; i < g.n(); ++i) {
        std::int64_t twice = 0;
        for (int a : g.neighbors(i)) {
            twice += codegree(g, i, a);
        }
        t[i] = static_cast<long double>(twice / 2);
    }
    return t;
}

inline void warn_generic(const MotifSpec& m, int n) {
    static std::once_flag flag;
    if (n > 200) {
        std::call_once(flag, [&]() {
            std::fprintf(stderr, "warning: generic motif counting for %s is O(n^%d)\n", m.label().c_str(), m.r());
        });
    }
}

}

/* Number of copies of an unrooted pattern containing each node, or of rooted copies with root at each node. */
inline std::vector<long double> raw_local_counts(const Graph& g, const MotifSpec& m) {
    int n = g.n();
    std::vector<long double> out(n, 0.0L);
    switch (m.shape()) {
    case Shape::edge:
        for (int i = 0; i < n; ++i) {
            out[i] = g.degree(i);
        }
        return out;
    case Shape::rooted_star:
        for (int i = 0; i < n; ++i) {
            out[i] = binom(g.degree(i), m.star_k());
        }
        return out;
    case Shape::star: {
        int k = m.star_k();
        for (int i = 0; i < n; ++i) {
            long double v = binom(g.degree(i), k);
            for (int l : g.neighbors(i)) {
                v += binom(g.degree(l) - 1, k - 1);
            }
            out[i] = v;
        }
        return out;
    }
    case Shape::triangle:
        return detail::triangles_at(g);
    case Shape::generic:
        break;
    }
    detail::warn_generic(m, n);
    std::vector<std::int64_t> emb(n, 0);
    if (m.rooted()) {
        detail::for_each_embedding(g, m, [&](const std::vector<int>& phi) { ++emb[phi[0]]; });
    } else {
        detail::for_each_embedding(g, m, [&](const std::vector<int>& phi) {
            for (int v : phi) {
                ++emb[v];
            }
        });
    }
    for (int i = 0; i < n; ++i) {
        out[i] = static_cast<long double>(emb[i] / m.automorphisms());
    }
    return out;
}

inline void require_density(double rho) {
    if (!(rho > 0.0)) {
        throw DegenerateError("motif counts need rho_hat > 0 (degenerate graph)");
    }
}

inline LocalCounts count_local(const Graph& g, const MotifSpec& m, double rho) {
    require_density(rho);
    if (m.r() > g.n()) {
        throw ConfigError("motif has more vertices than the graph");
    }
    LocalCounts lc;
    lc.motif = m;
    lc.rho = rho;
    lc.exponent = m.s();
    lc.denominator = binom(g.n() - 1, m.r() - 1) * std::pow(static_cast<long double>(rho), m.s()) *
                     static_cast<long double>(m.iso_count());
    auto raw = raw_local_counts(g, m);
    lc.values.resize(g.n());
    for (int i = 0; i < g.n(); ++i) {
        lc.values[i] = static_cast<double>(raw[i] / lc.denominator);
    }
    return lc;
}

inline LocalCounts count_local_rooted(const Graph& g, const MotifSpec& star, double rho) {
    if (star.shape() != Shape::rooted_star) {
        throw CapabilityError("count_local_rooted: motif " + star.label() + " is not a rooted k-star");
    }
    return count_local(g, star, rho);
}

/* Global normalized count; for rooted patterns the mean of the rooted local counts. */
inline double count_global(const Graph& g, const MotifSpec& m, double rho) {
    require_density(rho);
    if (m.r() > g.n()) {
        throw ConfigError("motif has more vertices than the graph");
    }
    auto raw = raw_local_counts(g, m);
    Accumulator acc;
    for (long double v : raw) {
        acc.add(v);
    }
    long double total = acc.value();
    long double norm = std::pow(static_cast<long double>(rho), m.s()) * static_cast<long double>(m.iso_count());
    if (m.rooted()) {
        return static_cast<double>(total / (g.n() * binom(g.n() - 1, m.r() - 1) * norm));
    }
    long double copies = total / m.r();
    return static_cast<double>(copies / (binom(g.n(), m.r()) * norm));
}

/* Row i: sum over copies S containing i of sum_{l in roots(S)} V_l, where roots(S) is V(S)
 * for unrooted patterns and the root for rooted ones. */
inline Eigen::MatrixXd weighted_local_sums(const Graph& g, const MotifSpec& m, const Eigen::MatrixXd& V) {
    int n = g.n();
    Eigen::Index q = V.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, q);
    Eigen::MatrixXd nb = Eigen::MatrixXd::Zero(n, q);
    for (int i = 0; i < n; ++i) {
        for (int l : g.neighbors(i)) {
            nb.row(i) += V.row(l);
        }
    }
    switch (m.shape()) {
    case Shape::edge:
        for (int i = 0; i < n; ++i) {
            out.row(i) = g.degree(i) * V.row(i) + nb.row(i);
        }
        return out;
    case Shape::rooted_star: {
        int k = m.star_k();
        for (int i = 0; i < n; ++i) {
            out.row(i) = static_cast<double>(binom(g.degree(i), k)) * V.row(i);
            for (int l : g.neighbors(i)) {
                out.row(i) += static_cast<double>(binom(g.degree(l) - 1, k - 1)) * V.row(l);
            }
        }
        return out;
    }
    case Shape::star: {
        int k = m.star_k();
        for (int i = 0; i < n; ++i) {
            int di = g.degree(i);
            out.row(i) = static_cast<double>(binom(di, k)) * V.row(i) +
                         static_cast<double>(binom(di - 1, k - 1)) * nb.row(i);
            for (int c : g.neighbors(i)) {
                int dc = g.degree(c);
                out.row(i) += static_cast<double>(binom(dc - 1, k - 1)) * (V.row(c) + V.row(i)) +
                              static_cast<double>(binom(dc - 2, k - 2)) * (nb.row(c) - V.row(i));
            }
        }
        return out;
    }
    case Shape::triangle: {
        for (int i = 0; i < n; ++i) {
            std::int64_t twice = 0;
            for (int a : g.neighbors(i)) {
                std::int64_t c = detail::codegree(g, i, a);
                twice += c;
                out.row(i) += static_cast<double>(c) * V.row(a);
            }
            out.row(i) += static_cast<double>(twice / 2) * V.row(i);
        }
        return out;
    }
    case Shape::generic:
        break;
    }
    detail::warn_generic(m, n);
    std::vector<int> roots;
    if (m.rooted()) {
        roots.push_back(0);
    } else {
        for (int v = 0; v < m.r(); ++v) {
            roots.push_back(v);
        }
    }
    Eigen::RowVectorXd w(q);
    detail::for_each_embedding(g, m, [&](const std::vector<int>& phi) {
        w.setZero();
        for (int l : roots) {
            w += V.row(phi[l]);
        }
        for (int v : phi) {
            out.row(v) += w;
        }
    });
    out /= static_cast<double>(m.automorphisms());
    return out;
}

}

#endif
