#ifndef NETREG_GRAPH_HPP
#define NETREG_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netreg/common.hpp"

namespace netreg {

/* Immutable simple undirected graph on nodes 0..n-1. */
class Graph {
public:
    Graph() = default;

    explicit Graph(int n) : adj_(static_cast<std::size_t>(n)) {
        if (n < 0) {
            throw ConfigError("graph: negative node count");
        }
    }

    Graph(int n, const std::vector<std::pair<int, int>>& edges) : Graph(n) {
        for (auto [u, v] : edges) {
            if (u < 0 || v < 0 || u >= n || v >= n) {
                throw SchemaError("graph: edge (" + std::to_string(u) + "," + std::to_string(v) +
                                  ") out of range for n=" + std::to_string(n));
            }
            if (u == v) {
                throw SchemaError("graph: self-loop at node " + std::to_string(u));
            }
            adj_[u].push_back(v);
            adj_[v].push_back(u);
        }
        finalize();
    }

    /* Takes per-node neighbor lists; lists are sorted and deduplicated. */
    static Graph from_adjacency(std::vector<std::vector<int>> adj) {
        Graph g;
        g.adj_ = std::move(adj);
        g.finalize();
        return g;
    }

    int n() const { return static_cast<int>(adj_.size()); }
    std::int64_t num_edges() const { return num_edges_; }
    int degree(int i) const { return static_cast<int>(adj_[i].size()); }
    const std::vector<int>& neighbors(int i) const { return adj_[i]; }

    bool has_edge(int i, int j) const {
        const auto& a = adj_[i].size() <= adj_[j].size() ? adj_[i] : adj_[j];
        int other = adj_[i].size() <= adj_[j].size() ? j : i;
        return std::binary_search(a.begin(), a.end(), other);
    }

    std::vector<std::pair<int, int>> edge_list() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(static_cast<std::size_t>(num_edges_));
        for (int u = 0; u < n(); ++u) {
            for (int v : adj_[u]) {
                if (u < v) {
                    out.emplace_back(u, v);
                }
            }
        }
        return out;
    }

    /* Node i of the result is nodes[i] of this graph. */
    Graph induced(const std::vector<int>& nodes) const {
        std::vector<int> pos(adj_.size(), -1);
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            pos[nodes[k]] = static_cast<int>(k);
        }
        std::vector<std::vector<int>> sub(nodes.size());
        for (std::size_t k = 0; k < nodes.size(); ++k) {
            for (int v : adj_[nodes[k]]) {
                if (pos[v] >= 0) {
                    sub[k].push_back(pos[v]);
                }
            }
        }
        return from_adjacency(std::move(sub));
    }

    /* Node i of this graph becomes node perm[i]. */
    Graph permuted(const std::vector<int>& perm) const {
        std::vector<std::vector<int>> out(adj_.size());
        for (int u = 0; u < n(); ++u) {
            for (int v : adj_[u]) {
                out[perm[u]].push_back(perm[v]);
            }
        }
        return from_adjacency(std::move(out));
    }

    Eigen::MatrixXd adjacency() const {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n(), n());
        for (int u = 0; u < n(); ++u) {
            for (int v : adj_[u]) {
                a(u, v) = 1.0;
            }
        }
        return a;
    }

    Eigen::VectorXd degrees() const {
        Eigen::VectorXd d(n());
        for (int i = 0; i < n(); ++i) {
            d[i] = degree(i);
        }
        return d;
    }

private:
    void finalize() {
        num_edges_ = 0;
        for (std::size_t u = 0; u < adj_.size(); ++u) {
            auto& a = adj_[u];
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
            if (std::binary_search(a.begin(), a.end(), static_cast<int>(u))) {
                throw SchemaError("graph: self-loop at node " + std::to_string(u));
            }
            num_edges_ += static_cast<std::int64_t>(a.size());
        }
        num_edges_ /= 2;
    }

    std::vector<std::vector<int>> adj_;
    std::int64_t num_edges_ = 0;
};

inline double edge_density(const Graph& g) {
    if (g.n() < 2) {
        throw ConfigError("edge_density: need n >= 2");
    }
    return static_cast<double>(g.num_edges()) / static_cast<double>(binom(g.n(), 2));
}

inline double mean_degree(const Graph& g) {
    return g.n() == 0 ? 0.0 : 2.0 * static_cast<double>(g.num_edges()) / g.n();
}

}

#endif
