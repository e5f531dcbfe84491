#ifndef NETREG_MOTIF_HPP
#define NETREG_MOTIF_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "netreg/common.hpp"

namespace netreg {

using EdgeList = std::vector<std::pair<int, int>>;

enum class MotifClass { acyclic, simple_cycle, general_cyclic };

inline std::string to_string(MotifClass c) {
    switch (c) {
    case MotifClass::acyclic:
        return "acyclic";
    case MotifClass::simple_cycle:
        return "simple-cycle";
    default:
        return "general-cyclic";
    }
}

/* Shapes with closed-form counting and projection kernels. */
enum class Shape { edge, star, rooted_star, triangle, generic };

constexpr int generic_vertex_cap = 8;

inline EdgeList normalize_edges(EdgeList e) {
    for (auto& [u, v] : e) {
        if (u > v) {
            std::swap(u, v);
        }
    }
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

inline EdgeList relabel(const EdgeList& e, const std::vector<int>& map) {
    EdgeList out;
    out.reserve(e.size());
    for (auto [u, v] : e) {
        out.emplace_back(map[u], map[v]);
    }
    return normalize_edges(std::move(out));
}

namespace detail {

struct Orbit {
    EdgeList canonical;
    std::int64_t automorphisms = 0;
    std::vector<EdgeList> copies;
};

/* Enumerates relabelings of {0..r-1} (fixing 0 when rooted) and collects the
 * lexicographically minimal image, the automorphism count and all distinct images. */
inline Orbit compute_orbit(int r, const EdgeList& edges, bool rooted) {
    if (r > generic_vertex_cap) {
        throw CapabilityError("motif: generic isomorphism enumeration is capped at " +
                              std::to_string(generic_vertex_cap) + " vertices (got " + std::to_string(r) + ")");
    }
    Orbit out;
    std::vector<int> perm(r);
    std::iota(perm.begin(), perm.end(), 0);
    std::set<EdgeList> images;
    bool first = true;
    auto begin = rooted ? perm.begin() + 1 : perm.begin();
    do {
        EdgeList img = relabel(edges, perm);
        if (img == edges) {
            ++out.automorphisms;
        }
        if (first || img < out.canonical) {
            out.canonical = img;
            first = false;
        }
        images.insert(std::move(img));
    } while (std::next_permutation(begin, perm.end()));
    out.copies.assign(images.begin(), images.end());
    return out;
}

inline const Orbit& cached_orbit(int r, const EdgeList& edges, bool rooted) {
    static std::mutex mu;
    static std::map<std::tuple<int, bool, EdgeList>, Orbit> cache;
    auto key = std::make_tuple(r, rooted, edges);
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end()) {
            return it->second;
        }
    }
    Orbit o = compute_orbit(r, edges, rooted);
    std::lock_guard<std::mutex> lock(mu);
    return cache.emplace(key, std::move(o)).first->second;
}

}

class MotifSpec {
public:
    MotifSpec() = default;

    MotifSpec(EdgeList edges, bool rooted = false, std::string name = "") : rooted_(rooted), name_(std::move(name)) {
        edges_ = normalize_edges(std::move(edges));
        if (edges_.empty()) {
            throw ConfigError("motif: empty edge set");
        }
        int maxv = 0;
        for (auto [u, v] : edges_) {
            if (u < 0) {
                throw ConfigError("motif: negative vertex label");
            }
            if (u == v) {
                throw ConfigError("motif: self-loop");
            }
            maxv = std::max(maxv, v);
        }
        r_ = maxv + 1;
        std::vector<int> deg(r_, 0);
        for (auto [u, v] : edges_) {
            ++deg[u];
            ++deg[v];
        }
        for (int v = 0; v < r_; ++v) {
            if (deg[v] == 0) {
                throw ConfigError("motif: vertex " + std::to_string(v) + " is not touched by any edge");
            }
        }
        if (!connected()) {
            throw ConfigError("motif: pattern must be connected");
        }
        classify(deg);
        if (shape_ == Shape::generic) {
            const auto& o = detail::cached_orbit(r_, edges_, rooted_);
            canonical_ = o.canonical;
            automorphisms_ = o.automorphisms;
        } else {
            canonical_edges_for_shape();
        }
    }

    int r() const { return r_; }
    int s() const { return static_cast<int>(edges_.size()); }
    bool rooted() const { return rooted_; }
    const EdgeList& edges() const { return edges_; }
    const EdgeList& canonical() const { return canonical_; }
    Shape shape() const { return shape_; }
    int star_k() const { return star_k_; }
    const std::string& name() const { return name_; }

    MotifClass motif_class() const {
        if (s() == r_ - 1) {
            return MotifClass::acyclic;
        }
        if (s() == r_) {
            std::vector<int> deg(r_, 0);
            for (auto [u, v] : edges_) {
                ++deg[u];
                ++deg[v];
            }
            if (std::all_of(deg.begin(), deg.end(), [](int d) { return d == 2; })) {
                return MotifClass::simple_cycle;
            }
        }
        return MotifClass::general_cyclic;
    }

    /* Automorphisms of the pattern (fixing vertex 0 when rooted). */
    std::int64_t automorphisms() const { return automorphisms_; }

    /* Distinct labeled copies on the r labels: r!/|Aut|, or (r-1)!/|Aut_0| when rooted. */
    std::int64_t iso_count() const { return factorial(rooted_ ? r_ - 1 : r_) / automorphisms_; }

    /* All distinct labeled copies on {0..r-1} (root kept at 0 when rooted). */
    std::vector<EdgeList> copies() const {
        if (shape_ == Shape::rooted_star) {
            return {canonical_};
        }
        return detail::cached_orbit(r_, edges_, rooted_).copies;
    }

    MotifSpec unrooted() const { return MotifSpec(edges_, false, name_); }

    std::string key() const {
        std::ostringstream os;
        os << (rooted_ ? "R" : "U") << r_ << ":";
        for (auto [u, v] : canonical_) {
            os << u << "-" << v << ",";
        }
        return os.str();
    }

    std::string label() const { return name_.empty() ? key() : name_; }

    bool same_class(const MotifSpec& o) const { return rooted_ == o.rooted_ && r_ == o.r_ && canonical_ == o.canonical_; }

private:
    bool connected() const {
        std::vector<std::vector<int>> adj(r_);
        for (auto [u, v] : edges_) {
            adj[u].push_back(v);
            adj[v].push_back(u);
        }
        std::vector<char> seen(r_, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++count;
                    stack.push_back(v);
                }
            }
        }
        return count == r_;
    }

    void classify(const std::vector<int>& deg) {
        int sz = s();
        shape_ = Shape::generic;
        if (rooted_) {
            if (sz == r_ - 1 && deg[0] == sz) {
                shape_ = Shape::rooted_star;
                star_k_ = sz;
            }
            return;
        }
        if (r_ == 2) {
            shape_ = Shape::edge;
            star_k_ = 1;
        } else if (r_ == 3 && sz == 3) {
            shape_ = Shape::triangle;
        } else if (sz == r_ - 1 && *std::max_element(deg.begin(), deg.end()) == sz) {
            shape_ = Shape::star;
            star_k_ = sz;
        }
    }

    void canonical_edges_for_shape() {
        if (shape_ == Shape::triangle) {
            canonical_ = {{0, 1}, {0, 2}, {1, 2}};
            automorphisms_ = 6;
            return;
        }
        canonical_.clear();
        for (int v = 1; v <= star_k_; ++v) {
            canonical_.emplace_back(0, v);
        }
        if (shape_ == Shape::edge) {
            automorphisms_ = 2;
        } else {
            automorphisms_ = factorial(star_k_);
        }
    }

    int r_ = 0;
    EdgeList edges_;
    EdgeList canonical_;
    bool rooted_ = false;
    std::string name_;
    Shape shape_ = Shape::generic;
    int star_k_ = 0;
    std::int64_t automorphisms_ = 1;
};

inline MotifSpec edge_motif() { return MotifSpec({{0, 1}}, false, "edge"); }

inline MotifSpec k_star(int k) {
    if (k < 1) {
        throw ConfigError("k_star: need k >= 1");
    }
    EdgeList e;
    for (int v = 1; v <= k; ++v) {
        e.emplace_back(0, v);
    }
    return MotifSpec(e, false, k == 1 ? "edge" : (k == 2 ? "two_star" : "k_star(" + std::to_string(k) + ")"));
}

inline MotifSpec two_star() { return k_star(2); }

inline MotifSpec triangle() { return MotifSpec({{0, 1}, {1, 2}, {0, 2}}, false, "triangle"); }

inline MotifSpec cycle(int len) {
    if (len < 3) {
        throw ConfigError("cycle: need len >= 3");
    }
    EdgeList e;
    for (int v = 0; v < len; ++v) {
        e.emplace_back(v, (v + 1) % len);
    }
    return MotifSpec(e, false, len == 3 ? "triangle" : "cycle(" + std::to_string(len) + ")");
}

inline MotifSpec rooted_k_star(int k) {
    if (k < 1) {
        throw ConfigError("rooted_k_star: need k >= 1");
    }
    EdgeList e;
    for (int v = 1; v <= k; ++v) {
        e.emplace_back(0, v);
    }
    return MotifSpec(e, true, "rooted_k_star(" + std::to_string(k) + ")");
}

/* Accepts edge, two_star, triangle, k_star(k), cycle(len), rooted_k_star(k), rooted_two_star. */
inline MotifSpec builtin_motif(const std::string& name) {
    static const std::regex call(R"(\s*([a-z_]+)\s*\(\s*(-?\d+)\s*\)\s*)");
    std::smatch m;
    if (name == "edge") {
        return edge_motif();
    }
    if (name == "two_star") {
        return two_star();
    }
    if (name == "triangle") {
        return triangle();
    }
    if (name == "rooted_two_star") {
        return rooted_k_star(2);
    }
    if (std::regex_match(name, m, call)) {
        std::string f = m[1];
        int arg = std::stoi(m[2]);
        if (f == "k_star") {
            return k_star(arg);
        }
        if (f == "cycle") {
            return cycle(arg);
        }
        if (f == "rooted_k_star") {
            return rooted_k_star(arg);
        }
    }
    throw ConfigError("unsupported motif name '" + name + "'");
}

/* One "u v" pair per line, optional "root u" line; '#' starts a comment. */
inline MotifSpec parse_motif(const std::string& text, const std::string& name = "") {
    std::istringstream in(text);
    std::string line;
    EdgeList edges;
    int root = -1;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) {
            continue;
        }
        if (first == "root") {
            if (!(ls >> root)) {
                throw SchemaError("motif text line " + std::to_string(lineno) + ": expected 'root u'");
            }
            continue;
        }
        int u = 0;
        int v = 0;
        try {
            u = std::stoi(first);
        } catch (const std::exception&) {
            throw SchemaError("motif text line " + std::to_string(lineno) + ": expected 'u v'");
        }
        if (!(ls >> v)) {
            throw SchemaError("motif text line " + std::to_string(lineno) + ": expected 'u v'");
        }
        edges.emplace_back(u, v);
    }
    if (edges.empty()) {
        throw SchemaError("motif text: no edges");
    }
    if (root > 0) {
        for (auto& [u, v] : edges) {
            u = u == root ? 0 : (u == 0 ? root : u);
            v = v == root ? 0 : (v == 0 ? root : v);
        }
    }
    return MotifSpec(edges, root >= 0, name);
}

inline std::string format_motif(const MotifSpec& m) {
    std::ostringstream os;
    for (auto [u, v] : m.edges()) {
        os << u << " " << v << "\n";
    }
    if (m.rooted()) {
        os << "root 0\n";
    }
    return os.str();
}

}

#endif
