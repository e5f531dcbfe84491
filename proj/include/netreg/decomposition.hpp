#ifndef NETREG_DECOMPOSITION_HPP
#define NETREG_DECOMPOSITION_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "netreg/common.hpp"
#include "netreg/counting.hpp"
#include "netreg/graph.hpp"
#include "netreg/motif.hpp"

namespace netreg {

/* One isomorphism class of unions of a copy of R_j and a copy of R_k sharing c vertices
 * and d edges. K counts copy pairs on a fixed vertex layout; weight = K / (Iso_j Iso_k). */
struct MergedClass {
    int c = 1;
    int d = 0;
    MotifSpec motif;
    std::int64_t K = 0;
    double weight = 0.0;
};

struct MotifDecomposition {
    MotifSpec first;
    MotifSpec second;
    std::vector<MergedClass> leading;
    std::vector<MergedClass> remainder;
    bool full = false;
};

enum class MergeMode { leading_only, full };

inline MotifDecomposition merge_motifs(const MotifSpec& a, const MotifSpec& b, MergeMode mode) {
    bool stars = a.shape() == Shape::rooted_star && b.shape() == Shape::rooted_star;
    int largest = a.r() + b.r() - 1;
    if (!stars && largest > generic_vertex_cap) {
        throw CapabilityError("merge_motifs: merged patterns have " + std::to_string(largest) +
                              " vertices; the generic path is capped at r_j + r_k - 1 <= " +
                              std::to_string(generic_vertex_cap));
    }
    MotifDecomposition dec;
    dec.first = a;
    dec.second = b;
    dec.full = mode == MergeMode::full;
    bool rooted = a.rooted() || b.rooted();
    auto ca = a.copies();
    auto cb = b.copies();
    double norm = static_cast<double>(a.iso_count()) * static_cast<double>(b.iso_count());
    int cmax = mode == MergeMode::full ? std::min(a.r(), b.r()) : 1;
    for (int c = 1; c <= cmax; ++c) {
        std::vector<int> map(b.r());
        for (int v = 0; v < b.r(); ++v) {
            map[v] = v < c ? v : a.r() + (v - c);
        }
        std::map<std::tuple<int, std::string>, MergedClass> classes;
        for (const auto& pa : ca) {
            for (const auto& pb0 : cb) {
                EdgeList pb = relabel(pb0, map);
                EdgeList uni = pa;
                uni.insert(uni.end(), pb.begin(), pb.end());
                uni = normalize_edges(std::move(uni));
                int d = a.s() + b.s() - static_cast<int>(uni.size());
                MotifSpec m(uni, rooted);
                auto key = std::make_tuple(d, m.key());
                auto it = classes.find(key);
                if (it == classes.end()) {
                    MergedClass mc;
                    mc.c = c;
                    mc.d = d;
                    mc.motif = m;
                    it = classes.emplace(key, mc).first;
                }
                ++it->second.K;
            }
        }
        for (auto& [key, mc] : classes) {
            mc.weight = static_cast<double>(mc.K) / norm;
            (c == 1 ? dec.leading : dec.remainder).push_back(mc);
        }
    }
    return dec;
}

/* Finite-n coefficient of Q(M) in n^{-1} sum_i Z_ij Z_ik. */
inline long double exact_coefficient(const MotifDecomposition& dec, const MergedClass& mc, int n, double rho) {
    int ra = dec.first.r();
    int rb = dec.second.r();
    int rm = ra + rb - mc.c;
    long double layouts = binom(rm - 1, mc.c - 1) * binom(rm - mc.c, ra - mc.c);
    long double ratio = binom(n - 1, rm - 1) / (binom(n - 1, ra - 1) * binom(n - 1, rb - 1));
    return static_cast<long double>(mc.weight) * layouts * ratio * std::pow(static_cast<long double>(rho), -mc.d);
}

inline double leading_term(const Graph& g, const MotifDecomposition& dec, double rho) {
    if (dec.leading.empty()) {
        throw ConfigError("leading_term: decomposition has no leading classes");
    }
    require_density(rho);
    Accumulator acc;
    for (const auto& mc : dec.leading) {
        if (mc.motif.r() <= g.n()) {
            acc.add(static_cast<long double>(mc.weight) * count_global(g, mc.motif, rho));
        }
    }
    return static_cast<double>(acc.value());
}

inline double raw_quadratic(const Graph& g, const MotifSpec& a, const MotifSpec& b, double rho) {
    auto za = count_local(g, a, rho).values;
    auto zb = a.same_class(b) ? za : count_local(g, b, rho).values;
    Accumulator acc;
    for (int i = 0; i < g.n(); ++i) {
        acc.add(static_cast<long double>(za[i]) * zb[i]);
    }
    return static_cast<double>(acc.value() / g.n());
}

/* Right-hand side of the full merge identity with exact finite-n coefficients. */
inline double exact_quadratic(const Graph& g, const MotifDecomposition& dec, double rho) {
    if (!dec.full) {
        throw ConfigError("exact_quadratic: needs a full decomposition");
    }
    require_density(rho);
    Accumulator acc;
    for (const auto* list : {&dec.leading, &dec.remainder}) {
        for (const auto& mc : *list) {
            if (mc.motif.r() <= g.n()) {
                acc.add(exact_coefficient(dec, mc, g.n(), rho) * count_global(g, mc.motif, rho));
            }
        }
    }
    return static_cast<double>(acc.value());
}

inline double remainder_term(const Graph& g, const MotifDecomposition& dec, double rho) {
    return exact_quadratic(g, dec, rho) - leading_term(g, dec, rho);
}

inline double quadratic_identity_check(const Graph& g, const MotifSpec& a, const MotifSpec& b, double rho) {
    auto dec = merge_motifs(a, b, MergeMode::full);
    return std::fabs(raw_quadratic(g, a, b, rho) - exact_quadratic(g, dec, rho));
}

}

#endif
