#ifndef NETREG_IO_HPP
#define NETREG_IO_HPP

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "netreg/bootstrap.hpp"
#include "netreg/common.hpp"
#include "netreg/decomposition.hpp"
#include "netreg/estimators.hpp"
#include "netreg/graph.hpp"
#include "netreg/spectral.hpp"

namespace netreg {

using json = nlohmann::ordered_json;

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) {
        auto b = cell.find_first_not_of(" \t\r");
        auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw SchemaError("cannot open '" + path + "' for reading");
    }
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw SchemaError("cannot open '" + path + "' for writing");
    }
    out << std::setprecision(17);
    return out;
}

inline long parse_int(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        long v = std::stol(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw SchemaError(where + ": expected an integer, got '" + s + "'");
    }
}

inline double parse_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw SchemaError(where + ": expected a number, got '" + s + "'");
    }
}

}

inline void write_edge_csv(const Graph& g, const std::string& path) {
    auto out = detail::open_out(path);
    out << "src,dst\n";
    for (auto [u, v] : g.edge_list()) {
        out << u << "," << v << "\n";
    }
}

/* n defaults to the largest node id + 1. */
inline Graph read_edge_csv(const std::string& path, std::optional<int> n = std::nullopt) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv(line) != std::vector<std::string>{"src", "dst"}) {
        throw SchemaError(path + ": header must be 'src,dst'");
    }
    std::vector<std::pair<int, int>> edges;
    int maxid = -1;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto cells = detail::split_csv(line);
        std::string where = path + ":" + std::to_string(lineno);
        if (cells.size() != 2) {
            throw SchemaError(where + ": expected two columns");
        }
        int u = static_cast<int>(detail::parse_int(cells[0], where));
        int v = static_cast<int>(detail::parse_int(cells[1], where));
        if (u < 0 || v < 0) {
            throw SchemaError(where + ": negative node id");
        }
        if (u == v) {
            throw SchemaError(where + ": self-loop at node " + std::to_string(u));
        }
        edges.emplace_back(u, v);
        maxid = std::max({maxid, u, v});
    }
    int nn = n ? *n : maxid + 1;
    if (maxid >= nn) {
        throw SchemaError(path + ": node id " + std::to_string(maxid) + " exceeds the node count " + std::to_string(nn));
    }
    return Graph(nn, edges);
}

struct Table {
    std::vector<std::string> columns;
    Eigen::MatrixXd values;

    int column(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k) {
            if (columns[k] == name) {
                return static_cast<int>(k);
            }
        }
        throw SchemaError("table: no column named '" + name + "'");
    }
};

/* Header row then one row per node. A leading 'node' column must list 0..n-1 in any order;
 * n is then the largest id + 1. */
inline Table read_table_csv(const std::string& path, std::optional<long> expected_n = std::nullopt) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw SchemaError(path + ": empty file");
    }
    auto header = detail::split_csv(line);
    bool has_node = !header.empty() && header[0] == "node";
    std::vector<std::vector<double>> rows;
    std::vector<long> ids;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto cells = detail::split_csv(line);
        std::string where = path + ":" + std::to_string(lineno);
        if (cells.size() != header.size()) {
            throw SchemaError(where + ": expected " + std::to_string(header.size()) + " columns, got " +
                              std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (std::size_t k = has_node ? 1 : 0; k < cells.size(); ++k) {
            row.push_back(detail::parse_double(cells[k], where + " column '" + header[k] + "'"));
        }
        if (has_node) {
            ids.push_back(detail::parse_int(cells[0], where));
        }
        rows.push_back(std::move(row));
    }
    Table t;
    t.columns.assign(header.begin() + (has_node ? 1 : 0), header.end());
    long n = static_cast<long>(rows.size());
    if (expected_n) {
        n = *expected_n;
    } else if (has_node && !ids.empty()) {
        n = *std::max_element(ids.begin(), ids.end()) + 1;
    }
    if (!has_node && static_cast<long>(rows.size()) != n) {
        throw SchemaError(path + ": " + std::to_string(rows.size()) + " rows for " + std::to_string(n) + " nodes" +
                          (static_cast<long>(rows.size()) < n ? "; no row for node " + std::to_string(rows.size())
                                                              : ""));
    }
    t.values.resize(n, static_cast<Eigen::Index>(t.columns.size()));
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (long r = 0; r < static_cast<long>(rows.size()); ++r) {
        long id = has_node ? ids[r] : r;
        if (id < 0 || id >= n) {
            throw SchemaError(path + ": node id " + std::to_string(id) + " outside 0.." + std::to_string(n - 1));
        }
        if (seen[id]) {
            throw SchemaError(path + ": duplicate row for node " + std::to_string(id));
        }
        seen[id] = 1;
        for (std::size_t k = 0; k < t.columns.size(); ++k) {
            t.values(id, static_cast<Eigen::Index>(k)) = rows[r][k];
        }
    }
    for (long i = 0; i < n; ++i) {
        if (!seen[i]) {
            throw SchemaError(path + ": no row for node " + std::to_string(i));
        }
    }
    return t;
}

inline void write_table_csv(const std::string& path, const std::vector<std::string>& columns,
                            const Eigen::MatrixXd& values, bool node_column = true) {
    auto out = detail::open_out(path);
    if (node_column) {
        out << "node";
    }
    for (std::size_t k = 0; k < columns.size(); ++k) {
        out << (k || node_column ? "," : "") << columns[k];
    }
    out << "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        if (node_column) {
            out << i;
        }
        for (Eigen::Index k = 0; k < values.cols(); ++k) {
            out << (k || node_column ? "," : "") << values(i, k);
        }
        out << "\n";
    }
}

inline void write_embedding_csv(const Embedding& e, const std::string& path) {
    std::vector<std::string> cols;
    for (int c = 0; c < e.Zhat.cols(); ++c) {
        cols.push_back("z" + std::to_string(c + 1));
    }
    write_table_csv(path, cols, e.Zhat);
}

inline std::vector<int> read_block_csv(const std::string& path, int n) {
    auto in = detail::open_in(path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv(line) != std::vector<std::string>{"node", "block"}) {
        throw SchemaError(path + ": header must be 'node,block'");
    }
    std::vector<int> labels(static_cast<std::size_t>(n), -1);
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        auto cells = detail::split_csv(line);
        std::string where = path + ":" + std::to_string(lineno);
        if (cells.size() != 2) {
            throw SchemaError(where + ": expected two columns");
        }
        long node = detail::parse_int(cells[0], where);
        if (node < 0 || node >= n) {
            throw SchemaError(where + ": node " + std::to_string(node) + " out of range");
        }
        labels[node] = static_cast<int>(detail::parse_int(cells[1], where));
        seen[node] = 1;
    }
    for (int i = 0; i < n; ++i) {
        if (!seen[i]) {
            throw SchemaError(path + ": node " + std::to_string(i) + " has no block label");
        }
    }
    return labels;
}

inline json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index k = 0; k < v.size(); ++k) {
        out.push_back(v[k]);
    }
    return out;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.push_back(vector_json(m.row(r).transpose()));
    }
    return out;
}

inline json motif_json(const MotifSpec& m) {
    json e = json::array();
    for (auto [u, v] : m.edges()) {
        e.push_back({u, v});
    }
    return json{{"name", m.label()}, {"r", m.r()}, {"s", m.s()}, {"rooted", m.rooted()},
                {"class", to_string(m.motif_class())}, {"iso_count", m.iso_count()}, {"edges", e}};
}

inline json decomposition_json(const MotifDecomposition& dec) {
    auto entries = [](const std::vector<MergedClass>& list) {
        json out = json::array();
        for (const auto& mc : list) {
            out.push_back(json{{"c", mc.c}, {"d", mc.d}, {"motif", motif_json(mc.motif)}, {"K", mc.K},
                               {"weight", mc.weight}, {"iso_count", mc.motif.iso_count()}});
        }
        return out;
    };
    return json{{"first", motif_json(dec.first)}, {"second", motif_json(dec.second)},
                {"leading", entries(dec.leading)}, {"remainder", entries(dec.remainder)}, {"full", dec.full}};
}

inline json fit_json(const FitResult& fit) {
    json coef = json::object();
    for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
        coef[k < static_cast<Eigen::Index>(fit.names.size()) ? fit.names[k] : std::to_string(k)] = fit.beta[k];
    }
    json prov = json::array();
    for (const auto& p : fit.provenance) {
        json e{{"column", p.label}, {"kind", to_string(p.kind)}};
        if (p.motif) {
            e["motif"] = motif_json(*p.motif);
        }
        prov.push_back(e);
    }
    json out{{"variant", to_string(fit.variant)},
             {"coefficients", coef},
             {"beta", vector_json(fit.beta)},
             {"rho_hat", fit.rho},
             {"n_used", fit.rows.size()},
             {"Lambda", matrix_json(fit.Lambda)},
             {"gamma", vector_json(fit.gamma)},
             {"diagnostics", {{"min_singular_value", fit.min_singular}, {"condition_number", fit.condition}}},
             {"provenance", prov}};
    if (fit.variant == Variant::bias_corrected) {
        out["Lambda_mod"] = matrix_json(fit.Lambda_mod);
    }
    return out;
}

inline json test_json(const TestResult& t) {
    return json{{"statistic", t.statistic}, {"critical_value", t.critical}, {"p_value", t.p_value},
                {"alpha", t.alpha},         {"B", t.B},                     {"reject", t.reject}};
}

inline void write_replicates_csv(const BootstrapRun& run, const std::string& path) {
    auto out = detail::open_out(path);
    out << "replicate,flagged";
    for (Eigen::Index k = 0; k < run.replicates.cols(); ++k) {
        out << "," << (k < static_cast<Eigen::Index>(run.point.names.size()) ? run.point.names[k] : std::to_string(k));
    }
    out << "\n";
    for (int b = 0; b < run.B; ++b) {
        out << b << "," << static_cast<int>(run.flagged[b]);
        for (Eigen::Index k = 0; k < run.replicates.cols(); ++k) {
            out << "," << run.replicates(b, k);
        }
        out << "\n";
    }
}

inline json bootstrap_json(const BootstrapRun& run, double level, const std::optional<TestResult>& test) {
    json cis = json::array();
    for (const auto& iv : percentile_ci(run, level)) {
        cis.push_back({iv.lower, iv.upper});
    }
    json out{{"scheme", to_string(run.scheme)}, {"corrected", run.corrected}, {"B", run.B},
             {"seed", run.seed},                {"flagged", run.flagged_count},
             {"point", vector_json(run.point.beta)},
             {"names", run.point.names},
             {"se", vector_json(bootstrap_se(run))},
             {"level", level},
             {"ci", cis}};
    if (test) {
        out["test"] = test_json(*test);
    }
    return out;
}

inline void write_json(const json& j, const std::string& path) {
    auto out = detail::open_out(path);
    out << j.dump(2) << "\n";
}

}

#endif
