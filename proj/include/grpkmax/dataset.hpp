#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "grpkmax/model.hpp"
#include "grpkmax/types.hpp"

namespace grpkmax {

/// Raw CSV contents: header row plus string cells. Plain comma-separated
/// UTF-8 without quoting.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace detail

inline CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    CsvTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = detail::strip_cr(line);
        if (line_no == 1) {
            table.columns = detail::split_csv_line(line);
            if (table.columns.empty()) {
                throw ParseError(path + ":1: empty header row");
            }
            continue;
        }
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != table.columns.size()) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                             std::to_string(table.columns.size()) + " fields, got " +
                             std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (line_no == 0) {
        throw ParseError(path + ": empty file");
    }
    return table;
}

/// All-numeric view of a CSV table. Every cell must parse as a finite
/// double; missing values are rejected.
struct NumericTable {
    std::vector<std::string> columns;
    Matrix values;

    Index column_index(const std::string& name) const {
        for (std::size_t j = 0; j < columns.size(); ++j) {
            if (columns[j] == name) return static_cast<Index>(j);
        }
        return -1;
    }
};

inline NumericTable to_numeric(const CsvTable& table,
                               const std::string& origin = "csv") {
    NumericTable numeric;
    numeric.columns = table.columns;
    numeric.values.resize(static_cast<Index>(table.rows.size()),
                          static_cast<Index>(table.columns.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const std::string& cell = table.rows[r][c];
            const char* begin = cell.c_str();
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (cell.empty() || end != begin + cell.size() || !std::isfinite(v)) {
                throw ParseError(origin + ":" + std::to_string(r + 2) +
                                 ": non-numeric value '" + cell + "' in column '" +
                                 table.columns[c] + "'");
            }
            numeric.values(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
    }
    return numeric;
}

inline NumericTable read_numeric_csv(const std::string& path) {
    return to_numeric(read_csv_table(path), path);
}

struct GroupConfigEntry {
    std::string name;
    std::vector<std::string> columns;
    std::optional<Index> k;
};

/// Grouping of named columns plus the response column, read from JSON:
/// { "response": "y", "groups": [ { "name": "...", "columns": [...],
/// "k": 2 } ] } with "k" optional.
struct GroupConfig {
    std::string response;
    std::vector<GroupConfigEntry> groups;
};

inline GroupConfig read_group_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    GroupConfig config;
    try {
        config.response = j.at("response").get<std::string>();
        for (const auto& g : j.at("groups")) {
            GroupConfigEntry entry;
            entry.name = g.at("name").get<std::string>();
            for (const auto& c : g.at("columns")) {
                entry.columns.push_back(c.get<std::string>());
            }
            if (g.contains("k")) {
                entry.k = g.at("k").get<Index>();
            }
            config.groups.push_back(std::move(entry));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": bad group config: " + e.what());
    }
    if (config.groups.empty()) {
        throw ParseError(path + ": group config lists no groups");
    }
    for (const auto& g : config.groups) {
        if (g.columns.empty()) {
            throw ParseError(path + ": group '" + g.name + "' lists no columns");
        }
    }
    return config;
}

struct StandardizeOptions {
    bool standardize_features = true;
    bool center_response = true;
};

/// Design assembled from a numeric table and a group config, with the
/// standardization parameters kept for back-transforming coefficients.
struct Dataset {
    GroupedDesign design;
    GroupConfig config;
    std::vector<std::string> feature_names;
    std::vector<double> feature_means;
    std::vector<double> feature_scales;
    double response_mean = 0.0;
    StandardizeOptions standardization;
};

inline Dataset make_dataset(const NumericTable& table, const GroupConfig& config,
                            const StandardizeOptions& opts = {}) {
    const Index n = table.values.rows();
    if (n < 1) {
        throw ParseError("dataset has no data rows");
    }
    const Index response_col = table.column_index(config.response);
    if (response_col < 0) {
        throw ParseError("response column '" + config.response + "' not found");
    }

    std::unordered_map<std::string, int> used;
    std::vector<Matrix> groups;
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> scales;
    for (const auto& entry : config.groups) {
        Matrix phi(n, static_cast<Index>(entry.columns.size()));
        for (std::size_t c = 0; c < entry.columns.size(); ++c) {
            const std::string& col = entry.columns[c];
            if (col == config.response) {
                throw ParseError("response column '" + col + "' used in group '" +
                                 entry.name + "'");
            }
            if (!used.emplace(col, 1).second) {
                throw ParseError("column '" + col + "' appears in more than one group");
            }
            const Index idx = table.column_index(col);
            if (idx < 0) {
                throw ParseError("column '" + col + "' (group '" + entry.name +
                                 "') not found in data");
            }
            Vector v = table.values.col(idx);
            double mean = 0.0;
            double scale = 1.0;
            if (opts.standardize_features) {
                mean = v.mean();
                v.array() -= mean;
                scale = std::sqrt(v.squaredNorm() / static_cast<double>(n));
                if (scale == 0.0) {
                    throw ParseError("column '" + col +
                                     "' is constant and cannot be standardized");
                }
                v /= scale;
            }
            phi.col(static_cast<Index>(c)) = v;
            names.push_back(col);
            means.push_back(mean);
            scales.push_back(scale);
        }
        groups.push_back(std::move(phi));
    }

    Vector y = table.values.col(response_col);
    double y_mean = 0.0;
    if (opts.center_response) {
        y_mean = y.mean();
        y.array() -= y_mean;
    }

    return Dataset{GroupedDesign(std::move(groups), std::move(y)),
                   config,
                   std::move(names),
                   std::move(means),
                   std::move(scales),
                   y_mean,
                   opts};
}

inline Dataset load_dataset(const std::string& data_path,
                            const std::string& config_path,
                            const StandardizeOptions& opts = {}) {
    return make_dataset(read_numeric_csv(data_path), read_group_config(config_path),
                        opts);
}

}  // namespace grpkmax
