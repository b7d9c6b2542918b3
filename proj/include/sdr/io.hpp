#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sdr/binary_pfc.hpp"
#include "sdr/linear_pfc.hpp"
#include "sdr/screening.hpp"
#include "sdr/spc_bridge.hpp"

namespace sdr::io {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') quoted = !quoted;
        if (ch == ',' && !quoted) {
            fields.push_back(trim(field));
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    fields.push_back(trim(field));
    return fields;
}

inline double parse_number(const std::string& text, std::size_t row, const std::string& column) {
    std::size_t used = 0;
    double value = std::numeric_limits<double>::quiet_NaN();
    try {
        value = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == text.size() && !text.empty() && std::isfinite(value), ErrorCode::validation,
            "row " + std::to_string(row) + ", column '" + column + "': not a finite number: '" + text + "'");
    return value;
}

}  // namespace detail

/// Reads a header-first CSV. `response` names the response column; every
/// other column is a predictor, in file order.
inline Dataset read_csv_dataset(std::istream& in, const std::string& response) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::validation, "CSV is empty (no header row)");
    const std::vector<std::string> header = detail::split_row(line);
    std::size_t response_col = header.size();
    for (std::size_t c = 0; c < header.size(); ++c)
        if (header[c] == response) response_col = c;
    require(response_col < header.size(), ErrorCode::validation, "response column '" + response + "' not in header");
    require(header.size() >= 2, ErrorCode::validation, "CSV needs a response and at least one predictor column");

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (detail::trim(line).empty()) continue;
        const std::vector<std::string> fields = detail::split_row(line);
        require(fields.size() == header.size(), ErrorCode::validation,
                "row " + std::to_string(row_no) + ": expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
        std::vector<double> values(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) values[c] = detail::parse_number(fields[c], row_no, header[c]);
        rows.push_back(std::move(values));
    }
    const auto n = static_cast<Index>(rows.size());
    const auto p = static_cast<Index>(header.size() - 1);
    Matrix x(n, p);
    Vector y(n);
    std::vector<std::string> names;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (c != response_col) names.push_back(header[c]);
    for (Index i = 0; i < n; ++i) {
        Index j = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (c == response_col) y(i) = rows[static_cast<std::size_t>(i)][c];
            else x(i, j++) = rows[static_cast<std::size_t>(i)][c];
        }
    }
    return Dataset::create(std::move(x), std::move(y), std::move(names), {}, response);
}

inline Dataset read_csv_dataset(const std::string& path, const std::string& response) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open '" + path + "'");
    return read_csv_dataset(in, response);
}

/// Shortest decimal text that round-trips the value.
inline std::string format_number(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    std::string longest = os.str();
    for (int prec = 1; prec < 17; ++prec) {
        std::ostringstream trial;
        trial << std::setprecision(prec) << v;
        if (std::stod(trial.str()) == v) return trial.str();
    }
    return longest;
}

inline void write_summary_csv(std::ostream& out, const SummaryTable& table, const std::string& response) {
    for (Index k = 0; k < table.coordinates.cols(); ++k) out << "dir" << (k + 1) << ',';
    out << response << '\n';
    for (Index i = 0; i < table.coordinates.rows(); ++i) {
        for (Index k = 0; k < table.coordinates.cols(); ++k) out << format_number(table.coordinates(i, k)) << ',';
        out << format_number(table.y(i)) << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline json to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

/// Matrices are arrays of rows.
inline json to_json(const Matrix& m) {
    json arr = json::array();
    for (Index i = 0; i < m.rows(); ++i) arr.push_back(to_json(Vector(m.row(i).transpose())));
    return arr;
}

inline Vector vector_from_json(const json& j, const std::string& field) {
    require(j.is_array(), ErrorCode::validation, "field '" + field + "' must be an array of numbers");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        require(j[i].is_number(), ErrorCode::validation, "field '" + field + "[" + std::to_string(i) + "]' is not a number");
        v(static_cast<Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Matrix matrix_from_json(const json& j, const std::string& field) {
    require(j.is_array() && !j.empty(), ErrorCode::validation, "field '" + field + "' must be a nonempty array of rows");
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    require(cols > 0, ErrorCode::validation, "field '" + field + "' rows must be nonempty arrays");
    Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string row_field = field + "[" + std::to_string(i) + "]";
        require(j[i].is_array() && j[i].size() == cols, ErrorCode::validation, "field '" + row_field + "' has the wrong length");
        m.row(static_cast<Index>(i)) = vector_from_json(j[i], row_field).transpose();
    }
    return m;
}

inline json basis_to_json(const ReductionBasis& basis) {
    return json{{"p", basis.p()}, {"d", basis.d()}, {"basis", to_json(basis.matrix())}};
}

/// Accepts either an object with a "basis" array of rows or the bare array.
inline ReductionBasis basis_from_json(const json& j) {
    if (j.is_object()) {
        require(j.contains("basis"), ErrorCode::validation, "basis JSON lacks field 'basis'");
        return ReductionBasis(matrix_from_json(j.at("basis"), "basis"));
    }
    return ReductionBasis(matrix_from_json(j, "basis"));
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::io, "cannot open '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::validation, "malformed JSON in '" + path + "': " + e.what());
    }
}

inline json screening_to_json(const ScreeningResult& res, const std::vector<std::string>& names) {
    json records = json::array();
    for (const auto& r : res.per_predictor) {
        json rec{{"index", r.index},
                 {"name", names[static_cast<std::size_t>(r.index)]},
                 {"statistic", std::isfinite(r.statistic) ? json(r.statistic) : json("inf")},
                 {"p_value", r.p_value},
                 {"coefficient", r.coefficient},
                 {"standardized", std::isfinite(r.standardized) ? json(r.standardized) : json("inf")},
                 {"slopes", to_json(r.slopes)},
                 {"kept", passes(r, res.config)}};
        if (!r.warning.empty()) rec["warning"] = r.warning;
        records.push_back(std::move(rec));
    }
    json kept_names = json::array();
    for (Index k : res.kept) kept_names.push_back(names[static_cast<std::size_t>(k)]);
    return json{{"mode", res.config.mode == ScreenMode::forward ? "forward" : "inverse"},
                {"criterion", res.config.criterion == ScreenCriterion::p_value ? "p-value" : "abs-coefficient"},
                {"threshold", res.config.threshold},
                {"kept", res.kept},
                {"kept_names", kept_names},
                {"per_predictor", records}};
}

inline json state_to_json(const BinaryPfcState& s) {
    json warnings = json::array();
    for (const auto& w : s.substep_warnings)
        warnings.push_back(json{{"step", w.step}, {"index", w.index}, {"reason", w.reason},
                                {"first_cycle", w.first_cycle}, {"count", w.count}});
    return json{{"mu", to_json(s.mu)},
                {"Gamma", to_json(s.gamma.matrix())},
                {"basis", to_json(s.gamma.matrix())},
                {"nu", to_json(s.nu)},
                {"loglik", s.loglik},
                {"loglik_trace", s.loglik_trace},
                {"outer_iterations", s.outer_iterations},
                {"converged", s.converged},
                {"warning_cycles", s.warning_cycles},
                {"ascent_violations", s.ascent_violations},
                {"warnings", warnings}};
}

/// Model file: beta0, beta1, alpha0[], alpha1[], var_eps, var_epsx[] (the
/// diagonal of the predictor-error covariance).
inline LatentSpcModel model_from_json(const json& j) {
    require(j.is_object(), ErrorCode::validation, "model JSON must be an object");
    for (const char* key : {"beta1", "alpha0", "alpha1", "var_epsx"})
        require(j.contains(key), ErrorCode::validation, std::string("model JSON lacks field '") + key + "'");
    auto number = [&](const char* key, double fallback) {
        if (!j.contains(key)) return fallback;
        require(j.at(key).is_number(), ErrorCode::validation, std::string("field '") + key + "' is not a number");
        return j.at(key).get<double>();
    };
    LatentSpcModel m;
    m.beta0 = number("beta0", 0.0);
    m.beta1 = number("beta1", 1.0);
    m.var_eps = number("var_eps", 0.0);
    m.alpha0 = vector_from_json(j.at("alpha0"), "alpha0");
    m.alpha1 = vector_from_json(j.at("alpha1"), "alpha1");
    m.var_epsx = vector_from_json(j.at("var_epsx"), "var_epsx");
    m.validate();
    return m;
}

inline json form_to_json(const PfcForm& f) {
    return json{{"mu", to_json(f.mu)},     {"Gamma", to_json(f.gamma)},
                {"c", f.c},                {"ybar", f.ybar},
                {"var_eps_star", to_json(f.var_eps_star)},
                {"Gamma0", to_json(f.gamma0)}, {"Omega0", to_json(f.omega0)},
                {"Omega", f.omega}};
}

}  // namespace sdr::io
