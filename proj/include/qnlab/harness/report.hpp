#pragma once

// Report serialization: shortest round-trip CSV, summary JSON, atomic
// file writes, and a validator for the JSON Schema subset used by the
// summary schema.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qnlab/errors.hpp"

namespace qnlab::harness {

using json = nlohmann::json;

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw IoError("float formatting failed");
    return std::string(buf, p);
}

/// Column names of the sweep table, in file order.
inline const std::vector<std::string>& sweep_columns() {
    static const std::vector<std::string> cols{
        "eps",         "hbar",           "time",
        "kinetic_modulated", "field_energy", "relative_entropy",
        "total_modulated",   "conserved_total", "h_minus1_density_error",
        "l1_entropy_error",  "current_weak_error"};
    return cols;
}

struct SweepRow {
    double eps = 0, hbar = 0, time = 0;
    double kinetic_modulated = 0, field_energy = 0, relative_entropy = 0;
    double total_modulated = 0, conserved_total = 0;
    double h_minus1_density_error = 0, l1_entropy_error = 0, current_weak_error = 0;

    std::vector<double> values() const {
        return {eps, hbar, time, kinetic_modulated, field_energy, relative_entropy, total_modulated,
                conserved_total, h_minus1_density_error, l1_entropy_error, current_weak_error};
    }
};

/// Comma-separated table with a header line; every line ends in '\n'.
inline std::string csv_text(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw IoError("CSV row width does not match header");
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) out += ',';
            out += format_double(r[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::vector<std::vector<double>> v;
    v.reserve(rows.size());
    for (const auto& r : rows) v.push_back(r.values());
    return csv_text(sweep_columns(), v);
}

/// Parses a numeric CSV produced by csv_text.
inline std::vector<std::vector<double>> read_csv_numbers(const std::string& text, std::vector<std::string>* header) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    bool first = true;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            if (header) *header = cells;
            first = false;
            continue;
        }
        std::vector<double> r;
        for (const auto& c : cells) {
            double v = 0.0;
            auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc() || p != c.data() + c.size()) throw IoError("bad CSV number '" + c + "'");
            r.push_back(v);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Writes `content` to `path` via a sibling temporary file and rename, so a
/// reader never sees a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// JSON number, or null when not finite.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

namespace detail {

inline bool type_matches(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
    if (t == "number") return v.is_number();
    return false;
}

inline void validate_node(const json& v, const json& schema, const std::string& where, std::vector<std::string>& errors) {
    if (schema.contains("type")) {
        const json& t = schema["type"];
        bool ok = false;
        if (t.is_string()) {
            ok = type_matches(v, t.get<std::string>());
        } else {
            for (const auto& x : t) ok = ok || type_matches(v, x.get<std::string>());
        }
        if (!ok) {
            errors.push_back(where + ": type mismatch, expected " + t.dump());
            return;
        }
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& x : schema["enum"]) found = found || x == v;
        if (!found) errors.push_back(where + ": value not in enum");
    }
    if (schema.contains("const") && schema["const"] != v) errors.push_back(where + ": value differs from const");
    if (v.is_number() && schema.contains("minimum") && v.get<double>() < schema["minimum"].get<double>()) {
        errors.push_back(where + ": below minimum");
    }
    if (v.is_string() && schema.contains("minLength") && v.get<std::string>().size() < schema["minLength"].get<std::size_t>()) {
        errors.push_back(where + ": string too short");
    }
    if (v.is_object()) {
        if (schema.contains("required")) {
            for (const auto& k : schema["required"]) {
                if (!v.contains(k.get<std::string>())) errors.push_back(where + ": missing property " + k.get<std::string>());
            }
        }
        const json props = schema.value("properties", json::object());
        for (const auto& [k, sub] : v.items()) {
            if (props.contains(k)) {
                validate_node(sub, props[k], where + "." + k, errors);
            } else if (schema.contains("additionalProperties")) {
                const json& ap = schema["additionalProperties"];
                if (ap.is_boolean()) {
                    if (!ap.get<bool>()) errors.push_back(where + ": unexpected property " + k);
                } else {
                    validate_node(sub, ap, where + "." + k, errors);
                }
            }
        }
    }
    if (v.is_array()) {
        if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>()) {
            errors.push_back(where + ": too few items");
        }
        if (schema.contains("items")) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                validate_node(v[i], schema["items"], where + "[" + std::to_string(i) + "]", errors);
            }
        }
    }
}

}  // namespace detail

/// Validates `doc` against the supported subset of JSON Schema (type,
/// enum, const, minimum, minLength, required, properties,
/// additionalProperties, items, minItems). Returns the list of violations.
inline std::vector<std::string> validate_schema(const json& doc, const json& schema) {
    std::vector<std::string> errors;
    detail::validate_node(doc, schema, "$", errors);
    return errors;
}

}  // namespace qnlab::harness
