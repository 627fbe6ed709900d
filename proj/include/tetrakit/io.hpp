#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "gen.hpp"
#include "models.hpp"

namespace tetrakit::io {

using json = nlohmann::json;

inline constexpr const char* kIoSchema = "tetrakit/io/v1";
inline constexpr const char* kModelSchema = "tetrakit/model/v1";

inline json to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const Matrix& M) {
    json data = json::array();
    for (Eigen::Index i = 0; i < M.rows(); ++i)
        for (Eigen::Index j = 0; j < M.cols(); ++j) data.push_back(to_json(M(i, j)));
    return {{"rows", M.rows()}, {"cols", M.cols()}, {"data", data}};
}

inline json to_json(const Point3& p) { return json::array({to_json(p.a), to_json(p.b), to_json(p.t)}); }

inline json to_json(const OperatorTriple& x) {
    return {{"A", to_json(x.A)}, {"B", to_json(x.B)}, {"T", to_json(x.T)}};
}

inline json to_json(const ResidualMap& r) {
    json o = json::object();
    for (const auto& [k, v] : r) o[k] = v;
    return o;
}

inline json to_json(const ResidualTriple& r) {
    return {{"R", to_json(r.R)}, {"S", to_json(r.S)}, {"W", to_json(r.W)}, {"strict", r.strict},
            {"residuals", to_json(r.residuals)}};
}

inline json samples_to_json(const std::vector<ThetaSample>& s) {
    json a = json::array();
    for (const auto& x : s) a.push_back({{"z", to_json(x.z)}, {"value", to_json(x.value)}});
    return a;
}

inline json to_json(const TetrablockDataSet& d) {
    return {{"dim_in", d.dim_in},
            {"dim_out", d.dim_out},
            {"theta_samples", samples_to_json(d.theta_samples)},
            {"G1", to_json(d.G1)},
            {"G2", to_json(d.G2)},
            {"residual", to_json(d.residual)},
            {"psi_samples", samples_to_json(d.psi_samples)},
            {"pure_flag", d.pure_flag}};
}

inline json to_json(const DouglasModel& m) {
    return {{"order_N", m.order_N},
            {"defect_dim", m.defect_dim},
            {"residual_dim", m.residual.dim()},
            {"G1", to_json(m.G1)},
            {"G2", to_json(m.G2)},
            {"embedding", to_json(m.embedding)},
            {"V1", to_json(m.V1)},
            {"V2", to_json(m.V2)},
            {"V3", to_json(m.V3)},
            {"residual", to_json(m.residual)},
            {"tail", m.tail},
            {"deficiency", m.deficiency},
            {"warning", m.warning}};
}

// ---------------------------------------------------------------------------
// Reading. Every failure is an InputError with a path to the offending field.

inline double read_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw InputError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw InputError(where + ": non-finite value");
    return v;
}

inline Complex read_complex(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw InputError(where + ": complex numbers are [re, im]");
    return {read_number(j[0], where + "[0]"), read_number(j[1], where + "[1]")};
}

inline Eigen::Index read_index(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw InputError(where + ": expected a nonnegative integer");
    return static_cast<Eigen::Index>(j.get<long long>());
}

inline Matrix read_matrix(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        throw InputError(where + ": matrices are {rows, cols, data}");
    const Eigen::Index r = read_index(j["rows"], where + ".rows");
    const Eigen::Index c = read_index(j["cols"], where + ".cols");
    const json& d = j["data"];
    if (!d.is_array() || static_cast<Eigen::Index>(d.size()) != r * c)
        throw InputError(where + ": data has " + std::to_string(d.is_array() ? d.size() : 0) +
                         " entries, expected rows*cols = " + std::to_string(r * c));
    Matrix M(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index k = 0; k < c; ++k)
            M(i, k) = read_complex(d[i * c + k], where + ".data[" + std::to_string(i * c + k) + "]");
    return M;
}

inline const json& field(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing field '" + key + "'");
    return j[key];
}

inline Point3 read_point(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw InputError(where + ": a point is [[re,im],[re,im],[re,im]]");
    return {read_complex(j[0], where + "[0]"), read_complex(j[1], where + "[1]"),
            read_complex(j[2], where + "[2]")};
}

inline OperatorTriple read_triple(const json& j, const std::string& where) {
    OperatorTriple x{read_matrix(field(j, "A", where), where + ".A"),
                     read_matrix(field(j, "B", where), where + ".B"),
                     read_matrix(field(j, "T", where), where + ".T")};
    if (x.T.rows() == 0) throw InputError(where + ": triple must be at least 1x1");
    try {
        x.validate();
    } catch (const Error& e) {
        throw InputError(where + ": " + e.what());
    }
    return x;
}

inline std::vector<ThetaSample> read_samples(const json& j, const std::string& where) {
    if (!j.is_array()) throw InputError(where + ": expected an array of samples");
    std::vector<ThetaSample> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string w = where + "[" + std::to_string(i) + "]";
        out.push_back({read_complex(field(j[i], "z", w), w + ".z"), read_matrix(field(j[i], "value", w), w + ".value")});
    }
    return out;
}

inline ResidualTriple read_residual(const json& j, const std::string& where, const Tolerances& tol) {
    ResidualTriple r;
    r.R = read_matrix(field(j, "R", where), where + ".R");
    r.S = read_matrix(field(j, "S", where), where + ".S");
    r.W = read_matrix(field(j, "W", where), where + ".W");
    const Eigen::Index q = r.W.rows();
    for (const Matrix* M : {&r.R, &r.S, &r.W})
        if (M->rows() != q || M->cols() != q) throw InputError(where + ": R, S, W must be square of equal size");
    r.carrier = SubspaceBasis::empty(0);
    check_residual_invariants(r, tol);
    return r;
}

inline TetrablockDataSet read_dataset(const json& j, const std::string& where, const Tolerances& tol = {}) {
    TetrablockDataSet d;
    d.dim_in = read_index(field(j, "dim_in", where), where + ".dim_in");
    d.dim_out = read_index(field(j, "dim_out", where), where + ".dim_out");
    d.theta_samples = read_samples(field(j, "theta_samples", where), where + ".theta_samples");
    for (const auto& s : d.theta_samples)
        if (s.value.rows() != d.dim_out || s.value.cols() != d.dim_in)
            throw InputError(where + ": theta sample has shape " + std::to_string(s.value.rows()) + "x" +
                             std::to_string(s.value.cols()) + ", expected dim_out x dim_in");
    d.G1 = read_matrix(field(j, "G1", where), where + ".G1");
    d.G2 = read_matrix(field(j, "G2", where), where + ".G2");
    for (const Matrix* G : {&d.G1, &d.G2})
        if (G->rows() != d.dim_out || G->cols() != d.dim_out)
            throw InputError(where + ": G1, G2 must be dim_out x dim_out");
    d.residual = j.contains("residual") ? read_residual(j["residual"], where + ".residual", tol)
                                        : ResidualTriple::empty();
    if (j.contains("psi_samples")) d.psi_samples = read_samples(j["psi_samples"], where + ".psi_samples");
    if (j.contains("pure_flag")) {
        if (!j["pure_flag"].is_boolean()) throw InputError(where + ".pure_flag: expected a boolean");
        d.pure_flag = j["pure_flag"].get<bool>();
    }
    return d;
}

/// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
        if (text[i] == '\n') { ++line; col = 1; } else { ++col; }
    }
    return {line, col};
}

inline json parse_text(const std::string& text, const std::string& name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        const std::size_t off = e.byte > 0 ? e.byte - 1 : 0;
        const auto [line, col] = line_column(text, off);
        throw InputError(name + ":" + std::to_string(line) + ":" + std::to_string(col) +
                         ": malformed JSON (" + e.what() + ")");
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses and checks the schema tag of an input document.
inline json load_document(const std::string& path) {
    json doc = parse_text(read_file(path), path);
    if (!doc.is_object()) throw InputError(path + ": top level must be an object");
    if (!doc.contains("schema") || !doc["schema"].is_string())
        throw InputError(path + ": missing 'schema' (expected \"" + kIoSchema + "\")");
    const std::string schema = doc["schema"].get<std::string>();
    if (schema == "tetrakit/io/v0" || schema == "v0")
        throw InputError(path + ": schema version v0 is no longer supported; upgrade the document to \"" +
                         std::string(kIoSchema) + "\" (matrices as {rows, cols, data} with [re, im] entries)");
    if (schema != kIoSchema && schema != kModelSchema)
        throw InputError(path + ": unknown schema '" + schema + "'");
    if (!doc.contains("kind") || !doc["kind"].is_string()) throw InputError(path + ": missing 'kind'");
    return doc;
}

inline json triple_document(const OperatorTriple& x) {
    json d = {{"schema", kIoSchema}, {"kind", "triple"}};
    d.update(to_json(x));
    return d;
}

inline json dataset_document(const TetrablockDataSet& ds) {
    return {{"schema", kIoSchema}, {"kind", "dataset"}, {"dataset", to_json(ds)}};
}

inline void write_file(const std::string& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << doc.dump(2) << "\n";
}

/// parse -> serialize -> parse; returns the parsed value (identity for valid input).
inline json roundtrip_io(const std::string& path) {
    const json doc = load_document(path);
    return parse_text(doc.dump(), path);
}

}  // namespace tetrakit::io
