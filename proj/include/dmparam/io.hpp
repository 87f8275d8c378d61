#pragma once

// Parameter files and matrix serialization.
//
// Parameter file (JSON):
//   {"schema_version": "1", "kind": "single" | "block" | "family", "payload": {...}}
// Complex numbers are [re, im] pairs (a bare number is read as real);
// matrices are row-major nested arrays.
//
// matrix_text: one row per line, whitespace-separated "re+imj" tokens printed
// with 17 significant digits.

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dmparam/block_param.hpp"
#include "dmparam/families.hpp"
#include "dmparam/single_param.hpp"
#include "dmparam/state.hpp"

namespace dmparam::io {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

/// Malformed input; the message names the offending field.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_complex(cplx z) {
  char buf[80];
  std::snprintf(buf, sizeof buf, "%.17g%+.17gj", z.real(), z.imag());
  return buf;
}

// ---------------------------------------------------------------------------
// JSON <-> values

inline double get_real(const json& j, const std::string& field) {
  if (!j.is_number()) throw InputError(field + ": expected a number");
  return j.get<double>();
}

inline cplx get_complex(const json& j, const std::string& field) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InputError(field + ": expected a number or an [re, im] pair");
}

inline const json& require(const json& obj, const std::string& key,
                           const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw InputError(path + "." + key + ": missing");
  return obj.at(key);
}

inline ComplexMatrix get_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty())
    throw InputError(field + ": expected a non-empty nested array");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw InputError(field + "[" + std::to_string(r) + "]: ragged row");
    for (Eigen::Index c = 0; c < cols; ++c)
      m(r, c) = get_complex(row[static_cast<std::size_t>(c)],
                            field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  }
  if (!m.allFinite()) throw InputError(field + ": non-finite entry");
  return m;
}

inline ComplexVector get_cvector(const json& j, const std::string& field) {
  if (!j.is_array()) throw InputError(field + ": expected an array");
  ComplexVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k)
    v[static_cast<Eigen::Index>(k)] = get_complex(j[k], field + "[" + std::to_string(k) + "]");
  return v;
}

inline std::vector<double> get_reals(const json& j, const std::string& field) {
  if (!j.is_array()) throw InputError(field + ": expected an array");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k)
    out.push_back(get_real(j[k], field + "[" + std::to_string(k) + "]"));
  return out;
}

inline Eigen::Index get_count(const json& j, const std::string& field) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw InputError(field + ": expected a positive integer");
  return static_cast<Eigen::Index>(j.get<long long>());
}

inline void check_simplex(const std::vector<double>& w, const std::string& field) {
  try {
    require_simplex(w);
  } catch (const Error& e) {
    throw InputError(field + ": " + e.what());
  }
}

inline std::array<double, 4> get_prob4(const json& j, const std::string& field) {
  const auto w = get_reals(j, field);
  if (w.size() != 4) throw InputError(field + ": expected 4 probabilities");
  check_simplex(w, field);
  return {w[0], w[1], w[2], w[3]};
}

inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline json to_json(const ComplexMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Parameter files

struct ParamFile {
  std::string schema_version;
  std::string kind;
  json payload;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

inline ParamFile parse_param_file(const json& doc) {
  ParamFile f;
  const json& ver = require(doc, "schema_version", "$");
  if (!ver.is_string() || ver.get<std::string>() != kSchemaVersion)
    throw InputError("$.schema_version: unsupported (expected \"" +
                     std::string(kSchemaVersion) + "\")");
  f.schema_version = ver.get<std::string>();
  const json& kind = require(doc, "kind", "$");
  if (!kind.is_string()) throw InputError("$.kind: expected a string");
  f.kind = kind.get<std::string>();
  if (f.kind != "single" && f.kind != "block" && f.kind != "family")
    throw InputError("$.kind: unknown kind '" + f.kind + "'");
  f.payload = require(doc, "payload", "$");
  if (!f.payload.is_object()) throw InputError("$.payload: expected an object");
  return f;
}

inline SingleParams parse_single(const json& pl) {
  SingleParams p;
  p.lambdas = get_reals(require(pl, "lambdas", "$.payload"), "$.payload.lambdas");
  p.n = static_cast<Eigen::Index>(p.lambdas.size());
  if (p.n < 1) throw InputError("$.payload.lambdas: empty");
  check_simplex(p.lambdas, "$.payload.lambdas");
  if (!std::is_sorted(p.lambdas.rbegin(), p.lambdas.rend()))
    throw InputError("$.payload.lambdas: must be in descending order");
  const json& zs = pl.contains("zvecs") ? pl.at("zvecs") : json::array();
  if (!zs.is_array() || static_cast<Eigen::Index>(zs.size()) != p.n - 1)
    throw InputError("$.payload.zvecs: expected " + std::to_string(p.n - 1) + " vectors");
  for (std::size_t k = 0; k < zs.size(); ++k) {
    const std::string field = "$.payload.zvecs[" + std::to_string(k) + "]";
    p.zvecs.push_back(get_cvector(zs[k], field));
    if (p.zvecs.back().size() != static_cast<Eigen::Index>(k) + 1)
      throw InputError(field + ": expected length " + std::to_string(k + 1));
  }
  return p;
}

inline BlockParams parse_block(const json& pl) {
  BlockParams p;
  p.n = get_count(require(pl, "n", "$.payload"), "$.payload.n");
  p.m = get_count(require(pl, "m", "$.payload"), "$.payload.m");
  p.lambdas = get_reals(require(pl, "lambdas", "$.payload"), "$.payload.lambdas");
  if (static_cast<Eigen::Index>(p.lambdas.size()) != p.n * p.m)
    throw InputError("$.payload.lambdas: expected n*m = " + std::to_string(p.n * p.m) +
                     " values");
  check_simplex(p.lambdas, "$.payload.lambdas");

  if (pl.contains("local_unitaries")) {
    const json& us = pl.at("local_unitaries");
    if (!us.is_array() || static_cast<Eigen::Index>(us.size()) != p.n)
      throw InputError("$.payload.local_unitaries: expected n matrices");
    for (std::size_t k = 0; k < us.size(); ++k) {
      const std::string field = "$.payload.local_unitaries[" + std::to_string(k) + "]";
      p.local_unitaries.push_back(get_matrix(us[k], field));
      if (p.local_unitaries.back().rows() != p.m || p.local_unitaries.back().cols() != p.m)
        throw InputError(field + ": expected m x m");
    }
  } else {
    p.local_unitaries = identity_unitaries(p.n, p.m);
  }

  if (pl.contains("blockvecs")) {
    const json& zs = pl.at("blockvecs");
    if (!zs.is_array() || static_cast<Eigen::Index>(zs.size()) != p.n - 1)
      throw InputError("$.payload.blockvecs: expected n-1 block vectors");
    for (std::size_t k = 0; k < zs.size(); ++k) {
      const std::string field = "$.payload.blockvecs[" + std::to_string(k) + "]";
      if (!zs[k].is_array() || zs[k].size() != k + 1)
        throw InputError(field + ": expected " + std::to_string(k + 1) + " blocks");
      BlockVector z;
      for (std::size_t b = 0; b < zs[k].size(); ++b) {
        const std::string bf = field + "[" + std::to_string(b) + "]";
        z.push_back(get_matrix(zs[k][b], bf));
        if (z.back().rows() != p.m || z.back().cols() != p.m)
          throw InputError(bf + ": expected m x m");
      }
      p.blockvecs.push_back(std::move(z));
    }
  } else {
    p.blockvecs = zero_blockvecs(p.n, p.m);
  }
  return p;
}

inline FamilySpec parse_family(const json& pl) {
  const std::string base = "$.payload";
  const json& fam = require(pl, "family", base);
  if (!fam.is_string()) throw InputError(base + ".family: expected a string");
  const std::string name = fam.get<std::string>();
  const auto real = [&](const char* key) {
    return get_real(require(pl, key, base), base + "." + key);
  };
  const auto mat = [&](const char* key) {
    return get_matrix(require(pl, key, base), base + "." + key);
  };
  if (name == "pure_P") return PurePSpec{real("alpha")};
  if (name == "isotropic") return IsotropicSpec{real("p")};
  if (name == "isotropic_alpha") return IsotropicAlphaSpec{real("p"), real("alpha")};
  if (name == "circulant")
    return CirculantSpec{get_prob4(require(pl, "p", base), base + ".p"), real("alpha"),
                         real("beta")};
  if (name == "bell_diagonal")
    return BellDiagonalSpec{get_prob4(require(pl, "p", base), base + ".p")};
  if (name == "two_by_m") return TwoByMSpec{mat("U"), mat("L1"), mat("L2"), mat("Xi2")};
  if (name == "toeplitz") return ToeplitzSpec{mat("L"), mat("U"), mat("Xi2")};
  if (name == "hankel") return HankelSpec{mat("U"), mat("L1"), mat("L2"), mat("Xi2")};
  if (name == "nonabelian_bloch") return NonabelianBlochSpec{mat("U"), mat("Xi2")};
  if (name == "class3") {
    Class3Spec s;
    s.n = get_count(require(pl, "n", base), base + ".n");
    s.m = get_count(require(pl, "m", base), base + ".m");
    const json& zs = require(pl, "Zn", base);
    if (!zs.is_array() || static_cast<Eigen::Index>(zs.size()) != s.n - 1)
      throw InputError(base + ".Zn: expected n-1 blocks");
    for (std::size_t k = 0; k < zs.size(); ++k)
      s.zn.push_back(get_matrix(zs[k], base + ".Zn[" + std::to_string(k) + "]"));
    return s;
  }
  throw InputError(base + ".family: unknown family '" + name + "'");
}

using Params = std::variant<SingleParams, BlockParams, FamilySpec>;

inline Params parse_params(const ParamFile& f) {
  if (f.kind == "single") return parse_single(f.payload);
  if (f.kind == "block") return parse_block(f.payload);
  return parse_family(f.payload);
}

// ---------------------------------------------------------------------------
// Matrices

inline void write_matrix_text(std::ostream& out, const ComplexMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_complex(m(r, c));
    }
    out << '\n';
  }
}

inline json state_to_json(const DensityMatrix& rho) {
  return json{{"schema_version", kSchemaVersion},
              {"n", rho.n},
              {"m", rho.m},
              {"matrix", to_json(rho.mat)}};
}

namespace detail {

inline double parse_real(const std::string& s, const std::string& tok) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw InputError("malformed number '" + tok + "'");
  return v;
}

}  // namespace detail

/// Parses one "re+imj" token (also accepts plain reals and "imj").
inline cplx parse_complex_token(const std::string& tok) {
  std::string t = tok;
  if (!t.empty() && (t.back() == 'j' || t.back() == 'i')) {
    t.pop_back();
    // Split at the last sign that is not part of an exponent.
    for (std::size_t k = t.size(); k-- > 1;) {
      if ((t[k] == '+' || t[k] == '-') && t[k - 1] != 'e' && t[k - 1] != 'E') {
        return {detail::parse_real(t.substr(0, k), tok), detail::parse_real(t.substr(k), tok)};
      }
    }
    return {0.0, detail::parse_real(t, tok)};
  }
  return {detail::parse_real(t, tok), 0.0};
}

inline ComplexMatrix parse_matrix_text(const std::string& text, const std::string& where) {
  std::vector<std::vector<cplx>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<cplx> row;
    std::string tok;
    while (ls >> tok) {
      try {
        row.push_back(parse_complex_token(tok));
      } catch (const std::exception&) {
        throw InputError(where + ": bad matrix entry '" + tok + "' on row " +
                         std::to_string(rows.size()));
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(where + ": empty matrix");
  ComplexMatrix m(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw InputError(where + ": ragged row " + std::to_string(r));
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  if (!m.allFinite()) throw InputError(where + ": non-finite entry");
  return m;
}

/// Reads either a JSON state file (written by generate) or matrix_text.
inline ComplexMatrix read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InputError(path + ": " + e.what());
    }
    return get_matrix(require(doc, "matrix", "$"), "$.matrix");
  }
  return parse_matrix_text(text, path);
}

}  // namespace dmparam::io
