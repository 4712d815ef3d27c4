#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "crsbm/error.hpp"
#include "crsbm/matrix.hpp"
#include "crsbm/model.hpp"

namespace crsbm {

using Json = nlohmann::json;

inline Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) fail(ErrorCode::data, "matrix must be an array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = rows ? j[0].size() : 0;
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) fail(ErrorCode::data, "ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline const char* to_string(PopularityMode mode) {
  switch (mode) {
    case PopularityMode::constant_one: return "constant-one";
    case PopularityMode::linear_init: return "linear-init";
    case PopularityMode::sigmoid: return "sigmoid";
  }
  return "constant-one";
}

inline PopularityMode popularity_mode_from_string(const std::string& s) {
  if (s == "constant-one") return PopularityMode::constant_one;
  if (s == "linear-init") return PopularityMode::linear_init;
  if (s == "sigmoid") return PopularityMode::sigmoid;
  fail(ErrorCode::data, "unknown popularity mode '" + s + "'");
}

inline const char* to_string(DistanceKind kind) {
  return kind == DistanceKind::squared_euclidean ? "sq-euclidean" : "euclidean";
}

inline DistanceKind distance_kind_from_string(const std::string& s) {
  if (s == "sq-euclidean") return DistanceKind::squared_euclidean;
  if (s == "euclidean") return DistanceKind::euclidean;
  fail(ErrorCode::data, "unknown distance '" + s + "'");
}

inline Json to_json(const PopularityFunction& pf) {
  return {{"mode", to_string(pf.mode)}, {"gamma_star", pf.gamma_star}, {"beta1", pf.beta1},
          {"beta2", pf.beta2},          {"alpha_min", pf.alpha_min},   {"alpha_max", pf.alpha_max}};
}

/// The per-node tables (alpha, f) are derived from zeta and the attributes and are
/// not stored.
inline Json to_json(const CrsbmParams& p) {
  return {{"omega", to_json(p.omega)},
          {"nu", p.nu},
          {"zeta", to_json(p.zeta)},
          {"popularity", to_json(p.popularity)},
          {"degree_correction", p.degree_correction},
          {"distance", to_string(p.distance_kind)}};
}

/// Inverse of to_json; call refresh_alpha afterwards to rebuild alpha and f.
inline CrsbmParams params_from_json(const Json& j) {
  try {
    CrsbmParams p;
    p.omega = matrix_from_json(j.at("omega"));
    p.nu = j.at("nu").get<std::vector<double>>();
    p.zeta = matrix_from_json(j.at("zeta"));
    const Json& pf = j.at("popularity");
    p.popularity.mode = popularity_mode_from_string(pf.at("mode").get<std::string>());
    p.popularity.gamma_star = pf.at("gamma_star").get<double>();
    p.popularity.beta1 = pf.at("beta1").get<double>();
    p.popularity.beta2 = pf.at("beta2").get<double>();
    p.popularity.alpha_min = pf.at("alpha_min").get<double>();
    p.popularity.alpha_max = pf.at("alpha_max").get<double>();
    p.degree_correction = j.at("degree_correction").get<bool>();
    p.distance_kind = distance_kind_from_string(j.at("distance").get<std::string>());
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::data, std::string("malformed parameter document: ") + e.what());
  }
}

}  // namespace crsbm
