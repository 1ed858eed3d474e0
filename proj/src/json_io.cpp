#include "qtraj/json_io.hpp"

namespace qtraj {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw StructuralError("matrix json: expected array of rows");
  auto rows = j.size();
  auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw StructuralError("matrix json: ragged rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const json& e = j[r][c];
      if (!e.is_array() || e.size() != 2) {
        throw StructuralError("matrix json: entry must be [re, im]");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          Cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(json::array({v(i).real(), v(i).imag()}));
  }
  return out;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw StructuralError("vector json: expected array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    if (!e.is_array() || e.size() != 2) throw StructuralError("vector json: entry must be [re, im]");
    v(static_cast<Eigen::Index>(i)) = Cplx(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

json family_to_json(const KrausFamily& family) {
  json j;
  j["dim"] = family.dim;
  j["tolerance"] = family.tolerance;
  json ops = json::array();
  for (const Matrix& a : family.operators) ops.push_back(matrix_to_json(a));
  j["operators"] = std::move(ops);
  return j;
}

KrausFamily family_from_json(const json& j) {
  KrausFamily family;
  if (!j.contains("dim") || !j.contains("operators")) {
    throw StructuralError("family json: needs \"dim\" and \"operators\"");
  }
  family.dim = j.at("dim").get<int>();
  family.tolerance = j.value("tolerance", 1e-9);
  for (const json& op : j.at("operators")) {
    family.operators.push_back(matrix_from_json(op));
  }
  require_well_formed(family);
  return family;
}

json measure_to_json(const DiscreteMeasure& m) {
  json atoms = json::array();
  for (const auto& atom : m.atoms()) {
    atoms.push_back({{"state", vector_to_json(atom.state.representative())},
                     {"weight", atom.weight}});
  }
  return atoms;
}

DiscreteMeasure measure_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw StructuralError("measure json: expected atom array");
  DiscreteMeasure m;
  for (const json& atom : j) {
    m.add(ProjectiveState(vector_from_json(atom.at("state"))), atom.at("weight").get<double>());
  }
  return m;
}

json assumption_report_to_json(const AssumptionReport& report) {
  json j;
  j["pur"] = to_string(report.pur);
  if (report.pur_witness_word) j["pur_witness_word"] = report.pur_witness_word->letters;
  if (report.pur_witness_projector) {
    j["pur_witness_projector"] = matrix_to_json(*report.pur_witness_projector);
  }
  j["erg"] = report.erg;
  j["minimal_subspace_dim"] = report.minimal_subspace_dim;
  j["period"] = report.period;
  if (report.rho_inv) j["rho_inv"] = matrix_to_json(report.rho_inv->matrix());
  j["all_hold"] = report.all_hold();
  return j;
}

}  // namespace qtraj
