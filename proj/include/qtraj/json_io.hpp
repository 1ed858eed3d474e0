#pragma once

#include <string>

#include <json.hpp>

#include "qtraj/assumptions.hpp"
#include "qtraj/kraus.hpp"
#include "qtraj/measures.hpp"

namespace qtraj {

// Wire format for a family:
//   { "dim": d, "operators": [ matrix, ... ], "tolerance": t }
// where a matrix is a row-major array of rows and each entry is [re, im].
// Doubles round-trip exactly (shortest correctly-rounded representation).

nlohmann::json family_to_json(const KrausFamily& family);
KrausFamily family_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json vector_to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

// Measures as atom lists: [ { "state": vector, "weight": w }, ... ].
nlohmann::json measure_to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const nlohmann::json& j);

nlohmann::json assumption_report_to_json(const AssumptionReport& report);

}  // namespace qtraj
