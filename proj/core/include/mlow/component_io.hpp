#pragma once

#include <filesystem>
#include <iosfwd>

#include <nlohmann/json.hpp>

#include "mlow/factorization.hpp"

namespace mlow {

/// {method, rank, levels, lambda, iterations, seed, rows: [[...], ...]}
nlohmann::json component_matrix_to_json(const ComponentMatrix& components);
/// Throws ParseError on missing fields or shape mismatches.
ComponentMatrix component_matrix_from_json(const nlohmann::json& doc);

/// One row per component: component,l1,...,lK
void write_components_csv(std::ostream& out, const Eigen::MatrixXd& components);

}  // namespace mlow
