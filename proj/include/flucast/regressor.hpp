#pragma once

#include "flucast/mlp.hpp"
#include "flucast/msvr.hpp"
#include "flucast/svr.hpp"

#include <json.hpp>

#include <span>
#include <variant>
#include <vector>

namespace flucast::models {

/// Any trained model. Single-output SVR yields a length-1 prediction.
using Regressor = std::variant<SvrModel, MsvrModel, MlpModel>;

std::vector<double> predict(const Regressor& model, std::span<const double> x);
std::size_t output_dim(const Regressor& model);
std::size_t input_dim(const Regressor& model);

/// JSON documents with one key per model field plus "type" and "input_dim".
/// Doubles round-trip exactly (shortest representation that reparses to the same bits).
nlohmann::json to_json(const Regressor& model);
Regressor regressor_from_json(const nlohmann::json& doc);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& doc, Eigen::Index cols);

} // namespace flucast::models
