#include "flucast/regressor.hpp"

#include "flucast/errors.hpp"

#include <stdexcept>

namespace flucast::models {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

nlohmann::json vector_to_json(const Vector& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

Vector vector_from_json(const nlohmann::json& doc)
{
    const auto values = doc.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

} // namespace

nlohmann::json matrix_to_json(const Matrix& m)
{
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(std::vector<double>(m.row(r).data(), m.row(r).data() + m.cols()));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& doc, Eigen::Index cols)
{
    Matrix m(static_cast<Eigen::Index>(doc.size()), cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const auto row = doc.at(static_cast<std::size_t>(r)).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols) {
            throw DimensionError("ragged matrix in model document");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row[static_cast<std::size_t>(c)];
        }
    }
    return m;
}

std::vector<double> predict(const Regressor& model, std::span<const double> x)
{
    return std::visit(overloaded{
                          [&](const SvrModel& m) { return std::vector<double>{predict_svr(m, x)}; },
                          [&](const MsvrModel& m) { return predict_msvr(m, x); },
                          [&](const MlpModel& m) { return predict_mlp(m, x); },
                      },
                      model);
}

std::size_t output_dim(const Regressor& model)
{
    return std::visit(overloaded{
                          [](const SvrModel&) -> std::size_t { return 1; },
                          [](const MsvrModel& m) { return m.output_dim(); },
                          [](const MlpModel& m) { return m.output_dim(); },
                      },
                      model);
}

std::size_t input_dim(const Regressor& model)
{
    return std::visit([](const auto& m) { return m.input_dim(); }, model);
}

nlohmann::json to_json(const Regressor& model)
{
    return std::visit(overloaded{
                          [](const SvrModel& m) {
                              return nlohmann::json{
                                  {"type", "svr"},
                                  {"input_dim", m.input_dim()},
                                  {"support_inputs", matrix_to_json(m.support_inputs)},
                                  {"dual_coefficients", m.dual_coefficients},
                                  {"bias", m.bias},
                                  {"gamma", m.gamma},
                                  {"epsilon", m.epsilon},
                                  {"C", m.C},
                              };
                          },
                          [](const MsvrModel& m) {
                              return nlohmann::json{
                                  {"type", "msvr"},
                                  {"input_dim", m.input_dim()},
                                  {"support_inputs", matrix_to_json(m.support_inputs)},
                                  {"coefficient_matrix", matrix_to_json(m.coefficient_matrix)},
                                  {"biases", vector_to_json(m.biases)},
                                  {"gamma", m.gamma},
                                  {"epsilon", m.epsilon},
                                  {"C", m.C},
                              };
                          },
                          [](const MlpModel& m) {
                              return nlohmann::json{
                                  {"type", "mlp"},
                                  {"input_dim", m.input_dim()},
                                  {"hidden_size", m.hidden_size()},
                                  {"hidden_weights", matrix_to_json(m.hidden_weights)},
                                  {"hidden_biases", vector_to_json(m.hidden_biases)},
                                  {"output_weights", matrix_to_json(m.output_weights)},
                                  {"output_biases", vector_to_json(m.output_biases)},
                              };
                          },
                      },
                      model);
}

Regressor regressor_from_json(const nlohmann::json& doc)
{
    const auto type = doc.at("type").get<std::string>();
    const auto d = doc.at("input_dim").get<Eigen::Index>();
    if (type == "svr") {
        SvrModel m;
        m.support_inputs = matrix_from_json(doc.at("support_inputs"), d);
        m.dual_coefficients = doc.at("dual_coefficients").get<std::vector<double>>();
        m.bias = doc.at("bias").get<double>();
        m.gamma = doc.at("gamma").get<double>();
        m.epsilon = doc.at("epsilon").get<double>();
        m.C = doc.at("C").get<double>();
        if (m.dual_coefficients.size() != static_cast<std::size_t>(m.support_inputs.rows())) {
            throw DimensionError("svr document: coefficient count does not match support vectors");
        }
        return m;
    }
    if (type == "msvr") {
        MsvrModel m;
        m.support_inputs = matrix_from_json(doc.at("support_inputs"), d);
        m.biases = vector_from_json(doc.at("biases"));
        m.coefficient_matrix = matrix_from_json(doc.at("coefficient_matrix"), m.biases.size());
        m.gamma = doc.at("gamma").get<double>();
        m.epsilon = doc.at("epsilon").get<double>();
        m.C = doc.at("C").get<double>();
        if (m.coefficient_matrix.rows() != m.support_inputs.rows()) {
            throw DimensionError("msvr document: coefficient rows do not match support vectors");
        }
        return m;
    }
    if (type == "mlp") {
        MlpModel m;
        const auto k = doc.at("hidden_size").get<Eigen::Index>();
        m.hidden_weights = matrix_from_json(doc.at("hidden_weights"), d);
        m.hidden_biases = vector_from_json(doc.at("hidden_biases"));
        m.output_weights = matrix_from_json(doc.at("output_weights"), k);
        m.output_biases = vector_from_json(doc.at("output_biases"));
        if (m.hidden_weights.rows() != k || m.hidden_biases.size() != k ||
            m.output_weights.rows() != m.output_biases.size()) {
            throw DimensionError("mlp document: inconsistent layer shapes");
        }
        return m;
    }
    throw std::invalid_argument("unknown model type '" + type + "'");
}

} // namespace flucast::models
