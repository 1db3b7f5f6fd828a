#include "flucast/mlp.hpp"

#include "flucast/errors.hpp"
#include "flucast/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace flucast::models {

namespace {

void check_shapes(const MlpModel& model, const Matrix& inputs, const Matrix& targets)
{
    if (static_cast<std::size_t>(inputs.cols()) != model.input_dim()) {
        throw DimensionError("MLP input width does not match the model");
    }
    if (static_cast<std::size_t>(targets.cols()) != model.output_dim() || targets.rows() != inputs.rows()) {
        throw DimensionError("MLP target shape does not match the model");
    }
}

// Hidden pre-activations for a batch (n x k).
Matrix hidden_preactivation(const MlpModel& model, const Matrix& inputs)
{
    Matrix pre = inputs * model.hidden_weights.transpose();
    pre.rowwise() += model.hidden_biases.transpose();
    return pre;
}

// Batched forward and backward pass; faster than the per-sample sweep for narrow layers.
MlpModel loss_and_gradient_batched(const MlpModel& model, const Matrix& inputs, const Matrix& targets, double& loss)
{
    const Matrix pre = hidden_preactivation(model, inputs);
    const Matrix act = pre.cwiseMax(0.0);
    Matrix out = act * model.output_weights.transpose();
    out.rowwise() += model.output_biases.transpose();

    const Matrix residual = out - targets;
    loss = residual.squaredNorm() / static_cast<double>(residual.size());
    const double scale = 2.0 / static_cast<double>(targets.size());
    const Matrix d_out = scale * residual;             // n x H
    Matrix d_hidden = d_out * model.output_weights;    // n x k
    d_hidden.array() *= (pre.array() > 0.0).cast<double>();

    MlpModel grad;
    grad.output_weights = d_out.transpose() * act;
    grad.output_biases = d_out.colwise().sum().transpose();
    grad.hidden_weights = d_hidden.transpose() * inputs;
    grad.hidden_biases = d_hidden.colwise().sum().transpose();
    return grad;
}

// Forward and backward pass in one sweep, one sample at a time so the working set
// stays in cache; every inner loop runs over the hidden units. `loss` receives the
// pre-update loss.
MlpModel loss_and_gradient_streamed(const MlpModel& model, const Matrix& inputs, const Matrix& targets, double& loss)
{
    const Eigen::Index n = inputs.rows();
    const Eigen::Index d = inputs.cols();
    const Eigen::Index k = model.hidden_weights.rows();
    const Eigen::Index h_out = model.output_weights.rows();
    const double scale = 2.0 / static_cast<double>(n * h_out);

    // Column j holds the weights from input j to every hidden unit.
    const Eigen::MatrixXd w1 = model.hidden_weights;
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(k, d);
    Matrix g2 = Matrix::Zero(h_out, k);
    Vector gb1 = Vector::Zero(k);
    Vector gb2 = Vector::Zero(h_out);
    Vector hidden(k);
    Vector delta(k);
    double sse = 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
        const double* x = inputs.row(i).data();
        hidden = model.hidden_biases;
        for (Eigen::Index j = 0; j < d; ++j) {
            hidden.noalias() += x[j] * w1.col(j);
        }
        hidden = hidden.cwiseMax(0.0);

        delta.setZero();
        for (Eigen::Index o = 0; o < h_out; ++o) {
            const double r = model.output_biases(o) + model.output_weights.row(o).dot(hidden.transpose()) -
                             targets(i, o);
            sse += r * r;
            const double dr = scale * r;
            gb2(o) += dr;
            g2.row(o).noalias() += dr * hidden.transpose();
            delta.noalias() += dr * model.output_weights.row(o).transpose();
        }
        // ReLU derivative, taken as 0 at the kink.
        delta = (hidden.array() > 0.0).select(delta, 0.0);
        gb1 += delta;
        for (Eigen::Index j = 0; j < d; ++j) {
            g1.col(j).noalias() += x[j] * delta;
        }
    }
    loss = sse / static_cast<double>(n * h_out);

    MlpModel grad;
    grad.hidden_weights = g1;
    grad.hidden_biases = std::move(gb1);
    grad.output_weights = std::move(g2);
    grad.output_biases = std::move(gb2);
    return grad;
}

MlpModel loss_and_gradient(const MlpModel& model, const Matrix& inputs, const Matrix& targets, double& loss)
{
    constexpr Eigen::Index kStreamedMinWidth = 32;
    return model.hidden_weights.rows() >= kStreamedMinWidth ? loss_and_gradient_streamed(model, inputs, targets, loss)
                                                            : loss_and_gradient_batched(model, inputs, targets, loss);
}

void adam_step(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, const MlpTrainOptions& o, double bias1,
               double bias2)
{
    m = o.beta1 * m + (1.0 - o.beta1) * grad;
    v = o.beta2 * v + (1.0 - o.beta2) * grad.cwiseProduct(grad);
    const double step = o.learning_rate * std::sqrt(bias2) / bias1;
    param.array() -= step * m.array() / (v.array().sqrt() + o.adam_epsilon * std::sqrt(bias2));
}

void adam_step(Vector& param, const Vector& grad, Vector& m, Vector& v, const MlpTrainOptions& o, double bias1,
               double bias2)
{
    m = o.beta1 * m + (1.0 - o.beta1) * grad;
    v = o.beta2 * v + (1.0 - o.beta2) * grad.cwiseProduct(grad);
    const double step = o.learning_rate * std::sqrt(bias2) / bias1;
    param.array() -= step * m.array() / (v.array().sqrt() + o.adam_epsilon * std::sqrt(bias2));
}

} // namespace

MlpModel init_mlp(std::size_t input_dim, std::size_t hidden_size, std::size_t output_dim, std::uint64_t seed)
{
    if (input_dim == 0 || hidden_size == 0 || output_dim == 0) {
        throw std::invalid_argument("init_mlp: all layer sizes must be positive");
    }
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(input_dim);
    const auto k = static_cast<Eigen::Index>(hidden_size);
    const auto h = static_cast<Eigen::Index>(output_dim);
    const double hidden_bound = std::sqrt(6.0 / static_cast<double>(input_dim + hidden_size));
    const double output_bound = std::sqrt(6.0 / static_cast<double>(hidden_size + output_dim));

    MlpModel model;
    model.hidden_weights.resize(k, d);
    model.hidden_biases = Vector::Zero(k);
    model.output_weights.resize(h, k);
    model.output_biases = Vector::Zero(h);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            model.hidden_weights(i, j) = rng.uniform(-hidden_bound, hidden_bound);
        }
    }
    for (Eigen::Index i = 0; i < h; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            model.output_weights(i, j) = rng.uniform(-output_bound, output_bound);
        }
    }
    return model;
}

double mlp_loss(const MlpModel& model, const Matrix& inputs, const Matrix& targets)
{
    check_shapes(model, inputs, targets);
    const Matrix residual = predict_mlp(model, inputs) - targets;
    return residual.squaredNorm() / static_cast<double>(residual.size());
}

MlpModel mlp_loss_gradient(const MlpModel& model, const Matrix& inputs, const Matrix& targets)
{
    check_shapes(model, inputs, targets);
    double loss = 0.0;
    return loss_and_gradient(model, inputs, targets, loss);
}

MlpFit train_mlp_from(MlpModel initial, const Matrix& inputs, const Matrix& targets,
                      const MlpTrainOptions& options)
{
    if (inputs.rows() == 0) {
        throw std::invalid_argument("train_mlp: empty training set");
    }
    check_shapes(initial, inputs, targets);
    if (!inputs.allFinite() || !targets.allFinite()) {
        throw std::invalid_argument("train_mlp: non-finite training data");
    }

    MlpFit fit;
    fit.model = std::move(initial);
    auto& model = fit.model;

    Matrix m_hw = Matrix::Zero(model.hidden_weights.rows(), model.hidden_weights.cols());
    Matrix v_hw = m_hw;
    Matrix m_ow = Matrix::Zero(model.output_weights.rows(), model.output_weights.cols());
    Matrix v_ow = m_ow;
    Vector m_hb = Vector::Zero(model.hidden_biases.size());
    Vector v_hb = m_hb;
    Vector m_ob = Vector::Zero(model.output_biases.size());
    Vector v_ob = m_ob;

    fit.loss_history.reserve(options.epochs);
    for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
        double loss = 0.0;
        const MlpModel grad = loss_and_gradient(model, inputs, targets, loss);
        if (!std::isfinite(loss)) {
            throw std::runtime_error("train_mlp: non-finite loss at epoch " + std::to_string(epoch));
        }
        fit.loss_history.push_back(loss);
        const double bias1 = 1.0 - std::pow(options.beta1, static_cast<double>(epoch));
        const double bias2 = 1.0 - std::pow(options.beta2, static_cast<double>(epoch));
        adam_step(model.hidden_weights, grad.hidden_weights, m_hw, v_hw, options, bias1, bias2);
        adam_step(model.output_weights, grad.output_weights, m_ow, v_ow, options, bias1, bias2);
        adam_step(model.hidden_biases, grad.hidden_biases, m_hb, v_hb, options, bias1, bias2);
        adam_step(model.output_biases, grad.output_biases, m_ob, v_ob, options, bias1, bias2);
    }
    return fit;
}

namespace {

struct ColumnScaling {
    Vector shift;
    Vector scale;
};

// Column means and population standard deviations; constant columns keep scale 1.
ColumnScaling column_scaling(const Matrix& m)
{
    ColumnScaling s;
    const auto n = static_cast<double>(m.rows());
    s.shift = m.colwise().mean().transpose();
    s.scale = ((m.rowwise() - s.shift.transpose()).colwise().squaredNorm().transpose() / n).cwiseSqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        if (!(s.scale(j) > 1e-12 * std::max(1.0, std::abs(s.shift(j))))) {
            s.scale(j) = 1.0;
        }
    }
    return s;
}

Matrix standardize(const Matrix& m, const ColumnScaling& s)
{
    return (m.rowwise() - s.shift.transpose()).array().rowwise() / s.scale.transpose().array();
}

} // namespace

MlpModel train_mlp(const Matrix& inputs, const Matrix& targets, const MlpTrainOptions& options)
{
    if (options.hidden_size == 0) {
        throw std::invalid_argument("train_mlp: hidden size must be positive");
    }
    if (inputs.rows() == 0) {
        throw std::invalid_argument("train_mlp: empty training set");
    }
    auto initial = init_mlp(static_cast<std::size_t>(inputs.cols()), options.hidden_size,
                            static_cast<std::size_t>(targets.cols()), options.seed);
    if (!options.standardize) {
        return train_mlp_from(std::move(initial), inputs, targets, options).model;
    }
    check_shapes(initial, inputs, targets);

    // Fit on z-scored data, then fold both affine maps into the outer layers so the
    // returned network consumes and produces raw values.
    const ColumnScaling sx = column_scaling(inputs);
    const ColumnScaling sy = column_scaling(targets);
    MlpModel model = train_mlp_from(std::move(initial), standardize(inputs, sx), standardize(targets, sy), options).model;

    const Vector inv = sx.scale.cwiseInverse();
    model.hidden_biases -= model.hidden_weights * sx.shift.cwiseProduct(inv);
    model.hidden_weights = model.hidden_weights * inv.asDiagonal();
    model.output_weights = sy.scale.asDiagonal() * model.output_weights;
    model.output_biases = sy.scale.cwiseProduct(model.output_biases) + sy.shift;
    return model;
}

std::vector<double> predict_mlp(const MlpModel& model, std::span<const double> x)
{
    if (x.size() != model.input_dim()) {
        throw DimensionError("predict_mlp: expected " + std::to_string(model.input_dim()) + " inputs, got " +
                             std::to_string(x.size()));
    }
    const Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Vector hidden = (model.hidden_weights * xv + model.hidden_biases).cwiseMax(0.0);
    const Vector out = model.output_weights * hidden + model.output_biases;
    return {out.data(), out.data() + out.size()};
}

Matrix predict_mlp(const MlpModel& model, const Matrix& inputs)
{
    if (static_cast<std::size_t>(inputs.cols()) != model.input_dim()) {
        throw DimensionError("predict_mlp: input width does not match the model");
    }
    Matrix out = hidden_preactivation(model, inputs).cwiseMax(0.0) * model.output_weights.transpose();
    out.rowwise() += model.output_biases.transpose();
    return out;
}

} // namespace flucast::models
