#include "flucast/strategies.hpp"

#include "flucast/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>
#include <string>

namespace flucast::strategies {

std::string_view to_string(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::Iterated:
        return "Iter";
    case StrategyKind::Direct:
        return "Dir";
    case StrategyKind::Mimo:
        return "MIMO";
    }
    return "?";
}

StrategyKind strategy_from_string(std::string_view name)
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "iter" || lower == "iterated") {
        return StrategyKind::Iterated;
    }
    if (lower == "dir" || lower == "direct") {
        return StrategyKind::Direct;
    }
    if (lower == "mimo") {
        return StrategyKind::Mimo;
    }
    throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

std::size_t popcount(const FeatureMask& mask)
{
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

std::vector<double> apply_mask(std::span<const double> lags, const FeatureMask& mask)
{
    if (lags.size() != mask.size()) {
        throw DimensionError("feature mask length does not match lag count");
    }
    std::vector<double> out;
    out.reserve(lags.size());
    for (std::size_t j = 0; j < lags.size(); ++j) {
        if (mask[j]) {
            out.push_back(lags[j]);
        }
    }
    return out;
}

LagWindow::LagWindow(std::vector<double> buffer, FeatureMask mask) : buffer_(std::move(buffer)), mask_(std::move(mask))
{
    if (buffer_.empty() || buffer_.size() != mask_.size()) {
        throw DimensionError("lag window: buffer and mask must be non-empty and of equal length");
    }
}

void LagWindow::push_front(double value)
{
    std::rotate(buffer_.rbegin(), buffer_.rbegin() + 1, buffer_.rend());
    buffer_.front() = value;
}

std::vector<double> forecast_iterated(const SinglePredictor& model, LagWindow window, std::size_t horizon)
{
    if (horizon < 1) {
        throw std::invalid_argument("forecast_iterated: horizon must be at least 1");
    }
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t h = 0; h < horizon; ++h) {
        const double next = model(window.masked());
        out.push_back(next);
        window.push_front(next);
    }
    return out;
}

std::vector<double> forecast_direct(std::span<const SinglePredictor> models, const LagWindow& window,
                                    std::size_t horizon)
{
    if (models.size() != horizon) {
        throw std::invalid_argument("forecast_direct: expected " + std::to_string(horizon) + " models, got " +
                                    std::to_string(models.size()));
    }
    const auto x = window.masked();
    std::vector<double> out;
    out.reserve(horizon);
    for (const auto& model : models) {
        out.push_back(model(x));
    }
    return out;
}

std::vector<double> forecast_mimo(const MultiPredictor& model, const LagWindow& window, std::size_t horizon)
{
    auto out = model(window.masked());
    if (out.size() != horizon) {
        throw DimensionError("forecast_mimo: model produced " + std::to_string(out.size()) + " outputs, expected " +
                             std::to_string(horizon));
    }
    return out;
}

void StrategyBundle::validate() const
{
    if (mask.size() != d || d == 0 || horizon == 0) {
        throw std::invalid_argument("strategy bundle: inconsistent d, horizon or mask");
    }
    const std::size_t expected = strategy == StrategyKind::Direct ? horizon : 1;
    if (models.size() != expected) {
        throw std::invalid_argument("strategy bundle: " + std::string(to_string(strategy)) + " needs " +
                                    std::to_string(expected) + " model(s), has " + std::to_string(models.size()));
    }
    const std::size_t outputs = strategy == StrategyKind::Mimo ? horizon : 1;
    const std::size_t width = popcount(mask);
    for (const auto& m : models) {
        if (models::output_dim(m) != outputs) {
            throw DimensionError("strategy bundle: model output dimension does not match strategy");
        }
        if (models::input_dim(m) != width) {
            throw DimensionError("strategy bundle: model input dimension does not match the feature mask");
        }
    }
}

std::vector<double> StrategyBundle::forecast(std::span<const double> lags) const
{
    if (lags.size() != d) {
        throw DimensionError("forecast: expected " + std::to_string(d) + " lags");
    }
    LagWindow window({lags.begin(), lags.end()}, mask);
    switch (strategy) {
    case StrategyKind::Iterated: {
        const auto& m = models.front();
        return forecast_iterated([&m](std::span<const double> x) { return models::predict(m, x).front(); },
                                 std::move(window), horizon);
    }
    case StrategyKind::Direct: {
        std::vector<SinglePredictor> predictors;
        predictors.reserve(models.size());
        for (const auto& m : models) {
            predictors.emplace_back([&m](std::span<const double> x) { return models::predict(m, x).front(); });
        }
        return forecast_direct(predictors, window, horizon);
    }
    case StrategyKind::Mimo: {
        const auto& m = models.front();
        return forecast_mimo([&m](std::span<const double> x) { return models::predict(m, x); }, window, horizon);
    }
    }
    throw std::logic_error("unreachable strategy kind");
}

ForecastTable rollout(const StrategyBundle& pipeline, const data::SupervisedDataset& test_set)
{
    if (test_set.rows() > 0 && (test_set.d != pipeline.d || test_set.horizon != pipeline.horizon)) {
        throw DimensionError("rollout: test set built with d=" + std::to_string(test_set.d) + ", H=" +
                             std::to_string(test_set.horizon) + " but pipeline expects d=" +
                             std::to_string(pipeline.d) + ", H=" + std::to_string(pipeline.horizon));
    }
    ForecastTable table;
    table.horizon = pipeline.horizon;
    table.entries.reserve(test_set.rows() * pipeline.horizon);
    for (std::size_t i = 0; i < test_set.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const auto predicted = pipeline.forecast(row_span(test_set.inputs, r));
        for (std::size_t h = 0; h < pipeline.horizon; ++h) {
            ForecastEntry e;
            e.origin_index = test_set.origin_index[i];
            e.lead_time = h + 1;
            e.predicted = std::pow(10.0, predicted[h]);
            e.observed = std::pow(10.0, test_set.targets(r, static_cast<Eigen::Index>(h)));
            table.entries.push_back(e);
        }
    }
    return table;
}

void write_forecast_csv(std::ostream& out, const ForecastTable& table, const data::IliSeries& series)
{
    out << "origin_year,origin_week,lead_time,predicted,observed\n";
    out << std::setprecision(17);
    for (const auto& e : table.entries) {
        const auto& p = series[e.origin_index];
        out << p.year << ',' << p.week << ',' << e.lead_time << ',' << e.predicted << ',';
        if (std::isfinite(e.observed)) {
            out << e.observed;
        }
        out << '\n';
    }
}

} // namespace flucast::strategies
