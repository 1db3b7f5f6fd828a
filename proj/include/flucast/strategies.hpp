#pragma once

#include "flucast/data.hpp"
#include "flucast/regressor.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

namespace flucast::strategies {

enum class StrategyKind { Iterated, Direct, Mimo };

std::string_view to_string(StrategyKind kind);
StrategyKind strategy_from_string(std::string_view name);

/// Bit j selects lag j, i.e. I_{t-j}.
using FeatureMask = std::vector<bool>;

std::size_t popcount(const FeatureMask& mask);

/// Values at the set bits of `mask`, in lag order.
std::vector<double> apply_mask(std::span<const double> lags, const FeatureMask& mask);

/// The d most recent values [I_t, ..., I_{t-d+1}] plus the feature mask applied to them.
class LagWindow {
public:
    LagWindow(std::vector<double> buffer, FeatureMask mask);

    const std::vector<double>& buffer() const { return buffer_; }
    const FeatureMask& mask() const { return mask_; }
    std::size_t d() const { return buffer_.size(); }

    std::vector<double> masked() const { return apply_mask(buffer_, mask_); }

    /// Insert a new most-recent value and drop the oldest.
    void push_front(double value);

private:
    std::vector<double> buffer_;
    FeatureMask mask_;
};

using SinglePredictor = std::function<double(std::span<const double>)>;
using MultiPredictor = std::function<std::vector<double>(std::span<const double>)>;

/// Recursive strategy: each prediction is shifted into the full lag buffer before the
/// mask is applied for the next step.
std::vector<double> forecast_iterated(const SinglePredictor& model, LagWindow window, std::size_t horizon);

/// One model per lead time, all fed the same masked window.
std::vector<double> forecast_direct(std::span<const SinglePredictor> models, const LagWindow& window,
                                    std::size_t horizon);

/// One multi-output model for the whole horizon.
std::vector<double> forecast_mimo(const MultiPredictor& model, const LagWindow& window, std::size_t horizon);

/// Trained model(s) plus the bookkeeping needed to forecast from a raw lag vector.
///
/// Iterated holds one single-output model, Direct holds `horizon` single-output
/// models, Mimo holds one model with `horizon` outputs.
struct StrategyBundle {
    StrategyKind strategy = StrategyKind::Iterated;
    FeatureMask mask;
    std::vector<models::Regressor> models;
    std::size_t d = 0;
    std::size_t horizon = 0;

    void validate() const;

    /// lags = [I_t, ..., I_{t-d+1}] in model space; returns model-space predictions.
    std::vector<double> forecast(std::span<const double> lags) const;
};

struct ForecastEntry {
    std::size_t origin_index = 0;
    std::size_t lead_time = 0; // 1-based
    double predicted = 0.0;
    double observed = 0.0;
};

/// Predictions on the original rate scale, ordered by origin then lead time.
struct ForecastTable {
    std::size_t horizon = 0;
    std::vector<ForecastEntry> entries;
};

/// Forecast every row of a log-space test set and return rates (10^x).
ForecastTable rollout(const StrategyBundle& pipeline, const data::SupervisedDataset& test_set);

/// CSV columns: origin_year, origin_week, lead_time, predicted, observed.
void write_forecast_csv(std::ostream& out, const ForecastTable& table, const data::IliSeries& series);

} // namespace flucast::strategies
