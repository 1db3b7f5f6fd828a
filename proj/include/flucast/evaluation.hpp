#pragma once

#include "flucast/data.hpp"
#include "flucast/strategies.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace flucast::evaluation {

double mape(std::span<const double> observed, std::span<const double> predicted);
double rmse(std::span<const double> observed, std::span<const double> predicted);
double mae(std::span<const double> observed, std::span<const double> predicted);

inline constexpr int kOutbreakFirstWeek = 45;
inline constexpr int kOutbreakLastWeek = 8;

/// True for weeks 45..53 and 1..8.
bool in_outbreak_period(int week);

struct CalendarWeek {
    int year = 0;
    int week = 0;
};

/// One winter season (week 45 through week 8 of the next year), possibly truncated
/// to the span it was detected in.
struct OutbreakWindow {
    CalendarWeek start;  // nominal (season_year, 45)
    CalendarWeek end;    // nominal (season_year + 1, 8)
    std::vector<std::size_t> members;  // contiguous series indices
    std::size_t peak_index = 0;        // series index of the observed maximum, earliest on ties
};

/// Windows over series indices [first, last]. Partial seasons at the edges are kept.
std::vector<OutbreakWindow> detect_outbreak_windows(const data::IliSeries& series, std::size_t first,
                                                    std::size_t last);

/// Contiguous run of values starting at series index `first`.
struct SeriesSlice {
    std::size_t first = 0;
    std::vector<double> values;

    bool covers(std::size_t index) const { return index >= first && index < first + values.size(); }
    double at(std::size_t index) const { return values.at(index - first); }
};

/// Series index of the maximum over the window's weeks, earliest on ties.
std::size_t peak_of(const OutbreakWindow& window, const SeriesSlice& slice);

/// |observed peak week - predicted peak week|, in weeks.
double pwe(const OutbreakWindow& window, const SeriesSlice& observed, const SeriesSlice& predicted);

/// Per-window mean absolute error, averaged over windows with equal weight.
double outbreak_mae(std::span<const OutbreakWindow> windows, const SeriesSlice& observed,
                    const SeriesSlice& predicted);

enum class Metric { Mape, Rmse, Pwe, OutbreakMae };
inline constexpr std::array<Metric, 4> kAllMetrics{Metric::Mape, Metric::Rmse, Metric::Pwe, Metric::OutbreakMae};

std::string_view to_string(Metric metric);

struct MetricValues {
    double mape = 0.0;
    double rmse = 0.0;
    double pwe = 0.0;
    double outbreak_mae = 0.0;

    double get(Metric metric) const;
};

/// Metrics for one (model, strategy, horizon, repeat) run.
struct MetricRow {
    MetricValues mean;                 // average over lead times 1..H
    std::vector<MetricValues> per_lead;
};

/// Each lead time h is scored against its own target weeks (origin + h); PWE and
/// Outbreak MAE use the windows, whose weeks every lead time must cover.
MetricRow aggregate_metrics(const strategies::ForecastTable& table, const data::IliSeries& series,
                            std::span<const OutbreakWindow> windows, std::size_t horizon);

} // namespace flucast::evaluation
