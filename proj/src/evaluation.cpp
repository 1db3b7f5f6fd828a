#include "flucast/evaluation.hpp"

#include "flucast/errors.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace flucast::evaluation {

namespace {

void check_lengths(std::span<const double> observed, std::span<const double> predicted)
{
    if (observed.size() != predicted.size()) {
        throw DimensionError("metric: observed and predicted lengths differ");
    }
    if (observed.empty()) {
        throw std::invalid_argument("metric: need at least one pair");
    }
}

void check_covered(const OutbreakWindow& window, const SeriesSlice& slice, const char* what)
{
    for (std::size_t idx : window.members) {
        if (!slice.covers(idx)) {
            throw std::out_of_range(std::string(what) + " does not cover outbreak week at index " +
                                    std::to_string(idx));
        }
    }
}

int season_of(const data::WeekPoint& p)
{
    return p.week >= kOutbreakFirstWeek ? p.year : p.year - 1;
}

} // namespace

double mape(std::span<const double> observed, std::span<const double> predicted)
{
    check_lengths(observed, predicted);
    double sum = 0.0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        if (observed[j] == 0.0) {
            throw std::domain_error("MAPE undefined for a zero observation");
        }
        sum += std::abs((observed[j] - predicted[j]) / observed[j]);
    }
    return sum / static_cast<double>(observed.size());
}

double rmse(std::span<const double> observed, std::span<const double> predicted)
{
    check_lengths(observed, predicted);
    double sum = 0.0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        const double e = observed[j] - predicted[j];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(observed.size()));
}

double mae(std::span<const double> observed, std::span<const double> predicted)
{
    check_lengths(observed, predicted);
    double sum = 0.0;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        sum += std::abs(observed[j] - predicted[j]);
    }
    return sum / static_cast<double>(observed.size());
}

bool in_outbreak_period(int week)
{
    return week >= kOutbreakFirstWeek || week <= kOutbreakLastWeek;
}

std::vector<OutbreakWindow> detect_outbreak_windows(const data::IliSeries& series, std::size_t first,
                                                    std::size_t last)
{
    std::vector<OutbreakWindow> windows;
    if (series.empty() || first > last) {
        return windows;
    }
    last = std::min(last, series.size() - 1);
    int current_season = 0;
    for (std::size_t i = first; i <= last; ++i) {
        const auto& p = series[i];
        if (!in_outbreak_period(p.week)) {
            continue;
        }
        const int season = season_of(p);
        if (windows.empty() || season != current_season || windows.back().members.back() + 1 != i) {
            OutbreakWindow w;
            w.start = {season, kOutbreakFirstWeek};
            w.end = {season + 1, kOutbreakLastWeek};
            windows.push_back(std::move(w));
            current_season = season;
        }
        windows.back().members.push_back(i);
    }
    for (auto& w : windows) {
        w.peak_index = w.members.front();
        for (std::size_t idx : w.members) {
            const auto& p = series[idx];
            if (!p.missing && (series[w.peak_index].missing || p.rate > series[w.peak_index].rate)) {
                w.peak_index = idx;
            }
        }
    }
    return windows;
}

std::size_t peak_of(const OutbreakWindow& window, const SeriesSlice& slice)
{
    if (window.members.empty()) {
        throw std::invalid_argument("outbreak window has no weeks");
    }
    check_covered(window, slice, "slice");
    std::size_t best = window.members.front();
    for (std::size_t idx : window.members) {
        if (slice.at(idx) > slice.at(best)) {
            best = idx;
        }
    }
    return best;
}

double pwe(const OutbreakWindow& window, const SeriesSlice& observed, const SeriesSlice& predicted)
{
    check_covered(window, predicted, "predicted series");
    const auto t_obs = static_cast<double>(peak_of(window, observed));
    const auto t_pred = static_cast<double>(peak_of(window, predicted));
    return std::abs(t_obs - t_pred);
}

double outbreak_mae(std::span<const OutbreakWindow> windows, const SeriesSlice& observed,
                    const SeriesSlice& predicted)
{
    if (windows.empty()) {
        throw std::invalid_argument("outbreak_mae: no outbreak windows");
    }
    double total = 0.0;
    for (const auto& w : windows) {
        check_covered(w, predicted, "predicted series");
        check_covered(w, observed, "observed series");
        double sum = 0.0;
        for (std::size_t idx : w.members) {
            sum += std::abs(observed.at(idx) - predicted.at(idx));
        }
        total += sum / static_cast<double>(w.members.size());
    }
    return total / static_cast<double>(windows.size());
}

std::string_view to_string(Metric metric)
{
    switch (metric) {
    case Metric::Mape:
        return "MAPE";
    case Metric::Rmse:
        return "RMSE";
    case Metric::Pwe:
        return "PWE";
    case Metric::OutbreakMae:
        return "OutbreakMAE";
    }
    return "?";
}

double MetricValues::get(Metric metric) const
{
    switch (metric) {
    case Metric::Mape:
        return mape;
    case Metric::Rmse:
        return rmse;
    case Metric::Pwe:
        return pwe;
    case Metric::OutbreakMae:
        return outbreak_mae;
    }
    return 0.0;
}

MetricRow aggregate_metrics(const strategies::ForecastTable& table, const data::IliSeries& series,
                            std::span<const OutbreakWindow> windows, std::size_t horizon)
{
    if (horizon == 0) {
        throw std::invalid_argument("aggregate_metrics: horizon must be positive");
    }
    if (windows.empty()) {
        throw std::invalid_argument("aggregate_metrics: no outbreak windows in the evaluation span");
    }
    // lead -> (origin -> entry)
    std::vector<std::map<std::size_t, const strategies::ForecastEntry*>> by_lead(horizon);
    for (const auto& e : table.entries) {
        if (e.lead_time < 1 || e.lead_time > horizon) {
            throw std::invalid_argument("aggregate_metrics: lead time outside 1..H");
        }
        by_lead[e.lead_time - 1][e.origin_index] = &e;
    }
    const auto& reference = by_lead.front();
    if (reference.empty()) {
        throw std::invalid_argument("aggregate_metrics: empty forecast table");
    }
    const std::size_t first_origin = reference.begin()->first;
    const std::size_t last_origin = reference.rbegin()->first;
    if (last_origin - first_origin + 1 != reference.size()) {
        throw std::invalid_argument("aggregate_metrics: forecast origins are not contiguous");
    }
    if (last_origin + horizon >= series.size() + 1) {
        throw std::out_of_range("aggregate_metrics: forecast targets extend past the series");
    }

    MetricRow row;
    row.per_lead.reserve(horizon);
    for (std::size_t h = 1; h <= horizon; ++h) {
        const auto& entries = by_lead[h - 1];
        if (entries.size() != reference.size() || entries.begin()->first != first_origin) {
            throw std::invalid_argument("aggregate_metrics: incomplete table at lead time " + std::to_string(h));
        }
        SeriesSlice observed{first_origin + h, {}};
        SeriesSlice predicted{first_origin + h, {}};
        for (const auto& [origin, e] : entries) {
            observed.values.push_back(e->observed);
            predicted.values.push_back(e->predicted);
        }
        MetricValues v;
        v.mape = mape(observed.values, predicted.values);
        v.rmse = rmse(observed.values, predicted.values);
        double pwe_sum = 0.0;
        for (const auto& w : windows) {
            pwe_sum += pwe(w, observed, predicted);
        }
        v.pwe = pwe_sum / static_cast<double>(windows.size());
        v.outbreak_mae = outbreak_mae(windows, observed, predicted);
        row.per_lead.push_back(v);
    }
    for (const auto& v : row.per_lead) {
        row.mean.mape += v.mape;
        row.mean.rmse += v.rmse;
        row.mean.pwe += v.pwe;
        row.mean.outbreak_mae += v.outbreak_mae;
    }
    const auto n = static_cast<double>(horizon);
    row.mean.mape /= n;
    row.mean.rmse /= n;
    row.mean.pwe /= n;
    row.mean.outbreak_mae /= n;
    return row;
}

} // namespace flucast::evaluation
