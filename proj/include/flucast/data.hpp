#pragma once

#include "flucast/linalg.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

namespace flucast::data {

/// One weekly observation. `rate` is meaningless when `missing` is set.
struct WeekPoint {
    int year = 0;
    int week = 0;
    double rate = 0.0;
    bool missing = false;
};

/// Whether the stored values are raw percentages or their base-10 logarithm.
enum class Scale { Rate, Log10 };

/// Calendar-indexed weekly ILI rate sequence.
///
/// The calendar is strictly increasing in (year, week). On the Rate scale
/// every observed value is strictly positive; Log10 values are unrestricted.
class IliSeries {
public:
    IliSeries() = default;
    explicit IliSeries(std::vector<WeekPoint> points, Scale scale = Scale::Rate);

    const std::vector<WeekPoint>& points() const { return points_; }
    const WeekPoint& operator[](std::size_t i) const { return points_[i]; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    Scale scale() const { return scale_; }

    bool has_missing() const;
    std::size_t missing_count() const;

    /// Observed values in order. Throws if any point is missing.
    std::vector<double> values() const;

    /// Same calendar, new values, no missing flags.
    IliSeries with_values(const std::vector<double>& values, Scale scale) const;

private:
    std::vector<WeekPoint> points_;
    Scale scale_ = Scale::Rate;
};

/// Lag-embedded regression samples.
///
/// Row i has inputs [I_t, I_{t-1}, ..., I_{t-d+1}] and targets
/// [I_{t+1}, ..., I_{t+H}] where t = origin_index[i].
struct SupervisedDataset {
    Matrix inputs;
    Matrix targets;
    std::vector<std::size_t> origin_index;
    std::size_t d = 0;
    std::size_t horizon = 0;

    std::size_t rows() const { return origin_index.size(); }

    /// Contiguous row range [begin, end).
    SupervisedDataset slice(std::size_t begin, std::size_t end) const;
    /// Arbitrary rows, in the order given.
    SupervisedDataset select(const std::vector<std::size_t>& rows) const;
};

IliSeries parse_series(std::istream& in);
IliSeries load_series(const std::filesystem::path& path);
void write_series(std::ostream& out, const IliSeries& series);
void save_series(const std::filesystem::path& path, const IliSeries& series);

IliSeries impute_missing(const IliSeries& series);

IliSeries log_transform(const IliSeries& series);
IliSeries inverse_log_transform(const IliSeries& series);

SupervisedDataset make_supervised(const IliSeries& series, std::size_t d, std::size_t horizon);

std::pair<SupervisedDataset, SupervisedDataset> chronological_split(const SupervisedDataset& dataset,
                                                                    double train_fraction);

} // namespace flucast::data
