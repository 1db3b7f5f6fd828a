#include "flucast/data.hpp"

#include "flucast/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

namespace flucast::data {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

template <class T>
bool parse_number(std::string_view cell, T& out)
{
    const auto* end = cell.data() + cell.size();
    const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

bool precedes(const WeekPoint& a, const WeekPoint& b)
{
    return a.year < b.year || (a.year == b.year && a.week < b.week);
}

} // namespace

IliSeries::IliSeries(std::vector<WeekPoint> points, Scale scale) : points_(std::move(points)), scale_(scale)
{
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (p.week < 1 || p.week > 53) {
            throw ValidationError("week " + std::to_string(p.week) + " outside 1..53 at position " +
                                  std::to_string(i));
        }
        if (i > 0 && !precedes(points_[i - 1], p)) {
            throw ValidationError("calendar not strictly increasing at " + std::to_string(p.year) + "-W" +
                                  std::to_string(p.week));
        }
        if (!p.missing) {
            if (!std::isfinite(p.rate)) {
                throw ValidationError("non-finite value at position " + std::to_string(i));
            }
            if (scale_ == Scale::Rate && p.rate <= 0.0) {
                throw ValidationError("non-positive rate at " + std::to_string(p.year) + "-W" +
                                      std::to_string(p.week));
            }
        }
    }
}

bool IliSeries::has_missing() const
{
    return missing_count() > 0;
}

std::size_t IliSeries::missing_count() const
{
    return static_cast<std::size_t>(
        std::count_if(points_.begin(), points_.end(), [](const WeekPoint& p) { return p.missing; }));
}

std::vector<double> IliSeries::values() const
{
    std::vector<double> out;
    out.reserve(points_.size());
    for (const auto& p : points_) {
        if (p.missing) {
            throw ValidationError("series has missing values; impute first");
        }
        out.push_back(p.rate);
    }
    return out;
}

IliSeries IliSeries::with_values(const std::vector<double>& values, Scale scale) const
{
    if (values.size() != points_.size()) {
        throw DimensionError("value count does not match calendar length");
    }
    std::vector<WeekPoint> pts = points_;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        pts[i].rate = values[i];
        pts[i].missing = false;
    }
    return IliSeries(std::move(pts), scale);
}

SupervisedDataset SupervisedDataset::slice(std::size_t begin, std::size_t end) const
{
    if (begin > end || end > rows()) {
        throw std::out_of_range("dataset slice out of range");
    }
    const auto n = static_cast<Eigen::Index>(end - begin);
    SupervisedDataset out;
    out.inputs = inputs.middleRows(static_cast<Eigen::Index>(begin), n);
    out.targets = targets.middleRows(static_cast<Eigen::Index>(begin), n);
    out.origin_index.assign(origin_index.begin() + static_cast<std::ptrdiff_t>(begin),
                            origin_index.begin() + static_cast<std::ptrdiff_t>(end));
    out.d = d;
    out.horizon = horizon;
    return out;
}

SupervisedDataset SupervisedDataset::select(const std::vector<std::size_t>& rows_wanted) const
{
    SupervisedDataset out;
    out.d = d;
    out.horizon = horizon;
    out.inputs.resize(static_cast<Eigen::Index>(rows_wanted.size()), inputs.cols());
    out.targets.resize(static_cast<Eigen::Index>(rows_wanted.size()), targets.cols());
    out.origin_index.reserve(rows_wanted.size());
    for (std::size_t i = 0; i < rows_wanted.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(rows_wanted[i]);
        out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(r);
        out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(r);
        out.origin_index.push_back(origin_index[rows_wanted[i]]);
    }
    return out;
}

IliSeries parse_series(std::istream& in)
{
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::vector<WeekPoint> points;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = trim(line);
        if (content.empty()) {
            continue;
        }
        const auto cells = split_commas(content);
        if (!header_seen) {
            header_seen = true;
            if (cells.size() == 3 && cells[0] == "year" && cells[1] == "week" && cells[2] == "ili_rate") {
                continue;
            }
            throw ParseError(line_no, "expected header 'year,week,ili_rate'");
        }
        if (cells.size() != 3) {
            throw ParseError(line_no, "expected 3 columns, found " + std::to_string(cells.size()));
        }
        WeekPoint p;
        if (!parse_number(cells[0], p.year)) {
            throw ParseError(line_no, "invalid year '" + std::string(cells[0]) + "'");
        }
        if (!parse_number(cells[1], p.week)) {
            throw ParseError(line_no, "invalid week '" + std::string(cells[1]) + "'");
        }
        if (cells[2].empty()) {
            p.missing = true;
        } else if (!parse_number(cells[2], p.rate)) {
            throw ParseError(line_no, "invalid ili_rate '" + std::string(cells[2]) + "'");
        }
        points.push_back(p);
    }
    if (!header_seen) {
        throw ParseError(line_no, "empty file");
    }
    return IliSeries(std::move(points), Scale::Rate);
}

IliSeries load_series(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return parse_series(in);
}

void write_series(std::ostream& out, const IliSeries& series)
{
    out << "year,week,ili_rate\n";
    out << std::setprecision(17);
    for (const auto& p : series.points()) {
        out << p.year << ',' << p.week << ',';
        if (!p.missing) {
            out << p.rate;
        }
        out << '\n';
    }
}

void save_series(const std::filesystem::path& path, const IliSeries& series)
{
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_series(out, series);
}

IliSeries impute_missing(const IliSeries& series)
{
    const auto& pts = series.points();
    std::vector<std::size_t> observed;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!pts[i].missing) {
            observed.push_back(i);
        }
    }
    if (observed.empty()) {
        throw ValidationError("cannot impute an all-missing series");
    }

    std::vector<double> values(pts.size());
    for (std::size_t i : observed) {
        values[i] = pts[i].rate;
    }
    // Leading and trailing gaps copy the nearest observation.
    for (std::size_t i = 0; i < observed.front(); ++i) {
        values[i] = pts[observed.front()].rate;
    }
    for (std::size_t i = observed.back() + 1; i < pts.size(); ++i) {
        values[i] = pts[observed.back()].rate;
    }
    // Interior gaps: linear interpolation, which is the neighbour mean for a single week.
    for (std::size_t k = 0; k + 1 < observed.size(); ++k) {
        const std::size_t lo = observed[k];
        const std::size_t hi = observed[k + 1];
        if (hi - lo < 2) {
            continue;
        }
        const double a = pts[lo].rate;
        const double b = pts[hi].rate;
        const double span = static_cast<double>(hi - lo);
        for (std::size_t i = lo + 1; i < hi; ++i) {
            const double t = static_cast<double>(i - lo) / span;
            values[i] = hi - lo == 2 ? 0.5 * (a + b) : a + t * (b - a);
        }
    }
    return series.with_values(values, series.scale());
}

IliSeries log_transform(const IliSeries& series)
{
    std::vector<double> out;
    out.reserve(series.size());
    for (double v : series.values()) {
        if (!(v > 0.0)) {
            throw std::domain_error("log transform requires positive rates");
        }
        out.push_back(std::log10(v));
    }
    return series.with_values(out, Scale::Log10);
}

IliSeries inverse_log_transform(const IliSeries& series)
{
    std::vector<double> out;
    out.reserve(series.size());
    for (double v : series.values()) {
        out.push_back(std::pow(10.0, v));
    }
    return series.with_values(out, Scale::Rate);
}

SupervisedDataset make_supervised(const IliSeries& series, std::size_t d, std::size_t horizon)
{
    if (d == 0 || horizon == 0) {
        throw std::invalid_argument("embedding dimension and horizon must be positive");
    }
    const std::size_t n_points = series.size();
    if (n_points < d + horizon) {
        throw InsufficientDataError("series of length " + std::to_string(n_points) +
                                    " is too short for d=" + std::to_string(d) +
                                    ", H=" + std::to_string(horizon));
    }
    const auto values = series.values();
    const std::size_t n = n_points - d - horizon + 1;

    SupervisedDataset out;
    out.d = d;
    out.horizon = horizon;
    out.inputs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    out.targets.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(horizon));
    out.origin_index.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = i + d - 1;
        out.origin_index[i] = t;
        for (std::size_t j = 0; j < d; ++j) {
            out.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[t - j];
        }
        for (std::size_t h = 0; h < horizon; ++h) {
            out.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h)) = values[t + h + 1];
        }
    }
    return out;
}

std::pair<SupervisedDataset, SupervisedDataset> chronological_split(const SupervisedDataset& dataset,
                                                                    double train_fraction)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("train fraction must lie in (0, 1)");
    }
    const std::size_t n = dataset.rows();
    if (n == 0) {
        throw InsufficientDataError("cannot split an empty dataset");
    }
    // The small offset absorbs representation error, e.g. 9 * (2.0 / 3.0).
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction + 1e-9));
    if (n_train == 0 || n_train >= n) {
        throw InsufficientDataError("split of " + std::to_string(n) + " rows leaves an empty partition");
    }
    return {dataset.slice(0, n_train), dataset.slice(n_train, n)};
}

} // namespace flucast::data
