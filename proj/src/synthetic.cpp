#include "flucast/synthetic.hpp"

#include "flucast/random.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace flucast::harness {

namespace {

// 0 = Sunday (Sakamoto).
int day_of_week(int y, int m, int d)
{
    static constexpr int offsets[] = {0, 3, 2, 5, 0, 3, 5, 1, 4, 6, 2, 4};
    if (m < 3) {
        y -= 1;
    }
    return (y + y / 4 - y / 100 + y / 400 + offsets[m - 1] + d) % 7;
}

bool is_leap(int y)
{
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

struct Season {
    double center;
    double height;
    double width;
};

} // namespace

int iso_weeks_in_year(int year)
{
    const int jan1 = day_of_week(year, 1, 1);
    return jan1 == 4 || (is_leap(year) && jan1 == 3) ? 53 : 52;
}

data::IliSeries generate_synthetic_ili(std::size_t years, std::uint64_t seed, int start_year)
{
    if (years < 2) {
        throw std::invalid_argument("generate_synthetic_ili: need at least 2 years");
    }
    Rng rng(seed);

    std::vector<data::WeekPoint> points;
    std::vector<int> year_start;  // index of week 1 for each year, plus one past the end
    for (std::size_t k = 0; k < years; ++k) {
        const int year = start_year + static_cast<int>(k);
        year_start.push_back(static_cast<int>(points.size()));
        for (int w = 1; w <= iso_weeks_in_year(year); ++w) {
            points.push_back({year, w, 0.0, false});
        }
    }
    year_start.push_back(static_cast<int>(points.size()));

    // Season y peaks around the turn of year y -> y + 1. Include the season that
    // ends in the first year.
    std::vector<Season> seasons;
    for (std::size_t k = 0; k <= years; ++k) {
        const double turn = static_cast<double>(year_start[k]) - 1.0;
        Season s;
        s.center = turn + static_cast<double>(static_cast<int>(rng.index(9)) - 4);
        s.height = rng.uniform(0.25, 0.45);
        s.width = rng.uniform(3.0, 5.0);
        seasons.push_back(s);
    }

    constexpr double kBaseline = 0.35;
    constexpr double kSummerHeight = 0.05;
    constexpr double kArCoefficient = 0.5;
    constexpr double kArNoise = 0.025;
    constexpr double kWhiteNoise = 0.015;

    double ar = 0.0;
    for (std::size_t t = 0; t < points.size(); ++t) {
        const double pos = static_cast<double>(t);
        double level = kBaseline;
        for (const auto& s : seasons) {
            const double z = (pos - s.center) / s.width;
            level += s.height * std::exp(-0.5 * z * z);
        }
        const double summer = (static_cast<double>(points[t].week) - 28.0) / 4.0;
        level += kSummerHeight * std::exp(-0.5 * summer * summer);
        ar = kArCoefficient * ar + kArNoise * rng.normal();
        level += ar + kWhiteNoise * rng.normal();
        points[t].rate = std::pow(10.0, level);
    }
    return data::IliSeries(std::move(points), data::Scale::Rate);
}

} // namespace flucast::harness
