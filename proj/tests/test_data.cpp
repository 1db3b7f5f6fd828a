#include "flucast/data.hpp"
#include "flucast/errors.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace flucast;
using namespace flucast::data;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

IliSeries series_of(const std::vector<double>& rates, int year = 2010, int week = 1)
{
    std::vector<WeekPoint> pts;
    for (double r : rates) {
        pts.push_back({year, week, std::isnan(r) ? 0.0 : r, std::isnan(r)});
        if (++week > 52) {
            week = 1;
            ++year;
        }
    }
    return IliSeries(std::move(pts));
}

IliSeries parse_text(const std::string& text)
{
    std::istringstream in(text);
    return parse_series(in);
}

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

} // namespace

TEST_CASE("three valid rows load as a series of length 3", "[data]")
{
    const auto s = parse_text("year,week,ili_rate\n2011,1,2.5\n2011,2,3.0\n2011,3,3.5\n");
    REQUIRE(s.size() == 3);
    CHECK_FALSE(s.has_missing());
    CHECK(s[2].rate == 3.5);
    CHECK(s[1].week == 2);
}

TEST_CASE("an empty rate cell is flagged missing", "[data]")
{
    const auto s = parse_text("year,week,ili_rate\n2011,39,1.2\n2011,40,\n2011,41,1.4\n");
    REQUIRE(s.size() == 3);
    CHECK(s[1].missing);
    CHECK(s.missing_count() == 1);
}

TEST_CASE("decreasing calendar is a validation error", "[data]")
{
    CHECK_THROWS_AS(parse_text("year,week,ili_rate\n2010,5,1.0\n2010,4,1.0\n"), ValidationError);
    CHECK_THROWS_AS(parse_text("year,week,ili_rate\n2010,5,1.0\n2010,5,1.0\n"), ValidationError);
}

TEST_CASE("malformed rows report their line number", "[data]")
{
    try {
        parse_text("year,week,ili_rate\n2010,1,1.0\n2010,x,1.0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_text("year,week,ili_rate\n2010,1\n"), ParseError);
    CHECK_THROWS_AS(parse_text("yr,wk,rate\n2010,1,1.0\n"), ParseError);
    CHECK_THROWS_AS(parse_text(""), ParseError);
}

TEST_CASE("week 53 is accepted and week 54 rejected", "[data]")
{
    CHECK(parse_text("year,week,ili_rate\n2015,52,1.0\n2015,53,1.1\n2016,1,1.2\n").size() == 3);
    CHECK_THROWS_AS(parse_text("year,week,ili_rate\n2015,54,1.0\n"), ValidationError);
}

TEST_CASE("non-positive observed rates are rejected", "[data]")
{
    CHECK_THROWS_AS(series_of({1.0, 0.0}), ValidationError);
    CHECK_THROWS_AS(series_of({1.0, -2.0}), ValidationError);
}

TEST_CASE("series round-trips through the CSV writer", "[data]")
{
    const auto s = series_of({0.1234567890123, kMissing, 7.0, 1e-3});
    std::ostringstream out;
    write_series(out, s);
    std::istringstream in(out.str());
    const auto back = parse_series(in);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back[i].year == s[i].year);
        CHECK(back[i].week == s[i].week);
        CHECK(back[i].missing == s[i].missing);
        if (!s[i].missing) {
            CHECK(back[i].rate == s[i].rate);
        }
    }

    const auto path = std::filesystem::temp_directory_path() / "flucast_test_series.csv";
    save_series(path, s);
    CHECK(load_series(path).size() == 4);
    std::filesystem::remove(path);
    CHECK_THROWS(load_series(path));
}

TEST_CASE("a single interior gap takes the neighbour mean", "[data]")
{
    const auto s = impute_missing(series_of({2.0, kMissing, 4.0}));
    CHECK(s.values() == std::vector<double>{2.0, 3.0, 4.0});
    CHECK_FALSE(s.has_missing());
}

TEST_CASE("imputation leaves complete series unchanged", "[data]")
{
    const auto s = series_of({1.5, 2.5, 0.5});
    const auto out = impute_missing(s);
    CHECK(out.values() == s.values());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(out[i].year == s[i].year);
        CHECK(out[i].week == s[i].week);
    }
}

TEST_CASE("boundary gaps copy the nearest observation", "[data]")
{
    CHECK(impute_missing(series_of({kMissing, 2.0, 3.0})).values() == std::vector<double>{2.0, 2.0, 3.0});
    CHECK(impute_missing(series_of({2.0, 3.0, kMissing, kMissing})).values() ==
          std::vector<double>{2.0, 3.0, 3.0, 3.0});
}

TEST_CASE("long interior gaps are interpolated linearly", "[data]")
{
    const auto v = impute_missing(series_of({1.0, kMissing, kMissing, kMissing, 5.0})).values();
    REQUIRE(v.size() == 5);
    CHECK_THAT(v[1], WithinAbs(2.0, 1e-12));
    CHECK_THAT(v[2], WithinAbs(3.0, 1e-12));
    CHECK_THAT(v[3], WithinAbs(4.0, 1e-12));
}

TEST_CASE("all-missing series cannot be imputed", "[data]")
{
    CHECK_THROWS(impute_missing(series_of({kMissing, kMissing})));
}

TEST_CASE("imputation is idempotent", "[data]")
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> rates(30);
        for (auto& r : rates) {
            r = u(gen) < 1.5 ? kMissing : u(gen);
        }
        rates[7] = 1.0;
        const auto once = impute_missing(series_of(rates));
        const auto twice = impute_missing(once);
        CHECK(once.values() == twice.values());
    }
}

TEST_CASE("log transform examples", "[data]")
{
    const auto s = log_transform(series_of({1.0, 100.0}));
    CHECK(s.scale() == Scale::Log10);
    CHECK(s.values()[0] == 0.0);
    CHECK(s.values()[1] == 2.0);

    const std::vector<double> rates{0.5, 3.2, 6.1};
    const auto back = inverse_log_transform(log_transform(series_of(rates))).values();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        CHECK_THAT(back[i], WithinRel(rates[i], 1e-12));
    }
}

TEST_CASE("log round-trip is accurate across six decades", "[data]")
{
    std::vector<double> rates;
    for (double e = -3.0; e <= 3.0; e += 0.01) {
        rates.push_back(std::pow(10.0, e) * 1.2345);
    }
    const auto back = inverse_log_transform(log_transform(series_of(rates))).values();
    for (std::size_t i = 0; i < rates.size(); ++i) {
        CHECK(std::abs(back[i] - rates[i]) / rates[i] < 1e-12);
    }
}

TEST_CASE("log transform rejects missing values", "[data]")
{
    CHECK_THROWS(log_transform(series_of({1.0, kMissing, 2.0})));
}

TEST_CASE("supervised dataset shapes and first row", "[data]")
{
    std::vector<double> v;
    for (int i = 1; i <= 10; ++i) {
        v.push_back(static_cast<double>(i));
    }
    const auto ds = make_supervised(series_of(v), 3, 2);
    REQUIRE(ds.rows() == 6);
    CHECK(ds.inputs.cols() == 3);
    CHECK(ds.targets.cols() == 2);
    CHECK(ds.inputs(0, 0) == 3.0);
    CHECK(ds.inputs(0, 1) == 2.0);
    CHECK(ds.inputs(0, 2) == 1.0);
    CHECK(ds.targets(0, 0) == 4.0);
    CHECK(ds.targets(0, 1) == 5.0);
    CHECK(ds.origin_index.front() == 2);

    CHECK_THROWS_AS(make_supervised(series_of({1, 2, 3, 4}), 3, 2), InsufficientDataError);
    CHECK(make_supervised(series_of({1, 2, 3, 4, 5}), 3, 2).rows() == 1);
}

TEST_CASE("targets and inputs round-trip to the source series", "[data]")
{
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(0.1, 9.0);
    std::vector<double> v(80);
    for (auto& x : v) {
        x = u(gen);
    }
    const auto s = series_of(v);
    for (std::size_t d : {1u, 4u, 20u}) {
        for (std::size_t H : {1u, 3u, 10u}) {
            const auto ds = make_supervised(s, d, H);
            REQUIRE(ds.rows() == v.size() - d - H + 1);
            for (std::size_t i = 0; i < ds.rows(); ++i) {
                const std::size_t t = ds.origin_index[i];
                for (std::size_t h = 0; h < H; ++h) {
                    CHECK(ds.targets(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(h)) == v[t + h + 1]);
                }
                for (std::size_t j = 0; j < d; ++j) {
                    CHECK(ds.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) == v[t - j]);
                }
            }
        }
    }
}

TEST_CASE("chronological split uses the floor of n times the fraction", "[data]")
{
    std::vector<double> v;
    for (int i = 1; i <= 11; ++i) {
        v.push_back(static_cast<double>(i));
    }
    const auto ds = make_supervised(series_of(v), 2, 1); // 9 rows
    REQUIRE(ds.rows() == 9);
    const auto [train, test] = chronological_split(ds, 2.0 / 3.0);
    CHECK(train.rows() == 6);
    CHECK(test.rows() == 3);
    CHECK(train.origin_index.back() < test.origin_index.front());
    CHECK(train.d == 2);
    CHECK(test.horizon == 1);

    const auto [a, b] = chronological_split(ds, 0.5);
    CHECK(a.rows() + b.rows() == ds.rows());
    CHECK(a.rows() == 4);
}

TEST_CASE("split errors", "[data]")
{
    const auto ds = make_supervised(series_of({1, 2, 3}), 2, 1); // one row
    REQUIRE(ds.rows() == 1);
    CHECK_THROWS_AS(chronological_split(ds, 2.0 / 3.0), InsufficientDataError);
    const auto big = make_supervised(series_of({1, 2, 3, 4, 5, 6}), 2, 1);
    CHECK_THROWS(chronological_split(big, 0.0));
    CHECK_THROWS(chronological_split(big, 1.0));
    CHECK_THROWS(chronological_split(big, -0.2));
}

TEST_CASE("dataset slice and select keep rows aligned", "[data]")
{
    const auto ds = make_supervised(series_of({1, 2, 3, 4, 5, 6, 7, 8}), 2, 2);
    const auto part = ds.slice(1, 3);
    REQUIRE(part.rows() == 2);
    CHECK(part.origin_index[0] == ds.origin_index[1]);
    CHECK(part.inputs.row(1) == ds.inputs.row(2));
    const auto picked = ds.select({4, 0});
    CHECK(picked.origin_index == std::vector<std::size_t>{ds.origin_index[4], ds.origin_index[0]});
    CHECK(picked.targets.row(0) == ds.targets.row(4));
    CHECK_THROWS(ds.slice(2, 9));
}
