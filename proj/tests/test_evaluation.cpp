#include "flucast/evaluation.hpp"
#include "flucast/errors.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace flucast;
using namespace flucast::evaluation;
using Catch::Matchers::WithinAbs;

namespace {

// ISO calendar from (year, week) for n weeks with the given rates (or 1.0).
data::IliSeries calendar(int year, int week, std::size_t n, const std::vector<double>& rates = {})
{
    std::vector<data::WeekPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
        pts.push_back({year, week, rates.empty() ? 1.0 : rates[i], false});
        if (++week > oracle::iso_weeks_by_thursdays(year)) {
            week = 1;
            ++year;
        }
    }
    return data::IliSeries(std::move(pts));
}

std::size_t index_of(const data::IliSeries& s, int year, int week)
{
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].year == year && s[i].week == week) {
            return i;
        }
    }
    throw std::logic_error("week not in calendar");
}

OutbreakWindow window_over(std::size_t first, std::size_t count)
{
    OutbreakWindow w;
    for (std::size_t i = 0; i < count; ++i) {
        w.members.push_back(first + i);
    }
    w.peak_index = first;
    return w;
}

strategies::ForecastTable persistence_table(const std::vector<double>& rates, std::size_t first_origin,
                                            std::size_t last_origin, std::size_t H)
{
    strategies::ForecastTable t;
    t.horizon = H;
    for (std::size_t o = first_origin; o <= last_origin; ++o) {
        for (std::size_t h = 1; h <= H; ++h) {
            t.entries.push_back({o, h, rates[o], rates[o + h]});
        }
    }
    return t;
}

} // namespace

TEST_CASE("mape examples", "[evaluation]")
{
    const std::vector<double> obs{1.0, 2.0};
    CHECK(mape(obs, obs) == 0.0);
    const std::vector<double> pred{2.0, 1.0};
    CHECK_THAT(mape(obs, pred), WithinAbs(0.75, 1e-9));
    const std::vector<double> zero{0.0, 1.0};
    CHECK_THROWS_AS(mape(zero, pred), std::domain_error);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(mape(one, pred), DimensionError);
    const std::vector<double> none;
    CHECK_THROWS(mape(none, none));
}

TEST_CASE("rmse examples", "[evaluation]")
{
    const std::vector<double> obs{0.0, 0.0};
    const std::vector<double> pred{3.0, 4.0};
    CHECK(rmse(pred, pred) == 0.0);
    CHECK_THAT(rmse(obs, pred), WithinAbs(std::sqrt(12.5), 1e-9));
    CHECK_THAT(rmse(obs, pred), WithinAbs(3.53553, 1e-5));

    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.1, 5.0);
    std::vector<double> a(20);
    std::vector<double> b(20);
    for (std::size_t i = 0; i < 20; ++i) {
        a[i] = u(gen);
        b[i] = u(gen);
    }
    std::vector<std::size_t> perm(20);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> pa(20);
    std::vector<double> pb(20);
    for (std::size_t i = 0; i < 20; ++i) {
        pa[i] = a[perm[i]];
        pb[i] = b[perm[i]];
    }
    CHECK_THAT(rmse(pa, pb), WithinAbs(rmse(a, b), 1e-12));
    CHECK_THROWS_AS(rmse(a, std::vector<double>{1.0}), DimensionError);
}

TEST_CASE("metric scaling invariants", "[evaluation]")
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.5, 4.0);
    std::vector<double> obs(30);
    std::vector<double> pred(30);
    for (std::size_t i = 0; i < 30; ++i) {
        obs[i] = u(gen);
        pred[i] = u(gen);
    }
    for (double s : {0.01, 3.0, 250.0}) {
        std::vector<double> so(obs);
        std::vector<double> sp(pred);
        for (std::size_t i = 0; i < 30; ++i) {
            so[i] *= s;
            sp[i] *= s;
        }
        CHECK_THAT(mape(so, sp), WithinAbs(mape(obs, pred), 1e-12));
        CHECK_THAT(rmse(so, sp), WithinAbs(s * rmse(obs, pred), 1e-12 * s));
    }
    CHECK(mae(obs, obs) == 0.0);
    CHECK(mape(obs, pred) > 0.0);
}

TEST_CASE("outbreak weeks are 45 through 8", "[evaluation]")
{
    for (int w = 1; w <= 53; ++w) {
        CHECK(in_outbreak_period(w) == (w >= 45 || w <= 8));
    }
}

TEST_CASE("three winters between mid-2017 and week 12 of 2020", "[evaluation]")
{
    const auto s = calendar(2016, 1, 260);
    const auto windows = detect_outbreak_windows(s, index_of(s, 2017, 26), index_of(s, 2020, 12));
    REQUIRE(windows.size() == 3);
    CHECK(windows[0].start.year == 2017);
    CHECK(windows[0].start.week == 45);
    CHECK(windows[0].end.year == 2018);
    CHECK(windows[0].end.week == 8);
    CHECK(windows[2].start.year == 2019);
    CHECK(s[windows[2].members.back()].year == 2020);
    CHECK(s[windows[2].members.back()].week == 8);
}

TEST_CASE("window lengths follow the calendar", "[evaluation]")
{
    const auto s = calendar(2014, 1, 300);
    const auto windows = detect_outbreak_windows(s, 0, s.size() - 1);
    for (const auto& w : windows) {
        const bool complete = s[w.members.front()].week == 45 && s[w.members.back()].week == 8;
        if (!complete) {
            continue;
        }
        const std::size_t expected = oracle::iso_weeks_by_thursdays(w.start.year) == 53 ? 17 : 16;
        CHECK(w.members.size() == expected);
        for (std::size_t k = 1; k < w.members.size(); ++k) {
            CHECK(w.members[k] == w.members[k - 1] + 1);
        }
    }
    const auto y2018 = detect_outbreak_windows(s, index_of(s, 2018, 40), index_of(s, 2019, 20));
    REQUIRE(y2018.size() == 1);
    CHECK(y2018[0].members.size() == 16);
    const auto y2015 = detect_outbreak_windows(s, index_of(s, 2015, 40), index_of(s, 2016, 20));
    REQUIRE(y2015.size() == 1);
    CHECK(y2015[0].members.size() == 17);
}

TEST_CASE("spans without winter weeks give no windows", "[evaluation]")
{
    const auto s = calendar(2018, 10, 30);
    CHECK(detect_outbreak_windows(s, 0, s.size() - 1).empty());
    CHECK(detect_outbreak_windows(s, 5, 2).empty());
}

TEST_CASE("partial seasons at span edges are kept and truncated", "[evaluation]")
{
    const auto s = calendar(2018, 1, 120);
    const auto windows = detect_outbreak_windows(s, index_of(s, 2018, 3), index_of(s, 2018, 50));
    REQUIRE(windows.size() == 2);
    CHECK(windows[0].members.size() == 6);  // weeks 3..8
    CHECK(windows[0].start.year == 2017);
    CHECK(windows[1].members.size() == 6);  // weeks 45..50
}

TEST_CASE("observed peak takes the earliest maximum", "[evaluation]")
{
    std::vector<double> rates(40, 1.0);
    const auto s0 = calendar(2018, 40, 40);
    const std::size_t a = index_of(s0, 2018, 50);
    const std::size_t b = index_of(s0, 2019, 2);
    rates[a] = 5.0;
    rates[b] = 5.0;
    const auto s = calendar(2018, 40, 40, rates);
    const auto windows = detect_outbreak_windows(s, 0, s.size() - 1);
    REQUIRE(windows.size() == 1);
    CHECK(windows[0].peak_index == a);
}

TEST_CASE("pwe examples", "[evaluation]")
{
    const auto w = window_over(10, 16);
    SeriesSlice observed{10, std::vector<double>(16, 1.0)};
    SeriesSlice predicted{10, std::vector<double>(16, 1.0)};
    observed.values[1] = 9.0;
    predicted.values[1] = 7.0;
    CHECK(pwe(w, observed, predicted) == 0.0);
    predicted.values[1] = 1.0;
    predicted.values[4] = 7.0;
    CHECK(pwe(w, observed, predicted) == 3.0);

    SeriesSlice flat{10, std::vector<double>(16, 2.0)};
    CHECK(pwe(w, observed, flat) == 1.0); // observed peak at 11, flat peak at the window start 10

    SeriesSlice short_pred{12, std::vector<double>(16, 1.0)};
    CHECK_THROWS(pwe(w, observed, short_pred));
}

TEST_CASE("pwe ignores monotone transforms of the prediction", "[evaluation]")
{
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    const auto w = window_over(0, 16);
    SeriesSlice observed{0, std::vector<double>(16)};
    SeriesSlice predicted{0, std::vector<double>(16)};
    for (int trial = 0; trial < 50; ++trial) {
        for (std::size_t i = 0; i < 16; ++i) {
            observed.values[i] = u(gen);
            predicted.values[i] = u(gen);
        }
        SeriesSlice transformed = predicted;
        for (auto& v : transformed.values) {
            v = std::exp(3.0 * v) - 7.0;
        }
        CHECK(pwe(w, observed, transformed) == pwe(w, observed, predicted));
    }
}

TEST_CASE("outbreak mae examples", "[evaluation]")
{
    const SeriesSlice observed{0, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0}};
    CHECK(outbreak_mae(std::vector<OutbreakWindow>{window_over(0, 7)}, observed, observed) == 0.0);

    const SeriesSlice predicted{0, {2.0, 1.0, 3.0, 4.0, 5.0, 6.0, 7.0}};
    CHECK_THAT(outbreak_mae(std::vector<OutbreakWindow>{window_over(0, 3)}, observed, predicted),
               WithinAbs(2.0 / 3.0, 1e-9));

    // Window A (2 weeks) MAE 0.2, window B (3 weeks) MAE 0.4: unweighted mean 0.3.
    const SeriesSlice obs2{0, {1.0, 1.0, 1.0, 1.0, 1.0}};
    const SeriesSlice pred2{0, {1.2, 0.8, 1.4, 0.6, 1.4}};
    const std::vector<OutbreakWindow> two{window_over(0, 2), window_over(2, 3)};
    CHECK_THAT(outbreak_mae(two, obs2, pred2), WithinAbs(0.3, 1e-9));

    CHECK_THROWS(outbreak_mae(std::vector<OutbreakWindow>{}, observed, predicted));
    CHECK_THROWS(outbreak_mae(std::vector<OutbreakWindow>{window_over(5, 4)}, observed, predicted));
}

TEST_CASE("aggregate over a single lead time equals that lead's metrics", "[evaluation]")
{
    std::vector<double> rates;
    for (int i = 0; i < 30; ++i) {
        rates.push_back(1.0 + 0.5 * std::sin(0.5 * i) + 0.01 * i);
    }
    const auto s = calendar(2018, 40, 30, rates);
    const auto table = persistence_table(rates, 0, 28, 1);
    const auto windows = detect_outbreak_windows(s, 1, 29);
    REQUIRE_FALSE(windows.empty());
    const auto row = aggregate_metrics(table, s, windows, 1);
    REQUIRE(row.per_lead.size() == 1);
    CHECK(row.mean.mape == row.per_lead[0].mape);
    CHECK(row.mean.rmse == row.per_lead[0].rmse);
    CHECK(row.mean.pwe == row.per_lead[0].pwe);
    CHECK(row.mean.outbreak_mae == row.per_lead[0].outbreak_mae);

    std::vector<double> obs;
    std::vector<double> pred;
    for (std::size_t o = 0; o <= 28; ++o) {
        obs.push_back(rates[o + 1]);
        pred.push_back(rates[o]);
    }
    CHECK_THAT(row.mean.mape, WithinAbs(mape(obs, pred), 1e-9));
    CHECK_THAT(row.mean.rmse, WithinAbs(rmse(obs, pred), 1e-9));
}

TEST_CASE("perfect first lead halves the mean rmse", "[evaluation]")
{
    std::vector<double> rates;
    for (int i = 0; i < 30; ++i) {
        rates.push_back(2.0 + std::cos(0.3 * i));
    }
    const auto s = calendar(2018, 40, 30, rates);
    strategies::ForecastTable table;
    table.horizon = 2;
    std::vector<double> obs2;
    std::vector<double> pred2;
    for (std::size_t o = 0; o <= 27; ++o) {
        table.entries.push_back({o, 1, rates[o + 1], rates[o + 1]});
        const double p = rates[o + 2] + (o % 3 == 0 ? 0.3 : -0.1);
        table.entries.push_back({o, 2, p, rates[o + 2]});
        obs2.push_back(rates[o + 2]);
        pred2.push_back(p);
    }
    const auto windows = detect_outbreak_windows(s, 2, 28);
    const auto row = aggregate_metrics(table, s, windows, 2);
    const double r = rmse(obs2, pred2);
    CHECK(row.per_lead[0].rmse == 0.0);
    CHECK_THAT(row.per_lead[1].rmse, WithinAbs(r, 1e-9));
    CHECK_THAT(row.mean.rmse, WithinAbs(r / 2.0, 1e-9));
}

TEST_CASE("persistence mape grows with lead time on a trending series", "[evaluation]")
{
    std::vector<double> rates;
    for (int i = 0; i < 20; ++i) {
        rates.push_back(1.0 + 0.1 * i);
    }
    const auto s = calendar(2018, 40, 20, rates);
    const std::size_t H = 4;
    const auto table = persistence_table(rates, 0, 15, H);
    const auto windows = detect_outbreak_windows(s, H, 16);
    const auto row = aggregate_metrics(table, s, windows, H);
    for (std::size_t h = 1; h <= H; ++h) {
        double sum = 0.0;
        for (std::size_t o = 0; o <= 15; ++o) {
            sum += std::abs(rates[o + h] - rates[o]) / rates[o + h];
        }
        CHECK_THAT(row.per_lead[h - 1].mape, WithinAbs(sum / 16.0, 1e-9));
        if (h > 1) {
            CHECK(row.per_lead[h - 1].mape >= row.per_lead[h - 2].mape);
        }
    }
}

TEST_CASE("aggregate rejects incomplete tables", "[evaluation]")
{
    std::vector<double> rates(30, 1.5);
    const auto s = calendar(2018, 40, 30, rates);
    auto table = persistence_table(rates, 0, 25, 2);
    const auto windows = detect_outbreak_windows(s, 2, 26);
    CHECK_NOTHROW(aggregate_metrics(table, s, windows, 2));
    table.entries.pop_back();
    CHECK_THROWS(aggregate_metrics(table, s, windows, 2));
    CHECK_THROWS(aggregate_metrics(persistence_table(rates, 0, 25, 2), s, {}, 2));
    strategies::ForecastTable empty;
    empty.horizon = 2;
    CHECK_THROWS(aggregate_metrics(empty, s, windows, 2));
}

TEST_CASE("metric names and accessors", "[evaluation]")
{
    MetricValues v{1.0, 2.0, 3.0, 4.0};
    CHECK(v.get(Metric::Mape) == 1.0);
    CHECK(v.get(Metric::Rmse) == 2.0);
    CHECK(v.get(Metric::Pwe) == 3.0);
    CHECK(v.get(Metric::OutbreakMae) == 4.0);
    CHECK(to_string(Metric::OutbreakMae) == "OutbreakMAE");
    CHECK(to_string(Metric::Mape) == "MAPE");
}
