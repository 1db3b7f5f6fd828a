#include "flucast/data.hpp"
#include "flucast/errors.hpp"
#include "flucast/msvr.hpp"
#include "flucast/strategies.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

using namespace flucast;
using namespace flucast::strategies;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double sum_of(std::span<const double> x)
{
    double s = 0.0;
    for (double v : x) {
        s += v;
    }
    return s;
}

// Identity on the first selected lag through one ReLU unit; valid for positive inputs.
models::MlpModel persistence_mlp(std::size_t inputs, std::size_t outputs)
{
    models::MlpModel m;
    m.hidden_weights = Matrix::Zero(1, static_cast<Eigen::Index>(inputs));
    m.hidden_weights(0, 0) = 1.0;
    m.hidden_biases = Vector::Zero(1);
    m.output_weights = Matrix::Ones(static_cast<Eigen::Index>(outputs), 1);
    m.output_biases = Vector::Zero(static_cast<Eigen::Index>(outputs));
    return m;
}

data::IliSeries series_of(const std::vector<double>& rates)
{
    std::vector<data::WeekPoint> pts;
    int year = 2012;
    int week = 40;
    for (double r : rates) {
        pts.push_back({year, week, r, false});
        if (++week > 52) {
            week = 1;
            ++year;
        }
    }
    return data::IliSeries(std::move(pts));
}

} // namespace

TEST_CASE("masks select lags in order", "[strategies]")
{
    const std::vector<double> lags{5.0, 4.0, 3.0, 2.0};
    CHECK(apply_mask(lags, {true, false, true, true}) == std::vector<double>{5.0, 3.0, 2.0});
    CHECK(popcount({true, false, true, true}) == 3);
    CHECK_THROWS_AS(apply_mask(lags, {true, false}), DimensionError);

    LagWindow w({1.0, 2.0, 3.0}, {false, true, true});
    CHECK(w.masked() == std::vector<double>{2.0, 3.0});
    w.push_front(9.0);
    CHECK(w.buffer() == std::vector<double>{9.0, 1.0, 2.0});
    CHECK(w.masked() == std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(LagWindow({1.0}, {true, false}), DimensionError);
}

TEST_CASE("strategy names parse both spellings", "[strategies]")
{
    CHECK(strategy_from_string("Iterated") == StrategyKind::Iterated);
    CHECK(strategy_from_string("dir") == StrategyKind::Direct);
    CHECK(strategy_from_string("MIMO") == StrategyKind::Mimo);
    CHECK(to_string(StrategyKind::Direct) == "Dir");
    CHECK_THROWS(strategy_from_string("dirrec"));
}

TEST_CASE("iterated forecast examples", "[strategies]")
{
    const SinglePredictor add = [](std::span<const double> x) { return x[0] + x[1]; };
    CHECK(forecast_iterated(add, LagWindow({1.0, 1.0}, {true, true}), 3) == std::vector<double>{2.0, 3.0, 5.0});

    const SinglePredictor weighted = [](std::span<const double> x) { return 0.5 * x[0] + 0.25 * x[1] - x[2]; };
    const LagWindow window({0.3, -1.0, 2.0, 4.0}, {true, false, true, true});
    const auto one = forecast_iterated(weighted, window, 1);
    REQUIRE(one.size() == 1);
    const auto masked = window.masked();
    CHECK(one[0] == weighted(masked));

    const SinglePredictor persistence = [](std::span<const double> x) { return x[0]; };
    const auto flat = forecast_iterated(persistence, LagWindow({7.0, 1.0, 2.0}, {true, true, true}), 6);
    CHECK(flat == std::vector<double>(6, 7.0));

    CHECK_THROWS(forecast_iterated(add, LagWindow({1.0, 1.0}, {true, true}), 0));
}

TEST_CASE("iterated recursion matches a straight-line reference over random masks", "[strategies]")
{
    std::mt19937_64 gen(71);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t d = std::uniform_int_distribution<std::size_t>(2, 20)(gen);
        const std::size_t H = std::uniform_int_distribution<std::size_t>(2, d + 3)(gen);
        FeatureMask mask(d);
        for (std::size_t j = 0; j < d; ++j) {
            mask[j] = u(gen) > 0.0;
        }
        mask[std::uniform_int_distribution<std::size_t>(0, d - 1)(gen)] = true;
        std::vector<double> lags(d);
        for (auto& v : lags) {
            v = u(gen);
        }
        std::vector<double> weights(popcount(mask));
        for (auto& w : weights) {
            w = u(gen) / static_cast<double>(weights.size());
        }
        auto f = [&](std::span<const double> x) {
            double s = 0.1;
            for (std::size_t j = 0; j < x.size(); ++j) {
                s += weights[j] * x[j];
            }
            return s;
        };
        const auto got = forecast_iterated(f, LagWindow(lags, mask), H);
        const auto ref = oracle::straight_line_recursion([&](const std::vector<double>& x) { return f(x); }, lags,
                                                         mask, H);
        CHECK(got == ref);
    }
}

TEST_CASE("direct forecast examples", "[strategies]")
{
    const LagWindow window({2.0, 3.0, 5.0}, {true, false, true});
    std::vector<SinglePredictor> one{sum_of};
    CHECK(forecast_direct(one, window, 1) == std::vector<double>{7.0});

    std::vector<SinglePredictor> same(4, sum_of);
    CHECK(forecast_direct(same, window, 4) == std::vector<double>(4, 7.0));

    std::vector<SinglePredictor> models;
    for (int h = 0; h < 5; ++h) {
        models.push_back([h](std::span<const double> x) { return x[0] * (h + 1); });
    }
    const auto before = forecast_direct(models, window, 5);
    models[2] = [](std::span<const double> x) { return -x[1]; };
    const auto after = forecast_direct(models, window, 5);
    for (std::size_t h = 0; h < 5; ++h) {
        if (h == 2) {
            CHECK(after[h] == -5.0);
        } else {
            CHECK(after[h] == before[h]);
        }
    }

    std::vector<SinglePredictor> permuted{models[4], models[0], models[3], models[1], models[2]};
    const auto p = forecast_direct(permuted, window, 5);
    CHECK(p == std::vector<double>{after[4], after[0], after[3], after[1], after[2]});

    CHECK_THROWS(forecast_direct(models, window, 4));
}

TEST_CASE("mimo forecast examples", "[strategies]")
{
    const LagWindow window({1.0, -1.0}, {true, true});
    models::MlpModel m;
    m.hidden_weights.resize(2, 2);
    m.hidden_weights << 2.0, 1.0, -1.0, -3.0;
    m.hidden_biases.resize(2);
    m.hidden_biases << 0.5, 0.25;
    m.output_weights.resize(3, 2);
    m.output_weights << 1.0, -2.0, 0.5, 3.0, 0.0, 1.0;
    m.output_biases.resize(3);
    m.output_biases << 0.1, -0.2, 0.0;
    const MultiPredictor mlp = [&](std::span<const double> x) { return models::predict_mlp(m, x); };
    const auto out = forecast_mimo(mlp, window, 3);
    REQUIRE(out.size() == 3);
    CHECK_THAT(out[0], WithinAbs(1.5 - 4.5 + 0.1, 1e-15));
    CHECK_THAT(out[1], WithinAbs(0.75 + 6.75 - 0.2, 1e-15));
    CHECK_THAT(out[2], WithinAbs(2.25, 1e-15));
    CHECK_THROWS_AS(forecast_mimo(mlp, window, 2), DimensionError);

    std::mt19937_64 gen(73);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix x(15, 2);
    Matrix y(15, 4);
    for (Eigen::Index i = 0; i < 15; ++i) {
        x.row(i) << u(gen), u(gen);
        y.row(i) << 0.8, 0.8, 0.8, 0.8;
    }
    const auto msvr = models::train_msvr(x, y, {.C = 100.0, .epsilon = 1e-4, .gamma = 0.5}).model;
    const MultiPredictor pm = [&](std::span<const double> v) { return models::predict_msvr(msvr, v); };
    const auto flat = forecast_mimo(pm, window, 4);
    for (double v : flat) {
        CHECK_THAT(v, WithinAbs(0.8, 1e-6));
    }
}

TEST_CASE("bundle validation enforces model multiplicity", "[strategies]")
{
    StrategyBundle b;
    b.strategy = StrategyKind::Direct;
    b.mask = {true, true, false};
    b.d = 3;
    b.horizon = 3;
    b.models.assign(2, persistence_mlp(2, 1));
    CHECK_THROWS(b.validate());
    b.models.assign(3, persistence_mlp(2, 1));
    CHECK_NOTHROW(b.validate());
    b.models[1] = persistence_mlp(3, 1);
    CHECK_THROWS_AS(b.validate(), DimensionError);

    b.strategy = StrategyKind::Mimo;
    b.models.assign(1, persistence_mlp(2, 2));
    CHECK_THROWS_AS(b.validate(), DimensionError);
    b.models.assign(1, persistence_mlp(2, 3));
    CHECK_NOTHROW(b.validate());
    const std::vector<double> wrong{1.0, 2.0};
    CHECK_THROWS_AS(b.forecast(wrong), DimensionError);
}

TEST_CASE("rollout examples", "[strategies]")
{
    std::vector<double> rates;
    for (int i = 0; i < 30; ++i) {
        rates.push_back(2.0 + std::sin(0.4 * i));
    }
    const auto log_series = data::log_transform(series_of(rates));
    const auto ds = data::make_supervised(log_series, 4, 3);

    StrategyBundle b;
    b.strategy = StrategyKind::Iterated;
    b.mask = {true, false, true, false};
    b.d = 4;
    b.horizon = 3;
    b.models.emplace_back(persistence_mlp(2, 1));

    const auto table = rollout(b, ds);
    CHECK(table.horizon == 3);
    REQUIRE(table.entries.size() == ds.rows() * 3);
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const std::size_t t = ds.origin_index[i];
        for (std::size_t h = 0; h < 3; ++h) {
            const auto& e = table.entries[i * 3 + h];
            CHECK(e.origin_index == t);
            CHECK(e.lead_time == h + 1);
            CHECK_THAT(e.predicted, WithinRel(rates[t], 1e-12));
            CHECK_THAT(e.observed, WithinRel(rates[t + h + 1], 1e-12));
        }
    }

    const auto empty = rollout(b, ds.slice(0, 0));
    CHECK(empty.entries.empty());

    const auto other = data::make_supervised(log_series, 4, 2);
    CHECK_THROWS_AS(rollout(b, other), DimensionError);

    std::ostringstream csv;
    write_forecast_csv(csv, table, log_series);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "origin_year,origin_week,lead_time,predicted,observed");
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        ++count;
    }
    CHECK(count == table.entries.size());
}

TEST_CASE("all strategies agree at H=1 for a shared one-step model", "[strategies]")
{
    std::mt19937_64 gen(79);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix x(25, 3);
    Matrix y(25, 1);
    for (Eigen::Index i = 0; i < 25; ++i) {
        x.row(i) << u(gen), u(gen), u(gen);
        y(i, 0) = x(i, 0) - x(i, 2) * x(i, 1);
    }
    models::MlpTrainOptions options;
    options.hidden_size = 6;
    const std::vector<models::Regressor> candidates{
        models::train_mlp(x, y, options),
        models::train_msvr(x, y, {.C = 4.0, .epsilon = 0.01, .gamma = 0.5}).model,
    };
    for (const auto& model : candidates) {
        std::vector<StrategyBundle> bundles;
        for (auto kind : {StrategyKind::Iterated, StrategyKind::Direct, StrategyKind::Mimo}) {
            StrategyBundle b;
            b.strategy = kind;
            b.mask = {true, true, false, true};
            b.d = 4;
            b.horizon = 1;
            b.models = {model};
            bundles.push_back(b);
        }
        for (int trial = 0; trial < 50; ++trial) {
            const std::vector<double> lags{u(gen), u(gen), u(gen), u(gen)};
            const auto a = bundles[0].forecast(lags);
            CHECK(bundles[1].forecast(lags) == a);
            CHECK(bundles[2].forecast(lags) == a);
        }
    }
}
