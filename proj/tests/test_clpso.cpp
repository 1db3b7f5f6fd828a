#include "flucast/clpso.hpp"
#include "flucast/errors.hpp"

#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

using namespace flucast;
using namespace flucast::clpso;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Particle> swarm_with(const std::vector<double>& pbest_fitness, std::size_t M, double pc)
{
    std::vector<Particle> swarm(pbest_fitness.size());
    for (std::size_t i = 0; i < swarm.size(); ++i) {
        swarm[i].position.assign(M, 0);
        swarm[i].pbest_position.assign(M, static_cast<std::uint8_t>(i % 2));
        swarm[i].pbest_fitness = pbest_fitness[i];
        swarm[i].learning_probability = pc;
    }
    return swarm;
}

double zeros(const Bits& b)
{
    return static_cast<double>(std::count(b.begin(), b.end(), std::uint8_t{0}));
}

} // namespace

TEST_CASE("learning probability endpoints and formula", "[clpso]")
{
    for (std::size_t ps : {2u, 3u, 8u, 40u}) {
        CHECK_THAT(learning_probability(1, ps), WithinAbs(0.05, 1e-12));
        CHECK_THAT(learning_probability(ps, ps), WithinAbs(0.5, 1e-12));
        for (std::size_t i = 2; i <= ps; ++i) {
            CHECK(learning_probability(i, ps) > learning_probability(i - 1, ps));
        }
    }
    const double expected = 0.05 + 0.45 * (std::exp(30.0 / 7.0) - 1.0) / (std::exp(10.0) - 1.0);
    CHECK_THAT(learning_probability(4, 8), WithinAbs(expected, 1e-15));
    CHECK_THROWS(learning_probability(1, 1));
    CHECK_THROWS(learning_probability(0, 8));
    CHECK_THROWS(learning_probability(9, 8));
}

TEST_CASE("all-self exemplar choice reassigns exactly one dimension", "[clpso]")
{
    auto swarm = swarm_with({1.0, 2.0, 3.0, 4.0}, 10, 0.0);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const auto ex = select_exemplars(1, swarm, rng);
        REQUIRE(ex.size() == 10);
        const auto others = std::count_if(ex.begin(), ex.end(), [](std::size_t e) { return e != 1; });
        CHECK(others == 1);
    }
}

TEST_CASE("tournament picks the lower pbest fitness", "[clpso]")
{
    auto swarm = swarm_with({5.0, 3.0, 1.0}, 16, 1.0);
    Rng rng(3);
    const auto ex = select_exemplars(0, swarm, rng);
    for (auto e : ex) {
        CHECK(e == 2);
    }
}

TEST_CASE("a particle never enters its own tournament", "[clpso]")
{
    auto swarm = swarm_with({0.5, 0.1, 0.9, 0.3, 0.7}, 1, 1.0);
    Rng rng(5);
    std::vector<std::size_t> seen(5, 0);
    for (int draw = 0; draw < 10000; ++draw) {
        const auto ex = select_exemplars(3, swarm, rng);
        ++seen[ex[0]];
    }
    CHECK(seen[3] == 0);
    // Particle 1 has the best pbest and wins whenever drawn.
    CHECK(seen[1] > seen[0]);
    CHECK(seen[1] > seen[2]);
}

TEST_CASE("exemplar selection needs three particles", "[clpso]")
{
    auto swarm = swarm_with({1.0, 2.0}, 4, 0.5);
    Rng rng(1);
    CHECK_THROWS(select_exemplars(0, swarm, rng));
}

TEST_CASE("exemplar bits are read per dimension", "[clpso]")
{
    std::vector<Particle> swarm(3);
    swarm[0].pbest_position = {0, 0, 0};
    swarm[1].pbest_position = {1, 1, 1};
    swarm[2].pbest_position = {0, 1, 0};
    const std::vector<std::size_t> idx{1, 2, 0};
    CHECK(exemplar_bits(idx, swarm) == Bits{1, 1, 0});
}

TEST_CASE("velocity update examples", "[clpso]")
{
    const std::vector<double> v{0.5, -1.0, 2.0};
    const Bits x{0, 1, 1};
    const Bits ex{1, 0, 1};
    const std::vector<double> r{0.3, 0.6, 0.9};

    const auto no_learning = update_velocity(v, x, ex, 0.7, 0.0, 6.0, r);
    for (std::size_t m = 0; m < 3; ++m) {
        CHECK(no_learning[m] == 0.7 * v[m]);
    }
    const auto full = update_velocity(v, x, ex, 1.0, 2.0, 6.0, r);
    CHECK(full[2] == 2.0); // pbest bit equals position bit
    CHECK_THAT(full[0], WithinAbs(0.5 + 2.0 * 0.3, 1e-15));
    CHECK_THAT(full[1], WithinAbs(-1.0 - 2.0 * 0.6, 1e-15));

    const std::vector<double> zero{0.0};
    const std::vector<double> half{0.5};
    CHECK(update_velocity(zero, Bits{0}, Bits{1}, 1.0, 2.0, 6.0, half)[0] == 1.0);

    const std::vector<double> big{50.0, -50.0};
    const std::vector<double> rr{0.0, 0.0};
    CHECK(update_velocity(big, Bits{0, 0}, Bits{0, 0}, 1.0, 2.0, 6.0, rr) == std::vector<double>{6.0, -6.0});
    CHECK_THROWS_AS(update_velocity(big, Bits{0}, Bits{0, 0}, 1.0, 2.0, 6.0, rr), DimensionError);

    Rng rng(9);
    const std::vector<double> wide(100, 0.0);
    const auto drawn = update_velocity(wide, Bits(100, 0), Bits(100, 1), 0.9, 2.0, 6.0, rng);
    for (double d : drawn) {
        CHECK(d >= 0.0);
        CHECK(d <= 2.0);
    }
}

TEST_CASE("position update follows the sigmoid", "[clpso]")
{
    CHECK(sigmoid(0.0) == 0.5);
    CHECK_THAT(sigmoid(6.0), WithinAbs(0.99753, 1e-5));
    CHECK_THAT(sigmoid(-6.0), WithinAbs(0.00247, 1e-5));

    const std::vector<double> v{0.0, 0.0};
    const std::vector<double> draws{0.49, 0.5};
    CHECK(update_position(v, draws) == Bits{1, 0});

    Rng rng(21);
    const std::vector<double> zero(10000, 0.0);
    const auto bits = update_position(zero, rng);
    const double ones = static_cast<double>(std::count(bits.begin(), bits.end(), std::uint8_t{1})) / 10000.0;
    CHECK(std::abs(ones - 0.5) <= 0.02);

    const std::vector<double> hot(10000, 6.0);
    const auto hot_bits = update_position(hot, rng);
    CHECK(std::count(hot_bits.begin(), hot_bits.end(), std::uint8_t{1}) >= 9950);

    // -50 clamps to -6 through the velocity update first.
    const std::vector<double> cold_in(100000, -50.0);
    const auto cold = update_velocity(cold_in, Bits(100000, 0), Bits(100000, 0), 1.0, 2.0, 6.0, rng);
    CHECK(cold.front() == -6.0);
    const auto cold_bits = update_position(cold, rng);
    const double rate = static_cast<double>(std::count(cold_bits.begin(), cold_bits.end(), std::uint8_t{1})) / 1e5;
    CHECK(rate > 0.0015);
    CHECK(rate < 0.0035);
}

TEST_CASE("bit string helpers", "[clpso]")
{
    const Bits b = bits_from_string("101100111");
    CHECK(bits_to_string(b) == "101100111");
    CHECK(bits_to_hex(b) == "b38");
    CHECK(bits_to_hex(Bits{}) == "");
    CHECK_THROWS(bits_from_string("10a"));
}

TEST_CASE("onemax converges on most seeds", "[clpso]")
{
    std::size_t hits = 0;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        // A 200 generation budget; the stall rule must not end the search first.
        SwarmConfig config;
        config.seed = seed;
        config.max_iterations = 200;
        config.stall_limit = 200;
        const auto result = run_clpso(zeros, 12, config);
        if (result.best_fitness == 0.0) {
            ++hits;
            CHECK(result.best_bits == Bits(12, 1));
        }
    }
    CHECK(hits >= 28);
}

TEST_CASE("gbest and pbest fitness never increase", "[clpso]")
{
    SwarmConfig config;
    config.seed = 77;
    config.stall_limit = 1000;
    config.max_iterations = 60;
    const auto fitness = [](const Bits& b) {
        double s = 0.0;
        for (std::size_t m = 0; m < b.size(); ++m) {
            s += (b[m] != 0 ? 1.0 : -1.0) * std::sin(static_cast<double>(m) * 1.7);
        }
        return s;
    };
    const auto result = run_clpso(fitness, 24, config);
    REQUIRE(result.history.size() == 60);
    for (std::size_t g = 1; g < result.history.size(); ++g) {
        CHECK(result.history[g].gbest_fitness <= result.history[g - 1].gbest_fitness);
        CHECK(result.history[g].generation == g);
        for (std::size_t i = 0; i < config.swarm_size; ++i) {
            CHECK(result.history[g].pbest_fitness[i] <= result.history[g - 1].pbest_fitness[i]);
        }
    }
    CHECK(result.best_fitness == result.history.back().gbest_fitness);
    CHECK(fitness(result.best_bits) == result.best_fitness);
    CHECK(result.evaluations <= config.swarm_size * config.max_iterations);
}

TEST_CASE("constant fitness stops after the stall limit", "[clpso]")
{
    for (std::size_t limit : {1u, 5u, 30u}) {
        SwarmConfig config;
        config.stall_limit = limit;
        std::size_t calls = 0;
        const auto result = run_clpso(
            [&](const Bits&) {
                ++calls;
                return 1.0;
            },
            10, config);
        // Generation 0 sets gbest; the next `limit` generations fail to improve it.
        CHECK(result.history.size() == limit + 1);
        CHECK(result.evaluations == calls);
    }
}

TEST_CASE("identical seeds give identical trajectories", "[clpso]")
{
    SwarmConfig config;
    config.seed = 1234;
    config.max_iterations = 40;
    const auto f = [](const Bits& b) { return zeros(b) + 0.1 * static_cast<double>(b[3]); };
    const auto a = run_clpso(f, 16, config);
    const auto b = run_clpso(f, 16, config);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t g = 0; g < a.history.size(); ++g) {
        CHECK(a.history[g].gbest_bits == b.history[g].gbest_bits);
        CHECK(a.history[g].pbest_fitness == b.history[g].pbest_fitness);
    }

    config.threads = 4;
    const auto threaded = run_clpso(f, 16, config);
    CHECK(threaded.best_bits == a.best_bits);
    CHECK(threaded.history.size() == a.history.size());

    config.threads = 1;
    config.memoize = false;
    const auto uncached = run_clpso(f, 16, config);
    CHECK(uncached.best_bits == a.best_bits);
    CHECK(uncached.history.size() == a.history.size());
    CHECK(uncached.evaluations >= a.evaluations);
}

TEST_CASE("two-particle swarms run", "[clpso]")
{
    SwarmConfig config;
    config.swarm_size = 2;
    config.max_iterations = 50;
    const auto result = run_clpso(zeros, 6, config);
    CHECK(result.history.front().pbest_fitness.size() == 2);
    CHECK(result.best_fitness <= result.history.front().gbest_fitness);
}

TEST_CASE("invalid fitness values and configs", "[clpso]")
{
    SwarmConfig config;
    try {
        run_clpso([](const Bits&) { return std::numeric_limits<double>::quiet_NaN(); }, 8, config);
        FAIL("expected an error");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find("for bits") != std::string::npos);
    }
    CHECK_THROWS(run_clpso([](const Bits&) { return -std::numeric_limits<double>::infinity(); }, 8, config));

    // +inf is a legal worst value.
    const auto inf_ok = run_clpso(
        [](const Bits& b) { return b[0] == 0 ? std::numeric_limits<double>::infinity() : zeros(b); }, 8, config);
    CHECK(std::isfinite(inf_ok.best_fitness));

    SwarmConfig bad;
    bad.swarm_size = 1;
    CHECK_THROWS(run_clpso(zeros, 4, bad));
    CHECK_THROWS(run_clpso(zeros, 0, config));
}

TEST_CASE("history lines are valid json", "[clpso]")
{
    SwarmConfig config;
    config.max_iterations = 3;
    const auto result = run_clpso(zeros, 9, config);
    std::ostringstream out;
    write_history_jsonl(out, result.history);
    std::istringstream in(out.str());
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        const auto doc = nlohmann::json::parse(line);
        CHECK(doc.at("generation").get<std::size_t>() == n);
        CHECK(doc.at("gbest_bits").get<std::string>() == bits_to_hex(result.history[n].gbest_bits));
        CHECK(doc.at("pbest_fitness").size() == config.swarm_size);
        CHECK(doc.at("gbest_fitness").get<double>() == result.history[n].gbest_fitness);
        ++n;
    }
    CHECK(n == result.history.size());
}
