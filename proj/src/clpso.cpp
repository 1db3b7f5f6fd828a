#include "flucast/clpso.hpp"

#include "flucast/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace flucast::clpso {

namespace {

// Evaluates positions, reusing cached values and fanning uncached ones out to threads.
class Evaluator {
public:
    Evaluator(const FitnessFn& fitness, const SwarmConfig& config) : fitness_(fitness), config_(config) {}

    std::vector<double> operator()(const std::vector<const Bits*>& positions)
    {
        std::vector<const Bits*> pending;
        for (const Bits* p : positions) {
            if (!config_.memoize || (!cache_.contains(*p) &&
                                     std::none_of(pending.begin(), pending.end(),
                                                  [p](const Bits* q) { return *q == *p; }))) {
                pending.push_back(p);
            }
        }
        std::vector<double> computed(pending.size());
        evaluate_all(pending, computed);
        evaluations_ += pending.size();

        for (std::size_t i = 0; i < pending.size(); ++i) {
            const double f = computed[i];
            if (std::isnan(f) || f == -std::numeric_limits<double>::infinity()) {
                throw std::runtime_error("fitness returned " + std::to_string(f) + " for bits " +
                                         bits_to_hex(*pending[i]));
            }
            if (config_.memoize) {
                cache_.emplace(*pending[i], f);
            }
        }

        std::vector<double> out;
        out.reserve(positions.size());
        if (config_.memoize) {
            for (const Bits* p : positions) {
                out.push_back(cache_.at(*p));
            }
        } else {
            out = std::move(computed);
        }
        return out;
    }

    std::size_t evaluations() const { return evaluations_; }

private:
    void evaluate_all(const std::vector<const Bits*>& pending, std::vector<double>& results) const
    {
        const std::size_t workers = std::min(std::max<std::size_t>(config_.threads, 1), pending.size());
        if (workers <= 1) {
            for (std::size_t i = 0; i < pending.size(); ++i) {
                results[i] = fitness_(*pending[i]);
            }
            return;
        }
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < pending.size(); i += workers) {
                        results[i] = fitness_(*pending[i]);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    const FitnessFn& fitness_;
    const SwarmConfig& config_;
    std::map<Bits, double> cache_;
    std::size_t evaluations_ = 0;
};

std::size_t argmin_pbest(const std::vector<Particle>& swarm)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < swarm.size(); ++i) {
        if (swarm[i].pbest_fitness < swarm[best].pbest_fitness) {
            best = i;
        }
    }
    return best;
}

GenerationRecord snapshot(std::size_t generation, double gbest_fitness, const Bits& gbest_bits,
                          const std::vector<Particle>& swarm)
{
    GenerationRecord rec;
    rec.generation = generation;
    rec.gbest_fitness = gbest_fitness;
    rec.gbest_bits = gbest_bits;
    rec.pbest_fitness.reserve(swarm.size());
    for (const auto& p : swarm) {
        rec.pbest_fitness.push_back(p.pbest_fitness);
    }
    return rec;
}

} // namespace

std::string bits_to_hex(const Bits& bits)
{
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    for (std::size_t start = 0; start < bits.size(); start += 4) {
        unsigned nibble = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            nibble <<= 1U;
            if (start + k < bits.size() && bits[start + k] != 0) {
                nibble |= 1U;
            }
        }
        out.push_back(kDigits[nibble]);
    }
    return out;
}

std::string bits_to_string(const Bits& bits)
{
    std::string out;
    out.reserve(bits.size());
    for (auto b : bits) {
        out.push_back(b != 0 ? '1' : '0');
    }
    return out;
}

Bits bits_from_string(const std::string& text)
{
    Bits out;
    out.reserve(text.size());
    for (char c : text) {
        if (c != '0' && c != '1') {
            throw std::invalid_argument("bit string may only contain 0 and 1");
        }
        out.push_back(c == '1' ? 1 : 0);
    }
    return out;
}

void SwarmConfig::validate() const
{
    if (swarm_size < 2) {
        throw std::invalid_argument("swarm size must be at least 2");
    }
    if (max_iterations < 1) {
        throw std::invalid_argument("max_iterations must be at least 1");
    }
    if (!(velocity_clamp > 0.0)) {
        throw std::invalid_argument("velocity clamp must be positive");
    }
}

double learning_probability(std::size_t i, std::size_t ps)
{
    if (ps < 2) {
        throw std::invalid_argument("learning_probability: swarm size must be at least 2");
    }
    if (i < 1 || i > ps) {
        throw std::out_of_range("learning_probability: particle index must lie in [1, ps]");
    }
    const double exponent = 10.0 * static_cast<double>(i - 1) / static_cast<double>(ps - 1);
    return 0.05 + 0.45 * std::expm1(exponent) / std::expm1(10.0);
}

std::vector<std::size_t> select_exemplars(std::size_t particle_index, std::span<const Particle> swarm, Rng& rng)
{
    const std::size_t ps = swarm.size();
    if (ps < 3) {
        throw std::invalid_argument("select_exemplars: tournament needs at least 3 particles");
    }
    if (particle_index >= ps) {
        throw std::out_of_range("select_exemplars: particle index out of range");
    }
    const Particle& self = swarm[particle_index];
    const std::size_t M = self.position.size();

    // Uniform draw from the other ps - 1 particles.
    auto other = [&](std::size_t exclude_a, std::size_t exclude_b) {
        std::size_t pick = 0;
        do {
            pick = rng.index(ps);
        } while (pick == exclude_a || pick == exclude_b);
        return pick;
    };

    std::vector<std::size_t> exemplars(M, particle_index);
    bool learned_from_other = false;
    for (std::size_t m = 0; m < M; ++m) {
        if (rng.uniform() >= self.learning_probability) {
            continue;
        }
        const std::size_t a = other(particle_index, particle_index);
        const std::size_t b = other(particle_index, a);
        exemplars[m] = swarm[b].pbest_fitness < swarm[a].pbest_fitness ? b : a;
        learned_from_other = true;
    }
    if (!learned_from_other && M > 0) {
        const std::size_t m = rng.index(M);
        exemplars[m] = other(particle_index, particle_index);
    }
    return exemplars;
}

Bits exemplar_bits(std::span<const std::size_t> exemplar_indices, std::span<const Particle> swarm)
{
    Bits out(exemplar_indices.size());
    for (std::size_t m = 0; m < exemplar_indices.size(); ++m) {
        out[m] = swarm[exemplar_indices[m]].pbest_position.at(m);
    }
    return out;
}

std::vector<double> update_velocity(std::span<const double> velocity, const Bits& position, const Bits& exemplar,
                                    double inertia, double acceleration, double vmax, std::span<const double> r)
{
    const std::size_t M = velocity.size();
    if (position.size() != M || exemplar.size() != M || r.size() != M) {
        throw DimensionError("update_velocity: dimension mismatch");
    }
    std::vector<double> out(M);
    for (std::size_t m = 0; m < M; ++m) {
        const double pull = static_cast<double>(exemplar[m]) - static_cast<double>(position[m]);
        const double v = inertia * velocity[m] + acceleration * r[m] * pull;
        out[m] = std::clamp(v, -vmax, vmax);
    }
    return out;
}

std::vector<double> update_velocity(std::span<const double> velocity, const Bits& position, const Bits& exemplar,
                                    double inertia, double acceleration, double vmax, Rng& rng)
{
    std::vector<double> r(velocity.size());
    for (auto& x : r) {
        x = rng.uniform();
    }
    return update_velocity(velocity, position, exemplar, inertia, acceleration, vmax, r);
}

double sigmoid(double v)
{
    return 1.0 / (1.0 + std::exp(-v));
}

Bits update_position(std::span<const double> velocity, std::span<const double> draws)
{
    if (velocity.size() != draws.size()) {
        throw DimensionError("update_position: dimension mismatch");
    }
    Bits out(velocity.size());
    for (std::size_t m = 0; m < velocity.size(); ++m) {
        out[m] = draws[m] < sigmoid(velocity[m]) ? 1 : 0;
    }
    return out;
}

Bits update_position(std::span<const double> velocity, Rng& rng)
{
    std::vector<double> draws(velocity.size());
    for (auto& x : draws) {
        x = rng.uniform();
    }
    return update_position(velocity, draws);
}

ClpsoResult run_clpso(const FitnessFn& fitness, std::size_t M, const SwarmConfig& config)
{
    config.validate();
    if (M < 1) {
        throw std::invalid_argument("run_clpso: particle dimension must be at least 1");
    }
    const std::size_t ps = config.swarm_size;
    Evaluator evaluate(fitness, config);

    std::vector<Particle> swarm(ps);
    for (std::size_t i = 0; i < ps; ++i) {
        Rng rng(derive_seed(config.seed, {i, 0}));
        auto& p = swarm[i];
        p.position.resize(M);
        p.velocity.resize(M);
        for (std::size_t m = 0; m < M; ++m) {
            p.position[m] = rng.uniform() < 0.5 ? 1 : 0;
        }
        for (std::size_t m = 0; m < M; ++m) {
            p.velocity[m] = rng.uniform(-1.0, 1.0);
        }
        p.learning_probability = learning_probability(i + 1, ps);
    }

    auto positions = [&swarm] {
        std::vector<const Bits*> out;
        out.reserve(swarm.size());
        for (const auto& p : swarm) {
            out.push_back(&p.position);
        }
        return out;
    };

    const auto initial = evaluate(positions());
    for (std::size_t i = 0; i < ps; ++i) {
        swarm[i].pbest_position = swarm[i].position;
        swarm[i].pbest_fitness = initial[i];
    }
    const bool tournament = ps >= 3;
    for (std::size_t i = 0; i < ps; ++i) {
        // Two-particle swarms have no tournament; each learns from the other.
        Rng rng(derive_seed(config.seed, {i, 0, 1}));
        swarm[i].exemplar_indices = tournament ? select_exemplars(i, swarm, rng) : std::vector<std::size_t>(M, 1 - i);
    }

    ClpsoResult result;
    std::size_t best = argmin_pbest(swarm);
    result.best_bits = swarm[best].pbest_position;
    result.best_fitness = swarm[best].pbest_fitness;
    result.history.push_back(snapshot(0, result.best_fitness, result.best_bits, swarm));

    std::size_t stall = 0;
    const std::size_t T = config.max_iterations;
    for (std::size_t gen = 1; gen < T; ++gen) {
        const double inertia = config.inertia_start - (config.inertia_start - config.inertia_end) *
                                                          static_cast<double>(gen) / static_cast<double>(T - 1);
        for (std::size_t i = 0; i < ps; ++i) {
            Rng rng(derive_seed(config.seed, {i, gen}));
            auto& p = swarm[i];
            if (p.stagnation_counter > config.refreshing_gap) {
                if (tournament) {
                    p.exemplar_indices = select_exemplars(i, swarm, rng);
                }
                p.stagnation_counter = 0;
            }
            const Bits target = exemplar_bits(p.exemplar_indices, swarm);
            p.velocity = update_velocity(p.velocity, p.position, target, inertia, config.acceleration,
                                         config.velocity_clamp, rng);
            p.position = update_position(p.velocity, rng);
        }

        const auto values = evaluate(positions());
        for (std::size_t i = 0; i < ps; ++i) {
            auto& p = swarm[i];
            if (values[i] < p.pbest_fitness) {
                p.pbest_fitness = values[i];
                p.pbest_position = p.position;
                p.stagnation_counter = 0;
            } else {
                ++p.stagnation_counter;
            }
        }

        best = argmin_pbest(swarm);
        if (swarm[best].pbest_fitness < result.best_fitness) {
            result.best_fitness = swarm[best].pbest_fitness;
            result.best_bits = swarm[best].pbest_position;
            stall = 0;
        } else {
            ++stall;
        }
        result.history.push_back(snapshot(gen, result.best_fitness, result.best_bits, swarm));
        if (stall >= config.stall_limit) {
            break;
        }
    }
    result.evaluations = evaluate.evaluations();
    return result;
}

void write_history_jsonl(std::ostream& out, const std::vector<GenerationRecord>& history)
{
    for (const auto& rec : history) {
        nlohmann::json line{
            {"generation", rec.generation},
            {"gbest_fitness", rec.gbest_fitness},
            {"gbest_bits", bits_to_hex(rec.gbest_bits)},
            {"pbest_fitness", rec.pbest_fitness},
        };
        out << line.dump() << '\n';
    }
}

} // namespace flucast::clpso
