#pragma once

#include "flucast/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace flucast::clpso {

/// A binary particle position, one 0/1 byte per dimension.
using Bits = std::vector<std::uint8_t>;

std::string bits_to_hex(const Bits& bits);
std::string bits_to_string(const Bits& bits);
Bits bits_from_string(const std::string& text);

struct SwarmConfig {
    std::size_t swarm_size = 8;
    std::size_t max_iterations = 200;
    std::size_t stall_limit = 30;
    std::size_t refreshing_gap = 8;
    double acceleration = 2.0;
    double inertia_start = 0.9;
    double inertia_end = 0.4;
    double velocity_clamp = 6.0;
    std::uint64_t seed = 0;
    /// Worker threads for fitness evaluation; results do not depend on this.
    std::size_t threads = 1;
    /// Reuse fitness values of previously seen positions. Requires a pure fitness.
    bool memoize = true;

    void validate() const;
};

struct Particle {
    Bits position;
    std::vector<double> velocity;
    Bits pbest_position;
    double pbest_fitness = 0.0;
    std::size_t stagnation_counter = 0;
    std::vector<std::size_t> exemplar_indices;
    double learning_probability = 0.0;
};

/// Pc_i for the 1-based particle index i in a swarm of ps particles.
double learning_probability(std::size_t i, std::size_t ps);

/// Per-dimension exemplar particle for `particle_index` (0-based).
///
/// With probability 1 - Pc a dimension learns from the particle itself; otherwise
/// from the better (lower pbest fitness) of two distinct other particles. If every
/// dimension chose the particle itself, one random dimension is reassigned to a
/// random other particle.
std::vector<std::size_t> select_exemplars(std::size_t particle_index, std::span<const Particle> swarm, Rng& rng);

/// Bits of the exemplar pbests, dimension by dimension.
Bits exemplar_bits(std::span<const std::size_t> exemplar_indices, std::span<const Particle> swarm);

/// v' = w v + c r (pbest_exemplar - x), clamped to [-vmax, vmax], with r supplied.
std::vector<double> update_velocity(std::span<const double> velocity, const Bits& position, const Bits& exemplar,
                                    double inertia, double acceleration, double vmax, std::span<const double> r);
std::vector<double> update_velocity(std::span<const double> velocity, const Bits& position, const Bits& exemplar,
                                    double inertia, double acceleration, double vmax, Rng& rng);

double sigmoid(double v);

/// Bit m is 1 iff draws[m] < S(v_m).
Bits update_position(std::span<const double> velocity, std::span<const double> draws);
Bits update_position(std::span<const double> velocity, Rng& rng);

struct GenerationRecord {
    std::size_t generation = 0;
    double gbest_fitness = 0.0;
    Bits gbest_bits;
    std::vector<double> pbest_fitness;
};

struct ClpsoResult {
    Bits best_bits;
    double best_fitness = 0.0;
    /// Entry 0 is the initial swarm; one entry per generation thereafter.
    std::vector<GenerationRecord> history;
    /// Number of calls made to the fitness function.
    std::size_t evaluations = 0;
};

using FitnessFn = std::function<double(const Bits&)>;

/// Minimise `fitness` over M-bit strings. Stops after max_iterations generations
/// (counting the initial one) or stall_limit consecutive generations without a
/// strict gbest improvement. NaN or -inf fitness throws; +inf is the worst value.
ClpsoResult run_clpso(const FitnessFn& fitness, std::size_t M, const SwarmConfig& config);

/// One JSON object per line: generation, gbest_fitness, gbest_bits (hex), pbest_fitness.
void write_history_jsonl(std::ostream& out, const std::vector<GenerationRecord>& history);

} // namespace flucast::clpso
