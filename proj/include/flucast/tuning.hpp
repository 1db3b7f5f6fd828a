#pragma once

#include "flucast/clpso.hpp"
#include "flucast/codec.hpp"
#include "flucast/data.hpp"
#include "flucast/strategies.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace flucast::tuning {

enum class ModelKind { Svr, Mlp };

std::string_view to_string(ModelKind kind);
ModelKind model_from_string(std::string_view name);

/// Ordered candidate lists for one (model, strategy) combination.
struct CandidateGrid {
    ModelKind model = ModelKind::Svr;
    strategies::StrategyKind strategy = strategies::StrategyKind::Iterated;
    std::vector<clpso::ParameterSegment> parameters;
};

/// g_i = first * (last / first)^(i / (n - 1)), i = 0..n-1, with exact endpoints.
std::vector<double> geometric_sequence(double first, double last, std::size_t n);

/// SVR: C (16 values 1..100), epsilon (4 values 1e-4..1e-2), gamma {0.05, 0.1, 0.2, 0.4}.
/// MLP: hidden_size {10, 20, 50, 100}.
CandidateGrid build_grid(ModelKind model, strategies::StrategyKind strategy);

clpso::ParticleCodec make_codec(const CandidateGrid& grid, std::size_t d);

inline constexpr std::size_t kCrossValidationFolds = 5;

/// Contiguous [begin, end) row blocks; the first n % k blocks get one extra row.
std::vector<std::pair<std::size_t, std::size_t>> blocked_folds(std::size_t n, std::size_t k);

/// Train the model(s) a strategy needs on log-space data, using the config's mask and
/// hyperparameters. SVR with MIMO is the multi-output SVR.
strategies::StrategyBundle fit_bundle(const clpso::ModelConfig& config, const data::SupervisedDataset& train,
                                      ModelKind model, strategies::StrategyKind strategy, std::uint64_t seed);

/// Blocked 5-fold cross-validated MSE in log space over all lead times.
///
/// Training failures return +inf and append a message to `warnings` when given.
double fitness(const clpso::ModelConfig& config, const data::SupervisedDataset& train, ModelKind model,
               strategies::StrategyKind strategy, std::uint64_t seed, std::vector<std::string>* warnings = nullptr);

struct TrainedPipeline {
    ModelKind model = ModelKind::Svr;
    strategies::StrategyBundle bundle;
    clpso::ModelConfig config;
    double fitness = 0.0;
};

struct TuningResult {
    TrainedPipeline pipeline;
    clpso::Bits gbest_bits;
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    double wall_seconds = 0.0;
    std::vector<std::string> warnings;
    std::vector<clpso::GenerationRecord> history;
};

/// Run CLPSO over feature masks and hyperparameters, then retrain the decoded gbest on
/// the full training set.
TuningResult tune_and_train(const data::SupervisedDataset& train, ModelKind model, strategies::StrategyKind strategy,
                            std::size_t horizon, const clpso::SwarmConfig& swarm);

nlohmann::json config_to_json(const clpso::ModelConfig& config);
clpso::ModelConfig config_from_json(const nlohmann::json& doc);

nlohmann::json pipeline_to_json(const TrainedPipeline& pipeline);
TrainedPipeline pipeline_from_json(const nlohmann::json& doc);

/// gbest bits, decoded config, fitness, generation count and wall time.
nlohmann::json tuning_result_to_json(const TuningResult& result);

} // namespace flucast::tuning
