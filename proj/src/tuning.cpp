#include "flucast/tuning.hpp"

#include "flucast/errors.hpp"
#include "flucast/kernel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

namespace flucast::tuning {

namespace {

using strategies::StrategyKind;

Matrix masked_columns(const Matrix& inputs, const strategies::FeatureMask& mask)
{
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (mask[j]) {
            cols.push_back(static_cast<Eigen::Index>(j));
        }
    }
    return inputs(Eigen::all, cols);
}

std::span<const double> column(const Matrix& m, Eigen::Index c, std::vector<double>& scratch)
{
    scratch.resize(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        scratch[static_cast<std::size_t>(r)] = m(r, c);
    }
    return scratch;
}

} // namespace

std::string_view to_string(ModelKind kind)
{
    return kind == ModelKind::Svr ? "SVR" : "MLP";
}

ModelKind model_from_string(std::string_view name)
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "svr") {
        return ModelKind::Svr;
    }
    if (lower == "mlp") {
        return ModelKind::Mlp;
    }
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

std::vector<double> geometric_sequence(double first, double last, std::size_t n)
{
    if (n < 2 || !(first > 0.0) || !(last > 0.0)) {
        throw std::invalid_argument("geometric_sequence: need n >= 2 and positive endpoints");
    }
    std::vector<double> out(n);
    const double ratio = last / first;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = first * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n - 1));
    }
    out.front() = first;
    out.back() = last;
    return out;
}

CandidateGrid build_grid(ModelKind model, StrategyKind strategy)
{
    CandidateGrid grid;
    grid.model = model;
    grid.strategy = strategy;
    if (model == ModelKind::Svr) {
        grid.parameters.emplace_back("C", geometric_sequence(1.0, 100.0, 16));
        grid.parameters.emplace_back("epsilon", geometric_sequence(1e-4, 1e-2, 4));
        grid.parameters.emplace_back("gamma", std::vector<double>{0.05, 0.1, 0.2, 0.4});
    } else {
        grid.parameters.emplace_back("hidden_size", std::vector<double>{10, 20, 50, 100});
    }
    return grid;
}

clpso::ParticleCodec make_codec(const CandidateGrid& grid, std::size_t d)
{
    return clpso::ParticleCodec(d, grid.parameters);
}

std::vector<std::pair<std::size_t, std::size_t>> blocked_folds(std::size_t n, std::size_t k)
{
    if (k == 0 || n < k) {
        throw InsufficientDataError("cross-validation needs at least " + std::to_string(k) + " rows, have " +
                                    std::to_string(n));
    }
    std::vector<std::pair<std::size_t, std::size_t>> folds;
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t begin = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        folds.emplace_back(begin, begin + size);
        begin += size;
    }
    return folds;
}

strategies::StrategyBundle fit_bundle(const clpso::ModelConfig& config, const data::SupervisedDataset& train,
                                      ModelKind model, StrategyKind strategy, std::uint64_t seed)
{
    if (config.feature_mask.size() != train.d) {
        throw DimensionError("fit_bundle: mask length does not match the dataset's d");
    }
    if (strategies::popcount(config.feature_mask) == 0) {
        throw std::invalid_argument("fit_bundle: feature mask selects no lags");
    }
    strategies::StrategyBundle bundle;
    bundle.strategy = strategy;
    bundle.mask = config.feature_mask;
    bundle.d = train.d;
    bundle.horizon = train.horizon;

    const Matrix x = masked_columns(train.inputs, config.feature_mask);
    const std::size_t H = train.horizon;
    std::vector<double> scratch;

    if (model == ModelKind::Svr) {
        const double C = config.get("C");
        const double eps = config.get("epsilon");
        const double gamma = config.get("gamma");
        if (strategy == StrategyKind::Mimo) {
            models::MsvrParams params{.C = C, .epsilon = eps, .gamma = gamma};
            bundle.models.emplace_back(models::train_msvr(x, train.targets, params).model);
        } else {
            const models::SvrParams params{.C = C, .epsilon = eps, .gamma = gamma};
            const Matrix gram = models::rbf_gram(x, gamma);
            const std::size_t count = strategy == StrategyKind::Direct ? H : 1;
            for (std::size_t h = 0; h < count; ++h) {
                bundle.models.emplace_back(
                    models::train_svr(x, gram, column(train.targets, static_cast<Eigen::Index>(h), scratch), params));
            }
        }
    } else {
        models::MlpTrainOptions options;
        options.hidden_size = static_cast<std::size_t>(config.get("hidden_size"));
        if (strategy == StrategyKind::Mimo) {
            options.seed = derive_seed(seed, {0});
            bundle.models.emplace_back(models::train_mlp(x, train.targets, options));
        } else {
            const std::size_t count = strategy == StrategyKind::Direct ? H : 1;
            for (std::size_t h = 0; h < count; ++h) {
                options.seed = derive_seed(seed, {h});
                const Matrix y = train.targets.col(static_cast<Eigen::Index>(h));
                bundle.models.emplace_back(models::train_mlp(x, y, options));
            }
        }
    }
    return bundle;
}

double fitness(const clpso::ModelConfig& config, const data::SupervisedDataset& train, ModelKind model,
               StrategyKind strategy, std::uint64_t seed, std::vector<std::string>* warnings)
{
    const std::size_t n = train.rows();
    const auto folds = blocked_folds(n, kCrossValidationFolds);
    double sse = 0.0;
    std::size_t cells = 0;
    try {
        for (std::size_t f = 0; f < folds.size(); ++f) {
            const auto [begin, end] = folds[f];
            std::vector<std::size_t> rows;
            rows.reserve(n - (end - begin));
            for (std::size_t r = 0; r < n; ++r) {
                if (r < begin || r >= end) {
                    rows.push_back(r);
                }
            }
            const auto bundle = fit_bundle(config, train.select(rows), model, strategy, derive_seed(seed, {f}));
            for (std::size_t r = begin; r < end; ++r) {
                const auto row = static_cast<Eigen::Index>(r);
                const auto predicted = bundle.forecast(row_span(train.inputs, row));
                for (std::size_t h = 0; h < train.horizon; ++h) {
                    const double err = predicted[h] - train.targets(row, static_cast<Eigen::Index>(h));
                    sse += err * err;
                    ++cells;
                }
            }
        }
    } catch (const std::exception& e) {
        if (warnings != nullptr) {
            warnings->push_back(std::string("training failed: ") + e.what());
        }
        return std::numeric_limits<double>::infinity();
    }
    const double mse = sse / static_cast<double>(cells);
    if (!std::isfinite(mse)) {
        if (warnings != nullptr) {
            warnings->push_back("non-finite cross-validation error");
        }
        return std::numeric_limits<double>::infinity();
    }
    return mse;
}

TuningResult tune_and_train(const data::SupervisedDataset& train, ModelKind model, StrategyKind strategy,
                            std::size_t horizon, const clpso::SwarmConfig& swarm)
{
    if (train.horizon != horizon) {
        throw DimensionError("tune_and_train: dataset horizon " + std::to_string(train.horizon) +
                             " does not match requested horizon " + std::to_string(horizon));
    }
    if (train.rows() < kCrossValidationFolds) {
        throw InsufficientDataError("tune_and_train: need at least " + std::to_string(kCrossValidationFolds) +
                                    " training rows");
    }
    const auto started = std::chrono::steady_clock::now();
    const auto grid = build_grid(model, strategy);
    const auto codec = make_codec(grid, train.d);
    const std::uint64_t fit_seed = derive_seed(swarm.seed, {0xF17});

    TuningResult result;
    std::vector<std::string> warnings;
    std::mutex warnings_mutex;
    const clpso::FitnessFn objective = [&](const clpso::Bits& bits) {
        std::vector<std::string> local;
        const double value = fitness(codec.decode(bits), train, model, strategy, fit_seed, &local);
        if (!local.empty()) {
            const std::lock_guard lock(warnings_mutex);
            warnings.insert(warnings.end(), local.begin(), local.end());
        }
        return value;
    };
    auto search = clpso::run_clpso(objective, codec.dimension(), swarm);

    result.gbest_bits = search.best_bits;
    result.generations = search.history.size();
    result.evaluations = search.evaluations;
    result.history = std::move(search.history);
    result.pipeline.model = model;
    result.pipeline.config = codec.decode(search.best_bits);
    result.pipeline.fitness = search.best_fitness;
    result.pipeline.bundle = fit_bundle(result.pipeline.config, train, model, strategy, fit_seed);
    result.pipeline.bundle.validate();
    result.warnings = std::move(warnings);
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

nlohmann::json config_to_json(const clpso::ModelConfig& config)
{
    std::string mask;
    for (bool b : config.feature_mask) {
        mask.push_back(b ? '1' : '0');
    }
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json order = nlohmann::json::array();
    for (const auto& [name, value] : config.parameters) {
        params[name] = value;
        order.push_back(name);
    }
    return {{"feature_mask", mask}, {"parameters", params}, {"parameter_order", order}};
}

clpso::ModelConfig config_from_json(const nlohmann::json& doc)
{
    clpso::ModelConfig config;
    for (char c : doc.at("feature_mask").get<std::string>()) {
        if (c != '0' && c != '1') {
            throw std::invalid_argument("feature_mask must be a 0/1 string");
        }
        config.feature_mask.push_back(c == '1');
    }
    for (const auto& name : doc.at("parameter_order")) {
        const auto key = name.get<std::string>();
        config.parameters.emplace_back(key, doc.at("parameters").at(key).get<double>());
    }
    return config;
}

nlohmann::json pipeline_to_json(const TrainedPipeline& pipeline)
{
    auto models = nlohmann::json::array();
    for (const auto& m : pipeline.bundle.models) {
        models.push_back(models::to_json(m));
    }
    return {
        {"model", to_string(pipeline.model)},
        {"strategy", strategies::to_string(pipeline.bundle.strategy)},
        {"d", pipeline.bundle.d},
        {"horizon", pipeline.bundle.horizon},
        {"fitness", pipeline.fitness},
        {"config", config_to_json(pipeline.config)},
        {"models", models},
    };
}

TrainedPipeline pipeline_from_json(const nlohmann::json& doc)
{
    TrainedPipeline p;
    p.model = model_from_string(doc.at("model").get<std::string>());
    p.config = config_from_json(doc.at("config"));
    p.fitness = doc.at("fitness").is_null() ? std::numeric_limits<double>::infinity() : doc.at("fitness").get<double>();
    p.bundle.strategy = strategies::strategy_from_string(doc.at("strategy").get<std::string>());
    p.bundle.d = doc.at("d").get<std::size_t>();
    p.bundle.horizon = doc.at("horizon").get<std::size_t>();
    p.bundle.mask = p.config.feature_mask;
    for (const auto& m : doc.at("models")) {
        p.bundle.models.push_back(models::regressor_from_json(m));
    }
    p.bundle.validate();
    return p;
}

nlohmann::json tuning_result_to_json(const TuningResult& result)
{
    return {
        {"model", to_string(result.pipeline.model)},
        {"strategy", strategies::to_string(result.pipeline.bundle.strategy)},
        {"horizon", result.pipeline.bundle.horizon},
        {"gbest_bits", clpso::bits_to_string(result.gbest_bits)},
        {"gbest_hex", clpso::bits_to_hex(result.gbest_bits)},
        {"config", config_to_json(result.pipeline.config)},
        {"fitness", result.pipeline.fitness},
        {"generations", result.generations},
        {"evaluations", result.evaluations},
        {"wall_seconds", result.wall_seconds},
        {"warnings", result.warnings},
    };
}

} // namespace flucast::tuning
