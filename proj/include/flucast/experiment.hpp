#pragma once

#include "flucast/clpso.hpp"
#include "flucast/data.hpp"
#include "flucast/evaluation.hpp"
#include "flucast/statistics.hpp"
#include "flucast/strategies.hpp"
#include "flucast/tuning.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace flucast::harness {

struct ExperimentConfig {
    std::filesystem::path data_path;
    std::vector<std::size_t> horizons{2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<tuning::ModelKind> models{tuning::ModelKind::Svr, tuning::ModelKind::Mlp};
    std::vector<strategies::StrategyKind> strategies{strategies::StrategyKind::Iterated,
                                                     strategies::StrategyKind::Direct,
                                                     strategies::StrategyKind::Mimo};
    std::size_t repeats = 20;
    std::uint64_t base_seed = 0;
    double train_fraction = 2.0 / 3.0;
    std::size_t d = 20;
    clpso::SwarmConfig swarm;
    std::filesystem::path output_dir = "results";
    bool serial = false;
    std::size_t workers = 0;  // 0: hardware concurrency
    bool save_pipelines = true;

    void validate() const;
};

/// Unknown keys are rejected. Missing keys keep their defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// "2..10" or "2,4,6".
std::vector<std::size_t> parse_horizons(const std::string& text);

/// Run seed for one cell: derive_seed(base_seed + repeat, {model, strategy, horizon}).
std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t repeat, tuning::ModelKind model,
                        strategies::StrategyKind strategy, std::size_t horizon);

/// "SVR-Iter", "MLP-MIMO", ...
std::string combo_label(tuning::ModelKind model, strategies::StrategyKind strategy);

struct RunRecord {
    tuning::ModelKind model = tuning::ModelKind::Svr;
    strategies::StrategyKind strategy = strategies::StrategyKind::Iterated;
    std::size_t horizon = 0;
    std::size_t repeat = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    bool ok = false;
    std::string error;
    double wall_seconds = 0.0;
    double fitness = 0.0;
    std::size_t generations = 0;
    std::size_t evaluations = 0;
    evaluation::MetricRow metrics;
    std::vector<std::string> warnings;
    nlohmann::json tuned_config;  // decoded gbest, null on failure
};

nlohmann::json record_to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& doc);
void write_ledger(const std::filesystem::path& path, const std::vector<RunRecord>& ledger);
std::vector<RunRecord> read_ledger(const std::filesystem::path& path);

/// Per-repeat scores and their summary for one (model, strategy, horizon) cell.
struct CellSummary {
    tuning::ModelKind model = tuning::ModelKind::Svr;
    strategies::StrategyKind strategy = strategies::StrategyKind::Iterated;
    std::size_t horizon = 0;
    std::vector<std::size_t> repeats;                 // successful repeats, ascending
    std::vector<evaluation::MetricValues> scores;     // aligned with `repeats`
    evaluation::MetricValues mean;
    evaluation::MetricValues stddev;                  // sample standard deviation, 0 for one repeat
};

struct SignificanceResult {
    std::size_t horizon = 0;
    evaluation::Metric metric = evaluation::Metric::Rmse;
    std::vector<std::string> treatments;
    std::vector<std::size_t> blocks;  // repeats shared by every treatment
    evaluation::FriedmanResult friedman;
    double critical_difference = 0.0;
    std::vector<std::vector<bool>> significant;
};

struct Report {
    std::vector<std::pair<tuning::ModelKind, strategies::StrategyKind>> combos;
    std::vector<std::size_t> horizons;
    std::vector<CellSummary> cells;  // combo-major, then horizon
    std::vector<SignificanceResult> significance;
    std::size_t failed_runs = 0;

    const CellSummary& cell(tuning::ModelKind model, strategies::StrategyKind strategy, std::size_t horizon) const;
    /// Every cell has at least one successful repeat.
    bool complete() const;
};

/// Combos and horizons are taken in first-appearance order of the ledger.
Report build_report(const std::vector<RunRecord>& ledger);

/// metrics_<METRIC>.csv, significance_h<H>_<METRIC>.json and report.json, plus the plot data.
void write_report(const Report& report, const std::filesystem::path& dir);

/// curves_<METRIC>.csv: model, strategy, horizon, mean, std. Throws on an incomplete report.
void emit_plot_data(const Report& report, const std::filesystem::path& dir);

/// Naive forecast: every lead time repeats the last observed value. Rates, not logs.
strategies::ForecastTable persistence_forecast(const data::SupervisedDataset& test_set);

struct BaselineRow {
    std::size_t horizon = 0;
    evaluation::MetricRow metrics;
};

struct ExperimentOutcome {
    std::vector<RunRecord> ledger;
    Report report;
    std::vector<BaselineRow> persistence;
    std::vector<nlohmann::json> pipelines;  // aligned with ledger, null on failure
    bool partial_failure = false;
};

/// Full loop over horizons, combinations and repeats. Data errors throw; per-run
/// failures are recorded in the ledger.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// Writes ledger.jsonl, pipelines/ (when enabled), baseline_persistence.csv and the report.
void write_outputs(const ExperimentConfig& config, const ExperimentOutcome& outcome);

/// Series preparation shared by the CLI and the experiment: impute, then log10.
data::IliSeries prepare_log_series(const data::IliSeries& raw);

/// Test-period outbreak windows for horizon H: series indices
/// [first_origin + H, last_origin + 1], which every lead time covers.
std::vector<evaluation::OutbreakWindow> evaluation_windows(const data::IliSeries& series,
                                                           const data::SupervisedDataset& test_set,
                                                           std::size_t horizon);

} // namespace flucast::harness
