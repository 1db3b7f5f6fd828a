// Command-line front end: synth, run, tune, forecast, report.

#include "flucast/errors.hpp"
#include "flucast/experiment.hpp"
#include "flucast/synthetic.hpp"
#include "flucast/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace flucast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

std::ofstream open_or_throw(const fs::path& path)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

int cmd_synth(std::size_t years, std::uint64_t seed, int start_year, const fs::path& out)
{
    data::save_series(out, harness::generate_synthetic_ili(years, seed, start_year));
    std::cout << "wrote " << out.string() << '\n';
    return kExitOk;
}

struct RunOptions {
    std::string config_path;
    std::optional<std::string> data;
    std::optional<std::string> horizons;
    std::optional<std::size_t> repeats;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> workers;
    bool serial = false;
    bool no_pipelines = false;
};

int cmd_run(const RunOptions& o)
{
    auto config = o.config_path.empty() ? harness::ExperimentConfig{} : harness::load_experiment_config(o.config_path);
    if (o.data) config.data_path = *o.data;
    if (o.horizons) config.horizons = harness::parse_horizons(*o.horizons);
    if (o.repeats) config.repeats = *o.repeats;
    if (o.seed) config.base_seed = *o.seed;
    if (o.out) config.output_dir = *o.out;
    if (o.workers) config.workers = *o.workers;
    if (o.serial) config.serial = true;
    if (o.no_pipelines) config.save_pipelines = false;
    if (config.data_path.empty()) {
        throw ValidationError("no data file given (config 'data' or --data)");
    }

    const auto outcome = harness::run_experiment(config);
    harness::write_outputs(config, outcome);

    std::size_t failed = 0;
    for (const auto& r : outcome.ledger) {
        if (!r.ok) {
            ++failed;
            std::cerr << "failed: " << harness::combo_label(r.model, r.strategy) << " H=" << r.horizon
                      << " repeat " << r.repeat << ": " << r.error << '\n';
        }
    }
    std::cout << outcome.ledger.size() << " runs, " << failed << " failed; results in "
              << config.output_dir.string() << '\n';
    return failed == 0 ? kExitOk : kExitPartial;
}

struct TuneOptions {
    std::string data;
    std::string model = "SVR";
    std::string strategy = "MIMO";
    std::size_t horizon = 4;
    std::size_t d = 20;
    double train_fraction = 2.0 / 3.0;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string out = "tune_out";
};

int cmd_tune(const TuneOptions& o)
{
    const auto model = tuning::model_from_string(o.model);
    const auto strategy = strategies::strategy_from_string(o.strategy);
    const auto raw = data::load_series(o.data);
    const auto log_series = harness::prepare_log_series(raw);
    const auto rates = data::impute_missing(raw);
    const auto [train, test] =
        data::chronological_split(data::make_supervised(log_series, o.d, o.horizon), o.train_fraction);

    clpso::SwarmConfig swarm;
    swarm.seed = o.seed;
    swarm.threads = o.threads;
    const auto result = tuning::tune_and_train(train, model, strategy, o.horizon, swarm);
    const auto table = strategies::rollout(result.pipeline.bundle, test);
    const auto windows = harness::evaluation_windows(rates, test, o.horizon);
    const auto metrics = evaluation::aggregate_metrics(table, rates, windows, o.horizon);

    const fs::path dir = o.out;
    auto doc = tuning::tuning_result_to_json(result);
    doc["test_metrics"] = {{"MAPE", metrics.mean.mape},
                           {"RMSE", metrics.mean.rmse},
                           {"PWE", metrics.mean.pwe},
                           {"OutbreakMAE", metrics.mean.outbreak_mae}};
    open_or_throw(dir / "tuning.json") << doc.dump(2) << '\n';
    open_or_throw(dir / "pipeline.json") << tuning::pipeline_to_json(result.pipeline).dump() << '\n';
    auto history = open_or_throw(dir / "history.jsonl");
    clpso::write_history_jsonl(history, result.history);
    auto forecasts = open_or_throw(dir / "forecasts.csv");
    strategies::write_forecast_csv(forecasts, table, rates);

    std::cout << "fitness " << result.pipeline.fitness << " after " << result.generations << " generations, test RMSE "
              << metrics.mean.rmse << "; results in " << dir.string() << '\n';
    return kExitOk;
}

int cmd_forecast(const std::string& pipeline_path, const std::string& data_path, const std::string& out_path,
                 bool backtest)
{
    std::ifstream in(pipeline_path);
    if (!in) {
        throw ValidationError("cannot open pipeline " + pipeline_path);
    }
    const auto pipeline = tuning::pipeline_from_json(nlohmann::json::parse(in));
    const auto& bundle = pipeline.bundle;
    const auto raw = data::load_series(data_path);
    const auto log_series = harness::prepare_log_series(raw);
    const auto rates = data::impute_missing(raw);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file = open_or_throw(out_path);
        out = &file;
    }

    if (backtest) {
        const auto dataset = data::make_supervised(log_series, bundle.d, bundle.horizon);
        strategies::write_forecast_csv(*out, strategies::rollout(bundle, dataset), rates);
        return kExitOk;
    }

    // Forecast the weeks after the last observation.
    const auto values = log_series.values();
    if (values.size() < bundle.d) {
        throw InsufficientDataError("series shorter than the pipeline's lag window");
    }
    std::vector<double> lags(values.rbegin(), values.rbegin() + static_cast<std::ptrdiff_t>(bundle.d));
    const auto predicted = bundle.forecast(lags);
    const auto& last = rates[rates.size() - 1];
    *out << "origin_year,origin_week,lead_time,predicted\n" << std::setprecision(17);
    for (std::size_t h = 0; h < predicted.size(); ++h) {
        *out << last.year << ',' << last.week << ',' << h + 1 << ',' << std::pow(10.0, predicted[h]) << '\n';
    }
    return kExitOk;
}

int cmd_report(const std::string& ledger_path, const std::string& out_dir)
{
    const auto ledger = harness::read_ledger(ledger_path);
    if (ledger.empty()) {
        throw ValidationError("ledger is empty");
    }
    const auto report = harness::build_report(ledger);
    harness::write_report(report, out_dir);
    std::cout << "report for " << ledger.size() << " runs written to " << out_dir << '\n';
    return report.failed_runs == 0 ? kExitOk : kExitPartial;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"flucast: multi-step influenza forecasting with CLPSO-tuned SVR, MSVR and MLP"};
    app.require_subcommand(1);

    std::size_t years = 10;
    std::uint64_t synth_seed = 1;
    int start_year = 2010;
    std::string synth_out = "synthetic_ili.csv";
    auto* synth = app.add_subcommand("synth", "Generate a synthetic weekly ILI series");
    synth->add_option("--years", years, "Calendar years")->check(CLI::Range(2, 1000));
    synth->add_option("--seed", synth_seed, "Random seed");
    synth->add_option("--start-year", start_year, "First calendar year");
    synth->add_option("--out", synth_out, "Output CSV");

    RunOptions run_opts;
    auto* run = app.add_subcommand("run", "Run the full experiment");
    run->add_option("--config", run_opts.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
    run->add_option("--data", run_opts.data, "Series CSV (overrides config)");
    run->add_option("--horizons", run_opts.horizons, "Horizons, e.g. 2..10 or 2,4");
    run->add_option("--repeats", run_opts.repeats, "Repeats per cell");
    run->add_option("--seed", run_opts.seed, "Base seed");
    run->add_option("--out", run_opts.out, "Output directory");
    run->add_option("--workers", run_opts.workers, "Worker threads (0: all cores)");
    run->add_flag("--serial", run_opts.serial, "Run cells one at a time");
    run->add_flag("--no-pipelines", run_opts.no_pipelines, "Do not save trained pipelines");

    TuneOptions tune_opts;
    auto* tune = app.add_subcommand("tune", "Tune and train one model/strategy combination");
    tune->add_option("--data", tune_opts.data, "Series CSV")->required()->check(CLI::ExistingFile);
    tune->add_option("--model", tune_opts.model, "SVR or MLP");
    tune->add_option("--strategy", tune_opts.strategy, "Iter, Dir or MIMO");
    tune->add_option("--horizon", tune_opts.horizon, "Forecast horizon")->check(CLI::PositiveNumber);
    tune->add_option("--d", tune_opts.d, "Candidate lags")->check(CLI::PositiveNumber);
    tune->add_option("--train-fraction", tune_opts.train_fraction, "Chronological training share");
    tune->add_option("--seed", tune_opts.seed, "Swarm seed");
    tune->add_option("--threads", tune_opts.threads, "Fitness evaluation threads");
    tune->add_option("--out", tune_opts.out, "Output directory");

    std::string pipeline_path;
    std::string forecast_data;
    std::string forecast_out;
    bool backtest = false;
    auto* forecast = app.add_subcommand("forecast", "Apply a saved pipeline");
    forecast->add_option("--pipeline", pipeline_path, "Pipeline JSON")->required()->check(CLI::ExistingFile);
    forecast->add_option("--data", forecast_data, "Series CSV")->required()->check(CLI::ExistingFile);
    forecast->add_option("--out", forecast_out, "Output CSV (default stdout)");
    forecast->add_flag("--backtest", backtest, "Forecast every origin with observed targets");

    std::string ledger_path;
    std::string report_out = "report";
    auto* report = app.add_subcommand("report", "Recompute tables and plot data from a ledger");
    report->add_option("--ledger", ledger_path, "ledger.jsonl")->required()->check(CLI::ExistingFile);
    report->add_option("--out", report_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*synth) return cmd_synth(years, synth_seed, start_year, synth_out);
        if (*run) return cmd_run(run_opts);
        if (*tune) return cmd_tune(tune_opts);
        if (*forecast) return cmd_forecast(pipeline_path, forecast_data, forecast_out, backtest);
        if (*report) return cmd_report(ledger_path, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
