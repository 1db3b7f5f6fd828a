#include "flucast/experiment.hpp"

#include "flucast/errors.hpp"
#include "flucast/random.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace flucast::harness {

using evaluation::Metric;
using evaluation::MetricRow;
using evaluation::MetricValues;
using nlohmann::json;
using strategies::StrategyKind;
using tuning::ModelKind;

namespace fs = std::filesystem;

namespace {

std::string format_full(double v)
{
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

std::string format_table(double v)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << v;
    return os.str();
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

// FNV-1a over the canonical JSON text.
std::uint64_t fnv1a(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json metric_values_to_json(const MetricValues& m)
{
    return {{"MAPE", m.mape}, {"RMSE", m.rmse}, {"PWE", m.pwe}, {"OutbreakMAE", m.outbreak_mae}};
}

MetricValues metric_values_from_json(const json& doc)
{
    MetricValues m;
    m.mape = doc.at("MAPE").get<double>();
    m.rmse = doc.at("RMSE").get<double>();
    m.pwe = doc.at("PWE").get<double>();
    m.outbreak_mae = doc.at("OutbreakMAE").get<double>();
    return m;
}

json swarm_to_json(const clpso::SwarmConfig& s)
{
    return {{"swarm_size", s.swarm_size},       {"max_iterations", s.max_iterations},
            {"stall_limit", s.stall_limit},     {"refreshing_gap", s.refreshing_gap},
            {"acceleration", s.acceleration},   {"inertia_start", s.inertia_start},
            {"inertia_end", s.inertia_end},     {"velocity_clamp", s.velocity_clamp},
            {"threads", s.threads},             {"memoize", s.memoize}};
}

void reject_unknown(const json& doc, std::initializer_list<const char*> known, const std::string& where)
{
    for (const auto& item : doc.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return item.key() == k; }) ==
            known.end()) {
            throw ValidationError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

clpso::SwarmConfig swarm_from_json(const json& doc, clpso::SwarmConfig s)
{
    reject_unknown(doc,
                   {"swarm_size", "max_iterations", "stall_limit", "refreshing_gap", "acceleration",
                    "inertia_start", "inertia_end", "velocity_clamp", "threads", "memoize"},
                   "swarm");
    auto take = [&](const char* key, auto& field) {
        if (doc.contains(key)) {
            field = doc.at(key).get<std::remove_reference_t<decltype(field)>>();
        }
    };
    take("swarm_size", s.swarm_size);
    take("max_iterations", s.max_iterations);
    take("stall_limit", s.stall_limit);
    take("refreshing_gap", s.refreshing_gap);
    take("acceleration", s.acceleration);
    take("inertia_start", s.inertia_start);
    take("inertia_end", s.inertia_end);
    take("velocity_clamp", s.velocity_clamp);
    take("threads", s.threads);
    take("memoize", s.memoize);
    return s;
}

double sample_stddev(const std::vector<double>& xs, double mean)
{
    if (xs.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

void set_metric(MetricValues& m, Metric metric, double v)
{
    switch (metric) {
    case Metric::Mape: m.mape = v; break;
    case Metric::Rmse: m.rmse = v; break;
    case Metric::Pwe: m.pwe = v; break;
    case Metric::OutbreakMae: m.outbreak_mae = v; break;
    }
}

std::ofstream open_output(const fs::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    return out;
}

// Everything one horizon needs, built once and shared read-only by its cells.
struct HorizonData {
    std::size_t horizon = 0;
    data::SupervisedDataset train;
    data::SupervisedDataset test;
    std::vector<evaluation::OutbreakWindow> windows;
};

struct Cell {
    ModelKind model;
    StrategyKind strategy;
    std::size_t horizon_slot;
    std::size_t repeat;
};

} // namespace

void ExperimentConfig::validate() const
{
    if (horizons.empty() || models.empty() || strategies.empty()) {
        throw ValidationError("experiment: horizons, models and strategies must be non-empty");
    }
    for (std::size_t h : horizons) {
        if (h < 1) {
            throw ValidationError("experiment: horizons must be >= 1");
        }
    }
    if (std::set<std::size_t>(horizons.begin(), horizons.end()).size() != horizons.size()) {
        throw ValidationError("experiment: duplicate horizon");
    }
    if (std::set<ModelKind>(models.begin(), models.end()).size() != models.size() ||
        std::set<StrategyKind>(strategies.begin(), strategies.end()).size() != strategies.size()) {
        throw ValidationError("experiment: duplicate model or strategy");
    }
    if (repeats < 1) {
        throw ValidationError("experiment: repeats must be >= 1");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("experiment: train_fraction must lie in (0, 1)");
    }
    if (d < 1) {
        throw ValidationError("experiment: d must be >= 1");
    }
    swarm.validate();
}

ExperimentConfig experiment_config_from_json(const json& doc)
{
    if (!doc.is_object()) {
        throw ValidationError("experiment config must be a JSON object");
    }
    reject_unknown(doc,
                   {"data", "horizons", "models", "strategies", "repeats", "seed", "train_fraction", "d", "swarm",
                    "output_dir", "serial", "workers", "save_pipelines"},
                   "config");
    ExperimentConfig c;
    try {
        if (doc.contains("data")) {
            c.data_path = doc.at("data").get<std::string>();
        }
        if (doc.contains("horizons")) {
            const auto& h = doc.at("horizons");
            c.horizons = h.is_string() ? parse_horizons(h.get<std::string>()) : h.get<std::vector<std::size_t>>();
        }
        if (doc.contains("models")) {
            c.models.clear();
            for (const auto& m : doc.at("models")) {
                c.models.push_back(tuning::model_from_string(m.get<std::string>()));
            }
        }
        if (doc.contains("strategies")) {
            c.strategies.clear();
            for (const auto& s : doc.at("strategies")) {
                c.strategies.push_back(strategies::strategy_from_string(s.get<std::string>()));
            }
        }
        if (doc.contains("repeats")) {
            c.repeats = doc.at("repeats").get<std::size_t>();
        }
        if (doc.contains("seed")) {
            c.base_seed = doc.at("seed").get<std::uint64_t>();
        }
        if (doc.contains("train_fraction")) {
            c.train_fraction = doc.at("train_fraction").get<double>();
        }
        if (doc.contains("d")) {
            c.d = doc.at("d").get<std::size_t>();
        }
        if (doc.contains("swarm")) {
            c.swarm = swarm_from_json(doc.at("swarm"), c.swarm);
        }
        if (doc.contains("output_dir")) {
            c.output_dir = doc.at("output_dir").get<std::string>();
        }
        if (doc.contains("serial")) {
            c.serial = doc.at("serial").get<bool>();
        }
        if (doc.contains("workers")) {
            c.workers = doc.at("workers").get<std::size_t>();
        }
        if (doc.contains("save_pipelines")) {
            c.save_pipelines = doc.at("save_pipelines").get<bool>();
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("experiment config: ") + e.what());
    }
    return c;
}

json experiment_config_to_json(const ExperimentConfig& c)
{
    json models = json::array();
    for (auto m : c.models) {
        models.push_back(std::string(tuning::to_string(m)));
    }
    json strats = json::array();
    for (auto s : c.strategies) {
        strats.push_back(std::string(strategies::to_string(s)));
    }
    return {{"data", c.data_path.string()},
            {"horizons", c.horizons},
            {"models", models},
            {"strategies", strats},
            {"repeats", c.repeats},
            {"seed", c.base_seed},
            {"train_fraction", c.train_fraction},
            {"d", c.d},
            {"swarm", swarm_to_json(c.swarm)},
            {"output_dir", c.output_dir.string()},
            {"serial", c.serial},
            {"workers", c.workers},
            {"save_pipelines", c.save_pipelines}};
}

ExperimentConfig load_experiment_config(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config " + path.string() + ": " + e.what());
    }
    return experiment_config_from_json(doc);
}

std::vector<std::size_t> parse_horizons(const std::string& text)
{
    auto to_size = [&](const std::string& s) {
        std::size_t pos = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(s, &pos);
        } catch (const std::exception&) {
            throw ValidationError("bad horizon list '" + text + "'");
        }
        if (pos != s.size() || v == 0) {
            throw ValidationError("bad horizon list '" + text + "'");
        }
        return static_cast<std::size_t>(v);
    };
    std::vector<std::size_t> out;
    if (const auto dots = text.find(".."); dots != std::string::npos) {
        const std::size_t lo = to_size(text.substr(0, dots));
        const std::size_t hi = to_size(text.substr(dots + 2));
        if (hi < lo) {
            throw ValidationError("bad horizon range '" + text + "'");
        }
        for (std::size_t h = lo; h <= hi; ++h) {
            out.push_back(h);
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(to_size(item));
    }
    if (out.empty()) {
        throw ValidationError("empty horizon list");
    }
    return out;
}

std::uint64_t cell_seed(std::uint64_t base_seed, std::size_t repeat, ModelKind model, StrategyKind strategy,
                        std::size_t horizon)
{
    return derive_seed(base_seed + repeat, {static_cast<std::uint64_t>(model), static_cast<std::uint64_t>(strategy),
                                            static_cast<std::uint64_t>(horizon)});
}

std::string combo_label(ModelKind model, StrategyKind strategy)
{
    return std::string(tuning::to_string(model)) + "-" + std::string(strategies::to_string(strategy));
}

json record_to_json(const RunRecord& r)
{
    json per_lead = json::array();
    for (const auto& m : r.metrics.per_lead) {
        per_lead.push_back(metric_values_to_json(m));
    }
    json doc = {{"model", std::string(tuning::to_string(r.model))},
                {"strategy", std::string(strategies::to_string(r.strategy))},
                {"horizon", r.horizon},
                {"repeat", r.repeat},
                {"seed", r.seed},
                {"config_hash", r.config_hash},
                {"status", r.ok ? "ok" : "failed"},
                {"wall_seconds", r.wall_seconds},
                {"warnings", r.warnings}};
    if (r.ok) {
        doc["fitness"] = r.fitness;
        doc["generations"] = r.generations;
        doc["evaluations"] = r.evaluations;
        doc["metrics"] = metric_values_to_json(r.metrics.mean);
        doc["per_lead"] = per_lead;
        doc["config"] = r.tuned_config;
    } else {
        doc["error"] = r.error;
    }
    return doc;
}

RunRecord record_from_json(const json& doc)
{
    RunRecord r;
    r.model = tuning::model_from_string(doc.at("model").get<std::string>());
    r.strategy = strategies::strategy_from_string(doc.at("strategy").get<std::string>());
    r.horizon = doc.at("horizon").get<std::size_t>();
    r.repeat = doc.at("repeat").get<std::size_t>();
    r.seed = doc.at("seed").get<std::uint64_t>();
    r.config_hash = doc.at("config_hash").get<std::string>();
    r.ok = doc.at("status").get<std::string>() == "ok";
    r.wall_seconds = doc.value("wall_seconds", 0.0);
    r.warnings = doc.value("warnings", std::vector<std::string>{});
    if (r.ok) {
        r.fitness = doc.at("fitness").get<double>();
        r.generations = doc.value("generations", std::size_t{0});
        r.evaluations = doc.value("evaluations", std::size_t{0});
        r.metrics.mean = metric_values_from_json(doc.at("metrics"));
        for (const auto& m : doc.at("per_lead")) {
            r.metrics.per_lead.push_back(metric_values_from_json(m));
        }
        r.tuned_config = doc.value("config", json());
    } else {
        r.error = doc.value("error", std::string());
    }
    return r;
}

void write_ledger(const fs::path& path, const std::vector<RunRecord>& ledger)
{
    auto out = open_output(path);
    for (const auto& r : ledger) {
        out << record_to_json(r).dump() << '\n';
    }
}

std::vector<RunRecord> read_ledger(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open ledger " + path.string());
    }
    std::vector<RunRecord> ledger;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            ledger.push_back(record_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(line_no, std::string("ledger: ") + e.what());
        }
    }
    return ledger;
}

const CellSummary& Report::cell(ModelKind model, StrategyKind strategy, std::size_t horizon) const
{
    for (const auto& c : cells) {
        if (c.model == model && c.strategy == strategy && c.horizon == horizon) {
            return c;
        }
    }
    throw std::out_of_range("report has no cell " + combo_label(model, strategy) + " H=" + std::to_string(horizon));
}

bool Report::complete() const
{
    if (cells.empty() || cells.size() != combos.size() * horizons.size()) {
        return false;
    }
    return std::all_of(cells.begin(), cells.end(), [](const CellSummary& c) { return !c.scores.empty(); });
}

Report build_report(const std::vector<RunRecord>& ledger)
{
    Report report;
    for (const auto& r : ledger) {
        const std::pair combo{r.model, r.strategy};
        if (std::find(report.combos.begin(), report.combos.end(), combo) == report.combos.end()) {
            report.combos.push_back(combo);
        }
        if (std::find(report.horizons.begin(), report.horizons.end(), r.horizon) == report.horizons.end()) {
            report.horizons.push_back(r.horizon);
        }
        if (!r.ok) {
            ++report.failed_runs;
        }
    }

    for (const auto& [model, strategy] : report.combos) {
        for (std::size_t h : report.horizons) {
            CellSummary cell;
            cell.model = model;
            cell.strategy = strategy;
            cell.horizon = h;
            std::vector<const RunRecord*> runs;
            for (const auto& r : ledger) {
                if (r.ok && r.model == model && r.strategy == strategy && r.horizon == h) {
                    runs.push_back(&r);
                }
            }
            std::sort(runs.begin(), runs.end(),
                      [](const RunRecord* a, const RunRecord* b) { return a->repeat < b->repeat; });
            for (const auto* r : runs) {
                if (!cell.repeats.empty() && cell.repeats.back() == r->repeat) {
                    throw ValidationError("ledger: duplicate run " + combo_label(model, strategy) + " H=" +
                                          std::to_string(h) + " repeat " + std::to_string(r->repeat));
                }
                cell.repeats.push_back(r->repeat);
                cell.scores.push_back(r->metrics.mean);
            }
            if (!cell.scores.empty()) {
                for (Metric metric : evaluation::kAllMetrics) {
                    std::vector<double> xs;
                    double sum = 0.0;
                    for (const auto& s : cell.scores) {
                        xs.push_back(s.get(metric));
                        sum += xs.back();
                    }
                    const double mean = sum / static_cast<double>(xs.size());
                    set_metric(cell.mean, metric, mean);
                    set_metric(cell.stddev, metric, sample_stddev(xs, mean));
                }
            }
            report.cells.push_back(std::move(cell));
        }
    }

    // Friedman/Nemenyi per (horizon, metric) over the repeats every combination completed.
    const std::size_t k = report.combos.size();
    if (k < 2 || k > 10) {
        return report;
    }
    for (std::size_t h : report.horizons) {
        std::vector<const CellSummary*> row;
        for (const auto& [model, strategy] : report.combos) {
            row.push_back(&report.cell(model, strategy, h));
        }
        std::vector<std::size_t> blocks = row.front()->repeats;
        for (const auto* c : row) {
            std::vector<std::size_t> both;
            std::set_intersection(blocks.begin(), blocks.end(), c->repeats.begin(), c->repeats.end(),
                                  std::back_inserter(both));
            blocks = std::move(both);
        }
        if (blocks.size() < 2) {
            continue;
        }
        for (Metric metric : evaluation::kAllMetrics) {
            std::vector<std::vector<double>> scores;
            for (std::size_t rep : blocks) {
                std::vector<double> line;
                for (const auto* c : row) {
                    const auto pos = std::lower_bound(c->repeats.begin(), c->repeats.end(), rep) - c->repeats.begin();
                    line.push_back(c->scores[static_cast<std::size_t>(pos)].get(metric));
                }
                scores.push_back(std::move(line));
            }
            SignificanceResult sig;
            sig.horizon = h;
            sig.metric = metric;
            for (const auto& [model, strategy] : report.combos) {
                sig.treatments.push_back(combo_label(model, strategy));
            }
            sig.blocks = blocks;
            sig.friedman = evaluation::friedman_test(scores);
            sig.critical_difference = evaluation::nemenyi_critical_difference(k, blocks.size());
            sig.significant = evaluation::nemenyi_significance(sig.friedman.mean_ranks, sig.critical_difference);
            report.significance.push_back(std::move(sig));
        }
    }
    return report;
}

void emit_plot_data(const Report& report, const fs::path& dir)
{
    if (!report.complete()) {
        throw ValidationError("emit_plot_data: report is empty or has cells without successful runs");
    }
    fs::create_directories(dir);
    for (Metric metric : evaluation::kAllMetrics) {
        auto out = open_output(dir / ("curves_" + std::string(evaluation::to_string(metric)) + ".csv"));
        out << "model,strategy,horizon,mean,std\n";
        for (const auto& c : report.cells) {
            out << tuning::to_string(c.model) << ',' << strategies::to_string(c.strategy) << ',' << c.horizon << ','
                << format_full(c.mean.get(metric)) << ',' << format_full(c.stddev.get(metric)) << '\n';
        }
    }
}

void write_report(const Report& report, const fs::path& dir)
{
    fs::create_directories(dir);

    // Table layout: one row per combination, one column per horizon, then a row naming
    // the smallest mean in each column.
    for (Metric metric : evaluation::kAllMetrics) {
        auto out = open_output(dir / ("metrics_" + std::string(evaluation::to_string(metric)) + ".csv"));
        out << "metric,model";
        for (std::size_t h : report.horizons) {
            out << ',' << h;
        }
        out << '\n';
        std::vector<std::string> best(report.horizons.size());
        std::vector<double> best_value(report.horizons.size(), INFINITY);
        for (const auto& [model, strategy] : report.combos) {
            const std::string label = combo_label(model, strategy);
            out << evaluation::to_string(metric) << ',' << label;
            for (std::size_t j = 0; j < report.horizons.size(); ++j) {
                const auto& c = report.cell(model, strategy, report.horizons[j]);
                if (c.scores.empty()) {
                    out << ",NA";
                    continue;
                }
                const double v = c.mean.get(metric);
                out << ',' << format_table(v);
                if (v < best_value[j]) {
                    best_value[j] = v;
                    best[j] = label;
                }
            }
            out << '\n';
        }
        out << evaluation::to_string(metric) << ",best";
        for (const auto& b : best) {
            out << ',' << (b.empty() ? "NA" : b);
        }
        out << '\n';
    }

    for (const auto& sig : report.significance) {
        json matrix = json::array();
        for (const auto& line : sig.significant) {
            matrix.push_back(line);
        }
        const json doc = {{"horizon", sig.horizon},
                          {"metric", std::string(evaluation::to_string(sig.metric))},
                          {"treatments", sig.treatments},
                          {"blocks", sig.blocks},
                          {"friedman_statistic", sig.friedman.statistic},
                          {"p_value", sig.friedman.p_value},
                          {"mean_ranks", sig.friedman.mean_ranks},
                          {"critical_difference", sig.critical_difference},
                          {"significant", matrix}};
        auto out = open_output(dir / ("significance_h" + std::to_string(sig.horizon) + "_" +
                                      std::string(evaluation::to_string(sig.metric)) + ".json"));
        out << doc.dump(2) << '\n';
    }

    json cells = json::array();
    for (const auto& c : report.cells) {
        json scores = json::array();
        for (const auto& s : c.scores) {
            scores.push_back(metric_values_to_json(s));
        }
        cells.push_back({{"model", std::string(tuning::to_string(c.model))},
                         {"strategy", std::string(strategies::to_string(c.strategy))},
                         {"horizon", c.horizon},
                         {"repeats", c.repeats},
                         {"scores", scores},
                         {"mean", metric_values_to_json(c.mean)},
                         {"std", metric_values_to_json(c.stddev)}});
    }
    auto out = open_output(dir / "report.json");
    out << json{{"horizons", report.horizons}, {"failed_runs", report.failed_runs}, {"cells", cells}}.dump(2) << '\n';

    if (report.complete()) {
        emit_plot_data(report, dir);
    }
}

strategies::ForecastTable persistence_forecast(const data::SupervisedDataset& test_set)
{
    strategies::ForecastTable table;
    table.horizon = test_set.horizon;
    for (std::size_t i = 0; i < test_set.rows(); ++i) {
        const double last = std::pow(10.0, test_set.inputs(static_cast<Eigen::Index>(i), 0));
        for (std::size_t h = 0; h < test_set.horizon; ++h) {
            table.entries.push_back({test_set.origin_index[i], h + 1, last,
                                     std::pow(10.0, test_set.targets(static_cast<Eigen::Index>(i),
                                                                     static_cast<Eigen::Index>(h)))});
        }
    }
    return table;
}

data::IliSeries prepare_log_series(const data::IliSeries& raw)
{
    return data::log_transform(data::impute_missing(raw));
}

std::vector<evaluation::OutbreakWindow> evaluation_windows(const data::IliSeries& series,
                                                           const data::SupervisedDataset& test_set,
                                                           std::size_t horizon)
{
    if (test_set.rows() == 0) {
        throw InsufficientDataError("evaluation_windows: empty test set");
    }
    const std::size_t first = test_set.origin_index.front() + horizon;
    const std::size_t last = test_set.origin_index.back() + 1;
    if (first > last) {
        throw InsufficientDataError("evaluation_windows: test period shorter than the horizon");
    }
    auto windows = evaluation::detect_outbreak_windows(series, first, last);
    if (windows.empty()) {
        throw InsufficientDataError("evaluation_windows: test period contains no outbreak weeks");
    }
    return windows;
}

ExperimentOutcome run_experiment(const ExperimentConfig& config)
{
    config.validate();
    const auto raw = data::load_series(config.data_path);
    const auto log_series = prepare_log_series(raw);
    const auto rate_series = data::impute_missing(raw);

    ExperimentOutcome outcome;
    std::vector<HorizonData> horizons;
    for (std::size_t h : config.horizons) {
        HorizonData hd;
        hd.horizon = h;
        const auto dataset = data::make_supervised(log_series, config.d, h);
        std::tie(hd.train, hd.test) = data::chronological_split(dataset, config.train_fraction);
        if (hd.train.rows() < tuning::kCrossValidationFolds) {
            throw InsufficientDataError("horizon " + std::to_string(h) + ": too few training rows");
        }
        hd.windows = evaluation_windows(rate_series, hd.test, h);
        outcome.persistence.push_back(
            {h, evaluation::aggregate_metrics(persistence_forecast(hd.test), rate_series, hd.windows, h)});
        horizons.push_back(std::move(hd));
    }

    std::vector<Cell> cells;
    for (std::size_t slot = 0; slot < horizons.size(); ++slot) {
        for (ModelKind model : config.models) {
            for (StrategyKind strategy : config.strategies) {
                for (std::size_t rep = 0; rep < config.repeats; ++rep) {
                    cells.push_back({model, strategy, slot, rep});
                }
            }
        }
    }

    outcome.ledger.resize(cells.size());
    outcome.pipelines.resize(cells.size());

    auto run_cell = [&](std::size_t index) {
        const Cell& cell = cells[index];
        const HorizonData& hd = horizons[cell.horizon_slot];
        RunRecord& rec = outcome.ledger[index];
        rec.model = cell.model;
        rec.strategy = cell.strategy;
        rec.horizon = hd.horizon;
        rec.repeat = cell.repeat;
        rec.seed = cell_seed(config.base_seed, cell.repeat, cell.model, cell.strategy, hd.horizon);

        clpso::SwarmConfig swarm = config.swarm;
        swarm.seed = rec.seed;
        const json identity = {{"model", std::string(tuning::to_string(cell.model))},
                               {"strategy", std::string(strategies::to_string(cell.strategy))},
                               {"horizon", hd.horizon},
                               {"d", config.d},
                               {"train_fraction", config.train_fraction},
                               {"seed", rec.seed},
                               {"swarm", swarm_to_json(swarm)}};
        rec.config_hash = hex64(fnv1a(identity.dump()));

        const auto started = std::chrono::steady_clock::now();
        try {
            auto tuned = tuning::tune_and_train(hd.train, cell.model, cell.strategy, hd.horizon, swarm);
            const auto table = strategies::rollout(tuned.pipeline.bundle, hd.test);
            rec.metrics = evaluation::aggregate_metrics(table, rate_series, hd.windows, hd.horizon);
            rec.fitness = tuned.pipeline.fitness;
            rec.generations = tuned.generations;
            rec.evaluations = tuned.evaluations;
            rec.warnings = std::move(tuned.warnings);
            rec.tuned_config = tuning::config_to_json(tuned.pipeline.config);
            if (config.save_pipelines) {
                outcome.pipelines[index] = tuning::pipeline_to_json(tuned.pipeline);
            }
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.ok = false;
            rec.error = e.what();
        }
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    };

    std::size_t workers = config.serial ? 1 : config.workers;
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = std::min(workers, cells.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            run_cell(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < cells.size(); i = next++) {
                    run_cell(i);
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
    }

    outcome.partial_failure =
        std::any_of(outcome.ledger.begin(), outcome.ledger.end(), [](const RunRecord& r) { return !r.ok; });
    outcome.report = build_report(outcome.ledger);
    return outcome;
}

void write_outputs(const ExperimentConfig& config, const ExperimentOutcome& outcome)
{
    const fs::path& dir = config.output_dir;
    fs::create_directories(dir);
    write_ledger(dir / "ledger.jsonl", outcome.ledger);

    if (config.save_pipelines) {
        const fs::path pdir = dir / "pipelines";
        fs::create_directories(pdir);
        for (std::size_t i = 0; i < outcome.ledger.size(); ++i) {
            if (i >= outcome.pipelines.size() || outcome.pipelines[i].is_null()) {
                continue;
            }
            const auto& r = outcome.ledger[i];
            auto out = open_output(pdir / (combo_label(r.model, r.strategy) + "_h" + std::to_string(r.horizon) +
                                           "_r" + std::to_string(r.repeat) + ".json"));
            out << outcome.pipelines[i].dump() << '\n';
        }
    }

    auto base = open_output(dir / "baseline_persistence.csv");
    base << "horizon,MAPE,RMSE,PWE,OutbreakMAE\n";
    for (const auto& row : outcome.persistence) {
        base << row.horizon;
        for (Metric metric : evaluation::kAllMetrics) {
            base << ',' << format_full(row.metrics.mean.get(metric));
        }
        base << '\n';
    }
    base.close();

    write_report(outcome.report, dir);
}

} // namespace flucast::harness
