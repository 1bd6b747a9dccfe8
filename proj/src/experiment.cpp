#include "dropfilter/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

namespace dropfilter {

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc); // LF line endings everywhere
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    return out;
}

} // namespace

std::vector<ConvLayerSpec> reproduction_architecture() {
    return {
        {.out_channels = 32, .kernel = 5, .stride = 1, .pad = 0, .pool = true},
        {.out_channels = 64, .kernel = 5, .stride = 1, .pad = 0, .pool = true},
        {.out_channels = 128, .kernel = 3, .stride = 1, .pad = 0, .pool = false},
    };
}

Network build_reproduction_net(std::uint64_t seed) {
    RandomSource init_rng(derive_seed(seed, 0));
    return Network({.channels = 1, .height = 28, .width = 28}, reproduction_architecture(), 10,
                   init_rng);
}

RunOutcome run_single(const TrainConfig& cfg, const MnistData& data, std::ostream* log) {
    RunOutcome outcome;
    outcome.method = cfg.reg.method;
    outcome.seed = cfg.seed;

    Trainer trainer(build_reproduction_net(cfg.seed), cfg);
    outcome.param_count = trainer.network().param_count();

    const Dataset train_subset = cfg.subset == 0 ? Dataset{} : data.train.subset(cfg.subset);
    const Dataset& train_used = cfg.subset == 0 ? data.train : train_subset;

    if (log != nullptr) {
        *log << "run method=" << to_string(cfg.reg.method) << " seed=" << cfg.seed
             << " p=" << cfg.reg.drop_rate << " train_n=" << train_used.size()
             << " params=" << outcome.param_count << "\n";
    }
    try {
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const MetricsRecord rec = trainer.train_epoch(train_used, data.test, epoch);
            outcome.history.push_back(rec);
            outcome.epochs_completed = epoch;
            if (log != nullptr) {
                *log << "  epoch " << rec.epoch << " lr=" << fmt("%.6g", rec.lr)
                     << " loss=" << fmt("%.5f", rec.mean_train_loss)
                     << " train_err=" << fmt("%.4f", rec.train_error)
                     << " test_err=" << fmt("%.4f", rec.test_error) << " ("
                     << fmt("%.1f", rec.wall_time_s) << "s)\n";
                log->flush();
            }
        }
        outcome.ok = true;
    } catch (const DivergenceError& e) {
        outcome.ok = false;
        outcome.error = e.what();
        if (log != nullptr) *log << "  FAILED: " << e.what() << "\n";
    }
    if (!outcome.history.empty()) {
        outcome.final_test_err = outcome.history.back().test_error;
        outcome.best_test_err = outcome.history.front().test_error;
        for (const MetricsRecord& rec : outcome.history) {
            outcome.best_test_err = std::min(outcome.best_test_err, rec.test_error);
        }
    }
    return outcome;
}

void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& history) {
    std::ofstream out = open_out(path);
    out << "epoch,lr,train_loss,train_err,test_err\n";
    for (const MetricsRecord& r : history) {
        out << r.epoch << "," << fmt("%.12g", r.lr) << "," << fmt("%.12g", r.mean_train_loss)
            << "," << fmt("%.6f", r.train_error) << "," << fmt("%.6f", r.test_error) << "\n";
    }
}

void write_timing_csv(const std::string& path, const std::vector<MetricsRecord>& history) {
    std::ofstream out = open_out(path);
    out << "epoch,wall_s\n";
    for (const MetricsRecord& r : history) {
        out << r.epoch << "," << fmt("%.3f", r.wall_time_s) << "\n";
    }
}

void write_summary_csv(const std::string& path, const std::vector<RunOutcome>& outcomes) {
    std::ofstream out = open_out(path);
    out << "method,seed,best_test_err,final_test_err,epochs,params\n";
    for (const RunOutcome& o : outcomes) {
        out << to_string(o.method) << "," << o.seed << "," << fmt("%.6f", o.best_test_err) << ","
            << fmt("%.6f", o.final_test_err) << "," << o.epochs_completed << "," << o.param_count
            << "\n";
    }
}

std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec, std::ostream* log) {
    if (spec.methods.empty() || spec.seeds.empty()) {
        throw ValueError("run_experiment needs at least one method and one seed");
    }
    if (spec.download) fetch_mnist(spec.data_dir, spec.mnist_url);
    const MnistData data = load_mnist(spec.data_dir);

    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir);

    std::vector<RunOutcome> outcomes;
    for (Method method : spec.methods) {
        for (std::uint64_t seed : spec.seeds) {
            TrainConfig cfg = spec.base;
            cfg.reg.method = method;
            cfg.seed = seed;
            RunOutcome outcome = run_single(cfg, data, log);

            const fs::path run_dir =
                fs::path(spec.out_dir) / (to_string(method) + "-seed" + std::to_string(seed));
            fs::create_directories(run_dir);
            write_metrics_csv((run_dir / "metrics.csv").string(), outcome.history);
            write_timing_csv((run_dir / "timing.csv").string(), outcome.history);
            if (!outcome.ok) {
                std::ofstream fail = open_out((run_dir / "failure.log").string());
                fail << outcome.error << "\n";
            }
            outcomes.push_back(std::move(outcome));
            // keep the summary current while long sweeps run
            write_summary_csv((fs::path(spec.out_dir) / "summary.csv").string(), outcomes);
        }
    }
    return outcomes;
}

} // namespace dropfilter
