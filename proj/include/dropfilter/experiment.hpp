#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "dropfilter/mnist.hpp"
#include "dropfilter/network.hpp"
#include "dropfilter/trainer.hpp"

namespace dropfilter {

inline constexpr const char* kDefaultMnistUrl = "https://ossci-datasets.s3.amazonaws.com/mnist";

// Default MNIST architecture: conv 5x5 1->32 + pool, conv 5x5 32->64 + pool,
// conv 3x3 64->128, fc 512->10 (28 -> 24 -> 12 -> 8 -> 4 -> 2 spatially).
std::vector<ConvLayerSpec> reproduction_architecture();

// Builds the reproduction network with parameters drawn from the run seed
// (random stream 0).
Network build_reproduction_net(std::uint64_t seed);

struct ExperimentSpec {
    TrainConfig base; // method and seed fields are overridden per run
    std::vector<Method> methods;
    std::vector<std::uint64_t> seeds;
    std::string data_dir;
    std::string out_dir = "out";
    bool download = false;
    std::string mnist_url = kDefaultMnistUrl;
};

struct RunOutcome {
    Method method = Method::none;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    std::vector<MetricsRecord> history;
    double best_test_err = std::numeric_limits<double>::quiet_NaN();
    double final_test_err = std::numeric_limits<double>::quiet_NaN();
    int epochs_completed = 0;
    std::size_t param_count = 0;
};

// One full training run; per-epoch progress lines go to `log` when non-null.
RunOutcome run_single(const TrainConfig& cfg, const MnistData& data, std::ostream* log);

// epoch,lr,train_loss,train_err,test_err  (wall time goes to the timing file,
// so equal-seed runs produce byte-identical metrics)
void write_metrics_csv(const std::string& path, const std::vector<MetricsRecord>& history);
// epoch,wall_s
void write_timing_csv(const std::string& path, const std::vector<MetricsRecord>& history);
// method,seed,best_test_err,final_test_err,epochs,params; failed runs carry
// nan error values
void write_summary_csv(const std::string& path, const std::vector<RunOutcome>& outcomes);

// Full sweep: trains every (method, seed) pair, writes per-run metrics/timing
// under <out_dir>/<method>-seed<seed>/ and a combined summary.csv. A diverged
// run is recorded as failed and the sweep continues.
std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec, std::ostream* log);

} // namespace dropfilter
