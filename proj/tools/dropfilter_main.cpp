#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dropfilter/blas.hpp"
#include "dropfilter/experiment.hpp"
#include "dropfilter/selfcheck.hpp"

namespace {

using namespace dropfilter;

struct CommonOpts {
    std::string method = "none";
    double drop_rate = 0.5;
    int epochs = 30;
    std::size_t batch_size = 100;
    double lr = 0.002;
    int halve_every = 2;
    std::uint64_t seed = 1;
    std::string data_dir;
    std::string out_dir = ".";
    std::size_t subset = 0;
    bool dfplus_pre_activation = false;
    bool dfplus_per_column = false;
    std::string mask_per = "batch";
};

void add_train_flags(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--method", o.method, "regularization method")
        ->check(CLI::IsMember({"none", "dropout", "dropconnect", "dropfilter", "dropfilter_plus",
                               "dropout_and_dropfilter", "dropout_and_dropfilter_plus"}));
    cmd->add_option("--drop-rate", o.drop_rate, "drop probability p")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--epochs", o.epochs, "training epochs")->check(CLI::PositiveNumber);
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size")->check(CLI::PositiveNumber);
    cmd->add_option("--lr", o.lr, "initial learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--halve-every", o.halve_every, "halve the learning rate every N epochs")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "run seed");
    cmd->add_option("--data-dir", o.data_dir,
                    "MNIST directory (default: $DROPFILTER_DATA_DIR or data/mnist)");
    cmd->add_option("--out-dir", o.out_dir, "output directory");
    cmd->add_option("--subset", o.subset, "train on only the first N samples");
    cmd->add_flag("--dfplus-pre-activation", o.dfplus_pre_activation,
                  "apply the DropFilter-PLUS output mask before the activation");
    cmd->add_flag("--dfplus-per-column", o.dfplus_per_column,
                  "one DropFilter-PLUS shrink factor per feature-map column");
    cmd->add_option("--mask-per", o.mask_per, "mask refresh cadence (masks are drawn per batch)")
        ->check(CLI::IsMember({"batch"}));
}

TrainConfig to_config(const CommonOpts& o) {
    TrainConfig cfg;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch_size;
    cfg.init_lr = o.lr;
    cfg.halve_every = o.halve_every;
    cfg.seed = o.seed;
    cfg.subset = o.subset;
    cfg.reg.method = parse_method(o.method);
    cfg.reg.drop_rate = o.drop_rate;
    cfg.reg.dfplus_mask_pre_activation = o.dfplus_pre_activation;
    cfg.reg.dfplus_per_column_mask = o.dfplus_per_column;
    cfg.validate();
    return cfg;
}

int cmd_train(const CommonOpts& opts) {
    const TrainConfig cfg = to_config(opts);
    const MnistData data = load_mnist(resolve_data_dir(opts.data_dir));
    std::cout << "gemm backend: " << detail::gemm_backend() << "\n";
    const RunOutcome outcome = run_single(cfg, data, &std::cout);

    namespace fs = std::filesystem;
    fs::create_directories(opts.out_dir);
    write_metrics_csv((fs::path(opts.out_dir) / "metrics.csv").string(), outcome.history);
    write_timing_csv((fs::path(opts.out_dir) / "timing.csv").string(), outcome.history);
    write_summary_csv((fs::path(opts.out_dir) / "summary.csv").string(), {outcome});
    if (!outcome.ok) {
        std::cerr << "training failed: " << outcome.error << "\n";
        return 1;
    }
    std::cout << "best test error " << outcome.best_test_err << ", final "
              << outcome.final_test_err << " (metrics in " << opts.out_dir << ")\n";
    return 0;
}

int cmd_reproduce(const CommonOpts& opts, const std::vector<std::string>& method_names,
                  const std::vector<std::uint64_t>& seeds, bool download,
                  const std::string& mnist_url) {
    ExperimentSpec spec;
    spec.base = to_config(opts);
    spec.data_dir = resolve_data_dir(opts.data_dir);
    spec.out_dir = opts.out_dir == "." ? "out" : opts.out_dir;
    spec.download = download;
    spec.mnist_url = mnist_url;
    spec.seeds = seeds;
    for (const std::string& name : method_names) spec.methods.push_back(parse_method(name));

    std::cout << "gemm backend: " << detail::gemm_backend() << "\n";
    const std::vector<RunOutcome> outcomes = run_experiment(spec, &std::cout);
    bool all_ok = true;
    for (const RunOutcome& o : outcomes) {
        std::cout << to_string(o.method) << " seed " << o.seed << ": ";
        if (o.ok) {
            std::cout << "best " << o.best_test_err << ", final " << o.final_test_err << "\n";
        } else {
            std::cout << "FAILED (" << o.error << ")\n";
            all_ok = false;
        }
    }
    std::cout << "summary: " << (std::filesystem::path(spec.out_dir) / "summary.csv").string()
              << "\n";
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"DropFilter / DropFilter-PLUS CNN regularization experiments"};
    app.require_subcommand(1);

    CommonOpts train_opts;
    CLI::App* train = app.add_subcommand("train", "single training run");
    add_train_flags(train, train_opts);

    CommonOpts rep_opts;
    std::vector<std::string> rep_methods = {"none",
                                            "dropout",
                                            "dropconnect",
                                            "dropfilter",
                                            "dropfilter_plus",
                                            "dropout_and_dropfilter",
                                            "dropout_and_dropfilter_plus"};
    std::vector<std::uint64_t> rep_seeds = {1, 2, 3};
    bool download = false;
    std::string mnist_url = dropfilter::kDefaultMnistUrl;
    CLI::App* reproduce =
        app.add_subcommand("reproduce", "train every requested method/seed and summarize");
    add_train_flags(reproduce, rep_opts);
    reproduce->add_option("--methods", rep_methods, "methods to sweep")->delimiter(',');
    reproduce->add_option("--seeds", rep_seeds, "seeds to sweep")->delimiter(',');
    reproduce->add_flag("--download", download, "fetch MNIST into --data-dir first");
    reproduce->add_option("--mnist-url", mnist_url, "base URL for --download");

    CLI::App* check = app.add_subcommand("check", "run the statistical/property self-checks");
    CLI::App* gradcheck =
        app.add_subcommand("gradcheck", "run the finite-difference gradient checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (train->parsed()) return cmd_train(train_opts);
        if (reproduce->parsed()) {
            return cmd_reproduce(rep_opts, rep_methods, rep_seeds, download, mnist_url);
        }
        if (check->parsed()) {
            return dropfilter::report_checks(dropfilter::run_property_checks(), std::cout);
        }
        if (gradcheck->parsed()) {
            return dropfilter::report_checks(dropfilter::run_gradient_checks(), std::cout);
        }
    } catch (const dropfilter::ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
