#include <CLI11.hpp>
#include <cstdint>
#include <string>
#include <vector>

#include "romerr/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"romerr: surrogate error data generation and recursive error-model training"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_dir, model_path;
    std::string family, feature_kind, response = "qoi";
    std::vector<std::string> eval_dirs;
    std::uint64_t seed = 0;
    int threads = 0;
    bool seed_set = false, threads_set = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed, "override the config master seed")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "worker threads (0 = auto)")
            ->each([&](const std::string&) { threads_set = true; });
    };

    CLI::App* generate = app.add_subcommand("generate", "run a campaign and write datasets");
    generate->add_option("--config", config_path, "campaign config (TOML)")->required();
    generate->add_option("--out", out_path, "output directory")->required();
    add_common(generate);

    CLI::App* train = app.add_subcommand("train", "train one regression family on a dataset");
    train->add_option("--data", data_dir, "generated data directory")->required();
    train->add_option("--family", family, "regression family")->required();
    train->add_option("--feature", feature_kind, "feature kind the data was generated with")
        ->required();
    train->add_option("--response", response, "state-norm or qoi");
    train->add_option("--config", config_path, "campaign config (defaults to the manifest's)");
    train->add_option("--out", out_path, "checkpoint path")->required();
    add_common(train);

    CLI::App* evaluate = app.add_subcommand("evaluate", "score a checkpoint on the test split");
    evaluate->add_option("--model", model_path, "checkpoint path")->required();
    evaluate->add_option("--data", data_dir, "generated data directory")->required();
    evaluate->add_option("--out", out_path, "output directory")->required();

    CLI::App* report = app.add_subcommand("report", "merge evaluations into the report grid");
    report->add_option("--eval", eval_dirs, "evaluation output directories")->required();
    report->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : romerr::kExitConfig;
    }

    romerr::CommandOverrides overrides;
    if (seed_set) overrides.seed = seed;
    if (threads_set) overrides.threads = threads;

    if (generate->parsed()) return romerr::run_generate(config_path, out_path, overrides);
    if (train->parsed())
        return romerr::run_train(data_dir, family, feature_kind, response, config_path, out_path,
                                 overrides);
    if (evaluate->parsed()) return romerr::run_evaluate(model_path, data_dir, out_path);
    if (report->parsed()) return romerr::run_report(eval_dirs, out_path);
    return romerr::kExitConfig;
}
