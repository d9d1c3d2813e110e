#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "romerr/config.hpp"
#include "romerr/io.hpp"
#include "romerr/pipeline.hpp"

using namespace romerr;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "romerr_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

CampaignConfig tiny_ad_config() {
    CampaignConfig cfg;
    cfg.master_seed = 7;
    cfg.threads = 2;
    cfg.system_kind = "advection-diffusion";
    cfg.n_cells = 11;
    cfg.surrogate.kind = "pod-galerkin";
    cfg.surrogate.K = 2;
    cfg.surrogate.n_skip = 5;
    cfg.surrogate.pod_grid = {{-2.0, -0.1}, {0.1, 1.0}};
    cfg.scheme = "crank-nicolson";
    cfg.dt = 1e-3;
    cfg.n_steps = 40;
    cfg.coarse_stride = 10;
    cfg.coarse_count = 4;
    cfg.feature_kind = "params+resnorm";
    cfg.response = "qoi";
    cfg.n_train = 4;
    cfg.n_val = 1;
    cfg.n_test = 3;
    cfg.n_noise_train = 2;
    cfg.families = {"arx", "lstm"};
    cfg.restarts = 2;
    cfg.max_epochs = 40;
    cfg.patience = 10;
    cfg.learning_rate = 1e-2;
    cfg.grids.depths = {1};
    cfg.grids.widths = {3};
    cfg.grids.ridges = {1e-3};
    cfg.grids.knn_ks = {1, 2};
    return cfg;
}

fs::path write_config(const CampaignConfig& cfg, const fs::path& dir) {
    const fs::path path = dir / "config.toml";
    write_text_file(path, cfg.to_toml());
    return path;
}

} // namespace

TEST_CASE("cmd_generate") {
    SUBCASE("writes datasets and is byte-identical on the same seed") {
        const fs::path dir = fresh_dir("gen");
        const CampaignConfig cfg = tiny_ad_config();
        const fs::path config = write_config(cfg, dir);

        CHECK(run_generate(config.string(), (dir / "out_a").string()) == kExitOk);
        CHECK(run_generate(config.string(), (dir / "out_b").string()) == kExitOk);

        // 8 instances: dataset files exist with 4 data rows each
        for (int i = 0; i < 8; ++i) {
            const fs::path file = dir / "out_a" / ("dataset_00" + std::to_string(i) + ".csv");
            REQUIRE(fs::exists(file));
            CHECK(read_csv(file).rows.size() == 4);
            CHECK(read_text_file(file) ==
                  read_text_file(dir / "out_b" / ("dataset_00" + std::to_string(i) + ".csv")));
        }
        // manifests differ only in the timestamp metadata block
        json ma = json::parse(read_text_file(dir / "out_a" / "manifest.json"));
        json mb = json::parse(read_text_file(dir / "out_b" / "manifest.json"));
        ma.erase("metadata");
        mb.erase("metadata");
        CHECK(ma == mb);
    }

    SUBCASE("a different seed changes the datasets") {
        const fs::path dir = fresh_dir("gen_seed");
        const CampaignConfig cfg = tiny_ad_config();
        const fs::path config = write_config(cfg, dir);
        CHECK(run_generate(config.string(), (dir / "a").string()) == kExitOk);
        CommandOverrides overrides;
        overrides.seed = 8;
        CHECK(run_generate(config.string(), (dir / "b").string(), overrides) == kExitOk);
        CHECK(read_text_file(dir / "a" / "dataset_000.csv") !=
              read_text_file(dir / "b" / "dataset_000.csv"));
    }

    SUBCASE("indivisible burgers coarse width exits with the config code") {
        const fs::path dir = fresh_dir("gen_bad");
        CampaignConfig cfg = tiny_ad_config();
        cfg.system_kind = "burgers";
        cfg.cell_width = 1.0;
        cfg.surrogate.kind = "coarse-lfm";
        cfg.surrogate.coarse_width = 0.3; // does not divide 100
        cfg.scheme = "implicit-euler";
        cfg.dt = 0.05;
        cfg.n_steps = 40;
        cfg.feature_kind = "params";
        const fs::path config = write_config(cfg, dir);
        CHECK(run_generate(config.string(), (dir / "out").string()) == kExitConfig);
    }

    SUBCASE("missing config file exits with the config code") {
        CHECK(run_generate("/nonexistent/config.toml", "/tmp/romerr_nowhere") == kExitConfig);
    }
}

TEST_CASE("cmd_train and cmd_evaluate") {
    const fs::path dir = fresh_dir("train_eval");
    const CampaignConfig cfg = tiny_ad_config();
    const fs::path config = write_config(cfg, dir);
    const fs::path data = dir / "data";
    REQUIRE(run_generate(config.string(), data.string()) == kExitOk);

    SUBCASE("arx smoke: checkpoint exists with finite validation score") {
        const fs::path ckpt = dir / "arx.json";
        CHECK(run_train(data.string(), "arx", "params+resnorm", "qoi", config.string(),
                        ckpt.string()) == kExitOk);
        const json model = json::parse(read_text_file(ckpt));
        CHECK(model.at("family") == "arx");
        CHECK(model.at("validation_score").is_number());
        CHECK(model.at("noise").contains("gaussian"));
        CHECK(model.at("noise").contains("ar1"));
    }

    SUBCASE("lstm training is deterministic for a fixed seed") {
        const fs::path a = dir / "lstm_a.json";
        const fs::path b = dir / "lstm_b.json";
        REQUIRE(run_train(data.string(), "lstm", "params+resnorm", "qoi", config.string(),
                          a.string()) == kExitOk);
        REQUIRE(run_train(data.string(), "lstm", "params+resnorm", "qoi", config.string(),
                          b.string()) == kExitOk);
        CHECK(read_text_file(a) == read_text_file(b));
    }

    SUBCASE("unknown family exits with the config code") {
        CHECK(run_train(data.string(), "transformer", "params+resnorm", "qoi", config.string(),
                        (dir / "x.json").string()) == kExitConfig);
    }

    SUBCASE("feature-kind mismatch exits with the compatibility code") {
        CHECK(run_train(data.string(), "arx", "params", "qoi", config.string(),
                        (dir / "y.json").string()) == kExitCompatibility);
    }

    SUBCASE("every family round-trips through checkpoint and evaluate") {
        for (const char* family : {"knn", "ann", "arx", "ann-i", "larx", "rnn", "lstm", "gp"}) {
            const fs::path ckpt = dir / (std::string(family) + "_rt.json");
            REQUIRE(run_train(data.string(), family, "params+resnorm", "qoi", config.string(),
                              ckpt.string()) == kExitOk);
            const fs::path eval_dir = dir / (std::string("eval_") + family);
            REQUIRE(run_evaluate(ckpt.string(), data.string(), eval_dir.string()) == kExitOk);
            const json metrics = json::parse(read_text_file(eval_dir / "metrics.json"));
            CHECK(metrics.at("family") == family);
            CHECK((metrics.at("fvu").is_number() || metrics.at("fvu").is_null()));
        }
    }

    SUBCASE("evaluate writes metrics with the omega keys and prediction files") {
        const fs::path ckpt = dir / "arx_eval.json";
        REQUIRE(run_train(data.string(), "arx", "params+resnorm", "qoi", config.string(),
                          ckpt.string()) == kExitOk);
        const fs::path eval_dir = dir / "eval";
        CHECK(run_evaluate(ckpt.string(), data.string(), eval_dir.string()) == kExitOk);
        const json metrics = json::parse(read_text_file(eval_dir / "metrics.json"));
        CHECK(metrics.at("fvu").is_number());
        for (const char* kind : {"gaussian", "laplacian", "ar1"}) {
            const auto& entry = metrics.at("noise").at(kind);
            CHECK(entry.contains("omega(0.68)"));
            CHECK(entry.contains("omega(0.95)"));
            CHECK(entry.contains("omega(0.99)"));
            CHECK(entry.contains("ks"));
        }
        CHECK(fs::exists(eval_dir / "predictions_000.csv"));
        const CsvTable preds = read_csv(eval_dir / "predictions_000.csv");
        CHECK(preds.header[2] == "truth");
        CHECK(preds.header[3] == "prediction");

        // histogram data for the noise plots
        const CsvTable hist = read_csv(eval_dir / "noise_histogram_raw.csv");
        CHECK(hist.header[0] == "bin_left");
        CHECK(hist.header[2] == "count");
        CHECK(hist.rows.size() == 30);
        CHECK(fs::exists(eval_dir / "noise_histogram_std_gaussian.csv"));
        CHECK(fs::exists(eval_dir / "noise_histogram_std_laplacian.csv"));
        CHECK(fs::exists(eval_dir / "noise_histogram_std_ar1.csv"));

        // evaluating against a dataset of a different feature kind is exit 5
        CampaignConfig other = tiny_ad_config();
        other.feature_kind = "params";
        const fs::path other_config = write_config(other, fresh_dir("other_cfg"));
        const fs::path other_data = dir / "other_data";
        REQUIRE(run_generate(other_config.string(), other_data.string()) == kExitOk);
        CHECK(run_evaluate(ckpt.string(), other_data.string(), (dir / "eval5").string()) ==
              kExitCompatibility);
    }

    SUBCASE("perfect-surrogate degenerate variance is reported and exits 0") {
        // zero out the responses to emulate an exact surrogate
        const fs::path zero_data = dir / "zero_data";
        fs::copy(data, zero_data, fs::copy_options::recursive);
        const json manifest = json::parse(read_text_file(zero_data / "manifest.json"));
        for (const auto& inst : manifest.at("instances")) {
            const fs::path file = zero_data / inst.at("file").get<std::string>();
            CsvTable table = read_csv(file);
            for (auto& row : table.rows) {
                row[row.size() - 1] = "0";
                row[row.size() - 2] = "0";
            }
            write_csv(file, table);
        }
        const fs::path ckpt = dir / "arx_zero.json";
        REQUIRE(run_train(zero_data.string(), "arx", "params+resnorm", "qoi", config.string(),
                          ckpt.string()) == kExitOk);
        const fs::path eval_dir = dir / "eval_zero";
        CHECK(run_evaluate(ckpt.string(), zero_data.string(), eval_dir.string()) == kExitOk);
        const json metrics = json::parse(read_text_file(eval_dir / "metrics.json"));
        CHECK(metrics.at("degenerate_variance").get<bool>());
        CHECK(metrics.at("fvu").is_null());
    }
}

TEST_CASE("cmd_report") {
    const fs::path dir = fresh_dir("report");
    const CampaignConfig cfg = tiny_ad_config();
    const fs::path config = write_config(cfg, dir);
    const fs::path data = dir / "data";
    REQUIRE(run_generate(config.string(), data.string()) == kExitOk);

    const fs::path arx_ckpt = dir / "arx.json";
    const fs::path knn_ckpt = dir / "knn.json";
    REQUIRE(run_train(data.string(), "arx", "params+resnorm", "qoi", config.string(),
                      arx_ckpt.string()) == kExitOk);
    REQUIRE(run_train(data.string(), "knn", "params+resnorm", "qoi", config.string(),
                      knn_ckpt.string()) == kExitOk);
    REQUIRE(run_evaluate(arx_ckpt.string(), data.string(), (dir / "eval_arx").string()) == kExitOk);
    REQUIRE(run_evaluate(knn_ckpt.string(), data.string(), (dir / "eval_knn").string()) == kExitOk);

    SUBCASE("one evaluation gives a one-row grid") {
        CHECK(run_report({(dir / "eval_arx").string()}, (dir / "rep1").string()) == kExitOk);
        CHECK(read_csv(dir / "rep1" / "report.csv").rows.size() == 1);
        const json rep = json::parse(read_text_file(dir / "rep1" / "report.json"));
        CHECK(rep.at("lowest_fvu_percentage").at("arx").get<double>() == 100.0);
    }

    SUBCASE("two families partition the credit") {
        CHECK(run_report({(dir / "eval_arx").string(), (dir / "eval_knn").string()},
                         (dir / "rep2").string()) == kExitOk);
        const json rep = json::parse(read_text_file(dir / "rep2" / "report.json"));
        double total = 0.0;
        for (const auto& [family, pct] : rep.at("lowest_fvu_percentage").items())
            total += pct.get<double>();
        CHECK(total == doctest::Approx(100.0));
    }

    SUBCASE("malformed metrics file names the offender") {
        const fs::path bad_dir = dir / "eval_bad";
        fs::create_directories(bad_dir);
        write_text_file(bad_dir / "metrics.json", "{\"family\": 3}\n");
        CHECK(run_report({bad_dir.string()}, (dir / "rep3").string()) == kExitConfig);
    }

    SUBCASE("empty input set is rejected") {
        CHECK(run_report({}, (dir / "rep4").string()) == kExitConfig);
    }
}
