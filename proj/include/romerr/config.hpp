#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace romerr {

// Minimal TOML subset: [table.subtable] headers, bare keys, strings,
// integers, floats, booleans, (nested) arrays, and # comments. Keys are
// flattened to "table.key" paths.
struct TomlValue {
    enum class Type { String, Integer, Float, Boolean, Array };
    Type type = Type::String;
    std::string str;
    std::int64_t integer = 0;
    double number = 0.0;
    bool boolean = false;
    std::vector<TomlValue> array;

    double as_number() const;
};

using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);

// Hyperparameter grid axes; defaults are the experiment grids.
struct GridConfig {
    std::vector<int> depths = {1, 2};
    std::vector<int> widths = {10, 25, 50, 100};
    std::vector<double> ridges = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    std::vector<int> larx_widths = {10, 25, 50, 100};
    std::vector<int> knn_ks = {1, 2, 3, 4, 5};
    std::vector<double> gp_lambdas; // empty = the 20-point log-spaced default
};

struct SurrogateConfig {
    std::string kind = "pod-galerkin"; // or "coarse-lfm"
    int K = 5;
    // per-dimension grid values; default is the advection-diffusion training
    // grid with the wave-speed axis mirrored onto the declared domain
    std::vector<std::vector<double>> pod_grid = {{-2.0, -1.05, -0.1}, {0.1, 0.55, 1.0}};
    int n_skip = 10;
    std::string reference = "initial-state"; // or "zero"
    double coarse_width = 2.0;
};

// Everything a campaign needs: the benchmark system, surrogate, time
// discretization, coarse grid, feature kind, splits, model families and
// grids, noise kinds, and the master seed.
struct CampaignConfig {
    int schema_version = 1;
    std::uint64_t master_seed = 0;
    int threads = 0;

    std::string system_kind = "advection-diffusion"; // or "burgers"
    int n_cells = 101;        // advection-diffusion
    double cell_width = 0.1;  // burgers

    SurrogateConfig surrogate;

    std::string scheme = "crank-nicolson";
    double dt = 3e-4;
    int n_steps = 1000;

    int coarse_stride = 20;
    int coarse_count = 50;

    std::string feature_kind = "params";
    std::string response = "qoi";
    int n_train = 40;
    int n_val = 10;
    int n_test = 50;
    int n_noise_train = 20;
    double pca_energy = 0.99;

    std::vector<std::string> families = {"lstm"};
    std::string train_mode = "rt"; // for families that admit NRT and RT
    std::vector<std::string> noise_kinds = {"gaussian", "laplacian", "ar1"};

    double learning_rate = 1e-3;
    int max_epochs = 1000;
    int patience = 20;
    int restarts = 20;
    double holdout_fraction = 0.2;

    GridConfig grids;

    void validate() const;
    std::string to_toml() const;
    static CampaignConfig from_toml(const std::string& text);
    static CampaignConfig load(const std::string& path);
};

} // namespace romerr
