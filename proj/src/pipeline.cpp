#include "romerr/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "romerr/config.hpp"
#include "romerr/datagen.hpp"
#include "romerr/errors.hpp"
#include "romerr/eval.hpp"
#include "romerr/io.hpp"
#include "romerr/noise.hpp"
#include "romerr/regress.hpp"
#include "romerr/rng.hpp"
#include "romerr/threading.hpp"

namespace romerr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool log_enabled() {
    const char* level = std::getenv("ROMERR_LOG");
    return level != nullptr && std::string(level) != "quiet" && std::string(level) != "0";
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[romerr] " << msg << "\n";
}

std::string now_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : s) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::string instance_file(const std::string& stem, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%03d.csv", stem.c_str(), index);
    return buf;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

SystemSpec build_system(const CampaignConfig& cfg) {
    if (cfg.system_kind == "advection-diffusion") return build_advection_diffusion(cfg.n_cells);
    return build_burgers_fom(cfg.cell_width);
}

struct RawInstance {
    ParamVector mu;
    Vector delta_x, delta_q; // over coarse indices 1..card(T)
    double dx0 = 0.0, dq0 = 0.0;
    Matrix residuals;        // N x card(T) when residual features are needed
    Vector qoi_fom, qoi_sur; // fine-grid traces
};

// Solves one parameter instance (FOM + surrogate) and keeps only what the
// dataset needs, so campaigns do not hold full trajectories for every mu.
class SurrogateCampaign {
public:
    SurrogateCampaign(const CampaignConfig& cfg, const SystemSpec& fom)
        : cfg_(cfg), fom_(fom), scheme_(MultistepScheme::from_name(cfg.scheme)) {
        grid_.dt = cfg.dt;
        grid_.n_steps = cfg.n_steps;
        coarse_ = CoarseTimeGrid::strided(cfg.coarse_stride, cfg.coarse_count);
        coarse_.validate(cfg.n_steps);

        if (cfg.surrogate.kind == "pod-galerkin") {
            build_pod();
        } else {
            if (cfg.system_kind != "burgers")
                throw validation_error("coarse-lfm surrogates are defined for the burgers system");
            lfm_ = build_burgers_fom(cfg.surrogate.coarse_width);
            prolongation_ = build_linear_prolongation(cfg.cell_width, cfg.surrogate.coarse_width, 100.0);
        }
    }

    const CoarseTimeGrid& coarse() const { return coarse_; }
    const MultistepScheme& scheme() const { return scheme_; }
    const PODBasis* pod() const { return pod_ ? &*pod_ : nullptr; }

    RawInstance solve(const ParamVector& mu, bool want_residuals) const {
        const Trajectory fom_traj = integrate(fom_, scheme_, grid_, mu);

        std::vector<Vector> surrogate(grid_.n_steps + 1);
        if (pod_) {
            const Trajectory rom_traj = integrate(rom_, scheme_, grid_, mu);
            for (int n = 0; n <= grid_.n_steps; ++n)
                surrogate[n] = pod_->reference + pod_->columns * rom_traj.states[n];
        } else {
            const Trajectory lfm_traj = integrate(lfm_, scheme_, grid_, mu);
            for (int n = 0; n <= grid_.n_steps; ++n)
                surrogate[n] = prolong(prolongation_, lfm_traj.states[n], mu);
        }

        RawInstance raw;
        raw.mu = mu;
        raw.dx0 = (fom_traj.states[0] - surrogate[0]).norm();
        raw.dq0 = fom_.qoi(fom_traj.states[0], 0.0, mu) - fom_.qoi(surrogate[0], 0.0, mu);
        raw.qoi_fom.resize(grid_.n_steps + 1);
        raw.qoi_sur.resize(grid_.n_steps + 1);
        for (int n = 0; n <= grid_.n_steps; ++n) {
            const double t = n * grid_.dt;
            raw.qoi_fom[n] = fom_.qoi(fom_traj.states[n], t, mu);
            raw.qoi_sur[n] = fom_.qoi(surrogate[n], t, mu);
        }

        const int horizon = coarse_.size();
        raw.delta_x.resize(horizon);
        raw.delta_q.resize(horizon);
        if (want_residuals) raw.residuals.resize(fom_.dim, horizon);
        std::vector<Vector> history;
        for (int n = 1; n <= horizon; ++n) {
            const int m = coarse_.tau(n);
            raw.delta_x[n - 1] = (fom_traj.states[m] - surrogate[m]).norm();
            raw.delta_q[n - 1] = raw.qoi_fom[m] - raw.qoi_sur[m];
            if (want_residuals) {
                const int km = std::min(m, scheme_.steps());
                history.assign(km, Vector());
                for (int i = 1; i <= km; ++i) history[i - 1] = surrogate[m - i];
                raw.residuals.col(n - 1) =
                    discrete_residual(fom_, scheme_, surrogate[m], history, m, mu, grid_.dt);
            }
        }
        return raw;
    }

private:
    void build_pod() {
        if (cfg_.system_kind != "advection-diffusion" && cfg_.surrogate.pod_grid.empty())
            throw validation_error("pod-galerkin needs a pod_grid");
        if (static_cast<int>(cfg_.surrogate.pod_grid.size()) != fom_.domain.dim())
            throw validation_error("pod_grid must list values for every parameter dimension");

        // cartesian product of the per-dimension grids
        std::vector<ParamVector> rom_params;
        std::vector<double> current(cfg_.surrogate.pod_grid.size());
        build_grid_points(0, current, rom_params);

        std::vector<Trajectory> snapshots(rom_params.size());
        parallel_for(static_cast<int>(rom_params.size()), cfg_.threads, [&](int i) {
            snapshots[i] = integrate(fom_, scheme_, grid_, rom_params[i]);
        });
        const ReferenceRule rule = cfg_.surrogate.reference == "zero" ? ReferenceRule::Zero
                                                                      : ReferenceRule::InitialState;
        pod_ = compute_pod(snapshots, rule, cfg_.surrogate.n_skip, cfg_.surrogate.K);
        rom_ = galerkin_reduce(fom_, *pod_);
    }

    void build_grid_points(std::size_t dim, std::vector<double>& current,
                           std::vector<ParamVector>& out) const {
        if (dim == cfg_.surrogate.pod_grid.size()) {
            ParamVector mu(current.size());
            for (std::size_t i = 0; i < current.size(); ++i) mu[i] = current[i];
            out.push_back(mu);
            return;
        }
        for (double v : cfg_.surrogate.pod_grid[dim]) {
            current[dim] = v;
            build_grid_points(dim + 1, current, out);
        }
    }

    const CampaignConfig& cfg_;
    SystemSpec fom_;
    MultistepScheme scheme_;
    TimeGrid grid_;
    CoarseTimeGrid coarse_;
    std::optional<PODBasis> pod_;
    SystemSpec rom_;
    SystemSpec lfm_;
    ProlongationOp prolongation_;
};

void generate_impl(const CampaignConfig& cfg, const fs::path& out_dir) {
    const SystemSpec fom = build_system(cfg);
    const FeatureKind kind = feature_kind_from_string(cfg.feature_kind);
    SurrogateCampaign campaign(cfg, fom);

    const std::uint64_t param_seed = mix_seed(cfg.master_seed, fnv1a("parameters"));
    const std::uint64_t noise_split_seed = mix_seed(cfg.master_seed, fnv1a("noise-split"));
    const int n_total = cfg.n_train + cfg.n_val + cfg.n_test;
    const auto params = sample_parameters(fom.domain, n_total, param_seed);

    log_line("solving " + std::to_string(n_total) + " parameter instances");
    const bool want_residuals = needs_residual(kind);
    std::vector<RawInstance> raw(n_total);
    parallel_for(n_total, cfg.threads, [&](int i) {
        try {
            raw[i] = campaign.solve(params[i], want_residuals);
        } catch (const solver_error& err) {
            std::ostringstream mu_text;
            mu_text << params[i].transpose();
            throw solver_error("instance " + std::to_string(i) + " (mu = [" + mu_text.str() +
                                   "]): " + err.what(),
                               err.residual_norm);
        }
    });

    // residual PCA / q-sampling from the training instances only
    FeatureSpec spec;
    spec.kind = kind;
    spec.n_params = fom.domain.dim();
    spec.state_dim = fom.dim;
    std::shared_ptr<ResidualPCA> pca;
    std::shared_ptr<SamplingMatrix> sampling;
    if (needs_pca(kind) || needs_sampling(kind)) {
        const int horizon = campaign.coarse().size();
        Matrix snapshots(fom.dim, cfg.n_train * horizon);
        for (int i = 0; i < cfg.n_train; ++i)
            snapshots.middleCols(i * horizon, horizon) = raw[i].residuals;
        pca = std::make_shared<ResidualPCA>(build_residual_pca(snapshots, cfg.pca_energy));
        sampling = std::make_shared<SamplingMatrix>(qsample_select(*pca, pca->n_r()));
        if (needs_pca(kind)) spec.pca = pca;
        if (needs_sampling(kind)) spec.sampling = sampling;
        log_line("residual PCA rank " + std::to_string(pca->n_r()));
    }

    // assemble sequences
    Dataset all;
    all.kind = kind;
    all.grid = campaign.coarse();
    all.sequences.resize(n_total);
    const double dt = cfg.dt;
    parallel_for(n_total, cfg.threads, [&](int i) {
        InstanceSequence seq;
        seq.mu = raw[i].mu;
        seq.delta_x0 = raw[i].dx0;
        seq.delta_q0 = raw[i].dq0;
        const int horizon = campaign.coarse().size();
        seq.records.reserve(horizon);
        for (int n = 1; n <= horizon; ++n) {
            SequenceRecord rec;
            rec.coarse_index = n;
            rec.fine_index = campaign.coarse().tau(n);
            rec.time = rec.fine_index * dt;
            rec.delta_x = raw[i].delta_x[n - 1];
            rec.delta_q = raw[i].delta_q[n - 1];
            if (want_residuals) {
                const Vector residual = raw[i].residuals.col(n - 1);
                if (needs_sampled_residual(kind)) {
                    const Vector sampled = sample_entries(residual, *spec.sampling);
                    rec.features = extract_features(spec, seq.mu, rec.time, nullptr, &sampled);
                } else {
                    rec.features = extract_features(spec, seq.mu, rec.time, &residual, nullptr);
                }
            } else {
                rec.features = extract_features(spec, seq.mu, rec.time);
            }
            seq.records.push_back(std::move(rec));
        }
        all.sequences[i] = std::move(seq);
    });

    SplitConfig split_cfg;
    split_cfg.n_train = cfg.n_train;
    split_cfg.n_val = cfg.n_val;
    split_cfg.n_test = cfg.n_test;
    split_cfg.n_noise_train = cfg.n_noise_train;
    split_cfg.seed = noise_split_seed;
    const SplitResult splits = split_dataset(all, split_cfg);

    fs::create_directories(out_dir);
    const int feature_dim = spec.dimension();
    for (int i = 0; i < n_total; ++i) {
        CsvTable table;
        table.header = {"coarse_index", "fine_index", "time"};
        for (int j = 0; j < feature_dim; ++j) table.header.push_back("f" + std::to_string(j));
        table.header.push_back("delta_x");
        table.header.push_back("delta_q");
        for (const auto& rec : all.sequences[i].records) {
            std::vector<std::string> row = {std::to_string(rec.coarse_index),
                                            std::to_string(rec.fine_index), format_double(rec.time)};
            for (int j = 0; j < feature_dim; ++j) row.push_back(format_double(rec.features[j]));
            row.push_back(format_double(rec.delta_x));
            row.push_back(format_double(rec.delta_q));
            table.rows.push_back(std::move(row));
        }
        write_csv(out_dir / instance_file("dataset", i), table);

        CsvTable summary;
        summary.header = {"fine_index", "time", "qoi_fom", "qoi_surrogate"};
        for (int n = 0; n <= cfg.n_steps; ++n)
            summary.rows.push_back({std::to_string(n), format_double(n * dt),
                                    format_double(raw[i].qoi_fom[n]),
                                    format_double(raw[i].qoi_sur[n])});
        write_csv(out_dir / instance_file("summary", i), summary);
    }

    json artifacts = json::object();
    if (const PODBasis* pod = campaign.pod()) {
        write_matrix(out_dir / "pod_basis.mat", pod->columns);
        write_vector(out_dir / "pod_reference.mat", pod->reference);
        artifacts["pod_basis"] = "pod_basis.mat";
        artifacts["pod_reference"] = "pod_reference.mat";
    }
    if (pca) {
        write_matrix(out_dir / "residual_pca_basis.mat", pca->basis);
        write_vector(out_dir / "residual_pca_mean.mat", pca->mean);
        write_vector(out_dir / "residual_pca_singular_values.mat", pca->singular_values);
        artifacts["residual_pca_basis"] = "residual_pca_basis.mat";
        artifacts["residual_pca_mean"] = "residual_pca_mean.mat";
        artifacts["residual_pca_singular_values"] = "residual_pca_singular_values.mat";
        artifacts["sampling_rows"] = sampling->rows;
    }

    json manifest;
    manifest["schema_version"] = 1;
    manifest["metadata"] = {{"created_at", now_iso8601()}, {"tool", "romerr"}};
    manifest["config"] = cfg.to_toml();
    manifest["master_seed"] = cfg.master_seed;
    manifest["sub_seeds"] = {{"parameters", param_seed}, {"noise_split", noise_split_seed}};
    manifest["system"] = {{"kind", cfg.system_kind},
                          {"dim", fom.dim},
                          {"n_params", fom.domain.dim()}};
    manifest["feature"] = {{"kind", cfg.feature_kind}, {"dimension", feature_dim}};
    manifest["response"] = cfg.response;
    manifest["coarse_grid"] = {{"stride", cfg.coarse_stride},
                               {"count", cfg.coarse_count},
                               {"indices", all.grid.indices}};
    manifest["dt"] = cfg.dt;
    manifest["n_steps"] = cfg.n_steps;

    json instances = json::array();
    for (int i = 0; i < n_total; ++i) {
        std::vector<double> mu(all.sequences[i].mu.data(),
                               all.sequences[i].mu.data() + all.sequences[i].mu.size());
        instances.push_back({{"index", i},
                             {"file", instance_file("dataset", i)},
                             {"summary", instance_file("summary", i)},
                             {"mu", mu},
                             {"delta_x0", all.sequences[i].delta_x0},
                             {"delta_q0", all.sequences[i].delta_q0}});
    }
    manifest["instances"] = instances;
    manifest["splits"] = {{"train", splits.train_idx},
                          {"val", splits.val_idx},
                          {"test", splits.test_idx},
                          {"noise_train", splits.noise_train_idx},
                          {"noise_test", splits.noise_test_idx}};
    manifest["artifacts"] = artifacts;
    write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
    log_line("wrote " + std::to_string(n_total) + " dataset files to " + out_dir.string());
}

// ---------------------------------------------------------------------------
// dataset loading
// ---------------------------------------------------------------------------

struct LoadedData {
    json manifest;
    Dataset all;
    SplitResult splits;
    CampaignConfig config;
};

LoadedData load_data_dir(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw validation_error("no manifest.json in data directory " + dir.string());
    LoadedData data;
    data.manifest = json::parse(read_text_file(manifest_path));
    data.config = CampaignConfig::from_toml(data.manifest.at("config").get<std::string>());

    data.all.kind = feature_kind_from_string(data.manifest.at("feature").at("kind"));
    data.all.grid.indices =
        data.manifest.at("coarse_grid").at("indices").get<std::vector<int>>();
    const int feature_dim = data.manifest.at("feature").at("dimension").get<int>();

    for (const auto& inst : data.manifest.at("instances")) {
        InstanceSequence seq;
        const auto mu = inst.at("mu").get<std::vector<double>>();
        seq.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
        seq.delta_x0 = inst.at("delta_x0").get<double>();
        seq.delta_q0 = inst.at("delta_q0").get<double>();

        const CsvTable table = read_csv(dir / inst.at("file").get<std::string>());
        if (static_cast<int>(table.header.size()) != feature_dim + 5)
            throw compatibility_error("dataset file " + inst.at("file").get<std::string>() +
                                      " does not match the manifest feature dimension");
        for (const auto& row : table.rows) {
            SequenceRecord rec;
            rec.coarse_index = std::stoi(row[0]);
            rec.fine_index = std::stoi(row[1]);
            rec.time = std::strtod(row[2].c_str(), nullptr);
            rec.features.resize(feature_dim);
            for (int j = 0; j < feature_dim; ++j)
                rec.features[j] = std::strtod(row[3 + j].c_str(), nullptr);
            rec.delta_x = std::strtod(row[3 + feature_dim].c_str(), nullptr);
            rec.delta_q = std::strtod(row[4 + feature_dim].c_str(), nullptr);
            seq.records.push_back(std::move(rec));
        }
        data.all.sequences.push_back(std::move(seq));
    }

    auto subset = [&](const char* name) {
        Dataset out;
        out.kind = data.all.kind;
        out.grid = data.all.grid;
        for (int i : data.manifest.at("splits").at(name).get<std::vector<int>>())
            out.sequences.push_back(data.all.sequences.at(i));
        return out;
    };
    data.splits.train = subset("train");
    data.splits.val = subset("val");
    data.splits.test = subset("test");
    data.splits.noise_train = subset("noise_train");
    data.splits.noise_test = subset("noise_test");
    data.splits.train_idx = data.manifest.at("splits").at("train").get<std::vector<int>>();
    data.splits.val_idx = data.manifest.at("splits").at("val").get<std::vector<int>>();
    data.splits.test_idx = data.manifest.at("splits").at("test").get<std::vector<int>>();
    data.splits.noise_train_idx =
        data.manifest.at("splits").at("noise_train").get<std::vector<int>>();
    data.splits.noise_test_idx =
        data.manifest.at("splits").at("noise_test").get<std::vector<int>>();
    return data;
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Vector vector_from_json(const json& arr) {
    Vector v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

json matrix_to_json(const Matrix& m) {
    // row-major flattened with explicit shape
    json obj;
    obj["rows"] = m.rows();
    obj["cols"] = m.cols();
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    obj["data"] = data;
    return obj;
}

Matrix matrix_from_json(const json& obj) {
    Matrix m(obj.at("rows").get<Eigen::Index>(), obj.at("cols").get<Eigen::Index>());
    const auto& data = obj.at("data");
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = data.at(at++).get<double>();
    return m;
}

json noise_to_json(const NoiseModel& m) {
    json obj;
    obj["kind"] = to_string(m.kind);
    obj["degenerate"] = m.degenerate;
    switch (m.kind) {
        case NoiseKind::Gaussian: obj["sigma2"] = m.sigma2; break;
        case NoiseKind::Laplacian: obj["b"] = m.b; break;
        case NoiseKind::AR1:
            obj["c"] = m.c;
            obj["sigma2"] = m.sigma2;
            break;
    }
    return obj;
}

NoiseModel noise_from_json(const json& obj) {
    NoiseModel m;
    m.kind = noise_kind_from_string(obj.at("kind").get<std::string>());
    m.degenerate = obj.value("degenerate", false);
    if (obj.contains("sigma2")) m.sigma2 = obj.at("sigma2").get<double>();
    if (obj.contains("b")) m.b = obj.at("b").get<double>();
    if (obj.contains("c")) m.c = obj.at("c").get<double>();
    return m;
}

json model_to_json(const RegressionModel& model, int train_size,
                   const std::vector<NoiseModel>& noise_models) {
    json obj;
    obj["schema_version"] = 1;
    obj["family"] = to_string(model.family);
    obj["mode"] = to_string(model.mode);
    obj["feature_kind"] = to_string(model.feature_kind);
    obj["response"] = to_string(model.response);
    obj["train_size"] = train_size;
    obj["validation_score"] = model.validation_score;
    obj["ridge"] = model.ridge;
    obj["dims"] = {{"n_features", model.dims.n_features},
                   {"depth", model.dims.depth},
                   {"width", model.dims.width}};
    json hyper = {{"ridge", model.ridge}};
    if (model.family == Family::kNN) {
        hyper["k"] = model.knn_k;
        hyper["weighting"] = to_string(model.knn_weighting);
    } else if (model.family == Family::GP) {
        hyper["lambda"] = model.gp_lambda;
    } else if (model.family == Family::LARX) {
        hyper["latent_dim"] = model.dims.width;
    } else if (model.family != Family::ARX) {
        hyper["depth"] = model.dims.depth;
        hyper["width"] = model.dims.width;
    }
    obj["hyperparameters"] = hyper;
    obj["standardizer"] = {{"feature_mean", vector_to_json(model.standardizer.feature_mean)},
                           {"feature_std", vector_to_json(model.standardizer.feature_std)},
                           {"response_mean", vector_to_json(model.standardizer.response_mean)},
                           {"response_std", vector_to_json(model.standardizer.response_std)}};
    if (model.theta.size() > 0) obj["theta"] = vector_to_json(model.theta);
    if (model.family == Family::kNN) {
        obj["knn"] = {{"k", model.knn_k},
                      {"weighting", to_string(model.knn_weighting)},
                      {"features", matrix_to_json(model.knn_features)},
                      {"responses", vector_to_json(model.knn_responses)}};
    }
    if (model.family == Family::GP) {
        obj["gp"] = {{"lambda", model.gp_lambda},
                     {"param_mean", vector_to_json(model.gp_param_mean)},
                     {"param_std", vector_to_json(model.gp_param_std)},
                     {"train_params", matrix_to_json(model.gp_train_params)},
                     {"train_responses", matrix_to_json(model.gp_train_responses)}};
    }
    json restarts = json::array();
    for (const auto& r : model.log.restarts)
        restarts.push_back({{"epochs_run", r.epochs_run},
                            {"best_holdout_loss", r.best_holdout_loss},
                            {"diverged", r.diverged}});
    obj["training_log"] = {{"chosen_restart", model.log.chosen_restart}, {"restarts", restarts}};
    json noise = json::object();
    for (const auto& m : noise_models) noise[to_string(m.kind)] = noise_to_json(m);
    obj["noise"] = noise;
    return obj;
}

RegressionModel model_from_json(const json& obj) {
    RegressionModel model;
    model.family = family_from_string(obj.at("family").get<std::string>());
    model.mode = train_mode_from_string(obj.at("mode").get<std::string>());
    model.feature_kind = feature_kind_from_string(obj.at("feature_kind").get<std::string>());
    model.response = response_from_string(obj.at("response").get<std::string>());
    model.validation_score = obj.value("validation_score", 0.0);
    model.ridge = obj.value("ridge", 0.0);
    model.dims.family = model.family;
    model.dims.n_features = obj.at("dims").at("n_features").get<int>();
    model.dims.depth = obj.at("dims").at("depth").get<int>();
    model.dims.width = obj.at("dims").at("width").get<int>();
    const auto& s = obj.at("standardizer");
    model.standardizer.feature_mean = vector_from_json(s.at("feature_mean"));
    model.standardizer.feature_std = vector_from_json(s.at("feature_std"));
    model.standardizer.response_mean = vector_from_json(s.at("response_mean"));
    model.standardizer.response_std = vector_from_json(s.at("response_std"));
    if (obj.contains("theta")) model.theta = vector_from_json(obj.at("theta"));
    if (obj.contains("knn")) {
        model.knn_k = obj.at("knn").at("k").get<int>();
        model.knn_weighting =
            knn_weighting_from_string(obj.at("knn").at("weighting").get<std::string>());
        model.knn_features = matrix_from_json(obj.at("knn").at("features"));
        model.knn_responses = vector_from_json(obj.at("knn").at("responses"));
    }
    if (obj.contains("gp")) {
        model.gp_lambda = obj.at("gp").at("lambda").get<double>();
        model.gp_param_mean = vector_from_json(obj.at("gp").at("param_mean"));
        model.gp_param_std = vector_from_json(obj.at("gp").at("param_std"));
        model.gp_train_params = matrix_from_json(obj.at("gp").at("train_params"));
        model.gp_train_responses = matrix_from_json(obj.at("gp").at("train_responses"));
        Matrix x_std = model.gp_train_params.rowwise() - model.gp_param_mean.transpose();
        for (Eigen::Index j = 0; j < x_std.cols(); ++j) x_std.col(j) /= model.gp_param_std[j];
        for (Eigen::Index t = 0; t < model.gp_train_responses.rows(); ++t)
            model.gp_models.push_back(
                gp_fit(x_std, model.gp_train_responses.row(t), model.gp_lambda));
    }
    return model;
}

std::vector<HyperTuple> grid_from_config(Family family, const GridConfig& grids) {
    std::vector<HyperTuple> grid;
    switch (family) {
        case Family::kNN:
            for (int k : grids.knn_ks)
                for (KnnWeighting w : {KnnWeighting::Uniform, KnnWeighting::InverseDistance}) {
                    HyperTuple t;
                    t.knn_k = k;
                    t.knn_weighting = w;
                    grid.push_back(t);
                }
            return grid;
        case Family::GP: {
            if (grids.gp_lambdas.empty()) return default_grid(Family::GP);
            for (double lambda : grids.gp_lambdas) {
                HyperTuple t;
                t.gp_lambda = lambda;
                grid.push_back(t);
            }
            return grid;
        }
        case Family::ARX:
            for (double r : grids.ridges) {
                HyperTuple t;
                t.ridge = r;
                grid.push_back(t);
            }
            return grid;
        case Family::LARX:
            for (int width : grids.larx_widths)
                for (double r : grids.ridges) {
                    HyperTuple t;
                    t.width = width;
                    t.ridge = r;
                    grid.push_back(t);
                }
            return grid;
        default:
            for (int depth : grids.depths)
                for (int width : grids.widths)
                    for (double r : grids.ridges) {
                        HyperTuple t;
                        t.depth = depth;
                        t.width = width;
                        t.ridge = r;
                        grid.push_back(t);
                    }
            return grid;
    }
}

std::vector<std::vector<double>> regression_error_sequences(const RegressionModel& model,
                                                            const Dataset& data) {
    std::vector<std::vector<double>> errors;
    errors.reserve(data.sequences.size());
    for (const auto& seq : data.sequences) {
        const Vector preds = predict_instance(model, seq);
        std::vector<double> e(seq.records.size());
        for (std::size_t n = 0; n < seq.records.size(); ++n)
            e[n] = response_value(seq.records[n], model.response) - preds[static_cast<int>(n)];
        errors.push_back(std::move(e));
    }
    return errors;
}

void train_impl(const fs::path& data_dir, const std::string& family_name,
                const std::string& feature_kind, const std::string& response_name,
                const std::string& config_path, const fs::path& out_path,
                const CommandOverrides& overrides) {
    const Family family = family_from_string(family_name);
    const ResponseKind response = response_from_string(response_name);
    feature_kind_from_string(feature_kind); // validate before touching the data

    const LoadedData data = load_data_dir(data_dir);
    if (to_string(data.all.kind) != feature_kind)
        throw compatibility_error("data directory was generated with feature kind '" +
                                  to_string(data.all.kind) + "', not '" + feature_kind + "'");

    CampaignConfig cfg = config_path.empty()
                             ? data.config
                             : CampaignConfig::load(config_path);
    if (overrides.seed) cfg.master_seed = *overrides.seed;
    if (overrides.threads) cfg.threads = *overrides.threads;

    TrainConfig train_cfg;
    train_cfg.learning_rate = cfg.learning_rate;
    train_cfg.max_epochs = cfg.max_epochs;
    train_cfg.patience = cfg.patience;
    train_cfg.restarts = cfg.restarts;
    train_cfg.holdout_fraction = cfg.holdout_fraction;
    train_cfg.threads = cfg.threads;
    train_cfg.seed = mix_seed(cfg.master_seed, fnv1a("train/" + family_name + "/" + response_name));

    const TrainMode mode = mode_admissible(family, train_mode_from_string(cfg.train_mode))
                               ? train_mode_from_string(cfg.train_mode)
                               : default_mode(family);

    const auto grid = grid_from_config(family, cfg.grids);
    log_line("grid search over " + std::to_string(grid.size()) + " tuples for " + family_name);
    auto [model, score] =
        grid_search_select(family, mode, grid, data.splits.train, data.splits.val, response,
                           train_cfg);

    std::vector<NoiseModel> noise_models;
    if (!data.splits.noise_train.sequences.empty()) {
        const auto error_seqs = regression_error_sequences(model, data.splits.noise_train);
        std::vector<double> flat;
        for (const auto& seq : error_seqs) flat.insert(flat.end(), seq.begin(), seq.end());
        for (const auto& kind_name : cfg.noise_kinds) {
            switch (noise_kind_from_string(kind_name)) {
                case NoiseKind::Gaussian: noise_models.push_back(fit_gaussian(flat)); break;
                case NoiseKind::Laplacian: noise_models.push_back(fit_laplacian(flat)); break;
                case NoiseKind::AR1: noise_models.push_back(fit_ar1(error_seqs)); break;
            }
        }
    }

    const json checkpoint =
        model_to_json(model, static_cast<int>(data.splits.train.sequences.size()), noise_models);
    write_text_file(out_path, checkpoint.dump(2) + "\n");
    log_line("wrote checkpoint " + out_path.string() + " (validation score " +
             format_double(score) + ")");
}

// Plot-ready histogram data for the noise figures: raw regression errors
// with each fitted density sampled at the bin centers, plus one standardized
// histogram per noise kind against its reference density.
void write_noise_histograms(const fs::path& out_dir, const std::vector<NoiseModel>& noise_models,
                            const std::vector<std::vector<double>>& error_seqs) {
    int horizon = 1;
    std::vector<double> flat;
    for (const auto& seq : error_seqs) {
        horizon = std::max(horizon, static_cast<int>(seq.size()));
        flat.insert(flat.end(), seq.begin(), seq.end());
    }
    if (flat.empty()) return;

    auto histogram = [](const std::vector<double>& values, int bins, CsvTable& table,
                        const std::function<std::vector<double>(double)>& densities) {
        double lo = values[0], hi = values[0];
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi <= lo) hi = lo + 1.0;
        const double width = (hi - lo) / bins;
        std::vector<int> counts(bins, 0);
        for (double v : values) {
            int bin = static_cast<int>((v - lo) / width);
            if (bin >= bins) bin = bins - 1;
            ++counts[bin];
        }
        for (int b = 0; b < bins; ++b) {
            std::vector<std::string> row = {format_double(lo + b * width),
                                            format_double(lo + (b + 1) * width),
                                            std::to_string(counts[b])};
            for (double d : densities(lo + (b + 0.5) * width)) row.push_back(format_double(d));
            table.rows.push_back(std::move(row));
        }
    };

    const int bins = 30;
    CsvTable raw;
    raw.header = {"bin_left", "bin_right", "count"};
    for (const auto& nm : noise_models) raw.header.push_back("density_" + to_string(nm.kind));
    histogram(flat, bins, raw, [&](double x) {
        std::vector<double> out;
        for (const auto& nm : noise_models) out.push_back(pooled_density(nm, x, horizon));
        return out;
    });
    write_csv(out_dir / "noise_histogram_raw.csv", raw);

    for (const auto& nm : noise_models) {
        const auto standardized = standardize_errors(nm, error_seqs);
        CsvTable table;
        table.header = {"bin_left", "bin_right", "count", "density"};
        NoiseModel reference;
        reference.kind = nm.kind == NoiseKind::Laplacian ? NoiseKind::Laplacian : NoiseKind::Gaussian;
        reference.sigma2 = 1.0;
        reference.b = 1.0;
        histogram(standardized, bins, table, [&](double x) {
            return std::vector<double>{pooled_density(reference, x, 1)};
        });
        write_csv(out_dir / ("noise_histogram_std_" + to_string(nm.kind) + ".csv"), table);
    }
}

void evaluate_impl(const fs::path& model_path, const fs::path& data_dir, const fs::path& out_dir) {
    const json checkpoint = json::parse(read_text_file(model_path));
    const RegressionModel model = model_from_json(checkpoint);
    const LoadedData data = load_data_dir(data_dir);
    if (model.feature_kind != data.all.kind)
        throw compatibility_error("model feature kind '" + to_string(model.feature_kind) +
                                  "' does not match the data feature kind '" +
                                  to_string(data.all.kind) + "'");

    std::vector<NoiseModel> noise_models;
    if (checkpoint.contains("noise"))
        for (const auto& [key, value] : checkpoint.at("noise").items())
            noise_models.push_back(noise_from_json(value));

    fs::create_directories(out_dir);

    // deterministic-model metrics on the test split
    std::vector<double> truth, preds;
    std::vector<Vector> per_instance_preds(data.splits.test.sequences.size());
    for (std::size_t i = 0; i < data.splits.test.sequences.size(); ++i) {
        const auto& seq = data.splits.test.sequences[i];
        per_instance_preds[i] = predict_instance(model, seq);
        for (std::size_t n = 0; n < seq.records.size(); ++n) {
            truth.push_back(response_value(seq.records[n], model.response));
            preds.push_back(per_instance_preds[i][static_cast<int>(n)]);
        }
    }

    json metrics;
    metrics["schema_version"] = 1;
    metrics["family"] = to_string(model.family);
    metrics["mode"] = to_string(model.mode);
    metrics["feature_kind"] = to_string(model.feature_kind);
    metrics["response"] = to_string(model.response);
    metrics["train_size"] = checkpoint.value("train_size", 0);
    metrics["n_test_instances"] = data.splits.test.sequences.size();
    try {
        const double f = fvu(truth, preds);
        metrics["fvu"] = f;
        metrics["r2"] = 1.0 - f;
        metrics["degenerate_variance"] = false;
    } catch (const numeric_error&) {
        metrics["fvu"] = nullptr;
        metrics["r2"] = nullptr;
        metrics["degenerate_variance"] = true;
    }

    // noise-model metrics on the noise-test split
    json noise_metrics = json::object();
    if (!data.splits.noise_test.sequences.empty() && !noise_models.empty()) {
        const auto error_seqs = regression_error_sequences(model, data.splits.noise_test);
        for (const auto& nm : noise_models) {
            json entry;
            for (double c : {0.68, 0.95, 0.99})
                entry["omega(" + format_double(c) + ")"] = validation_frequency(nm, error_seqs, c);
            const auto standardized = standardize_errors(nm, error_seqs);
            entry["ks"] = ks_statistic(standardized, nm.kind == NoiseKind::Laplacian
                                                         ? ReferenceCdf::StandardLaplace
                                                         : ReferenceCdf::StandardNormal);
            noise_metrics[to_string(nm.kind)] = entry;
        }
        write_noise_histograms(out_dir, noise_models, error_seqs);
    }
    metrics["noise"] = noise_metrics;

    // per-instance prediction CSVs with per-index noise scales
    for (std::size_t i = 0; i < data.splits.test.sequences.size(); ++i) {
        const auto& seq = data.splits.test.sequences[i];
        CsvTable table;
        table.header = {"coarse_index", "time", "truth", "prediction"};
        for (const auto& nm : noise_models)
            table.header.push_back("noise_scale_" + to_string(nm.kind));
        std::vector<std::vector<double>> scales;
        for (const auto& nm : noise_models)
            scales.push_back(noise_scale_sequence(nm, static_cast<int>(seq.records.size())));
        for (std::size_t n = 0; n < seq.records.size(); ++n) {
            std::vector<std::string> row = {
                std::to_string(seq.records[n].coarse_index), format_double(seq.records[n].time),
                format_double(response_value(seq.records[n], model.response)),
                format_double(per_instance_preds[i][static_cast<int>(n)])};
            for (const auto& s : scales) row.push_back(format_double(s[n]));
            table.rows.push_back(std::move(row));
        }
        write_csv(out_dir / instance_file("predictions", static_cast<int>(i)), table);
    }

    write_text_file(out_dir / "metrics.json", metrics.dump(2) + "\n");
    log_line("wrote metrics to " + (out_dir / "metrics.json").string());
}

void report_impl(const std::vector<std::string>& evaluation_dirs, const fs::path& out_path) {
    if (evaluation_dirs.empty()) throw validation_error("report needs at least one evaluation");

    std::map<ReportKey, double> results;
    for (const auto& dir : evaluation_dirs) {
        const fs::path metrics_path = fs::path(dir) / "metrics.json";
        json metrics;
        try {
            metrics = json::parse(read_text_file(metrics_path));
            ReportKey key;
            key.family = metrics.at("family").get<std::string>();
            key.feature_kind = metrics.at("feature_kind").get<std::string>();
            key.train_size = metrics.at("train_size").get<int>();
            if (!metrics.at("fvu").is_null()) results[key] = metrics.at("fvu").get<double>();
        } catch (const json::exception& err) {
            throw validation_error("malformed metrics file " + metrics_path.string() + ": " +
                                   err.what());
        }
    }
    if (results.empty()) throw validation_error("no usable FVU values in the evaluations");

    const ReportTable table = report_grid(results);
    fs::create_directories(out_path);

    CsvTable csv;
    csv.header = {"family", "feature_kind", "train_size", "fvu"};
    for (const auto& [key, value] : table.rows)
        csv.rows.push_back({key.family, key.feature_kind, std::to_string(key.train_size),
                            format_double(value)});
    write_csv(out_path / "report.csv", csv);

    json summary;
    summary["schema_version"] = 1;
    json rows = json::array();
    for (const auto& [key, value] : table.rows)
        rows.push_back({{"family", key.family},
                        {"feature_kind", key.feature_kind},
                        {"train_size", key.train_size},
                        {"fvu", value}});
    summary["rows"] = rows;
    summary["lowest_fvu_percentage"] = table.lowest_fvu_percentage;
    summary["best_feature"] = table.best_feature;
    write_text_file(out_path / "report.json", summary.dump(2) + "\n");
    log_line("wrote report to " + out_path.string());
}

int guarded(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const compatibility_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitCompatibility;
    } catch (const training_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitTraining;
    } catch (const solver_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitSolver;
    } catch (const validation_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const numeric_error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitConfig;
    }
}

} // namespace

int run_generate(const std::string& config_path, const std::string& out_dir,
                 const CommandOverrides& overrides) {
    return guarded([&] {
        CampaignConfig cfg = CampaignConfig::load(config_path);
        if (overrides.seed) cfg.master_seed = *overrides.seed;
        if (overrides.threads) cfg.threads = *overrides.threads;
        cfg.validate();
        generate_impl(cfg, out_dir);
    });
}

int run_train(const std::string& data_dir, const std::string& family,
              const std::string& feature_kind, const std::string& response,
              const std::string& config_path, const std::string& out_path,
              const CommandOverrides& overrides) {
    return guarded([&] {
        train_impl(data_dir, family, feature_kind, response, config_path, out_path, overrides);
    });
}

int run_evaluate(const std::string& model_path, const std::string& data_dir,
                 const std::string& out_dir) {
    return guarded([&] { evaluate_impl(model_path, data_dir, out_dir); });
}

int run_report(const std::vector<std::string>& evaluation_dirs, const std::string& out_path) {
    return guarded([&] { report_impl(evaluation_dirs, out_path); });
}

} // namespace romerr
