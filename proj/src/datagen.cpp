#include "romerr/datagen.hpp"

#include <algorithm>
#include <numeric>

#include "romerr/errors.hpp"
#include "romerr/rng.hpp"

namespace romerr {

int CoarseTimeGrid::tau(int n) const {
    if (n < 0 || n > size()) throw validation_error("coarse time index out of range");
    return n == 0 ? 0 : indices[n - 1];
}

void CoarseTimeGrid::validate(int n_steps) const {
    int prev = 0;
    for (int idx : indices) {
        if (idx <= prev) throw validation_error("coarse time indices must be strictly increasing");
        if (idx > n_steps) throw validation_error("coarse time index exceeds the fine grid");
        prev = idx;
    }
    if (indices.empty()) throw validation_error("coarse time grid must be nonempty");
}

CoarseTimeGrid CoarseTimeGrid::strided(int stride, int count) {
    if (stride < 1 || count < 1)
        throw validation_error("coarse grid stride and count must be positive");
    CoarseTimeGrid grid;
    grid.indices.reserve(count);
    for (int n = 1; n <= count; ++n) grid.indices.push_back(stride * n);
    return grid;
}

void SplitConfig::validate() const {
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw validation_error("split counts must be positive");
    if (n_train != 4 * n_val)
        throw validation_error("split requires an 80/20 train/validation ratio (n_train = 4 n_val)");
    if (n_noise_train < 0 || n_noise_train > n_test)
        throw validation_error("noise-train count must lie in [0, n_test]");
}

std::vector<ParamVector> sample_parameters(const Box& domain, int count, std::uint64_t seed) {
    if (domain.dim() < 1) throw validation_error("empty parameter domain");
    for (int d = 0; d < domain.dim(); ++d)
        if (domain.hi[d] < domain.lo[d]) throw validation_error("parameter box has hi < lo");
    if (count < 1) throw validation_error("sample count must be >= 1");

    Rng rng(seed);
    std::vector<ParamVector> samples(count);
    for (auto& mu : samples) {
        mu = ParamVector(domain.dim());
        for (int d = 0; d < domain.dim(); ++d) mu[d] = rng.uniform(domain.lo[d], domain.hi[d]);
    }
    return samples;
}

InstanceSequence assemble_dataset(const Trajectory& fom, const Trajectory& surrogate,
                                  const SystemSpec& system, const MultistepScheme& scheme,
                                  const FeatureSpec& spec, const CoarseTimeGrid& grid) {
    if (fom.grid.n_steps != surrogate.grid.n_steps || fom.grid.dt != surrogate.grid.dt)
        throw shape_error("FOM and surrogate trajectories must share the fine time grid");
    if (static_cast<int>(fom.states.size()) != fom.grid.n_steps + 1 ||
        static_cast<int>(surrogate.states.size()) != surrogate.grid.n_steps + 1)
        throw shape_error("trajectory state count does not match its grid");
    grid.validate(fom.grid.n_steps);

    const double dt = fom.grid.dt;
    const ParamVector& mu = fom.mu;
    const int k = scheme.steps();

    InstanceSequence seq;
    seq.mu = mu;
    seq.delta_x0 = (fom.states[0] - surrogate.states[0]).norm();
    seq.delta_q0 = system.qoi(fom.states[0], 0.0, mu) - system.qoi(surrogate.states[0], 0.0, mu);

    seq.records.reserve(grid.size());
    std::vector<Vector> history;
    for (int n = 1; n <= grid.size(); ++n) {
        const int m = grid.tau(n);
        const double t = m * dt;

        SequenceRecord rec;
        rec.coarse_index = n;
        rec.fine_index = m;
        rec.time = t;
        rec.delta_x = (fom.states[m] - surrogate.states[m]).norm();
        rec.delta_q =
            system.qoi(fom.states[m], t, mu) - system.qoi(surrogate.states[m], t, mu);

        if (needs_residual(spec.kind)) {
            const int km = std::min(m, k);
            history.assign(km, Vector());
            for (int i = 1; i <= km; ++i) history[i - 1] = surrogate.states[m - i];
            const Vector residual =
                discrete_residual(system, scheme, surrogate.states[m], history, m, mu, dt);
            if (needs_sampled_residual(spec.kind)) {
                const Vector sampled = sample_entries(residual, *spec.sampling);
                rec.features = extract_features(spec, mu, t, nullptr, &sampled);
            } else {
                rec.features = extract_features(spec, mu, t, &residual, nullptr);
            }
        } else {
            rec.features = extract_features(spec, mu, t);
        }
        seq.records.push_back(std::move(rec));
    }
    return seq;
}

namespace {

Dataset subset(const Dataset& all, const std::vector<int>& idx) {
    Dataset out;
    out.kind = all.kind;
    out.grid = all.grid;
    out.sequences.reserve(idx.size());
    for (int i : idx) out.sequences.push_back(all.sequences[i]);
    return out;
}

} // namespace

SplitResult split_dataset(const Dataset& all, const SplitConfig& cfg) {
    cfg.validate();
    const int total = cfg.n_train + cfg.n_val + cfg.n_test;
    if (static_cast<int>(all.sequences.size()) < total)
        throw validation_error("dataset has fewer parameter instances than the split requires");

    SplitResult res;
    for (int i = 0; i < cfg.n_train; ++i) res.train_idx.push_back(i);
    for (int i = 0; i < cfg.n_val; ++i) res.val_idx.push_back(cfg.n_train + i);
    for (int i = 0; i < cfg.n_test; ++i) res.test_idx.push_back(cfg.n_train + cfg.n_val + i);

    // noise-train instances drawn randomly from the test set (seeded
    // Fisher-Yates prefix); noise-test is the complement
    std::vector<int> shuffled = res.test_idx;
    Rng rng(mix_seed(cfg.seed, 0x6e6f697365ULL)); // "noise" stream
    for (int i = static_cast<int>(shuffled.size()) - 1; i > 0; --i)
        std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
    res.noise_train_idx.assign(shuffled.begin(), shuffled.begin() + cfg.n_noise_train);
    res.noise_test_idx.assign(shuffled.begin() + cfg.n_noise_train, shuffled.end());
    std::sort(res.noise_train_idx.begin(), res.noise_train_idx.end());
    std::sort(res.noise_test_idx.begin(), res.noise_test_idx.end());

    res.train = subset(all, res.train_idx);
    res.val = subset(all, res.val_idx);
    res.test = subset(all, res.test_idx);
    res.noise_train = subset(all, res.noise_train_idx);
    res.noise_test = subset(all, res.noise_test_idx);
    return res;
}

} // namespace romerr
