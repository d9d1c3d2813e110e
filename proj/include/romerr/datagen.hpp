#pragma once

#include <cstdint>
#include <vector>

#include "romerr/features.hpp"
#include "romerr/integrator.hpp"

namespace romerr {

// Strictly increasing subset of the fine time indices {1..N_t} with the map
// tau from coarse index to fine index, tau(0) = 0.
struct CoarseTimeGrid {
    std::vector<int> indices;

    int size() const { return static_cast<int>(indices.size()); }
    int tau(int n) const;
    void validate(int n_steps) const;
    static CoarseTimeGrid strided(int stride, int count);
};

struct SequenceRecord {
    int coarse_index = 0; // n
    int fine_index = 0;   // tau(n)
    double time = 0.0;
    Vector features;
    double delta_x = 0.0;
    double delta_q = 0.0;
};

// One parameter instance's response-feature sequence over the coarse grid,
// plus the directly computable initial errors.
struct InstanceSequence {
    ParamVector mu;
    std::vector<SequenceRecord> records;
    double delta_x0 = 0.0;
    double delta_q0 = 0.0;
};

struct Dataset {
    std::vector<InstanceSequence> sequences;
    FeatureKind kind = FeatureKind::Params;
    CoarseTimeGrid grid;
};

struct SplitConfig {
    int n_train = 0;
    int n_val = 0;
    int n_test = 0;
    int n_noise_train = 0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SplitResult {
    Dataset train;
    Dataset val;
    Dataset test;
    Dataset noise_train;
    Dataset noise_test;
    // instance indices (into the input dataset) per split, in order
    std::vector<int> train_idx, val_idx, test_idx, noise_train_idx, noise_test_idx;
};

// count i.i.d. uniform samples inside the box; deterministic for fixed seed.
std::vector<ParamVector> sample_parameters(const Box& domain, int count, std::uint64_t seed);

// Builds one instance sequence from a FOM trajectory and a surrogate
// trajectory already prolonged into the FOM state space. Residual-based
// features use the FOM residual evaluated at the surrogate states with the
// surrogate's own fine-grid history.
InstanceSequence assemble_dataset(const Trajectory& fom, const Trajectory& surrogate,
                                  const SystemSpec& system, const MultistepScheme& scheme,
                                  const FeatureSpec& spec, const CoarseTimeGrid& grid);

SplitResult split_dataset(const Dataset& all, const SplitConfig& cfg);

} // namespace romerr
