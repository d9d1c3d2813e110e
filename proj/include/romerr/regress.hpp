#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "romerr/datagen.hpp"
#include "romerr/features.hpp"
#include "romerr/rng.hpp"

namespace romerr {

enum class Family { kNN, ANN, ARX, ANN_I, LARX, RNN, LSTM, GP };
enum class TrainMode { NonRecursive, NRT, RT };
enum class KnnWeighting { Uniform, InverseDistance };
enum class ResponseKind { StateNorm, Qoi };

std::string to_string(Family family);
Family family_from_string(const std::string& name);
std::string to_string(TrainMode mode);
TrainMode train_mode_from_string(const std::string& name);
std::string to_string(ResponseKind response);
ResponseKind response_from_string(const std::string& name);
std::string to_string(KnnWeighting weighting);
KnnWeighting knn_weighting_from_string(const std::string& name);

// The training mode a family admits (ANN is non-recursive; ARX/ANN-I admit
// NRT and RT; LARX/RNN/LSTM are RT only).
bool mode_admissible(Family family, TrainMode mode);
TrainMode default_mode(Family family);

// Network shape. width is the neuron count per hidden/recurrent layer (the
// LSTM hidden and cell blocks each have this width); for LARX it is the
// latent dimension and depth is 1. ARX ignores both.
struct NetDims {
    Family family = Family::ANN;
    int n_features = 0;
    int depth = 1;
    int width = 1;
};

// One parameter instance in standardized space.
struct TrainSequence {
    Matrix features;  // T x N_rho
    Vector responses; // T
    double delta0 = 0.0;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int max_epochs = 1000;
    int patience = 20;
    double holdout_fraction = 0.2;
    double ridge = 0.0;
    int restarts = 20;
    std::uint64_t seed = 0;
    int threads = 0; // 0 = auto

    void validate() const;
};

int param_count(const NetDims& dims);

// Glorot-uniform weights, zero biases (LSTM forget-gate bias = 1), drawn in
// flat layout order.
Vector init_params(const NetDims& dims, Rng& rng);

// Squared-error loss over the batch plus ridge on the kernel/recurrent
// weight matrices (output heads and biases excluded), with exact
// reverse-mode gradients; RT unrolls the prediction-fed recursion (BPTT).
double compute_loss_and_gradients(const NetDims& dims, TrainMode mode, const Vector& theta,
                                  const std::vector<TrainSequence>& batch, double ridge,
                                  Vector* grad);

// Standardized-space rollout with prediction feeding (the deployment and
// validation recursion), seeded by h^0 = 0 and the standardized delta0.
Vector predict_sequence_std(const NetDims& dims, const Vector& theta, const Matrix& features,
                            double delta0);

struct AdamState {
    Vector m;
    Vector v;
};

void adam_step(Vector& params, const Vector& grads, AdamState& state, int t,
               const TrainConfig& cfg);

struct RestartLog {
    int epochs_run = 0;
    double best_holdout_loss = 0.0;
    bool diverged = false;
};

struct TrainingLog {
    std::vector<RestartLog> restarts;
    int chosen_restart = -1;
};

struct FitResult {
    Vector theta;
    TrainingLog log;
};

// Seeded restarts with early stopping on a 20% sequence holdout; returns the
// restart with the best holdout loss.
FitResult fit_network(const NetDims& dims, TrainMode mode,
                      const std::vector<TrainSequence>& sequences, const TrainConfig& cfg);

// Weighted average of the k nearest training responses under Euclidean
// feature distance. A zero-distance neighbor overrides inverse-distance
// weights.
double knn_fit_predict(const Matrix& train_features, const Vector& train_responses, int k,
                       KnnWeighting weighting, const Vector& query);

// Time-local Gaussian process over standardized parameters: squared
// exponential kernel with unit length scale, lambda on the diagonal.
struct GpTimeLocal {
    Matrix x;       // n x d standardized parameters
    Matrix chol;    // lower Cholesky factor of K + lambda I
    Vector alpha;   // (K + lambda I)^{-1} y_std
    double y_mean = 0.0;
    double y_std = 1.0;
};

GpTimeLocal gp_fit(const Matrix& params_std, const Vector& responses_raw, double lambda);
std::pair<double, double> gp_predict(const GpTimeLocal& gp, const Vector& query_std);

// One-shot fit + posterior (mean, variance) at the query, standardizing
// parameters and responses internally.
std::pair<double, double> gp_fit_predict(const Matrix& train_params, const Vector& responses,
                                         double lambda, const Vector& query);

// A trained model: family tag, parameter blocks, standardizer; kNN and GP
// carry their training data instead of a parameter vector.
struct RegressionModel {
    Family family = Family::ANN;
    TrainMode mode = TrainMode::NonRecursive;
    FeatureKind feature_kind = FeatureKind::Params;
    ResponseKind response = ResponseKind::Qoi;
    NetDims dims;
    double ridge = 0.0;
    Vector theta;
    Standardizer standardizer;
    TrainingLog log;
    double validation_score = 0.0;

    // kNN
    int knn_k = 0;
    KnnWeighting knn_weighting = KnnWeighting::Uniform;
    Matrix knn_features; // standardized
    Vector knn_responses; // raw

    // GP
    double gp_lambda = 0.0;
    Vector gp_param_mean, gp_param_std;
    Matrix gp_train_params;    // raw, n x d
    Matrix gp_train_responses; // raw, T x n (one row per coarse index)
    std::vector<GpTimeLocal> gp_models; // fitted per coarse index; rebuilt on load
};

// De-standardized rollout over one instance; features must already be
// standardized. kNN and GP have dedicated entry points.
Vector predict_sequence(const RegressionModel& model, const Matrix& standardized_features,
                        double delta0_raw);

// Raw-space predictions for any family over a dataset instance.
Vector predict_instance(const RegressionModel& model, const InstanceSequence& seq);

struct HyperTuple {
    int depth = 1;
    int width = 1;
    double ridge = 0.0;
    int knn_k = 1;
    KnnWeighting knn_weighting = KnnWeighting::Uniform;
    double gp_lambda = 1e-8;

    std::string describe(Family family) const;
};

// The experiment grids: ANN/ANN-I/RNN/LSTM over (depth, width, ridge), ARX
// over ridge, LARX over (latent width, ridge), kNN over (k, weighting), GP
// over 20 log-spaced noise magnitudes.
std::vector<HyperTuple> default_grid(Family family);

Standardizer fit_dataset_standardizer(const Dataset& train, ResponseKind response);
std::vector<TrainSequence> make_training_sequences(const Dataset& data, ResponseKind response,
                                                   const Standardizer& s);

double response_value(const SequenceRecord& rec, ResponseKind response);
double initial_response(const InstanceSequence& seq, ResponseKind response);

RegressionModel train_model(Family family, TrainMode mode, const HyperTuple& hp,
                            const Dataset& train, ResponseKind response, const TrainConfig& cfg,
                            const Standardizer& standardizer);

// Trains one model per tuple, scores squared error on the validation
// sequences with the prediction-fed rollout, and returns the minimum; ties
// break in grid order.
std::pair<RegressionModel, double> grid_search_select(Family family, TrainMode mode,
                                                      const std::vector<HyperTuple>& grid,
                                                      const Dataset& train, const Dataset& val,
                                                      ResponseKind response,
                                                      const TrainConfig& cfg);

} // namespace romerr
