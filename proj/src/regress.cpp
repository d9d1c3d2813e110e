#include "romerr/regress.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "romerr/errors.hpp"
#include "romerr/threading.hpp"

namespace romerr {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CMap = Eigen::Map<const RowMat>;
using GMap = Eigen::Map<RowMat>;
using CVec = Eigen::Map<const Vector>;
using GVec = Eigen::Map<Vector>;

inline CMap cmat(const Vector& v, int off, int r, int c) { return CMap(v.data() + off, r, c); }
inline GMap gmat(Vector& v, int off, int r, int c) { return GMap(v.data() + off, r, c); }
inline CVec cvec(const Vector& v, int off, int n) { return CVec(v.data() + off, n); }
inline GVec gvec(Vector& v, int off, int n) { return GVec(v.data() + off, n); }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// ---------------------------------------------------------------------------
// flat parameter layouts (row-major matrices, blocks in documented order)
// ---------------------------------------------------------------------------

// ANN / ANN-I: [W_1, b_1, ..., W_d, b_d, w_out, b_out]
struct MlpLayout {
    std::vector<int> w_off, b_off, in_dim;
    int head_w = 0, head_b = 0, total = 0, width = 0, depth = 0;
};

MlpLayout mlp_layout(int n_features, int depth, int width) {
    MlpLayout lay;
    lay.depth = depth;
    lay.width = width;
    int at = 0;
    for (int l = 0; l < depth; ++l) {
        const int in = l == 0 ? n_features : width;
        lay.in_dim.push_back(in);
        lay.w_off.push_back(at);
        at += width * in;
        lay.b_off.push_back(at);
        at += width;
    }
    lay.head_w = at;
    at += width;
    lay.head_b = at;
    at += 1;
    lay.total = at;
    return lay;
}

// LARX: [Theta_rho, Theta_h, b_h, w_out, b_out]
struct LarxLayout {
    int a = 0, b = 0, c = 0, head_w = 0, head_b = 0, total = 0, latent = 0;
};

LarxLayout larx_layout(int n_features, int latent) {
    LarxLayout lay;
    lay.latent = latent;
    lay.a = 0;
    lay.b = lay.a + latent * n_features;
    lay.c = lay.b + latent * latent;
    lay.head_w = lay.c + latent;
    lay.head_b = lay.head_w + latent;
    lay.total = lay.head_b + 1;
    return lay;
}

// RNN: per layer [W_in, W_rec, b], then [w_out, b_out]
struct RnnLayout {
    std::vector<int> w1_off, w2_off, b_off, in_dim;
    int head_w = 0, head_b = 0, total = 0, width = 0, depth = 0;
};

RnnLayout rnn_layout(int n_features, int depth, int width) {
    RnnLayout lay;
    lay.depth = depth;
    lay.width = width;
    int at = 0;
    for (int l = 0; l < depth; ++l) {
        const int in = l == 0 ? n_features : width;
        lay.in_dim.push_back(in);
        lay.w1_off.push_back(at);
        at += width * in;
        lay.w2_off.push_back(at);
        at += width * width;
        lay.b_off.push_back(at);
        at += width;
    }
    lay.head_w = at;
    at += width;
    lay.head_b = at;
    at += 1;
    lay.total = at;
    return lay;
}

// LSTM: per layer, gates in order [output, forget, input, candidate], each
// [W_x, W_h, b]; then [w_out, b_out]. The output head reads the hidden block
// of the last layer only.
struct LstmLayout {
    // [layer][gate] offsets
    std::vector<std::array<int, 4>> wx_off, wh_off, b_off;
    std::vector<int> in_dim;
    int head_w = 0, head_b = 0, total = 0, width = 0, depth = 0;
};

LstmLayout lstm_layout(int n_features, int depth, int width) {
    LstmLayout lay;
    lay.depth = depth;
    lay.width = width;
    int at = 0;
    for (int l = 0; l < depth; ++l) {
        const int in = l == 0 ? n_features : width;
        lay.in_dim.push_back(in);
        std::array<int, 4> wx{}, wh{}, b{};
        for (int g = 0; g < 4; ++g) {
            wx[g] = at;
            at += width * in;
            wh[g] = at;
            at += width * width;
            b[g] = at;
            at += width;
        }
        lay.wx_off.push_back(wx);
        lay.wh_off.push_back(wh);
        lay.b_off.push_back(b);
    }
    lay.head_w = at;
    at += width;
    lay.head_b = at;
    at += 1;
    lay.total = at;
    return lay;
}

enum LstmGate { kOut = 0, kForget = 1, kIn = 2, kCand = 3 };

void check_dims(const NetDims& dims) {
    if (dims.n_features < 1) throw validation_error("network needs at least one feature");
    if (dims.family == Family::ARX) return;
    if (dims.depth < 1 || dims.width < 1)
        throw validation_error("network depth and width must be >= 1");
}

void glorot(Vector& theta, int off, int rows, int cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    for (int i = 0; i < rows * cols; ++i) theta[off + i] = rng.uniform(-limit, limit);
}

} // namespace

// ---------------------------------------------------------------------------
// family / mode names
// ---------------------------------------------------------------------------

std::string to_string(Family family) {
    switch (family) {
        case Family::kNN: return "knn";
        case Family::ANN: return "ann";
        case Family::ARX: return "arx";
        case Family::ANN_I: return "ann-i";
        case Family::LARX: return "larx";
        case Family::RNN: return "rnn";
        case Family::LSTM: return "lstm";
        case Family::GP: return "gp";
    }
    throw validation_error("unknown family");
}

Family family_from_string(const std::string& name) {
    for (Family f : {Family::kNN, Family::ANN, Family::ARX, Family::ANN_I, Family::LARX,
                     Family::RNN, Family::LSTM, Family::GP})
        if (name == to_string(f)) return f;
    throw validation_error("unknown regression family '" + name +
                           "' (known: knn, ann, arx, ann-i, larx, rnn, lstm, gp)");
}

std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::NonRecursive: return "nonrecursive";
        case TrainMode::NRT: return "nrt";
        case TrainMode::RT: return "rt";
    }
    throw validation_error("unknown training mode");
}

TrainMode train_mode_from_string(const std::string& name) {
    if (name == "nonrecursive") return TrainMode::NonRecursive;
    if (name == "nrt") return TrainMode::NRT;
    if (name == "rt") return TrainMode::RT;
    throw validation_error("unknown training mode '" + name + "'");
}

std::string to_string(ResponseKind response) {
    return response == ResponseKind::StateNorm ? "state-norm" : "qoi";
}

ResponseKind response_from_string(const std::string& name) {
    if (name == "state-norm") return ResponseKind::StateNorm;
    if (name == "qoi") return ResponseKind::Qoi;
    throw validation_error("unknown response '" + name + "' (known: state-norm, qoi)");
}

std::string to_string(KnnWeighting weighting) {
    return weighting == KnnWeighting::Uniform ? "uniform" : "inverse-distance";
}

KnnWeighting knn_weighting_from_string(const std::string& name) {
    if (name == "uniform") return KnnWeighting::Uniform;
    if (name == "inverse-distance") return KnnWeighting::InverseDistance;
    throw validation_error("unknown kNN weighting '" + name + "'");
}

bool mode_admissible(Family family, TrainMode mode) {
    switch (family) {
        case Family::ANN: return mode == TrainMode::NonRecursive;
        case Family::ARX:
        case Family::ANN_I: return mode == TrainMode::NRT || mode == TrainMode::RT;
        case Family::LARX:
        case Family::RNN:
        case Family::LSTM: return mode == TrainMode::RT;
        default: return false;
    }
}

TrainMode default_mode(Family family) {
    return family == Family::ANN ? TrainMode::NonRecursive : TrainMode::RT;
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0 || beta1 <= 0.0 || beta2 <= 0.0 || epsilon <= 0.0)
        throw validation_error("Adam settings must be positive");
    if (max_epochs < 1 || restarts < 1) throw validation_error("epochs and restarts must be >= 1");
    if (patience < 0) throw validation_error("patience must be nonnegative");
    if (holdout_fraction <= 0.0 || holdout_fraction >= 1.0)
        throw validation_error("holdout fraction must lie in (0, 1)");
    if (ridge < 0.0) throw validation_error("ridge coefficient must be nonnegative");
}

// ---------------------------------------------------------------------------
// parameter counts and initialization
// ---------------------------------------------------------------------------

int param_count(const NetDims& dims) {
    check_dims(dims);
    switch (dims.family) {
        case Family::ANN:
        case Family::ANN_I:
            return mlp_layout(dims.n_features, dims.depth, dims.width).total;
        case Family::ARX:
            return dims.n_features + 2;
        case Family::LARX:
            return larx_layout(dims.n_features, dims.width).total;
        case Family::RNN:
            return rnn_layout(dims.n_features, dims.depth, dims.width).total;
        case Family::LSTM:
            return lstm_layout(dims.n_features, dims.depth, dims.width).total;
        default:
            throw validation_error("family has no trainable parameter vector");
    }
}

Vector init_params(const NetDims& dims, Rng& rng) {
    Vector theta = Vector::Zero(param_count(dims));
    switch (dims.family) {
        case Family::ANN:
        case Family::ANN_I: {
            const auto lay = mlp_layout(dims.n_features, dims.depth, dims.width);
            for (int l = 0; l < lay.depth; ++l)
                glorot(theta, lay.w_off[l], lay.width, lay.in_dim[l], rng);
            glorot(theta, lay.head_w, 1, lay.width, rng);
            break;
        }
        case Family::ARX: {
            glorot(theta, 0, 1, dims.n_features, rng);
            glorot(theta, dims.n_features, 1, 1, rng);
            break;
        }
        case Family::LARX: {
            const auto lay = larx_layout(dims.n_features, dims.width);
            glorot(theta, lay.a, lay.latent, dims.n_features, rng);
            glorot(theta, lay.b, lay.latent, lay.latent, rng);
            glorot(theta, lay.head_w, 1, lay.latent, rng);
            break;
        }
        case Family::RNN: {
            const auto lay = rnn_layout(dims.n_features, dims.depth, dims.width);
            for (int l = 0; l < lay.depth; ++l) {
                glorot(theta, lay.w1_off[l], lay.width, lay.in_dim[l], rng);
                glorot(theta, lay.w2_off[l], lay.width, lay.width, rng);
            }
            glorot(theta, lay.head_w, 1, lay.width, rng);
            break;
        }
        case Family::LSTM: {
            const auto lay = lstm_layout(dims.n_features, dims.depth, dims.width);
            for (int l = 0; l < lay.depth; ++l) {
                for (int g = 0; g < 4; ++g) {
                    glorot(theta, lay.wx_off[l][g], lay.width, lay.in_dim[l], rng);
                    glorot(theta, lay.wh_off[l][g], lay.width, lay.width, rng);
                }
                gvec(theta, lay.b_off[l][kForget], lay.width).setOnes();
            }
            glorot(theta, lay.head_w, 1, lay.width, rng);
            break;
        }
        default:
            throw validation_error("family has no trainable parameter vector");
    }
    return theta;
}

// ---------------------------------------------------------------------------
// loss and gradients
// ---------------------------------------------------------------------------

namespace {

// MLP evaluation shared by ANN and ANN-I. Activations stored for backprop.
struct MlpScratch {
    std::vector<Vector> pre;  // z_l
    std::vector<Vector> post; // relu(z_l)
};

double mlp_forward(const MlpLayout& lay, const Vector& theta, const Vector& x,
                   MlpScratch* scratch) {
    Vector a = x;
    if (scratch) {
        scratch->pre.resize(lay.depth);
        scratch->post.resize(lay.depth);
    }
    for (int l = 0; l < lay.depth; ++l) {
        Vector z = cmat(theta, lay.w_off[l], lay.width, lay.in_dim[l]) * a +
                   cvec(theta, lay.b_off[l], lay.width);
        Vector act = z.cwiseMax(0.0);
        if (scratch) {
            scratch->pre[l] = z;
            scratch->post[l] = act;
        }
        a = std::move(act);
    }
    return cvec(theta, lay.head_w, lay.width).dot(a) + theta[lay.head_b];
}

// Backward pass through the MLP for one record; g_out is dL/d(output).
void mlp_backward(const MlpLayout& lay, const Vector& theta, const Vector& x,
                  const MlpScratch& scratch, double g_out, Vector& grad) {
    gvec(grad, lay.head_w, lay.width) += g_out * scratch.post[lay.depth - 1];
    grad[lay.head_b] += g_out;
    Vector da = g_out * cvec(theta, lay.head_w, lay.width);
    for (int l = lay.depth - 1; l >= 0; --l) {
        Vector dz = da;
        for (int i = 0; i < lay.width; ++i)
            if (scratch.pre[l][i] <= 0.0) dz[i] = 0.0;
        const Vector& input = l == 0 ? x : scratch.post[l - 1];
        gmat(grad, lay.w_off[l], lay.width, lay.in_dim[l]) += dz * input.transpose();
        gvec(grad, lay.b_off[l], lay.width) += dz;
        if (l > 0) da = cmat(theta, lay.w_off[l], lay.width, lay.in_dim[l]).transpose() * dz;
    }
}

double ridge_penalty_mlp(const MlpLayout& lay, const Vector& theta, double ridge, Vector* grad) {
    double penalty = 0.0;
    for (int l = 0; l < lay.depth; ++l) {
        const auto w = cvec(theta, lay.w_off[l], lay.width * lay.in_dim[l]);
        penalty += ridge * w.squaredNorm();
        if (grad) gvec(*grad, lay.w_off[l], lay.width * lay.in_dim[l]) += 2.0 * ridge * w;
    }
    return penalty;
}

double loss_ann(const NetDims& dims, const Vector& theta, const std::vector<TrainSequence>& batch,
                double ridge, Vector* grad, bool integrated, TrainMode mode) {
    const auto lay = mlp_layout(dims.n_features, dims.depth, dims.width);
    double loss = 0.0;
    MlpScratch scratch;
    for (const auto& seq : batch) {
        const int T = static_cast<int>(seq.features.rows());
        if (!integrated) {
            for (int n = 0; n < T; ++n) {
                const Vector x = seq.features.row(n);
                const double pred = mlp_forward(lay, theta, x, grad ? &scratch : nullptr);
                const double e = pred - seq.responses[n];
                loss += e * e;
                if (grad) mlp_backward(lay, theta, x, scratch, 2.0 * e, *grad);
            }
            continue;
        }
        // ANN-I: pred_n = latent + MLP(x_n) with the latent equal to the
        // previous prediction (RT) or the previous true error (NRT).
        std::vector<double> preds(T);
        std::vector<MlpScratch> scratches(grad ? T : 0);
        double latent = seq.delta0;
        for (int n = 0; n < T; ++n) {
            const Vector x = seq.features.row(n);
            preds[n] = latent + mlp_forward(lay, theta, x, grad ? &scratches[n] : nullptr);
            const double e = preds[n] - seq.responses[n];
            loss += e * e;
            latent = mode == TrainMode::RT ? preds[n] : seq.responses[n];
        }
        if (grad) {
            double carry = 0.0; // dL/d(pred_n) flowing back from n+1 under RT
            for (int n = T - 1; n >= 0; --n) {
                const double g = 2.0 * (preds[n] - seq.responses[n]) +
                                 (mode == TrainMode::RT ? carry : 0.0);
                mlp_backward(lay, theta, seq.features.row(n), scratches[n], g, *grad);
                carry = g; // d(pred_{n+1})/d(pred_n) = 1
            }
        }
    }
    loss += ridge_penalty_mlp(lay, theta, ridge, grad);
    return loss;
}

double loss_arx(const NetDims& dims, const Vector& theta, const std::vector<TrainSequence>& batch,
                double ridge, Vector* grad, TrainMode mode) {
    const int F = dims.n_features;
    const auto theta1 = cvec(theta, 0, F);
    const double theta2 = theta[F];
    const double bias = theta[F + 1];

    double loss = 0.0;
    for (const auto& seq : batch) {
        const int T = static_cast<int>(seq.features.rows());
        std::vector<double> latents(T), preds(T);
        double latent = seq.delta0;
        for (int n = 0; n < T; ++n) {
            latents[n] = latent;
            preds[n] = theta1.dot(seq.features.row(n)) + theta2 * latent + bias;
            const double e = preds[n] - seq.responses[n];
            loss += e * e;
            latent = mode == TrainMode::RT ? preds[n] : seq.responses[n];
        }
        if (grad) {
            double carry = 0.0;
            for (int n = T - 1; n >= 0; --n) {
                const double g = 2.0 * (preds[n] - seq.responses[n]) +
                                 (mode == TrainMode::RT ? theta2 * carry : 0.0);
                gvec(*grad, 0, F) += g * seq.features.row(n).transpose();
                (*grad)[F] += g * latents[n];
                (*grad)[F + 1] += g;
                carry = g;
            }
        }
    }
    // both the kernel theta1 and the recurrence weight theta2 are penalized
    loss += ridge * (theta1.squaredNorm() + theta2 * theta2);
    if (grad) {
        gvec(*grad, 0, F) += 2.0 * ridge * theta1;
        (*grad)[F] += 2.0 * ridge * theta2;
    }
    return loss;
}

double loss_larx(const NetDims& dims, const Vector& theta, const std::vector<TrainSequence>& batch,
                 double ridge, Vector* grad) {
    const int F = dims.n_features;
    const int H = dims.width;
    const auto lay = larx_layout(F, H);
    const auto A = cmat(theta, lay.a, H, F);
    const auto B = cmat(theta, lay.b, H, H);
    const auto c = cvec(theta, lay.c, H);
    const auto w = cvec(theta, lay.head_w, H);
    const double bias = theta[lay.head_b];

    double loss = 0.0;
    for (const auto& seq : batch) {
        const int T = static_cast<int>(seq.features.rows());
        std::vector<Vector> h(T + 1);
        h[0] = Vector::Zero(H);
        std::vector<double> errs(T);
        for (int n = 1; n <= T; ++n) {
            h[n] = A * seq.features.row(n - 1).transpose() + B * h[n - 1] + c;
            const double pred = w.dot(h[n]) + bias;
            errs[n - 1] = pred - seq.responses[n - 1];
            loss += errs[n - 1] * errs[n - 1];
        }
        if (grad) {
            Vector dh = Vector::Zero(H);
            for (int n = T; n >= 1; --n) {
                const double g = 2.0 * errs[n - 1];
                gvec(*grad, lay.head_w, H) += g * h[n];
                (*grad)[lay.head_b] += g;
                dh += g * w;
                gmat(*grad, lay.a, H, F) += dh * seq.features.row(n - 1);
                gmat(*grad, lay.b, H, H) += dh * h[n - 1].transpose();
                gvec(*grad, lay.c, H) += dh;
                dh = B.transpose() * dh;
            }
        }
    }
    const auto a_flat = cvec(theta, lay.a, H * F);
    const auto b_flat = cvec(theta, lay.b, H * H);
    loss += ridge * (a_flat.squaredNorm() + b_flat.squaredNorm());
    if (grad) {
        gvec(*grad, lay.a, H * F) += 2.0 * ridge * a_flat;
        gvec(*grad, lay.b, H * H) += 2.0 * ridge * b_flat;
    }
    return loss;
}

double loss_rnn(const NetDims& dims, const Vector& theta, const std::vector<TrainSequence>& batch,
                double ridge, Vector* grad) {
    const int F = dims.n_features;
    const int D = dims.depth;
    const int P = dims.width;
    const auto lay = rnn_layout(F, D, P);
    const auto w = cvec(theta, lay.head_w, P);
    const double bias = theta[lay.head_b];

    double loss = 0.0;
    for (const auto& seq : batch) {
        const int T = static_cast<int>(seq.features.rows());
        // h[n][l]; h[0][l] = 0
        std::vector<std::vector<Vector>> h(T + 1, std::vector<Vector>(D, Vector::Zero(P)));
        std::vector<double> errs(T);
        for (int n = 1; n <= T; ++n) {
            Vector input = seq.features.row(n - 1);
            for (int l = 0; l < D; ++l) {
                Vector s = cmat(theta, lay.w1_off[l], P, lay.in_dim[l]) * input +
                           cmat(theta, lay.w2_off[l], P, P) * h[n - 1][l] +
                           cvec(theta, lay.b_off[l], P);
                h[n][l] = s.array().tanh();
                input = h[n][l];
            }
            const double pred = w.dot(h[n][D - 1]) + bias;
            errs[n - 1] = pred - seq.responses[n - 1];
            loss += errs[n - 1] * errs[n - 1];
        }
        if (grad) {
            std::vector<Vector> carry(D, Vector::Zero(P)); // dL/dh_{l,n} from time n+1
            for (int n = T; n >= 1; --n) {
                const double g = 2.0 * errs[n - 1];
                gvec(*grad, lay.head_w, P) += g * h[n][D - 1];
                (*grad)[lay.head_b] += g;
                Vector from_above; // dL/dh_{l,n} via layer l+1 at the same time
                for (int l = D - 1; l >= 0; --l) {
                    Vector dh = carry[l];
                    if (l == D - 1) dh += g * w;
                    if (l < D - 1) dh += from_above;
                    Vector dz = dh.cwiseProduct(Vector::Ones(P) - h[n][l].cwiseAbs2());
                    const Vector input =
                        l == 0 ? Vector(seq.features.row(n - 1)) : h[n][l - 1];
                    gmat(*grad, lay.w1_off[l], P, lay.in_dim[l]) += dz * input.transpose();
                    gmat(*grad, lay.w2_off[l], P, P) += dz * h[n - 1][l].transpose();
                    gvec(*grad, lay.b_off[l], P) += dz;
                    carry[l] = cmat(theta, lay.w2_off[l], P, P).transpose() * dz;
                    if (l > 0) from_above =
                        cmat(theta, lay.w1_off[l], P, lay.in_dim[l]).transpose() * dz;
                }
            }
        }
    }
    double penalty = 0.0;
    for (int l = 0; l < D; ++l) {
        const auto w1 = cvec(theta, lay.w1_off[l], P * lay.in_dim[l]);
        const auto w2 = cvec(theta, lay.w2_off[l], P * P);
        penalty += w1.squaredNorm() + w2.squaredNorm();
        if (grad) {
            gvec(*grad, lay.w1_off[l], P * lay.in_dim[l]) += 2.0 * ridge * w1;
            gvec(*grad, lay.w2_off[l], P * P) += 2.0 * ridge * w2;
        }
    }
    return loss + ridge * penalty;
}

struct LstmStep {
    Vector input, o, f, i, g, c, tc; // post-activation gates, new cell, tanh(cell)
};

double loss_lstm(const NetDims& dims, const Vector& theta, const std::vector<TrainSequence>& batch,
                 double ridge, Vector* grad) {
    const int F = dims.n_features;
    const int D = dims.depth;
    const int Q = dims.width;
    const auto lay = lstm_layout(F, D, Q);
    const auto w = cvec(theta, lay.head_w, Q);
    const double bias = theta[lay.head_b];

    auto gate_pre = [&](int l, int g, const Vector& x, const Vector& hprev) {
        return (cmat(theta, lay.wx_off[l][g], Q, lay.in_dim[l]) * x +
                cmat(theta, lay.wh_off[l][g], Q, Q) * hprev + cvec(theta, lay.b_off[l][g], Q))
            .eval();
    };

    double loss = 0.0;
    for (const auto& seq : batch) {
        const int T = static_cast<int>(seq.features.rows());
        std::vector<std::vector<Vector>> h(T + 1, std::vector<Vector>(D, Vector::Zero(Q)));
        std::vector<std::vector<LstmStep>> steps(T + 1, std::vector<LstmStep>(D));
        for (int l = 0; l < D; ++l) steps[0][l].c = Vector::Zero(Q);
        std::vector<double> errs(T);
        for (int n = 1; n <= T; ++n) {
            Vector input = seq.features.row(n - 1);
            for (int l = 0; l < D; ++l) {
                LstmStep& st = steps[n][l];
                st.input = input;
                st.o = gate_pre(l, kOut, input, h[n - 1][l]).unaryExpr([](double v) { return sigmoid(v); });
                st.f = gate_pre(l, kForget, input, h[n - 1][l]).unaryExpr([](double v) { return sigmoid(v); });
                st.i = gate_pre(l, kIn, input, h[n - 1][l]).unaryExpr([](double v) { return sigmoid(v); });
                st.g = gate_pre(l, kCand, input, h[n - 1][l]).array().tanh();
                st.c = st.f.cwiseProduct(steps[n - 1][l].c) + st.i.cwiseProduct(st.g);
                st.tc = st.c.array().tanh();
                h[n][l] = st.o.cwiseProduct(st.tc);
                input = h[n][l];
            }
            const double pred = w.dot(h[n][D - 1]) + bias;
            errs[n - 1] = pred - seq.responses[n - 1];
            loss += errs[n - 1] * errs[n - 1];
        }
        if (grad) {
            std::vector<Vector> carry_h(D, Vector::Zero(Q));
            std::vector<Vector> carry_c(D, Vector::Zero(Q));
            for (int n = T; n >= 1; --n) {
                const double gq = 2.0 * errs[n - 1];
                gvec(*grad, lay.head_w, Q) += gq * h[n][D - 1];
                (*grad)[lay.head_b] += gq;
                Vector from_above;
                for (int l = D - 1; l >= 0; --l) {
                    const LstmStep& st = steps[n][l];
                    Vector dh = carry_h[l];
                    if (l == D - 1) dh += gq * w;
                    if (l < D - 1) dh += from_above;

                    const Vector do_ = dh.cwiseProduct(st.tc);
                    Vector dc = dh.cwiseProduct(st.o)
                                    .cwiseProduct(Vector::Ones(Q) - st.tc.cwiseAbs2()) +
                                carry_c[l];
                    const Vector df = dc.cwiseProduct(steps[n - 1][l].c);
                    const Vector di = dc.cwiseProduct(st.g);
                    const Vector dg = dc.cwiseProduct(st.i);
                    carry_c[l] = dc.cwiseProduct(st.f);

                    const Vector ds_o = do_.cwiseProduct(st.o).cwiseProduct(Vector::Ones(Q) - st.o);
                    const Vector ds_f = df.cwiseProduct(st.f).cwiseProduct(Vector::Ones(Q) - st.f);
                    const Vector ds_i = di.cwiseProduct(st.i).cwiseProduct(Vector::Ones(Q) - st.i);
                    const Vector ds_g = dg.cwiseProduct(Vector::Ones(Q) - st.g.cwiseAbs2());

                    const Vector* ds[4] = {&ds_o, &ds_f, &ds_i, &ds_g};
                    Vector dx = Vector::Zero(lay.in_dim[l]);
                    Vector dhprev = Vector::Zero(Q);
                    for (int g = 0; g < 4; ++g) {
                        gmat(*grad, lay.wx_off[l][g], Q, lay.in_dim[l]) +=
                            (*ds[g]) * st.input.transpose();
                        gmat(*grad, lay.wh_off[l][g], Q, Q) += (*ds[g]) * h[n - 1][l].transpose();
                        gvec(*grad, lay.b_off[l][g], Q) += *ds[g];
                        dx += cmat(theta, lay.wx_off[l][g], Q, lay.in_dim[l]).transpose() * (*ds[g]);
                        dhprev += cmat(theta, lay.wh_off[l][g], Q, Q).transpose() * (*ds[g]);
                    }
                    carry_h[l] = dhprev;
                    if (l > 0) from_above = dx;
                }
            }
        }
    }
    double penalty = 0.0;
    for (int l = 0; l < D; ++l) {
        for (int g = 0; g < 4; ++g) {
            const auto wx = cvec(theta, lay.wx_off[l][g], Q * lay.in_dim[l]);
            const auto wh = cvec(theta, lay.wh_off[l][g], Q * Q);
            penalty += wx.squaredNorm() + wh.squaredNorm();
            if (grad) {
                gvec(*grad, lay.wx_off[l][g], Q * lay.in_dim[l]) += 2.0 * ridge * wx;
                gvec(*grad, lay.wh_off[l][g], Q * Q) += 2.0 * ridge * wh;
            }
        }
    }
    return loss + ridge * penalty;
}

} // namespace

double compute_loss_and_gradients(const NetDims& dims, TrainMode mode, const Vector& theta,
                                  const std::vector<TrainSequence>& batch, double ridge,
                                  Vector* grad) {
    check_dims(dims);
    if (!mode_admissible(dims.family, mode))
        throw validation_error("training mode " + to_string(mode) +
                               " is not admissible for family " + to_string(dims.family));
    if (theta.size() != param_count(dims))
        throw shape_error("parameter vector length does not match the network dims");
    if (grad) grad->setZero(theta.size());

    switch (dims.family) {
        case Family::ANN:
            return loss_ann(dims, theta, batch, ridge, grad, false, mode);
        case Family::ANN_I:
            return loss_ann(dims, theta, batch, ridge, grad, true, mode);
        case Family::ARX:
            return loss_arx(dims, theta, batch, ridge, grad, mode);
        case Family::LARX:
            return loss_larx(dims, theta, batch, ridge, grad);
        case Family::RNN:
            return loss_rnn(dims, theta, batch, ridge, grad);
        case Family::LSTM:
            return loss_lstm(dims, theta, batch, ridge, grad);
        default:
            throw validation_error("family has no gradient-based training");
    }
}

Vector predict_sequence_std(const NetDims& dims, const Vector& theta, const Matrix& features,
                            double delta0) {
    check_dims(dims);
    if (features.cols() != dims.n_features)
        throw shape_error("feature dimension does not match the network dims");
    const int T = static_cast<int>(features.rows());
    Vector preds(T);
    if (T == 0) return preds;

    // single-sequence RT rollout reuses the loss forward passes via a batch
    // with dummy responses; cheaper bespoke loops below avoid the scratch.
    switch (dims.family) {
        case Family::ANN: {
            const auto lay = mlp_layout(dims.n_features, dims.depth, dims.width);
            for (int n = 0; n < T; ++n)
                preds[n] = mlp_forward(lay, theta, features.row(n), nullptr);
            return preds;
        }
        case Family::ANN_I: {
            const auto lay = mlp_layout(dims.n_features, dims.depth, dims.width);
            double latent = delta0;
            for (int n = 0; n < T; ++n) {
                preds[n] = latent + mlp_forward(lay, theta, features.row(n), nullptr);
                latent = preds[n];
            }
            return preds;
        }
        case Family::ARX: {
            const int F = dims.n_features;
            const auto theta1 = cvec(theta, 0, F);
            double latent = delta0;
            for (int n = 0; n < T; ++n) {
                preds[n] = theta1.dot(features.row(n)) + theta[F] * latent + theta[F + 1];
                latent = preds[n];
            }
            return preds;
        }
        case Family::LARX: {
            const auto lay = larx_layout(dims.n_features, dims.width);
            const auto A = cmat(theta, lay.a, dims.width, dims.n_features);
            const auto B = cmat(theta, lay.b, dims.width, dims.width);
            const auto c = cvec(theta, lay.c, dims.width);
            const auto w = cvec(theta, lay.head_w, dims.width);
            Vector h = Vector::Zero(dims.width);
            for (int n = 0; n < T; ++n) {
                h = A * features.row(n).transpose() + B * h + c;
                preds[n] = w.dot(h) + theta[lay.head_b];
            }
            return preds;
        }
        case Family::RNN: {
            const auto lay = rnn_layout(dims.n_features, dims.depth, dims.width);
            std::vector<Vector> h(dims.depth, Vector::Zero(dims.width));
            for (int n = 0; n < T; ++n) {
                Vector input = features.row(n);
                for (int l = 0; l < dims.depth; ++l) {
                    Vector s = cmat(theta, lay.w1_off[l], dims.width, lay.in_dim[l]) * input +
                               cmat(theta, lay.w2_off[l], dims.width, dims.width) * h[l] +
                               cvec(theta, lay.b_off[l], dims.width);
                    h[l] = s.array().tanh();
                    input = h[l];
                }
                preds[n] = cvec(theta, lay.head_w, dims.width).dot(h[dims.depth - 1]) +
                           theta[lay.head_b];
            }
            return preds;
        }
        case Family::LSTM: {
            const auto lay = lstm_layout(dims.n_features, dims.depth, dims.width);
            std::vector<Vector> h(dims.depth, Vector::Zero(dims.width));
            std::vector<Vector> c(dims.depth, Vector::Zero(dims.width));
            auto gate = [&](int l, int g, const Vector& x, const Vector& hprev) {
                return (cmat(theta, lay.wx_off[l][g], dims.width, lay.in_dim[l]) * x +
                        cmat(theta, lay.wh_off[l][g], dims.width, dims.width) * hprev +
                        cvec(theta, lay.b_off[l][g], dims.width))
                    .eval();
            };
            for (int n = 0; n < T; ++n) {
                Vector input = features.row(n);
                for (int l = 0; l < dims.depth; ++l) {
                    const Vector o = gate(l, kOut, input, h[l]).unaryExpr([](double v) { return sigmoid(v); });
                    const Vector f = gate(l, kForget, input, h[l]).unaryExpr([](double v) { return sigmoid(v); });
                    const Vector i = gate(l, kIn, input, h[l]).unaryExpr([](double v) { return sigmoid(v); });
                    const Vector g = gate(l, kCand, input, h[l]).array().tanh();
                    c[l] = f.cwiseProduct(c[l]) + i.cwiseProduct(g);
                    h[l] = o.cwiseProduct(c[l].array().tanh().matrix());
                    input = h[l];
                }
                preds[n] = cvec(theta, lay.head_w, dims.width).dot(h[dims.depth - 1]) +
                           theta[lay.head_b];
            }
            return preds;
        }
        default:
            throw validation_error("predict_sequence is only defined for the parametric families");
    }
}

void adam_step(Vector& params, const Vector& grads, AdamState& state, int t,
               const TrainConfig& cfg) {
    if (params.size() != grads.size()) throw shape_error("adam parameter/gradient size mismatch");
    if (state.m.size() != params.size()) {
        state.m = Vector::Zero(params.size());
        state.v = Vector::Zero(params.size());
    }
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.beta2, t);
    params -= (cfg.learning_rate / bc1) * state.m.cwiseQuotient(
                  ((state.v / bc2).cwiseSqrt().array() + cfg.epsilon).matrix());
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

namespace {

double data_loss(const NetDims& dims, TrainMode mode, const Vector& theta,
                 const std::vector<TrainSequence>& batch) {
    return compute_loss_and_gradients(dims, mode, theta, batch, 0.0, nullptr);
}

} // namespace

FitResult fit_network(const NetDims& dims, TrainMode mode,
                      const std::vector<TrainSequence>& sequences, const TrainConfig& cfg) {
    cfg.validate();
    if (sequences.empty()) throw validation_error("training requires at least one sequence");

    // fixed holdout: the trailing fraction of the training sequences
    int n_hold = static_cast<int>(std::lround(cfg.holdout_fraction * sequences.size()));
    n_hold = std::min(std::max(n_hold, sequences.size() > 1 ? 1 : 0),
                      static_cast<int>(sequences.size()) - 1);
    const std::vector<TrainSequence> fit_part(sequences.begin(), sequences.end() - n_hold);
    const std::vector<TrainSequence> hold_part =
        n_hold > 0 ? std::vector<TrainSequence>(sequences.end() - n_hold, sequences.end())
                   : fit_part;

    FitResult result;
    result.log.restarts.resize(cfg.restarts);
    std::vector<Vector> thetas(cfg.restarts);

    parallel_for(cfg.restarts, cfg.threads, [&](int r) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
        Vector theta = init_params(dims, rng);
        Vector grad(theta.size());
        AdamState adam;
        RestartLog log;
        Vector best_theta = theta;
        double best = std::numeric_limits<double>::infinity();
        int bad = 0;
        for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
            const double loss =
                compute_loss_and_gradients(dims, mode, theta, fit_part, cfg.ridge, &grad);
            if (!std::isfinite(loss)) {
                log.diverged = true;
                break;
            }
            adam_step(theta, grad, adam, epoch, cfg);
            const double holdout = data_loss(dims, mode, theta, hold_part);
            log.epochs_run = epoch;
            if (!std::isfinite(holdout)) {
                log.diverged = true;
                break;
            }
            if (holdout < best) {
                best = holdout;
                best_theta = theta;
                bad = 0;
            } else if (++bad > cfg.patience) {
                break;
            }
        }
        if (!std::isfinite(best)) log.diverged = true;
        log.best_holdout_loss = best;
        result.log.restarts[r] = log;
        thetas[r] = best_theta;
    });

    int chosen = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        const auto& log = result.log.restarts[r];
        if (log.diverged) continue;
        if (log.best_holdout_loss < best) {
            best = log.best_holdout_loss;
            chosen = r;
        }
    }
    if (chosen < 0) throw training_error("all training restarts diverged to non-finite loss");
    result.log.chosen_restart = chosen;
    result.theta = thetas[chosen];
    return result;
}

// ---------------------------------------------------------------------------
// kNN and GP
// ---------------------------------------------------------------------------

double knn_fit_predict(const Matrix& train_features, const Vector& train_responses, int k,
                       KnnWeighting weighting, const Vector& query) {
    const int n = static_cast<int>(train_features.rows());
    if (n == 0) throw validation_error("kNN requires a nonempty training set");
    if (k < 1 || k > n) throw validation_error("kNN needs 1 <= k <= training size");
    if (query.size() != train_features.cols()) throw shape_error("kNN query dimension mismatch");

    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i)
        dist[i] = {(train_features.row(i).transpose() - query).norm(), i};
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());

    if (weighting == KnnWeighting::Uniform) {
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += train_responses[dist[j].second];
        return sum / static_cast<double>(k);
    }

    // zero-distance neighbors override the inverse-distance weights
    double zero_sum = 0.0;
    int zero_count = 0;
    for (int j = 0; j < k; ++j) {
        if (dist[j].first == 0.0) {
            zero_sum += train_responses[dist[j].second];
            ++zero_count;
        }
    }
    if (zero_count > 0) return zero_sum / static_cast<double>(zero_count);

    double wsum = 0.0, value = 0.0;
    for (int j = 0; j < k; ++j) {
        const double w = 1.0 / dist[j].first;
        wsum += w;
        value += w * train_responses[dist[j].second];
    }
    return value / wsum;
}

GpTimeLocal gp_fit(const Matrix& params_std, const Vector& responses_raw, double lambda) {
    if (lambda <= 0.0) throw validation_error("GP noise magnitude must be positive");
    const int n = static_cast<int>(params_std.rows());
    if (n == 0) throw validation_error("GP requires a nonempty training set");
    if (responses_raw.size() != n) throw shape_error("GP response count mismatch");

    GpTimeLocal gp;
    gp.x = params_std;
    gp.y_mean = responses_raw.mean();
    double var = (responses_raw.array() - gp.y_mean).square().mean();
    gp.y_std = var > 0.0 ? std::sqrt(var) : 1.0;

    Matrix kernel(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            kernel(i, j) = std::exp(-0.5 * (params_std.row(i) - params_std.row(j)).squaredNorm());
    kernel.diagonal().array() += lambda;

    Eigen::LLT<Matrix> llt(kernel);
    if (llt.info() != Eigen::Success)
        throw numeric_error("GP kernel system is singular beyond the diagonal regularization");
    gp.chol = llt.matrixL();
    const Vector y_std = (responses_raw.array() - gp.y_mean) / gp.y_std;
    gp.alpha = llt.solve(y_std);
    return gp;
}

std::pair<double, double> gp_predict(const GpTimeLocal& gp, const Vector& query_std) {
    const int n = static_cast<int>(gp.x.rows());
    Vector kstar(n);
    for (int i = 0; i < n; ++i)
        kstar[i] = std::exp(-0.5 * (gp.x.row(i).transpose() - query_std).squaredNorm());
    const double mean_std = kstar.dot(gp.alpha);
    const Vector v = gp.chol.triangularView<Eigen::Lower>().solve(kstar);
    const double var_std = std::max(0.0, 1.0 - v.squaredNorm());
    return {gp.y_mean + gp.y_std * mean_std, gp.y_std * gp.y_std * var_std};
}

std::pair<double, double> gp_fit_predict(const Matrix& train_params, const Vector& responses,
                                         double lambda, const Vector& query) {
    const int d = static_cast<int>(train_params.cols());
    Vector mean = train_params.colwise().mean();
    Vector stddev(d);
    for (int j = 0; j < d; ++j) {
        const double var = (train_params.col(j).array() - mean[j]).square().mean();
        stddev[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    Matrix x_std = (train_params.rowwise() - mean.transpose());
    for (int j = 0; j < d; ++j) x_std.col(j) /= stddev[j];
    const GpTimeLocal gp = gp_fit(x_std, responses, lambda);
    const Vector q_std = (query - mean).cwiseQuotient(stddev);
    return gp_predict(gp, q_std);
}

// ---------------------------------------------------------------------------
// dataset plumbing and model-level training
// ---------------------------------------------------------------------------

double response_value(const SequenceRecord& rec, ResponseKind response) {
    return response == ResponseKind::StateNorm ? rec.delta_x : rec.delta_q;
}

double initial_response(const InstanceSequence& seq, ResponseKind response) {
    return response == ResponseKind::StateNorm ? seq.delta_x0 : seq.delta_q0;
}

Standardizer fit_dataset_standardizer(const Dataset& train, ResponseKind response) {
    std::vector<Vector> features;
    std::vector<Vector> responses;
    for (const auto& seq : train.sequences) {
        for (const auto& rec : seq.records) {
            features.push_back(rec.features);
            Vector y(1);
            y[0] = response_value(rec, response);
            responses.push_back(y);
        }
    }
    return fit_standardizer(features, responses);
}

std::vector<TrainSequence> make_training_sequences(const Dataset& data, ResponseKind response,
                                                   const Standardizer& s) {
    std::vector<TrainSequence> out;
    out.reserve(data.sequences.size());
    for (const auto& seq : data.sequences) {
        TrainSequence ts;
        const int T = static_cast<int>(seq.records.size());
        ts.features.resize(T, s.feature_mean.size());
        ts.responses.resize(T);
        for (int n = 0; n < T; ++n) {
            ts.features.row(n) =
                standardize(s, seq.records[n].features, Direction::Forward, Side::Feature);
            ts.responses[n] =
                standardize_response(s, response_value(seq.records[n], response), Direction::Forward);
        }
        ts.delta0 = standardize_response(s, initial_response(seq, response), Direction::Forward);
        out.push_back(std::move(ts));
    }
    return out;
}

Vector predict_sequence(const RegressionModel& model, const Matrix& standardized_features,
                        double delta0_raw) {
    if (model.family == Family::kNN || model.family == Family::GP)
        throw validation_error("predict_sequence is not the entry point for " +
                               to_string(model.family));
    const double d0 = standardize_response(model.standardizer, delta0_raw, Direction::Forward);
    const Vector std_preds = predict_sequence_std(model.dims, model.theta, standardized_features, d0);
    Vector out(std_preds.size());
    for (int n = 0; n < std_preds.size(); ++n)
        out[n] = standardize_response(model.standardizer, std_preds[n], Direction::Inverse);
    return out;
}

Vector predict_instance(const RegressionModel& model, const InstanceSequence& seq) {
    const int T = static_cast<int>(seq.records.size());
    if (model.family == Family::GP) {
        if (static_cast<int>(model.gp_models.size()) < T)
            throw compatibility_error("GP model covers fewer coarse time indices than the data");
        const Vector q_std =
            (seq.mu - model.gp_param_mean).cwiseQuotient(model.gp_param_std);
        Vector preds(T);
        for (int n = 0; n < T; ++n) preds[n] = gp_predict(model.gp_models[n], q_std).first;
        return preds;
    }

    Matrix features(T, model.standardizer.feature_mean.size());
    for (int n = 0; n < T; ++n)
        features.row(n) = standardize(model.standardizer, seq.records[n].features,
                                      Direction::Forward, Side::Feature);
    if (model.family == Family::kNN) {
        Vector preds(T);
        for (int n = 0; n < T; ++n)
            preds[n] = knn_fit_predict(model.knn_features, model.knn_responses, model.knn_k,
                                       model.knn_weighting, features.row(n));
        return preds;
    }
    return predict_sequence(model, features, initial_response(seq, model.response));
}

std::string HyperTuple::describe(Family family) const {
    switch (family) {
        case Family::kNN:
            return "k=" + std::to_string(knn_k) + ",w=" + to_string(knn_weighting);
        case Family::GP:
            return "lambda=" + std::to_string(gp_lambda);
        case Family::ARX:
            return "ridge=" + std::to_string(ridge);
        case Family::LARX:
            return "latent=" + std::to_string(width) + ",ridge=" + std::to_string(ridge);
        default:
            return "depth=" + std::to_string(depth) + ",width=" + std::to_string(width) +
                   ",ridge=" + std::to_string(ridge);
    }
}

std::vector<HyperTuple> default_grid(Family family) {
    std::vector<HyperTuple> grid;
    const std::vector<double> ridges = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    switch (family) {
        case Family::kNN:
            for (int k = 1; k <= 5; ++k)
                for (KnnWeighting w : {KnnWeighting::Uniform, KnnWeighting::InverseDistance}) {
                    HyperTuple t;
                    t.knn_k = k;
                    t.knn_weighting = w;
                    grid.push_back(t);
                }
            break;
        case Family::ARX:
            for (double r : ridges) {
                HyperTuple t;
                t.ridge = r;
                grid.push_back(t);
            }
            break;
        case Family::LARX:
            for (int width : {10, 25, 50, 100})
                for (double r : ridges) {
                    HyperTuple t;
                    t.width = width;
                    t.ridge = r;
                    grid.push_back(t);
                }
            break;
        case Family::GP:
            for (int i = 1; i <= 20; ++i) {
                HyperTuple t;
                t.gp_lambda = std::pow(10.0, -8.0 + 8.0 * (i - 1) / 19.0);
                grid.push_back(t);
            }
            break;
        default:
            for (int depth : {1, 2})
                for (int width : {10, 25, 50, 100})
                    for (double r : ridges) {
                        HyperTuple t;
                        t.depth = depth;
                        t.width = width;
                        t.ridge = r;
                        grid.push_back(t);
                    }
            break;
    }
    return grid;
}

RegressionModel train_model(Family family, TrainMode mode, const HyperTuple& hp,
                            const Dataset& train, ResponseKind response, const TrainConfig& cfg,
                            const Standardizer& standardizer) {
    if (train.sequences.empty()) throw validation_error("training dataset is empty");

    RegressionModel model;
    model.family = family;
    model.mode = mode;
    model.feature_kind = train.kind;
    model.response = response;
    model.standardizer = standardizer;
    model.ridge = hp.ridge;

    if (family == Family::kNN) {
        std::size_t total = 0;
        for (const auto& seq : train.sequences) total += seq.records.size();
        model.knn_k = hp.knn_k;
        model.knn_weighting = hp.knn_weighting;
        model.knn_features.resize(total, standardizer.feature_mean.size());
        model.knn_responses.resize(total);
        std::size_t at = 0;
        for (const auto& seq : train.sequences) {
            for (const auto& rec : seq.records) {
                model.knn_features.row(at) =
                    standardize(standardizer, rec.features, Direction::Forward, Side::Feature);
                model.knn_responses[at] = response_value(rec, response);
                ++at;
            }
        }
        return model;
    }

    if (family == Family::GP) {
        const int n = static_cast<int>(train.sequences.size());
        const int T = static_cast<int>(train.sequences.front().records.size());
        const int d = static_cast<int>(train.sequences.front().mu.size());
        model.gp_lambda = hp.gp_lambda;
        model.gp_train_params.resize(n, d);
        model.gp_train_responses.resize(T, n);
        for (int i = 0; i < n; ++i) {
            model.gp_train_params.row(i) = train.sequences[i].mu;
            for (int t = 0; t < T; ++t)
                model.gp_train_responses(t, i) =
                    response_value(train.sequences[i].records[t], response);
        }
        model.gp_param_mean = model.gp_train_params.colwise().mean();
        model.gp_param_std.resize(d);
        for (int j = 0; j < d; ++j) {
            const double var =
                (model.gp_train_params.col(j).array() - model.gp_param_mean[j]).square().mean();
            model.gp_param_std[j] = var > 0.0 ? std::sqrt(var) : 1.0;
        }
        Matrix x_std = model.gp_train_params.rowwise() - model.gp_param_mean.transpose();
        for (int j = 0; j < d; ++j) x_std.col(j) /= model.gp_param_std[j];
        model.gp_models.reserve(T);
        for (int t = 0; t < T; ++t)
            model.gp_models.push_back(
                gp_fit(x_std, model.gp_train_responses.row(t), model.gp_lambda));
        return model;
    }

    if (!mode_admissible(family, mode))
        throw validation_error("training mode " + to_string(mode) +
                               " is not admissible for family " + to_string(family));

    NetDims dims;
    dims.family = family;
    dims.n_features = static_cast<int>(standardizer.feature_mean.size());
    dims.depth = family == Family::ARX || family == Family::LARX ? 1 : hp.depth;
    dims.width = family == Family::ARX ? 1 : hp.width;
    model.dims = dims;

    TrainConfig local = cfg;
    local.ridge = hp.ridge;
    const auto sequences = make_training_sequences(train, response, standardizer);
    FitResult fit = fit_network(dims, mode, sequences, local);
    model.theta = std::move(fit.theta);
    model.log = std::move(fit.log);
    return model;
}

namespace {

double validation_score(const RegressionModel& model, const Dataset& val) {
    double score = 0.0;
    for (const auto& seq : val.sequences) {
        const Vector preds = predict_instance(model, seq);
        for (std::size_t n = 0; n < seq.records.size(); ++n) {
            const double e =
                preds[static_cast<int>(n)] - response_value(seq.records[n], model.response);
            score += e * e;
        }
    }
    return score;
}

} // namespace

std::pair<RegressionModel, double> grid_search_select(Family family, TrainMode mode,
                                                      const std::vector<HyperTuple>& grid,
                                                      const Dataset& train, const Dataset& val,
                                                      ResponseKind response,
                                                      const TrainConfig& cfg) {
    if (grid.empty()) throw validation_error("hyperparameter grid is empty");
    const Standardizer standardizer = fit_dataset_standardizer(train, response);

    RegressionModel best;
    double best_score = std::numeric_limits<double>::infinity();
    bool any = false;
    std::string last_failure = "no tuple was attempted";
    for (const auto& hp : grid) {
        RegressionModel model;
        try {
            model = train_model(family, mode, hp, train, response, cfg, standardizer);
        } catch (const training_error& err) {
            last_failure = err.what();
            continue;
        }
        const double score = validation_score(model, val);
        if (!std::isfinite(score)) {
            last_failure = "non-finite validation score for tuple " + hp.describe(family);
            continue;
        }
        if (score < best_score) {
            best_score = score;
            best = std::move(model);
            any = true;
        }
    }
    if (!any) throw training_error("every hyperparameter tuple failed: " + last_failure);
    best.validation_score = best_score;
    return {std::move(best), best_score};
}

} // namespace romerr
