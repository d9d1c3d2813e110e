#include <doctest.h>

#include <cmath>

#include "romerr/errors.hpp"
#include "romerr/regress.hpp"
#include "romerr/rng.hpp"

using namespace romerr;

namespace {

std::vector<TrainSequence> random_batch(int n_seq, int T, int F, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TrainSequence> batch(n_seq);
    for (auto& seq : batch) {
        seq.features.resize(T, F);
        seq.responses.resize(T);
        for (int n = 0; n < T; ++n) {
            for (int j = 0; j < F; ++j) seq.features(n, j) = rng.uniform(-1.0, 1.0);
            seq.responses[n] = rng.uniform(-1.0, 1.0);
        }
        seq.delta0 = rng.uniform(-1.0, 1.0);
    }
    return batch;
}

double fd_max_rel_error(const NetDims& dims, TrainMode mode,
                        const std::vector<TrainSequence>& batch, double ridge,
                        std::uint64_t seed) {
    Rng rng(seed);
    Vector theta = init_params(dims, rng);
    // move off the ReLU kinks and zero biases
    for (int i = 0; i < theta.size(); ++i) theta[i] += rng.uniform(-0.05, 0.05);

    Vector grad(theta.size());
    compute_loss_and_gradients(dims, mode, theta, batch, ridge, &grad);

    const double h = 1e-6;
    double worst = 0.0;
    for (int i = 0; i < theta.size(); ++i) {
        Vector tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        const double lp = compute_loss_and_gradients(dims, mode, tp, batch, ridge, nullptr);
        const double lm = compute_loss_and_gradients(dims, mode, tm, batch, ridge, nullptr);
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::fabs(grad[i] - fd) / std::max(1.0, std::fabs(fd));
        worst = std::max(worst, rel);
    }
    return worst;
}

TrainConfig quick_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    cfg.max_epochs = 400;
    cfg.patience = 50;
    cfg.restarts = 3;
    cfg.seed = seed;
    cfg.threads = 1;
    return cfg;
}

} // namespace

TEST_CASE("predict_sequence family semantics") {
    SUBCASE("ARX pure persistence: theta1 = 0, theta2 = 1, b = 0") {
        NetDims dims{Family::ARX, 2, 1, 1};
        Vector theta = Vector::Zero(param_count(dims));
        theta[2] = 1.0; // theta2
        Matrix features(5, 2);
        features.setRandom();
        const Vector preds = predict_sequence_std(dims, theta, features, 0.37);
        for (int n = 0; n < 5; ++n) CHECK(preds[n] == doctest::Approx(0.37));
    }

    SUBCASE("ANN-I with a zero network repeats delta0") {
        NetDims dims{Family::ANN_I, 3, 2, 4};
        const Vector theta = Vector::Zero(param_count(dims));
        Matrix features(4, 3);
        features.setRandom();
        const Vector preds = predict_sequence_std(dims, theta, features, -1.25);
        for (int n = 0; n < 4; ++n) CHECK(preds[n] == doctest::Approx(-1.25));
    }

    SUBCASE("LSTM with zero weights and output bias 0.7 predicts 0.7") {
        NetDims dims{Family::LSTM, 2, 1, 3};
        Vector theta = Vector::Zero(param_count(dims));
        theta[param_count(dims) - 1] = 0.7; // output bias
        // forget bias would be 1 after init; zero everything means gates sit at
        // sigma(0) = 1/2 but the zero head weight ignores the hidden state
        Matrix features(6, 2);
        features.setRandom();
        const Vector preds = predict_sequence_std(dims, theta, features, 0.0);
        for (int n = 0; n < 6; ++n) CHECK(preds[n] == doctest::Approx(0.7));
    }

    SUBCASE("LSTM forward pass matches a literal single-cell transcription") {
        NetDims dims{Family::LSTM, 1, 1, 1};
        Rng rng(71);
        const Vector theta = init_params(dims, rng);
        // layout per gate [o, f, i, g]: Wx, Wh, b; then head w, b
        const double wxo = theta[0], who = theta[1], bo = theta[2];
        const double wxf = theta[3], whf = theta[4], bf = theta[5];
        const double wxi = theta[6], whi = theta[7], bi = theta[8];
        const double wxg = theta[9], whg = theta[10], bg = theta[11];
        const double wf = theta[12], bhead = theta[13];

        Matrix features(4, 1);
        features << 0.3, -0.8, 1.1, 0.2;
        const Vector preds = predict_sequence_std(dims, theta, features, 0.0);

        auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
        double h = 0.0, c = 0.0;
        for (int n = 0; n < 4; ++n) {
            const double x = features(n, 0);
            const double o = sig(wxo * x + who * h + bo);
            const double f = sig(wxf * x + whf * h + bf);
            const double i = sig(wxi * x + whi * h + bi);
            const double g = std::tanh(wxg * x + whg * h + bg);
            c = f * c + i * g;
            h = o * std::tanh(c);
            CHECK(preds[n] == doctest::Approx(wf * h + bhead).epsilon(1e-12));
        }
    }

    SUBCASE("length-zero sequences give empty predictions") {
        NetDims dims{Family::LSTM, 2, 1, 2};
        Rng rng(73);
        const Vector theta = init_params(dims, rng);
        CHECK(predict_sequence_std(dims, theta, Matrix(0, 2), 0.5).size() == 0);
    }

    SUBCASE("kNN and GP are rejected at this entry point") {
        RegressionModel model;
        model.family = Family::kNN;
        CHECK_THROWS_AS(predict_sequence(model, Matrix(2, 1), 0.0), validation_error);
    }
}

TEST_CASE("gradients match central finite differences") {
    struct Case {
        Family family;
        TrainMode mode;
    };
    const std::vector<Case> cases = {
        {Family::ANN, TrainMode::NonRecursive}, {Family::ARX, TrainMode::NRT},
        {Family::ARX, TrainMode::RT},           {Family::ANN_I, TrainMode::NRT},
        {Family::ANN_I, TrainMode::RT},         {Family::LARX, TrainMode::RT},
        {Family::RNN, TrainMode::RT},           {Family::LSTM, TrainMode::RT},
    };
    int instance = 0;
    for (const auto& c : cases) {
        for (int rep = 0; rep < 3; ++rep) {
            ++instance;
            Rng shape_rng(1000 + instance);
            NetDims dims;
            dims.family = c.family;
            dims.n_features = 1 + static_cast<int>(shape_rng.below(4));
            dims.depth = c.family == Family::ARX || c.family == Family::LARX
                             ? 1
                             : 1 + static_cast<int>(shape_rng.below(2));
            dims.width = 2 + static_cast<int>(shape_rng.below(3));
            const int T = 2 + static_cast<int>(shape_rng.below(4));
            const auto batch = random_batch(2, T, dims.n_features, 2000 + instance);
            const double ridge = rep == 0 ? 0.0 : 1e-3;
            const double err = fd_max_rel_error(dims, c.mode, batch, ridge, 3000 + instance);
            INFO("family ", to_string(c.family), " mode ", to_string(c.mode), " rep ", rep);
            CHECK(err <= 1e-5);
        }
    }
}

TEST_CASE("scalar ARX gradient against a hand-differentiated closed form") {
    // one sequence of length 2, one feature; RT mode
    // p1 = t1*x1 + t2*d0 + b ; p2 = t1*x2 + t2*p1 + b
    // L = (p1-y1)^2 + (p2-y2)^2
    NetDims dims{Family::ARX, 1, 1, 1};
    Vector theta(3);
    theta << 0.7, -0.4, 0.2; // t1, t2, b
    TrainSequence seq;
    seq.features.resize(2, 1);
    seq.features << 0.5, -1.0;
    seq.responses.resize(2);
    seq.responses << 0.3, -0.6;
    seq.delta0 = 0.25;

    Vector grad(3);
    compute_loss_and_gradients(dims, TrainMode::RT, theta, {seq}, 0.0, &grad);

    const double t1 = theta[0], t2 = theta[1], b = theta[2];
    const double x1 = 0.5, x2 = -1.0, y1 = 0.3, y2 = -0.6, d0 = 0.25;
    const double p1 = t1 * x1 + t2 * d0 + b;
    const double p2 = t1 * x2 + t2 * p1 + b;
    const double e1 = p1 - y1, e2 = p2 - y2;
    const double dt1 = 2.0 * e1 * x1 + 2.0 * e2 * (x2 + t2 * x1);
    const double dt2 = 2.0 * e1 * d0 + 2.0 * e2 * (p1 + t2 * d0);
    const double db = 2.0 * e1 + 2.0 * e2 * (1.0 + t2);
    CHECK(grad[0] == doctest::Approx(dt1).epsilon(1e-12));
    CHECK(grad[1] == doctest::Approx(dt2).epsilon(1e-12));
    CHECK(grad[2] == doctest::Approx(db).epsilon(1e-12));
}

TEST_CASE("perfect-fit model has zero loss and zero gradient") {
    // build data generated exactly by a known ARX model, then evaluate there
    NetDims dims{Family::ARX, 1, 1, 1};
    Vector theta(3);
    theta << 0.5, 0.8, -0.1;
    TrainSequence seq;
    seq.features.resize(3, 1);
    seq.features << 1.0, -0.5, 0.25;
    seq.delta0 = 0.4;
    seq.responses.resize(3);
    double prev = seq.delta0;
    for (int n = 0; n < 3; ++n) {
        prev = theta[0] * seq.features(n, 0) + theta[1] * prev + theta[2];
        seq.responses[n] = prev;
    }
    Vector grad(3);
    const double loss = compute_loss_and_gradients(dims, TrainMode::RT, theta, {seq}, 0.0, &grad);
    CHECK(loss <= 1e-28);
    CHECK(grad.cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("incompatible family and mode is a configuration error") {
    NetDims dims{Family::LSTM, 2, 1, 2};
    Rng rng(79);
    const Vector theta = init_params(dims, rng);
    CHECK_THROWS_AS(
        compute_loss_and_gradients(dims, TrainMode::NRT, theta, random_batch(1, 3, 2, 5), 0.0, nullptr),
        validation_error);
    NetDims ann{Family::ANN, 2, 1, 2};
    Rng rng2(83);
    const Vector theta2 = init_params(ann, rng2);
    CHECK_THROWS_AS(
        compute_loss_and_gradients(ann, TrainMode::RT, theta2, random_batch(1, 3, 2, 6), 0.0, nullptr),
        validation_error);
}

TEST_CASE("adam") {
    TrainConfig cfg;
    cfg.learning_rate = 0.1;

    SUBCASE("zero gradient leaves parameters unchanged") {
        Vector params = Vector::Ones(4);
        AdamState state;
        adam_step(params, Vector::Zero(4), state, 1, cfg);
        CHECK((params - Vector::Ones(4)).norm() == 0.0);
    }

    SUBCASE("first step approaches -lr * sign(g)") {
        Vector params = Vector::Zero(2);
        Vector grads(2);
        grads << 0.3, -2.0;
        AdamState state;
        adam_step(params, grads, state, 1, cfg);
        CHECK(params[0] == doctest::Approx(-0.1).epsilon(1e-6));
        CHECK(params[1] == doctest::Approx(0.1).epsilon(1e-6));
    }

    SUBCASE("identical calls give identical outputs") {
        Vector a = Vector::Ones(3), b = Vector::Ones(3);
        Vector g(3);
        g << 1.0, -0.5, 0.25;
        AdamState sa, sb;
        for (int t = 1; t <= 5; ++t) {
            adam_step(a, g, sa, t, cfg);
            adam_step(b, g, sb, t, cfg);
        }
        CHECK((a - b).norm() == 0.0);
    }
}

TEST_CASE("knn_fit_predict") {
    Matrix features(4, 2);
    features << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
    Vector responses(4);
    responses << 1.0, 3.0, 5.0, 7.0;

    SUBCASE("query equal to a training feature with k = 1") {
        Vector q(2);
        q << 1.0, 0.0;
        CHECK(knn_fit_predict(features, responses, 1, KnnWeighting::Uniform, q) == 3.0);
    }
    SUBCASE("two equidistant neighbors average under uniform weights") {
        Vector q(2);
        q << 0.5, 0.0; // equidistant from rows 0 and 1
        CHECK(knn_fit_predict(features, responses, 2, KnnWeighting::Uniform, q) ==
              doctest::Approx(2.0));
    }
    SUBCASE("zero-distance neighbor overrides inverse-distance weights") {
        Vector q(2);
        q << 0.0, 1.0;
        CHECK(knn_fit_predict(features, responses, 3, KnnWeighting::InverseDistance, q) == 5.0);
    }
    SUBCASE("inverse-distance weighting") {
        Vector q(2);
        q << 0.25, 0.0; // distances 0.25 to row 0, 0.75 to row 1
        const double w0 = 1.0 / 0.25, w1 = 1.0 / 0.75;
        const double expected = (w0 * 1.0 + w1 * 3.0) / (w0 + w1);
        CHECK(knn_fit_predict(features, responses, 2, KnnWeighting::InverseDistance, q) ==
              doctest::Approx(expected));
    }
    SUBCASE("empty training set is an error") {
        CHECK_THROWS_AS(knn_fit_predict(Matrix(0, 2), Vector(0), 1, KnnWeighting::Uniform,
                                        Vector::Zero(2)),
                        validation_error);
    }
}

TEST_CASE("gp_fit_predict") {
    SUBCASE("small lambda interpolates the training data") {
        Matrix params(5, 1);
        params << 0.0, 1.0, 2.0, 3.0, 4.0;
        Vector responses(5);
        responses << 0.0, 1.0, 0.5, -0.5, 0.25;
        for (int i = 0; i < 5; ++i) {
            const auto [mean, var] = gp_fit_predict(params, responses, 1e-8, params.row(i));
            CHECK(std::fabs(mean - responses[i]) <= 1e-3);
        }
    }
    SUBCASE("constant responses give the constant posterior mean anywhere") {
        Matrix params(4, 2);
        params << 0.0, 0.0, 1.0, 0.5, -1.0, 2.0, 0.3, 0.3;
        const Vector responses = Vector::Constant(4, 2.5);
        Vector query(2);
        query << 10.0, -10.0;
        const auto [mean, var] = gp_fit_predict(params, responses, 1e-4, query);
        CHECK(mean == doctest::Approx(2.5).epsilon(1e-6));
    }
    SUBCASE("the default lambda grid has 20 log-spaced points from 1e-8 to 1") {
        const auto grid = default_grid(Family::GP);
        CHECK(grid.size() == 20);
        CHECK(grid.front().gp_lambda == doctest::Approx(1e-8));
        CHECK(grid.back().gp_lambda == doctest::Approx(1.0));
        for (std::size_t i = 1; i < grid.size(); ++i) {
            const double ratio = grid[i].gp_lambda / grid[i - 1].gp_lambda;
            CHECK(ratio == doctest::Approx(std::pow(10.0, 8.0 / 19.0)).epsilon(1e-10));
        }
    }
}

TEST_CASE("train_model recovers a planted ARX generator under RT") {
    // synthesize sequences from a known ARX(1,1) in standardized-ish scale
    const double t1 = 0.6, t2 = 0.5, b = 0.1;
    Rng rng(101);
    Dataset train;
    train.kind = FeatureKind::Params;
    train.grid = CoarseTimeGrid::strided(1, 12);
    for (int s = 0; s < 10; ++s) {
        InstanceSequence seq;
        seq.mu = Vector::Constant(1, rng.uniform(-1.0, 1.0));
        seq.delta_q0 = 0.0;
        seq.delta_x0 = 0.0;
        double prev = 0.0;
        for (int n = 1; n <= 12; ++n) {
            SequenceRecord rec;
            rec.coarse_index = n;
            rec.fine_index = n;
            rec.time = n;
            rec.features = Vector::Constant(1, rng.uniform(-1.0, 1.0));
            prev = t1 * rec.features[0] + t2 * prev + b;
            rec.delta_q = prev;
            rec.delta_x = prev;
            seq.records.push_back(rec);
        }
        train.sequences.push_back(seq);
    }

    // identity standardizer so the planted coefficients are recovered as-is
    Standardizer identity;
    identity.feature_mean = Vector::Zero(1);
    identity.feature_std = Vector::Ones(1);
    identity.response_mean = Vector::Zero(1);
    identity.response_std = Vector::Ones(1);

    TrainConfig cfg = quick_config(303);
    cfg.max_epochs = 3000;
    cfg.patience = 3000;
    cfg.learning_rate = 2e-2;
    cfg.restarts = 2;
    HyperTuple hp;
    hp.ridge = 0.0;
    const RegressionModel model =
        train_model(Family::ARX, TrainMode::RT, hp, train, ResponseKind::Qoi, cfg, identity);
    CHECK(std::fabs(model.theta[0] - t1) <= 1e-2);
    CHECK(std::fabs(model.theta[1] - t2) <= 1e-2);
    CHECK(std::fabs(model.theta[2] - b) <= 1e-2);
}

TEST_CASE("training on constant responses reaches near-zero error") {
    Rng rng(107);
    Dataset train;
    train.kind = FeatureKind::Params;
    train.grid = CoarseTimeGrid::strided(1, 8);
    for (int s = 0; s < 5; ++s) {
        InstanceSequence seq;
        seq.mu = Vector::Constant(1, rng.uniform(-1.0, 1.0));
        seq.delta_q0 = 4.2;
        seq.delta_x0 = 4.2;
        for (int n = 1; n <= 8; ++n) {
            SequenceRecord rec;
            rec.coarse_index = n;
            rec.fine_index = n;
            rec.time = n;
            rec.features = Vector::Constant(1, rng.uniform(-1.0, 1.0));
            rec.delta_q = 4.2;
            rec.delta_x = 4.2;
            seq.records.push_back(rec);
        }
        train.sequences.push_back(seq);
    }
    const Standardizer s = fit_dataset_standardizer(train, ResponseKind::Qoi);
    HyperTuple hp;
    hp.depth = 1;
    hp.width = 4;
    hp.ridge = 0.0;
    const RegressionModel model =
        train_model(Family::ANN, TrainMode::NonRecursive, hp, train, ResponseKind::Qoi,
                    quick_config(409), s);
    // every prediction should be 4.2 (training squared error ~ 0)
    for (const auto& seq : train.sequences) {
        const Vector preds = predict_instance(model, seq);
        for (int n = 0; n < preds.size(); ++n) CHECK(std::fabs(preds[n] - 4.2) <= 1e-3);
    }
}

TEST_CASE("patience zero stops after the first non-improvement") {
    const auto batch = random_batch(5, 6, 2, 909);
    NetDims dims{Family::ANN, 2, 1, 4};
    TrainConfig cfg = quick_config(11);
    cfg.patience = 0;
    cfg.max_epochs = 500;
    cfg.restarts = 1;
    const FitResult fit = fit_network(dims, TrainMode::NonRecursive, batch, cfg);
    const auto& log = fit.log.restarts[0];
    CHECK(log.epochs_run < 500); // stopped early
    // holdout loss history is not exposed, but the log proves the early exit
    CHECK(fit.log.chosen_restart == 0);
}

TEST_CASE("grid_search_select") {
    // plant data from an ARX generator; the tuple with tiny ridge should win
    const double t1 = 0.9, t2 = 0.3, b = 0.0;
    Rng rng(113);
    auto make_set = [&](int count) {
        Dataset data;
        data.kind = FeatureKind::Params;
        data.grid = CoarseTimeGrid::strided(1, 10);
        for (int s = 0; s < count; ++s) {
            InstanceSequence seq;
            seq.mu = Vector::Constant(1, rng.uniform(-1.0, 1.0));
            seq.delta_q0 = 0.0;
            seq.delta_x0 = 0.0;
            double prev = 0.0;
            for (int n = 1; n <= 10; ++n) {
                SequenceRecord rec;
                rec.coarse_index = n;
                rec.fine_index = n;
                rec.time = n;
                rec.features = Vector::Constant(1, rng.uniform(-1.0, 1.0));
                prev = t1 * rec.features[0] + t2 * prev + b;
                rec.delta_q = prev;
                rec.delta_x = prev;
                seq.records.push_back(rec);
            }
            data.sequences.push_back(seq);
        }
        return data;
    };
    const Dataset train = make_set(10);
    const Dataset val = make_set(4);

    SUBCASE("the generator-friendly tuple wins") {
        std::vector<HyperTuple> grid(2);
        grid[0].ridge = 10.0; // heavy shrinkage cannot fit the generator
        grid[1].ridge = 1e-6;
        TrainConfig cfg = quick_config(515);
        cfg.max_epochs = 1500;
        cfg.patience = 1500;
        cfg.learning_rate = 2e-2;
        cfg.restarts = 2;
        const auto [model, score] =
            grid_search_select(Family::ARX, TrainMode::RT, grid, train, val, ResponseKind::Qoi, cfg);
        CHECK(model.ridge == 1e-6);
        CHECK(score < 1.0);
    }

    SUBCASE("ties break in grid order") {
        // kNN with duplicated tuples: identical scores, first wins
        std::vector<HyperTuple> grid(2);
        grid[0].knn_k = 2;
        grid[0].knn_weighting = KnnWeighting::Uniform;
        grid[1].knn_k = 2;
        grid[1].knn_weighting = KnnWeighting::Uniform;
        const auto [model, score] = grid_search_select(Family::kNN, TrainMode::NonRecursive, grid,
                                                       train, val, ResponseKind::Qoi,
                                                       quick_config(1));
        CHECK(model.knn_k == 2);
    }

    SUBCASE("the kNN default grid has 10 candidates") {
        CHECK(default_grid(Family::kNN).size() == 10);
    }

    SUBCASE("empty grid is rejected") {
        CHECK_THROWS_AS(grid_search_select(Family::ARX, TrainMode::RT, {}, train, val,
                                           ResponseKind::Qoi, quick_config(2)),
                        validation_error);
    }
}

TEST_CASE("training determinism: same seed gives identical parameters") {
    const Dataset empty_like = [] {
        Rng rng(131);
        Dataset data;
        data.kind = FeatureKind::Params;
        data.grid = CoarseTimeGrid::strided(1, 6);
        for (int s = 0; s < 6; ++s) {
            InstanceSequence seq;
            seq.mu = Vector::Constant(1, rng.uniform(-1.0, 1.0));
            seq.delta_q0 = 0.1;
            seq.delta_x0 = 0.1;
            for (int n = 1; n <= 6; ++n) {
                SequenceRecord rec;
                rec.coarse_index = n;
                rec.fine_index = n;
                rec.time = n;
                rec.features = Vector::Constant(1, rng.uniform(-1.0, 1.0));
                rec.delta_q = std::sin(0.5 * n) + 0.1 * seq.mu[0];
                rec.delta_x = rec.delta_q;
                seq.records.push_back(rec);
            }
            data.sequences.push_back(seq);
        }
        return data;
    }();

    const Standardizer s = fit_dataset_standardizer(empty_like, ResponseKind::Qoi);
    HyperTuple hp;
    hp.depth = 1;
    hp.width = 3;
    hp.ridge = 1e-4;
    TrainConfig cfg = quick_config(747);
    cfg.max_epochs = 50;
    const RegressionModel a =
        train_model(Family::LSTM, TrainMode::RT, hp, empty_like, ResponseKind::Qoi, cfg, s);
    const RegressionModel b =
        train_model(Family::LSTM, TrainMode::RT, hp, empty_like, ResponseKind::Qoi, cfg, s);
    CHECK(a.theta.size() == b.theta.size());
    CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() == 0.0);

    // multithreaded restarts agree with single-threaded ones
    TrainConfig cfg4 = cfg;
    cfg4.threads = 4;
    const RegressionModel c =
        train_model(Family::LSTM, TrainMode::RT, hp, empty_like, ResponseKind::Qoi, cfg4, s);
    CHECK((a.theta - c.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("NRT and RT both drive persistence data to near-zero loss") {
    // constant responses equal to delta0: theta2 = 1 solves both problems
    Rng rng(137);
    Dataset data;
    data.kind = FeatureKind::Params;
    data.grid = CoarseTimeGrid::strided(1, 8);
    for (int s = 0; s < 5; ++s) {
        InstanceSequence seq;
        seq.mu = Vector::Constant(1, rng.uniform(-1.0, 1.0));
        seq.delta_q0 = 2.0;
        seq.delta_x0 = 2.0;
        for (int n = 1; n <= 8; ++n) {
            SequenceRecord rec;
            rec.coarse_index = n;
            rec.fine_index = n;
            rec.time = n;
            rec.features = Vector::Constant(1, rng.uniform(-1.0, 1.0));
            rec.delta_q = 2.0;
            rec.delta_x = 2.0;
            seq.records.push_back(rec);
        }
        data.sequences.push_back(seq);
    }
    // constant responses: the standardizer maps them to 0 with std 1, so a
    // zero network is optimal and training FVU is trivially tiny
    const Standardizer s = fit_dataset_standardizer(data, ResponseKind::Qoi);
    for (TrainMode mode : {TrainMode::NRT, TrainMode::RT}) {
        HyperTuple hp;
        const RegressionModel model =
            train_model(Family::ARX, mode, hp, data, ResponseKind::Qoi, quick_config(851), s);
        for (const auto& seq : data.sequences) {
            const Vector preds = predict_instance(model, seq);
            for (int n = 0; n < preds.size(); ++n) CHECK(std::fabs(preds[n] - 2.0) <= 1e-2);
        }
    }
}
