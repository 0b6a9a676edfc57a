#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "regimenet/neural.hpp"
#include "regimenet/rng.hpp"

using namespace regimenet;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
    Matrix M(r, c);
    for (double& v : M.raw()) v = rng.normal(0.0, scale);
    return M;
}

double cost_of(const NetworkParameters& params, const Matrix& X, const Matrix& Y) {
    return cross_entropy(forward(params, X).output(), Y);
}

// Central finite differences on the cost, the independent gradient oracle.
double fd_weight_gradient(NetworkParameters params, const Matrix& X, const Matrix& Y,
                          std::size_t layer, std::size_t index, double h) {
    double* w = params.W[layer].raw().data();
    const double saved = w[index];
    w[index] = saved + h;
    const double up = cost_of(params, X, Y);
    w[index] = saved - h;
    const double down = cost_of(params, X, Y);
    return (up - down) / (2.0 * h);
}

double fd_bias_gradient(NetworkParameters params, const Matrix& X, const Matrix& Y,
                        std::size_t layer, std::size_t index, double h) {
    const double saved = params.b[layer][index];
    params.b[layer][index] = saved + h;
    const double up = cost_of(params, X, Y);
    params.b[layer][index] = saved - h;
    const double down = cost_of(params, X, Y);
    return (up - down) / (2.0 * h);
}

} // namespace

TEST_CASE("activations") {
    Matrix Z(1, 3);
    Z(0, 0) = -3.0;
    Z(0, 1) = 2.5;
    Z(0, 2) = 0.0;
    const Matrix A = relu(Z);
    CHECK(A(0, 0) == 0.0);
    CHECK(A(0, 1) == 2.5);
    CHECK(A(0, 2) == 0.0);

    Matrix S(1, 3);
    S(0, 0) = 0.0;
    S(0, 1) = 40.0;
    S(0, 2) = -7.3;
    const Matrix B = sigmoid(S);
    CHECK(B(0, 0) == 0.5);
    CHECK(std::abs(B(0, 1) - 1.0) <= 1e-15);
    Matrix Sneg(1, 1);
    Sneg(0, 0) = 7.3;
    CHECK(B(0, 2) == doctest::Approx(1.0 - sigmoid(Sneg)(0, 0)).epsilon(1e-14));
}

TEST_CASE("parameter initialization") {
    const NetworkSpec spec{{100, 200, 4}};
    Rng rng(5);
    const NetworkParameters p = init_parameters(spec, rng);

    REQUIRE(p.W.size() == 2);
    for (const auto& b : p.b)
        for (double v : b) CHECK(v == 0.0);

    SUBCASE("fixed seed gives identical parameters") {
        Rng rng2(5);
        const NetworkParameters q = init_parameters(spec, rng2);
        for (std::size_t l = 0; l < p.W.size(); ++l)
            for (std::size_t i = 0; i < p.W[l].raw().size(); ++i)
                CHECK(p.W[l].raw()[i] == q.W[l].raw()[i]);
    }
    SUBCASE("first-layer variance follows He initialization") {
        double mean = 0.0, var = 0.0;
        for (double v : p.W[0].raw()) mean += v;
        mean /= static_cast<double>(p.W[0].raw().size());
        for (double v : p.W[0].raw()) var += (v - mean) * (v - mean);
        var /= static_cast<double>(p.W[0].raw().size());
        CHECK(var == doctest::Approx(2.0 / 100).epsilon(0.1));
    }
}

TEST_CASE("forward pass") {
    SUBCASE("identity hidden layer applies ReLU") {
        NetworkParameters p;
        Matrix I2(2, 2);
        I2(0, 0) = I2(1, 1) = 1.0;
        p.W = {I2, I2};
        p.b = {{0.0, 0.0}, {0.0, 0.0}};
        Matrix X(2, 1);
        X(0, 0) = -1.0;
        X(1, 0) = 2.0;
        const ForwardCache cache = forward(p, X);
        CHECK(cache.A[1](0, 0) == 0.0);
        CHECK(cache.A[1](1, 0) == 2.0);
    }
    SUBCASE("zero input and zero biases output one half") {
        const NetworkSpec spec{{3, 4, 2}};
        Rng rng(1);
        const NetworkParameters p = init_parameters(spec, rng);
        const Matrix X(3, 2, 0.0);
        const ForwardCache cache = forward(p, X);
        for (double v : cache.output().raw()) CHECK(v == 0.5);
    }
    SUBCASE("identical columns produce identical outputs") {
        const NetworkSpec spec{{3, 5, 4}};
        Rng rng(2);
        const NetworkParameters p = init_parameters(spec, rng);
        Matrix X(3, 2);
        for (std::size_t r = 0; r < 3; ++r) X(r, 0) = X(r, 1) = rng.normal(0.0, 1.0);
        const ForwardCache cache = forward(p, X);
        for (std::size_t r = 0; r < 4; ++r)
            CHECK(cache.output()(r, 0) == cache.output()(r, 1));
    }
    SUBCASE("wrong feature count is a shape error") {
        const NetworkSpec spec{{3, 5, 4}};
        Rng rng(2);
        const NetworkParameters p = init_parameters(spec, rng);
        CHECK_THROWS_AS(forward(p, Matrix(4, 2)), ShapeError);
    }
}

TEST_CASE("cross entropy anchors") {
    Matrix Y(2, 2);
    Y(0, 0) = 1.0;
    Y(1, 1) = 1.0;

    SUBCASE("perfect prediction costs nearly nothing") {
        CHECK(cross_entropy(Y, Y) <= 1e-11);
    }
    SUBCASE("uniform half predictions cost ln 2") {
        const Matrix A(2, 2, 0.5);
        CHECK(std::abs(cross_entropy(A, Y) - 0.6931471805599453) <= 1e-12);
    }
    SUBCASE("single entry y=1, a=1/e costs exactly 1") {
        Matrix a(1, 1), y(1, 1);
        a(0, 0) = std::exp(-1.0);
        y(0, 0) = 1.0;
        CHECK(cross_entropy(a, y) == doctest::Approx(1.0).epsilon(1e-14));
    }
    SUBCASE("shape mismatch is rejected") {
        CHECK_THROWS_AS(cross_entropy(Matrix(2, 2), Matrix(2, 3)), ShapeError);
    }
}

TEST_CASE("backward matches central finite differences") {
    Rng rng(31);
    const double h = 1e-5;
    // ten random small networks with at most ~200 parameters
    for (int trial = 0; trial < 10; ++trial) {
        const int n0 = 2 + static_cast<int>(rng.below(4));
        const int n1 = 2 + static_cast<int>(rng.below(6));
        const int n2 = 1 + static_cast<int>(rng.below(4));
        const NetworkSpec spec{{n0, n1, n2}};
        const NetworkParameters params = init_parameters(spec, rng);
        const int s = 3 + static_cast<int>(rng.below(5));
        const Matrix X = random_matrix(static_cast<std::size_t>(n0),
                                       static_cast<std::size_t>(s), rng);
        Matrix Y(static_cast<std::size_t>(n2), static_cast<std::size_t>(s));
        for (double& v : Y.raw()) v = rng.below(2) ? 1.0 : 0.0;

        const ForwardCache cache = forward(params, X);
        const Gradients grads = backward(params, cache, Y);

        double worst = 0.0;
        for (std::size_t l = 0; l < grads.dW.size(); ++l) {
            for (std::size_t i = 0; i < grads.dW[l].raw().size(); ++i) {
                const double fd = fd_weight_gradient(params, X, Y, l, i, h);
                const double an = grads.dW[l].raw()[i];
                worst = std::max(worst,
                                 std::abs(an - fd) / std::max({std::abs(an), std::abs(fd),
                                                               1e-8}));
            }
            for (std::size_t i = 0; i < grads.db[l].size(); ++i) {
                const double fd = fd_bias_gradient(params, X, Y, l, i, h);
                const double an = grads.db[l][i];
                worst = std::max(worst,
                                 std::abs(an - fd) / std::max({std::abs(an), std::abs(fd),
                                                               1e-8}));
            }
        }
        CHECK(worst <= 1e-5);
    }
}

TEST_CASE("backward edge behavior") {
    const NetworkSpec spec{{3, 5, 4}};
    Rng rng(7);
    const NetworkParameters params = init_parameters(spec, rng);
    const Matrix X = random_matrix(3, 6, rng);

    SUBCASE("gradients vanish at a perfect fit") {
        const ForwardCache cache = forward(params, X);
        const Matrix Y = cache.output(); // exact targets
        const Gradients grads = backward(params, cache, Y);
        for (const auto& dW : grads.dW)
            for (double v : dW.raw()) CHECK(std::abs(v) <= 1e-11);
        for (const auto& db : grads.db)
            for (double v : db) CHECK(std::abs(v) <= 1e-11);
    }
    SUBCASE("duplicating the batch leaves gradients unchanged") {
        Matrix Y(4, 6);
        for (double& v : Y.raw()) v = rng.below(2) ? 1.0 : 0.0;
        const ForwardCache cache = forward(params, X);
        const Gradients grads = backward(params, cache, Y);

        Matrix X2(3, 12), Y2(4, 12);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 6; ++c) X2(r, c) = X2(r, c + 6) = X(r, c);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 6; ++c) Y2(r, c) = Y2(r, c + 6) = Y(r, c);
        const ForwardCache cache2 = forward(params, X2);
        const Gradients grads2 = backward(params, cache2, Y2);
        for (std::size_t l = 0; l < grads.dW.size(); ++l)
            for (std::size_t i = 0; i < grads.dW[l].raw().size(); ++i)
                CHECK(grads2.dW[l].raw()[i] ==
                      doctest::Approx(grads.dW[l].raw()[i]).epsilon(1e-12));
    }
    SUBCASE("stale cache is rejected") {
        const ForwardCache cache = forward(params, X);
        CHECK_THROWS_AS(backward(params, cache, Matrix(4, 7)), ShapeError);
    }
}

TEST_CASE("gradient descent step") {
    const NetworkSpec spec{{2, 3, 1}};
    Rng rng(9);
    NetworkParameters params = init_parameters(spec, rng);
    const NetworkParameters before = params;
    const Matrix X = random_matrix(2, 4, rng);
    Matrix Y(1, 4);
    for (double& v : Y.raw()) v = rng.below(2) ? 1.0 : 0.0;
    const ForwardCache cache = forward(params, X);
    Gradients grads = backward(params, cache, Y);

    SUBCASE("zero learning rate leaves parameters unchanged") {
        gd_step(params, grads, 0.0);
        for (std::size_t l = 0; l < params.W.size(); ++l)
            for (std::size_t i = 0; i < params.W[l].raw().size(); ++i)
                CHECK(params.W[l].raw()[i] == before.W[l].raw()[i]);
    }
    SUBCASE("zero gradients leave parameters unchanged") {
        for (auto& dW : grads.dW)
            for (double& v : dW.raw()) v = 0.0;
        for (auto& db : grads.db)
            for (double& v : db) v = 0.0;
        gd_step(params, grads, 0.7);
        for (std::size_t l = 0; l < params.W.size(); ++l)
            for (std::size_t i = 0; i < params.W[l].raw().size(); ++i)
                CHECK(params.W[l].raw()[i] == before.W[l].raw()[i]);
    }
    SUBCASE("scalar update") {
        params.W[0](0, 0) = 1.0;
        grads.dW[0](0, 0) = 2.0;
        gd_step(params, grads, 0.1);
        CHECK(params.W[0](0, 0) == doctest::Approx(0.8).epsilon(1e-15));
    }
}

TEST_CASE("one small step almost never increases the cost") {
    Rng rng(13);
    int increased = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const NetworkSpec spec{{3, 6, 2}};
        NetworkParameters params = init_parameters(spec, rng);
        const Matrix X = random_matrix(3, 8, rng);
        Matrix Y(2, 8);
        for (double& v : Y.raw()) v = rng.below(2) ? 1.0 : 0.0;
        const double before = cost_of(params, X, Y);
        const ForwardCache cache = forward(params, X);
        const Gradients grads = backward(params, cache, Y);
        gd_step(params, grads, 1e-3);
        if (cost_of(params, X, Y) > before + 1e-9) ++increased;
    }
    CHECK(increased <= 5);
}

TEST_CASE("training on a separable toy problem converges") {
    Rng rng(21);
    const int s = 200;
    Matrix X(2, s);
    Matrix Y(1, s);
    for (int c = 0; c < s; ++c) {
        const double x0 = rng.uniform(-1.0, 1.0);
        const double x1 = rng.uniform(-1.0, 1.0);
        X(0, c) = x0;
        X(1, c) = x1;
        Y(0, c) = x0 + x1 > 0.0 ? 1.0 : 0.0;
    }
    const Normalizer norm = fit_normalizer(X);
    const Matrix Xn = apply_normalizer(norm, X);

    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    cfg.max_iterations = 2500;
    cfg.improvement_threshold = 1e-12;
    cfg.seed = 3;
    const TrainResult result = train(NetworkSpec{{2, 8, 1}}, Xn, Y, cfg);

    CHECK(result.cost_history.back() < 0.05);
    CHECK(static_cast<int>(result.cost_history.size()) == result.iterations);
    for (double c : result.cost_history) CHECK(std::isfinite(c));
}

TEST_CASE("training is invariant to the example order") {
    Rng rng(33);
    const int s = 24;
    Matrix X(3, s), Y(2, s);
    for (double& v : X.raw()) v = rng.normal(0.0, 1.0);
    for (double& v : Y.raw()) v = rng.below(2) ? 1.0 : 0.0;

    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.max_iterations = 40;
    cfg.improvement_threshold = 1e-15;
    cfg.seed = 11;
    const TrainResult a = train(NetworkSpec{{3, 6, 2}}, X, Y, cfg);

    // random column permutation
    std::vector<int> perm(s);
    for (int i = 0; i < s; ++i) perm[i] = i;
    rng.shuffle(perm);
    Matrix Xp(3, s), Yp(2, s);
    for (int c = 0; c < s; ++c) {
        for (std::size_t r = 0; r < 3; ++r) Xp(r, c) = X(r, static_cast<std::size_t>(perm[c]));
        for (std::size_t r = 0; r < 2; ++r) Yp(r, c) = Y(r, static_cast<std::size_t>(perm[c]));
    }
    const TrainResult b = train(NetworkSpec{{3, 6, 2}}, Xp, Yp, cfg);

    REQUIRE(a.cost_history.size() == b.cost_history.size());
    for (std::size_t i = 0; i < a.cost_history.size(); ++i)
        CHECK(a.cost_history[i] == b.cost_history[i]);
    for (std::size_t l = 0; l < a.params.W.size(); ++l)
        for (std::size_t i = 0; i < a.params.W[l].raw().size(); ++i)
            CHECK(a.params.W[l].raw()[i] == b.params.W[l].raw()[i]);
}

TEST_CASE("early stopping rules") {
    Rng rng(41);
    Matrix X(2, 10), Y(1, 10);
    for (double& v : X.raw()) v = rng.normal(0.0, 1.0);
    for (double& v : Y.raw()) v = rng.below(2) ? 1.0 : 0.0;

    SUBCASE("threshold rule stops a stalled training") {
        TrainConfig cfg;
        cfg.learning_rate = 1e-30; // effectively frozen
        cfg.max_iterations = 2500;
        cfg.patience = 15;
        cfg.improvement_threshold = 1e-6;
        const TrainResult result = train(NetworkSpec{{2, 4, 1}}, X, Y, cfg);
        // a frozen training trips both stall rules; either reason is fine
        CHECK((result.stop_reason == "threshold" || result.stop_reason == "patience"));
        CHECK(result.iterations <= 20);
    }
    SUBCASE("max_iterations is respected") {
        TrainConfig cfg;
        cfg.learning_rate = 0.05;
        cfg.max_iterations = 7;
        cfg.improvement_threshold = 1e-15;
        const TrainResult result = train(NetworkSpec{{2, 4, 1}}, X, Y, cfg);
        CHECK(result.iterations == 7);
        CHECK(result.stop_reason == "max_iterations");
    }
}

TEST_CASE("normalizer") {
    Matrix X(3, 4);
    // feature 0: constant; feature 1 and 2: varying
    for (std::size_t c = 0; c < 4; ++c) {
        X(0, c) = 7.0;
        X(1, c) = static_cast<double>(c);
        X(2, c) = static_cast<double>(c) * 10.0 - 5.0;
    }
    const Normalizer norm = fit_normalizer(X);
    const Matrix Xn = apply_normalizer(norm, X);

    SUBCASE("constant features normalize to zero") {
        for (std::size_t c = 0; c < 4; ++c) CHECK(Xn(0, c) == 0.0);
    }
    SUBCASE("normalized features have zero mean and unit deviation") {
        for (std::size_t r = 1; r < 3; ++r) {
            double mean = 0.0, var = 0.0;
            for (std::size_t c = 0; c < 4; ++c) mean += Xn(r, c);
            mean /= 4.0;
            for (std::size_t c = 0; c < 4; ++c) var += (Xn(r, c) - mean) * (Xn(r, c) - mean);
            var /= 4.0;
            CHECK(std::abs(mean) <= 1e-10);
            CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-10);
        }
    }
    SUBCASE("test data reuses the training statistics") {
        Matrix T(3, 2);
        T(0, 0) = 9.0;
        T(1, 0) = 100.0;
        T(2, 0) = 0.0;
        T(0, 1) = 7.0;
        T(1, 1) = 1.5;
        T(2, 1) = 10.0;
        const Matrix Tn = apply_normalizer(norm, T);
        CHECK(Tn(1, 0) == doctest::Approx((100.0 - norm.mean[1]) / norm.std[1]).epsilon(1e-14));
        CHECK(Tn(1, 1) == doctest::Approx((1.5 - norm.mean[1]) / norm.std[1]).epsilon(1e-14));
    }
}

TEST_CASE("prediction thresholding") {
    Matrix proba(2, 2);
    proba(0, 0) = 0.5;
    proba(0, 1) = 0.49;
    proba(1, 0) = 0.76;
    proba(1, 1) = 0.1;

    const Matrix at_half = predict_labels(proba, 0.5);
    CHECK(at_half(0, 0) == 1.0); // >= rule
    CHECK(at_half(0, 1) == 0.0);
    CHECK(at_half(1, 0) == 1.0);

    SUBCASE("raising the threshold can only shrink the positive set") {
        const Matrix at_75 = predict_labels(proba, 0.75);
        for (std::size_t i = 0; i < proba.raw().size(); ++i)
            CHECK(at_75.raw()[i] <= at_half.raw()[i]);
    }
    SUBCASE("threshold domain is validated") {
        CHECK_THROWS_AS(predict_labels(proba, 0.0), DomainError);
        CHECK_THROWS_AS(predict_labels(proba, 1.0), DomainError);
    }
}

TEST_CASE("model persistence round-trips exactly") {
    const NetworkSpec spec{{4, 6, 3}};
    Rng rng(55);
    const NetworkParameters params = init_parameters(spec, rng);
    Normalizer norm;
    norm.mean = {0.1, -2.5, 3.14159, 0.0};
    norm.std = {1.0, 0.5, 2.0, 1e-12};

    const std::string dir = "test_model_dir";
    save_model(dir, spec, params, norm, 99);
    const LoadedModel model = load_model(dir);

    CHECK(model.spec.layer_sizes == spec.layer_sizes);
    CHECK(model.seed == 99);
    for (std::size_t i = 0; i < norm.mean.size(); ++i) {
        CHECK(model.norm.mean[i] == norm.mean[i]);
        CHECK(model.norm.std[i] == norm.std[i]);
    }
    for (std::size_t l = 0; l < params.W.size(); ++l) {
        for (std::size_t i = 0; i < params.W[l].raw().size(); ++i)
            CHECK(model.params.W[l].raw()[i] == params.W[l].raw()[i]);
        for (std::size_t i = 0; i < params.b[l].size(); ++i)
            CHECK(model.params.b[l][i] == params.b[l][i]);
    }
    std::filesystem::remove_all(dir);
}
