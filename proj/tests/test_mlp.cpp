#include <doctest.h>

#include <cmath>
#include <random>

#include "etpa/mlp.hpp"

using namespace etpa;
using namespace etpa::nn;

namespace {

Eigen::MatrixXd random_inputs(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = u(rng);
    return x;
}

Eigen::MatrixXd random_targets(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> k(0, class_count - 1);
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, class_count);
    for (int i = 0; i < n; ++i) t(i, k(rng)) = 1.0;
    return t;
}

// Straightforward loop implementation used as an independent reference.
Eigen::VectorXd reference_forward(const MlpParams& p, const Eigen::VectorXd& x) {
    const auto& s = p.shape();
    const Eigen::VectorXd& v = p.values();
    const Eigen::Index w2 = Eigen::Index{s.hidden} * s.inputs + s.hidden;
    std::vector<double> h(static_cast<std::size_t>(s.hidden));
    for (int j = 0; j < s.hidden; ++j) {
        double a = v[Eigen::Index{s.hidden} * s.inputs + j];
        for (int i = 0; i < s.inputs; ++i) a += v[Eigen::Index{j} * s.inputs + i] * x[i];
        h[static_cast<std::size_t>(j)] = 1.0 / (1.0 + std::exp(-a));
    }
    Eigen::VectorXd z(s.outputs);
    for (int k = 0; k < s.outputs; ++k) {
        double a = v[w2 + Eigen::Index{s.outputs} * s.hidden + k];
        for (int j = 0; j < s.hidden; ++j) a += v[w2 + Eigen::Index{k} * s.hidden + j] * h[static_cast<std::size_t>(j)];
        z[k] = a;
    }
    const double m = z.maxCoeff();
    Eigen::VectorXd e = (z.array() - m).exp();
    return e / e.sum();
}

} // namespace

TEST_CASE("parameter layout") {
    const MlpShape shape{500, 5, 4};
    CHECK(shape.parameter_count() == 2529);
    MlpParams p(shape);
    CHECK(p.values().size() == 2529);
    CHECK(p.values().isZero());

    p.hidden_weights()(2, 7) = 1.5;
    CHECK(p.values()[2 * 500 + 7] == 1.5);
    p.hidden_biases()[3] = 2.5;
    CHECK(p.values()[2500 + 3] == 2.5);
    p.output_weights()(1, 4) = 3.5;
    CHECK(p.values()[2505 + 1 * 5 + 4] == 3.5);
    p.output_biases()[2] = 4.5;
    CHECK(p.values()[2525 + 2] == 4.5);

    CHECK_THROWS(MlpParams(shape, Eigen::VectorXd::Zero(10)));
}

TEST_CASE("initialization") {
    Rng a(42), b(42), c(43);
    const auto p = init_params(5, 500, 4, a);
    const auto q = init_params(5, 500, 4, b);
    const auto r = init_params(5, 500, 4, c);
    CHECK(p == q);
    CHECK_FALSE(p == r);
    CHECK(p.hidden_weights().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(500.0));
    CHECK(p.output_weights().cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(5.0));
    CHECK(p.hidden_biases().isZero());
    CHECK(p.output_biases().isZero());
    // spread actually uses the range
    CHECK(p.hidden_weights().cwiseAbs().maxCoeff() > 0.9 / std::sqrt(500.0));
}

TEST_CASE("softmax and forward pass") {
    Eigen::VectorXd z(4);
    z << 1.0, -2.0, 0.5, 3.0;
    const auto s = softmax(z);
    CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((s.array() > 0.0).all());
    const auto shifted = softmax((z.array() + 1000.0).matrix());
    CHECK((s - shifted).cwiseAbs().maxCoeff() < 1e-15);
    Eigen::VectorXd big(4);
    big << 800.0, 0.0, 0.0, 0.0;
    CHECK(softmax(big).allFinite());

    MlpParams zero({20, 5, 4});
    const auto p0 = forward(zero, Eigen::VectorXd::Random(20));
    for (int k = 0; k < 4; ++k) CHECK(p0[k] == doctest::Approx(0.25));

    Rng rng(7);
    const auto p = init_params(5, 20, 4, rng);
    MlpParams q = p;
    q.output_biases().setRandom();
    const auto x = random_inputs(6, 20, 1);
    const auto batch = forward_batch(q, x);
    for (int i = 0; i < 6; ++i) {
        const Eigen::VectorXd xi = x.row(i).transpose();
        const auto ref = reference_forward(q, xi);
        CHECK((batch.row(i).transpose() - ref).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((forward(q, xi) - ref).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(batch.row(i).sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("cross-entropy") {
    const auto x = random_inputs(8, 10, 2);
    const auto t = random_targets(8, 3);
    MlpParams zero({10, 5, 4});
    CHECK(cross_entropy(zero, x, t) == doctest::Approx(std::log(4.0)).epsilon(1e-10));

    // huge output bias on the right class drives the loss to ~0
    Eigen::MatrixXd all_two = Eigen::MatrixXd::Zero(8, 4);
    all_two.col(1).setOnes();
    MlpParams sure = zero;
    sure.output_biases()[1] = 50.0;
    CHECK(cross_entropy(sure, x, all_two) < 1e-12);
    // confidently wrong is bounded by the clip
    MlpParams wrong = zero;
    wrong.output_biases()[0] = 1000.0;
    CHECK(cross_entropy(wrong, x, all_two) == doctest::Approx(-std::log(log_clip)).epsilon(1e-6));

    const auto lg = loss_and_gradient(zero, x, t);
    CHECK(lg.loss == cross_entropy(zero, x, t));
    CHECK(lg.gradient.size() == zero.values().size());
}

TEST_CASE("analytic gradient matches central differences") {
    const auto x = random_inputs(20, 30, 4);
    const auto t = random_targets(20, 5);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        auto p = init_params(5, 30, 4, rng);
        p.output_biases().setRandom();
        CHECK(finite_diff_check(p, x, t, 1e-5) < 1e-5);
    }

    SUBCASE("flat overload agrees") {
        Rng rng(1);
        const auto p = init_params(5, 30, 4, rng);
        Eigen::VectorXd g;
        const double loss = loss_and_gradient(p.shape(), p.values(), x, t, &g);
        const auto lg = loss_and_gradient(p, x, t);
        CHECK(loss == lg.loss);
        CHECK(g == lg.gradient);
        CHECK(loss_and_gradient(p.shape(), p.values(), x, t, nullptr) == loss);
    }

    SUBCASE("a sabotaged gradient is caught") {
        Rng rng(2);
        const auto p = init_params(5, 30, 4, rng);
        const GradientFn broken = [&](const MlpParams& q) {
            auto g = loss_and_gradient(q, x, t).gradient;
            g[17] *= -1.0;
            return g;
        };
        const auto errors = gradient_errors(p, x, t, 1e-5, broken);
        CHECK(errors[17] > 0.5);
        CHECK(finite_diff_check(p, x, t, 1e-5, broken) > 0.5);
    }

    SUBCASE("step size sensitivity") {
        Rng rng(3);
        const auto p = init_params(5, 30, 4, rng);
        const double fine = finite_diff_check(p, x, t, 1e-5);
        const double coarse = finite_diff_check(p, x, t, 1e-2);
        CHECK(fine < 1e-5);
        CHECK(coarse > fine);
    }
}

TEST_CASE("gradient in the clipped regime") {
    // probabilities of order the clip: the clip term must be in the gradient
    const auto x = random_inputs(4, 6, 8);
    const auto t = random_targets(4, 9);
    MlpParams p({6, 3, 4});
    Rng rng(1);
    p = init_params(3, 6, 4, rng);
    p.output_biases() << 0.0, -27.0, 0.0, -26.0;
    CHECK(finite_diff_check(p, x, t, 1e-6) < 1e-5);
}

TEST_CASE("prediction and evaluation") {
    Eigen::VectorXd p(4);
    p << 0.1, 0.4, 0.4, 0.1;
    CHECK(predict_class(p) == 2);
    p << 0.25, 0.25, 0.25, 0.25;
    CHECK(predict_class(p) == 1);
    p << 0.0, 0.0, 0.1, 0.9;
    CHECK(predict_class(p) == 4);

    // output biases alone decide the class: everything predicted as 3
    MlpParams m({3, 2, 4});
    m.output_biases()[2] = 5.0;
    Batch b;
    b.features = random_inputs(8, 3, 1);
    b.labels = {1, 2, 3, 3, 4, 3, 1, 3};
    b.targets = Eigen::MatrixXd::Zero(8, 4);
    for (int i = 0; i < 8; ++i) b.targets(i, b.labels[static_cast<std::size_t>(i)] - 1) = 1.0;
    const auto e = evaluate_model(m, b);
    CHECK(e.total() == 8);
    CHECK(e.accuracy == doctest::Approx(0.5));
    CHECK(e.confusion[2][2] == 4);
    CHECK(e.confusion[0][2] == 2);
    CHECK(e.confusion[0][0] == 0);
    int trace = 0;
    for (int k = 0; k < 4; ++k) trace += e.confusion[static_cast<std::size_t>(k)][static_cast<std::size_t>(k)];
    CHECK(e.accuracy == doctest::Approx(static_cast<double>(trace) / e.total()));
}
