#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include "ac/embedding.hpp"
#include "ac/errors.hpp"
#include "ac/losses.hpp"
#include "ac/matrix.hpp"
#include "ac/mlp.hpp"
#include "ac/rng.hpp"

using ac::MlpModel;
using ac::linalg::Matrix;

namespace {

Matrix random_input(std::size_t n, std::size_t d, std::uint64_t seed) {
    ac::Rng rng(seed);
    Matrix x(n, d);
    for (auto& v : x.data()) v = rng.gaussian();
    return x;
}

}  // namespace

TEST_CASE("initialization is deterministic and shaped correctly") {
    const MlpModel a = ac::mlp_init(3, 64, 64, 3, 42);
    const MlpModel b = ac::mlp_init(3, 64, 64, 3, 42);
    REQUIRE(a.fc1.w.rows() == 64);
    REQUIRE(a.fc1.w.cols() == 3);
    REQUIRE(a.fc2.w.rows() == 64);
    REQUIRE(a.fc2.w.cols() == 64);
    REQUIRE(a.fc3.w.rows() == 3);
    REQUIRE(a.fc3.w.cols() == 64);
    for (std::size_t i = 0; i < a.fc1.w.data().size(); ++i) {
        CHECK(a.fc1.w.data()[i] == b.fc1.w.data()[i]);
    }
    for (double v : a.fc1.b) CHECK(v == 0.0);
    for (double v : a.bn1.gamma) CHECK(v == 1.0);
    for (double v : a.bn1.beta) CHECK(v == 0.0);
    for (double v : a.bn1.running_mean) CHECK(v == 0.0);
    for (double v : a.bn1.running_var) CHECK(v == 1.0);
    CHECK(a.all_finite());
}

TEST_CASE("He initialization has the expected weight scale") {
    const MlpModel m = ac::mlp_init(64, 64, 64, 64, 7);
    double sq = 0.0;
    for (double v : m.fc2.w.data()) sq += v * v;
    const double std_emp = std::sqrt(sq / static_cast<double>(m.fc2.w.data().size()));
    const double std_want = std::sqrt(2.0 / 64.0);
    CHECK(std::abs(std_emp - std_want) / std_want <= 0.10);
}

TEST_CASE("training-mode batchnorm standardizes each feature of the batch") {
    MlpModel m = ac::mlp_init(3, 8, 8, 3, 1);
    const Matrix x = random_input(32, 3, 5);
    ac::ForwardCache cache;
    ac::mlp_forward(m, x, true, &cache);
    // xhat columns have mean 0 and variance ~1 (the eps in the denominator
    // keeps it marginally below 1).
    for (std::size_t j = 0; j < 8; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 32; ++i) mean += cache.bn1.xhat(i, j);
        mean /= 32.0;
        CHECK(std::abs(mean) <= 1e-10);
        double var = 0.0;
        for (std::size_t i = 0; i < 32; ++i) {
            var += (cache.bn1.xhat(i, j) - mean) * (cache.bn1.xhat(i, j) - mean);
        }
        var /= 32.0;
        CHECK(std::abs(var - 1.0) <= 1e-3);
    }
}

TEST_CASE("training-mode forward updates running statistics by the momentum rule") {
    MlpModel m = ac::mlp_init(3, 8, 8, 3, 2);
    const Matrix x = random_input(16, 3, 9);

    // Recompute what one momentum update should produce for bn1.
    MlpModel probe = m;
    ac::ForwardCache cache;
    ac::mlp_forward(probe, x, true, &cache);

    // Batch stats of the dense output reproduce the expected running update.
    for (std::size_t j = 0; j < 8; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 16; ++i) mean += cache.lin1(i, j);
        mean /= 16.0;
        double var = 0.0;
        for (std::size_t i = 0; i < 16; ++i) var += (cache.lin1(i, j) - mean) * (cache.lin1(i, j) - mean);
        var /= 16.0;
        const double want_mean = 0.9 * 0.0 + 0.1 * mean;
        const double want_var = 0.9 * 1.0 + 0.1 * var;
        CHECK(std::abs(probe.bn1.running_mean[j] - want_mean) <= 1e-12);
        CHECK(std::abs(probe.bn1.running_var[j] - want_var) <= 1e-12);
    }
}

TEST_CASE("eval-mode forward is deterministic and does not mutate the model") {
    MlpModel m = ac::mlp_init(3, 16, 16, 3, 3);
    const Matrix x = random_input(10, 3, 11);

    // Warm the running stats with a couple of training passes.
    ac::mlp_forward(m, random_input(32, 3, 12), true, nullptr);
    ac::mlp_forward(m, random_input(32, 3, 13), true, nullptr);

    const MlpModel before = m;
    const Matrix y1 = ac::mlp_forward(m, x, false, nullptr);
    const Matrix y2 = ac::mlp_forward(m, x, false, nullptr);
    for (std::size_t i = 0; i < y1.data().size(); ++i) CHECK(y1.data()[i] == y2.data()[i]);
    for (std::size_t j = 0; j < 16; ++j) {
        CHECK(m.bn1.running_mean[j] == before.bn1.running_mean[j]);
        CHECK(m.bn1.running_var[j] == before.bn1.running_var[j]);
    }
    // A single row is fine in eval mode.
    const Matrix one = ac::mlp_forward(m, random_input(1, 3, 14), false, nullptr);
    CHECK(one.rows() == 1);
}

TEST_CASE("training mode rejects single-row batches") {
    MlpModel m = ac::mlp_init(3, 8, 8, 3, 4);
    CHECK_THROWS_AS(ac::mlp_forward(m, random_input(1, 3, 15), true, nullptr),
                    ac::BatchTooSmallError);
}

TEST_CASE("forward validates the input dimension") {
    MlpModel m = ac::mlp_init(3, 8, 8, 3, 4);
    CHECK_THROWS_AS(ac::mlp_forward(m, random_input(4, 5, 16), true, nullptr),
                    ac::DimensionMismatchError);
}

TEST_CASE("full parameter gradient matches finite differences through infonce") {
    MlpModel m = ac::mlp_init(3, 8, 8, 3, 21);
    const Matrix x = random_input(8, 3, 22);
    const auto pairs = ac::half_split_pairs(8);
    ac::LossConfig lc;
    lc.temperature = 0.5;

    // Loss of a training-mode forward as a function of the parameters. Only
    // the running statistics mutate during a forward pass; restore them after
    // every probe so each evaluation sees the same model state.
    auto loss_at = [&](MlpModel& model) {
        const auto rm1 = model.bn1.running_mean;
        const auto rv1 = model.bn1.running_var;
        const auto rm2 = model.bn2.running_mean;
        const auto rv2 = model.bn2.running_var;
        const Matrix raw = ac::mlp_forward(model, x, true, nullptr);
        const double value = ac::infonce(ac::EmbeddingBatch(raw, pairs), lc).first.total;
        model.bn1.running_mean = rm1;
        model.bn1.running_var = rv1;
        model.bn2.running_mean = rm2;
        model.bn2.running_var = rv2;
        return value;
    };

    MlpModel probe = m;  // pristine copy for the finite-difference probes
    ac::ForwardCache cache;
    const Matrix raw = ac::mlp_forward(m, x, true, &cache);
    const auto result = ac::infonce(ac::EmbeddingBatch(raw, pairs), lc);
    const auto grads = ac::mlp_backward(m, cache, result.second.grad_raw);
    const auto analytic = ac::flatten_gradients(grads);
    const auto params = ac::parameter_pointers(probe);
    REQUIRE(params.size() == analytic.size());

    const double h = 1e-5;
    double worst_abs = 0.0;
    double scale = 1e-12;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double orig = *params[p];
        *params[p] = orig + h;
        const double up = loss_at(probe);
        *params[p] = orig - h;
        const double down = loss_at(probe);
        *params[p] = orig;
        const double fd = (up - down) / (2.0 * h);
        worst_abs = std::max(worst_abs, std::abs(fd - analytic[p]));
        scale = std::max({scale, std::abs(fd), std::abs(analytic[p])});
    }
    CHECK(worst_abs / scale <= 1e-4);
}

TEST_CASE("sgd_update applies lr times the gradient and lr 0 is a no-op") {
    MlpModel m = ac::mlp_init(3, 8, 8, 3, 31);
    const Matrix x = random_input(8, 3, 32);
    ac::ForwardCache cache;
    const Matrix raw = ac::mlp_forward(m, x, true, &cache);
    ac::LossConfig lc;
    const auto result = ac::infonce(ac::EmbeddingBatch(raw, ac::half_split_pairs(8)), lc);
    const auto grads = ac::mlp_backward(m, cache, result.second.grad_raw);

    MlpModel frozen = m;
    ac::sgd_update(frozen, grads, 0.0);
    for (std::size_t i = 0; i < m.fc1.w.data().size(); ++i) {
        CHECK(frozen.fc1.w.data()[i] == m.fc1.w.data()[i]);
    }
    for (std::size_t j = 0; j < 8; ++j) CHECK(frozen.bn1.gamma[j] == m.bn1.gamma[j]);

    MlpModel stepped = m;
    ac::sgd_update(stepped, grads, 0.25);
    for (std::size_t i = 0; i < m.fc3.w.data().size(); ++i) {
        CHECK(std::abs(stepped.fc3.w.data()[i] -
                       (m.fc3.w.data()[i] - 0.25 * grads.dw3.data()[i])) <= 1e-15);
    }
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(std::abs(stepped.bn2.beta[j] - (m.bn2.beta[j] - 0.25 * grads.dbeta2[j])) <= 1e-15);
    }
}

TEST_CASE("parameter_pointers exposes every trainable parameter exactly once") {
    MlpModel m = ac::mlp_init(3, 8, 8, 3, 41);
    const auto params = ac::parameter_pointers(m);
    const std::size_t want = (8 * 3 + 8) + (8 + 8) + (8 * 8 + 8) + (8 + 8) + (3 * 8 + 3);
    REQUIRE(params.size() == want);
    // Pointers are distinct.
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t j = i + 1; j < params.size(); ++j) {
            REQUIRE(params[i] != params[j]);
        }
    }
    // Order starts at fc1.w and ends at fc3.b.
    CHECK(params.front() == &m.fc1.w(0, 0));
    CHECK(params.back() == &m.fc3.b.back());
}
