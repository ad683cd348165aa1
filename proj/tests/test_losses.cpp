#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "ac/anchors.hpp"
#include "ac/embedding.hpp"
#include "ac/errors.hpp"
#include "ac/losses.hpp"
#include "ac/matrix.hpp"
#include "ac/rng.hpp"

using ac::AnchorSet;
using ac::BaseLoss;
using ac::EmbeddingBatch;
using ac::LossConfig;
using ac::Rng;
using ac::linalg::Matrix;

namespace {

// Value totals for the hand batch (e1, e1, e2, e2) with adjacent pairs,
// evaluated in extended precision once and frozen:
//   InfoNCE tau=1.0: 4 (log(e + 2) - 1)
//   InfoNCE tau=0.5: 4 (log(e^2 + 2) - 2)
//   DCL     tau=1.0: 4 (log 2 - 1)
constexpr double kInfonceHandTau1 = 2.205778855728204356;
constexpr double kInfonceHandTauHalf = 0.958179064887538019;
constexpr double kDclHandTau1 = -1.227411277760218762;
constexpr double kDclAllEqualN4 = 2.772588722239781237;  // 4 log 2

Matrix random_raw(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(n, d);
    for (auto& v : m.data()) v = rng.gaussian();
    return m;
}

EmbeddingBatch random_batch(std::size_t n, std::size_t d, std::uint64_t seed) {
    return EmbeddingBatch(random_raw(n, d, seed), ac::half_split_pairs(n));
}

EmbeddingBatch hand_batch() {
    // Rows e1, e1, e2, e2 in R^3 with pairs (0<->1, 2<->3).
    Matrix raw(4, 3, {1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0});
    return EmbeddingBatch(std::move(raw), ac::adjacent_pairs(4));
}

EmbeddingBatch all_equal_batch(std::size_t n, std::size_t d) {
    Matrix raw(n, d);
    for (std::size_t i = 0; i < n; ++i) raw(i, 0) = 1.5;
    return EmbeddingBatch(std::move(raw), ac::half_split_pairs(n));
}

double max_abs(const Matrix& m) {
    double worst = 0.0;
    for (double v : m.data()) worst = std::max(worst, std::abs(v));
    return worst;
}

// Central finite difference of `value` over the entries of `raw`, compared
// against `analytic` with the max-relative-error convention.
double fd_relative_error(const Matrix& raw, const std::function<double(const Matrix&)>& value,
                         const Matrix& analytic) {
    REQUIRE(analytic.rows() == raw.rows());
    REQUIRE(analytic.cols() == raw.cols());
    const double h = 1e-5;
    Matrix fd(raw.rows(), raw.cols());
    Matrix work = raw;
    for (std::size_t idx = 0; idx < raw.data().size(); ++idx) {
        const double orig = work.data()[idx];
        work.data()[idx] = orig + h;
        const double up = value(work);
        work.data()[idx] = orig - h;
        const double down = value(work);
        work.data()[idx] = orig;
        fd.data()[idx] = (up - down) / (2.0 * h);
    }
    double worst = 0.0;
    for (std::size_t idx = 0; idx < fd.data().size(); ++idx) {
        worst = std::max(worst, std::abs(fd.data()[idx] - analytic.data()[idx]));
    }
    return worst / std::max({max_abs(fd), max_abs(analytic), 1e-12});
}

}  // namespace

TEST_CASE("LossConfig validation") {
    LossConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ac::ConfigError);
    cfg = LossConfig{};
    cfg.cloa_weight = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ac::ConfigError);
    cfg = LossConfig{};
    cfg.vicreg_eps = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ac::ConfigError);
}

TEST_CASE("parse_base_loss round trips and rejects unknown names") {
    CHECK(ac::parse_base_loss("infonce") == BaseLoss::InfoNce);
    CHECK(ac::parse_base_loss("dcl") == BaseLoss::Dcl);
    CHECK(ac::parse_base_loss("vicreg") == BaseLoss::Vicreg);
    CHECK(ac::parse_base_loss("barlow") == BaseLoss::Barlow);
    for (BaseLoss b : {BaseLoss::InfoNce, BaseLoss::Dcl, BaseLoss::Vicreg, BaseLoss::Barlow}) {
        CHECK(ac::parse_base_loss(ac::base_loss_name(b)) == b);
    }
    CHECK_THROWS_AS(ac::parse_base_loss("ntxent"), ac::UnsupportedLossError);
}

TEST_CASE("EmbeddingBatch validates size and pair structure") {
    CHECK_THROWS_AS(EmbeddingBatch(random_raw(2, 3, 1), ac::adjacent_pairs(2)),
                    ac::BatchTooSmallError);
    CHECK_THROWS_AS(EmbeddingBatch(random_raw(4, 3, 1), {1, 0, 2, 3}),
                    ac::DimensionMismatchError);  // fixed points
    CHECK_THROWS_AS(EmbeddingBatch(random_raw(4, 3, 1), {1, 0, 3, 1}),
                    ac::DimensionMismatchError);  // not an involution
}

TEST_CASE("infonce all-equal: uniform probabilities and zero raw gradient") {
    LossConfig cfg;
    cfg.temperature = 0.7;
    for (std::size_t n : {4u, 8u}) {
        const auto [breakdown, grads] = ac::infonce(all_equal_batch(n, 3), cfg);
        REQUIRE(breakdown.per_sample_prob.size() == n);
        for (double p : breakdown.per_sample_prob) {
            CHECK(std::abs(p - 1.0 / static_cast<double>(n - 1)) <= 1e-12);
        }
        CHECK(max_abs(grads.grad_raw) <= 1e-12);
    }
}

TEST_CASE("infonce hand-batch values match the frozen direct evaluation") {
    LossConfig cfg;
    cfg.temperature = 1.0;
    const auto r1 = ac::infonce(hand_batch(), cfg);
    CHECK(std::abs(r1.first.total - kInfonceHandTau1) <= 1e-12);
    CHECK(r1.second.value == r1.first.total);

    cfg.temperature = 0.5;
    const auto r2 = ac::infonce(hand_batch(), cfg);
    CHECK(std::abs(r2.first.total - kInfonceHandTauHalf) <= 1e-12);
}

TEST_CASE("dcl all-equal N=4 equals 4 log 2") {
    LossConfig cfg;
    cfg.temperature = 1.0;
    const auto r = ac::dcl(all_equal_batch(4, 5), cfg);
    CHECK(std::abs(r.first.total - kDclAllEqualN4) <= 1e-12);
}

TEST_CASE("dcl hand-batch value matches the frozen evaluation and differs from infonce") {
    LossConfig cfg;
    cfg.temperature = 1.0;
    const auto d = ac::dcl(hand_batch(), cfg);
    const auto i = ac::infonce(hand_batch(), cfg);
    CHECK(std::abs(d.first.total - kDclHandTau1) <= 1e-12);
    CHECK(std::abs(d.first.total - i.first.total) > 1.0);
}

TEST_CASE("infonce and dcl probabilities live in (0, 1]") {
    LossConfig cfg;
    cfg.temperature = 0.3;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto batch = random_batch(8, 5, 100 + seed);
        for (const auto& result : {ac::infonce(batch, cfg), ac::dcl(batch, cfg)}) {
            for (double p : result.first.per_sample_prob) {
                CHECK(p > 0.0);
                CHECK(p <= 1.0);
            }
        }
    }
}

TEST_CASE("infonce and dcl are invariant under positive rescaling of raw rows") {
    LossConfig cfg;
    cfg.temperature = 0.4;
    const Matrix raw = random_raw(8, 4, 17);
    const auto base_i = ac::infonce(EmbeddingBatch(raw, ac::half_split_pairs(8)), cfg);
    const auto base_d = ac::dcl(EmbeddingBatch(raw, ac::half_split_pairs(8)), cfg);
    for (double c : {0.5, 3.0}) {
        Matrix scaled = raw;
        for (auto& v : scaled.data()) v *= c;
        const EmbeddingBatch batch(scaled, ac::half_split_pairs(8));
        CHECK(std::abs(ac::infonce(batch, cfg).first.total - base_i.first.total) <= 1e-10);
        CHECK(std::abs(ac::dcl(batch, cfg).first.total - base_d.first.total) <= 1e-10);
    }
}

TEST_CASE("infonce gradient matches finite differences over 20 random instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng pick(1000 + seed);
        const std::size_t n = 4 + 2 * pick.uniform_index(7);  // even, 4..16
        const std::size_t d = 2 + pick.uniform_index(7);      // 2..8
        LossConfig cfg;
        cfg.temperature = 0.2 + 0.8 * pick.uniform01();
        const Matrix raw = random_raw(n, d, 2000 + seed);
        const auto pairs = ac::half_split_pairs(n);
        const auto result = ac::infonce(EmbeddingBatch(raw, pairs), cfg);
        const double rel = fd_relative_error(
            raw,
            [&](const Matrix& r) { return ac::infonce(EmbeddingBatch(r, pairs), cfg).first.total; },
            result.second.grad_raw);
        CHECK(rel <= 1e-4);
    }
}

TEST_CASE("dcl gradient matches finite differences over 20 random instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng pick(3000 + seed);
        const std::size_t n = 4 + 2 * pick.uniform_index(7);
        const std::size_t d = 2 + pick.uniform_index(7);
        LossConfig cfg;
        cfg.temperature = 0.2 + 0.8 * pick.uniform01();
        const Matrix raw = random_raw(n, d, 4000 + seed);
        const auto pairs = ac::half_split_pairs(n);
        const auto result = ac::dcl(EmbeddingBatch(raw, pairs), cfg);
        const double rel = fd_relative_error(
            raw,
            [&](const Matrix& r) { return ac::dcl(EmbeddingBatch(r, pairs), cfg).first.total; },
            result.second.grad_raw);
        CHECK(rel <= 1e-4);
    }
}

TEST_CASE("vicreg identities on identical well-spread views") {
    LossConfig cfg;
    // Columns (1,1,-1,-1) and (1,-1,1,-1): per-dimension std 1 >= gamma once
    // the epsilon inside the hinge is accounted for, and zero covariance.
    const Matrix view(4, 2, {1, 1, 1, -1, -1, 1, -1, -1});
    const auto r = ac::vicreg(view, view, cfg);
    CHECK(r.first.term_values.at("distance") == 0.0);
    CHECK(std::abs(r.first.term_values.at("covariance_a")) <= 1e-14);
    CHECK(std::abs(r.first.term_values.at("covariance_b")) <= 1e-14);
    // Unbiased std of each column is sqrt(4/3) > gamma = 1, so the hinge is 0.
    CHECK(r.first.term_values.at("variance_a") == 0.0);
    CHECK(r.first.term_values.at("variance_b") == 0.0);
    CHECK(r.first.total == 0.0);
}

TEST_CASE("vicreg constant batch variance term by direct formula") {
    LossConfig cfg;
    Matrix view(4, 2);
    for (auto& v : view.data()) v = 0.25;
    const auto r = ac::vicreg(view, view, cfg);
    // Every dimension has zero variance, so each view contributes
    // gamma - sqrt(eps) per dimension, averaged over dimensions.
    const double per_view = cfg.vicreg_gamma - std::sqrt(cfg.vicreg_eps);
    CHECK(std::abs(r.first.term_values.at("variance_a") - per_view) <= 1e-12);
    CHECK(std::abs(r.first.term_values.at("variance_b") - per_view) <= 1e-12);
    CHECK(std::abs(r.first.total - 2.0 * cfg.vicreg_var_weight * per_view) <= 1e-12);
}

TEST_CASE("vicreg rejects mismatched view shapes") {
    CHECK_THROWS_AS(ac::vicreg(random_raw(4, 2, 1), random_raw(4, 3, 2), LossConfig{}),
                    ac::DimensionMismatchError);
}

TEST_CASE("vicreg gradient matches finite differences over 20 random instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        LossConfig cfg;
        const std::size_t n = 8;
        const std::size_t d = 4;
        const Matrix va = random_raw(n, d, 5000 + seed);
        const Matrix vb = random_raw(n, d, 6000 + seed);
        const auto result = ac::vicreg(va, vb, cfg);

        // Gradient arrives stacked [view_a; view_b]; check each half.
        Matrix ga(n, d);
        Matrix gb(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                ga(i, j) = result.second.grad_raw(i, j);
                gb(i, j) = result.second.grad_raw(n + i, j);
            }
        }
        const double rel_a = fd_relative_error(
            va, [&](const Matrix& r) { return ac::vicreg(r, vb, cfg).first.total; }, ga);
        const double rel_b = fd_relative_error(
            vb, [&](const Matrix& r) { return ac::vicreg(va, r, cfg).first.total; }, gb);
        CHECK(rel_a <= 1e-4);
        CHECK(rel_b <= 1e-4);
    }
}

TEST_CASE("barlow twins identity when the cross-correlation is the identity") {
    LossConfig cfg;
    const Matrix view(4, 2, {1, 1, 1, -1, -1, 1, -1, -1});
    const auto r = ac::barlow_twins(view, view, cfg);
    CHECK(std::abs(r.first.total) <= 1e-12);
    CHECK(std::abs(r.first.term_values.at("on_diagonal")) <= 1e-12);
    CHECK(std::abs(r.first.term_values.at("off_diagonal")) <= 1e-12);
}

TEST_CASE("barlow twins negated view gives on-diagonal 4d") {
    LossConfig cfg;
    const Matrix va(4, 3, {1, 2, 0.5, -1, 0, 1.5, 2, -2, -0.5, -2, 0, -1.5});
    Matrix vb = va;
    for (auto& v : vb.data()) v = -v;
    const auto r = ac::barlow_twins(va, vb, cfg);
    CHECK(std::abs(r.first.term_values.at("on_diagonal") - 4.0 * 3) <= 1e-12);
}

TEST_CASE("barlow twins rejects degenerate dimensions") {
    Matrix va(4, 2, {1, 7, 2, 7, 3, 7, 4, 7});  // column 1 constant
    try {
        ac::barlow_twins(va, va, LossConfig{});
        FAIL("expected DegenerateDimensionError");
    } catch (const ac::DegenerateDimensionError& e) {
        CHECK(e.dim == 1);
    }
}

TEST_CASE("barlow twins gradient matches finite differences over 20 random instances") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        LossConfig cfg;
        const std::size_t n = 16;
        const std::size_t d = 4;
        const Matrix va = random_raw(n, d, 7000 + seed);
        const Matrix vb = random_raw(n, d, 8000 + seed);
        const auto result = ac::barlow_twins(va, vb, cfg);
        Matrix ga(n, d);
        Matrix gb(n, d);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                ga(i, j) = result.second.grad_raw(i, j);
                gb(i, j) = result.second.grad_raw(n + i, j);
            }
        }
        const double rel_a = fd_relative_error(
            va, [&](const Matrix& r) { return ac::barlow_twins(r, vb, cfg).first.total; }, ga);
        const double rel_b = fd_relative_error(
            vb, [&](const Matrix& r) { return ac::barlow_twins(va, r, cfg).first.total; }, gb);
        CHECK(rel_a <= 1e-4);
        CHECK(rel_b <= 1e-4);
    }
}

TEST_CASE("cloa endpoints: at the anchor, orthogonal to it, and at its negation") {
    const AnchorSet anchors = ac::generate_anchors(3, 3, 99);
    // Raw rows proportional to c0, something orthogonal to c1, and -c2.
    Matrix raw(4, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        raw(0, j) = 2.0 * anchors.anchors(0, j);
        raw(1, j) = anchors.anchors(0, j);  // orthogonal to anchor 1
        raw(2, j) = -0.5 * anchors.anchors(2, j);
        raw(3, j) = anchors.anchors(1, j);  // filler row, masked out
    }
    const EmbeddingBatch batch(raw, ac::half_split_pairs(4));
    const std::vector<std::size_t> labels{0, 1, 2, 0};
    const std::vector<bool> mask{true, true, true, false};
    const auto r = ac::cloa_anchor(batch, labels, anchors, mask);
    // Per-sample terms: 0 (aligned), 1 (orthogonal), 2 (anti-aligned).
    CHECK(std::abs(r.first.total - 3.0) <= 1e-12);
    // Masked-out rows contribute no gradient.
    for (std::size_t j = 0; j < 3; ++j) CHECK(r.second.grad_unit(3, j) == 0.0);
}

TEST_CASE("cloa per-sample values stay within [0, 2]") {
    const AnchorSet anchors = ac::generate_anchors(3, 4, 7);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto batch = random_batch(8, 4, 500 + seed);
        std::vector<std::size_t> labels(8);
        Rng rng(seed);
        for (auto& l : labels) l = rng.uniform_index(3);
        const std::vector<bool> mask(8, true);
        const auto r = ac::cloa_anchor(batch, labels, anchors, mask);
        CHECK(r.first.total >= 0.0);
        CHECK(r.first.total <= 2.0 * 8);
    }
}

TEST_CASE("cloa empty mask is legal and silent") {
    const AnchorSet anchors = ac::generate_anchors(2, 3, 1);
    const auto batch = random_batch(6, 3, 77);
    const std::vector<std::size_t> labels{0, 1, 0, 1, 0, 1};
    const auto r = ac::cloa_anchor(batch, labels, anchors, std::vector<bool>(6, false));
    CHECK(r.first.total == 0.0);
    CHECK(max_abs(r.second.grad_unit) == 0.0);
    CHECK(max_abs(r.second.grad_raw) == 0.0);
}

TEST_CASE("cloa rejects out-of-range labels on masked rows") {
    const AnchorSet anchors = ac::generate_anchors(2, 3, 1);
    const auto batch = random_batch(4, 3, 78);
    const std::vector<std::size_t> labels{0, 5, 0, 1};
    CHECK_THROWS_AS(ac::cloa_anchor(batch, labels, anchors, std::vector<bool>(4, true)),
                    ac::LabelOutOfRangeError);
}

TEST_CASE("cloa gradient matches finite differences with a 30% mask") {
    const AnchorSet anchors = ac::generate_anchors(3, 5, 13);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Matrix raw = random_raw(8, 5, 9000 + seed);
        const auto pairs = ac::half_split_pairs(8);
        std::vector<std::size_t> labels(8);
        std::vector<bool> mask(8, false);
        Rng rng(seed);
        for (std::size_t i = 0; i < 8; ++i) {
            labels[i] = rng.uniform_index(3);
            mask[i] = rng.uniform01() < 0.3;
        }
        const auto result =
            ac::cloa_anchor(EmbeddingBatch(raw, pairs), labels, anchors, mask);
        const double rel = fd_relative_error(
            raw,
            [&](const Matrix& r) {
                return ac::cloa_anchor(EmbeddingBatch(r, pairs), labels, anchors, mask)
                    .first.total;
            },
            result.second.grad_raw);
        if (max_abs(result.second.grad_raw) == 0.0) continue;  // all-empty mask draw
        CHECK(rel <= 1e-4);
    }
}

TEST_CASE("split_views and scatter_view_rows invert each other") {
    const auto batch = random_batch(8, 3, 314);
    const auto split = ac::split_views(batch);
    REQUIRE(split.view_a.rows() == 4);
    REQUIRE(split.view_b.rows() == 4);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(split.rows_a[r] < split.rows_b[r]);  // lower pair index goes to view A
        CHECK(batch.pair_map[split.rows_a[r]] == split.rows_b[r]);
        for (std::size_t j = 0; j < 3; ++j) {
            CHECK(split.view_a(r, j) == batch.raw(split.rows_a[r], j));
            CHECK(split.view_b(r, j) == batch.raw(split.rows_b[r], j));
        }
    }
    // Scattering a stacked copy of the views reproduces the raw batch.
    Matrix stacked(8, 3);
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t j = 0; j < 3; ++j) {
            stacked(r, j) = split.view_a(r, j);
            stacked(4 + r, j) = split.view_b(r, j);
        }
    }
    const Matrix back = ac::scatter_view_rows(split, stacked, 8);
    for (std::size_t idx = 0; idx < back.data().size(); ++idx) {
        CHECK(back.data()[idx] == batch.raw.data()[idx]);
    }
}

TEST_CASE("composite equals base plus weighted cloa for every base loss") {
    const AnchorSet anchors = ac::generate_anchors(3, 4, 21);
    const auto batch = random_batch(8, 4, 616);
    std::vector<std::size_t> labels(8);
    std::vector<bool> mask(8, false);
    Rng rng(55);
    for (std::size_t i = 0; i < 8; ++i) {
        labels[i] = rng.uniform_index(3);
        mask[i] = rng.coin();
    }
    LossConfig cfg;
    cfg.temperature = 0.35;
    cfg.cloa_weight = 1.7;

    const auto cloa = ac::cloa_anchor(batch, labels, anchors, mask);
    for (BaseLoss base : {BaseLoss::InfoNce, BaseLoss::Dcl, BaseLoss::Vicreg, BaseLoss::Barlow}) {
        const auto comp = ac::composite(base, batch, labels, anchors, mask, cfg);

        // Recompute the base part on its own.
        double base_value = 0.0;
        Matrix base_grad;
        if (base == BaseLoss::InfoNce || base == BaseLoss::Dcl) {
            const auto r = base == BaseLoss::InfoNce ? ac::infonce(batch, cfg) : ac::dcl(batch, cfg);
            base_value = r.first.total;
            base_grad = r.second.grad_raw;
        } else {
            const auto split = ac::split_views(batch);
            const auto r = base == BaseLoss::Vicreg
                               ? ac::vicreg(split.view_a, split.view_b, cfg)
                               : ac::barlow_twins(split.view_a, split.view_b, cfg);
            base_value = r.first.total;
            base_grad = ac::scatter_view_rows(split, r.second.grad_raw, 8);
        }

        CHECK(std::abs(comp.first.total - (base_value + cfg.cloa_weight * cloa.first.total)) <=
              1e-12);
        CHECK(std::abs(comp.first.term_values.at("contrastive") - base_value) <= 1e-12);
        // term_values records the unweighted anchor part; the weight shows up in total.
        CHECK(std::abs(comp.first.term_values.at("cloa") - cloa.first.total) <= 1e-12);
        for (std::size_t idx = 0; idx < base_grad.data().size(); ++idx) {
            const double want =
                base_grad.data()[idx] + cfg.cloa_weight * cloa.second.grad_raw.data()[idx];
            CHECK(std::abs(comp.second.grad_raw.data()[idx] - want) <= 1e-12);
        }
    }
}

TEST_CASE("composite with zero weight or empty mask collapses to the base loss") {
    const AnchorSet anchors = ac::generate_anchors(3, 3, 5);
    const auto batch = random_batch(8, 3, 717);
    std::vector<std::size_t> labels(8, 1);
    LossConfig cfg;

    LossConfig zero_weight = cfg;
    zero_weight.cloa_weight = 0.0;
    const auto base = ac::infonce(batch, cfg);
    const auto comp_w0 = ac::composite(BaseLoss::InfoNce, batch, labels, anchors,
                                       std::vector<bool>(8, true), zero_weight);
    const auto comp_empty = ac::composite(BaseLoss::InfoNce, batch, labels, anchors,
                                          std::vector<bool>(8, false), cfg);
    CHECK(std::abs(comp_w0.first.total - base.first.total) <= 1e-12);
    CHECK(std::abs(comp_empty.first.total - base.first.total) <= 1e-12);
    for (std::size_t idx = 0; idx < base.second.grad_raw.data().size(); ++idx) {
        CHECK(std::abs(comp_w0.second.grad_raw.data()[idx] -
                       base.second.grad_raw.data()[idx]) <= 1e-12);
        CHECK(std::abs(comp_empty.second.grad_raw.data()[idx] -
                       base.second.grad_raw.data()[idx]) <= 1e-12);
    }
}
