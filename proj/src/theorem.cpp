#include "ac/theorem.hpp"

#include <algorithm>
#include <cmath>

#include "ac/errors.hpp"
#include "ac/rng.hpp"

namespace ac {

namespace {

using linalg::Matrix;

std::vector<double> random_unit(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double n = 0.0;
    do {
        for (double& x : v) x = rng.gaussian();
        n = linalg::norm(v);
    } while (n < 1e-12);
    for (double& x : v) x /= n;
    return v;
}

DegenerateConfig make_config(DegenerateKind kind, std::size_t n, std::size_t d,
                             std::uint64_t seed) {
    if (n < 4 || n % 2 != 0) throw BatchTooSmallError("degenerate configs need an even n >= 4");
    if (d < 2) throw ConfigError("degenerate configs need d >= 2");
    Rng rng(seed);
    DegenerateConfig cfg;
    cfg.kind = kind;
    cfg.n = n;
    cfg.d = d;
    cfg.z_star = random_unit(rng, d);
    cfg.signs.assign(n, 1);
    cfg.magnitudes.resize(n);
    for (double& m : cfg.magnitudes) m = rng.uniform(0.5, 2.0);
    if (kind == DegenerateKind::Rank1Signs) {
        for (int& s : cfg.signs) s = rng.coin() ? 1 : -1;
        const bool has_plus = std::any_of(cfg.signs.begin(), cfg.signs.end(),
                                          [](int s) { return s > 0; });
        const bool has_minus = std::any_of(cfg.signs.begin(), cfg.signs.end(),
                                           [](int s) { return s < 0; });
        if (!has_plus) cfg.signs.back() = 1;
        if (!has_minus) cfg.signs.back() = -1;
    }
    return cfg;
}

// Row order that puts each positive pair (slot i, slot i + n/2) on the same
// sign whenever the sign counts allow; at most one pair ends up mixed.
std::vector<std::size_t> pair_friendly_order(const DegenerateConfig& cfg) {
    std::vector<std::size_t> plus;
    std::vector<std::size_t> minus;
    for (std::size_t i = 0; i < cfg.n; ++i) {
        (cfg.signs[i] > 0 ? plus : minus).push_back(i);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    while (plus.size() >= 2) {
        pairs.emplace_back(plus[plus.size() - 2], plus[plus.size() - 1]);
        plus.pop_back();
        plus.pop_back();
    }
    while (minus.size() >= 2) {
        pairs.emplace_back(minus[minus.size() - 2], minus[minus.size() - 1]);
        minus.pop_back();
        minus.pop_back();
    }
    if (!plus.empty() && !minus.empty()) pairs.emplace_back(plus[0], minus[0]);

    const std::size_t half = cfg.n / 2;
    std::vector<std::size_t> order(cfg.n);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        order[p] = pairs[p].first;
        order[p + half] = pairs[p].second;
    }
    return order;
}

}  // namespace

DegenerateConfig make_equal_config(std::size_t n, std::size_t d, std::uint64_t seed) {
    return make_config(DegenerateKind::AllEqual, n, d, seed);
}

DegenerateConfig make_rank1_config(std::size_t n, std::size_t d, std::uint64_t seed) {
    return make_config(DegenerateKind::Rank1Signs, n, d, seed);
}

EmbeddingBatch build_batch(const DegenerateConfig& cfg) {
    const std::vector<std::size_t> order = pair_friendly_order(cfg);
    Matrix raw(cfg.n, cfg.d);
    for (std::size_t slot = 0; slot < cfg.n; ++slot) {
        const std::size_t src = order[slot];
        const double coeff = cfg.magnitudes[src] * static_cast<double>(cfg.signs[src]);
        for (std::size_t j = 0; j < cfg.d; ++j) raw(slot, j) = coeff * cfg.z_star[j];
    }
    return EmbeddingBatch(std::move(raw), half_split_pairs(cfg.n));
}

EmbeddingBatch perturb_off_line(const DegenerateConfig& cfg, double eps, std::uint64_t seed) {
    EmbeddingBatch batch = build_batch(cfg);
    Rng rng(seed);
    std::vector<double> v = random_unit(rng, cfg.d);
    const double along = linalg::dot(v, cfg.z_star);
    for (std::size_t j = 0; j < cfg.d; ++j) v[j] -= along * cfg.z_star[j];
    const double n = linalg::norm(v);
    if (n < 1e-12) throw DirectionSamplingFailedError(1);
    Matrix raw = batch.raw;
    for (std::size_t j = 0; j < cfg.d; ++j) raw(0, j) += eps * v[j] / n;
    return EmbeddingBatch(std::move(raw), half_split_pairs(cfg.n));
}

ZeroGradReport verify_zero_gradient(const EmbeddingBatch& batch, BaseLoss loss,
                                    const LossConfig& cfg, double tol) {
    LossResult result;
    switch (loss) {
        case BaseLoss::InfoNce: result = infonce(batch, cfg); break;
        case BaseLoss::Dcl: result = dcl(batch, cfg); break;
        default: throw UnsupportedLossError(base_loss_name(loss));
    }
    const Matrix& gu = result.second.grad_unit;
    const Matrix& gr = result.second.grad_raw;

    ZeroGradReport report;
    report.loss_value = result.first.total;
    report.tol = tol;
    report.beta_estimates.resize(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto z = batch.unit.row(i);
        const auto g = gu.row(i);
        report.grad_unit_max_norm = std::max(report.grad_unit_max_norm, linalg::norm(g));
        report.grad_raw_max_norm = std::max(report.grad_raw_max_norm, linalg::norm(gr.row(i)));
        const double beta = linalg::dot(g, z) / linalg::dot(z, z);
        report.beta_estimates[i] = beta;
        double resid = 0.0;
        for (std::size_t j = 0; j < batch.dim(); ++j) {
            const double r = g[j] - beta * z[j];
            resid += r * r;
        }
        report.parallelism_residual = std::max(report.parallelism_residual, std::sqrt(resid));
    }
    report.pass = report.grad_raw_max_norm <= tol;
    return report;
}

ZeroGradReport verify_zero_gradient(const DegenerateConfig& config, BaseLoss loss,
                                    const LossConfig& cfg, double tol) {
    return verify_zero_gradient(build_batch(config), loss, cfg, tol);
}

double uniform_probability_check(std::size_t n, double tau) {
    if (n < 4) throw BatchTooSmallError("uniform probability check needs n >= 4");
    Matrix raw(n, 2);
    for (std::size_t i = 0; i < n; ++i) raw(i, 0) = 1.0;
    LossConfig cfg;
    cfg.temperature = tau;
    const EmbeddingBatch batch(std::move(raw), half_split_pairs(n));
    return infonce(batch, cfg).first.per_sample_prob[0];
}

}  // namespace ac
