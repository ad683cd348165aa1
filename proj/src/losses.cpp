#include "ac/losses.hpp"

#include <cmath>
#include <limits>

#include "ac/errors.hpp"

namespace ac {

namespace {

using linalg::Matrix;

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatchError(what);
    }
}

void axpy(Matrix& y, double alpha, const Matrix& x) {
    check_same_shape(y, x, "matrix accumulation shapes disagree");
    for (std::size_t i = 0; i < y.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += alpha * x(i, j);
}

void scale(Matrix& m, double alpha) {
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) *= alpha;
}

// Pushes a unit-space gradient through the normalization Jacobian row by row.
Matrix raw_from_unit(const EmbeddingBatch& batch, const Matrix& grad_unit) {
    Matrix out(batch.size(), batch.dim());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto g = linalg::normalization_jvp(batch.raw.row(i), grad_unit.row(i));
        for (std::size_t j = 0; j < batch.dim(); ++j) out(i, j) = g[j];
    }
    return out;
}

// Aggregated gradient shared by InfoNCE and DCL. w is the per-row softmax
// weight matrix over each row's candidate set (zeros elsewhere); both losses
// reduce to grad_unit_c = (1/tau) * (sum_a (w_ca + w_ac) z_a - 2 z_{j(c)}).
Matrix softmax_family_grad_unit(const EmbeddingBatch& batch, const Matrix& w, double tau) {
    const std::size_t n = batch.size();
    Matrix sym(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < n; ++a) sym(i, a) = w(i, a) + w(a, i);
    Matrix grad = linalg::matmul(sym, batch.unit);
    for (std::size_t c = 0; c < n; ++c) {
        const auto pos = batch.unit.row(batch.pair_map[c]);
        for (std::size_t j = 0; j < batch.dim(); ++j) grad(c, j) -= 2.0 * pos[j];
    }
    scale(grad, 1.0 / tau);
    return grad;
}

struct TermGrad {
    double value = 0.0;
    Matrix grad;
};

// Hinge on per-dimension standard deviation, unbiased variance.
TermGrad vicreg_variance_term(const Matrix& x, double gamma, double eps) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    TermGrad out{0.0, Matrix(n, d)};
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mu) * (x(i, j) - mu);
        var /= static_cast<double>(n - 1);
        const double s = std::sqrt(var + eps);
        if (s >= gamma) continue;
        out.value += (gamma - s) / static_cast<double>(d);
        const double coeff = -1.0 / (static_cast<double>(d) * s * static_cast<double>(n - 1));
        for (std::size_t i = 0; i < n; ++i) out.grad(i, j) = coeff * (x(i, j) - mu);
    }
    return out;
}

// Mean off-diagonal energy of the unbiased covariance matrix. The gradient
// through the column centering vanishes because centered columns sum to zero,
// so no explicit correction is needed.
TermGrad vicreg_covariance_term(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Matrix centered = x;
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
        mu /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) centered(i, j) -= mu;
    }
    Matrix cov = linalg::matmul(linalg::transpose(centered), centered);
    scale(cov, 1.0 / static_cast<double>(n - 1));
    TermGrad out;
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = 0; q < d; ++q) {
            if (p == q) {
                cov(p, q) = 0.0;
            } else {
                out.value += cov(p, q) * cov(p, q) / static_cast<double>(d);
            }
        }
    }
    out.grad = linalg::matmul(centered, cov);
    scale(out.grad, 4.0 / (static_cast<double>(d) * static_cast<double>(n - 1)));
    return out;
}

struct Standardized {
    Matrix xhat;
    std::vector<double> sigma;
};

// Per-column z-scoring with population statistics, so identical decorrelated
// views produce an exact identity cross-correlation.
Standardized standardize_columns(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    Standardized out{x, std::vector<double>(d)};
    for (std::size_t j = 0; j < d; ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < n; ++i) mu += x(i, j);
        mu /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (x(i, j) - mu) * (x(i, j) - mu);
        var /= static_cast<double>(n);
        const double sigma = std::sqrt(var);
        if (sigma <= 1e-8) throw DegenerateDimensionError(j);
        out.sigma[j] = sigma;
        for (std::size_t i = 0; i < n; ++i) out.xhat(i, j) = (x(i, j) - mu) / sigma;
    }
    return out;
}

// Backward pass of per-column standardization: maps a gradient in x-hat space
// to a gradient in x space, column by column.
Matrix standardize_backward(const Standardized& st, const Matrix& grad_hat) {
    const std::size_t n = grad_hat.rows();
    const std::size_t d = grad_hat.cols();
    Matrix out(n, d);
    for (std::size_t j = 0; j < d; ++j) {
        double gmean = 0.0;
        double gxmean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            gmean += grad_hat(i, j);
            gxmean += grad_hat(i, j) * st.xhat(i, j);
        }
        gmean /= static_cast<double>(n);
        gxmean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            out(i, j) = (grad_hat(i, j) - gmean - st.xhat(i, j) * gxmean) / st.sigma[j];
        }
    }
    return out;
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    for (std::size_t i = 0; i < top.rows(); ++i)
        for (std::size_t j = 0; j < top.cols(); ++j) out(i, j) = top(i, j);
    for (std::size_t i = 0; i < bottom.rows(); ++i)
        for (std::size_t j = 0; j < bottom.cols(); ++j) out(top.rows() + i, j) = bottom(i, j);
    return out;
}

}  // namespace

void LossConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    auto non_negative = [](double v) { return std::isfinite(v) && v >= 0.0; };
    if (!positive(temperature)) throw ConfigError("temperature must be finite and positive");
    if (!non_negative(cloa_weight)) throw ConfigError("cloa_weight must be finite and non-negative");
    if (!non_negative(vicreg_sim_weight) || !non_negative(vicreg_var_weight) ||
        !non_negative(vicreg_cov_weight)) {
        throw ConfigError("vicreg weights must be finite and non-negative");
    }
    if (!positive(vicreg_gamma)) throw ConfigError("vicreg_gamma must be finite and positive");
    if (!positive(vicreg_eps)) throw ConfigError("vicreg_eps must be finite and positive");
    if (!positive(bt_lambda)) throw ConfigError("bt_lambda must be finite and positive");
}

BaseLoss parse_base_loss(const std::string& name) {
    if (name == "infonce") return BaseLoss::InfoNce;
    if (name == "dcl") return BaseLoss::Dcl;
    if (name == "vicreg") return BaseLoss::Vicreg;
    if (name == "barlow") return BaseLoss::Barlow;
    throw UnsupportedLossError(name);
}

std::string base_loss_name(BaseLoss loss) {
    switch (loss) {
        case BaseLoss::InfoNce: return "infonce";
        case BaseLoss::Dcl: return "dcl";
        case BaseLoss::Vicreg: return "vicreg";
        case BaseLoss::Barlow: return "barlow";
    }
    throw UnsupportedLossError("unknown");
}

LossResult infonce(const EmbeddingBatch& batch, const LossConfig& cfg) {
    cfg.validate();
    const std::size_t n = batch.size();
    const double tau = cfg.temperature;
    const Matrix sim = linalg::matmul_bt(batch.unit, batch.unit);

    Matrix w(n, n);  // row i: softmax of sim(i, a)/tau over a != i
    std::vector<double> prob(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i) hi = std::max(hi, sim(i, a) / tau);
        }
        double denom = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i) denom += std::exp(sim(i, a) / tau - hi);
        }
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i) w(i, a) = std::exp(sim(i, a) / tau - hi) / denom;
        }
        const std::size_t j = batch.pair_map[i];
        prob[i] = w(i, j);
        total += hi + std::log(denom) - sim(i, j) / tau;
    }

    Matrix grad_unit = softmax_family_grad_unit(batch, w, tau);
    GradientReport report{grad_unit, raw_from_unit(batch, grad_unit), total};
    return {LossBreakdown{total, std::move(prob), {}}, std::move(report)};
}

LossResult dcl(const EmbeddingBatch& batch, const LossConfig& cfg) {
    cfg.validate();
    const std::size_t n = batch.size();
    const double tau = cfg.temperature;
    const Matrix sim = linalg::matmul_bt(batch.unit, batch.unit);

    Matrix w(n, n);  // row i: softmax of sim(i, a)/tau over a outside {i, j(i)}
    std::vector<double> prob(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = batch.pair_map[i];
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i) hi = std::max(hi, sim(i, a) / tau);
        }
        double denom_neg = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i && a != j) denom_neg += std::exp(sim(i, a) / tau - hi);
        }
        for (std::size_t a = 0; a < n; ++a) {
            if (a != i && a != j) w(i, a) = std::exp(sim(i, a) / tau - hi) / denom_neg;
        }
        const double pos = std::exp(sim(i, j) / tau - hi);
        prob[i] = pos / (pos + denom_neg);
        total += hi + std::log(denom_neg) - sim(i, j) / tau;
    }

    Matrix grad_unit = softmax_family_grad_unit(batch, w, tau);
    GradientReport report{grad_unit, raw_from_unit(batch, grad_unit), total};
    return {LossBreakdown{total, std::move(prob), {}}, std::move(report)};
}

LossResult vicreg(const Matrix& view_a, const Matrix& view_b, const LossConfig& cfg) {
    cfg.validate();
    check_same_shape(view_a, view_b, "vicreg views must share a shape");
    const std::size_t n = view_a.rows();
    const std::size_t d = view_a.cols();
    if (n < 2) throw BatchTooSmallError("vicreg needs at least 2 rows per view");

    double dist = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = view_a(i, j) - view_b(i, j);
            dist += diff * diff;
        }
    dist /= static_cast<double>(n);

    const TermGrad var_a = vicreg_variance_term(view_a, cfg.vicreg_gamma, cfg.vicreg_eps);
    const TermGrad var_b = vicreg_variance_term(view_b, cfg.vicreg_gamma, cfg.vicreg_eps);
    const TermGrad cov_a = vicreg_covariance_term(view_a);
    const TermGrad cov_b = vicreg_covariance_term(view_b);

    const double total = cfg.vicreg_sim_weight * dist +
                         cfg.vicreg_var_weight * (var_a.value + var_b.value) +
                         cfg.vicreg_cov_weight * (cov_a.value + cov_b.value);

    Matrix grad_a(n, d);
    Matrix grad_b(n, d);
    const double dist_coeff = 2.0 * cfg.vicreg_sim_weight / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            const double diff = view_a(i, j) - view_b(i, j);
            grad_a(i, j) = dist_coeff * diff;
            grad_b(i, j) = -dist_coeff * diff;
        }
    axpy(grad_a, cfg.vicreg_var_weight, var_a.grad);
    axpy(grad_b, cfg.vicreg_var_weight, var_b.grad);
    axpy(grad_a, cfg.vicreg_cov_weight, cov_a.grad);
    axpy(grad_b, cfg.vicreg_cov_weight, cov_b.grad);

    Matrix stacked = stack_rows(grad_a, grad_b);
    LossBreakdown breakdown{total,
                            {},
                            {{"distance", dist},
                             {"variance_a", var_a.value},
                             {"variance_b", var_b.value},
                             {"covariance_a", cov_a.value},
                             {"covariance_b", cov_b.value}}};
    GradientReport report{stacked, stacked, total};
    return {std::move(breakdown), std::move(report)};
}

LossResult barlow_twins(const Matrix& view_a, const Matrix& view_b, const LossConfig& cfg) {
    cfg.validate();
    check_same_shape(view_a, view_b, "barlow_twins views must share a shape");
    const std::size_t n = view_a.rows();
    const std::size_t d = view_a.cols();
    if (n < 2) throw BatchTooSmallError("barlow_twins needs at least 2 rows per view");

    const Standardized sa = standardize_columns(view_a);
    const Standardized sb = standardize_columns(view_b);
    Matrix corr = linalg::matmul(linalg::transpose(sa.xhat), sb.xhat);
    scale(corr, 1.0 / static_cast<double>(n));

    double on_diag = 0.0;
    double off_diag = 0.0;
    Matrix dcorr(d, d);
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = 0; q < d; ++q) {
            if (p == q) {
                on_diag += (1.0 - corr(p, q)) * (1.0 - corr(p, q));
                dcorr(p, q) = -2.0 * (1.0 - corr(p, q));
            } else {
                off_diag += corr(p, q) * corr(p, q);
                dcorr(p, q) = 2.0 * cfg.bt_lambda * corr(p, q);
            }
        }
    }
    const double total = on_diag + cfg.bt_lambda * off_diag;

    Matrix grad_a_hat = linalg::matmul(sb.xhat, linalg::transpose(dcorr));
    Matrix grad_b_hat = linalg::matmul(sa.xhat, dcorr);
    scale(grad_a_hat, 1.0 / static_cast<double>(n));
    scale(grad_b_hat, 1.0 / static_cast<double>(n));

    Matrix stacked =
        stack_rows(standardize_backward(sa, grad_a_hat), standardize_backward(sb, grad_b_hat));
    LossBreakdown breakdown{total, {}, {{"on_diagonal", on_diag}, {"off_diagonal", off_diag}}};
    GradientReport report{stacked, stacked, total};
    return {std::move(breakdown), std::move(report)};
}

LossResult cloa_anchor(const EmbeddingBatch& batch, const std::vector<std::size_t>& labels,
                       const AnchorSet& anchors, const std::vector<bool>& label_mask) {
    if (labels.size() != batch.size() || label_mask.size() != batch.size()) {
        throw DimensionMismatchError("labels and label_mask must match the batch size");
    }
    if (batch.dim() != anchors.d) {
        throw DimensionMismatchError("embedding dimension does not match anchor dimension");
    }
    const std::size_t n = batch.size();
    const std::size_t d = batch.dim();
    double total = 0.0;
    Matrix grad_unit(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        if (!label_mask[i]) continue;
        const std::size_t y = labels[i];
        if (y >= anchors.k) throw LabelOutOfRangeError(y, anchors.k);
        const auto anchor = anchors.anchors.row(y);
        total += 1.0 - linalg::dot(batch.unit.row(i), anchor);
        for (std::size_t j = 0; j < d; ++j) grad_unit(i, j) = -anchor[j];
    }
    GradientReport report{grad_unit, raw_from_unit(batch, grad_unit), total};
    return {LossBreakdown{total, {}, {{"cloa", total}}}, std::move(report)};
}

ViewSplit split_views(const EmbeddingBatch& batch) {
    const std::size_t d = batch.dim();
    std::vector<std::size_t> rows_a;
    std::vector<std::size_t> rows_b;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (i < batch.pair_map[i]) {
            rows_a.push_back(i);
            rows_b.push_back(batch.pair_map[i]);
        }
    }
    const std::size_t m = rows_a.size();
    Matrix view_a(m, d);
    Matrix view_b(m, d);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < d; ++j) {
            view_a(r, j) = batch.raw(rows_a[r], j);
            view_b(r, j) = batch.raw(rows_b[r], j);
        }
    return ViewSplit{std::move(view_a), std::move(view_b), std::move(rows_a), std::move(rows_b)};
}

Matrix scatter_view_rows(const ViewSplit& split, const Matrix& stacked, std::size_t n) {
    const std::size_t m = split.rows_a.size();
    if (stacked.rows() != 2 * m) {
        throw DimensionMismatchError("stacked gradient does not match the view split");
    }
    Matrix out(n, stacked.cols());
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t j = 0; j < stacked.cols(); ++j) {
            out(split.rows_a[r], j) = stacked(r, j);
            out(split.rows_b[r], j) = stacked(m + r, j);
        }
    return out;
}

LossResult composite(BaseLoss base, const EmbeddingBatch& batch,
                     const std::vector<std::size_t>& labels, const AnchorSet& anchors,
                     const std::vector<bool>& label_mask, const LossConfig& cfg) {
    cfg.validate();
    LossResult base_result;
    Matrix base_raw;
    Matrix base_unit;
    switch (base) {
        case BaseLoss::InfoNce:
        case BaseLoss::Dcl: {
            base_result = (base == BaseLoss::InfoNce) ? infonce(batch, cfg) : dcl(batch, cfg);
            base_raw = base_result.second.grad_raw;
            base_unit = base_result.second.grad_unit;
            break;
        }
        case BaseLoss::Vicreg:
        case BaseLoss::Barlow: {
            const ViewSplit split = split_views(batch);
            base_result = (base == BaseLoss::Vicreg)
                              ? vicreg(split.view_a, split.view_b, cfg)
                              : barlow_twins(split.view_a, split.view_b, cfg);
            base_raw = scatter_view_rows(split, base_result.second.grad_raw, batch.size());
            base_unit = base_raw;
            break;
        }
    }

    const LossResult cloa_result = cloa_anchor(batch, labels, anchors, label_mask);
    const double total = base_result.first.total + cfg.cloa_weight * cloa_result.first.total;

    Matrix grad_raw = base_raw;
    axpy(grad_raw, cfg.cloa_weight, cloa_result.second.grad_raw);
    Matrix grad_unit = base_unit;
    axpy(grad_unit, cfg.cloa_weight, cloa_result.second.grad_unit);

    LossBreakdown breakdown;
    breakdown.total = total;
    breakdown.per_sample_prob = base_result.first.per_sample_prob;
    breakdown.term_values = base_result.first.term_values;
    breakdown.term_values["contrastive"] = base_result.first.total;
    breakdown.term_values["cloa"] = cloa_result.first.total;
    GradientReport report{std::move(grad_unit), std::move(grad_raw), total};
    return {std::move(breakdown), std::move(report)};
}

}  // namespace ac
