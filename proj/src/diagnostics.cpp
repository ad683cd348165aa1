#include "ac/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "ac/errors.hpp"

namespace ac {

namespace {

using linalg::Matrix;

Matrix center_rows(const Matrix& z) {
    Matrix out = z;
    for (std::size_t j = 0; j < z.cols(); ++j) {
        double mu = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) mu += z(i, j);
        mu /= static_cast<double>(z.rows());
        for (std::size_t i = 0; i < z.rows(); ++i) out(i, j) -= mu;
    }
    return out;
}

}  // namespace

double embedding_variance(const Matrix& z) {
    if (z.rows() < 2) throw BatchTooSmallError("variance needs at least 2 rows");
    const Matrix centered = center_rows(z);
    double total = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < z.rows(); ++i) s += centered(i, j) * centered(i, j);
        total += s / static_cast<double>(z.rows());
    }
    return total;
}

RankInfo effective_rank(const Matrix& z) {
    if (z.rows() < 2) throw BatchTooSmallError("rank statistics need at least 2 rows");
    const std::vector<double> sv = linalg::singular_values(center_rows(z));
    const double top = sv[0];
    if (!(top > 0.0)) return RankInfo{1.0, 0.0};

    double sum = 0.0;
    for (double s : sv) sum += s;
    double entropy = 0.0;
    for (double s : sv) {
        const double p = s / sum;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    RankInfo info;
    info.eff_rank = std::exp(entropy);
    info.sv_ratio = sv.size() > 1 ? sv[1] / top : 0.0;
    return info;
}

double nearest_anchor_accuracy(const Matrix& z, const std::vector<std::size_t>& labels,
                               const AnchorSet& anchors) {
    if (labels.size() != z.rows()) {
        throw DimensionMismatchError("label count does not match row count");
    }
    if (z.cols() != anchors.d) {
        throw DimensionMismatchError("embedding dimension does not match anchor dimension");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        if (labels[i] >= anchors.k) throw LabelOutOfRangeError(labels[i], anchors.k);
        std::size_t best = 0;
        double best_dot = linalg::dot(z.row(i), anchors.anchors.row(0));
        for (std::size_t c = 1; c < anchors.k; ++c) {
            const double d = linalg::dot(z.row(i), anchors.anchors.row(c));
            if (d > best_dot) {
                best_dot = d;
                best = c;
            }
        }
        if (best == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(z.rows());
}

double centroid_probe_accuracy(const Matrix& z_train, const std::vector<std::size_t>& labels_train,
                               const Matrix& z_test, const std::vector<std::size_t>& labels_test) {
    if (labels_train.size() != z_train.rows() || labels_test.size() != z_test.rows()) {
        throw DimensionMismatchError("label count does not match row count");
    }
    if (z_train.cols() != z_test.cols()) {
        throw DimensionMismatchError("train and test dimensions disagree");
    }
    std::size_t k = 0;
    for (std::size_t y : labels_train) k = std::max(k, y + 1);
    for (std::size_t y : labels_test) k = std::max(k, y + 1);

    Matrix centroids(k, z_train.cols());
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < z_train.rows(); ++i) {
        const std::size_t y = labels_train[i];
        counts[y] += 1;
        for (std::size_t j = 0; j < z_train.cols(); ++j) centroids(y, j) += z_train(i, j);
    }
    std::vector<double> centroid_norm(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] == 0) throw MissingClassError(c);
        double sq = 0.0;
        for (std::size_t j = 0; j < centroids.cols(); ++j) {
            centroids(c, j) /= static_cast<double>(counts[c]);
            sq += centroids(c, j) * centroids(c, j);
        }
        centroid_norm[c] = std::sqrt(sq);
    }

    std::size_t hits = 0;
    for (std::size_t i = 0; i < z_test.rows(); ++i) {
        const double zn = linalg::norm(z_test.row(i));
        std::size_t best = 0;
        double best_cos = -2.0;
        for (std::size_t c = 0; c < k; ++c) {
            double cos = -2.0;  // degenerate centroids or rows never win a tie
            if (centroid_norm[c] > 1e-300 && zn > 1e-300) {
                cos = linalg::dot(z_test.row(i), centroids.row(c)) / (zn * centroid_norm[c]);
            }
            if (cos > best_cos) {
                best_cos = cos;
                best = c;
            }
        }
        if (best == labels_test[i]) ++hits;
    }
    return z_test.rows() == 0 ? 0.0
                              : static_cast<double>(hits) / static_cast<double>(z_test.rows());
}

DiagnosticsSnapshot make_snapshot(const Matrix& raw, const std::vector<std::size_t>& labels,
                                  const AnchorSet* anchors) {
    const Matrix unit = linalg::normalize_rows(raw);
    DiagnosticsSnapshot snap;
    snap.emb_variance = embedding_variance(unit);
    snap.emb_variance_raw = embedding_variance(raw);
    const RankInfo rank = effective_rank(unit);
    snap.eff_rank = rank.eff_rank;
    snap.sv_ratio = rank.sv_ratio;
    snap.probe_acc = centroid_probe_accuracy(unit, labels, unit, labels);
    if (anchors != nullptr) {
        snap.anchor_acc = nearest_anchor_accuracy(unit, labels, *anchors);
        snap.per_class_alignment = anchor_alignment_rows(unit, labels, *anchors);
    }
    return snap;
}

}  // namespace ac
