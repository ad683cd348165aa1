#pragma once

// Collapse and separability metrics: summed per-dimension variance, effective
// rank and singular-value ratio of mean-centered embeddings, and two
// classification probes (nearest anchor, nearest class centroid).

#include <optional>
#include <vector>

#include "ac/anchors.hpp"
#include "ac/matrix.hpp"

namespace ac {

// Sum over dimensions of the population (1/N) variance.
double embedding_variance(const linalg::Matrix& z);

struct RankInfo {
    double eff_rank = 0.0;  // exp of the entropy of the normalized singular values
    double sv_ratio = 0.0;  // sigma_2 / sigma_1, 0 if sigma_1 = 0
};

// Both statistics are computed on mean-centered rows. A batch whose centered
// matrix is numerically zero reports eff_rank 1 (the collapse signature) and
// sv_ratio 0.
RankInfo effective_rank(const linalg::Matrix& z);

// Fraction of rows whose highest-cosine anchor equals the label. Ties break
// toward the lowest anchor index.
double nearest_anchor_accuracy(const linalg::Matrix& z, const std::vector<std::size_t>& labels,
                               const AnchorSet& anchors);

// Nearest-centroid classification by cosine: centroids are per-class means of
// the train rows; accuracy measured on the test rows, ties toward the lowest
// class index. Every class must appear in the train split.
double centroid_probe_accuracy(const linalg::Matrix& z_train,
                               const std::vector<std::size_t>& labels_train,
                               const linalg::Matrix& z_test,
                               const std::vector<std::size_t>& labels_test);

struct DiagnosticsSnapshot {
    double emb_variance = 0.0;      // on unit-normalized embeddings
    double emb_variance_raw = 0.0;  // on raw embeddings
    double eff_rank = 0.0;
    double sv_ratio = 0.0;
    std::optional<double> anchor_acc;  // absent when no anchor set applies
    double probe_acc = 0.0;
    std::vector<std::optional<double>> per_class_alignment;
};

// Full snapshot from raw embeddings. Rank statistics, probes, and alignment
// run on the unit-normalized rows; both variance flavors are recorded.
DiagnosticsSnapshot make_snapshot(const linalg::Matrix& raw,
                                  const std::vector<std::size_t>& labels,
                                  const AnchorSet* anchors);

}  // namespace ac
