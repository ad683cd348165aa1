#pragma once

// Contrastive loss family: forward values, per-sample breakdowns, and analytic
// gradients with respect to the embeddings.
//
// InfoNCE and DCL consume unit embeddings; their gradient reports carry both
// the unit-space gradient and the raw-space gradient obtained by pushing each
// row through the normalization Jacobian. VICreg and BarlowTwins consume raw
// views directly; for them grad_unit and grad_raw hold the same matrix (the
// gradient with respect to the inputs), stacked as [view_a; view_b].

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ac/anchors.hpp"
#include "ac/embedding.hpp"
#include "ac/matrix.hpp"

namespace ac {

struct LossConfig {
    double temperature = 0.5;
    double cloa_weight = 1.0;
    double vicreg_sim_weight = 25.0;
    double vicreg_var_weight = 25.0;
    double vicreg_cov_weight = 1.0;
    double vicreg_gamma = 1.0;
    double vicreg_eps = 1e-4;
    double bt_lambda = 5e-3;

    void validate() const;  // throws ConfigError on non-finite or out-of-range values
};

struct LossBreakdown {
    double total = 0.0;
    // Probability that sample i selects its positive pair among all other
    // candidates (softmax over a != i). Filled for InfoNCE and DCL only.
    std::vector<double> per_sample_prob;
    std::map<std::string, double> term_values;
};

struct GradientReport {
    linalg::Matrix grad_unit;
    linalg::Matrix grad_raw;
    double value = 0.0;
};

using LossResult = std::pair<LossBreakdown, GradientReport>;

enum class BaseLoss { InfoNce, Dcl, Vicreg, Barlow };

// Accepts "infonce", "dcl", "vicreg", "barlow"; throws UnsupportedLossError otherwise.
BaseLoss parse_base_loss(const std::string& name);
std::string base_loss_name(BaseLoss loss);

LossResult infonce(const EmbeddingBatch& batch, const LossConfig& cfg);
LossResult dcl(const EmbeddingBatch& batch, const LossConfig& cfg);

LossResult vicreg(const linalg::Matrix& view_a, const linalg::Matrix& view_b,
                  const LossConfig& cfg);
LossResult barlow_twins(const linalg::Matrix& view_a, const linalg::Matrix& view_b,
                        const LossConfig& cfg);

// Anchor regression: sum over masked-in rows of 1 - z_i . c_{y_i}. An empty
// mask is legal and yields zero loss and zero gradients.
LossResult cloa_anchor(const EmbeddingBatch& batch, const std::vector<std::size_t>& labels,
                       const AnchorSet& anchors, const std::vector<bool>& label_mask);

// base + cloa_weight * anchor regression. For VICreg/Barlow bases the batch is
// split into two views by pair_map (lower index of each pair becomes view A)
// and the base gradient is scattered back into batch row order.
LossResult composite(BaseLoss base, const EmbeddingBatch& batch,
                     const std::vector<std::size_t>& labels, const AnchorSet& anchors,
                     const std::vector<bool>& label_mask, const LossConfig& cfg);

// Pairwise view split of a batch, aligned row-for-row between the two views.
struct ViewSplit {
    linalg::Matrix view_a;               // raw rows, lower pair index
    linalg::Matrix view_b;               // raw rows, matching higher pair index
    std::vector<std::size_t> rows_a;     // batch row of view_a row r
    std::vector<std::size_t> rows_b;     // batch row of view_b row r
};

ViewSplit split_views(const EmbeddingBatch& batch);

// Undoes split_views on a stacked [view_a; view_b] gradient, producing an
// n-row matrix in original batch order.
linalg::Matrix scatter_view_rows(const ViewSplit& split, const linalg::Matrix& stacked,
                                 std::size_t n);

}  // namespace ac
