#pragma once

// Seeded SGD loop over the synthetic dataset. Each step assembles a SimCLR
// style batch of originals plus their negate-and-noise augmentations, paired
// i <-> i + N/2, feeds the encoder, applies the configured loss, and takes one
// SGD step. One record row is emitted per pass over the data (plus row 0 for
// the untrained model), with diagnostics computed in eval mode on the clean
// dataset.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ac/anchors.hpp"
#include "ac/diagnostics.hpp"
#include "ac/losses.hpp"
#include "ac/mlp.hpp"
#include "ac/synthdata.hpp"

namespace ac {

struct TrainConfig {
    double learning_rate = 1.0;
    std::size_t steps = 2000;
    std::size_t batch_size = 64;  // originals + augmentations combined; even, >= 4
    std::uint64_t seed = 1234;
    double label_fraction = 0.1;
    double aug_sigma = 0.05;
    std::size_t h1 = 64;
    std::size_t h2 = 64;
    std::size_t out_dim = 3;
    BaseLoss base = BaseLoss::InfoNce;
    bool use_cloa = false;
    LossConfig loss;
    std::uint64_t anchor_seed = 5;

    void validate() const;
};

struct EpochRow {
    std::size_t epoch = 0;
    double loss_total = 0.0;
    double loss_contrastive = 0.0;
    double loss_cloa = 0.0;  // weighted contribution, so total = contrastive + cloa
    double emb_variance = 0.0;
    double eff_rank = 0.0;
    double sv_ratio = 0.0;
    std::optional<double> anchor_acc;
    double probe_acc = 0.0;
    double wall_ms = 0.0;
    double emb_variance_raw = 0.0;  // extra diagnostic, not a metrics.csv column
};

struct RunRecord {
    std::vector<EpochRow> rows;
    TrainConfig config;
    std::optional<AnchorSet> anchors;
    MlpModel final_model;
    linalg::Matrix final_embeddings;  // eval-mode raw embeddings; empty if aborted
    std::vector<bool> label_mask;
    bool aborted = false;
    std::size_t abort_epoch = 0;
    std::string abort_message;
};

struct StepResult {
    double total = 0.0;
    double contrastive = 0.0;
    double cloa_weighted = 0.0;
};

// Seeded per-class sampling: round(fraction * class size) rows of every class.
std::vector<bool> stratified_label_mask(const std::vector<std::size_t>& labels, double fraction,
                                        std::uint64_t seed);

// One SGD step on an assembled batch (2N rows: originals then augmentations;
// labels and mask cover all 2N rows). Returns the pre-step loss. anchors may
// be null when use_cloa is false.
StepResult train_step(MlpModel& model, const linalg::Matrix& inputs,
                      const std::vector<std::size_t>& labels, const std::vector<bool>& label_mask,
                      BaseLoss base, bool use_cloa, const AnchorSet* anchors,
                      const LossConfig& loss_cfg, double lr);

// Same loss evaluation without updating anything, in eval mode.
StepResult eval_loss(const MlpModel& model, const linalg::Matrix& inputs,
                     const std::vector<std::size_t>& labels, const std::vector<bool>& label_mask,
                     BaseLoss base, bool use_cloa, const AnchorSet* anchors,
                     const LossConfig& loss_cfg);

// Full run. A non-finite loss or parameter aborts the run and returns the
// record accumulated so far with the aborted flag set.
RunRecord train(const SyntheticDataset& data, const TrainConfig& cfg);

}  // namespace ac
