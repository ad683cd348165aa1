#include "ac/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "ac/errors.hpp"
#include "ac/rng.hpp"

namespace ac {

namespace {

using linalg::Matrix;

// Substream identifiers for derive_seed; fixed so runs are reproducible.
enum SeedStream : std::uint64_t {
    kModelStream = 0,
    kShuffleStream = 1,
    kAugmentStream = 2,
    kMaskStream = 3,
    kEvalAugStream = 4,
};

AnchorSet unit_dummy_anchors(std::size_t d) {
    Matrix m(1, d);
    m(0, 0) = 1.0;
    return AnchorSet{1, d, std::move(m), 0};
}

LossResult run_composite(const EmbeddingBatch& batch, const std::vector<std::size_t>& labels,
                         const std::vector<bool>& mask, BaseLoss base, bool use_cloa,
                         const AnchorSet* anchors, const LossConfig& loss_cfg) {
    if (use_cloa && anchors == nullptr) {
        throw ConfigError("anchor regression requires an anchor set");
    }
    const AnchorSet dummy = anchors == nullptr ? unit_dummy_anchors(batch.dim()) : AnchorSet{};
    const AnchorSet& a = anchors == nullptr ? dummy : *anchors;
    const std::vector<bool> effective_mask =
        use_cloa ? mask : std::vector<bool>(batch.size(), false);
    return composite(base, batch, labels, a, effective_mask, loss_cfg);
}

StepResult to_step_result(const LossBreakdown& breakdown, const LossConfig& cfg) {
    StepResult r;
    r.total = breakdown.total;
    r.contrastive = breakdown.term_values.at("contrastive");
    r.cloa_weighted = cfg.cloa_weight * breakdown.term_values.at("cloa");
    return r;
}

Matrix stack_inputs(const Matrix& originals, const Matrix& augmented) {
    Matrix out(originals.rows() * 2, originals.cols());
    for (std::size_t i = 0; i < originals.rows(); ++i)
        for (std::size_t j = 0; j < originals.cols(); ++j) {
            out(i, j) = originals(i, j);
            out(originals.rows() + i, j) = augmented(i, j);
        }
    return out;
}

}  // namespace

void TrainConfig::validate() const {
    if (!(std::isfinite(learning_rate) && learning_rate > 0.0)) {
        throw ConfigError("learning_rate must be finite and positive");
    }
    if (batch_size < 4 || batch_size % 2 != 0) {
        throw ConfigError("batch_size must be even and at least 4");
    }
    if (!(std::isfinite(label_fraction) && label_fraction >= 0.0 && label_fraction <= 1.0)) {
        throw ConfigError("label_fraction must lie in [0, 1]");
    }
    if (!(std::isfinite(aug_sigma) && aug_sigma >= 0.0)) {
        throw ConfigError("aug_sigma must be finite and non-negative");
    }
    if (h1 < 1 || h2 < 1 || out_dim < 1) {
        throw ConfigError("model dimensions must be at least 1");
    }
    loss.validate();
}

std::vector<bool> stratified_label_mask(const std::vector<std::size_t>& labels, double fraction,
                                        std::uint64_t seed) {
    if (!(std::isfinite(fraction) && fraction >= 0.0 && fraction <= 1.0)) {
        throw ConfigError("label_fraction must lie in [0, 1]");
    }
    std::size_t k = 0;
    for (std::size_t y : labels) k = std::max(k, y + 1);
    std::vector<std::vector<std::size_t>> by_class(k);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

    Rng rng(seed);
    std::vector<bool> mask(labels.size(), false);
    for (auto& members : by_class) {
        rng.shuffle(members);
        const auto take = static_cast<std::size_t>(
            std::llround(fraction * static_cast<double>(members.size())));
        for (std::size_t t = 0; t < std::min(take, members.size()); ++t) {
            mask[members[t]] = true;
        }
    }
    return mask;
}

StepResult train_step(MlpModel& model, const Matrix& inputs,
                      const std::vector<std::size_t>& labels, const std::vector<bool>& label_mask,
                      BaseLoss base, bool use_cloa, const AnchorSet* anchors,
                      const LossConfig& loss_cfg, double lr) {
    ForwardCache cache;
    Matrix raw = mlp_forward(model, inputs, true, &cache);
    const EmbeddingBatch batch(std::move(raw), half_split_pairs(inputs.rows()));
    LossResult result =
        run_composite(batch, labels, label_mask, base, use_cloa, anchors, loss_cfg);
    const MlpGradients grads = mlp_backward(model, cache, result.second.grad_raw);
    sgd_update(model, grads, lr);
    return to_step_result(result.first, loss_cfg);
}

StepResult eval_loss(const MlpModel& model, const Matrix& inputs,
                     const std::vector<std::size_t>& labels, const std::vector<bool>& label_mask,
                     BaseLoss base, bool use_cloa, const AnchorSet* anchors,
                     const LossConfig& loss_cfg) {
    MlpModel scratch = model;  // eval forward leaves the model untouched anyway
    Matrix raw = mlp_forward(scratch, inputs, false, nullptr);
    const EmbeddingBatch batch(std::move(raw), half_split_pairs(inputs.rows()));
    LossResult result =
        run_composite(batch, labels, label_mask, base, use_cloa, anchors, loss_cfg);
    return to_step_result(result.first, loss_cfg);
}

RunRecord train(const SyntheticDataset& data, const TrainConfig& cfg) {
    cfg.validate();
    const std::size_t n = data.points.rows();
    if (n < 2) throw ConfigError("dataset needs at least 2 points");
    std::size_t k = 0;
    for (std::size_t y : data.labels) k = std::max(k, y + 1);

    RunRecord record;
    record.config = cfg;
    record.final_model =
        mlp_init(data.points.cols(), cfg.h1, cfg.h2, cfg.out_dim, derive_seed(cfg.seed, kModelStream));
    MlpModel& model = record.final_model;

    if (k <= cfg.out_dim) {
        record.anchors = generate_anchors(k, cfg.out_dim, cfg.anchor_seed);
    } else if (cfg.use_cloa) {
        throw TooManyClassesError(k, cfg.out_dim);
    }
    const AnchorSet* anchors = record.anchors ? &*record.anchors : nullptr;

    record.label_mask =
        stratified_label_mask(data.labels, cfg.label_fraction, derive_seed(cfg.seed, kMaskStream));

    Rng shuffle_rng(derive_seed(cfg.seed, kShuffleStream));
    Rng augment_rng(derive_seed(cfg.seed, kAugmentStream));

    auto duplicate_labels = [](const std::vector<std::size_t>& v) {
        std::vector<std::size_t> out(v);
        out.insert(out.end(), v.begin(), v.end());
        return out;
    };
    auto duplicate_mask = [](const std::vector<bool>& v) {
        std::vector<bool> out(v);
        out.insert(out.end(), v.begin(), v.end());
        return out;
    };

    // Fixed full-dataset evaluation batch used for the loss columns of row 0.
    auto eval_row_loss = [&]() {
        const Matrix augmented =
            augment_negate(data.points, cfg.aug_sigma, derive_seed(cfg.seed, kEvalAugStream));
        return eval_loss(model, stack_inputs(data.points, augmented),
                         duplicate_labels(data.labels), duplicate_mask(record.label_mask),
                         cfg.base, cfg.use_cloa, anchors, cfg.loss);
    };

    auto diagnostics_row = [&](std::size_t epoch, const StepResult& losses, double wall_ms) {
        MlpModel scratch = model;
        const Matrix raw = mlp_forward(scratch, data.points, false, nullptr);
        const DiagnosticsSnapshot snap = make_snapshot(raw, data.labels, anchors);
        EpochRow row;
        row.epoch = epoch;
        row.loss_total = losses.total;
        row.loss_contrastive = losses.contrastive;
        row.loss_cloa = losses.cloa_weighted;
        row.emb_variance = snap.emb_variance;
        row.emb_variance_raw = snap.emb_variance_raw;
        row.eff_rank = snap.eff_rank;
        row.sv_ratio = snap.sv_ratio;
        row.anchor_acc = snap.anchor_acc;
        row.probe_acc = snap.probe_acc;
        row.wall_ms = wall_ms;
        return row;
    };

    using Clock = std::chrono::steady_clock;
    auto ms_since = [](Clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    };

    {
        const auto t0 = Clock::now();
        const StepResult initial = eval_row_loss();
        record.rows.push_back(diagnostics_row(0, initial, ms_since(t0)));
    }

    const std::size_t half = cfg.batch_size / 2;
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);

    std::size_t steps_done = 0;
    std::size_t epoch = 0;
    while (steps_done < cfg.steps) {
        ++epoch;
        const auto t0 = Clock::now();
        shuffle_rng.shuffle(idx);

        StepResult epoch_sum;
        std::size_t epoch_steps = 0;
        for (std::size_t start = 0; start < n && steps_done < cfg.steps; start += half) {
            const std::size_t count = std::min(half, n - start);
            if (count < 2) continue;  // a pair batch needs at least 2 originals

            Matrix originals(count, data.points.cols());
            std::vector<std::size_t> labels(count);
            std::vector<bool> mask(count);
            for (std::size_t r = 0; r < count; ++r) {
                const std::size_t src = idx[start + r];
                for (std::size_t j = 0; j < data.points.cols(); ++j) {
                    originals(r, j) = data.points(src, j);
                }
                labels[r] = data.labels[src];
                mask[r] = record.label_mask[src];
            }
            const Matrix augmented =
                augment_negate(originals, cfg.aug_sigma, augment_rng.next_u64());

            StepResult step;
            try {
                step = train_step(model, stack_inputs(originals, augmented),
                                  duplicate_labels(labels), duplicate_mask(mask), cfg.base,
                                  cfg.use_cloa, anchors, cfg.loss, cfg.learning_rate);
            } catch (const ZeroRowError& e) {
                record.aborted = true;
                record.abort_epoch = epoch;
                record.abort_message = e.what();
                return record;
            }
            if (!std::isfinite(step.total) || !model.all_finite()) {
                record.aborted = true;
                record.abort_epoch = epoch;
                record.abort_message = NonFiniteLossError(epoch).what();
                return record;
            }
            epoch_sum.total += step.total;
            epoch_sum.contrastive += step.contrastive;
            epoch_sum.cloa_weighted += step.cloa_weighted;
            ++steps_done;
            ++epoch_steps;
        }

        if (epoch_steps > 0) {
            epoch_sum.total /= static_cast<double>(epoch_steps);
            epoch_sum.contrastive /= static_cast<double>(epoch_steps);
            epoch_sum.cloa_weighted /= static_cast<double>(epoch_steps);
        }
        record.rows.push_back(diagnostics_row(epoch, epoch_sum, ms_since(t0)));
    }

    record.final_embeddings = mlp_forward(model, data.points, false, nullptr);
    return record;
}

}  // namespace ac
