#pragma once

// Constructive check of the rank-1 collapse result: build degenerate embedding
// configurations (all rows equal, or rows on a single signed line), evaluate a
// contrastive loss there, and report whether the gradient that reaches the raw
// embeddings vanishes. The unit-space gradient need not vanish in the signed
// case; it is parallel to each row, and the normalization Jacobian kills
// exactly that component. The report records both facts separately.

#include <cstdint>
#include <vector>

#include "ac/embedding.hpp"
#include "ac/losses.hpp"

namespace ac {

enum class DegenerateKind { AllEqual, Rank1Signs };

struct DegenerateConfig {
    DegenerateKind kind = DegenerateKind::AllEqual;
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> z_star;      // shared unit direction, length d
    std::vector<int> signs;          // +1/-1 per row; all +1 for AllEqual
    std::vector<double> magnitudes;  // positive raw-norm scale per row
};

// Random unit direction and magnitudes in [0.5, 2]; all rows share the +1 sign.
DegenerateConfig make_equal_config(std::size_t n, std::size_t d, std::uint64_t seed);

// As above but with fair random signs, adjusted so both signs are present.
DegenerateConfig make_rank1_config(std::size_t n, std::size_t d, std::uint64_t seed);

// Raw rows magnitude_i * sign_i * z_star, paired i <-> i + n/2 after reordering
// rows so that pairs share a sign whenever the sign counts allow.
EmbeddingBatch build_batch(const DegenerateConfig& config);

// build_batch with one row nudged off the shared line by `eps` along a random
// orthogonal direction; used to show the zero-gradient check can fail.
EmbeddingBatch perturb_off_line(const DegenerateConfig& config, double eps, std::uint64_t seed);

struct ZeroGradReport {
    double loss_value = 0.0;
    double grad_unit_max_norm = 0.0;
    double grad_raw_max_norm = 0.0;
    std::vector<double> beta_estimates;    // per row, (grad_unit_i . z_i)/(z_i . z_i)
    double parallelism_residual = 0.0;     // max over rows of |grad_unit_i - beta_i z_i|
    double tol = 0.0;
    bool pass = false;                     // grad_raw_max_norm <= tol
};

// Only InfoNCE and DCL are in scope; other selectors throw UnsupportedLoss.
ZeroGradReport verify_zero_gradient(const EmbeddingBatch& batch, BaseLoss loss,
                                    const LossConfig& cfg, double tol);
ZeroGradReport verify_zero_gradient(const DegenerateConfig& config, BaseLoss loss,
                                    const LossConfig& cfg, double tol);

// P_i of the InfoNCE softmax at an all-equal batch of size n; independent of
// tau and equal to 1/(n-1).
double uniform_probability_check(std::size_t n, double tau);

}  // namespace ac
