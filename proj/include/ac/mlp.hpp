#pragma once

// Three-layer dense encoder: [linear -> batchnorm -> ReLU] x 2 -> linear.
// Training-mode forward normalizes with batch statistics and updates the
// running estimates; eval-mode forward uses the running estimates and leaves
// the model untouched. Backward consumes the cache of a training-mode forward.

#include <cstdint>
#include <vector>

#include "ac/matrix.hpp"

namespace ac {

struct DenseLayer {
    linalg::Matrix w;        // out x in
    std::vector<double> b;   // out
};

struct BatchNormLayer {
    std::vector<double> gamma;         // scale, init 1
    std::vector<double> beta;          // shift, init 0
    std::vector<double> running_mean;  // init 0
    std::vector<double> running_var;   // init 1
    double momentum = 0.1;             // running <- (1-m)*running + m*batch
    double eps = 1e-5;
};

struct MlpModel {
    std::size_t in_dim = 0;
    std::size_t h1 = 0;
    std::size_t h2 = 0;
    std::size_t out_dim = 0;
    DenseLayer fc1, fc2, fc3;
    BatchNormLayer bn1, bn2;

    [[nodiscard]] bool all_finite() const;
};

// Seeded He initialization: weights N(0, 2/fan_in), biases zero, batchnorm at
// identity with running stats (0, 1).
MlpModel mlp_init(std::size_t in_dim, std::size_t h1, std::size_t h2, std::size_t out_dim,
                  std::uint64_t seed);

struct BnCache {
    linalg::Matrix xhat;            // normalized pre-scale activations
    std::vector<double> inv_std;    // 1/sqrt(var + eps) per feature
};

struct ForwardCache {
    linalg::Matrix input;
    linalg::Matrix lin1, lin2;      // dense outputs before batchnorm
    BnCache bn1, bn2;
    linalg::Matrix act1, act2;      // post-ReLU activations
};

// Returns the raw embeddings (rows x out_dim). Training mode requires at least
// 2 rows and mutates running statistics; pass a cache to enable backward.
linalg::Matrix mlp_forward(MlpModel& model, const linalg::Matrix& x, bool training,
                           ForwardCache* cache);

struct MlpGradients {
    linalg::Matrix dw1, dw2, dw3;
    std::vector<double> db1, db2, db3;
    std::vector<double> dgamma1, dbeta1, dgamma2, dbeta2;
};

// grad_out is dL/d(embeddings) for the batch the cache was built from.
MlpGradients mlp_backward(const MlpModel& model, const ForwardCache& cache,
                          const linalg::Matrix& grad_out);

void sgd_update(MlpModel& model, const MlpGradients& grads, double lr);

// Flattened parameter access in a fixed order (fc1 w/b, bn1 gamma/beta, fc2
// w/b, bn2 gamma/beta, fc3 w/b); used by the finite-difference checks.
std::vector<double*> parameter_pointers(MlpModel& model);
std::vector<double> flatten_gradients(const MlpGradients& grads);

}  // namespace ac
