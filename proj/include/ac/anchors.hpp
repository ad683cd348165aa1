#pragma once

// Fixed orthonormal class anchors. Generated once from a seed, frozen for the
// rest of training, and used both by the anchor regression loss and by the
// nearest-anchor diagnostic.

#include <cstdint>
#include <optional>
#include <vector>

#include "ac/embedding.hpp"
#include "ac/matrix.hpp"

namespace ac {

struct AnchorSet {
    std::size_t k = 0;       // class count
    std::size_t d = 0;       // embedding dimension
    linalg::Matrix anchors;  // k x d, orthonormal rows
    std::uint64_t seed = 0;
};

// Draws a seeded Gaussian k x d matrix and orthonormalizes its rows.
// Deterministic: the same (k, d, seed) always yields identical bits.
AnchorSet generate_anchors(std::size_t k, std::size_t d, std::uint64_t seed);

// Mean cosine between unit embeddings and their class anchor, per class.
// Classes with no samples report std::nullopt.
std::vector<std::optional<double>> anchor_alignment_rows(const linalg::Matrix& unit,
                                                         const std::vector<std::size_t>& labels,
                                                         const AnchorSet& anchors);

inline std::vector<std::optional<double>> anchor_alignment(const EmbeddingBatch& batch,
                                                           const std::vector<std::size_t>& labels,
                                                           const AnchorSet& anchors) {
    return anchor_alignment_rows(batch.unit, labels, anchors);
}

}  // namespace ac
