#pragma once

// A batch of embeddings paired off into positive pairs. Rows i and pair_map[i]
// are the two augmented views of the same underlying sample. The raw matrix
// holds pre-normalization network outputs; unit holds the row-normalized copy
// that the contrastive losses consume.

#include <cstddef>
#include <utility>
#include <vector>

#include "ac/errors.hpp"
#include "ac/matrix.hpp"

namespace ac {

struct EmbeddingBatch {
    linalg::Matrix raw;            // N x d, pre-normalization
    linalg::Matrix unit;           // N x d, rows of raw scaled to unit norm
    std::vector<std::size_t> pair_map;  // involution without fixed points

    EmbeddingBatch(linalg::Matrix raw_in, std::vector<std::size_t> pairs)
        : raw(std::move(raw_in)),
          unit(linalg::normalize_rows(raw)),
          pair_map(std::move(pairs)) {
        validate();
    }

    [[nodiscard]] std::size_t size() const { return raw.rows(); }
    [[nodiscard]] std::size_t dim() const { return raw.cols(); }

private:
    void validate() const {
        const std::size_t n = raw.rows();
        if (n < 4 || n % 2 != 0) {
            throw BatchTooSmallError("embedding batch needs an even size of at least 4");
        }
        if (pair_map.size() != n) {
            throw DimensionMismatchError("pair_map length does not match batch size");
        }
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j = pair_map[i];
            if (j >= n || j == i || pair_map[j] != i) {
                throw DimensionMismatchError("pair_map is not a fixed-point-free involution");
            }
        }
    }
};

// The canonical pairing used throughout: row i pairs with row i + N/2.
inline std::vector<std::size_t> half_split_pairs(std::size_t n) {
    std::vector<std::size_t> p(n);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i < n; ++i) p[i] = (i + half) % n;
    return p;
}

// Adjacent pairing: rows 2k and 2k+1 are a positive pair.
inline std::vector<std::size_t> adjacent_pairs(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i + 1 < n; i += 2) {
        p[i] = i + 1;
        p[i + 1] = i;
    }
    return p;
}

}  // namespace ac
