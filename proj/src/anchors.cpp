#include "ac/anchors.hpp"

#include "ac/errors.hpp"
#include "ac/rng.hpp"

namespace ac {

AnchorSet generate_anchors(std::size_t k, std::size_t d, std::uint64_t seed) {
    if (k < 1) throw ConfigError("anchor count must be at least 1");
    if (k > d) throw TooManyClassesError(k, d);
    Rng rng(seed);
    linalg::Matrix g(k, d);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < d; ++j) g(i, j) = rng.gaussian();
    return AnchorSet{k, d, linalg::orthonormalize(g), seed};
}

std::vector<std::optional<double>> anchor_alignment_rows(const linalg::Matrix& unit,
                                                         const std::vector<std::size_t>& labels,
                                                         const AnchorSet& anchors) {
    if (labels.size() != unit.rows()) {
        throw DimensionMismatchError("label count does not match row count");
    }
    if (unit.cols() != anchors.d) {
        throw DimensionMismatchError("embedding dimension does not match anchor dimension");
    }
    std::vector<double> sums(anchors.k, 0.0);
    std::vector<std::size_t> counts(anchors.k, 0);
    for (std::size_t i = 0; i < unit.rows(); ++i) {
        const std::size_t y = labels[i];
        if (y >= anchors.k) throw LabelOutOfRangeError(y, anchors.k);
        sums[y] += linalg::dot(unit.row(i), anchors.anchors.row(y));
        counts[y] += 1;
    }
    std::vector<std::optional<double>> out(anchors.k);
    for (std::size_t c = 0; c < anchors.k; ++c) {
        if (counts[c] > 0) out[c] = sums[c] / static_cast<double>(counts[c]);
    }
    return out;
}

}  // namespace ac
