#pragma once

// Synthetic benchmark: k labeled clusters hugging rank-1 lines inside the unit
// ball, the negate-and-noise augmentation that makes a positive pair, and CSV
// round-tripping for datasets and embedding dumps.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ac/matrix.hpp"

namespace ac {

struct SyntheticDataset {
    linalg::Matrix points;              // N x d, N = k * per_cluster, cluster-major order
    std::vector<std::size_t> labels;    // cluster index per row
    linalg::Matrix cluster_dirs;        // k x d, unit rows
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

// Cluster directions are resampled until every pair of lines is at least 30
// degrees apart (sign-insensitive). Each point is sign * magnitude * dir plus
// Gaussian noise, with magnitude uniform in [0.3, 1] and a fair random sign;
// points that leave the unit ball are radially rescaled onto it.
SyntheticDataset generate_clusters(std::size_t k, std::size_t per_cluster, std::size_t d,
                                   double noise_sigma, std::uint64_t seed);

// output[i] = -points[i] + noise, noise ~ N(0, aug_sigma^2 I). Deterministic
// per seed.
linalg::Matrix augment_negate(const linalg::Matrix& points, double aug_sigma,
                              std::uint64_t seed);

struct LabeledPoints {
    linalg::Matrix points;
    std::vector<std::size_t> labels;
};

// CSV schema: header x0,...,x{d-1},label; floats with 17 significant digits so
// values survive a round trip bit-exactly.
void write_points_csv(const std::filesystem::path& path, const linalg::Matrix& points,
                      const std::vector<std::size_t>& labels);
LabeledPoints read_points_csv(const std::filesystem::path& path);

inline void write_dataset_csv(const std::filesystem::path& path, const SyntheticDataset& ds) {
    write_points_csv(path, ds.points, ds.labels);
}

}  // namespace ac
