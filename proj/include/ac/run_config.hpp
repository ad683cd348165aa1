#pragma once

// JSON run configuration. An empty object {} is a complete config and runs
// the default three-cluster experiment; any section and any key may be given
// alone. Unknown keys are rejected with an error naming the key.
//
// Schema (defaults in parentheses):
//   data:    k (3), per_cluster (100), d (3), noise_sigma (0.05),
//            aug_sigma (0.05), seed (7)
//   model:   h1 (64), h2 (64), out_dim (3)
//   train:   lr (1.0), steps (2000), batch_size (64), seed (1234),
//            label_fraction (0.1)
//   loss:    name ("infonce"; one of infonce, dcl, vicreg, barlow or their
//            cloa- prefixed variants), temperature (0.5), cloa_weight (1.0),
//            vicreg_weights ([25, 25, 1]), vicreg_gamma (1.0),
//            vicreg_eps (1e-4), bt_lambda (5e-3)
//   anchors: seed (5)

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ac/trainer.hpp"

namespace ac {

struct DataConfig {
    std::size_t k = 3;
    std::size_t per_cluster = 100;
    std::size_t d = 3;
    double noise_sigma = 0.05;
    double aug_sigma = 0.05;
    std::uint64_t seed = 7;
};

struct RunConfig {
    DataConfig data;
    TrainConfig train;      // also carries model dims, loss selector, anchor seed
    std::string loss_name = "infonce";
};

RunConfig parse_run_config(const nlohmann::json& root);

// Empty path yields the all-defaults config. Missing or unreadable files are
// I/O errors; malformed JSON and schema violations are config errors.
RunConfig load_run_config(const std::filesystem::path& path);

// Full echo with every default expanded, in schema order.
nlohmann::ordered_json run_config_to_json(const RunConfig& cfg);

}  // namespace ac
