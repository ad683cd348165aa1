#pragma once

// Command implementations behind the CLI. Each returns a process exit code
// per the contract: 0 ok, 2 config/argument error, 3 I/O error, 4 numeric
// failure, 5 verification failure.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ac/run_config.hpp"
#include "ac/trainer.hpp"

namespace ac {

inline constexpr const char* kArtifactName = "anchor-contrast";
inline constexpr const char* kArtifactVersion = "1.0.0";

int cmd_gen_data(const std::filesystem::path& config_path, const std::filesystem::path& out_path);

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir);

// jobs = 0 means: take ANCHOR_CONTRAST_THREADS if set, else hardware threads.
// A set ANCHOR_CONTRAST_THREADS always wins over an explicit flag.
int cmd_sweep_lr(const std::filesystem::path& config_path, const std::vector<double>& lrs,
                 const std::filesystem::path& out_dir, std::size_t jobs);

struct VerifyArgs {
    std::string kind = "all-equal";  // all-equal | rank1 | perturbed
    std::string loss = "infonce";    // infonce | dcl
    std::size_t n = 8;
    std::size_t d = 5;
    double tol = 1e-8;
    double temperature = 0.5;
    std::uint64_t seed = 1;
    std::filesystem::path out;  // optional report file
};
int cmd_verify(const VerifyArgs& args);

struct DiagnoseArgs {
    std::filesystem::path embeddings_csv;
    std::optional<std::uint64_t> anchors_seed;  // regenerate anchors when given
    std::filesystem::path out;                  // optional report file
};
int cmd_diagnose(const DiagnoseArgs& args);

// Shared serialization, exposed for tests.
void write_metrics_csv(const std::filesystem::path& path, const RunRecord& record);
nlohmann::ordered_json manifest_json(const RunConfig& cfg, const RunRecord& record);

// Maps an in-flight exception to the exit-code contract, printing the message
// to stderr. Call from within a catch block.
int exit_code_for_current_exception();

}  // namespace ac
