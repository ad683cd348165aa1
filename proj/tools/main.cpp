// anchor-contrast: contrastive-loss laboratory on synthetic cluster data.
// Subcommands: gen-data, train, sweep-lr, verify, diagnose.

#include <cstdint>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ac/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"anchor-contrast: contrastive losses, collapse diagnostics, and "
                 "orthonormal-anchor training on synthetic cluster data"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;

    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic cluster dataset as CSV");
    gen->add_option("--config", config_path, "JSON config file ({} and omission mean defaults)");
    gen->add_option("--out", out_path, "Output CSV path")->required();

    auto* train = app.add_subcommand("train", "Train the encoder and write metrics + manifest");
    train->add_option("--config", config_path, "JSON config file");
    train->add_option("--out", out_path, "Output directory")->required();

    std::vector<double> lrs;
    std::size_t jobs = 0;
    auto* sweep = app.add_subcommand("sweep-lr", "Run one training per learning rate");
    sweep->add_option("--config", config_path, "JSON config file");
    sweep->add_option("--out", out_path, "Output directory")->required();
    sweep->add_option("--lrs", lrs, "Learning rates (at least 2)")->required()->expected(2, 64);
    sweep->add_option("--jobs", jobs, "Max parallel runs (default: cores; "
                                      "ANCHOR_CONTRAST_THREADS overrides)");

    ac::VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "Zero-gradient check on a degenerate batch");
    verify->add_option("--kind", verify_args.kind, "all-equal | rank1 | perturbed");
    verify->add_option("--loss", verify_args.loss, "infonce | dcl");
    verify->add_option("--n", verify_args.n, "Batch size (even, >= 4)");
    verify->add_option("--d", verify_args.d, "Embedding dimension (>= 2)");
    verify->add_option("--tol", verify_args.tol, "Pass tolerance on the raw-gradient norm");
    verify->add_option("--temperature", verify_args.temperature, "Softmax temperature");
    verify->add_option("--seed", verify_args.seed, "Configuration seed");
    std::string verify_out;
    verify->add_option("--out", verify_out, "Also write the JSON report here");

    std::string embeddings_csv;
    std::uint64_t anchors_seed = 0;
    bool anchors_seed_given = false;
    std::string diagnose_out;
    auto* diagnose = app.add_subcommand("diagnose", "Metrics snapshot of an embeddings CSV");
    diagnose->add_option("--embeddings", embeddings_csv, "Embeddings CSV (x0..x{d-1},label)")
        ->required();
    diagnose->add_option("--anchors-seed", anchors_seed, "Recreate the anchor set from this seed")
        ->each([&](const std::string&) { anchors_seed_given = true; });
    diagnose->add_option("--out", diagnose_out, "Also write the JSON report here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;  // help/version exit 0, bad arguments exit 2
    }

    try {
        if (gen->parsed()) return ac::cmd_gen_data(config_path, out_path);
        if (train->parsed()) return ac::cmd_train(config_path, out_path);
        if (sweep->parsed()) return ac::cmd_sweep_lr(config_path, lrs, out_path, jobs);
        if (verify->parsed()) {
            verify_args.out = verify_out;
            return ac::cmd_verify(verify_args);
        }
        if (diagnose->parsed()) {
            ac::DiagnoseArgs args;
            args.embeddings_csv = embeddings_csv;
            if (anchors_seed_given) args.anchors_seed = anchors_seed;
            args.out = diagnose_out;
            return ac::cmd_diagnose(args);
        }
    } catch (...) {
        return ac::exit_code_for_current_exception();
    }
    return 2;
}
