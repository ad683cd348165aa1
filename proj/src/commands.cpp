#include "ac/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <semaphore>
#include <thread>

#include "ac/errors.hpp"
#include "ac/rng.hpp"
#include "ac/synthdata.hpp"
#include "ac/theorem.hpp"

namespace ac {

namespace {

using nlohmann::ordered_json;

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) {
    return v ? fmt17(*v) : "nan";
}

ordered_json anchors_to_json(const std::optional<AnchorSet>& anchors) {
    if (!anchors) return nullptr;
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < anchors->k; ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < anchors->d; ++j) row.push_back(anchors->anchors(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

ordered_json row_to_json(const EpochRow& row) {
    ordered_json j;
    j["epoch"] = row.epoch;
    j["loss_total"] = row.loss_total;
    j["loss_contrastive"] = row.loss_contrastive;
    j["loss_cloa"] = row.loss_cloa;
    j["emb_variance"] = row.emb_variance;
    j["emb_variance_raw"] = row.emb_variance_raw;
    j["eff_rank"] = row.eff_rank;
    j["sv_ratio"] = row.sv_ratio;
    j["anchor_acc"] = row.anchor_acc ? ordered_json(*row.anchor_acc) : ordered_json(nullptr);
    j["probe_acc"] = row.probe_acc;
    return j;
}

void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

struct TrainOutputs {
    RunRecord record;
    std::filesystem::path dir;
};

// The full train pipeline shared by cmd_train and the sweep workers.
TrainOutputs run_training(const RunConfig& cfg, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

    const SyntheticDataset dataset = generate_clusters(
        cfg.data.k, cfg.data.per_cluster, cfg.data.d, cfg.data.noise_sigma, cfg.data.seed);
    write_dataset_csv(out_dir / "dataset.csv", dataset);

    RunRecord record = train(dataset, cfg.train);
    write_metrics_csv(out_dir / "metrics.csv", record);
    if (!record.aborted) {
        write_points_csv(out_dir / "embeddings.csv", record.final_embeddings, dataset.labels);
    }
    write_json_file(out_dir / "manifest.json", manifest_json(cfg, record));
    return TrainOutputs{std::move(record), out_dir};
}

std::size_t resolve_jobs(std::size_t flag_jobs) {
    if (const char* env = std::getenv("ANCHOR_CONTRAST_THREADS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return v;
        throw ConfigError("ANCHOR_CONTRAST_THREADS must be a positive integer");
    }
    if (flag_jobs >= 1) return flag_jobs;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw >= 1 ? hw : 1;
}

std::string lr_dir_name(double lr) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "run_lr_%g", lr);
    return buf;
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, const RunRecord& record) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << "epoch,loss_total,loss_contrastive,loss_cloa,emb_variance,eff_rank,sv_ratio,"
           "anchor_acc,probe_acc,wall_ms\n";
    for (const EpochRow& r : record.rows) {
        out << r.epoch << ',' << fmt17(r.loss_total) << ',' << fmt17(r.loss_contrastive) << ','
            << fmt17(r.loss_cloa) << ',' << fmt17(r.emb_variance) << ',' << fmt17(r.eff_rank)
            << ',' << fmt17(r.sv_ratio) << ',' << fmt_opt(r.anchor_acc) << ','
            << fmt17(r.probe_acc) << ',' << fmt17(r.wall_ms) << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

ordered_json manifest_json(const RunConfig& cfg, const RunRecord& record) {
    ordered_json j;
    j["artifact"] = kArtifactName;
    j["version"] = kArtifactVersion;
    j["config"] = run_config_to_json(cfg);
    j["status"] = record.aborted ? "aborted" : "ok";
    if (record.aborted) {
        j["abort_epoch"] = record.abort_epoch;
        j["abort_message"] = record.abort_message;
    }
    j["epochs"] = record.rows.empty() ? 0 : record.rows.back().epoch;
    std::size_t labeled = 0;
    for (bool b : record.label_mask) labeled += b ? 1 : 0;
    j["labeled_samples"] = labeled;
    j["anchors"] = anchors_to_json(record.anchors);
    j["final_metrics"] = record.rows.empty() ? ordered_json(nullptr)
                                             : row_to_json(record.rows.back());
    return j;
}

int cmd_gen_data(const std::filesystem::path& config_path,
                 const std::filesystem::path& out_path) {
    const RunConfig cfg = load_run_config(config_path);
    const SyntheticDataset dataset = generate_clusters(
        cfg.data.k, cfg.data.per_cluster, cfg.data.d, cfg.data.noise_sigma, cfg.data.seed);
    write_dataset_csv(out_path, dataset);
    std::cout << "wrote " << dataset.points.rows() << " points (" << cfg.data.k
              << " clusters, d=" << cfg.data.d << ") to " << out_path.string() << '\n';
    return 0;
}

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
    const RunConfig cfg = load_run_config(config_path);
    const TrainOutputs outputs = run_training(cfg, out_dir);
    const RunRecord& record = outputs.record;
    if (record.aborted) {
        std::cerr << "run aborted at epoch " << record.abort_epoch << ": "
                  << record.abort_message << '\n';
        return 4;
    }
    const EpochRow& last = record.rows.back();
    std::cout << "finished " << cfg.loss_name << " after " << last.epoch
              << " epochs: emb_variance=" << last.emb_variance << " sv_ratio=" << last.sv_ratio
              << " probe_acc=" << last.probe_acc << " anchor_acc=" << fmt_opt(last.anchor_acc)
              << '\n';
    return 0;
}

int cmd_sweep_lr(const std::filesystem::path& config_path, const std::vector<double>& lrs,
                 const std::filesystem::path& out_dir, std::size_t jobs) {
    if (lrs.size() < 2) throw ConfigError("sweep needs at least 2 learning rates");
    const RunConfig base_cfg = load_run_config(config_path);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir.string() + ": " + ec.message());

    struct SweepRow {
        double lr = 0.0;
        std::optional<EpochRow> final_row;
        std::string status = "ok";
    };

    const std::size_t parallel = std::min(resolve_jobs(jobs), lrs.size());
    std::counting_semaphore<64> slots(static_cast<std::ptrdiff_t>(std::min<std::size_t>(parallel, 64)));

    auto worker = [&](double lr) -> SweepRow {
        slots.acquire();
        SweepRow row;
        row.lr = lr;
        try {
            RunConfig cfg = base_cfg;
            cfg.train.learning_rate = lr;
            const TrainOutputs outputs = run_training(cfg, out_dir / lr_dir_name(lr));
            if (outputs.record.aborted) {
                row.status = "nonfinite";
            } else {
                row.final_row = outputs.record.rows.back();
            }
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
        slots.release();
        return row;
    };

    std::vector<std::future<SweepRow>> futures;
    futures.reserve(lrs.size());
    for (double lr : lrs) futures.push_back(std::async(std::launch::async, worker, lr));

    std::ofstream out(out_dir / "summary.csv");
    if (!out) throw IoError("cannot open for writing: " + (out_dir / "summary.csv").string());
    out << "lr,final_variance,final_sv_ratio,final_probe_acc,final_anchor_acc,status\n";
    for (auto& f : futures) {
        const SweepRow row = f.get();
        out << fmt17(row.lr) << ',';
        if (row.final_row) {
            out << fmt17(row.final_row->emb_variance) << ',' << fmt17(row.final_row->sv_ratio)
                << ',' << fmt17(row.final_row->probe_acc) << ','
                << fmt_opt(row.final_row->anchor_acc);
        } else {
            out << "nan,nan,nan,nan";
        }
        // Commas inside error messages would break the CSV; flatten them.
        std::string status = row.status;
        std::replace(status.begin(), status.end(), ',', ';');
        out << ',' << status << '\n';
        std::cout << "lr=" << row.lr << " -> " << status << '\n';
    }
    if (!out) throw IoError("write failed: " + (out_dir / "summary.csv").string());
    return 0;
}

int cmd_verify(const VerifyArgs& args) {
    if (args.kind != "all-equal" && args.kind != "rank1" && args.kind != "perturbed") {
        throw ConfigError("verify kind must be all-equal, rank1, or perturbed");
    }
    const BaseLoss loss = parse_base_loss(args.loss);
    if (loss != BaseLoss::InfoNce && loss != BaseLoss::Dcl) {
        throw UnsupportedLossError("verify supports infonce and dcl only");
    }
    LossConfig loss_cfg;
    loss_cfg.temperature = args.temperature;

    ZeroGradReport report;
    if (args.kind == "all-equal") {
        report = verify_zero_gradient(make_equal_config(args.n, args.d, args.seed), loss,
                                      loss_cfg, args.tol);
    } else if (args.kind == "rank1") {
        report = verify_zero_gradient(make_rank1_config(args.n, args.d, args.seed), loss,
                                      loss_cfg, args.tol);
    } else {
        const DegenerateConfig cfg = make_rank1_config(args.n, args.d, args.seed);
        report = verify_zero_gradient(perturb_off_line(cfg, 1e-2, derive_seed(args.seed, 99)),
                                      loss, loss_cfg, args.tol);
    }

    ordered_json j;
    j["kind"] = args.kind;
    j["loss"] = args.loss;
    j["n"] = args.n;
    j["d"] = args.d;
    j["temperature"] = args.temperature;
    j["seed"] = args.seed;
    j["tol"] = report.tol;
    j["loss_value"] = report.loss_value;
    j["grad_unit_max_norm"] = report.grad_unit_max_norm;
    j["grad_raw_max_norm"] = report.grad_raw_max_norm;
    j["parallelism_residual"] = report.parallelism_residual;
    j["beta_estimates"] = report.beta_estimates;
    j["pass"] = report.pass;
    std::cout << j.dump(2) << '\n';
    if (!args.out.empty()) write_json_file(args.out, j);
    return report.pass ? 0 : 5;
}

int cmd_diagnose(const DiagnoseArgs& args) {
    const LabeledPoints data = read_points_csv(args.embeddings_csv);
    if (data.points.rows() < 2) throw ConfigError("diagnosis needs at least 2 rows");

    std::optional<AnchorSet> anchors;
    if (args.anchors_seed) {
        std::size_t k = 0;
        for (std::size_t y : data.labels) k = std::max(k, y + 1);
        anchors = generate_anchors(k, data.points.cols(), *args.anchors_seed);
    }
    const DiagnosticsSnapshot snap =
        make_snapshot(data.points, data.labels, anchors ? &*anchors : nullptr);

    ordered_json j;
    j["emb_variance"] = snap.emb_variance;
    j["emb_variance_raw"] = snap.emb_variance_raw;
    j["eff_rank"] = snap.eff_rank;
    j["sv_ratio"] = snap.sv_ratio;
    j["anchor_acc"] = snap.anchor_acc ? ordered_json(*snap.anchor_acc) : ordered_json(nullptr);
    j["probe_acc"] = snap.probe_acc;
    ordered_json alignment = ordered_json::array();
    for (const auto& a : snap.per_class_alignment) {
        alignment.push_back(a ? ordered_json(*a) : ordered_json(nullptr));
    }
    j["per_class_alignment"] = std::move(alignment);
    std::cout << j.dump(2) << '\n';
    if (!args.out.empty()) write_json_file(args.out, j);
    return 0;
}

int exit_code_for_current_exception() {
    try {
        throw;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const UnsupportedLossError& e) {
        std::cerr << "config error: unsupported loss: " << e.what() << '\n';
        return 2;
    } catch (const TooManyClassesError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const LabelOutOfRangeError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const BatchTooSmallError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const MissingClassError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace ac
