#include "ac/run_config.hpp"

#include <fstream>
#include <set>

#include "ac/errors.hpp"

namespace ac {

namespace {

using nlohmann::json;

double get_double(const json& v, const std::string& ctx) {
    if (!v.is_number()) throw ConfigError(ctx + " must be a number");
    return v.get<double>();
}

std::size_t get_count(const json& v, const std::string& ctx) {
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::size_t>();
    throw ConfigError(ctx + " must be a non-negative integer");
}

std::uint64_t get_seed(const json& v, const std::string& ctx) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::uint64_t>();
    throw ConfigError(ctx + " must be a non-negative integer");
}

std::string get_string(const json& v, const std::string& ctx) {
    if (!v.is_string()) throw ConfigError(ctx + " must be a string");
    return v.get<std::string>();
}

// Tracks which keys of a section were consumed, so leftovers can be named.
class Section {
public:
    Section(const json* j, std::string name) : j_(j), name_(std::move(name)) {
        if (j_ != nullptr && !j_->is_object()) {
            throw ConfigError("section '" + name_ + "' must be an object");
        }
    }

    const json* find(const char* key) {
        if (j_ == nullptr || !j_->contains(key)) return nullptr;
        used_.insert(key);
        return &j_->at(key);
    }

    std::string context(const char* key) const { return name_ + "." + key; }

    void finish() const {
        if (j_ == nullptr) return;
        for (const auto& item : j_->items()) {
            if (!used_.contains(item.key())) {
                throw ConfigError("unknown key '" + item.key() + "' in section '" + name_ + "'");
            }
        }
    }

private:
    const json* j_;
    std::string name_;
    std::set<std::string> used_;
};

void apply_loss_name(RunConfig& cfg, const std::string& name) {
    cfg.loss_name = name;
    std::string base = name;
    cfg.train.use_cloa = false;
    if (name.rfind("cloa-", 0) == 0) {
        cfg.train.use_cloa = true;
        base = name.substr(5);
    }
    cfg.train.base = parse_base_loss(base);  // throws UnsupportedLossError on junk
}

}  // namespace

RunConfig parse_run_config(const json& root) {
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    RunConfig cfg;

    std::set<std::string> top_used;
    auto section = [&](const char* name) -> const json* {
        if (root.contains(name)) {
            top_used.insert(name);
            return &root.at(name);
        }
        return nullptr;
    };

    {
        Section s(section("data"), "data");
        if (const json* v = s.find("k")) cfg.data.k = get_count(*v, s.context("k"));
        if (const json* v = s.find("per_cluster")) {
            cfg.data.per_cluster = get_count(*v, s.context("per_cluster"));
        }
        if (const json* v = s.find("d")) cfg.data.d = get_count(*v, s.context("d"));
        if (const json* v = s.find("noise_sigma")) {
            cfg.data.noise_sigma = get_double(*v, s.context("noise_sigma"));
        }
        if (const json* v = s.find("aug_sigma")) {
            cfg.data.aug_sigma = get_double(*v, s.context("aug_sigma"));
        }
        if (const json* v = s.find("seed")) cfg.data.seed = get_seed(*v, s.context("seed"));
        s.finish();
    }
    {
        Section s(section("model"), "model");
        if (const json* v = s.find("h1")) cfg.train.h1 = get_count(*v, s.context("h1"));
        if (const json* v = s.find("h2")) cfg.train.h2 = get_count(*v, s.context("h2"));
        if (const json* v = s.find("out_dim")) {
            cfg.train.out_dim = get_count(*v, s.context("out_dim"));
        }
        s.finish();
    }
    {
        Section s(section("train"), "train");
        if (const json* v = s.find("lr")) {
            cfg.train.learning_rate = get_double(*v, s.context("lr"));
        }
        if (const json* v = s.find("steps")) cfg.train.steps = get_count(*v, s.context("steps"));
        if (const json* v = s.find("batch_size")) {
            cfg.train.batch_size = get_count(*v, s.context("batch_size"));
        }
        if (const json* v = s.find("seed")) cfg.train.seed = get_seed(*v, s.context("seed"));
        if (const json* v = s.find("label_fraction")) {
            cfg.train.label_fraction = get_double(*v, s.context("label_fraction"));
        }
        s.finish();
    }
    {
        Section s(section("loss"), "loss");
        if (const json* v = s.find("name")) {
            apply_loss_name(cfg, get_string(*v, s.context("name")));
        }
        if (const json* v = s.find("temperature")) {
            cfg.train.loss.temperature = get_double(*v, s.context("temperature"));
        }
        if (const json* v = s.find("cloa_weight")) {
            cfg.train.loss.cloa_weight = get_double(*v, s.context("cloa_weight"));
        }
        if (const json* v = s.find("vicreg_weights")) {
            if (!v->is_array() || v->size() != 3) {
                throw ConfigError("loss.vicreg_weights must be an array of 3 numbers");
            }
            cfg.train.loss.vicreg_sim_weight = get_double((*v)[0], "loss.vicreg_weights[0]");
            cfg.train.loss.vicreg_var_weight = get_double((*v)[1], "loss.vicreg_weights[1]");
            cfg.train.loss.vicreg_cov_weight = get_double((*v)[2], "loss.vicreg_weights[2]");
        }
        if (const json* v = s.find("vicreg_gamma")) {
            cfg.train.loss.vicreg_gamma = get_double(*v, s.context("vicreg_gamma"));
        }
        if (const json* v = s.find("vicreg_eps")) {
            cfg.train.loss.vicreg_eps = get_double(*v, s.context("vicreg_eps"));
        }
        if (const json* v = s.find("bt_lambda")) {
            cfg.train.loss.bt_lambda = get_double(*v, s.context("bt_lambda"));
        }
        s.finish();
    }
    {
        Section s(section("anchors"), "anchors");
        if (const json* v = s.find("seed")) {
            cfg.train.anchor_seed = get_seed(*v, s.context("seed"));
        }
        s.finish();
    }

    for (const auto& item : root.items()) {
        if (!top_used.contains(item.key())) {
            throw ConfigError("unknown key '" + item.key() + "' at config top level");
        }
    }

    cfg.train.aug_sigma = cfg.data.aug_sigma;
    cfg.train.validate();
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (path.empty()) return parse_run_config(json::object());
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path.string());
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    return parse_run_config(root);
}

nlohmann::ordered_json run_config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["data"] = {{"k", cfg.data.k},
                 {"per_cluster", cfg.data.per_cluster},
                 {"d", cfg.data.d},
                 {"noise_sigma", cfg.data.noise_sigma},
                 {"aug_sigma", cfg.data.aug_sigma},
                 {"seed", cfg.data.seed}};
    j["model"] = {{"h1", cfg.train.h1}, {"h2", cfg.train.h2}, {"out_dim", cfg.train.out_dim}};
    j["train"] = {{"lr", cfg.train.learning_rate},
                  {"steps", cfg.train.steps},
                  {"batch_size", cfg.train.batch_size},
                  {"seed", cfg.train.seed},
                  {"label_fraction", cfg.train.label_fraction}};
    j["loss"] = {{"name", cfg.loss_name},
                 {"temperature", cfg.train.loss.temperature},
                 {"cloa_weight", cfg.train.loss.cloa_weight},
                 {"vicreg_weights",
                  {cfg.train.loss.vicreg_sim_weight, cfg.train.loss.vicreg_var_weight,
                   cfg.train.loss.vicreg_cov_weight}},
                 {"vicreg_gamma", cfg.train.loss.vicreg_gamma},
                 {"vicreg_eps", cfg.train.loss.vicreg_eps},
                 {"bt_lambda", cfg.train.loss.bt_lambda}};
    j["anchors"] = {{"seed", cfg.train.anchor_seed}};
    return j;
}

}  // namespace ac
