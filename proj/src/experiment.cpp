#include "deeepc/experiment.hpp"

#include "deeepc/error.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace deeepc {

namespace {

using nlohmann::json;

void read_train(const json& j, TrainConfig& t)
{
    if (j.contains("alphas")) {
        const auto a = j.at("alphas").get<std::vector<double>>();
        require(a.size() == 4, ErrorCode::InvalidConfig, "train.alphas needs four entries");
        std::copy(a.begin(), a.end(), t.alphas.begin());
    }
    t.auto_balance = j.value("auto_balance", t.auto_balance);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.epochs = j.value("epochs", t.epochs);
    t.lr_nets = j.value("lr_nets", t.lr_nets);
    t.lr_cost = j.value("lr_cost", t.lr_cost);
    t.seed = j.value("seed", t.seed);
    t.n_z = j.value("n_z", t.n_z);
    t.n_v = j.value("n_v", t.n_v);
    if (j.contains("hidden")) t.hidden = j.at("hidden").get<std::vector<Eigen::Index>>();
    t.holdout_fraction = j.value("holdout_fraction", t.holdout_fraction);
}

void read_controller(const json& j, ControllerParams& c)
{
    c.t_ini = j.value("t_ini", c.t_ini);
    c.n_p = j.value("n_p", c.n_p);
    c.lambda = j.value("lambda", c.lambda);
    c.r = j.value("r", c.r);
    c.beta_z = j.value("beta_z", c.beta_z);
    c.beta_g = j.value("beta_g", c.beta_g);
    c.no_slack = j.value("no_slack", c.no_slack);
    c.svd_tol = j.value("svd_tol", c.svd_tol);
    c.track_t = j.value("track_t", c.track_t);
    c.track_r = j.value("track_r", c.track_r);
    c.qp.tol = j.value("qp_tol", c.qp.tol);
    c.qp.max_iter = j.value("qp_max_iter", c.qp.max_iter);
}

} // namespace

void ExperimentConfig::validate() const
{
    plant.validate();
    train.validate();
    controller.validate();
    require(collect.steps >= 1, ErrorCode::InvalidConfig, "collect.steps must be positive");
    require(collect.hankel_rows >= controller.t_ini + controller.n_p && collect.hankel_rows < collect.steps,
            ErrorCode::InvalidConfig, "collect.hankel_rows must cover T_ini + N_p and leave training rows");
    require(train.t_ini == controller.t_ini && train.n_p == controller.n_p, ErrorCode::InvalidConfig,
            "training and controller horizons differ");
    require(!compare.seeds.empty() && compare.steps >= 0 && compare.warmup_steps >= 0, ErrorCode::InvalidConfig,
            "bad compare section");
}

std::string ExperimentConfig::to_json() const
{
    json j;
    j["plant"] = json::parse(plant_spec_to_json(plant));
    j["collect"] = {{"steps", collect.steps}, {"hankel_rows", collect.hankel_rows}, {"seed", collect.seed}};
    j["train"] = {{"alphas", train.alphas},     {"auto_balance", train.auto_balance},
                  {"batch_size", train.batch_size}, {"epochs", train.epochs},
                  {"lr_nets", train.lr_nets},   {"lr_cost", train.lr_cost},
                  {"seed", train.seed},         {"n_z", train.n_z},
                  {"n_v", train.n_v},           {"hidden", train.hidden},
                  {"holdout_fraction", train.holdout_fraction}};
    j["controller"] = {{"t_ini", controller.t_ini},   {"n_p", controller.n_p},
                       {"lambda", controller.lambda}, {"r", controller.r},
                       {"beta_z", controller.beta_z}, {"beta_g", controller.beta_g},
                       {"no_slack", controller.no_slack}, {"svd_tol", controller.svd_tol},
                       {"track_t", controller.track_t}, {"track_r", controller.track_r},
                       {"qp_tol", controller.qp.tol}, {"qp_max_iter", controller.qp.max_iter}};
    j["compare"] = {{"seeds", compare.seeds}, {"steps", compare.steps}, {"warmup_steps", compare.warmup_steps}};
    return j.dump();
}

ExperimentConfig experiment_from_json(const std::string& text)
{
    try {
        const json j = json::parse(text);
        require(j.contains("plant"), ErrorCode::InvalidConfig, "config lacks a plant section");
        const auto& p = j.at("plant");
        ExperimentConfig cfg;
        if (p.is_string())
            cfg = default_experiment(p.get<std::string>());
        else
            cfg.plant = plant_spec_from_json(p.dump());
        if (j.contains("collect")) {
            const auto& c = j.at("collect");
            cfg.collect.steps = c.value("steps", cfg.collect.steps);
            cfg.collect.hankel_rows = c.value("hankel_rows", cfg.collect.hankel_rows);
            cfg.collect.seed = c.value("seed", cfg.collect.seed);
        }
        if (j.contains("train")) read_train(j.at("train"), cfg.train);
        if (j.contains("controller")) read_controller(j.at("controller"), cfg.controller);
        cfg.train.t_ini = cfg.controller.t_ini;
        cfg.train.n_p = cfg.controller.n_p;
        if (j.contains("compare")) {
            const auto& c = j.at("compare");
            if (c.contains("seeds")) cfg.compare.seeds = c.at("seeds").get<std::vector<std::uint64_t>>();
            cfg.compare.steps = c.value("steps", cfg.compare.steps);
            cfg.compare.warmup_steps = c.value("warmup_steps", cfg.compare.warmup_steps);
        }
        cfg.validate();
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("experiment config: ") + e.what());
    }
}

ExperimentConfig load_experiment(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::Io, "cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return experiment_from_json(ss.str());
}

ExperimentConfig default_experiment(const std::string& plant_name)
{
    ExperimentConfig cfg;
    cfg.plant = builtin_benchmark(plant_name);
    if (plant_name == "econ-cstr") {
        // The CSTR data is nonlinear and noisy, so the raw Hankel is full rank; these values
        // drop the noise directions without biasing the predictor much.
        cfg.controller.beta_g = 1e-2;
        cfg.controller.svd_tol = 1e-3;
    }
    cfg.validate();
    return cfg;
}

OpenLoopResult collect_dataset(const ExperimentConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    PlantHandle h(cfg.plant);
    h.reset(cfg.plant.noise_seed ^ (seed * 0x9E3779B97F4A7C15ULL));
    const Eigen::Index order = cfg.controller.t_ini + cfg.controller.n_p + cfg.plant.n_x;
    return generate_openloop(h, cfg.plant.schedule, cfg.collect.steps, seed, cfg.collect.hankel_rows, order);
}

ControllerSetup make_setup(ControllerKind kind, const Dataset& d, const ModelBundle& model,
                           const ExperimentConfig& cfg)
{
    switch (kind) {
    case ControllerKind::Deeepc: return make_deeepc_setup(d, model, cfg.plant, cfg.controller);
    case ControllerKind::Convex: return make_convex_setup(d, model, cfg.plant, cfg.controller);
    case ControllerKind::Tracking: return make_tracking_setup(d, cfg.plant, cfg.controller);
    }
    throw Error(ErrorCode::InvalidConfig, "unknown controller kind");
}

} // namespace deeepc
