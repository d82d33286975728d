#include "cli.hpp"

#include "deeepc/basis.hpp"
#include "deeepc/controller.hpp"
#include "deeepc/error.hpp"
#include "deeepc/experiment.hpp"
#include "deeepc/lti.hpp"
#include "deeepc/model.hpp"
#include "deeepc/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace deeepc::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config;
    std::string plant;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string data;
    std::string model;
    std::string surrogate;
    std::string controller = "deeepc";
    std::optional<Eigen::Index> steps;
    bool dump_hankel = false;
    bool no_slack = false;
    Eigen::Index quad_nodes = 0;
};

void write_text(const fs::path& p, const std::string& text)
{
    std::ofstream f(p);
    require(f.good(), ErrorCode::Io, "cannot write " + p.string());
    f << text;
    if (text.empty() || text.back() != '\n') f << '\n';
}

std::string read_text(const fs::path& p)
{
    std::ifstream f(p);
    require(f.good(), ErrorCode::Io, "cannot open " + p.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

ExperimentConfig resolve_config(const Options& o)
{
    if (!o.config.empty()) {
        if (!fs::exists(o.config)) throw UsageError("config file not found: " + o.config);
        auto cfg = load_experiment(o.config);
        if (!o.plant.empty() && o.plant != cfg.plant.name)
            throw UsageError("--plant " + o.plant + " conflicts with the config's plant " + cfg.plant.name);
        if (o.no_slack) cfg.controller.no_slack = true;
        return cfg;
    }
    auto cfg = default_experiment(o.plant.empty() ? "econ-cstr" : o.plant);
    if (o.no_slack) cfg.controller.no_slack = true;
    return cfg;
}

fs::path input_path(const std::string& given, const fs::path& fallback, const char* what)
{
    const fs::path p = given.empty() ? fallback : fs::path(given);
    if (!fs::exists(p)) throw UsageError(std::string(what) + " not found: " + p.string());
    return p;
}

Dataset load_dataset(const ExperimentConfig& cfg, const fs::path& path)
{
    return load_csv(path, schema_for(cfg.plant, cfg.collect.hankel_rows));
}

fs::path ensure_out(const Options& o)
{
    fs::create_directories(o.out);
    return fs::path(o.out);
}

// ---- collect ------------------------------------------------------------

ordered_json do_collect(const ExperimentConfig& cfg, std::uint64_t seed, const fs::path& out)
{
    const auto res = collect_dataset(cfg, seed);
    save_csv(out / "dataset.csv", res.dataset, schema_for(cfg.plant, cfg.collect.hankel_rows));
    ordered_json prov = {{"plant", cfg.plant.name},
                         {"seed", seed},
                         {"steps", cfg.collect.steps},
                         {"hankel_rows", cfg.collect.hankel_rows},
                         {"schedule",
                          {{"hold", cfg.plant.schedule.hold}, {"noise_std", cfg.plant.schedule.noise_std}}},
                         {"excitation",
                          {{"order", res.excitation_order},
                           {"rank", res.excitation.rank},
                           {"exciting", res.excitation.exciting}}},
                         {"config_hash", fnv1a_hex(cfg.to_json())}};
    write_text(out / "provenance.json", prov.dump(2));
    return prov;
}

int cmd_collect(const Options& o, std::ostream& out)
{
    auto cfg = resolve_config(o);
    if (o.steps) cfg.collect.steps = *o.steps;
    require(cfg.collect.steps >= 1, ErrorCode::InvalidConfig, "--steps must be positive");
    if (cfg.collect.hankel_rows >= cfg.collect.steps) cfg.collect.hankel_rows = cfg.collect.steps / 2;
    cfg.validate();
    const auto prov = do_collect(cfg, o.seed.value_or(cfg.collect.seed), ensure_out(o));
    out << "collected " << cfg.collect.steps << " rows, excitation rank " << prov["excitation"]["rank"] << "\n";
    return kExitOk;
}

// ---- train --------------------------------------------------------------

ordered_json report_json(const TrainReport& r)
{
    return {{"epochs", static_cast<Eigen::Index>(r.epochs.size()) - 1},
            {"initial_loss", r.epochs.front().total},
            {"final_loss", r.epochs.back().total},
            {"alphas", r.alphas},
            {"holdout_mse", r.holdout_mse},
            {"holdout_r2", r.holdout_r2},
            {"holdout_normalized_mse", r.holdout_normalized_mse},
            {"willems_rank_deficient", r.willems_rank_deficient},
            {"reverted_to_best", r.reverted_to_best},
            {"warnings", r.warnings}};
}

ordered_json do_train(const ExperimentConfig& cfg, const Dataset& d, const fs::path& out)
{
    auto tc = cfg.train;
    auto lifted = train(d, tc);
    lifted.model.config_json = cfg.to_json();
    lifted.model.save(out / "model.bin");
    write_train_report_csv(out / "train_report.csv", lifted.report);

    auto raw = fit_raw_surrogate(d, tc);
    raw.model.config_json = cfg.to_json();
    raw.model.save(out / "surrogate.bin");
    write_train_report_csv(out / "surrogate_report.csv", raw.report);

    ordered_json j = {{"model", report_json(lifted.report)},
                      {"surrogate", report_json(raw.report)},
                      {"config_hash", fnv1a_hex(cfg.to_json())}};
    write_text(out / "train_summary.json", j.dump(2));
    return j;
}

int cmd_train(const Options& o, std::ostream& out)
{
    auto cfg = resolve_config(o);
    if (o.seed) cfg.train.seed = *o.seed;
    const auto outdir = ensure_out(o);
    const auto d = load_dataset(cfg, input_path(o.data, outdir / "dataset.csv", "dataset"));
    const auto j = do_train(cfg, d, outdir);
    out << "trained: holdout R2 " << j["model"]["holdout_r2"] << ", surrogate holdout R2 "
        << j["surrogate"]["holdout_r2"] << "\n";
    return kExitOk;
}

// ---- run / compare ------------------------------------------------------

ModelBundle model_for(ControllerKind kind, const Options& o, const fs::path& dir)
{
    if (kind == ControllerKind::Deeepc) return ModelBundle::load(input_path(o.model, dir / "model.bin", "model bundle"));
    if (kind == ControllerKind::Convex)
        return ModelBundle::load(input_path(o.surrogate, dir / "surrogate.bin", "surrogate bundle"));
    return {};
}

void write_plot_csv(const fs::path& p, const std::vector<ClosedLoopRecord>& recs)
{
    std::ofstream f(p);
    require(f.good(), ErrorCode::Io, "cannot write " + p.string());
    f << "k,cost";
    const Eigen::Index ny = recs.empty() ? 0 : recs[0].y.size();
    for (Eigen::Index i = 0; i < ny; ++i) f << ",y" << i;
    f << "\n";
    for (const auto& r : recs) {
        f << r.k << ',' << format_double(r.cost);
        for (Eigen::Index i = 0; i < ny; ++i) f << ',' << format_double(r.y(i));
        f << "\n";
    }
}

ClosedLoopRun run_one(const ControllerSetup& setup, const ExperimentConfig& cfg, Eigen::Index steps,
                      std::uint64_t seed, const fs::path& dir, const std::string& tag)
{
    WarmupSpec w;
    w.policy = WarmupPolicy::Pid;
    w.steps = cfg.compare.warmup_steps;
    auto run = run_closed_loop(setup, cfg.plant, w, steps, seed);
    write_trace_csv(dir / ("trace_" + tag + ".csv"), run.records);
    write_timing_csv(dir / ("timing_" + tag + ".csv"), run.records);
    write_plot_csv(dir / ("plot_" + tag + ".csv"), run.records);
    write_text(dir / ("summary_" + tag + ".json"), summary_json(run.summary, true));
    if (!run.events.empty()) {
        std::string ev;
        for (const auto& e : run.events) ev += e + "\n";
        write_text(dir / ("events_" + tag + ".log"), ev);
    }
    return run;
}

void dump_hankel(const ControllerSetup& s, const fs::path& dir, const std::string& tag)
{
    write_matrix_csv(dir / ("hankel_full_" + tag + ".csv"), s.blocks.full.stacked());
    write_matrix_csv(dir / ("hankel_active_" + tag + ".csv"), s.blocks.active().stacked());
}

ControllerKind parse_kind(const std::string& name)
{
    try {
        return controller_kind_from_name(name);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

int cmd_run(const Options& o, std::ostream& out)
{
    auto cfg = resolve_config(o);
    const auto kind = parse_kind(o.controller);
    const auto dir = ensure_out(o);
    const auto d = load_dataset(cfg, input_path(o.data, dir / "dataset.csv", "dataset"));
    const auto setup = make_setup(kind, d, model_for(kind, o, dir), cfg);
    if (o.dump_hankel) dump_hankel(setup, dir, to_string(kind));
    const Eigen::Index steps = o.steps.value_or(cfg.compare.steps);
    require(steps >= 0, ErrorCode::InvalidConfig, "--steps must be nonnegative");
    const auto run = run_one(setup, cfg, steps, o.seed.value_or(cfg.compare.seeds.front()), dir, to_string(kind));
    out << to_string(kind) << ": avg_cost " << format_double(run.summary.avg_cost) << ", violation_rate "
        << format_double(run.summary.violation_rate) << "\n";
    return kExitOk;
}

ordered_json do_compare(const ExperimentConfig& cfg, const Dataset& d, const ModelBundle& model,
                        const ModelBundle& surrogate, const std::vector<std::uint64_t>& seeds, Eigen::Index steps,
                        const fs::path& dir, bool hankel)
{
    ordered_json table = ordered_json::object();
    std::ofstream csv(dir / "comparison.csv");
    require(csv.good(), ErrorCode::Io, "cannot write comparison.csv");
    csv << "controller,seed,avg_cost,violation_rate,surrogate_violation_rate,fallbacks,mean_solve_ms,p99_solve_ms\n";
    for (auto kind : {ControllerKind::Deeepc, ControllerKind::Tracking, ControllerKind::Convex}) {
        const ModelBundle& m = kind == ControllerKind::Convex ? surrogate : model;
        const auto setup = make_setup(kind, d, m, cfg);
        if (hankel) dump_hankel(setup, dir, to_string(kind));
        ordered_json per_seed = ordered_json::array();
        double cost = 0.0, viol = 0.0, mean_ms = 0.0, p99 = 0.0;
        for (auto seed : seeds) {
            const auto run = run_one(setup, cfg, steps, seed, dir, to_string(kind) + "_seed" + std::to_string(seed));
            const auto& s = run.summary;
            per_seed.push_back({{"seed", seed},
                                {"avg_cost", s.avg_cost},
                                {"violation_rate", s.violation_rate},
                                {"surrogate_violation_rate", s.surrogate_violation_rate},
                                {"fallbacks", s.fallbacks}});
            csv << to_string(kind) << ',' << seed << ',' << format_double(s.avg_cost) << ','
                << format_double(s.violation_rate) << ',' << format_double(s.surrogate_violation_rate) << ','
                << s.fallbacks << ',' << format_double(s.mean_solve_ms) << ',' << format_double(s.p99_solve_ms)
                << "\n";
            cost += s.avg_cost;
            viol += s.violation_rate;
            mean_ms += s.mean_solve_ms;
            p99 = std::max(p99, s.p99_solve_ms);
        }
        const double n = static_cast<double>(seeds.size());
        table[to_string(kind)] = {{"avg_cost", cost / n},
                                  {"violation_rate", viol / n},
                                  {"mean_solve_ms", mean_ms / n},
                                  {"p99_solve_ms", p99},
                                  {"runs", per_seed}};
    }
    ordered_json j = {{"plant", cfg.plant.name}, {"steps", steps}, {"seeds", seeds}, {"controllers", table}};
    write_text(dir / "comparison.json", j.dump(2));
    return j;
}

int cmd_compare(const Options& o, std::ostream& out)
{
    auto cfg = resolve_config(o);
    const auto dir = ensure_out(o);
    const auto d = load_dataset(cfg, input_path(o.data, dir / "dataset.csv", "dataset"));
    const auto model = model_for(ControllerKind::Deeepc, o, dir);
    const auto surrogate = model_for(ControllerKind::Convex, o, dir);
    const auto seeds = o.seed ? std::vector<std::uint64_t>{*o.seed} : cfg.compare.seeds;
    const Eigen::Index steps = o.steps.value_or(cfg.compare.steps);
    require(steps >= 0, ErrorCode::InvalidConfig, "--steps must be nonnegative");
    const auto j = do_compare(cfg, d, model, surrogate, seeds, steps, dir, o.dump_hankel);
    for (auto& [name, row] : j["controllers"].items())
        out << name << ": avg_cost " << format_double(row["avg_cost"].get<double>()) << ", violation_rate "
            << format_double(row["violation_rate"].get<double>()) << "\n";
    return kExitOk;
}

// ---- verification -------------------------------------------------------

ordered_json verify_lemma_json()
{
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    bool refused = false;
    for (int i = 0; i < 20; ++i) {
        const auto sys = random_lti(3, 1, 1, rng);
        const auto rep = verify_fundamental_lemma(sys, 80, 6, 10, 1000 + static_cast<std::uint64_t>(i));
        worst = std::max(worst, rep.max_residual);
        refused = refused || rep.refused;
    }
    const bool pass = !refused && worst <= 1e-8;
    return {{"check", "fundamental_lemma"},
            {"systems", 20},
            {"max_relative_residual", worst},
            {"tolerance", 1e-8},
            {"pass", pass}};
}

ordered_json verdict(const std::string& name, bool pass, ordered_json detail)
{
    detail["check"] = name;
    detail["pass"] = pass;
    return detail;
}

ordered_json verify_theory_json(Eigen::Index nodes, const fs::path* csv_dir)
{
    ordered_json checks = ordered_json::array();
    auto guarded = [&](const std::string& name, const std::function<ordered_json()>& body) {
        try {
            checks.push_back(body());
        } catch (const Error& e) {
            checks.push_back(verdict(name, false, {{"error", e.what()}}));
        }
    };
    const Interval unit{-1.0, 1.0};

    guarded("tensor_gram", [&] {
        const auto f = legendre_family(6, unit, nodes);
        const auto t = tensor_product_family(f, f);
        const double dev = t.gram_deviation();
        return verdict("tensor_gram", dev <= kGramTolerance, {{"members", t.size()}, {"max_deviation", dev}});
    });
    guarded("exp_truncation", [&] {
        const auto f = legendre_family(13, unit, nodes);
        std::vector<Eigen::Index> orders;
        for (Eigen::Index n = 1; n <= 12; ++n) orders.push_back(n);
        const auto r = truncation_error_curve([](const Real& x) { return exp(x); }, f, orders);
        if (csv_dir) {
            std::ofstream c(*csv_dir / "truncation_exp.csv");
            c << "n,error_norm,formula_sq,direct_sq\n";
            for (std::size_t k = 0; k < r.orders.size(); ++k)
                c << r.orders[k] << ',' << format_double(r.error_norms[k]) << ',' << format_double(r.formula_sq[k])
                  << ',' << format_double(r.direct_sq[k]) << "\n";
        }
        return verdict("exp_truncation", r.strictly_decreasing && r.bounded,
                       {{"f_norm", r.f_norm}, {"error_norms", r.error_norms}, {"strictly_decreasing", r.strictly_decreasing},
                        {"bounded", r.bounded}});
    });
    guarded("norm_identity", [&] {
        const auto f = legendre_family(13, unit, nodes);
        std::vector<Eigen::Index> orders;
        for (Eigen::Index n = 1; n <= 12; ++n) orders.push_back(n);
        const auto r = truncation_error_curve([](const Real& x) { return exp(x); }, f, orders);
        return verdict("norm_identity", r.max_disagreement <= 1e-6 && r.min_remainder >= -1e-8,
                       {{"max_relative_disagreement", r.max_disagreement}, {"min_remainder", r.min_remainder}});
    });
    guarded("cubic_exact", [&] {
        const auto f = legendre_family(8, unit, nodes);
        const auto r = truncation_error_curve([](const Real& x) { return x * x * x; }, f, {4, 5, 6, 7, 8});
        double worst = 0.0;
        for (double e : r.error_norms) worst = std::max(worst, e);
        return verdict("cubic_exact", worst <= 1e-12, {{"max_error_norm", worst}});
    });
    guarded("partial_state_map", [&] {
        const auto spec = builtin_benchmark("lti-3");
        const auto f = legendre_family(4, unit, nodes);
        const auto rep = verify_partial_state_map(spec.c, tensor_product_family(f, f), 200, 5);
        return verdict("partial_state_map", rep.reconstruction_error <= 1e-10 && rep.gram_gap <= 1e-6,
                       {{"reconstruction_error", rep.reconstruction_error}, {"gram_gap", rep.gram_gap}});
    });
    bool all = true;
    for (const auto& c : checks) all = all && c["pass"].get<bool>();
    return {{"pass", all}, {"checks", checks}};
}

int cmd_verify_lemma(const Options& o, std::ostream& out)
{
    const auto dir = ensure_out(o);
    const auto j = verify_lemma_json();
    write_text(dir / "verify_lemma.json", j.dump(2));
    out << "fundamental lemma: " << (j["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
    return j["pass"].get<bool>() ? kExitOk : kExitVerifyFailed;
}

int cmd_verify_theory(const Options& o, std::ostream& out)
{
    const auto dir = ensure_out(o);
    const auto j = verify_theory_json(o.quad_nodes, &dir);
    write_text(dir / "verify_theory.json", j.dump(2));
    for (const auto& c : j["checks"]) out << c["check"].get<std::string>() << ": " << (c["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
    return j["pass"].get<bool>() ? kExitOk : kExitVerifyFailed;
}

int cmd_verify(const Options& o, std::ostream& out)
{
    const auto dir = ensure_out(o);
    const auto lemma = verify_lemma_json();
    const auto theory = verify_theory_json(o.quad_nodes, &dir);
    const bool pass = lemma["pass"].get<bool>() && theory["pass"].get<bool>();
    ordered_json j = {{"pass", pass}, {"lemma", lemma}, {"theory", theory}};
    write_text(dir / "verify.json", j.dump(2));
    out << "verify: " << (pass ? "pass" : "FAIL") << "\n";
    return pass ? kExitOk : kExitVerifyFailed;
}

// ---- pipeline -----------------------------------------------------------

int cmd_pipeline(const Options& o, std::ostream& out)
{
    auto cfg = resolve_config(o);
    if (o.seed) cfg.collect.seed = *o.seed;
    if (o.steps) cfg.compare.steps = *o.steps;
    const auto dir = ensure_out(o);
    const fs::path stages_path = dir / "stages.json";
    ordered_json stages = fs::exists(stages_path) ? ordered_json::parse(read_text(stages_path)) : ordered_json::object();

    ordered_json cj = ordered_json::parse(cfg.to_json());
    const std::string h_collect = fnv1a_hex(cj["plant"].dump() + cj["collect"].dump() + cj["controller"].dump());
    const std::string h_train = fnv1a_hex(h_collect + cj["train"].dump());
    const std::string h_compare = fnv1a_hex(h_train + cj["controller"].dump() + cj["compare"].dump());
    auto fresh = [&](const char* stage, const std::string& h, std::initializer_list<const char*> files) {
        if (stages.value(stage, "") != h) return false;
        for (auto f : files)
            if (!fs::exists(dir / f)) return false;
        return true;
    };
    auto save_stages = [&] { write_text(stages_path, stages.dump(2)); };

    if (fresh("collect", h_collect, {"dataset.csv"})) {
        out << "collect: up to date\n";
    } else {
        do_collect(cfg, cfg.collect.seed, dir);
        stages["collect"] = h_collect;
        stages.erase("train");
        stages.erase("compare");
        save_stages();
        out << "collect: done\n";
    }
    const auto d = load_dataset(cfg, dir / "dataset.csv");
    if (fresh("train", h_train, {"model.bin", "surrogate.bin"})) {
        out << "train: up to date\n";
    } else {
        do_train(cfg, d, dir);
        stages["train"] = h_train;
        stages.erase("compare");
        save_stages();
        out << "train: done\n";
    }
    if (fresh("compare", h_compare, {"comparison.json"})) {
        out << "compare: up to date\n";
    } else {
        do_compare(cfg, d, ModelBundle::load(dir / "model.bin"), ModelBundle::load(dir / "surrogate.bin"),
                   cfg.compare.seeds, cfg.compare.steps, dir, o.dump_hankel);
        stages["compare"] = h_compare;
        save_stages();
        out << "compare: done\n";
    }
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Data-enabled economic predictive control toolkit", "deeepc"};
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;
    Eigen::Index steps = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "experiment config (JSON)");
        sub->add_option("--plant", o.plant, "builtin plant when no config is given");
        sub->add_option("--seed", seed, "seed override");
        sub->add_option("--out", o.out, "output directory");
    };
    auto* collect = app.add_subcommand("collect", "open-loop data collection");
    common(collect);
    collect->add_option("--steps", steps, "number of samples");
    auto* trn = app.add_subcommand("train", "train liftings and the cost surrogate");
    common(trn);
    trn->add_option("--data", o.data, "dataset CSV (default <out>/dataset.csv)");
    auto* runc = app.add_subcommand("run", "closed-loop run of one controller");
    common(runc);
    auto* cmp = app.add_subcommand("compare", "run all controllers on the configured seeds");
    common(cmp);
    for (auto* sub : {runc, cmp}) {
        sub->add_option("--data", o.data, "dataset CSV (default <out>/dataset.csv)");
        sub->add_option("--model", o.model, "lifted model bundle (default <out>/model.bin)");
        sub->add_option("--surrogate", o.surrogate, "raw surrogate bundle (default <out>/surrogate.bin)");
        sub->add_option("--steps", steps, "closed-loop steps");
        sub->add_flag("--dump-hankel", o.dump_hankel, "write the Hankel matrices as CSV");
        sub->add_flag("--no-slack", o.no_slack, "enforce the initial-condition equality exactly");
    }
    runc->add_option("--controller", o.controller, "deeepc | tracking | convex");
    auto* pipe = app.add_subcommand("pipeline", "collect, train and compare with stage caching");
    common(pipe);
    pipe->add_option("--steps", steps, "closed-loop steps");
    pipe->add_flag("--dump-hankel", o.dump_hankel, "write the Hankel matrices as CSV");
    pipe->add_flag("--no-slack", o.no_slack, "enforce the initial-condition equality exactly");
    auto* vl = app.add_subcommand("verify-lemma", "fundamental-lemma oracle on random LTI systems");
    auto* vt = app.add_subcommand("verify-theory", "orthonormal-basis and truncation checks");
    auto* va = app.add_subcommand("verify", "verify-lemma and verify-theory");
    for (auto* sub : {vl, vt, va}) sub->add_option("--out", o.out, "output directory");
    for (auto* sub : {vt, va}) sub->add_option("--quad-nodes", o.quad_nodes, "override the quadrature node count");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }
    for (auto* sub : app.get_subcommands()) {
        if (sub->get_option_no_throw("--seed") && sub->count("--seed")) o.seed = seed;
        if (sub->get_option_no_throw("--steps") && sub->count("--steps")) o.steps = steps;
    }

    try {
        auto* sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "collect") return cmd_collect(o, out);
        if (name == "train") return cmd_train(o, out);
        if (name == "run") return cmd_run(o, out);
        if (name == "compare") return cmd_compare(o, out);
        if (name == "pipeline") return cmd_pipeline(o, out);
        if (name == "verify-lemma") return cmd_verify_lemma(o, out);
        if (name == "verify-theory") return cmd_verify_theory(o, out);
        if (name == "verify") return cmd_verify(o, out);
        err << "usage error: unknown subcommand\n";
        return kExitUsage;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::InvalidConfig ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

} // namespace deeepc::cli
