#include "deeepc/controller.hpp"

#include "deeepc/error.hpp"
#include "deeepc/trajectory.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

namespace deeepc {

std::string to_string(ControllerKind k)
{
    switch (k) {
    case ControllerKind::Deeepc: return "deeepc";
    case ControllerKind::Tracking: return "tracking";
    case ControllerKind::Convex: return "convex";
    }
    return "deeepc";
}

ControllerKind controller_kind_from_name(const std::string& name)
{
    if (name == "deeepc") return ControllerKind::Deeepc;
    if (name == "tracking") return ControllerKind::Tracking;
    if (name == "convex") return ControllerKind::Convex;
    throw Error(ErrorCode::InvalidConfig, "unknown controller '" + name + "' (valid: deeepc, tracking, convex)");
}

void ControllerParams::validate() const
{
    require(t_ini >= 1, ErrorCode::InvalidConfig, "T_ini must be at least 1");
    require(n_p >= 1, ErrorCode::InvalidConfig, "N_p must be at least 1");
    require(lambda >= 0.0 && r >= 0.0 && track_t >= 0.0 && track_r >= 0.0, ErrorCode::InvalidConfig,
            "controller weights must be nonnegative");
    require(beta_z > 0.0 && beta_g >= 0.0, ErrorCode::InvalidConfig, "beta_z must be positive, beta_g nonnegative");
    require(qp.tol > 0.0 && qp.max_iter >= 1, ErrorCode::InvalidConfig, "bad QP options");
}

Eigen::VectorXd ControllerSetup::lift_output(const Eigen::VectorXd& y) const
{
    return model.lift_outputs(y.transpose()).row(0).transpose();
}

Eigen::VectorXd ControllerSetup::lift_input(const Eigen::VectorXd& u) const
{
    if (!has_input_lifting()) return Eigen::VectorXd(0);
    return model.lift_inputs(u.transpose()).row(0).transpose();
}

Eigen::VectorXd ControllerSetup::surrogate_yc(const Eigen::VectorXd& z) const
{
    if (kind == ControllerKind::Tracking) return output_map * z;
    return reconstruct_output(model.cost, z);
}

HankelBlocks build_controller_blocks(const Dataset& d, const ModelBundle& model, bool with_v,
                                     const ControllerParams& p)
{
    p.validate();
    const Eigen::Index hr = d.split().hankel_rows;
    require(hr >= p.t_ini + p.n_p, ErrorCode::InsufficientHistory, "dataset has too few Hankel rows for T_ini + N_p");
    const Eigen::MatrixXd u = d.u().values().topRows(hr);
    const Eigen::MatrixXd y = d.y().values().topRows(hr);
    const Eigen::MatrixXd z = model.lift_outputs(y);
    const Eigen::MatrixXd v = with_v ? model.lift_inputs(u) : Eigen::MatrixXd(hr, 0);
    auto blocks = partition(u, v, z, p.t_ini, p.n_p);
    if (p.svd_tol >= 0.0) blocks = reduce_svd(blocks, p.svd_tol);
    return blocks;
}

namespace {

DeepcBounds plant_bounds(const PlantSpec& plant)
{
    DeepcBounds b;
    b.u_lb = plant.u_lb;
    b.u_ub = plant.u_ub;
    if (!plant.yc_index.empty()) b.yc = OutputPolytope::box(plant.yc_lb, plant.yc_ub);
    return b;
}

void check_dataset(const Dataset& d, const PlantSpec& plant)
{
    require(d.n_u() == plant.n_u() && d.n_y() == plant.n_y(), ErrorCode::DimensionMismatch,
            "dataset does not match the plant's input/output dimensions");
    require(d.yc_index() == plant.yc_index, ErrorCode::DimensionMismatch,
            "dataset y^c columns do not match the plant's constraints");
}

} // namespace

ControllerSetup make_deeepc_setup(const Dataset& d, const ModelBundle& model, const PlantSpec& plant,
                                  const ControllerParams& p)
{
    check_dataset(d, plant);
    require(model.n_y() == plant.n_y() && model.n_u() == plant.n_u(), ErrorCode::DimensionMismatch,
            "model does not match the plant");
    ControllerSetup s;
    s.kind = ControllerKind::Deeepc;
    s.params = p;
    s.model = model;
    s.blocks = build_controller_blocks(d, model, true, p);
    s.bounds = plant_bounds(plant);
    s.yc_index = plant.yc_index;
    return s;
}

ControllerSetup make_convex_setup(const Dataset& d, const ModelBundle& surrogate, const PlantSpec& plant,
                                  const ControllerParams& p)
{
    auto s = make_deeepc_setup(d, surrogate, plant, p);
    s.kind = ControllerKind::Convex;
    return s;
}

ControllerSetup make_tracking_setup(const Dataset& d, const PlantSpec& plant, const ControllerParams& p)
{
    check_dataset(d, plant);
    require(plant.track_y.size() == plant.n_y() && plant.track_u.size() == plant.n_u(), ErrorCode::InvalidConfig,
            "plant '" + plant.name + "' has no tracking reference");
    ControllerSetup s;
    s.kind = ControllerKind::Tracking;
    s.params = p;
    s.model = ModelBundle::raw(plant.n_y(), plant.n_u(), static_cast<Eigen::Index>(plant.yc_index.size()));
    s.blocks = build_controller_blocks(d, s.model, false, p);
    s.bounds = plant_bounds(plant);
    s.yc_index = plant.yc_index;
    s.output_map = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(plant.yc_index.size()), plant.n_y());
    for (std::size_t i = 0; i < plant.yc_index.size(); ++i) s.output_map(static_cast<Eigen::Index>(i), plant.yc_index[i]) = 1.0;
    s.refs.z_ref = plant.track_y.transpose().replicate(p.n_p, 1);
    s.refs.u_ref = plant.track_u.transpose().replicate(p.n_p, 1);
    s.refs.t = p.track_t * Eigen::MatrixXd::Identity(plant.n_y(), plant.n_y());
    s.refs.r = p.track_r * Eigen::MatrixXd::Identity(plant.n_u(), plant.n_u());
    return s;
}

void ControllerState::push(const Eigen::VectorXd& uk, const Eigen::VectorXd& yk, const Eigen::VectorXd& zk,
                           const Eigen::VectorXd& vk)
{
    auto roll = [&](Eigen::MatrixXd& m, const Eigen::VectorXd& row) {
        if (t_ini > 1) m.topRows(t_ini - 1) = m.bottomRows(t_ini - 1).eval();
        m.row(t_ini - 1) = row.transpose();
    };
    roll(u, uk);
    roll(y, yk);
    roll(z, zk);
    if (v.cols() > 0) roll(v, vk);
    last_u = uk;
    filled = std::min(filled + 1, t_ini);
}

namespace {

ControllerState empty_state(const ControllerSetup& setup, const PlantSpec& plant)
{
    ControllerState st;
    st.t_ini = setup.params.t_ini;
    st.u = Eigen::MatrixXd::Zero(st.t_ini, plant.n_u());
    st.y = Eigen::MatrixXd::Zero(st.t_ini, plant.n_y());
    st.z = Eigen::MatrixXd::Zero(st.t_ini, setup.blocks.n_z);
    st.v = Eigen::MatrixXd::Zero(st.t_ini, setup.blocks.n_v);
    return st;
}

Eigen::VectorXd violation(const Eigen::VectorXd& yc, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub)
{
    return (yc - ub).cwiseMax(lb - yc).cwiseMax(0.0);
}

Eigen::VectorXd select(const Eigen::VectorXd& y, const std::vector<Eigen::Index>& idx)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = y(idx[i]);
    return out;
}

} // namespace

WarmupResult warmup(PlantHandle& plant, const ControllerSetup& setup, const WarmupSpec& spec)
{
    const PlantSpec& ps = plant.spec();
    const Eigen::Index t_ini = setup.params.t_ini;
    require(t_ini >= 1, ErrorCode::InvalidConfig, "warmup needs T_ini >= 1");
    const Eigen::Index n = spec.steps == 0 ? t_ini : spec.steps;
    require(n >= t_ini, ErrorCode::InvalidConfig, "warmup must run at least T_ini steps");

    WarmupResult out{empty_state(setup, ps), Eigen::MatrixXd(n, ps.n_u()), Eigen::MatrixXd(n, ps.n_y()),
                     Eigen::VectorXd(n)};
    Eigen::VectorXd u0 = ps.pid.u0.size() ? ps.pid.u0 : Eigen::VectorXd(0.5 * (ps.u_lb + ps.u_ub));
    if (spec.policy == WarmupPolicy::Fixed && spec.u_fixed.size()) {
        require(spec.u_fixed.size() == ps.n_u(), ErrorCode::DimensionMismatch, "fixed warmup input has wrong size");
        u0 = spec.u_fixed;
    }
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double integral = 0.0;
    Eigen::VectorXd y = plant.output();

    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::VectorXd u = u0;
        if (spec.policy == WarmupPolicy::Pid) {
            // PI on one output; the same correction is applied to every input channel.
            const double e = ps.pid.setpoint - y(ps.pid.output);
            integral += e * ps.dt;
            u = (u0.array() + ps.pid.kp * e + ps.pid.ki * integral).matrix();
        } else if (spec.policy == WarmupPolicy::Random) {
            for (Eigen::Index i = 0; i < ps.n_u(); ++i) u(i) = ps.u_lb(i) + (ps.u_ub(i) - ps.u_lb(i)) * unit(rng);
        }
        u = u.cwiseMax(ps.u_lb).cwiseMin(ps.u_ub);
        StepResult r;
        try {
            r = plant.step(u);
        } catch (const Error& e) {
            throw Error(ErrorCode::PlantFault, std::string("warmup: ") + e.what());
        }
        require(r.y.allFinite(), ErrorCode::PlantFault, "warmup produced non-finite outputs");
        y = r.y;
        out.u.row(k) = r.u.transpose();
        out.y.row(k) = r.y.transpose();
        out.c(k) = r.cost;
        out.state.push(r.u, r.y, setup.lift_output(r.y), setup.lift_input(r.u));
    }
    return out;
}

Decision decide(const ControllerSetup& setup, const ControllerState& state)
{
    require(state.warmed_up(), ErrorCode::MissingIni, "controller state is not warmed up");
    const auto t0 = std::chrono::steady_clock::now();
    const auto& p = setup.params;
    DeepcWeights w;
    w.lambda = p.lambda;
    if (p.r > 0.0) w.r = p.r * Eigen::MatrixXd::Identity(state.u.cols(), state.u.cols());
    w.beta_z = p.beta_z;
    w.beta_g = p.beta_g;
    w.no_slack = p.no_slack;

    DeepcQp qp = setup.kind == ControllerKind::Tracking
                     ? assemble_tracking(setup.blocks, setup.refs, setup.output_map, state.ini(), w, setup.bounds)
                     : assemble_deeepc(setup.blocks, setup.model.cost, state.ini(), w, setup.bounds);

    Decision d;
    d.layout = qp.layout;
    d.solution = solve(qp.problem, p.qp);
    if (d.solution.status == QpStatus::Optimal) {
        d.u = extract_input(setup.blocks, d.solution.x).first();
        // Interior-point iterates can sit a hair outside the box.
        d.u = d.u.cwiseMax(setup.bounds.u_lb).cwiseMin(setup.bounds.u_ub);
    } else {
        d.fallback = true;
        d.u = state.last_u;
    }
    d.elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return d;
}

ClosedLoopRecord apply_decision(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant,
                                const Decision& d)
{
    const PlantSpec& ps = plant.spec();
    require(((d.u.array() >= ps.u_lb.array()) && (d.u.array() <= ps.u_ub.array())).all(), ErrorCode::PlantFault,
            "controller produced an input outside the box");
    const auto r = plant.step(d.u);
    const Eigen::VectorXd z = setup.lift_output(r.y);
    const Eigen::VectorXd v = setup.lift_input(r.u);

    ClosedLoopRecord rec;
    rec.k = state.k;
    rec.u = r.u;
    rec.y = r.y;
    rec.cost = r.cost;
    rec.surrogate_cost = setup.kind == ControllerKind::Tracking ? 0.0 : eval_cost(setup.model.cost, z, v).value;
    rec.status = d.solution.status;
    rec.fallback = d.fallback;
    rec.solve_ms = d.elapsed_ms;
    rec.iterations = d.solution.iterations;
    if (!setup.yc_index.empty()) {
        rec.violation_true = violation(select(r.y, setup.yc_index), ps.yc_lb, ps.yc_ub);
        rec.violation_surrogate = violation(setup.surrogate_yc(z), ps.yc_lb, ps.yc_ub);
    }
    if (d.fallback)
        state.events.push_back("k=" + std::to_string(state.k) + " " + std::string(to_string(d.solution.status)) +
                               ": held last input");
    state.push(r.u, r.y, z, v);
    ++state.k;
    return rec;
}

ClosedLoopRecord step_controller(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant)
{
    return apply_decision(setup, state, plant, decide(setup, state));
}

ClosedLoopRecord step_deeepc(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant)
{
    require(setup.kind == ControllerKind::Deeepc, ErrorCode::InvalidConfig, "setup is not a DeeEPC controller");
    return step_controller(setup, state, plant);
}

ClosedLoopRecord step_tracking_deepc(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant)
{
    require(setup.kind == ControllerKind::Tracking, ErrorCode::InvalidConfig, "setup is not a tracking controller");
    return step_controller(setup, state, plant);
}

ClosedLoopRecord step_convex_deepc(const ControllerSetup& setup, ControllerState& state, PlantHandle& plant)
{
    require(setup.kind == ControllerKind::Convex, ErrorCode::InvalidConfig, "setup is not a convex controller");
    return step_controller(setup, state, plant);
}

ClosedLoopSummary summarize(const std::vector<ClosedLoopRecord>& records)
{
    ClosedLoopSummary s;
    s.steps = static_cast<Eigen::Index>(records.size());
    if (records.empty()) return s;
    std::vector<double> times;
    Eigen::Index viol = 0, viol_sur = 0;
    for (const auto& r : records) {
        s.avg_cost += r.cost;
        if (r.violation_true.size() && r.violation_true.maxCoeff() > 0.0) ++viol;
        if (r.violation_surrogate.size() && r.violation_surrogate.maxCoeff() > 0.0) ++viol_sur;
        if (r.fallback) ++s.fallbacks;
        times.push_back(r.solve_ms);
        s.mean_solve_ms += r.solve_ms;
    }
    const double n = static_cast<double>(records.size());
    s.avg_cost /= n;
    s.violation_rate = static_cast<double>(viol) / n;
    s.surrogate_violation_rate = static_cast<double>(viol_sur) / n;
    s.mean_solve_ms /= n;
    std::sort(times.begin(), times.end());
    const auto idx = static_cast<std::size_t>(std::ceil(0.99 * n)) - 1;
    s.p99_solve_ms = times[std::min(idx, times.size() - 1)];
    s.max_solve_ms = times.back();
    return s;
}

ClosedLoopRun run_closed_loop(const ControllerSetup& setup, const PlantSpec& plant, const WarmupSpec& warm,
                              Eigen::Index steps, std::uint64_t seed)
{
    require(steps >= 0, ErrorCode::InvalidConfig, "negative horizon");
    ClosedLoopRun run;
    if (steps == 0) return run;
    PlantHandle h(plant);
    h.reset(seed);
    auto w = warm;
    w.seed = warm.seed ^ seed;
    auto state = warmup(h, setup, w).state;
    run.records.reserve(static_cast<std::size_t>(steps));
    for (Eigen::Index k = 0; k < steps; ++k) run.records.push_back(step_controller(setup, state, h));
    run.summary = summarize(run.records);
    run.events = state.events;
    if (h.clip_warnings() > 0) run.events.push_back(std::to_string(h.clip_warnings()) + " inputs clipped to the box");
    return run;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<ClosedLoopRecord>& records)
{
    std::ofstream out(path);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    const Eigen::Index nu = records.empty() ? 0 : records[0].u.size();
    const Eigen::Index ny = records.empty() ? 0 : records[0].y.size();
    const Eigen::Index nc = records.empty() ? 0 : records[0].violation_true.size();
    out << "k";
    for (Eigen::Index i = 0; i < nu; ++i) out << ",u" << i;
    for (Eigen::Index i = 0; i < ny; ++i) out << ",y" << i;
    out << ",c,c_hat,status,fallback";
    for (Eigen::Index i = 0; i < nc; ++i) out << ",viol_true" << i;
    for (Eigen::Index i = 0; i < nc; ++i) out << ",viol_surrogate" << i;
    out << "\n";
    for (const auto& r : records) {
        out << r.k;
        for (Eigen::Index i = 0; i < nu; ++i) out << ',' << format_double(r.u(i));
        for (Eigen::Index i = 0; i < ny; ++i) out << ',' << format_double(r.y(i));
        out << ',' << format_double(r.cost) << ',' << format_double(r.surrogate_cost) << ',' << to_string(r.status)
            << ',' << (r.fallback ? 1 : 0);
        for (Eigen::Index i = 0; i < nc; ++i) out << ',' << format_double(r.violation_true(i));
        for (Eigen::Index i = 0; i < nc; ++i) out << ',' << format_double(r.violation_surrogate(i));
        out << "\n";
    }
    require(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

void write_timing_csv(const std::filesystem::path& path, const std::vector<ClosedLoopRecord>& records)
{
    std::ofstream out(path);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    out << "k,solve_ms,iterations\n";
    for (const auto& r : records) out << r.k << ',' << format_double(r.solve_ms) << ',' << r.iterations << "\n";
}

std::string summary_json(const ClosedLoopSummary& s, bool with_timing)
{
    nlohmann::ordered_json j = {{"steps", s.steps},
                                {"avg_cost", s.avg_cost},
                                {"violation_rate", s.violation_rate},
                                {"surrogate_violation_rate", s.surrogate_violation_rate},
                                {"fallbacks", s.fallbacks}};
    if (with_timing) {
        j["mean_solve_ms"] = s.mean_solve_ms;
        j["p99_solve_ms"] = s.p99_solve_ms;
        j["max_solve_ms"] = s.max_solve_ms;
    }
    return j.dump(2);
}

} // namespace deeepc
