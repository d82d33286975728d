#include "deeepc/plants.hpp"

#include "deeepc/error.hpp"
#include "deeepc/linalg.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace deeepc {

namespace {

using nlohmann::json;

constexpr double kDivergenceLimit = 1e9;
constexpr int kSubsteps = 10;

double cstr_rate(const PlantSpec& s, double temp)
{
    return s.param("k0") * std::exp(s.param("kappa") * (temp - 1.0));
}

std::string model_name(PlantModel m)
{
    switch (m) {
    case PlantModel::Cstr: return "cstr";
    case PlantModel::TwoTank: return "two-tank";
    case PlantModel::Lti: return "lti";
    case PlantModel::Static: return "static";
    }
    return "static";
}

PlantModel model_from_name(const std::string& n)
{
    if (n == "cstr") return PlantModel::Cstr;
    if (n == "two-tank") return PlantModel::TwoTank;
    if (n == "lti") return PlantModel::Lti;
    if (n == "static") return PlantModel::Static;
    throw Error(ErrorCode::InvalidConfig, "unknown plant model '" + n + "'");
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& m)
{
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

Eigen::VectorXd json_vec(const json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd json_mat(const json& j)
{
    require(j.is_array(), ErrorCode::InvalidConfig, "matrix must be an array of rows");
    if (j.empty()) return {};
    const auto cols = static_cast<Eigen::Index>(j.at(0).size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        require(static_cast<Eigen::Index>(j[i].size()) == cols, ErrorCode::InvalidConfig, "ragged matrix rows");
        m.row(static_cast<Eigen::Index>(i)) = json_vec(j[i]).transpose();
    }
    return m;
}

Eigen::VectorXd opt_vec(const json& j, const char* key)
{
    return j.contains(key) ? json_vec(j.at(key)) : Eigen::VectorXd();
}

} // namespace

double PlantSpec::param(const std::string& key) const
{
    auto it = params.find(key);
    require(it != params.end(), ErrorCode::InvalidConfig, "plant '" + name + "' lacks parameter '" + key + "'");
    return it->second;
}

double PlantSpec::output_cost(const Eigen::VectorXd& y) const
{
    switch (model) {
    case PlantModel::Cstr: {
        // Value of converted product; y = (concentration, temperature).
        return param("price_product") * (1.0 - cstr_rate(*this, y(1)) * y(0));
    }
    case PlantModel::TwoTank: {
        const double dev = y(1) - param("level_ref");
        return param("level_weight") * dev * dev;
    }
    case PlantModel::Lti: return (w_y.array() * (y - y_ref).array().square()).sum();
    case PlantModel::Static: return 0.0;
    }
    return 0.0;
}

double PlantSpec::input_cost(const Eigen::VectorXd& u) const
{
    switch (model) {
    case PlantModel::Cstr: return param("price_energy") * u(0);
    case PlantModel::TwoTank: return param("price_pump") * u.sum();
    case PlantModel::Lti: return (w_u.array() * u.array().square()).sum();
    case PlantModel::Static: return 0.0;
    }
    return 0.0;
}

Eigen::VectorXd PlantSpec::rhs(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const
{
    Eigen::VectorXd dx(n_x);
    switch (model) {
    case PlantModel::Cstr: {
        const double k = cstr_rate(*this, x(1));
        // Optional second input scales the feed flow around its nominal value.
        const double feed = param("flow") * (u.size() > 1 ? u(1) : 1.0);
        dx(0) = feed * (1.0 - x(0)) - k * x(0);
        dx(1) = -param("cooling") * (x(1) - 1.0) + param("heat_release") * k * x(0) + u(0);
        return dx;
    }
    case PlantModel::TwoTank: {
        const double q1 = param("outflow_1") * std::sqrt(std::max(x(0), 0.0));
        const double q2 = param("outflow_2") * std::sqrt(std::max(x(1), 0.0));
        dx(0) = (param("pump_gain") * u(0) - q1) / param("area_1");
        dx(1) = (q1 - q2) / param("area_2");
        return dx;
    }
    case PlantModel::Lti: return a * x + b * u;
    case PlantModel::Static: return x;
    }
    return x;
}

void PlantSpec::validate() const
{
    const auto bad = [&](const std::string& m) { return "plant '" + name + "': " + m; };
    require(n_x >= 1, ErrorCode::InvalidConfig, bad("n_x must be positive"));
    require(u_lb.size() >= 1 && u_lb.size() == u_ub.size(), ErrorCode::InvalidConfig, bad("input box shape"));
    require((u_lb.array() <= u_ub.array()).all(), ErrorCode::InvalidConfig, bad("input box lower > upper"));
    require(c.cols() == n_x && c.rows() >= 1, ErrorCode::InvalidConfig, bad("C must have n_x columns"));
    require(x0.size() == n_x && x0.allFinite(), ErrorCode::InvalidConfig, bad("x0 must have n_x finite entries"));
    require(x_ref.size() == 0 || x_ref.size() == n_x, ErrorCode::InvalidConfig, bad("x_ref size"));
    require(std::isfinite(dt) && dt > 0.0, ErrorCode::InvalidConfig, bad("dt must be positive"));
    require(disturbance.std_frac >= 0.0 && disturbance.bound_frac >= 0.0, ErrorCode::InvalidConfig,
            bad("disturbance fractions must be nonnegative"));

    // Output map: nonzero columns at most n_y and linearly independent.
    std::vector<Eigen::Index> nz;
    for (Eigen::Index j = 0; j < c.cols(); ++j)
        if (c.col(j).cwiseAbs().maxCoeff() > 0.0) nz.push_back(j);
    require(!nz.empty() && static_cast<Eigen::Index>(nz.size()) <= c.rows(), ErrorCode::InvalidConfig,
            bad("C has more nonzero columns than outputs"));
    Eigen::MatrixXd cp(c.rows(), static_cast<Eigen::Index>(nz.size()));
    for (std::size_t i = 0; i < nz.size(); ++i) cp.col(static_cast<Eigen::Index>(i)) = c.col(nz[i]);
    require(linalg::numerical_rank(cp, kRankTolerance) == cp.cols(), ErrorCode::InvalidConfig,
            bad("nonzero columns of C are linearly dependent"));

    if (model == PlantModel::Lti) {
        require(a.rows() == n_x && a.cols() == n_x, ErrorCode::InvalidConfig, bad("A shape"));
        require(b.rows() == n_x && b.cols() == n_u(), ErrorCode::InvalidConfig, bad("B shape"));
        require(y_ref.size() == n_y() && w_y.size() == n_y() && w_u.size() == n_u(), ErrorCode::InvalidConfig,
                bad("quadratic cost shapes"));
    }
    if (model == PlantModel::Cstr) {
        require(n_x == 2 && n_u() <= 2, ErrorCode::InvalidConfig, bad("cstr has 2 states and 1..2 inputs"));
        for (auto k : {"k0", "kappa", "flow", "cooling", "heat_release", "price_product", "price_energy"}) param(k);
    }
    if (model == PlantModel::TwoTank) {
        require(n_x == 2 && n_u() == 1, ErrorCode::InvalidConfig, bad("two-tank has 2 states and 1 input"));
        for (auto k : {"pump_gain", "outflow_1", "outflow_2", "area_1", "area_2", "level_ref", "level_weight",
                       "price_pump"})
            param(k);
    }

    require(yc_lb.size() == static_cast<Eigen::Index>(yc_index.size()) && yc_ub.size() == yc_lb.size(),
            ErrorCode::InvalidConfig, bad("output constraint shapes"));
    for (auto i : yc_index) require(i >= 0 && i < n_y(), ErrorCode::InvalidConfig, bad("y^c index out of range"));
    require(track_y.size() == 0 || track_y.size() == n_y(), ErrorCode::InvalidConfig, bad("tracking output size"));
    require(track_u.size() == 0 || track_u.size() == n_u(), ErrorCode::InvalidConfig, bad("tracking input size"));
    require(pid.u0.size() == 0 || pid.u0.size() == n_u(), ErrorCode::InvalidConfig, bad("pid u0 size"));
    require(pid.output >= 0 && pid.output < n_y(), ErrorCode::InvalidConfig, bad("pid output index"));
    require(schedule.hold >= 1 && schedule.noise_std >= 0.0, ErrorCode::InvalidConfig, bad("schedule"));
}

PlantSpec plant_spec_from_json(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
        if (j.contains("plant")) j = j.at("plant");
        PlantSpec s;
        s.name = j.at("name").get<std::string>();
        s.model = model_from_name(j.at("model").get<std::string>());
        s.dt = j.value("dt", 1.0);
        s.u_lb = json_vec(j.at("u_lb"));
        s.u_ub = json_vec(j.at("u_ub"));
        s.c = json_mat(j.at("C"));
        s.n_x = s.c.cols();
        s.x0 = json_vec(j.at("x0"));
        s.x_ref = opt_vec(j, "x_ref");
        s.noise_seed = j.value("noise_seed", std::uint64_t{1});
        if (j.contains("params")) s.params = j.at("params").get<std::map<std::string, double>>();
        if (j.contains("A")) s.a = json_mat(j.at("A"));
        if (j.contains("B")) s.b = json_mat(j.at("B"));
        s.y_ref = opt_vec(j, "y_ref");
        s.w_y = opt_vec(j, "w_y");
        s.w_u = opt_vec(j, "w_u");
        if (j.contains("disturbance")) {
            const auto& d = j.at("disturbance");
            s.disturbance.std_frac = d.value("std_frac", s.disturbance.std_frac);
            s.disturbance.bound_frac = d.value("bound_frac", s.disturbance.bound_frac);
        }
        if (j.contains("constraints")) {
            const auto& c = j.at("constraints");
            s.yc_index = c.at("yc_index").get<std::vector<Eigen::Index>>();
            s.yc_lb = json_vec(c.at("yc_lb"));
            s.yc_ub = json_vec(c.at("yc_ub"));
        }
        if (j.contains("pid")) {
            const auto& p = j.at("pid");
            s.pid.output = p.value("output", Eigen::Index{0});
            s.pid.setpoint = p.value("setpoint", 0.0);
            s.pid.kp = p.value("kp", 0.0);
            s.pid.ki = p.value("ki", 0.0);
            s.pid.u0 = opt_vec(p, "u0");
        }
        if (j.contains("tracking")) {
            s.track_y = json_vec(j.at("tracking").at("y_ref"));
            s.track_u = json_vec(j.at("tracking").at("u_ref"));
        }
        if (j.contains("schedule")) {
            const auto& sc = j.at("schedule");
            s.schedule.hold = sc.value("hold", Eigen::Index{5});
            s.schedule.lo = opt_vec(sc, "lo");
            s.schedule.hi = opt_vec(sc, "hi");
            s.schedule.noise_std = sc.value("noise_std", 0.0);
        }
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidConfig, std::string("plant spec: ") + e.what());
    }
}

std::string plant_spec_to_json(const PlantSpec& s)
{
    json j = {{"name", s.name},      {"model", model_name(s.model)}, {"dt", s.dt},
              {"u_lb", vec_json(s.u_lb)}, {"u_ub", vec_json(s.u_ub)}, {"C", mat_json(s.c)},
              {"x0", vec_json(s.x0)}, {"noise_seed", s.noise_seed}, {"params", s.params}};
    if (s.x_ref.size()) j["x_ref"] = vec_json(s.x_ref);
    if (s.a.size()) j["A"] = mat_json(s.a);
    if (s.b.size()) j["B"] = mat_json(s.b);
    if (s.y_ref.size()) j["y_ref"] = vec_json(s.y_ref);
    if (s.w_y.size()) j["w_y"] = vec_json(s.w_y);
    if (s.w_u.size()) j["w_u"] = vec_json(s.w_u);
    j["disturbance"] = {{"std_frac", s.disturbance.std_frac}, {"bound_frac", s.disturbance.bound_frac}};
    if (!s.yc_index.empty())
        j["constraints"] = {{"yc_index", s.yc_index}, {"yc_lb", vec_json(s.yc_lb)}, {"yc_ub", vec_json(s.yc_ub)}};
    j["pid"] = {{"output", s.pid.output}, {"setpoint", s.pid.setpoint}, {"kp", s.pid.kp}, {"ki", s.pid.ki}};
    if (s.pid.u0.size()) j["pid"]["u0"] = vec_json(s.pid.u0);
    if (s.track_y.size()) j["tracking"] = {{"y_ref", vec_json(s.track_y)}, {"u_ref", vec_json(s.track_u)}};
    j["schedule"] = {{"hold", s.schedule.hold}, {"noise_std", s.schedule.noise_std}};
    if (s.schedule.lo.size()) j["schedule"]["lo"] = vec_json(s.schedule.lo);
    if (s.schedule.hi.size()) j["schedule"]["hi"] = vec_json(s.schedule.hi);
    return j.dump(2);
}

PlantSpec load_plant_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::Io, "cannot open plant spec " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return plant_spec_from_json(ss.str());
}

std::vector<PlantSpec> builtin_benchmarks()
{
    std::vector<PlantSpec> out;

    {
        // Dimensionless exothermic reactor: state (concentration, temperature), input heat.
        PlantSpec s;
        s.name = "econ-cstr";
        s.model = PlantModel::Cstr;
        s.n_x = 2;
        s.dt = 0.5;
        s.u_lb = Eigen::VectorXd::Constant(1, 0.0);
        s.u_ub = Eigen::VectorXd::Constant(1, 1.5);
        s.c = Eigen::MatrixXd::Identity(2, 2);
        s.x0 = (Eigen::VectorXd(2) << 0.38293976, 1.39007871).finished();
        s.x_ref = s.x0;
        s.disturbance = {2e-3, 0.1};
        s.noise_seed = 7;
        s.params = {{"k0", 0.5},         {"kappa", 3.0},         {"flow", 1.0},       {"cooling", 1.5},
                    {"heat_release", 0.3}, {"price_product", 4.0}, {"price_energy", 1.0}};
        s.yc_index = {1};
        s.yc_lb = Eigen::VectorXd::Constant(1, 0.0);
        s.yc_ub = Eigen::VectorXd::Constant(1, 2.0);
        s.pid = {1, 1.39007871, 0.5, 0.3, Eigen::VectorXd::Constant(1, 0.4)};
        s.track_y = s.x0;
        s.track_u = Eigen::VectorXd::Constant(1, 0.4);
        s.schedule = {5, {}, {}, 0.05};
        out.push_back(s);
    }
    {
        PlantSpec s;
        s.name = "two-tank";
        s.model = PlantModel::TwoTank;
        s.n_x = 2;
        s.dt = 1.0;
        s.u_lb = Eigen::VectorXd::Constant(1, 0.0);
        s.u_ub = Eigen::VectorXd::Constant(1, 1.0);
        s.c = Eigen::MatrixXd::Identity(2, 2);
        // Steady state for u = 0.5.
        s.x0 = (Eigen::VectorXd(2) << 1.0, 1.0).finished();
        s.x_ref = s.x0;
        s.disturbance = {2e-3, 0.1};
        s.noise_seed = 11;
        s.params = {{"pump_gain", 1.0}, {"outflow_1", 0.5}, {"outflow_2", 0.5},  {"area_1", 1.0},
                    {"area_2", 1.0},    {"level_ref", 1.5}, {"level_weight", 2.0}, {"price_pump", 1.0}};
        s.yc_index = {0};
        s.yc_lb = Eigen::VectorXd::Constant(1, 0.0);
        s.yc_ub = Eigen::VectorXd::Constant(1, 3.0);
        s.pid = {1, 1.0, 0.3, 0.1, Eigen::VectorXd::Constant(1, 0.5)};
        s.track_y = s.x0;
        s.track_u = Eigen::VectorXd::Constant(1, 0.5);
        s.schedule = {5, {}, {}, 0.05};
        out.push_back(s);
    }
    {
        PlantSpec s;
        s.name = "lti-3";
        s.model = PlantModel::Lti;
        s.n_x = 3;
        s.dt = 1.0;
        s.a = (Eigen::MatrixXd(3, 3) << 0.9, 0.1, 0.0, 0.0, 0.8, 0.1, 0.0, 0.0, 0.7).finished();
        s.b = (Eigen::MatrixXd(3, 1) << 0.0, 0.0, 1.0).finished();
        s.c = (Eigen::MatrixXd(2, 3) << 1.0, 0.0, 0.0, 0.0, 1.0, 0.0).finished();
        s.u_lb = Eigen::VectorXd::Constant(1, -2.0);
        s.u_ub = Eigen::VectorXd::Constant(1, 2.0);
        s.x0 = Eigen::VectorXd::Zero(3);
        s.x_ref = Eigen::VectorXd::Ones(3);
        s.disturbance = {0.0, 0.0};
        s.noise_seed = 3;
        s.y_ref = (Eigen::VectorXd(2) << 1.0, 0.5).finished();
        s.w_y = Eigen::VectorXd::Ones(2);
        s.w_u = Eigen::VectorXd::Constant(1, 0.1);
        s.yc_index = {0};
        s.yc_lb = Eigen::VectorXd::Constant(1, -10.0);
        s.yc_ub = Eigen::VectorXd::Constant(1, 10.0);
        s.pid = {0, 0.0, 0.0, 0.0, Eigen::VectorXd::Zero(1)};
        s.track_u = Eigen::VectorXd::Constant(1, 0.5);
        s.track_y = s.c * (Eigen::MatrixXd::Identity(3, 3) - s.a).inverse() * s.b * s.track_u;
        s.schedule = {1, {}, {}, 0.0};
        out.push_back(s);
    }
    return out;
}

PlantSpec builtin_benchmark(const std::string& name)
{
    for (auto& s : builtin_benchmarks())
        if (s.name == name) return s;
    throw Error(ErrorCode::InvalidConfig, "unknown benchmark '" + name + "'");
}

Eigen::VectorXd advance(const PlantSpec& s, const Eigen::VectorXd& x, const Eigen::VectorXd& u)
{
    if (s.discrete()) return s.rhs(x, u);
    const double h = s.dt / kSubsteps;
    Eigen::VectorXd xk = x;
    for (int i = 0; i < kSubsteps; ++i) {
        const Eigen::VectorXd k1 = s.rhs(xk, u);
        const Eigen::VectorXd k2 = s.rhs(xk + 0.5 * h * k1, u);
        const Eigen::VectorXd k3 = s.rhs(xk + 0.5 * h * k2, u);
        const Eigen::VectorXd k4 = s.rhs(xk + h * k3, u);
        xk += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return xk;
}

PlantHandle::PlantHandle(PlantSpec spec) : spec_(std::move(spec))
{
    spec_.validate();
    if (spec_.x_ref.size() == 0) spec_.x_ref = spec_.x0;
    reset();
}

void PlantHandle::reset() { reset(spec_.noise_seed); }

void PlantHandle::reset(std::uint64_t noise_seed)
{
    x_ = spec_.x0;
    last_w_ = Eigen::VectorXd::Zero(spec_.n_x);
    rng_.seed(noise_seed);
    k_ = 0;
    clip_warnings_ = 0;
}

void PlantHandle::set_state(const Eigen::VectorXd& x)
{
    require(x.size() == spec_.n_x && x.allFinite(), ErrorCode::DimensionMismatch, "set_state: bad state");
    x_ = x;
}

StepResult PlantHandle::step(const Eigen::VectorXd& u)
{
    require(u.size() == spec_.n_u(), ErrorCode::DimensionMismatch, "step: input has wrong size");
    require(u.allFinite(), ErrorCode::PlantFault, "step: non-finite input");
    StepResult r;
    r.u = u.cwiseMax(spec_.u_lb).cwiseMin(spec_.u_ub);
    r.clipped = (r.u - u).cwiseAbs().maxCoeff() > 0.0;
    if (r.clipped) ++clip_warnings_;

    Eigen::VectorXd next = advance(spec_, x_, r.u);
    last_w_.setZero();
    if (spec_.disturbance.bound_frac > 0.0 && spec_.disturbance.std_frac > 0.0) {
        std::normal_distribution<double> n01(0.0, 1.0);
        for (Eigen::Index i = 0; i < spec_.n_x; ++i) {
            const double ref = std::abs(spec_.x_ref(i));
            const double bound = spec_.disturbance.bound_frac * ref;
            last_w_(i) = std::clamp(spec_.disturbance.std_frac * ref * n01(rng_), -bound, bound);
        }
        next += last_w_;
    }
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergenceLimit)
        throw Error(ErrorCode::StateDiverged, "plant '" + spec_.name + "' diverged at step " + std::to_string(k_));
    x_ = next;
    ++k_;
    r.y = output();
    r.cost = spec_.stage_cost(r.y, r.u);
    return r;
}

DatasetSchema schema_for(const PlantSpec& s, Eigen::Index hankel_rows)
{
    DatasetSchema sc;
    for (Eigen::Index i = 0; i < s.n_u(); ++i) sc.u.push_back("u" + std::to_string(i));
    for (Eigen::Index i = 0; i < s.n_y(); ++i) sc.y.push_back("y" + std::to_string(i));
    for (auto i : s.yc_index) sc.yc.push_back(sc.y[static_cast<std::size_t>(i)]);
    sc.dt = s.dt;
    sc.hankel_rows = hankel_rows;
    return sc;
}

OpenLoopResult generate_openloop(PlantHandle& h, const OpenLoopSchedule& sched, Eigen::Index steps, std::uint64_t seed,
                                 Eigen::Index hankel_rows, Eigen::Index excitation_order)
{
    const PlantSpec& s = h.spec();
    require(steps >= 1, ErrorCode::InvalidConfig, "open-loop run needs at least one step");
    require(sched.hold >= 1 && sched.noise_std >= 0.0, ErrorCode::InvalidConfig, "bad open-loop schedule");
    const Eigen::VectorXd lo = sched.lo.size() ? sched.lo : s.u_lb;
    const Eigen::VectorXd hi = sched.hi.size() ? sched.hi : s.u_ub;
    require(lo.size() == s.n_u() && hi.size() == s.n_u() && (lo.array() <= hi.array()).all(),
            ErrorCode::InvalidConfig, "open-loop level range does not match the input box");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> n01(0.0, 1.0);

    Eigen::MatrixXd u(steps, s.n_u()), y(steps, s.n_y()), c(steps, 1);
    Eigen::VectorXd level(s.n_u());
    for (Eigen::Index k = 0; k < steps; ++k) {
        if (k % sched.hold == 0)
            for (Eigen::Index i = 0; i < s.n_u(); ++i) level(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
        Eigen::VectorXd uk = level;
        if (sched.noise_std > 0.0)
            for (Eigen::Index i = 0; i < s.n_u(); ++i) uk(i) += sched.noise_std * n01(rng);
        uk = uk.cwiseMax(s.u_lb).cwiseMin(s.u_ub);
        try {
            const auto r = h.step(uk);
            u.row(k) = r.u.transpose();
            y.row(k) = r.y.transpose();
            c(k, 0) = r.cost;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::StateDiverged) throw;
            throw PartialRunError(e.what(), u.topRows(k), y.topRows(k), c.topRows(k));
        }
    }

    const auto sc = schema_for(s, hankel_rows);
    const Eigen::Index hr = std::clamp<Eigen::Index>(hankel_rows, 0, steps);
    OpenLoopResult out{Dataset(Trajectory(u, s.dt, sc.u), Trajectory(y, s.dt, sc.y), Trajectory(c, s.dt, {sc.c}),
                               {hr, steps - hr}, s.yc_index),
                       {}, excitation_order};
    if (excitation_order >= 1 && excitation_order * s.n_u() <= steps - excitation_order + 1)
        out.excitation = is_persistently_exciting(u, excitation_order);
    return out;
}

} // namespace deeepc
