#include "deeepc/trainer.hpp"

#include "deeepc/error.hpp"
#include "deeepc/hankel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace deeepc {

void TrainConfig::validate() const
{
    for (double a : alphas) require(a >= 0.0 && std::isfinite(a), ErrorCode::InvalidConfig, "alphas must be >= 0");
    require(batch_size >= 1, ErrorCode::InvalidConfig, "batch_size must be >= 1");
    require(epochs >= 1, ErrorCode::InvalidConfig, "epochs must be >= 1");
    require(lr_nets > 0.0 && lr_cost > 0.0, ErrorCode::InvalidConfig, "learning rates must be positive");
    require(t_ini >= 1 && n_p >= 1, ErrorCode::InvalidConfig, "T_ini and N_p must be >= 1");
    require(n_z >= 1 && n_v >= 1, ErrorCode::InvalidConfig, "n_z and n_v must be >= 1");
    require(holdout_fraction >= 0.0 && holdout_fraction < 1.0, ErrorCode::InvalidConfig,
            "holdout_fraction must lie in [0, 1)");
}

TrainingData prepare_training_data(const Dataset& d, const Normalizer& y_norm, const Normalizer& u_norm,
                                   Eigen::Index depth, double holdout_fraction)
{
    const Eigen::Index h = d.split().hankel_rows;
    const Eigen::Index n_train = d.split().train_rows;
    const Eigen::Index n_hold = static_cast<Eigen::Index>(std::floor(holdout_fraction * static_cast<double>(n_train)));
    const Eigen::Index n_fit = n_train - n_hold;
    require(h >= depth, ErrorCode::InsufficientHistory, "Hankel split shorter than T_ini + N_p");
    require(n_fit >= depth, ErrorCode::InsufficientHistory, "training split shorter than T_ini + N_p");

    const Eigen::MatrixXd& u = d.u().values();
    const Eigen::MatrixXd& y = d.y().values();
    const Eigen::MatrixXd& c = d.c().values();
    const Eigen::MatrixXd yc = d.yc();

    TrainingData t;
    t.depth = depth;
    t.y_fit = y_norm.normalize(y.middleRows(h, n_fit));
    t.u_fit = u_norm.normalize(u.middleRows(h, n_fit));
    t.c_fit = c.col(0).segment(h, n_fit);
    t.yc_fit = yc.middleRows(h, n_fit);
    t.y_hold = y_norm.normalize(y.middleRows(h + n_fit, n_hold));
    t.u_hold = u_norm.normalize(u.middleRows(h + n_fit, n_hold));
    t.c_hold = c.col(0).segment(h + n_fit, n_hold);
    t.yc_hold = yc.middleRows(h + n_fit, n_hold);
    t.y_hankel = y_norm.normalize(y.topRows(h));
    t.u_hankel = u_norm.normalize(u.topRows(h));

    // pinv(H_u) = V_r S_r^-1 U_r'; applied to the training windows it is kept in factored form.
    const Eigen::MatrixXd hu = build_hankel(u.topRows(h), depth).data;
    const Eigen::MatrixXd hu_fit = build_hankel(u.middleRows(h, n_fit), depth).data;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(hu, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    Eigen::Index r = 0;
    while (r < s.size() && s(r) > 1e-10 * s(0)) ++r;
    t.rank_deficient = r < hu.rows();
    t.willems_basis = svd.matrixV().leftCols(r);
    t.willems_coeffs = s.head(r).cwiseInverse().asDiagonal() * (svd.matrixU().leftCols(r).transpose() * hu_fit);
    return t;
}

namespace {

struct TermEval {
    double economic = 0.0;
    double reconstruction = 0.0;
    double lifted_output = 0.0;
    double lifted_input = 0.0;
    Eigen::VectorXd grad;
};

struct Offsets {
    Eigen::Index f = 0, n = 0, cost = 0, total = 0;
};

Offsets offsets(const ModelBundle& m)
{
    Offsets o;
    o.f = 0;
    o.n = m.output_net.parameter_count();
    o.cost = o.n + m.input_net.parameter_count();
    o.total = o.cost + m.cost.parameter_count();
    return o;
}

// Economic and reconstruction terms on a set of rows (normalized network inputs).
TermEval econ_terms(const ModelBundle& m, const Eigen::MatrixXd& y, const Eigen::MatrixXd& u, const Eigen::VectorXd& c,
                    const Eigen::MatrixXd& yc, double a_e, double a_re, bool with_grad)
{
    TermEval t;
    const auto fz = m.output_net.forward_cached(y);
    const auto fv = m.input_net.forward_cached(u);
    const Eigen::MatrixXd& z = fz.output;
    const Eigen::MatrixXd& v = fv.output;
    const double n = static_cast<double>(y.rows());

    const Eigen::VectorXd r_e = c - eval_cost_batch(m.cost, z, v);
    t.economic = r_e.squaredNorm() / n;
    Eigen::MatrixXd r_re;
    if (yc.cols() > 0) {
        r_re = yc - reconstruct_output_batch(m.cost, z);
        t.reconstruction = r_re.squaredNorm() / n;
    }
    if (!with_grad) return t;

    const Offsets o = offsets(m);
    t.grad = Eigen::VectorXd::Zero(o.total);
    const CostBackward cb = cost_backward(m.cost, z, v, (-2.0 * a_e / n) * r_e);
    Eigen::MatrixXd dz = cb.z;
    Eigen::VectorXd dcost = cb.params;
    if (yc.cols() > 0) {
        const Eigen::MatrixXd dyc = (-2.0 * a_re / n) * r_re;
        const Eigen::MatrixXd dg = dyc.transpose() * z;
        dcost.tail(dg.size()) += Eigen::Map<const Eigen::VectorXd>(dg.data(), dg.size());
        dz += dyc * m.cost.g;
    }
    t.grad.segment(o.f, o.n) = m.output_net.backward(fz, dz).params;
    t.grad.segment(o.n, o.cost - o.n) = m.input_net.backward(fv, cb.v).params;
    t.grad.tail(dcost.size()) = dcost;
    return t;
}

struct WillemsBranch {
    double loss = 0.0;
    Eigen::MatrixXd d_hankel; // gradient on the Hankel-split samples
    Eigen::MatrixXd d_fit;    // gradient on the fitting samples
};

WillemsBranch willems_branch(const Eigen::MatrixXd& w_hankel, const Eigen::MatrixXd& w_fit, const TrainingData& data,
                             double weight, bool with_grad)
{
    const Eigen::Index depth = data.depth;
    const Eigen::MatrixXd hd = build_hankel(w_hankel, depth).data;
    const Eigen::MatrixXd hw = build_hankel(w_fit, depth).data;
    const Eigen::MatrixXd projected = hd * data.willems_basis;
    const Eigen::MatrixXd r = hw - projected * data.willems_coeffs;
    const double nwin = static_cast<double>(hw.cols());
    WillemsBranch b;
    b.loss = r.squaredNorm() / nwin;
    if (with_grad) {
        const Eigen::MatrixXd d_hw = (2.0 * weight / nwin) * r;
        const Eigen::MatrixXd d_hd = (-2.0 * weight / nwin) * (r * data.willems_coeffs.transpose()) *
                                     data.willems_basis.transpose();
        b.d_fit = hankel_adjoint(d_hw, depth, w_fit.cols(), w_fit.rows());
        b.d_hankel = hankel_adjoint(d_hd, depth, w_hankel.cols(), w_hankel.rows());
    }
    return b;
}

TermEval willems_terms(const ModelBundle& m, const TrainingData& data, double a_z, double a_v, bool with_grad)
{
    TermEval t;
    const auto zh = m.output_net.forward_cached(data.y_hankel);
    const auto zf = m.output_net.forward_cached(data.y_fit);
    const auto vh = m.input_net.forward_cached(data.u_hankel);
    const auto vf = m.input_net.forward_cached(data.u_fit);
    const auto bz = willems_branch(zh.output, zf.output, data, a_z, with_grad);
    const auto bv = willems_branch(vh.output, vf.output, data, a_v, with_grad);
    t.lifted_output = bz.loss;
    t.lifted_input = bv.loss;
    if (!with_grad) return t;

    const Offsets o = offsets(m);
    t.grad = Eigen::VectorXd::Zero(o.total);
    t.grad.segment(o.f, o.n) = m.output_net.backward(zh, bz.d_hankel).params + m.output_net.backward(zf, bz.d_fit).params;
    t.grad.segment(o.n, o.cost - o.n) =
        m.input_net.backward(vh, bv.d_hankel).params + m.input_net.backward(vf, bv.d_fit).params;
    return t;
}

double weighted_total(const EpochLosses& l, const std::array<double, 4>& a)
{
    return a[0] * l.economic + a[1] * l.reconstruction + a[2] * l.lifted_output + a[3] * l.lifted_input;
}

void check_finite(const EpochLosses& l, Eigen::Index epoch)
{
    const bool ok = std::isfinite(l.total) && std::isfinite(l.economic) && std::isfinite(l.reconstruction) &&
                    std::isfinite(l.lifted_output) && std::isfinite(l.lifted_input);
    require(ok, ErrorCode::NonFiniteLoss,
            "epoch " + std::to_string(epoch) + ": economic=" + std::to_string(l.economic) +
                " reconstruction=" + std::to_string(l.reconstruction) + " lifted_output=" +
                std::to_string(l.lifted_output) + " lifted_input=" + std::to_string(l.lifted_input));
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx, std::size_t first,
                            std::size_t count)
{
    Eigen::MatrixXd out(static_cast<Eigen::Index>(count), m.cols());
    for (std::size_t i = 0; i < count; ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[first + i]);
    return out;
}

} // namespace

double loss_economic(const ModelBundle& m, const Eigen::MatrixXd& y_norm, const Eigen::MatrixXd& u_norm,
                     const Eigen::VectorXd& c)
{
    require(y_norm.rows() > 0, ErrorCode::InvalidConfig, "empty batch");
    return econ_terms(m, y_norm, u_norm, c, Eigen::MatrixXd(y_norm.rows(), 0), 0.0, 0.0, false).economic;
}

double loss_reconstruction(const ModelBundle& m, const Eigen::MatrixXd& y_norm, const Eigen::MatrixXd& yc)
{
    require(y_norm.rows() > 0, ErrorCode::InvalidConfig, "empty batch");
    const Eigen::MatrixXd z = m.output_net.forward(y_norm);
    return (yc - reconstruct_output_batch(m.cost, z)).squaredNorm() / static_cast<double>(y_norm.rows());
}

WillemsLosses loss_willems(const ModelBundle& m, const TrainingData& data)
{
    const auto t = willems_terms(m, data, 0.0, 0.0, false);
    return {t.lifted_output, t.lifted_input};
}

double willems_residual(const Eigen::MatrixXd& w_hankel, const Eigen::MatrixXd& w_windows, const TrainingData& data)
{
    return willems_branch(w_hankel, w_windows, data, 0.0, false).loss;
}

CompositeEval evaluate_composite(const ModelBundle& m, const TrainingData& data, const std::array<double, 4>& alphas,
                                 bool with_grad)
{
    const auto e = econ_terms(m, data.y_fit, data.u_fit, data.c_fit, data.yc_fit, alphas[0], alphas[1], with_grad);
    const auto w = willems_terms(m, data, alphas[2], alphas[3], with_grad);
    CompositeEval out;
    out.losses.economic = e.economic;
    out.losses.reconstruction = e.reconstruction;
    out.losses.lifted_output = w.lifted_output;
    out.losses.lifted_input = w.lifted_input;
    out.losses.total = weighted_total(out.losses, alphas);
    if (with_grad) out.grad = e.grad + w.grad;
    return out;
}

ModelBundle initial_model(const Dataset& d, const TrainConfig& cfg)
{
    cfg.validate();
    const auto norms = fit_normalizer(d);
    ModelBundle m;
    m.y_norm = norms.y;
    m.u_norm = norms.u;
    m.output_net = LiftingNetwork::make(d.n_y(), cfg.hidden, cfg.n_z, cfg.seed);
    m.input_net = LiftingNetwork::make(d.n_u(), cfg.hidden, cfg.n_v, cfg.seed + 1);
    m.cost = EconCostModel::zeros(cfg.n_z, cfg.n_v, d.n_c());

    const Eigen::Index h = d.split().hankel_rows;
    const Eigen::Index n = d.split().train_rows;
    m.cost.b_z = d.c().values().col(0).segment(h, n).mean();
    if (d.n_c() > 0) {
        const Eigen::MatrixXd z = m.lift_outputs(d.y().values().middleRows(h, n));
        m.cost.g = z.completeOrthogonalDecomposition().solve(d.yc().middleRows(h, n)).transpose();
    }
    return m;
}

TrainResult train(const Dataset& d, const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    return train_from(initial_model(d, cfg), d, cfg, on_epoch);
}

TrainResult train_from(ModelBundle model, const Dataset& d, const TrainConfig& cfg, const EpochCallback& on_epoch)
{
    cfg.validate();
    const TrainingData data = prepare_training_data(d, model.y_norm, model.u_norm, cfg.t_ini + cfg.n_p,
                                                    cfg.holdout_fraction);
    TrainResult res;
    TrainReport& rep = res.report;
    rep.willems_rank_deficient = data.rank_deficient;
    if (data.rank_deficient)
        rep.warnings.push_back("input Hankel of the Hankel split is rank deficient; its pseudo-inverse drops directions");

    std::array<double, 4> alphas = cfg.alphas;
    {
        const auto init = evaluate_composite(model, data, {1.0, 1.0, 1.0, 1.0}, false);
        if (cfg.auto_balance) {
            const double terms[4] = {init.losses.economic, init.losses.reconstruction, init.losses.lifted_output,
                                     init.losses.lifted_input};
            for (int i = 0; i < 4; ++i)
                if (alphas[i] > 0.0) alphas[i] /= std::max(terms[i], 1e-12);
        }
    }
    rep.alphas = alphas;

    const bool train_nets = !cfg.freeze_nets && (alphas[0] > 0.0 || alphas[1] > 0.0 || alphas[2] > 0.0 || alphas[3] > 0.0);
    const Offsets o = offsets(model);
    Eigen::VectorXd params = model.parameters();
    AdamState adam_nets = AdamState::zeros(o.cost);
    AdamState adam_cost = AdamState::zeros(o.total - o.cost);

    auto record = [&](Eigen::Index epoch) {
        auto ev = evaluate_composite(model, data, alphas, false);
        check_finite(ev.losses, epoch);
        rep.epochs.push_back(ev.losses);
        if (on_epoch) on_epoch(epoch, ev.losses);
        return ev.losses.total;
    };
    const double initial_total = record(0);
    double best_total = initial_total;
    Eigen::VectorXd best_params = params;

    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.y_fit.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const bool any_willems = alphas[2] > 0.0 || alphas[3] > 0.0;

    for (Eigen::Index epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // The lifted-trajectory terms are global; their gradient is refreshed once per epoch.
        Eigen::VectorXd g_willems = Eigen::VectorXd::Zero(o.total);
        if (any_willems && train_nets) g_willems = willems_terms(model, data, alphas[2], alphas[3], true).grad;

        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t first = 0; first < order.size(); first += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t count = std::min(order.size() - first, static_cast<std::size_t>(cfg.batch_size));
            const auto yb = gather_rows(data.y_fit, order, first, count);
            const auto ub = gather_rows(data.u_fit, order, first, count);
            const auto cb = gather_rows(data.c_fit, order, first, count);
            const auto ycb = gather_rows(data.yc_fit, order, first, count);
            Eigen::VectorXd g = econ_terms(model, yb, ub, cb.col(0), ycb, alphas[0], alphas[1], true).grad + g_willems;
            if (!g.allFinite()) throw Error(ErrorCode::NonFiniteLoss, "non-finite gradient in epoch " + std::to_string(epoch));

            if (train_nets) {
                Eigen::VectorXd head = params.head(o.cost);
                adam_step(head, g.head(o.cost), adam_nets, cfg.lr_nets);
                params.head(o.cost) = head;
            }
            Eigen::VectorXd tail = params.tail(o.total - o.cost);
            adam_step(tail, g.tail(o.total - o.cost), adam_cost, cfg.lr_cost);
            params.tail(o.total - o.cost) = tail;
            model.set_parameters(params);
        }

        const double total = record(epoch);
        if (total < best_total) {
            best_total = total;
            best_params = params;
        }
    }

    if (rep.epochs.back().total > initial_total) {
        model.set_parameters(best_params);
        rep.reverted_to_best = true;
        rep.warnings.push_back("final loss exceeded the initial loss; kept the best epoch");
    }

    if (train_nets) {
        const Eigen::MatrixXd z = model.output_net.forward(data.y_fit);
        const Eigen::RowVectorXd mean = z.colwise().mean();
        const Eigen::VectorXd sd = ((z.rowwise() - mean).array().square().colwise().sum() /
                                    std::max<double>(1.0, static_cast<double>(z.rows() - 1)))
                                       .sqrt()
                                       .transpose();
        require(sd.maxCoeff() >= 1e-6, ErrorCode::CollapseDetected, "lifted outputs are constant across the train split");
    }

    if (data.c_hold.size() > 0) {
        const Eigen::VectorXd chat =
            eval_cost_batch(model.cost, model.output_net.forward(data.y_hold), model.input_net.forward(data.u_hold));
        const double mse = (data.c_hold - chat).squaredNorm() / static_cast<double>(chat.size());
        const double var = (data.c_hold.array() - data.c_hold.mean()).square().mean();
        rep.holdout_mse = mse;
        rep.holdout_normalized_mse = var > 0.0 ? mse / var : 0.0;
        rep.holdout_r2 = var > 0.0 ? 1.0 - mse / var : 0.0;
    }
    res.model = std::move(model);
    return res;
}

TrainResult fit_raw_surrogate(const Dataset& d, const TrainConfig& cfg_in)
{
    TrainConfig cfg = cfg_in;
    cfg.freeze_nets = true;
    cfg.alphas = {1.0, 1.0, 0.0, 0.0};
    cfg.n_z = d.n_y();
    cfg.n_v = d.n_u();

    ModelBundle m = ModelBundle::raw(d.n_y(), d.n_u(), d.n_c());
    const Eigen::Index h = d.split().hankel_rows;
    const Eigen::Index n_train = d.split().train_rows;
    const Eigen::Index n_fit =
        n_train - static_cast<Eigen::Index>(std::floor(cfg.holdout_fraction * static_cast<double>(n_train)));
    const Eigen::MatrixXd y = d.y().values().middleRows(h, n_fit);
    const Eigen::MatrixXd u = d.u().values().middleRows(h, n_fit);
    const Eigen::VectorXd c = d.c().values().col(0).segment(h, n_fit);
    const Eigen::Index ny = d.n_y(), nu = d.n_u();

    // Unconstrained separable quadratic by least squares, then clamp curvature to be positive and refit the rest.
    Eigen::MatrixXd phi(n_fit, 2 * ny + 2 * nu + 1);
    phi << y.array().square().matrix(), y, u.array().square().matrix(), u, Eigen::VectorXd::Ones(n_fit);
    const Eigen::VectorXd coef = phi.completeOrthogonalDecomposition().solve(c);
    const double floor = 1e-6 * std::max(1.0, coef.head(ny).cwiseAbs().maxCoeff());
    const Eigen::VectorXd qy = coef.head(ny).cwiseMax(floor);
    const Eigen::VectorXd qu = coef.segment(2 * ny, nu).cwiseMax(floor);
    Eigen::MatrixXd lin(n_fit, ny + nu + 1);
    lin << y, u, Eigen::VectorXd::Ones(n_fit);
    const Eigen::VectorXd rest = c - y.array().square().matrix() * qy - u.array().square().matrix() * qu;
    const Eigen::VectorXd lcoef = lin.completeOrthogonalDecomposition().solve(rest);

    m.cost.q_z = qy.array().log().matrix();
    m.cost.q_v = qu.array().log().matrix();
    m.cost.p_z = lcoef.head(ny);
    m.cost.p_v = lcoef.segment(ny, nu);
    m.cost.b_z = lcoef(ny + nu);
    m.cost.b_v = 0.0;
    if (d.n_c() > 0) m.cost.g = y.completeOrthogonalDecomposition().solve(d.yc().middleRows(h, n_fit)).transpose();
    return train_from(std::move(m), d, cfg);
}

void write_train_report_csv(const std::filesystem::path& path, const TrainReport& r)
{
    std::ofstream out(path);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    out << "epoch,total,economic,reconstruction,lifted_output,lifted_input\n";
    for (std::size_t k = 0; k < r.epochs.size(); ++k) {
        const auto& e = r.epochs[k];
        out << k << ',' << format_double(e.total) << ',' << format_double(e.economic) << ','
            << format_double(e.reconstruction) << ',' << format_double(e.lifted_output) << ','
            << format_double(e.lifted_input) << '\n';
    }
}

} // namespace deeepc
