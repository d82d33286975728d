#include "deeepc/mlp.hpp"

#include "deeepc/error.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace deeepc {

LiftingNetwork::LiftingNetwork(std::vector<DenseLayer> layers, std::uint64_t seed)
    : layers_(std::move(layers)), seed_(seed)
{
    validate();
}

void LiftingNetwork::validate() const
{
    require(!layers_.empty(), ErrorCode::InvalidConfig, "network needs at least one layer");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        require(l.bias.size() == l.weight.rows(), ErrorCode::DimensionMismatch, "bias size does not match layer width");
        if (i > 0)
            require(l.weight.cols() == layers_[i - 1].weight.rows(), ErrorCode::DimensionMismatch,
                    "layer dimensions do not chain");
        require(l.weight.allFinite() && l.bias.allFinite(), ErrorCode::NonFiniteLoss, "non-finite network parameter");
    }
}

LiftingNetwork LiftingNetwork::make(Eigen::Index in_dim, const std::vector<Eigen::Index>& hidden, Eigen::Index out_dim,
                                    std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> widths{in_dim};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(out_dim);

    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        const Eigen::Index fan_in = widths[i], fan_out = widths[i + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseLayer l{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index c = 0; c < fan_in; ++c)
            for (Eigen::Index r = 0; r < fan_out; ++r) l.weight(r, c) = dist(rng);
        layers.push_back(std::move(l));
    }
    return LiftingNetwork(std::move(layers), seed);
}

LiftingNetwork LiftingNetwork::identity(Eigen::Index dim)
{
    return LiftingNetwork({DenseLayer{Eigen::MatrixXd::Identity(dim, dim), Eigen::VectorXd::Zero(dim)}}, 0);
}

std::vector<Eigen::Index> LiftingNetwork::hidden_widths() const
{
    std::vector<Eigen::Index> w;
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i) w.push_back(layers_[i].weight.rows());
    return w;
}

ForwardCache LiftingNetwork::forward_cached(const Eigen::MatrixXd& x) const
{
    require(x.cols() == in_dim(), ErrorCode::DimensionMismatch,
            "network expects " + std::to_string(in_dim()) + " input columns, got " + std::to_string(x.cols()));
    ForwardCache cache;
    Eigen::MatrixXd a = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        Eigen::MatrixXd pre = a * l.weight.transpose();
        pre.rowwise() += l.bias.transpose();
        cache.inputs.push_back(std::move(a));
        const bool hidden = i + 1 < layers_.size();
        a = hidden ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
        cache.pre.push_back(std::move(pre));
    }
    cache.output = std::move(a);
    return cache;
}

Eigen::MatrixXd LiftingNetwork::forward(const Eigen::MatrixXd& x) const { return forward_cached(x).output; }

BackwardResult LiftingNetwork::backward(const ForwardCache& cache, const Eigen::MatrixXd& upstream) const
{
    require(upstream.rows() == cache.output.rows() && upstream.cols() == out_dim(), ErrorCode::DimensionMismatch,
            "upstream gradient shape does not match the forward output");
    BackwardResult r;
    r.params.resize(parameter_count());

    std::vector<Eigen::Index> offsets(layers_.size());
    Eigen::Index off = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        offsets[i] = off;
        off += layers_[i].weight.size() + layers_[i].bias.size();
    }

    Eigen::MatrixXd delta = upstream;
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        const auto& l = layers_[idx];
        if (idx + 1 < layers_.size()) {
            // ReLU: derivative 0 at and below zero.
            delta = (cache.pre[idx].array() > 0.0).select(delta, 0.0);
        }
        const Eigen::MatrixXd gw = delta.transpose() * cache.inputs[idx];
        const Eigen::VectorXd gb = delta.colwise().sum().transpose();
        r.params.segment(offsets[idx], gw.size()) = Eigen::Map<const Eigen::VectorXd>(gw.data(), gw.size());
        r.params.segment(offsets[idx] + gw.size(), gb.size()) = gb;
        delta = delta * l.weight;
    }
    r.input = std::move(delta);
    return r;
}

BackwardResult LiftingNetwork::backward(const Eigen::MatrixXd& x, const Eigen::MatrixXd& upstream) const
{
    return backward(forward_cached(x), upstream);
}

Eigen::Index LiftingNetwork::parameter_count() const
{
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

Eigen::VectorXd LiftingNetwork::parameters() const
{
    Eigen::VectorXd flat(parameter_count());
    Eigen::Index off = 0;
    for (const auto& l : layers_) {
        flat.segment(off, l.weight.size()) = Eigen::Map<const Eigen::VectorXd>(l.weight.data(), l.weight.size());
        off += l.weight.size();
        flat.segment(off, l.bias.size()) = l.bias;
        off += l.bias.size();
    }
    return flat;
}

std::vector<DenseLayer> LiftingNetwork::unpack(const Eigen::VectorXd& flat) const
{
    require(flat.size() == parameter_count(), ErrorCode::DimensionMismatch, "flat parameter vector has wrong size");
    std::vector<DenseLayer> out;
    Eigen::Index off = 0;
    for (const auto& l : layers_) {
        DenseLayer d;
        d.weight = Eigen::Map<const Eigen::MatrixXd>(flat.data() + off, l.weight.rows(), l.weight.cols());
        off += l.weight.size();
        d.bias = flat.segment(off, l.bias.size());
        off += l.bias.size();
        out.push_back(std::move(d));
    }
    return out;
}

void LiftingNetwork::set_parameters(const Eigen::VectorXd& flat)
{
    layers_ = unpack(flat);
    validate();
}

bool LiftingNetwork::operator==(const LiftingNetwork& other) const
{
    if (layers_.size() != other.layers_.size() || seed_ != other.seed_) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& a = layers_[i];
        const auto& b = other.layers_[i];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols()) return false;
        if (std::memcmp(a.weight.data(), b.weight.data(), sizeof(double) * a.weight.size()) != 0) return false;
        if (std::memcmp(a.bias.data(), b.bias.data(), sizeof(double) * a.bias.size()) != 0) return false;
    }
    return true;
}

// Header lines, then `count` raw doubles in native byte order.
void LiftingNetwork::write(std::ostream& out) const
{
    out << "deeepc-mlp 1\n";
    out << "in " << in_dim() << "\n";
    out << "out " << out_dim() << "\n";
    out << "hidden";
    for (auto w : hidden_widths()) out << ' ' << w;
    out << "\n";
    out << "activation relu identity\n";
    out << "seed " << seed_ << "\n";
    const Eigen::VectorXd flat = parameters();
    out << "count " << flat.size() << "\n";
    out.write(reinterpret_cast<const char*>(flat.data()), static_cast<std::streamsize>(sizeof(double) * flat.size()));
}

LiftingNetwork LiftingNetwork::read(std::istream& in)
{
    std::string line, key;
    auto next = [&](const char* expected) {
        require(static_cast<bool>(std::getline(in, line)), ErrorCode::Io, "truncated network header");
        std::istringstream ss(line);
        ss >> key;
        require(key == expected, ErrorCode::Io, std::string("expected '") + expected + "' in network header, got '" + key + "'");
        return ss.str().substr(key.size());
    };
    next("deeepc-mlp");
    Eigen::Index in_dim = std::stol(next("in"));
    Eigen::Index out_dim = std::stol(next("out"));
    std::vector<Eigen::Index> hidden;
    {
        std::istringstream ss(next("hidden"));
        Eigen::Index w;
        while (ss >> w) hidden.push_back(w);
    }
    const std::string act = next("activation");
    require(act.find("relu") != std::string::npos, ErrorCode::Io, "unsupported activation tag");
    const std::uint64_t seed = std::stoull(next("seed"));
    const Eigen::Index count = std::stol(next("count"));

    LiftingNetwork net = make(in_dim, hidden, out_dim, seed);
    require(net.parameter_count() == count, ErrorCode::Io, "parameter count does not match header dimensions");
    Eigen::VectorXd flat(count);
    in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(sizeof(double) * count));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(double) * count), ErrorCode::Io, "truncated network payload");
    net.set_parameters(flat);
    return net;
}

void LiftingNetwork::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    write(out);
}

LiftingNetwork LiftingNetwork::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::Io, "cannot open " + path.string());
    return read(in);
}

AdamState AdamState::zeros(Eigen::Index n)
{
    AdamState s;
    s.m = Eigen::VectorXd::Zero(n);
    s.v = Eigen::VectorXd::Zero(n);
    return s;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr)
{
    require(params.size() == grads.size() && state.m.size() == params.size() && state.v.size() == params.size(),
            ErrorCode::DimensionMismatch, "Adam shapes do not match");
    ++state.step;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads.cwiseAbs2();
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + state.eps);
}

} // namespace deeepc
