#include "deeepc/model.hpp"

#include "deeepc/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace deeepc {

Eigen::MatrixXd ModelBundle::lift_outputs(const Eigen::MatrixXd& y) const
{
    return output_net.forward(y_norm.normalize(y));
}

Eigen::MatrixXd ModelBundle::lift_inputs(const Eigen::MatrixXd& u) const
{
    return input_net.forward(u_norm.normalize(u));
}

Eigen::Index ModelBundle::parameter_count() const
{
    return output_net.parameter_count() + input_net.parameter_count() + cost.parameter_count();
}

Eigen::VectorXd ModelBundle::parameters() const
{
    Eigen::VectorXd flat(parameter_count());
    flat << output_net.parameters(), input_net.parameters(), cost.parameters();
    return flat;
}

void ModelBundle::set_parameters(const Eigen::VectorXd& flat)
{
    require(flat.size() == parameter_count(), ErrorCode::DimensionMismatch, "bundle parameter vector has wrong size");
    const Eigen::Index nf = output_net.parameter_count(), nn = input_net.parameter_count();
    output_net.set_parameters(flat.head(nf));
    input_net.set_parameters(flat.segment(nf, nn));
    cost.set_parameters(flat.tail(cost.parameter_count()));
}

ModelBundle ModelBundle::raw(Eigen::Index n_y, Eigen::Index n_u, Eigen::Index n_c)
{
    ModelBundle b;
    b.output_net = LiftingNetwork::identity(n_y);
    b.input_net = LiftingNetwork::identity(n_u);
    b.y_norm = Normalizer::identity(n_y);
    b.u_norm = Normalizer::identity(n_u);
    b.cost = EconCostModel::zeros(n_y, n_u, n_c);
    return b;
}

namespace {

void write_vector(std::ostream& out, const Eigen::VectorXd& v)
{
    const std::int64_t n = v.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
}

Eigen::VectorXd read_vector(std::istream& in)
{
    std::int64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    require(in.good() && n >= 0 && n < (1 << 24), ErrorCode::Io, "corrupt vector in model bundle");
    Eigen::VectorXd v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * n));
    require(in.gcount() == static_cast<std::streamsize>(sizeof(double) * n), ErrorCode::Io, "truncated model bundle");
    return v;
}

} // namespace

// One JSON header line, then the two networks, the cost model and the normalizers.
void ModelBundle::save(const std::filesystem::path& path) const
{
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    nlohmann::json header = {{"format", "deeepc-bundle"},
                             {"version", 1},
                             {"n_y", n_y()},
                             {"n_u", n_u()},
                             {"n_z", n_z()},
                             {"n_v", n_v()},
                             {"n_c", cost.n_c()},
                             {"config_hash", config_hash()},
                             {"config", nlohmann::json::parse(config_json)}};
    out << header.dump() << "\n";
    output_net.write(out);
    input_net.write(out);
    cost.write(out);
    write_vector(out, y_norm.shift());
    write_vector(out, y_norm.scale());
    write_vector(out, u_norm.shift());
    write_vector(out, u_norm.scale());
    require(out.good(), ErrorCode::Io, "failed writing " + path.string());
}

ModelBundle ModelBundle::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::Io, "cannot open " + path.string());
    std::string line;
    std::getline(in, line);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Io, "bad model bundle header: " + std::string(e.what()));
    }
    require(header.value("format", "") == "deeepc-bundle", ErrorCode::Io, "not a model bundle: " + path.string());
    ModelBundle b;
    b.config_json = header.at("config").dump();
    b.output_net = LiftingNetwork::read(in);
    b.input_net = LiftingNetwork::read(in);
    b.cost = EconCostModel::read(in);
    auto ys = read_vector(in);
    auto yc = read_vector(in);
    b.y_norm = Normalizer(ys, yc);
    auto us = read_vector(in);
    auto uc = read_vector(in);
    b.u_norm = Normalizer(us, uc);
    return b;
}

std::string ModelBundle::config_hash() const { return fnv1a_hex(config_json); }

std::string fnv1a_hex(const std::string& bytes)
{
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace deeepc
