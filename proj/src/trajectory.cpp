#include "deeepc/trajectory.hpp"

#include "deeepc/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace deeepc {

Trajectory::Trajectory(Eigen::MatrixXd values, double dt, std::vector<std::string> labels)
    : values_(std::move(values)), dt_(dt), labels_(std::move(labels))
{
    require(values_.rows() >= 1, ErrorCode::InvalidTrajectory, "trajectory needs at least one row");
    require(std::isfinite(dt_) && dt_ > 0.0, ErrorCode::InvalidTrajectory, "dt must be positive");
    require(values_.allFinite(), ErrorCode::InvalidTrajectory, "trajectory contains non-finite entries");
    require(labels_.empty() || static_cast<Eigen::Index>(labels_.size()) == values_.cols(),
            ErrorCode::InvalidTrajectory, "label count does not match column count");
}

Trajectory Trajectory::slice(Eigen::Index first, Eigen::Index count) const
{
    require(first >= 0 && count >= 1 && first + count <= length(), ErrorCode::InsufficientHistory,
            "slice out of range");
    return Trajectory(values_.middleRows(first, count), dt_, labels_);
}

Dataset::Dataset(Trajectory u, Trajectory y, Trajectory c, DatasetSplit split, std::vector<Eigen::Index> yc_index)
    : u_(std::move(u)), y_(std::move(y)), c_(std::move(c)), split_(split), yc_index_(std::move(yc_index))
{
    require(u_.length() == y_.length() && y_.length() == c_.length(), ErrorCode::LengthMismatch,
            "u, y and c must have equal row counts");
    require(u_.dt() == y_.dt() && y_.dt() == c_.dt(), ErrorCode::LengthMismatch, "u, y and c must share dt");
    require(c_.dim() == 1, ErrorCode::DimensionMismatch, "cost trajectory must have one column");
    require(split_.hankel_rows >= 0 && split_.train_rows >= 0 && split_.hankel_rows + split_.train_rows == rows(),
            ErrorCode::InvalidConfig, "dataset split must cover all rows");
    for (auto i : yc_index_)
        require(i >= 0 && i < y_.dim(), ErrorCode::DimensionMismatch, "y^c index out of range");
}

Eigen::MatrixXd Dataset::yc() const
{
    Eigen::MatrixXd out(rows(), n_c());
    for (Eigen::Index j = 0; j < n_c(); ++j) out.col(j) = y_.values().col(yc_index_[j]);
    return out;
}

Dataset Dataset::with_split(Eigen::Index hankel_rows) const
{
    hankel_rows = std::clamp<Eigen::Index>(hankel_rows, 0, rows());
    return Dataset(u_, y_, c_, {hankel_rows, rows() - hankel_rows}, yc_index_);
}

Normalizer::Normalizer(Eigen::VectorXd shift, Eigen::VectorXd scale) : shift_(std::move(shift)), scale_(std::move(scale))
{
    require(shift_.size() == scale_.size(), ErrorCode::DimensionMismatch, "normalizer shift/scale size mismatch");
    require((scale_.array() > 0.0).all() && scale_.allFinite() && shift_.allFinite(), ErrorCode::InvalidConfig,
            "normalizer scale must be positive and finite");
}

Normalizer Normalizer::identity(Eigen::Index dim)
{
    return Normalizer(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim));
}

Eigen::MatrixXd Normalizer::normalize(const Eigen::MatrixXd& rows) const
{
    require(rows.cols() == dim(), ErrorCode::DimensionMismatch, "normalize: column count mismatch");
    return (rows.rowwise() - shift_.transpose()).array().rowwise() / scale_.transpose().array();
}

Eigen::MatrixXd Normalizer::denormalize(const Eigen::MatrixXd& rows) const
{
    require(rows.cols() == dim(), ErrorCode::DimensionMismatch, "denormalize: column count mismatch");
    Eigen::MatrixXd out = rows.array().rowwise() * scale_.transpose().array();
    return out.rowwise() + shift_.transpose();
}

Normalizer fit_normalizer(const Eigen::MatrixXd& rows)
{
    require(rows.rows() >= 1, ErrorCode::EmptyFile, "cannot fit a normalizer on empty data");
    const Eigen::VectorXd mean = rows.colwise().mean().transpose();
    Eigen::VectorXd scale(rows.cols());
    const double denom = rows.rows() > 1 ? static_cast<double>(rows.rows() - 1) : 1.0;
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
        const double var = (rows.col(j).array() - mean(j)).square().sum() / denom;
        scale(j) = std::max(std::sqrt(var), kScaleFloor);
    }
    return Normalizer(mean, scale);
}

DatasetNormalizers fit_normalizer(const Dataset& d)
{
    return {fit_normalizer(d.u().values()), fit_normalizer(d.y().values())};
}

Trajectory window_ini(const Trajectory& t, Eigen::Index k, Eigen::Index t_ini)
{
    require(t_ini >= 1, ErrorCode::InvalidConfig, "T_ini must be positive");
    require(k >= t_ini, ErrorCode::InsufficientHistory,
            "need k >= T_ini (k=" + std::to_string(k) + ", T_ini=" + std::to_string(t_ini) + ")");
    require(k <= t.length(), ErrorCode::InsufficientHistory, "k beyond trajectory end");
    return t.slice(k - t_ini, t_ini);
}

namespace {

std::vector<std::string> split_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_cell(const std::string& s, double& out)
{
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

Eigen::Index column_of(const std::unordered_map<std::string, Eigen::Index>& index, const std::string& name)
{
    auto it = index.find(name);
    require(it != index.end(), ErrorCode::MissingColumn, "column '" + name + "' not found");
    return it->second;
}

} // namespace

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::Io, "cannot open " + path.string());

    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && !line.empty(), ErrorCode::EmptyFile,
            path.string() + " has no header");
    const auto header = split_line(line);
    std::unordered_map<std::string, Eigen::Index> index;
    for (std::size_t i = 0; i < header.size(); ++i) index.emplace(header[i], static_cast<Eigen::Index>(i));

    std::vector<Eigen::Index> ucol, ycol;
    for (const auto& n : schema.u) ucol.push_back(column_of(index, n));
    for (const auto& n : schema.y) ycol.push_back(column_of(index, n));
    const Eigen::Index ccol = column_of(index, schema.c);

    std::vector<Eigen::Index> yc_index;
    for (const auto& n : schema.yc) {
        auto it = std::find(schema.y.begin(), schema.y.end(), n);
        require(it != schema.y.end(), ErrorCode::MissingColumn, "y^c column '" + n + "' is not an output column");
        yc_index.push_back(static_cast<Eigen::Index>(it - schema.y.begin()));
    }

    std::vector<std::vector<double>> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row_no;
        const auto cells = split_line(line);
        require(cells.size() == header.size(), ErrorCode::NonNumericCell,
                "row " + std::to_string(row_no) + " has " + std::to_string(cells.size()) + " cells, expected " +
                    std::to_string(header.size()));
        std::vector<double> vals(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) {
            require(parse_cell(cells[j], vals[j]), ErrorCode::NonNumericCell,
                    "row " + std::to_string(row_no) + ", column '" + header[j] + "': '" + cells[j] + "'");
        }
        rows.push_back(std::move(vals));
    }
    require(!rows.empty(), ErrorCode::EmptyFile, path.string() + " has no data rows");

    const auto n = static_cast<Eigen::Index>(rows.size());
    auto gather = [&](const std::vector<Eigen::Index>& cols) {
        Eigen::MatrixXd m(n, static_cast<Eigen::Index>(cols.size()));
        for (Eigen::Index i = 0; i < n; ++i)
            for (std::size_t j = 0; j < cols.size(); ++j) m(i, static_cast<Eigen::Index>(j)) = rows[i][cols[j]];
        return m;
    };

    Trajectory u(gather(ucol), schema.dt, schema.u);
    Trajectory y(gather(ycol), schema.dt, schema.y);
    Trajectory c(gather({ccol}), schema.dt, {schema.c});
    const Eigen::Index hankel = std::min(schema.hankel_rows, n);
    return Dataset(std::move(u), std::move(y), std::move(c), {hankel, n - hankel}, std::move(yc_index));
}

std::string format_double(double v)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void save_csv(const std::filesystem::path& path, const Dataset& d, const DatasetSchema& schema)
{
    require(static_cast<Eigen::Index>(schema.u.size()) == d.n_u() && static_cast<Eigen::Index>(schema.y.size()) == d.n_y(),
            ErrorCode::DimensionMismatch, "schema does not match dataset dimensions");
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());

    std::string header;
    for (const auto& n : schema.u) header += n + ",";
    for (const auto& n : schema.y) header += n + ",";
    header += schema.c;
    out << header << '\n';
    std::string line;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < d.n_u(); ++j) line += format_double(d.u().values()(i, j)) + ",";
        for (Eigen::Index j = 0; j < d.n_y(); ++j) line += format_double(d.y().values()(i, j)) + ",";
        line += format_double(d.c().values()(i, 0));
        out << line << '\n';
    }
}

void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m, const std::vector<std::string>& header)
{
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorCode::Io, "cannot write " + path.string());
    if (!header.empty()) {
        for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
        out << '\n';
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
        out << '\n';
    }
}

} // namespace deeepc
