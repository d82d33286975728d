#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace deeepc {

/**
 * @brief Time-indexed samples of a fixed-dimension signal.
 *
 * Rows are time steps, columns are signal channels. Construction validates
 * shape, finiteness and dt; the object is immutable afterwards.
 */
class Trajectory {
public:
    Trajectory(Eigen::MatrixXd values, double dt, std::vector<std::string> labels = {});

    const Eigen::MatrixXd& values() const noexcept { return values_; }
    double dt() const noexcept { return dt_; }
    const std::vector<std::string>& labels() const noexcept { return labels_; }

    Eigen::Index length() const noexcept { return values_.rows(); }
    Eigen::Index dim() const noexcept { return values_.cols(); }

    Eigen::VectorXd row(Eigen::Index k) const { return values_.row(k).transpose(); }

    /// Contiguous rows [first, first + count).
    Trajectory slice(Eigen::Index first, Eigen::Index count) const;

private:
    Eigen::MatrixXd values_;
    double dt_;
    std::vector<std::string> labels_;
};

/// Column roles of a dataset file. Roles are declared, never inferred.
struct DatasetSchema {
    std::vector<std::string> u;
    std::vector<std::string> y;
    std::string c = "c";
    /// Subset of `y` that carries hard constraints (y^c).
    std::vector<std::string> yc;
    double dt = 1.0;
    /// Leading rows reserved for Hankel construction; the rest is training data.
    Eigen::Index hankel_rows = 1000;
};

struct DatasetSplit {
    Eigen::Index hankel_rows = 0;
    Eigen::Index train_rows = 0;
};

class Dataset {
public:
    Dataset(Trajectory u, Trajectory y, Trajectory c, DatasetSplit split, std::vector<Eigen::Index> yc_index = {});

    const Trajectory& u() const noexcept { return u_; }
    const Trajectory& y() const noexcept { return y_; }
    const Trajectory& c() const noexcept { return c_; }
    const DatasetSplit& split() const noexcept { return split_; }
    /// Column indices into y that form y^c.
    const std::vector<Eigen::Index>& yc_index() const noexcept { return yc_index_; }

    Eigen::Index rows() const noexcept { return u_.length(); }
    Eigen::Index n_u() const noexcept { return u_.dim(); }
    Eigen::Index n_y() const noexcept { return y_.dim(); }
    Eigen::Index n_c() const noexcept { return static_cast<Eigen::Index>(yc_index_.size()); }

    /// y^c columns of y for all rows.
    Eigen::MatrixXd yc() const;

    Dataset with_split(Eigen::Index hankel_rows) const;

private:
    Trajectory u_;
    Trajectory y_;
    Trajectory c_;
    DatasetSplit split_;
    std::vector<Eigen::Index> yc_index_;
};

/// Per-column affine map x -> (x - shift) / scale.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(Eigen::VectorXd shift, Eigen::VectorXd scale);

    static Normalizer identity(Eigen::Index dim);

    const Eigen::VectorXd& shift() const noexcept { return shift_; }
    const Eigen::VectorXd& scale() const noexcept { return scale_; }
    Eigen::Index dim() const noexcept { return shift_.size(); }

    Eigen::MatrixXd normalize(const Eigen::MatrixXd& rows) const;
    Eigen::MatrixXd denormalize(const Eigen::MatrixXd& rows) const;

private:
    Eigen::VectorXd shift_;
    Eigen::VectorXd scale_;
};

inline constexpr double kScaleFloor = 1e-8;

/// Column mean and sample standard deviation, std floored at kScaleFloor.
Normalizer fit_normalizer(const Eigen::MatrixXd& rows);

struct DatasetNormalizers {
    Normalizer u;
    Normalizer y;
};

DatasetNormalizers fit_normalizer(const Dataset& d);

/// Rows k - t_ini .. k - 1 of t.
Trajectory window_ini(const Trajectory& t, Eigen::Index k, Eigen::Index t_ini);

Dataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema);
void save_csv(const std::filesystem::path& path, const Dataset& d, const DatasetSchema& schema);

/// Plain numeric matrix with a header row, used for traces and Hankel dumps.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m,
                      const std::vector<std::string>& header = {});

/// Shortest round-trip decimal representation.
std::string format_double(double v);

} // namespace deeepc
