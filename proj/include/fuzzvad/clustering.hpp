#pragma once

// Fuzzy C-means over 3-D rating points and the fuzzy silhouette index.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fuzzvad/fuzzy.hpp"

namespace fuzzvad {

using Point3 = std::array<double, 3>;

struct FcmConfig {
    int clusters = 4;
    double fuzzifier = 2.0;
    double tolerance = 1e-6;  // max centroid displacement
    int max_iterations = 300;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Row-major n x c membership matrix.
class MembershipMatrix {
public:
    MembershipMatrix() = default;
    MembershipMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
    const std::vector<double>& data() const noexcept { return data_; }

    bool operator==(const MembershipMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct FcmResult {
    std::vector<Point3> centroids;
    MembershipMatrix memberships;
    int iterations_run = 0;
    std::vector<double> objective_trace;  // J_m after each iteration
    double fuzzifier = 2.0;

    /// Index of the largest membership of each row (first on ties).
    std::vector<int> hard_assignments() const;
};

/// Alternating centroid/membership updates from a seeded random
/// row-normalised membership matrix. A point that coincides with a centroid
/// gets a one-hot row. Throws DomainError for invalid configs and
/// NumericError when there are fewer points than clusters or a point is not finite.
FcmResult fcm_fit(std::span<const Point3> points, const FcmConfig& config);

/// J_m = sum_ij u_ij^m |x_i - v_j|^2.
double fcm_objective(std::span<const Point3> points, const std::vector<Point3>& centroids,
                     const MembershipMatrix& u, double m);

/// Membership of one point against fixed centroids; sums to 1.
std::vector<double> cluster_membership_features(const Point3& point, std::span<const Point3> centroids, double m);
std::vector<double> cluster_membership_features(const VadRating& rating, const FcmResult& result);

/// Crisp silhouette of every point under the given hard assignment.
/// Points in singleton clusters score 0.
std::vector<double> crisp_silhouettes(std::span<const Point3> points, std::span<const int> labels, int clusters);

/// Silhouettes weighted by (u_p - u_q)^alpha, where u_p and u_q are the two
/// largest memberships of a point. Throws NumericError when a cluster is
/// empty under hard assignment or the data has no spread.
double fuzzy_silhouette(std::span<const Point3> points, const FcmResult& result, double alpha = 1.0);

struct SweepRow {
    int clusters = 0;
    double silhouette = 0.0;
    FcmResult result;
};

/// Fits every c in [c_min, c_max] with the template config (its clusters
/// field is overwritten). An empty range yields an empty table.
std::vector<SweepRow> sweep_clusters(std::span<const Point3> points, int c_min, int c_max,
                                     const FcmConfig& config_template, double alpha = 1.0);

struct ClusterReport {
    std::vector<int> assignments;
    std::vector<std::size_t> cluster_counts;
    /// label -> per-cluster counts; labels in first-seen order.
    std::vector<std::pair<std::string, std::vector<std::size_t>>> label_distribution;
};

ClusterReport cluster_report(const FcmResult& result, std::span<const std::string> labels);

}  // namespace fuzzvad
