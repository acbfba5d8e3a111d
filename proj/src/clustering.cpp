#include "fuzzvad/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "fuzzvad/error.hpp"

namespace fuzzvad {

namespace {

double squared_distance(const Point3& a, const Point3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

double distance(const Point3& a, const Point3& b) { return std::sqrt(squared_distance(a, b)); }

// Eq. for u_ij written with squared distances: (d_ij^2 / d_ik^2)^(1/(m-1)).
void membership_row(const Point3& x, std::span<const Point3> centroids, double m, std::span<double> out) {
    const std::size_t c = centroids.size();
    for (std::size_t j = 0; j < c; ++j) {
        if (squared_distance(x, centroids[j]) == 0.0) {
            std::fill(out.begin(), out.end(), 0.0);
            out[j] = 1.0;
            return;
        }
    }
    const double exponent = 1.0 / (m - 1.0);
    for (std::size_t j = 0; j < c; ++j) {
        const double dj = squared_distance(x, centroids[j]);
        double denom = 0.0;
        for (std::size_t k = 0; k < c; ++k) denom += std::pow(dj / squared_distance(x, centroids[k]), exponent);
        out[j] = 1.0 / denom;
    }
}

std::vector<Point3> update_centroids(std::span<const Point3> points, const MembershipMatrix& u, double m) {
    const std::size_t c = u.cols();
    std::vector<Point3> v(c, Point3{0.0, 0.0, 0.0});
    std::vector<double> weight(c, 0.0);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double w = std::pow(u(i, j), m);
            weight[j] += w;
            for (int a = 0; a < 3; ++a) v[j][a] += w * points[i][a];
        }
    }
    for (std::size_t j = 0; j < c; ++j) {
        if (!(weight[j] > 0.0)) throw NumericError(fmt::format("fcm: cluster {} lost all membership", j));
        for (int a = 0; a < 3; ++a) v[j][a] /= weight[j];
    }
    return v;
}

}  // namespace

void FcmConfig::validate() const {
    if (clusters < 2) throw DomainError(fmt::format("fcm: clusters must be >= 2, got {}", clusters));
    if (!(fuzzifier > 1.0) || !std::isfinite(fuzzifier)) {
        throw DomainError(fmt::format("fcm: fuzzifier must be > 1, got {}", fuzzifier));
    }
    if (!(tolerance > 0.0)) throw DomainError(fmt::format("fcm: tolerance must be > 0, got {}", tolerance));
    if (max_iterations < 1) throw DomainError("fcm: max_iterations must be positive");
}

std::vector<int> FcmResult::hard_assignments() const {
    std::vector<int> out(memberships.rows());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto row = memberships.row(i);
        out[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

double fcm_objective(std::span<const Point3> points, const std::vector<Point3>& centroids,
                     const MembershipMatrix& u, double m) {
    double j_m = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = 0; j < centroids.size(); ++j) {
            j_m += std::pow(u(i, j), m) * squared_distance(points[i], centroids[j]);
        }
    }
    return j_m;
}

FcmResult fcm_fit(std::span<const Point3> points, const FcmConfig& config) {
    config.validate();
    const std::size_t n = points.size();
    const auto c = static_cast<std::size_t>(config.clusters);
    if (n < c) throw NumericError(fmt::format("fcm: {} points cannot form {} clusters", n, c));
    for (const auto& p : points) {
        if (!std::isfinite(p[0]) || !std::isfinite(p[1]) || !std::isfinite(p[2])) {
            throw NumericError("fcm: non-finite point");
        }
    }

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    FcmResult result;
    result.fuzzifier = config.fuzzifier;
    result.memberships = MembershipMatrix(n, c);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = result.memberships.row(i);
        double total = 0.0;
        for (auto& u : row) total += (u = unit(rng) + 1e-3);
        for (auto& u : row) u /= total;
    }

    const double m = config.fuzzifier;
    for (int it = 0; it < config.max_iterations; ++it) {
        auto centroids = update_centroids(points, result.memberships, m);
        for (std::size_t i = 0; i < n; ++i) membership_row(points[i], centroids, m, result.memberships.row(i));

        double shift = 0.0;
        if (!result.centroids.empty()) {
            for (std::size_t j = 0; j < c; ++j) shift = std::max(shift, distance(centroids[j], result.centroids[j]));
        } else {
            shift = std::numeric_limits<double>::infinity();
        }
        result.centroids = std::move(centroids);
        result.objective_trace.push_back(fcm_objective(points, result.centroids, result.memberships, m));
        result.iterations_run = it + 1;
        if (!std::isfinite(result.objective_trace.back())) throw NumericError("fcm: objective diverged");
        if (shift < config.tolerance) break;
    }
    return result;
}

std::vector<double> cluster_membership_features(const Point3& point, std::span<const Point3> centroids, double m) {
    if (centroids.size() < 2) throw DomainError("cluster features need at least 2 centroids");
    if (!(m > 1.0)) throw DomainError("cluster features: fuzzifier must be > 1");
    std::vector<double> out(centroids.size());
    membership_row(point, centroids, m, out);
    return out;
}

std::vector<double> cluster_membership_features(const VadRating& rating, const FcmResult& result) {
    return cluster_membership_features(rating.values(), result.centroids, result.fuzzifier);
}

std::vector<double> crisp_silhouettes(std::span<const Point3> points, std::span<const int> labels, int clusters) {
    const std::size_t n = points.size();
    std::vector<std::size_t> sizes(clusters, 0);
    for (int l : labels) ++sizes.at(l);
    std::vector<double> s(n, 0.0);
    std::vector<double> sums(clusters);
    for (std::size_t i = 0; i < n; ++i) {
        const int own = labels[i];
        if (sizes[own] <= 1) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (k != i) sums[labels[k]] += distance(points[i], points[k]);
        }
        const double a = sums[own] / static_cast<double>(sizes[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int j = 0; j < clusters; ++j) {
            if (j != own && sizes[j] > 0) b = std::min(b, sums[j] / static_cast<double>(sizes[j]));
        }
        const double denom = std::max(a, b);
        s[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return s;
}

double fuzzy_silhouette(std::span<const Point3> points, const FcmResult& result, double alpha) {
    if (points.size() != result.memberships.rows()) throw DomainError("fuzzy silhouette: result does not match points");
    if (alpha < 0.0) throw DomainError("fuzzy silhouette: alpha must be >= 0");
    const int c = static_cast<int>(result.memberships.cols());

    bool spread = false;
    for (const auto& p : points) spread = spread || squared_distance(p, points.front()) > 0.0;
    if (!spread) throw NumericError("fuzzy silhouette: all points are identical");

    const auto labels = result.hard_assignments();
    std::vector<std::size_t> sizes(c, 0);
    for (int l : labels) ++sizes[l];
    for (int j = 0; j < c; ++j) {
        if (sizes[j] == 0) throw NumericError(fmt::format("fuzzy silhouette: cluster {} is empty", j));
    }

    const auto s = crisp_silhouettes(points, labels, c);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto row = result.memberships.row(i);
        double first = -1.0;
        double second = -1.0;
        for (double u : row) {
            if (u > first) {
                second = first;
                first = u;
            } else if (u > second) {
                second = u;
            }
        }
        const double w = std::pow(first - second, alpha);
        num += w * s[i];
        den += w;
    }
    if (!(den > 0.0)) throw NumericError("fuzzy silhouette: memberships carry no margin");
    return num / den;
}

std::vector<SweepRow> sweep_clusters(std::span<const Point3> points, int c_min, int c_max,
                                     const FcmConfig& config_template, double alpha) {
    std::vector<SweepRow> rows;
    if (c_min > c_max) return rows;
    if (c_min < 2 || static_cast<std::size_t>(c_max) >= points.size()) {
        throw DomainError(fmt::format("cluster range [{}, {}] must lie in [2, {}]", c_min, c_max,
                                      static_cast<long>(points.size()) - 1));
    }
    for (int c = c_min; c <= c_max; ++c) {
        FcmConfig cfg = config_template;
        cfg.clusters = c;
        SweepRow row;
        row.clusters = c;
        row.result = fcm_fit(points, cfg);
        row.silhouette = fuzzy_silhouette(points, row.result, alpha);
        rows.push_back(std::move(row));
    }
    return rows;
}

ClusterReport cluster_report(const FcmResult& result, std::span<const std::string> labels) {
    if (labels.size() != result.memberships.rows()) throw DomainError("cluster report: label count mismatch");
    ClusterReport report;
    report.assignments = result.hard_assignments();
    const std::size_t c = result.memberships.cols();
    report.cluster_counts.assign(c, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int a = report.assignments[i];
        ++report.cluster_counts[a];
        auto it = std::find_if(report.label_distribution.begin(), report.label_distribution.end(),
                               [&](const auto& e) { return e.first == labels[i]; });
        if (it == report.label_distribution.end()) {
            report.label_distribution.emplace_back(labels[i], std::vector<std::size_t>(c, 0));
            it = std::prev(report.label_distribution.end());
        }
        ++it->second[a];
    }
    return report;
}

}  // namespace fuzzvad
