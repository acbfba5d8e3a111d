#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "blobs.hpp"
#include "fuzzvad/clustering.hpp"
#include "fuzzvad/error.hpp"

using namespace fuzzvad;

namespace {

double dist(const Point3& a, const Point3& b) {
    return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) + (a[2] - b[2]) * (a[2] - b[2]));
}

// brute-force fuzzy silhouette, alpha = 1
double oracle_fs(const std::vector<Point3>& pts, const FcmResult& r) {
    const std::size_t n = pts.size(), c = r.centroids.size();
    std::vector<int> lab(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = r.memberships.row(i);
        lab[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sum(c, 0.0);
        std::vector<int> cnt(c, 0);
        for (std::size_t k = 0; k < n; ++k) {
            if (k == i) continue;
            sum[lab[k]] += dist(pts[i], pts[k]);
            ++cnt[lab[k]];
        }
        double s = 0;
        if (cnt[lab[i]] > 0) {
            const double a = sum[lab[i]] / cnt[lab[i]];
            double b = 1e300;
            for (std::size_t j = 0; j < c; ++j)
                if (static_cast<int>(j) != lab[i] && cnt[j] > 0) b = std::min(b, sum[j] / cnt[j]);
            s = (b - a) / std::max(a, b);
        }
        std::vector<double> u(r.memberships.row(i).begin(), r.memberships.row(i).end());
        std::sort(u.rbegin(), u.rend());
        num += (u[0] - u[1]) * s;
        den += u[0] - u[1];
    }
    return num / den;
}

double matched_error(const std::vector<Point3>& found) {
    std::array<int, 4> perm{0, 1, 2, 3};
    double best = 1e300;
    do {
        double worst = 0;
        for (int j = 0; j < 4; ++j)
            for (int d = 0; d < 3; ++d)
                worst = std::max(worst, std::abs(found[perm[j]][d] - testdata::kTableCentroids[j][d]));
        best = std::min(best, worst);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("config validation") {
    FcmConfig c;
    CHECK_NOTHROW(c.validate());
    c.clusters = 1;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.fuzzifier = 1.0;
    CHECK_THROWS_AS(c.validate(), DomainError);
    c = {};
    c.tolerance = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("two separated points") {
    const std::vector<Point3> pts{{1, 1, 1}, {9, 9, 9}};
    FcmConfig c;
    c.clusters = 2;
    const auto r = fcm_fit(pts, c);
    const auto h = r.hard_assignments();
    CHECK(h[0] != h[1]);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(r.memberships(i, h[i]) > 0.999);
        CHECK(dist(r.centroids[h[i]], pts[i]) < 1e-2);
    }
}

TEST_CASE("fewer points than clusters is degenerate") {
    const std::vector<Point3> pts{{1, 1, 1}, {9, 9, 9}};
    FcmConfig c;
    c.clusters = 3;
    CHECK_THROWS_AS(fcm_fit(pts, c), NumericError);
}

TEST_CASE("four-blob recovery and invariants") {
    const auto pts = testdata::four_blobs();
    FcmConfig c;
    c.clusters = 4;
    c.seed = 5;
    const auto r = fcm_fit(pts, c);
    CHECK(matched_error(r.centroids) < 0.3);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
        CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-12);
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double s = 0;
        for (double u : r.memberships.row(i)) {
            CHECK(u >= 0.0);
            CHECK(u <= 1.0);
            s += u;
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
    CHECK(fcm_objective(pts, r.centroids, r.memberships, 2.0) == doctest::Approx(r.objective_trace.back()));
    const auto again = fcm_fit(pts, c);
    CHECK(again.memberships == r.memberships);
    CHECK(again.objective_trace == r.objective_trace);
}

TEST_CASE("fuzzifier extremes") {
    const auto pts = testdata::four_blobs();
    FcmConfig c;
    c.clusters = 4;
    c.fuzzifier = 1.1;
    const auto sharp = fcm_fit(pts, c);
    c.fuzzifier = 5.0;
    const auto soft = fcm_fit(pts, c);
    auto mean_max = [&](const FcmResult& r) {
        double s = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto row = r.memberships.row(i);
            s += *std::max_element(row.begin(), row.end());
        }
        return s / static_cast<double>(pts.size());
    };
    CHECK(mean_max(sharp) > 0.99);
    CHECK(mean_max(soft) < 0.5);
    CHECK(mean_max(soft) > 0.25);
}

TEST_CASE("membership features") {
    std::vector<Point3> cents(testdata::kTableCentroids.begin(), testdata::kTableCentroids.end());
    auto u = cluster_membership_features({7.73, 7.70, 6.82}, cents, 2.0);
    CHECK(u == std::vector<double>{1, 0, 0, 0});
    u = cluster_membership_features({5, 5, 5}, std::vector<Point3>{{1, 5, 5}, {9, 5, 5}}, 2.0);
    CHECK(u[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(u[1] == doctest::Approx(0.5).epsilon(1e-12));
    u = cluster_membership_features({3.3, 6.1, 2.2}, cents, 2.0);
    CHECK(std::abs(std::accumulate(u.begin(), u.end(), 0.0) - 1.0) < 1e-9);

    const auto pts = testdata::four_blobs();
    FcmConfig c;
    const auto r = fcm_fit(pts, c);
    double worst = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto f = cluster_membership_features(pts[i], r.centroids, 2.0);
        for (std::size_t j = 0; j < 4; ++j) worst = std::max(worst, std::abs(f[j] - r.memberships(i, j)));
    }
    CHECK(worst < 1e-9);
    CHECK(cluster_membership_features(VadRating(5, 5, 5), r).size() == 4);
}

TEST_CASE("fuzzy silhouette matches brute force") {
    const auto pts = testdata::four_blobs();
    for (int k : {2, 4, 6}) {
        FcmConfig c;
        c.clusters = k;
        const auto r = fcm_fit(pts, c);
        CHECK(fuzzy_silhouette(pts, r) == doctest::Approx(oracle_fs(pts, r)).epsilon(1e-10));
    }
}

TEST_CASE("two tight blobs score high") {
    std::vector<Point3> pts;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0, 0.1);
    for (int i = 0; i < 30; ++i) pts.push_back({2 + g(rng), 2 + g(rng), 2 + g(rng)});
    for (int i = 0; i < 30; ++i) pts.push_back({8 + g(rng), 8 + g(rng), 8 + g(rng)});
    FcmConfig c;
    c.clusters = 2;
    CHECK(fuzzy_silhouette(pts, fcm_fit(pts, c)) > 0.8);
}

TEST_CASE("identical points are degenerate") {
    const std::vector<Point3> pts(10, Point3{5, 5, 5});
    FcmConfig c;
    c.clusters = 2;
    CHECK_THROWS_AS(fuzzy_silhouette(pts, fcm_fit(pts, c)), NumericError);
}

TEST_CASE("sweep selects four clusters") {
    const auto pts = testdata::four_blobs();
    const auto rows = sweep_clusters(pts, 2, 10, FcmConfig{});
    REQUIRE(rows.size() == 9);
    auto best = std::max_element(rows.begin(), rows.end(),
                                 [](const SweepRow& a, const SweepRow& b) { return a.silhouette < b.silhouette; });
    CHECK(best->clusters == 4);
    CHECK(rows[2].silhouette > rows[4].silhouette);
    const auto part = sweep_clusters(pts, 4, 10, FcmConfig{});
    CHECK(part.size() == 7);
    for (const auto& r : part) CHECK(std::isfinite(r.silhouette));
    CHECK(sweep_clusters(pts, 5, 4, FcmConfig{}).empty());
    CHECK_THROWS_AS(sweep_clusters(pts, 1, 4, FcmConfig{}), DomainError);
    CHECK_THROWS_AS(sweep_clusters(pts, 2, 200, FcmConfig{}), DomainError);
}

TEST_CASE("cluster report") {
    const auto pts = testdata::four_blobs();
    const auto r = fcm_fit(pts, FcmConfig{});
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < pts.size(); ++i) labels.push_back(i < 100 ? "a" : "b");
    const auto rep = cluster_report(r, labels);
    CHECK(std::accumulate(rep.cluster_counts.begin(), rep.cluster_counts.end(), std::size_t{0}) == pts.size());
    REQUIRE(rep.label_distribution.size() == 2);
    CHECK(rep.label_distribution[0].first == "a");
    for (auto n : rep.cluster_counts) CHECK(n == 50);
}

}
