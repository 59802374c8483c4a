#include "fdo/lof.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <Eigen/QR>
#include <gtest/gtest.h>

using namespace fdo;

namespace {

PointSet line(std::vector<double> v) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = v[i];
    return make_point_set(m);
}

} // namespace

TEST(KDistance, HandExample) {
    const auto nb = kdistance_and_neighbors(line({0, 1, 2, 10}), 2);
    EXPECT_EQ(nb.kdist[0], 2.0);
    EXPECT_EQ(nb.neighbors[0], (std::vector<Index>{1, 2}));
    EXPECT_EQ(nb.kdist[3], 9.0);
}

TEST(KDistance, TwoPoints) {
    const auto nb = kdistance_and_neighbors(line({1.5, 4.0}), 1);
    EXPECT_EQ(nb.kdist[0], 2.5);
    EXPECT_EQ(nb.kdist[1], 2.5);
    EXPECT_EQ(nb.neighbors[0], (std::vector<Index>{1}));
    EXPECT_EQ(nb.neighbors[1], (std::vector<Index>{0}));
}

TEST(KDistance, TiesBrokenByIndex) {
    const auto nb = kdistance_and_neighbors(line({0, -1, 1, 3}), 1);
    EXPECT_EQ(nb.neighbors[0], (std::vector<Index>{1}));
}

TEST(KDistance, BadK) {
    EXPECT_THROW(kdistance_and_neighbors(line({0, 1, 2}), 3), InvalidArgument);
    EXPECT_THROW(kdistance_and_neighbors(line({0, 1, 2}), 0), InvalidArgument);
    EXPECT_THROW(lof_scores(line({0, 1}), 2), InvalidArgument);
}

TEST(KDistance, MatchesSortOracle) {
    const auto pts = testutil::gaussian_matrix(30, 5, 6);
    const auto nb = kdistance_and_neighbors(make_point_set(pts), 4);
    const auto ref = oracle::lof_reference(pts, 4);
    for (Index i = 0; i < 30; ++i) {
        EXPECT_EQ(nb.kdist[i], ref.kdist[i]);
        auto a = nb.neighbors[i];
        std::sort(a.begin(), a.end());
        EXPECT_EQ(a, ref.neighbors[i]);
    }
}

TEST(Lof, MatchesDefinitionOnRandomInstances) {
    std::mt19937_64 rng(21);
    for (int inst = 0; inst < 100; ++inst) {
        const auto n = static_cast<Eigen::Index>(5 + rng() % 196);
        const auto d = static_cast<Eigen::Index>(1 + rng() % 20);
        const std::size_t k = 1 + rng() % std::min<std::size_t>(15, static_cast<std::size_t>(n) - 1);
        const auto pts = testutil::gaussian_matrix(n, d, rng());
        const auto got = lof_scores(make_point_set(pts), k);
        const auto ref = oracle::lof_reference(pts, k);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            ASSERT_NEAR(got.scores[u], ref.lof[u], 1e-12 * std::max(1.0, ref.lof[u])) << "instance " << inst;
            ASSERT_NEAR(got.lrd[u], ref.lrd[u], 1e-12 * ref.lrd[u]);
        }
    }
}

TEST(Lof, RigidMotionAndScaling) {
    const auto pts = testutil::gaussian_matrix(60, 3, 30);
    const auto base = lof_scores(make_point_set(pts), 5);
    const Eigen::Matrix3d q = Eigen::HouseholderQR<Eigen::Matrix3d>(Eigen::Matrix3d(testutil::gaussian_matrix(3, 3, 31))).householderQ();
    const Eigen::RowVector3d shift(4, -2, 7);
    const Eigen::MatrixXd moved = (pts * q).rowwise() + shift;
    const auto m = lof_scores(make_point_set(moved), 5);
    const auto s = lof_scores(make_point_set(pts * 3.5), 5);
    for (std::size_t i = 0; i < 60; ++i) {
        EXPECT_NEAR(m.scores[i], base.scores[i], 1e-12);
        EXPECT_NEAR(s.scores[i], base.scores[i], 1e-12);
    }
}

TEST(Lof, PowerOfTwoScalingIsExact) {
    const auto pts = testutil::gaussian_matrix(40, 2, 33);
    const auto a = lof_scores(make_point_set(pts), 4);
    const auto b = lof_scores(make_point_set(pts * 4.0), 4);
    EXPECT_EQ(a.scores, b.scores);
}

TEST(Lof, UniformGridIsNearOne) {
    std::vector<double> g(20);
    std::iota(g.begin(), g.end(), 0.0);
    const auto r = lof_scores(line(g), 3);
    for (std::size_t i = 3; i < 17; ++i) {
        EXPECT_GE(r.scores[i], 0.8);
        EXPECT_LE(r.scores[i], 1.2);
    }
    EXPECT_LE(*std::max_element(r.scores.begin(), r.scores.end()), 2.0);
}

TEST(Lof, FarPointStandsOut) {
    std::vector<double> v;
    for (int i = 0; i < 10; ++i) v.push_back(0.1 * i);
    v.push_back(10.0);
    const auto r = lof_scores(line(v), 3);
    EXPECT_GT(r.scores[10], 5.0);
    for (int i = 0; i < 10; ++i) EXPECT_LT(r.scores[static_cast<std::size_t>(i)], 2.0);
    EXPECT_EQ(flag_above(r.scores, 5.0), (std::vector<Index>{10}));
}

TEST(Lof, DuplicatePointsStayFinite) {
    // four copies of the origin with k = 3: zero reachability sum
    const auto r = lof_scores(line({0, 0, 0, 0, 1, 5}), 3);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_TRUE(std::isinf(r.lrd[i]));
        EXPECT_EQ(r.scores[i], 1.0);
    }
    EXPECT_TRUE(std::isfinite(r.scores[4]));
    EXPECT_GE(r.scores[4], kInfiniteDensityRatio / 3.0);
    for (double s : r.scores) EXPECT_TRUE(std::isfinite(s));
}

TEST(Lof, PrecomputedDistances) {
    const auto pts = testutil::gaussian_matrix(25, 4, 40);
    const auto ps = make_point_set(pts);
    const auto a = lof_scores(ps, 6);
    const auto b = lof_scores(pairwise_distances(ps), 6);
    EXPECT_EQ(a.scores, b.scores);
    EXPECT_EQ(a.k, 6u);
}

TEST(PointSet, Validation) {
    EXPECT_THROW(make_point_set(Eigen::MatrixXd(3, 0)), InvalidArgument);
    Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
    bad(0, 0) = INFINITY;
    EXPECT_THROW(make_point_set(bad), InvalidArgument);
    EXPECT_THROW(make_point_set(Eigen::MatrixXd::Zero(2, 2), {"a"}), InvalidArgument);
    EXPECT_EQ(make_point_set(Eigen::MatrixXd::Zero(2, 2)).ids[1], "1");
}
