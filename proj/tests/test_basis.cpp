#include "fdo/basis.hpp"

#include "oracles.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace fdo;

TEST(HaarEval, HandValues) {
    EXPECT_EQ(haar_eval(HaarIndex::wavelet(0, 0), 0.25), 1.0);
    EXPECT_EQ(haar_eval(HaarIndex::make_scaling(), 0.9), 1.0);
    EXPECT_DOUBLE_EQ(haar_eval(HaarIndex::wavelet(1, 1), 0.75), -std::sqrt(2.0));
    EXPECT_EQ(haar_eval(HaarIndex::wavelet(1, 1), 0.25), 0.0);
    EXPECT_THROW(haar_eval(HaarIndex::make_scaling(), 1.0), DomainError);
    EXPECT_THROW(haar_eval(HaarIndex::make_scaling(), -0.1), DomainError);
}

TEST(HaarLevels, CanonicalColumnOrder) {
    const auto lv = haar_levels(8);
    ASSERT_EQ(lv.size(), 8u);
    for (std::size_t c = 0; c < lv.size(); ++c) EXPECT_EQ(std::get<HaarIndex>(lv[c]).column(), c);
    EXPECT_EQ(level_label(lv[0]), "scaling");
    EXPECT_EQ(level_label(lv[5]), "w2.1");
    EXPECT_THROW(haar_levels(12), UnsupportedShapeError);
    EXPECT_THROW(haar_levels(1), UnsupportedShapeError);
}

TEST(HaarProject, TwoSampleHandExample) {
    Eigen::MatrixXd x(1, 2);
    x << 3, 1;
    const auto fm = haar_project(CurveSet(x));
    EXPECT_DOUBLE_EQ(fm.coeffs(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(fm.coeffs(0, 1), 1.0);
    EXPECT_EQ(fm.basis_kind, BasisKind::Haar);
}

TEST(HaarProject, ConstantCurve) {
    const auto fm = haar_project(CurveSet(Eigen::MatrixXd::Constant(2, 16, 4.5)));
    for (Eigen::Index i = 0; i < 2; ++i) {
        EXPECT_NEAR(fm.coeffs(i, 0), 4.5, 1e-14);
        for (Eigen::Index c = 1; c < 16; ++c) EXPECT_NEAR(fm.coeffs(i, c), 0.0, 1e-14);
    }
}

TEST(HaarProject, MatchesNaiveSummation) {
    for (int p = 2; p <= 1024; p *= 2) {
        const auto x = testutil::gaussian_matrix(3, p, 100 + p);
        const auto fast = haar_project(CurveSet(x)).coeffs;
        const auto slow = oracle::haar_coefficients(x);
        EXPECT_LT((fast - slow).cwiseAbs().maxCoeff(), 1e-12) << "p = " << p;
    }
}

TEST(HaarProject, NotPowerOfTwo) {
    EXPECT_THROW(haar_project(CurveSet(Eigen::MatrixXd::Zero(2, 6))), UnsupportedShapeError);
}

TEST(HaarProject, DiscreteOrthonormality) {
    // <phi_a, phi_b>_p on the left-end grid is exactly delta_ab.
    for (int p : {2, 8, 64}) {
        const auto phi = oracle::haar_matrix(p);
        const Eigen::MatrixXd gram = phi * phi.transpose() / p;
        EXPECT_LT((gram - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(HaarReconstruct, HandAndZero) {
    FeatureMatrix fm;
    fm.coeffs.resize(1, 2);
    fm.coeffs << 2, 1;
    fm.level_index = haar_levels(2);
    const auto c = haar_reconstruct(fm);
    EXPECT_DOUBLE_EQ(c.values()(0, 0), 3.0);
    EXPECT_DOUBLE_EQ(c.values()(0, 1), 1.0);

    fm.coeffs.setZero();
    EXPECT_EQ(haar_reconstruct(fm).values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(HaarReconstruct, RoundTrip) {
    for (int p : {2, 16, 256}) {
        const auto x = testutil::gaussian_matrix(16, p, 7 + p, 3.0);
        const auto back = haar_reconstruct(haar_project(CurveSet(x)));
        EXPECT_LT((back.values() - x).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(HaarReconstruct, TruncatedIsRejected) {
    const auto fm = haar_project(CurveSet(testutil::gaussian_matrix(2, 8, 1)));
    // {0, 1, 2, 3} would be a complete p = 4 set, so drop to three columns
    EXPECT_THROW(haar_reconstruct(select_columns(fm, {0, 1, 2})), IncompleteBasisError);
    EXPECT_THROW(haar_reconstruct(select_columns(fm, {0, 1, 2, 4})), IncompleteBasisError);
    EXPECT_THROW(haar_reconstruct(select_columns(fm, {1, 0, 2, 3, 4, 5, 6, 7})), IncompleteBasisError);
}

TEST(HaarLevelColumns, Level2) {
    EXPECT_EQ(haar_level_columns(2), (std::vector<std::size_t>{4, 5, 6, 7}));
}

namespace {

IndexList iota_list(Index lo, Index hi) {
    IndexList out;
    for (Index i = lo; i < hi; ++i) out.push_back(i);
    return out;
}

} // namespace

TEST(PcaFit, FitIndicesAreOddNominalPositions) {
    const auto x = testutil::gaussian_matrix(480, 8, 2);
    const auto split = make_split(480, iota_list(240, 480));
    const auto b = pca_fit(CurveSet(x), split);
    ASSERT_EQ(b.fit_indices.size(), 120u);
    for (std::size_t r = 0; r < 120; ++r) EXPECT_EQ(b.fit_indices[r], 241 + 2 * r);
}

TEST(PcaFit, OrthonormalAndSorted) {
    const auto x = testutil::gaussian_matrix(200, 32, 9);
    const auto b = pca_fit(CurveSet(x), make_split(200, iota_list(0, 150)));
    ASSERT_EQ(b.size(), 32u);
    const double p = 32;
    const Eigen::MatrixXd gram = b.components.transpose() * b.components / p;
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(32, 32)).cwiseAbs().maxCoeff(), 1e-10);
    for (Index d = 1; d < b.size(); ++d) EXPECT_GE(b.eigenvalues(d - 1), b.eigenvalues(d));
    EXPECT_GE(b.eigenvalues.minCoeff(), 0.0);
}

TEST(PcaFit, EigenvaluesMatchJacobi) {
    const auto x = testutil::gaussian_matrix(41, 12, 21);
    const auto split = make_split(41, iota_list(0, 40));
    const auto b = pca_fit(CurveSet(x), split);

    const auto fit = split.pca_fit_indices();
    Eigen::MatrixXd f(static_cast<Eigen::Index>(fit.size()), 12);
    for (std::size_t r = 0; r < fit.size(); ++r) f.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(fit[r]));
    const Eigen::MatrixXd c = f.rowwise() - f.colwise().mean();
    const auto ref = oracle::jacobi_eigen(c.transpose() * c / static_cast<double>(fit.size()));
    ASSERT_EQ(b.size(), 12u);
    for (Index d = 0; d < 12; ++d) {
        EXPECT_NEAR(b.eigenvalues(d), ref.values(d), 1e-10);
        // directions agree up to sign
        const double cosine = std::abs(b.components.col(d).dot(ref.vectors.col(d))) / std::sqrt(12.0);
        EXPECT_NEAR(cosine, 1.0, 1e-8);
    }
}

TEST(PcaFit, AffinePlaneGivesTwoComponents) {
    // 12 nominal curves in p = 4 on x = m + a u + b v; six of them fit the basis.
    Eigen::Vector4d m(1, -2, 0.5, 3), u(1, 2, 0, -1), v(0, 1, 1, 1);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n01;
    Eigen::MatrixXd x(13, 4);
    for (int i = 0; i < 13; ++i) x.row(i) = (m + n01(rng) * u + n01(rng) * v).transpose();
    const auto split = make_split(13, iota_list(0, 12));
    const auto b = pca_fit(CurveSet(x), split);
    ASSERT_EQ(b.size(), 2u);

    const auto fit = split.pca_fit_indices();
    Eigen::MatrixXd f(6, 4);
    for (int r = 0; r < 6; ++r) f.row(r) = x.row(static_cast<Eigen::Index>(fit[static_cast<std::size_t>(r)]));
    const Eigen::MatrixXd c = f.rowwise() - f.colwise().mean();
    const auto ref = oracle::jacobi_eigen(c.transpose() * c / 6.0);
    EXPECT_NEAR(ref.values(2), 0.0, 1e-10);
    EXPECT_NEAR(ref.values(3), 0.0, 1e-10);

    const Eigen::MatrixXd q = b.components / 2.0;  // back to Euclidean unit vectors
    const Eigen::MatrixXd p_fit = q * q.transpose();
    const Eigen::MatrixXd r = ref.vectors.leftCols(2);
    const Eigen::MatrixXd p_ref = r * r.transpose();
    EXPECT_LT((p_fit - p_ref).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(PcaFit, ConstantCurvesKeepNothing) {
    const auto b = pca_fit(CurveSet(Eigen::MatrixXd::Constant(9, 8, 2.0)), make_split(9, iota_list(0, 8)));
    EXPECT_EQ(b.size(), 0u);
}

TEST(PcaFit, TooFewFitRows) {
    // n0 = 4 gives |I0| = 2, the smallest allowed.
    const auto x = testutil::gaussian_matrix(5, 4, 3);
    EXPECT_NO_THROW(pca_fit(CurveSet(x), make_split(5, {0, 1, 2, 3})));
    EXPECT_EQ(pca_fit(CurveSet(x), make_split(5, {0, 1, 2, 3})).size(), 1u);
}

TEST(PcaProject, ComponentProjectsToUnitVector) {
    const auto x = testutil::gaussian_matrix(60, 16, 5);
    const auto b = pca_fit(CurveSet(x), make_split(60, iota_list(0, 50)));
    Eigen::MatrixXd comp(2, 16);
    comp.row(0) = b.components.col(0).transpose();
    comp.row(1).setZero();
    const auto fm = pca_project(CurveSet(comp), b, {0, 1});
    for (Index d = 0; d < b.size(); ++d) {
        EXPECT_NEAR(fm.coeffs(0, d), d == 0 ? 1.0 : 0.0, 1e-10);
        EXPECT_EQ(fm.coeffs(1, d), 0.0);
    }
    EXPECT_EQ(level_label(fm.level_index[0]), "pc1");
}

TEST(PcaProject, MatchesNaiveInnerProduct) {
    const auto x = testutil::gaussian_matrix(9, 8, 77);
    const auto split = make_split(9, iota_list(0, 8));
    const auto b = pca_fit(CurveSet(x), split);
    ASSERT_EQ(b.size(), 3u);  // 4 centered fit rows span 3 directions
    const auto fm = pca_project(CurveSet(x), b, {8, 0});
    EXPECT_EQ(fm.source_rows, (IndexList{8, 0}));
    for (int r = 0; r < 2; ++r) {
        const Eigen::Index row = r == 0 ? 8 : 0;
        for (int d = 0; d < 3; ++d) {
            double s = 0.0;
            for (int j = 0; j < 8; ++j) s += x(row, j) * b.components(j, d);
            EXPECT_NEAR(fm.coeffs(r, d), s / 8.0, 1e-12);
        }
    }
    // centered variant subtracts the fitted mean first
    const auto fc = pca_project(CurveSet(x), b, {8}, true);
    const Eigen::RowVectorXd centered = x.row(8) - b.mean_curve.transpose();
    EXPECT_NEAR(fc.coeffs(0, 0), centered.dot(b.components.col(0)) / 8.0, 1e-12);
}

TEST(PcaProject, Errors) {
    const auto x = testutil::gaussian_matrix(9, 8, 77);
    const auto b = pca_fit(CurveSet(x), make_split(9, iota_list(0, 8)));
    EXPECT_THROW(pca_project(CurveSet(x), b, {9}), InvalidArgument);
    EXPECT_THROW(pca_project(CurveSet(Eigen::MatrixXd::Zero(2, 4)), b, {0}), InvalidArgument);
}

TEST(PcaVariance, FractionCount) {
    PCABasis b;
    b.eigenvalues = Eigen::Vector4d(4, 3, 2, 1);
    b.components = Eigen::MatrixXd::Zero(4, 4);
    b.mean_curve = Eigen::VectorXd::Zero(4);
    EXPECT_EQ(pca_components_for_variance(b, 0.4), 1u);
    EXPECT_EQ(pca_components_for_variance(b, 0.7), 2u);
    EXPECT_EQ(pca_components_for_variance(b, 1.0), 4u);
}
