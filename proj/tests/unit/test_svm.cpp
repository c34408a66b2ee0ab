#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "mwd/error.hpp"
#include "mwd/svm.hpp"

using namespace mwd;

namespace {

struct Blobs {
    Eigen::MatrixXd X;
    std::vector<int> y;
};

Blobs blobs(int per_class, double separation, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    Blobs b;
    b.X.resize(2 * per_class, 2);
    for (int i = 0; i < 2 * per_class; ++i) {
        const int label = i < per_class ? -1 : 1;
        b.X(i, 0) = label * separation + g(rng);
        b.X(i, 1) = g(rng);
        b.y.push_back(label);
    }
    return b;
}

}  // namespace

TEST(Svm, SeparableBlobs) {
    const auto b = blobs(50, 3.0, 1);
    const auto m = train_svm(b.X, b.y, SVMParams{});
    EXPECT_TRUE(m.converged);
    EXPECT_EQ(m.predict(b.X), b.y);
    const auto t = blobs(50, 3.0, 2);
    EXPECT_EQ(m.predict(t.X), t.y);
}

TEST(Svm, DualFeasibility) {
    const auto b = blobs(40, 0.5, 3);
    SVMParams p;
    p.C = 2.0;
    const auto m = train_svm(b.X, b.y, p);
    ASSERT_EQ(m.alpha.size(), b.y.size());
    double balance = 0.0;
    for (std::size_t i = 0; i < m.alpha.size(); ++i) {
        EXPECT_GE(m.alpha[i], 0.0);
        EXPECT_LE(m.alpha[i], p.C + 1e-12);
        balance += m.alpha[i] * m.labels[i];
    }
    EXPECT_NEAR(balance, 0.0, 1e-8);
}

TEST(Svm, Xor) {
    Eigen::MatrixXd X(4, 2);
    X << 0, 0, 1, 1, 0, 1, 1, 0;
    const std::vector<int> y{-1, -1, 1, 1};
    SVMParams p;
    p.C = 100.0;
    p.rbf_gamma = 2.0;
    EXPECT_EQ(train_svm(X, y, p).predict(X), y);
}

TEST(Svm, RowPermutationInvariant) {
    const auto b = blobs(30, 1.0, 4);
    std::vector<int> order(b.y.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), std::mt19937_64(5));
    Eigen::MatrixXd Xp(b.X.rows(), 2);
    std::vector<int> yp;
    for (std::size_t i = 0; i < order.size(); ++i) {
        Xp.row(static_cast<Eigen::Index>(i)) = b.X.row(order[i]);
        yp.push_back(b.y[static_cast<std::size_t>(order[i])]);
    }
    const auto t = blobs(30, 1.0, 6);
    const auto a = train_svm(b.X, b.y, SVMParams{}).decision(t.X);
    const auto c = train_svm(Xp, yp, SVMParams{}).decision(t.X);
    for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a(i), c(i), 1e-12);
}

TEST(Svm, GammaDefaultsToInverseWidth) {
    const auto b = blobs(10, 2.0, 7);
    EXPECT_DOUBLE_EQ(train_svm(b.X, b.y, SVMParams{}).params.rbf_gamma, 0.5);
}

TEST(Svm, RejectsBadLabels) {
    const auto b = blobs(10, 2.0, 8);
    EXPECT_THROW(train_svm(b.X, std::vector<int>(20, 1), SVMParams{}), Error);
    std::vector<int> y = b.y;
    y[0] = 0;
    EXPECT_THROW(train_svm(b.X, y, SVMParams{}), Error);
    SVMParams p;
    p.C = 0.0;
    EXPECT_THROW(train_svm(b.X, b.y, p), Error);
}
