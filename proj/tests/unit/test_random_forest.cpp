#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mwd/error.hpp"
#include "mwd/random_forest.hpp"

using namespace mwd;

namespace {

Eigen::MatrixXd uniform_matrix(int n, int p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd X(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) X(i, j) = u(rng);
    return X;
}

}  // namespace

TEST(RandomForest, ConstantTargetPredictsConstant) {
    const auto X = uniform_matrix(60, 4, 1);
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(60, 7.25);
    RFParams p;
    p.n_trees = 20;
    const auto m = train_rf(X, y, p, Task::regression);
    const auto pred = m.predict(uniform_matrix(30, 4, 2));
    for (Eigen::Index i = 0; i < pred.rows(); ++i) EXPECT_EQ(pred(i, 0), 7.25);
}

TEST(RandomForest, SingleFullTreeMemorisesTrainingRows) {
    const auto X = uniform_matrix(40, 3, 3);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    Eigen::VectorXd y(40);
    for (auto& v : y) v = g(rng);
    RFParams p;
    p.n_trees = 1;
    p.bootstrap = false;
    p.min_leaf = 1;
    p.mtry = 3;
    const auto m = train_rf(X, y, p, Task::regression);
    const auto pred = m.predict(X);
    for (int i = 0; i < 40; ++i) EXPECT_NEAR(pred(i, 0), y(i), 1e-12);
}

TEST(RandomForest, LearnsSingleDriver) {
    const auto X = uniform_matrix(200, 1, 5);
    const Eigen::VectorXd y = X.col(0);
    RFParams p;
    p.n_trees = 100;
    const auto m = train_rf(X, y, p, Task::regression);
    const auto Xt = uniform_matrix(200, 1, 6);
    const auto pred = m.predict(Xt);
    const double rmse = std::sqrt((pred.col(0) - Xt.col(0)).squaredNorm() / 200.0);
    const double sd = std::sqrt((y.array() - y.mean()).square().sum() / 199.0);
    EXPECT_LT(rmse, 0.2 * sd);
}

TEST(RandomForest, PredictionsStayWithinTrainingRange) {
    const auto X = uniform_matrix(100, 3, 7);
    Eigen::VectorXd y = 10.0 * X.col(1) + X.col(2);
    RFParams p;
    p.n_trees = 30;
    const auto m = train_rf(X, y, p, Task::regression);
    Eigen::MatrixXd far = uniform_matrix(50, 3, 8) * 100.0 - Eigen::MatrixXd::Constant(50, 3, 50.0);
    const auto pred = m.predict(far);
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        EXPECT_GE(pred(i, 0), y.minCoeff());
        EXPECT_LE(pred(i, 0), y.maxCoeff());
    }
}

TEST(RandomForest, SameSeedSameForest) {
    const auto X = uniform_matrix(80, 4, 9);
    const Eigen::VectorXd y = X.col(0) + X.col(3);
    RFParams p;
    p.n_trees = 25;
    p.seed = 77;
    const auto a = train_rf(X, y, p, Task::regression).predict(X);
    const auto b = train_rf(X, y, p, Task::regression).predict(X);
    EXPECT_EQ(a, b);
    p.seed = 78;
    const auto c = train_rf(X, y, p, Task::regression).predict(X);
    EXPECT_NE(a, c);
}

TEST(RandomForest, Classification) {
    const auto X = uniform_matrix(300, 2, 10);
    Eigen::VectorXd y(300);
    for (int i = 0; i < 300; ++i) y(i) = X(i, 0) + X(i, 1) > 1.0 ? 1.0 : 0.0;
    RFParams p;
    p.n_trees = 50;
    const auto m = train_rf(X, y, p, Task::classification);
    const auto Xt = uniform_matrix(200, 2, 11);
    const auto cls = m.predict_classes(Xt);
    const auto score = m.predict(Xt);
    int correct = 0;
    for (int i = 0; i < 200; ++i) {
        correct += cls[static_cast<std::size_t>(i)] == (Xt(i, 0) + Xt(i, 1) > 1.0 ? 1 : 0);
        EXPECT_GE(score(i, 0), 0.0);
        EXPECT_LE(score(i, 0), 1.0);
    }
    EXPECT_GE(correct, 180);
}

TEST(RandomForest, RejectsBadInput) {
    const auto X = uniform_matrix(20, 2, 12);
    Eigen::VectorXd y = Eigen::VectorXd::Constant(20, 1.0);
    EXPECT_THROW(train_rf(X, y, RFParams{}, Task::classification), Error);
    y(0) = 2.0;
    EXPECT_THROW(train_rf(X, y, RFParams{}, Task::classification), Error);
    RFParams bad;
    bad.n_trees = 0;
    EXPECT_THROW(train_rf(X, y, bad, Task::regression), Error);
    bad = RFParams{};
    bad.mtry = 3;
    EXPECT_THROW(train_rf(X, y, bad, Task::regression), Error);
    EXPECT_THROW(train_rf(X, Eigen::VectorXd::Zero(5), RFParams{}, Task::regression), Error);
}

TEST(RandomForest, MtryDefaults) {
    RFParams p;
    EXPECT_EQ(p.resolved_mtry(172, Task::regression), 58);
    EXPECT_EQ(p.resolved_mtry(172, Task::classification), 14);
    EXPECT_EQ(p.resolved_mtry(1, Task::regression), 1);
}

TEST(RandomForest, MaxDepthIsRespected) {
    const auto X = uniform_matrix(200, 3, 13);
    const Eigen::VectorXd y = X.col(0);
    RFParams p;
    p.n_trees = 5;
    p.max_depth = 2;
    p.min_leaf = 1;
    for (const auto& t : train_rf(X, y, p, Task::regression).trees) EXPECT_LE(t.depth(), 2);
}

TEST(MultiOutputForest, DuplicatedTargetGivesIdenticalColumns) {
    const auto X = uniform_matrix(150, 4, 14);
    Eigen::MatrixXd Y(150, 2);
    Y.col(0) = 3.0 * X.col(0) + X.col(1);
    Y.col(1) = Y.col(0);
    RFParams p;
    p.n_trees = 30;
    const auto pred = train_mvrf(X, Y, p).predict(uniform_matrix(40, 4, 15));
    ASSERT_EQ(pred.cols(), 2);
    for (Eigen::Index i = 0; i < pred.rows(); ++i) EXPECT_NEAR(pred(i, 0), pred(i, 1), 1e-9);
}

TEST(MultiOutputForest, SingleOutputMatchesUnivariate) {
    const auto X = uniform_matrix(150, 4, 16);
    Eigen::VectorXd y = X.col(2) * 5.0 + X.col(0);
    RFParams p;
    p.n_trees = 30;
    p.seed = 5;
    const auto Xt = uniform_matrix(40, 4, 17);
    const auto a = train_rf(X, y, p, Task::regression).predict(Xt);
    const auto b = train_mvrf(X, Eigen::MatrixXd(y), p).predict(Xt);
    for (Eigen::Index i = 0; i < a.rows(); ++i) EXPECT_NEAR(a(i, 0), b(i, 0), 1e-9);
}

TEST(MultiOutputForest, PerOutputRangeAndUnits) {
    const auto X = uniform_matrix(200, 3, 18);
    Eigen::MatrixXd Y(200, 2);
    Y.col(0) = (5.0 * X.col(0)).array() + 60.0;
    Y.col(1) = 0.01 * X.col(1);
    RFParams p;
    p.n_trees = 30;
    const auto pred = train_mvrf(X, Y, p).predict(X);
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        EXPECT_GE(pred(i, 0), 60.0 - 1e-9);
        EXPECT_LE(pred(i, 0), 65.0 + 1e-9);
        EXPECT_GE(pred(i, 1), -1e-12);
        EXPECT_LE(pred(i, 1), 0.01 + 1e-12);
    }
}
