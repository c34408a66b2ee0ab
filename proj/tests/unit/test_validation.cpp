#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mwd/error.hpp"
#include "mwd/validation.hpp"

using namespace mwd;

namespace {

std::vector<std::string> ids(int n, const std::string& prefix = "H") {
    std::vector<std::string> out;
    for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

CvProblem random_problem(int n_blasts, int per_blast, std::uint64_t seed, Task task = Task::regression) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    CvProblem p;
    const int n = n_blasts * per_blast;
    p.X.resize(n, 4);
    p.Y.resize(n, 1);
    for (int i = 0; i < n; ++i) {
        p.hole_ids.push_back("H" + std::to_string(i));
        p.blast_ids.push_back("B" + std::to_string(i / per_blast));
        for (int j = 0; j < 4; ++j) p.X(i, j) = 10.0 * j + g(rng);
        p.Y(i, 0) = task == Task::regression ? p.X(i, 0) + 0.1 * g(rng) : (p.X(i, 0) > 0 ? 1.0 : 0.0);
    }
    p.feature_names = {"a", "b", "c", "d"};
    p.target_names = {"Fe"};
    p.registry_hash = 42;
    p.task = task;
    return p;
}

FoldPlan plan_for(const CvProblem& p, CvMode mode) {
    return make_folds(p.hole_ids, p.blast_ids, mode, 5, 3);
}

std::string state_of(const ModelHandle& m) {
    std::ostringstream out;
    save_model(out, m);
    return out.str();
}

}  // namespace

TEST(Folds, BalancedRandomSplit) {
    const auto plan = make_folds(ids(10), std::vector<std::string>(10, "B"), CvMode::random_kfold, 5, 1);
    EXPECT_EQ(plan.k, 5);
    for (int f = 0; f < 5; ++f) EXPECT_EQ(plan.members(f).size(), 2u);
    const auto uneven = make_folds(ids(12), std::vector<std::string>(12, "B"), CvMode::random_kfold, 5, 1);
    for (int f = 0; f < 5; ++f) {
        EXPECT_GE(uneven.members(f).size(), 2u);
        EXPECT_LE(uneven.members(f).size(), 3u);
    }
}

TEST(Folds, SpatialGroupsByBlast) {
    std::vector<std::string> blasts;
    for (int i = 0; i < 4; ++i) blasts.push_back("B2");
    for (int i = 0; i < 5; ++i) blasts.push_back("B3");
    for (int i = 0; i < 6; ++i) blasts.push_back("B1");
    const auto plan = make_folds(ids(15), blasts, CvMode::leave_one_blast_out, 99, 1);
    ASSERT_EQ(plan.k, 3);
    EXPECT_EQ(plan.fold_blasts, (std::vector<std::string>{"B1", "B2", "B3"}));
    EXPECT_EQ(plan.members(0).size(), 6u);
    EXPECT_EQ(plan.members(1).size(), 4u);
    EXPECT_EQ(plan.members(2).size(), 5u);
    for (int f = 0; f < 3; ++f)
        for (std::size_t i : plan.members(f)) EXPECT_EQ(blasts[i], plan.fold_blasts[static_cast<std::size_t>(f)]);
}

TEST(Folds, DeterministicPerSeed) {
    const auto a = make_folds(ids(37), std::vector<std::string>(37, "B"), CvMode::random_kfold, 5, 11);
    const auto b = make_folds(ids(37), std::vector<std::string>(37, "B"), CvMode::random_kfold, 5, 11);
    const auto c = make_folds(ids(37), std::vector<std::string>(37, "B"), CvMode::random_kfold, 5, 12);
    EXPECT_EQ(a.fold, b.fold);
    EXPECT_NE(a.fold, c.fold);
}

TEST(Folds, Preconditions) {
    try {
        make_folds(ids(3), std::vector<std::string>(3, "B"), CvMode::random_kfold, 5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewHoles);
    }
    try {
        make_folds(ids(3), std::vector<std::string>(3, "B"), CvMode::leave_one_blast_out, 5, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewBlasts);
    }
    EXPECT_THROW(make_folds(ids(10), std::vector<std::string>(10, "B"), CvMode::random_kfold, 1, 1), Error);
}

TEST(RunCv, MeanModelOnConstantTarget) {
    auto p = random_problem(4, 5, 1);
    p.Y.setConstant(61.5);
    ModelSpec spec;
    spec.kind = ModelKind::mean;
    const auto rep = run_cv(p, spec, plan_for(p, CvMode::random_kfold));
    ASSERT_EQ(rep.targets.size(), 1u);
    const auto& a = *rep.targets[0].agreement;
    EXPECT_EQ(a.rmse, 0.0);
    EXPECT_FALSE(a.r_defined);
    EXPECT_TRUE(std::isnan(a.r));
    EXPECT_FALSE(rep.warnings.empty());
}

TEST(RunCv, PerfectAgreement) {
    const std::vector<double> lab{50, 52, 61, 58, 47};
    const auto t = summarize_regression("Fe", lab, lab);
    EXPECT_NEAR(t.agreement->r, 1.0, 1e-15);
    EXPECT_EQ(t.agreement->rmse, 0.0);
    EXPECT_EQ(t.agreement->bias, 0.0);
    EXPECT_EQ(t.agreement->rpc, 0.0);
    for (double r : t.residuals) EXPECT_EQ(r, 0.0);
}

TEST(RunCv, PooledPairsCoverEveryHoleOnce) {
    const auto p = random_problem(5, 8, 2);
    ModelSpec spec;
    spec.rf.n_trees = 20;
    for (auto mode : {CvMode::random_kfold, CvMode::leave_one_blast_out}) {
        const auto plan = plan_for(p, mode);
        const auto rep = run_cv(p, spec, plan);
        EXPECT_EQ(rep.hole_ids, p.hole_ids);
        EXPECT_EQ(rep.fold, plan.fold);
        EXPECT_EQ(rep.targets[0].lab.size(), p.hole_ids.size());
        for (std::size_t i = 0; i < p.hole_ids.size(); ++i) EXPECT_EQ(rep.targets[0].lab[i], p.Y(static_cast<Eigen::Index>(i), 0));
        EXPECT_GT(rep.targets[0].agreement->r, 0.8);
    }
    EXPECT_EQ(run_cv(p, spec, plan_for(p, CvMode::leave_one_blast_out)).folds, 5);
}

TEST(RunCv, Classification) {
    const auto p = random_problem(4, 10, 3, Task::classification);
    ModelSpec spec;
    spec.kind = ModelKind::svm;
    const auto rep = run_cv(p, spec, plan_for(p, CvMode::random_kfold));
    ASSERT_TRUE(rep.targets[0].confusion.has_value());
    EXPECT_EQ(rep.targets[0].confusion->total(), 40u);
    EXPECT_GT(rep.targets[0].confusion->accuracy, 0.8);
}

TEST(RunCv, SameSeedSameReport) {
    const auto p = random_problem(4, 6, 4);
    ModelSpec spec;
    spec.rf.n_trees = 10;
    const auto plan = plan_for(p, CvMode::random_kfold);
    EXPECT_EQ(run_cv(p, spec, plan).targets[0].pred, run_cv(p, spec, plan).targets[0].pred);
}

TEST(NoLeakage, CorruptedTestRowsLeaveModelsUntouched) {
    const auto p = random_problem(5, 8, 5);
    for (auto kind : {ModelKind::rf, ModelKind::gp, ModelKind::mean}) {
        ModelSpec spec;
        spec.kind = kind;
        spec.rf.n_trees = 10;
        for (auto mode : {CvMode::random_kfold, CvMode::leave_one_blast_out}) {
            const auto plan = plan_for(p, mode);
            for (int f = 0; f < plan.k; ++f) {
                CvProblem bad = p;
                for (std::size_t i : plan.members(f)) {
                    bad.X.row(static_cast<Eigen::Index>(i)).setConstant(1e6 * (f + 1));
                    bad.Y(static_cast<Eigen::Index>(i), 0) = -1e6;
                }
                EXPECT_EQ(state_of(train_fold(p, spec, plan, f)), state_of(train_fold(bad, spec, plan, f)));
            }
        }
    }
}

namespace {

FeatureMatrix tiny_features() {
    FeatureMatrix m;
    m.hole_ids = {"H1", "H2", "H3", "H4"};
    m.registry = FeatureRegistry(std::vector<FeatureKey>{{"torque", "mean"}, {"rop", "mean"}});
    m.rows = {{1, 2}, {3, 4}, {5, 6}, {7, 8}};
    return m;
}

Dataset tiny_dataset() {
    Dataset d;
    const char* blasts[] = {"B1", "B1", "B2", "B2"};
    for (int i = 0; i < 4; ++i) {
        LabeledHole h;
        h.signals.hole_id = "H" + std::to_string(i + 1);
        h.signals.blast_id = blasts[i];
        LabelRecord r;
        r.hole_id = h.signals.hole_id;
        r.assays["Fe"] = 50.0 + i;
        if (i != 2) r.assays["SiO2"] = 10.0 - i;
        r.materials["SHL"] = i % 2 ? 0.0 : 20.0;
        h.labels = r;
        d.holes.push_back(h);
    }
    return d;
}

}  // namespace

TEST(AssembleProblem, JoinsLabelledHoles) {
    const auto p = assemble_problem(tiny_features(), tiny_dataset(), TargetSpec::assay("SiO2"));
    EXPECT_EQ(p.hole_ids, (std::vector<std::string>{"H1", "H2", "H4"}));
    EXPECT_EQ(p.blast_ids, (std::vector<std::string>{"B1", "B1", "B2"}));
    EXPECT_EQ(p.X(2, 1), 8.0);
    EXPECT_EQ(p.Y(2, 0), 7.0);
    EXPECT_EQ(p.registry_hash, tiny_features().registry.hash());
}

TEST(AssembleProblem, AugmentAddsColumn) {
    const auto p = assemble_problem(tiny_features(), tiny_dataset(), TargetSpec::assay("SiO2"), std::string("Fe"));
    ASSERT_EQ(p.X.cols(), 3);
    EXPECT_EQ(p.feature_names.size(), 3u);
    EXPECT_EQ(p.X(1, 2), 51.0);
    try {
        assemble_problem(tiny_features(), tiny_dataset(), TargetSpec::assay("Fe"), std::string("Fe"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::AugmentEqualsTarget);
    }
}

TEST(AssembleProblem, MaterialPresence) {
    const auto p = assemble_problem(tiny_features(), tiny_dataset(), TargetSpec::material("SHL"));
    EXPECT_EQ(p.task, Task::classification);
    EXPECT_EQ(p.Y(0, 0), 1.0);
    EXPECT_EQ(p.Y(1, 0), 0.0);
}

TEST(AssembleProblem, MissingTarget) {
    try {
        assemble_problem(tiny_features(), tiny_dataset(), TargetSpec::assay("P"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MissingTarget);
    }
}
