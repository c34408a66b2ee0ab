#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mwd/datamodel.hpp"
#include "mwd/features.hpp"
#include "mwd/models.hpp"
#include "mwd/stats.hpp"

namespace mwd {

enum class CvMode { random_kfold, leave_one_blast_out };

std::string_view to_string(CvMode mode) noexcept;

inline constexpr int kDefaultFolds = 5;

struct FoldPlan {
    CvMode mode = CvMode::random_kfold;
    std::vector<std::string> hole_ids;
    std::vector<int> fold;  // parallel to hole_ids
    int k = 0;              // number of folds
    std::uint64_t seed = 0;
    std::vector<std::string> fold_blasts;  // blast held out by each fold (spatial mode)

    std::vector<std::size_t> members(int f) const;
};

/// Random mode: shuffled round-robin assignment, fold sizes differ by at most
/// one. Spatial mode: one fold per distinct blast (sorted by blast_id); k is ignored.
FoldPlan make_folds(const std::vector<std::string>& hole_ids, const std::vector<std::string>& blast_ids,
                    CvMode mode, int k, std::uint64_t seed);
FoldPlan make_folds(const Dataset& dataset, CvMode mode, int k, std::uint64_t seed);

enum class TargetKind { assay, material };

struct TargetSpec {
    TargetKind kind = TargetKind::assay;
    std::vector<std::string> codes;  // one code, or several for multi-output models
    double threshold_percent = 0.0;  // material presence threshold

    static TargetSpec assay(std::string code) { return {TargetKind::assay, {std::move(code)}, 0.0}; }
    static TargetSpec material(std::string code, double threshold = 0.0) {
        return {TargetKind::material, {std::move(code)}, threshold};
    }
};

/// Design matrix and targets for one cross-validation experiment.
struct CvProblem {
    std::vector<std::string> hole_ids;
    std::vector<std::string> blast_ids;
    Eigen::MatrixXd X;
    Eigen::MatrixXd Y;  // one column per target; 0/1 for material presence
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    std::uint64_t registry_hash = 0;
    Task task = Task::regression;
    std::optional<std::string> augment;
};

/// Joins the feature table with labelled holes. Keeps holes that have every
/// requested target (and the augment assay, which becomes one extra feature
/// column). Throws MissingTarget when fewer than two holes qualify and
/// AugmentEqualsTarget when the augment assay is also a target.
CvProblem assemble_problem(const FeatureMatrix& features, const Dataset& labelled, const TargetSpec& target,
                           const std::optional<std::string>& augment = std::nullopt);

struct TargetResult {
    std::string name;
    std::vector<double> lab;
    std::vector<double> pred;
    std::vector<double> residuals;  // lab - pred
    std::optional<AgreementStats> agreement;  // regression
    std::optional<ConfusionMatrix2> confusion;  // classification
    std::vector<int> lab_classes;
    std::vector<int> pred_classes;
};

struct EvaluationReport {
    ModelKind model = ModelKind::rf;
    Task task = Task::regression;
    CvMode mode = CvMode::random_kfold;
    int folds = 0;
    std::uint64_t seed = 0;
    std::optional<std::string> augment;
    std::vector<std::string> hole_ids;
    std::vector<std::string> blast_ids;
    std::vector<int> fold;
    std::vector<TargetResult> targets;
    std::vector<std::string> warnings;
};

/// Trains on every row outside fold f; test rows are never read.
ModelHandle train_fold(const CvProblem& problem, const ModelSpec& spec, const FoldPlan& plan, int f);

/// Pooled out-of-fold evaluation. The plan must list the problem's holes in order.
EvaluationReport run_cv(const CvProblem& problem, const ModelSpec& spec, const FoldPlan& plan);

/// Regression summary of pooled pairs, shared by run_cv and external callers.
TargetResult summarize_regression(std::string name, std::vector<double> lab, std::vector<double> pred);
TargetResult summarize_classification(std::string name, std::vector<int> lab, std::vector<int> pred);

}  // namespace mwd
