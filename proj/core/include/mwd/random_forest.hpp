#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

namespace mwd {

enum class Task { regression, classification };

struct RFParams {
    int n_trees = 300;
    std::optional<int> max_depth;  // unlimited when empty
    int min_leaf = 5;
    std::optional<int> mtry;       // ceil(p/3) for regression, ceil(sqrt(p)) for classification
    bool bootstrap = true;
    std::uint64_t seed = 0;

    int resolved_mtry(int n_features, Task task) const;
    void validate(int n_features) const;
};

/// Array-backed CART tree. Leaves carry one value per output.
struct DecisionTree {
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int leaf = -1;     // index into leaf_values / outputs
    };

    int outputs = 1;
    std::vector<Node> nodes;
    std::vector<double> leaf_values;

    /// Leaf value vector reached by row (pointer to `outputs` doubles).
    const double* find_leaf(const double* row, Eigen::Index stride) const;
    int depth() const;
};

struct RFModel {
    RFParams params;
    Task task = Task::regression;
    int n_features = 0;
    int n_outputs = 1;
    // Output standardisation applied before split scoring (identity for train_rf).
    std::vector<double> y_center;
    std::vector<double> y_scale;
    std::vector<DecisionTree> trees;
    // Summed split-criterion reduction per feature over all trees.
    std::vector<double> raw_importance;

    /// Regression: mean of tree outputs (n x q). Classification: fraction of
    /// trees voting class 1 (n x 1).
    Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const;
    /// Majority vote; ties resolve to class 0.
    std::vector<int> predict_classes(const Eigen::MatrixXd& X) const;
};

/// Univariate forest. Classification targets must be 0/1.
RFModel train_rf(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RFParams& params, Task task);

/// Multi-output regression forest. Targets are standardised per column
/// internally; the split score is the summed per-output variance reduction.
RFModel train_mvrf(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const RFParams& params);

}  // namespace mwd
