#pragma once

#include <Eigen/Core>
#include <vector>

namespace mwd {

struct SVMParams {
    double C = 1.0;
    double rbf_gamma = 0.0;  // 0 selects 1/p at training time
    double tolerance = 1e-3;
    int max_passes = 100;    // iteration cap = max_passes * n

    void validate() const;
};

/// Soft-margin RBF classifier trained by sequential minimal optimisation with
/// maximal-violating-pair working set selection.
struct SVMModel {
    SVMParams params;             // rbf_gamma resolved
    Eigen::MatrixXd support;      // support vectors, one row each
    std::vector<double> coef;     // alpha_i * y_i per support vector
    double bias = 0.0;
    bool converged = true;
    long iterations = 0;

    // Full dual solution in canonical row order, kept for diagnostics.
    std::vector<double> alpha;
    std::vector<int> labels;

    Eigen::VectorXd decision(const Eigen::MatrixXd& X) const;
    /// +1 / -1; a zero decision value maps to +1.
    std::vector<int> predict(const Eigen::MatrixXd& X) const;
};

/// labels must be -1/+1 with both classes present.
SVMModel train_svm(const Eigen::MatrixXd& X, const std::vector<int>& labels, const SVMParams& params);

}  // namespace mwd
