#pragma once

#include <Eigen/Core>
#include <array>
#include <optional>
#include <vector>

namespace mwd {

struct GPParams {
    double lengthscale = 1.0;
    double signal_variance = 1.0;
    double noise_variance = 1e-2;

    void validate() const;
};

/// Hyperparameter search over a log-spaced grid of lengthscales and
/// noise-to-signal ratios. The signal variance is fixed to var(y).
struct GPOptions {
    std::vector<double> lengthscales = default_lengthscales();
    std::vector<double> noise_ratios = default_noise_ratios();
    std::optional<GPParams> fixed;  // skips the grid search entirely
    bool refine = false;            // gradient ascent from the best grid point
    int refine_iterations = 50;

    static std::vector<double> default_lengthscales();  // 2^-3 .. 2^6
    static std::vector<double> default_noise_ratios();  // 1e-4 .. 1e0
};

struct GPGridPoint {
    GPParams params;
    double log_marginal_likelihood = 0.0;
    bool factorized = true;
};

struct GPModel {
    GPParams params;
    Eigen::MatrixXd X;       // training inputs, one row each
    Eigen::VectorXd alpha;   // K^-1 (y - y_mean)
    Eigen::MatrixXd chol_L;  // lower Cholesky factor of K + jitter I
    double y_mean = 0.0;
    double jitter = 0.0;
    double log_marginal_likelihood = 0.0;
    std::vector<GPGridPoint> grid;  // every evaluated grid point, in search order

    Eigen::VectorXd predict_mean(const Eigen::MatrixXd& Xs) const;
    /// Latent variance plus noise variance; never negative.
    Eigen::VectorXd predict_variance(const Eigen::MatrixXd& Xs) const;
};

/// Zero-mean GP with squared-exponential kernel plus white noise, fitted on
/// y - mean(y). X is expected to be standardised per feature.
GPModel train_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPOptions& options = {});

/// Independent single-output GPs sharing one grid choice (max summed likelihood).
std::vector<GPModel> train_gp_multi(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                    const GPOptions& options = {});

/// Log marginal likelihood of centred targets; applies jitter escalation.
/// Throws IllConditionedKernel when even the largest jitter fails.
double gp_log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_centered,
                                  const GPParams& params);

/// Gradient with respect to (ln lengthscale, ln signal_variance, ln noise_variance).
std::array<double, 3> gp_log_marginal_likelihood_gradient(const Eigen::MatrixXd& X,
                                                          const Eigen::VectorXd& y_centered,
                                                          const GPParams& params);

}  // namespace mwd
