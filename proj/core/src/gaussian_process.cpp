#include "mwd/gaussian_process.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <numbers>

#include "mwd/error.hpp"

namespace mwd {

void GPParams::validate() const {
    if (!(lengthscale > 0.0) || !(signal_variance > 0.0) || !(noise_variance > 0.0)) {
        throw Error(ErrorCode::InvalidParams, "GP hyperparameters must be strictly positive");
    }
}

std::vector<double> GPOptions::default_lengthscales() {
    std::vector<double> out;
    for (int e = -3; e <= 6; ++e) out.push_back(std::ldexp(1.0, e));
    return out;
}

std::vector<double> GPOptions::default_noise_ratios() {
    return {1e-4, 1e-3, 1e-2, 1e-1, 1e0};
}

namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    Eigen::MatrixXd D(A.rows(), B.rows());
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
        for (Eigen::Index i = 0; i < A.rows(); ++i) D(i, j) = (A.row(i) - B.row(j)).squaredNorm();
    }
    return D;
}

Eigen::MatrixXd kernel_from_distances(const Eigen::MatrixXd& D, const GPParams& p) {
    return p.signal_variance * (-D.array() / (2.0 * p.lengthscale * p.lengthscale)).exp();
}

struct Factorization {
    Eigen::MatrixXd L;
    Eigen::VectorXd alpha;
    double jitter = 0.0;
    double lml = 0.0;
};

// Cholesky of K + noise I with jitter escalation 1e-10 .. 1e-4 of the mean diagonal.
Factorization factorize(const Eigen::MatrixXd& D, const Eigen::VectorXd& y, const GPParams& p) {
    const auto n = D.rows();
    Eigen::MatrixXd K = kernel_from_distances(D, p);
    K.diagonal().array() += p.noise_variance;
    const double mean_diag = K.trace() / static_cast<double>(n);

    double jitter = 0.0;
    for (double rel = 0.0; rel <= 1e-4 * (1.0 + 1e-9); rel = rel == 0.0 ? 1e-10 : rel * 10.0) {
        jitter = rel * mean_diag;
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(Kj);
        if (llt.info() != Eigen::Success) continue;
        Factorization f;
        f.L = llt.matrixL();
        if (!(f.L.diagonal().array() > 0.0).all()) continue;
        f.alpha = llt.solve(y);
        f.jitter = jitter;
        f.lml = -0.5 * y.dot(f.alpha) - f.L.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
        if (!std::isfinite(f.lml)) continue;
        return f;
    }
    throw Error(ErrorCode::IllConditionedKernel,
                "Cholesky failed up to jitter " + std::to_string(jitter) + " at lengthscale " +
                    std::to_string(p.lengthscale));
}

double variance_of(const Eigen::VectorXd& y) {
    const double mu = y.mean();
    return (y.array() - mu).square().mean();
}

GPModel assemble(const Eigen::MatrixXd& X, const Eigen::MatrixXd& D, const Eigen::VectorXd& yc, double y_mean,
                 const GPParams& params) {
    Factorization f = factorize(D, yc, params);
    GPModel m;
    m.params = params;
    m.X = X;
    m.alpha = std::move(f.alpha);
    m.chol_L = std::move(f.L);
    m.y_mean = y_mean;
    m.jitter = f.jitter;
    m.log_marginal_likelihood = f.lml;
    return m;
}

std::array<double, 3> gradient_from_distances(const Eigen::MatrixXd& D, const Eigen::VectorXd& y,
                                              const GPParams& p) {
    const Factorization f = factorize(D, y, p);
    const auto n = D.rows();
    const Eigen::MatrixXd Kinv = f.L.transpose().triangularView<Eigen::Upper>().solve(
        f.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n)));
    const Eigen::MatrixXd W = f.alpha * f.alpha.transpose() - Kinv;

    const Eigen::MatrixXd Kse = kernel_from_distances(D, p);
    const Eigen::MatrixXd dK_dlogl = Kse.array() * D.array() / (p.lengthscale * p.lengthscale);
    std::array<double, 3> g{};
    g[0] = 0.5 * (W.array() * dK_dlogl.array()).sum();
    g[1] = 0.5 * (W.array() * Kse.array()).sum();
    g[2] = 0.5 * p.noise_variance * W.trace();
    return g;
}

void check_training_inputs(const Eigen::MatrixXd& X, Eigen::Index targets) {
    if (X.rows() < 3) throw Error(ErrorCode::TooFewPoints, "GP needs n >= 3");
    if (targets != X.rows()) throw Error(ErrorCode::LengthMismatch, "GP X rows vs targets");
    if (!X.allFinite()) throw Error(ErrorCode::NonFiniteSample, "GP inputs");
}

// Gradient ascent in log-parameter space with backtracking; never decreases the likelihood.
GPParams refine(const Eigen::MatrixXd& D, const Eigen::VectorXd& yc, GPParams start, double start_lml,
                int iterations) {
    GPParams cur = start;
    double cur_lml = start_lml;
    double step = 0.1;
    for (int it = 0; it < iterations && step > 1e-6; ++it) {
        const auto g = gradient_from_distances(D, yc, cur);
        const double norm = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
        if (!(norm > 1e-9)) break;
        bool improved = false;
        while (step > 1e-6) {
            GPParams next = cur;
            next.lengthscale = cur.lengthscale * std::exp(step * g[0] / norm);
            next.signal_variance = cur.signal_variance * std::exp(step * g[1] / norm);
            next.noise_variance = cur.noise_variance * std::exp(step * g[2] / norm);
            double lml = -std::numeric_limits<double>::infinity();
            try {
                lml = factorize(D, yc, next).lml;
            } catch (const Error&) {
            }
            if (lml > cur_lml) {
                cur = next;
                cur_lml = lml;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }
    return cur;
}

}  // namespace

double gp_log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y_centered,
                                  const GPParams& params) {
    params.validate();
    return factorize(squared_distances(X, X), y_centered, params).lml;
}

std::array<double, 3> gp_log_marginal_likelihood_gradient(const Eigen::MatrixXd& X,
                                                          const Eigen::VectorXd& y_centered,
                                                          const GPParams& params) {
    params.validate();
    return gradient_from_distances(squared_distances(X, X), y_centered, params);
}

std::vector<GPModel> train_gp_multi(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const GPOptions& options) {
    check_training_inputs(X, Y.rows());
    if (!Y.allFinite()) throw Error(ErrorCode::NonFiniteSample, "GP targets");
    const Eigen::MatrixXd D = squared_distances(X, X);
    const auto q = Y.cols();

    std::vector<Eigen::VectorXd> centred;
    std::vector<double> means, variances;
    for (Eigen::Index o = 0; o < q; ++o) {
        const double mu = Y.col(o).mean();
        means.push_back(mu);
        centred.emplace_back(Y.col(o).array() - mu);
        variances.push_back(std::max(variance_of(Y.col(o)), 1e-12));
    }

    auto params_for = [&](double l, double ratio, Eigen::Index o) {
        GPParams p;
        p.lengthscale = l;
        p.signal_variance = variances[static_cast<std::size_t>(o)];
        p.noise_variance = ratio * p.signal_variance;
        return p;
    };

    std::vector<GPModel> models;
    if (options.fixed) {
        options.fixed->validate();
        for (Eigen::Index o = 0; o < q; ++o) {
            models.push_back(assemble(X, D, centred[static_cast<std::size_t>(o)], means[static_cast<std::size_t>(o)],
                                      *options.fixed));
        }
        return models;
    }

    std::vector<std::vector<GPGridPoint>> grids(static_cast<std::size_t>(q));
    double best_total = -std::numeric_limits<double>::infinity();
    double best_l = 0.0, best_ratio = 0.0;
    for (double l : options.lengthscales) {
        for (double ratio : options.noise_ratios) {
            double total = 0.0;
            bool ok = true;
            for (Eigen::Index o = 0; o < q; ++o) {
                GPGridPoint gp{params_for(l, ratio, o), -std::numeric_limits<double>::infinity(), false};
                try {
                    gp.log_marginal_likelihood = factorize(D, centred[static_cast<std::size_t>(o)], gp.params).lml;
                    gp.factorized = true;
                } catch (const Error&) {
                    ok = false;
                }
                total += gp.log_marginal_likelihood;
                grids[static_cast<std::size_t>(o)].push_back(gp);
            }
            if (ok && total > best_total) {
                best_total = total;
                best_l = l;
                best_ratio = ratio;
            }
        }
    }
    if (!(best_l > 0.0)) throw Error(ErrorCode::IllConditionedKernel, "no grid point could be factorized");

    for (Eigen::Index o = 0; o < q; ++o) {
        const auto& yc = centred[static_cast<std::size_t>(o)];
        GPParams chosen = params_for(best_l, best_ratio, o);
        if (options.refine) {
            chosen = refine(D, yc, chosen, factorize(D, yc, chosen).lml, options.refine_iterations);
        }
        GPModel m = assemble(X, D, yc, means[static_cast<std::size_t>(o)], chosen);
        m.grid = std::move(grids[static_cast<std::size_t>(o)]);
        models.push_back(std::move(m));
    }
    return models;
}

GPModel train_gp(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GPOptions& options) {
    return std::move(train_gp_multi(X, y, options).front());
}

Eigen::VectorXd GPModel::predict_mean(const Eigen::MatrixXd& Xs) const {
    if (Xs.rows() == 0) return {};
    const Eigen::MatrixXd Ks = kernel_from_distances(squared_distances(Xs, X), params);
    return (Ks * alpha).array() + y_mean;
}

Eigen::VectorXd GPModel::predict_variance(const Eigen::MatrixXd& Xs) const {
    if (Xs.rows() == 0) return {};
    const Eigen::MatrixXd Ks = kernel_from_distances(squared_distances(X, Xs), params);
    const Eigen::MatrixXd V = chol_L.triangularView<Eigen::Lower>().solve(Ks);
    Eigen::VectorXd var = Eigen::VectorXd::Constant(Xs.rows(), params.signal_variance + params.noise_variance);
    var -= V.colwise().squaredNorm().transpose();
    return var.cwiseMax(0.0);
}

}  // namespace mwd
