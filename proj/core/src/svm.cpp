#include "mwd/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mwd/error.hpp"

namespace mwd {

void SVMParams::validate() const {
    if (!(C > 0.0)) throw Error(ErrorCode::InvalidParams, "SVM C must be > 0");
    if (rbf_gamma < 0.0) throw Error(ErrorCode::InvalidParams, "SVM gamma must be > 0");
    if (!(tolerance > 0.0)) throw Error(ErrorCode::InvalidParams, "SVM tolerance must be > 0");
    if (max_passes < 1) throw Error(ErrorCode::InvalidParams, "SVM max_passes must be >= 1");
}

namespace {

double rbf(const Eigen::MatrixXd& A, Eigen::Index i, const Eigen::MatrixXd& B, Eigen::Index j, double gamma) {
    return std::exp(-gamma * (A.row(i) - B.row(j)).squaredNorm());
}

// Lexicographic row order (features, then label) so that the solver sees the
// same problem whatever order the caller supplied the rows in.
std::vector<Eigen::Index> canonical_order(const Eigen::MatrixXd& X, const std::vector<int>& labels) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(X.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
            if (X(a, c) != X(b, c)) return X(a, c) < X(b, c);
        }
        return labels[static_cast<std::size_t>(a)] < labels[static_cast<std::size_t>(b)];
    });
    return order;
}

}  // namespace

SVMModel train_svm(const Eigen::MatrixXd& Xin, const std::vector<int>& labels_in, const SVMParams& params_in) {
    params_in.validate();
    const auto n = Xin.rows();
    if (static_cast<std::size_t>(n) != labels_in.size()) throw Error(ErrorCode::LengthMismatch, "SVM labels");
    if (!Xin.allFinite()) throw Error(ErrorCode::NonFiniteSample, "SVM inputs");
    bool pos = false, neg = false;
    for (int l : labels_in) {
        if (l == 1) pos = true;
        else if (l == -1) neg = true;
        else throw Error(ErrorCode::InvalidParams, "SVM labels must be -1 or +1");
    }
    if (!(pos && neg)) throw Error(ErrorCode::SingleClass, "SVM training needs both classes");

    SVMParams params = params_in;
    if (params.rbf_gamma == 0.0) params.rbf_gamma = 1.0 / static_cast<double>(std::max<Eigen::Index>(1, Xin.cols()));

    const auto order = canonical_order(Xin, labels_in);
    Eigen::MatrixXd X(n, Xin.cols());
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        X.row(k) = Xin.row(order[static_cast<std::size_t>(k)]);
        y[static_cast<std::size_t>(k)] = labels_in[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
    }

    // Q_ij = y_i y_j K(x_i, x_j)
    Eigen::MatrixXd Q(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = j; i < n; ++i) {
            const double k = rbf(X, i, X, j, params.rbf_gamma) * y[static_cast<std::size_t>(i)] *
                             y[static_cast<std::size_t>(j)];
            Q(i, j) = k;
            Q(j, i) = k;
        }
    }

    const double C = params.C;
    std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
    std::vector<double> G(static_cast<std::size_t>(n), -1.0);  // gradient of 1/2 a'Qa - e'a
    auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0); };
    auto in_low = [&](std::size_t t) { return (y[t] == -1 && alpha[t] < C) || (y[t] == 1 && alpha[t] > 0.0); };

    const long max_iter = static_cast<long>(params.max_passes) * std::max<long>(1, static_cast<long>(n));
    long iter = 0;
    bool converged = false;
    constexpr double tau = 1e-12;
    for (; iter < max_iter; ++iter) {
        // Maximal violating pair; ties go to the lowest canonical index.
        std::ptrdiff_t i = -1, j = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < alpha.size(); ++t) {
            const double v = -y[t] * G[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = static_cast<std::ptrdiff_t>(t);
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = static_cast<std::ptrdiff_t>(t);
            }
        }
        if (i < 0 || j < 0 || gmax - gmin < params.tolerance) {
            converged = true;
            break;
        }
        const auto ui = static_cast<std::size_t>(i), uj = static_cast<std::size_t>(j);
        const double old_ai = alpha[ui], old_aj = alpha[uj];
        const double qii = Q(i, i), qjj = Q(j, j), qij = Q(i, j);

        if (y[ui] != y[uj]) {
            double quad = qii + qjj + 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (-G[ui] - G[uj]) / quad;
            const double diff = alpha[ui] - alpha[uj];
            alpha[ui] += delta;
            alpha[uj] += delta;
            if (diff > 0.0) {
                if (alpha[uj] < 0.0) {
                    alpha[uj] = 0.0;
                    alpha[ui] = diff;
                }
            } else if (alpha[ui] < 0.0) {
                alpha[ui] = 0.0;
                alpha[uj] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[ui] > C) {
                    alpha[ui] = C;
                    alpha[uj] = C - diff;
                }
            } else if (alpha[uj] > C) {
                alpha[uj] = C;
                alpha[ui] = C + diff;
            }
        } else {
            double quad = qii + qjj - 2.0 * qij;
            if (quad <= 0.0) quad = tau;
            const double delta = (G[ui] - G[uj]) / quad;
            const double sum = alpha[ui] + alpha[uj];
            alpha[ui] -= delta;
            alpha[uj] += delta;
            if (sum > C) {
                if (alpha[ui] > C) {
                    alpha[ui] = C;
                    alpha[uj] = sum - C;
                }
            } else if (alpha[uj] < 0.0) {
                alpha[uj] = 0.0;
                alpha[ui] = sum;
            }
            if (sum > C) {
                if (alpha[uj] > C) {
                    alpha[uj] = C;
                    alpha[ui] = sum - C;
                }
            } else if (alpha[ui] < 0.0) {
                alpha[ui] = 0.0;
                alpha[uj] = sum;
            }
        }

        const double dai = alpha[ui] - old_ai, daj = alpha[uj] - old_aj;
        for (Eigen::Index t = 0; t < n; ++t) G[static_cast<std::size_t>(t)] += Q(t, i) * dai + Q(t, j) * daj;
    }

    // Offset from free vectors, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    int free_count = 0;
    for (std::size_t t = 0; t < alpha.size(); ++t) {
        const double yg = y[t] * G[t];
        if (alpha[t] >= C) {
            if (y[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++free_count;
            free_sum += yg;
        }
    }
    const double rho = free_count > 0 ? free_sum / free_count : 0.5 * (ub + lb);

    SVMModel model;
    model.params = params;
    model.bias = -rho;
    model.converged = converged;
    model.iterations = iter;
    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (alpha[static_cast<std::size_t>(t)] > 0.0) sv.push_back(t);
    }
    model.support.resize(static_cast<Eigen::Index>(sv.size()), X.cols());
    for (std::size_t k = 0; k < sv.size(); ++k) {
        model.support.row(static_cast<Eigen::Index>(k)) = X.row(sv[k]);
        model.coef.push_back(alpha[static_cast<std::size_t>(sv[k])] * y[static_cast<std::size_t>(sv[k])]);
    }
    model.alpha = std::move(alpha);
    model.labels = std::move(y);
    return model;
}

Eigen::VectorXd SVMModel::decision(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double f = bias;
        for (Eigen::Index k = 0; k < support.rows(); ++k) {
            f += coef[static_cast<std::size_t>(k)] * rbf(support, k, X, i, params.rbf_gamma);
        }
        out[i] = f;
    }
    return out;
}

std::vector<int> SVMModel::predict(const Eigen::MatrixXd& X) const {
    const Eigen::VectorXd f = decision(X);
    std::vector<int> out(static_cast<std::size_t>(f.size()));
    for (Eigen::Index i = 0; i < f.size(); ++i) out[static_cast<std::size_t>(i)] = f[i] >= 0.0 ? 1 : -1;
    return out;
}

}  // namespace mwd
