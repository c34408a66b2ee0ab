#include "mwd/random_forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mwd/error.hpp"
#include "parallel.hpp"

namespace mwd {

int RFParams::resolved_mtry(int n_features, Task task) const {
    if (mtry) return std::clamp(*mtry, 1, n_features);
    const double p = static_cast<double>(n_features);
    const int m = task == Task::regression ? static_cast<int>(std::ceil(p / 3.0))
                                           : static_cast<int>(std::ceil(std::sqrt(p)));
    return std::clamp(m, 1, n_features);
}

void RFParams::validate(int n_features) const {
    if (n_trees < 1) throw Error(ErrorCode::InvalidParams, "n_trees must be >= 1");
    if (min_leaf < 1) throw Error(ErrorCode::InvalidParams, "min_leaf must be >= 1");
    if (max_depth && *max_depth < 0) throw Error(ErrorCode::InvalidParams, "max_depth must be >= 0");
    if (mtry && (*mtry < 1 || *mtry > n_features)) {
        throw Error(ErrorCode::InvalidParams, "mtry must lie in [1, p]");
    }
}

const double* DecisionTree::find_leaf(const double* row, Eigen::Index stride) const {
    int k = 0;
    while (nodes[static_cast<std::size_t>(k)].feature >= 0) {
        const Node& node = nodes[static_cast<std::size_t>(k)];
        k = row[node.feature * stride] <= node.threshold ? node.left : node.right;
    }
    return leaf_values.data() + static_cast<std::ptrdiff_t>(nodes[static_cast<std::size_t>(k)].leaf) * outputs;
}

int DecisionTree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        best = std::max(best, d[k]);
        if (nodes[k].feature >= 0) {
            d[static_cast<std::size_t>(nodes[k].left)] = d[k] + 1;
            d[static_cast<std::size_t>(nodes[k].right)] = d[k] + 1;
        }
    }
    return best;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, Task task, const RFParams& params,
                int mtry, std::uint64_t seed)
        : X_(X), Y_(Y), task_(task), params_(params), mtry_(mtry), rng_(seed),
          q_(static_cast<int>(Y.cols())), importance_(static_cast<std::size_t>(X.cols()), 0.0) {}

    DecisionTree build() {
        const auto n = static_cast<int>(X_.rows());
        samples_.resize(static_cast<std::size_t>(n));
        if (params_.bootstrap) {
            std::uniform_int_distribution<int> pick(0, n - 1);
            for (auto& s : samples_) s = pick(rng_);
        } else {
            std::iota(samples_.begin(), samples_.end(), 0);
        }
        features_.resize(static_cast<std::size_t>(X_.cols()));
        std::iota(features_.begin(), features_.end(), 0);
        buffer_.reserve(static_cast<std::size_t>(n));
        total_.resize(static_cast<std::size_t>(q_));
        left_.resize(static_cast<std::size_t>(q_));

        tree_.outputs = q_;
        tree_.nodes.emplace_back();
        struct Pending {
            int node, begin, end, depth;
        };
        std::vector<Pending> stack{{0, 0, n, 0}};
        while (!stack.empty()) {
            const Pending job = stack.back();
            stack.pop_back();
            Split split;
            if (!should_stop(job.begin, job.end, job.depth)) split = find_split(job.begin, job.end);
            if (split.feature < 0) {
                make_leaf(job.node, job.begin, job.end);
                continue;
            }
            importance_[static_cast<std::size_t>(split.feature)] += split.gain;
            auto first = samples_.begin() + job.begin;
            auto last = samples_.begin() + job.end;
            const auto mid = std::partition(first, last, [&](int s) {
                return X_(s, split.feature) <= split.threshold;
            });
            const int cut = static_cast<int>(mid - samples_.begin());
            const int left = static_cast<int>(tree_.nodes.size());
            tree_.nodes.emplace_back();
            tree_.nodes.emplace_back();
            auto& node = tree_.nodes[static_cast<std::size_t>(job.node)];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.left = left;
            node.right = left + 1;
            stack.push_back({left + 1, cut, job.end, job.depth + 1});
            stack.push_back({left, job.begin, cut, job.depth + 1});
        }
        return std::move(tree_);
    }

    const std::vector<double>& importance() const { return importance_; }

private:
    static constexpr double kTieTolerance = 1e-12;

    struct Split {
        int feature = -1;
        double threshold = 0.0;
        double gain = -1.0;
    };

    bool should_stop(int begin, int end, int depth) const {
        const int n = end - begin;
        if (n < 2 * params_.min_leaf) return true;
        if (params_.max_depth && depth >= *params_.max_depth) return true;
        const int first = samples_[static_cast<std::size_t>(begin)];
        for (int k = begin + 1; k < end; ++k) {
            const int s = samples_[static_cast<std::size_t>(k)];
            for (int o = 0; o < q_; ++o) {
                if (Y_(s, o) != Y_(first, o)) return false;
            }
        }
        return true;  // pure node
    }

    void make_leaf(int node, int begin, int end) {
        const int leaf = static_cast<int>(tree_.leaf_values.size()) / q_;
        for (int o = 0; o < q_; ++o) {
            double sum = 0.0;
            for (int k = begin; k < end; ++k) sum += Y_(samples_[static_cast<std::size_t>(k)], o);
            tree_.leaf_values.push_back(sum / static_cast<double>(end - begin));
        }
        tree_.nodes[static_cast<std::size_t>(node)].leaf = leaf;
    }

    Split find_split(int begin, int end) {
        const int n = end - begin;
        const int p = static_cast<int>(features_.size());
        std::fill(total_.begin(), total_.end(), 0.0);
        for (int k = begin; k < end; ++k) {
            const int s = samples_[static_cast<std::size_t>(k)];
            for (int o = 0; o < q_; ++o) total_[static_cast<std::size_t>(o)] += Y_(s, o);
        }

        Split best;
        for (int k = 0; k < p; ++k) {
            if (k >= mtry_ && best.feature >= 0) break;
            // Lazy Fisher-Yates: draw the next candidate without replacement.
            std::uniform_int_distribution<int> pick(k, p - 1);
            std::swap(features_[static_cast<std::size_t>(k)], features_[static_cast<std::size_t>(pick(rng_))]);
            const int f = features_[static_cast<std::size_t>(k)];

            buffer_.clear();
            for (int j = begin; j < end; ++j) {
                const int s = samples_[static_cast<std::size_t>(j)];
                buffer_.emplace_back(X_(s, f), s);
            }
            std::sort(buffer_.begin(), buffer_.end());
            if (buffer_.front().first == buffer_.back().first) continue;

            std::fill(left_.begin(), left_.end(), 0.0);
            for (int i = 0; i + 1 < n; ++i) {
                const int s = buffer_[static_cast<std::size_t>(i)].second;
                for (int o = 0; o < q_; ++o) left_[static_cast<std::size_t>(o)] += Y_(s, o);
                const double xv = buffer_[static_cast<std::size_t>(i)].first;
                const double xn = buffer_[static_cast<std::size_t>(i + 1)].first;
                if (xv == xn) continue;
                const int nl = i + 1;
                const int nr = n - nl;
                if (nl < params_.min_leaf || nr < params_.min_leaf) continue;
                const double gain = split_gain(nl, nr);
                // Relative slack: equal partitions reached through different
                // features must not be ranked by rounding noise.
                if (gain > best.gain + kTieTolerance * std::abs(best.gain)) {
                    best.gain = gain;
                    best.feature = f;
                    const double mid = 0.5 * (xv + xn);
                    best.threshold = mid < xn ? mid : xv;
                }
            }
        }
        return best;
    }

    double split_gain(int nl, int nr) const {
        const double dl = nl, dr = nr, dn = nl + nr;
        if (task_ == Task::classification) {
            const double c = total_[0], cl = left_[0], cr = c - cl;
            const double parent = 2.0 * c * (dn - c) / dn;
            const double lhs = 2.0 * cl * (dl - cl) / dl;
            const double rhs = 2.0 * cr * (dr - cr) / dr;
            return std::max(0.0, parent - lhs - rhs);
        }
        double gain = 0.0;
        for (int o = 0; o < q_; ++o) {
            const double sl = left_[static_cast<std::size_t>(o)];
            const double sr = total_[static_cast<std::size_t>(o)] - sl;
            const double diff = sl / dl - sr / dr;
            gain += dl * dr / dn * diff * diff;
        }
        return gain;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::MatrixXd& Y_;
    Task task_;
    const RFParams& params_;
    int mtry_;
    std::mt19937_64 rng_;
    int q_;
    std::vector<int> samples_;
    std::vector<int> features_;
    std::vector<std::pair<double, int>> buffer_;
    std::vector<double> total_;
    std::vector<double> left_;
    std::vector<double> importance_;
    DecisionTree tree_;
};

void check_inputs(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    if (X.rows() < 2) throw Error(ErrorCode::TooFewPoints, "random forest needs n >= 2");
    if (Y.rows() != X.rows()) throw Error(ErrorCode::LengthMismatch, "X rows vs targets");
    if (X.cols() < 1) throw Error(ErrorCode::InvalidParams, "no features");
    if (!X.allFinite() || !Y.allFinite()) throw Error(ErrorCode::NonFiniteSample, "random forest input");
}

RFModel fit_forest(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Ytrain, const RFParams& params, Task task) {
    const int p = static_cast<int>(X.cols());
    params.validate(p);
    RFModel model;
    model.params = params;
    model.task = task;
    model.n_features = p;
    model.n_outputs = static_cast<int>(Ytrain.cols());
    const int mtry = params.resolved_mtry(p, task);

    model.trees.resize(static_cast<std::size_t>(params.n_trees));
    std::vector<std::vector<double>> per_tree(static_cast<std::size_t>(params.n_trees));
    detail::parallel_for(static_cast<std::size_t>(params.n_trees), [&](std::size_t t) {
        TreeBuilder builder(X, Ytrain, task, params, mtry, detail::derive_seed(params.seed, t));
        model.trees[t] = builder.build();
        per_tree[t] = builder.importance();
    });
    model.raw_importance.assign(static_cast<std::size_t>(p), 0.0);
    for (const auto& imp : per_tree) {
        for (std::size_t f = 0; f < imp.size(); ++f) model.raw_importance[f] += imp[f];
    }
    return model;
}

}  // namespace

RFModel train_rf(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const RFParams& params, Task task) {
    check_inputs(X, y);
    if (task == Task::classification) {
        bool has0 = false, has1 = false;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            if (y[i] == 0.0) has0 = true;
            else if (y[i] == 1.0) has1 = true;
            else throw Error(ErrorCode::InvalidParams, "classification targets must be 0 or 1");
        }
        if (!(has0 && has1)) throw Error(ErrorCode::DegenerateTarget, "single class in classification targets");
    }
    RFModel model = fit_forest(X, y, params, task);
    model.y_center = {0.0};
    model.y_scale = {1.0};
    return model;
}

RFModel train_mvrf(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const RFParams& params) {
    check_inputs(X, Y);
    if (Y.cols() < 1) throw Error(ErrorCode::InvalidParams, "no targets");
    Eigen::MatrixXd Z(Y.rows(), Y.cols());
    std::vector<double> center(static_cast<std::size_t>(Y.cols()));
    std::vector<double> scale(static_cast<std::size_t>(Y.cols()));
    for (Eigen::Index o = 0; o < Y.cols(); ++o) {
        const double mu = Y.col(o).mean();
        const double var = (Y.col(o).array() - mu).square().mean();
        const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
        center[static_cast<std::size_t>(o)] = mu;
        scale[static_cast<std::size_t>(o)] = sd;
        Z.col(o) = (Y.col(o).array() - mu) / sd;
    }
    RFModel model = fit_forest(X, Z, params, Task::regression);
    model.y_center = std::move(center);
    model.y_scale = std::move(scale);
    return model;
}

Eigen::MatrixXd RFModel::predict(const Eigen::MatrixXd& X) const {
    if (X.cols() != n_features && X.rows() > 0) {
        throw Error(ErrorCode::LengthMismatch, "feature count differs from training");
    }
    const int q = task == Task::classification ? 1 : n_outputs;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), q);
    const double n_trees = static_cast<double>(trees.size());
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        const double* row = X.data() + i;
        for (const auto& tree : trees) {
            const double* leaf = tree.find_leaf(row, X.rows());
            if (task == Task::classification) {
                out(i, 0) += leaf[0] > 0.5 ? 1.0 : 0.0;
            } else {
                for (int o = 0; o < q; ++o) out(i, o) += leaf[o];
            }
        }
        for (int o = 0; o < q; ++o) {
            out(i, o) /= n_trees;
            if (task == Task::regression) {
                out(i, o) = out(i, o) * y_scale[static_cast<std::size_t>(o)] + y_center[static_cast<std::size_t>(o)];
            }
        }
    }
    return out;
}

std::vector<int> RFModel::predict_classes(const Eigen::MatrixXd& X) const {
    const Eigen::MatrixXd votes = predict(X);
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = votes(i, 0) > 0.5 ? 1 : 0;
    return out;
}

}  // namespace mwd
