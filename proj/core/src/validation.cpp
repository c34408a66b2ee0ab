#include "mwd/validation.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "mwd/error.hpp"
#include "parallel.hpp"

namespace mwd {

std::string_view to_string(CvMode mode) noexcept {
    return mode == CvMode::random_kfold ? "random" : "spatial";
}

std::vector<std::size_t> FoldPlan::members(int f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i) {
        if (fold[i] == f) out.push_back(i);
    }
    return out;
}

FoldPlan make_folds(const std::vector<std::string>& hole_ids, const std::vector<std::string>& blast_ids,
                    CvMode mode, int k, std::uint64_t seed) {
    if (blast_ids.size() != hole_ids.size()) throw Error(ErrorCode::LengthMismatch, "hole ids vs blast ids");
    FoldPlan plan;
    plan.mode = mode;
    plan.hole_ids = hole_ids;
    plan.seed = seed;
    plan.fold.assign(hole_ids.size(), -1);
    const std::size_t n = hole_ids.size();

    if (mode == CvMode::random_kfold) {
        if (k < 2) throw Error(ErrorCode::InvalidParams, "k must be >= 2");
        if (n < static_cast<std::size_t>(k)) {
            throw Error(ErrorCode::TooFewHoles, std::to_string(n) + " holes for " + std::to_string(k) + " folds");
        }
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t pos = 0; pos < n; ++pos) plan.fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(k));
        plan.k = k;
        return plan;
    }

    const std::set<std::string> blasts(blast_ids.begin(), blast_ids.end());
    if (blasts.size() < 2) throw Error(ErrorCode::TooFewBlasts, "spatial folds need >= 2 distinct blasts");
    std::map<std::string, int> index;
    for (const auto& b : blasts) {
        index.emplace(b, static_cast<int>(plan.fold_blasts.size()));
        plan.fold_blasts.push_back(b);
    }
    for (std::size_t i = 0; i < n; ++i) plan.fold[i] = index.at(blast_ids[i]);
    plan.k = static_cast<int>(blasts.size());
    return plan;
}

FoldPlan make_folds(const Dataset& dataset, CvMode mode, int k, std::uint64_t seed) {
    std::vector<std::string> ids, blasts;
    for (const auto& h : dataset.holes) {
        ids.push_back(h.signals.hole_id);
        blasts.push_back(h.signals.blast_id);
    }
    return make_folds(ids, blasts, mode, k, seed);
}

CvProblem assemble_problem(const FeatureMatrix& features, const Dataset& labelled, const TargetSpec& target,
                           const std::optional<std::string>& augment) {
    if (target.codes.empty()) throw Error(ErrorCode::InvalidParams, "no target code");
    if (augment) {
        if (!is_assay_code(*augment)) throw Error(ErrorCode::InvalidParams, "augment must be an assay code");
        if (target.kind == TargetKind::assay &&
            std::find(target.codes.begin(), target.codes.end(), *augment) != target.codes.end()) {
            throw Error(ErrorCode::AugmentEqualsTarget, *augment);
        }
    }

    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < features.hole_ids.size(); ++i) row_of.emplace(features.hole_ids[i], i);

    CvProblem pb;
    pb.task = target.kind == TargetKind::assay ? Task::regression : Task::classification;
    pb.target_names = target.codes;
    pb.feature_names = features.registry.column_names();
    pb.augment = augment;
    std::uint64_t hash = features.registry.hash();
    if (augment) {
        pb.feature_names.push_back("lab__" + *augment);
        hash = fnv1a64("augment:" + *augment, hash);
    }
    pb.registry_hash = hash;

    std::vector<std::vector<double>> xrows, yrows;
    for (const auto& h : labelled.holes) {
        if (!h.labels) continue;
        std::vector<double> ys;
        bool ok = true;
        for (const auto& code : target.codes) {
            if (target.kind == TargetKind::assay) {
                const auto v = h.labels->assay(code);
                if (!v) { ok = false; break; }
                ys.push_back(*v);
            } else {
                if (!h.labels->material(code)) { ok = false; break; }
                ys.push_back(materialize_presence(*h.labels, code, target.threshold_percent) ? 1.0 : 0.0);
            }
        }
        std::optional<double> aug;
        if (ok && augment) {
            aug = h.labels->assay(*augment);
            ok = aug.has_value();
        }
        if (!ok) continue;
        const auto it = row_of.find(h.signals.hole_id);
        if (it == row_of.end()) {
            throw Error(ErrorCode::MissingTarget, "no feature row for labelled hole " + h.signals.hole_id);
        }
        std::vector<double> x = features.rows[it->second];
        if (aug) x.push_back(*aug);
        pb.hole_ids.push_back(h.signals.hole_id);
        pb.blast_ids.push_back(h.signals.blast_id);
        xrows.push_back(std::move(x));
        yrows.push_back(std::move(ys));
    }
    if (xrows.size() < 2) {
        throw Error(ErrorCode::MissingTarget, "fewer than 2 holes carry target " + target.codes.front());
    }

    pb.X.resize(static_cast<Eigen::Index>(xrows.size()), static_cast<Eigen::Index>(pb.feature_names.size()));
    pb.Y.resize(static_cast<Eigen::Index>(yrows.size()), static_cast<Eigen::Index>(target.codes.size()));
    for (std::size_t i = 0; i < xrows.size(); ++i) {
        for (std::size_t c = 0; c < xrows[i].size(); ++c) pb.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = xrows[i][c];
        for (std::size_t c = 0; c < yrows[i].size(); ++c) pb.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = yrows[i][c];
    }
    return pb;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& M, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = M.row(static_cast<Eigen::Index>(rows[i]));
    return out;
}

void check_plan(const CvProblem& problem, const FoldPlan& plan) {
    if (plan.hole_ids != problem.hole_ids) {
        throw Error(ErrorCode::InvalidParams, "fold plan does not match the problem's holes");
    }
}

ModelSpec fold_spec(const ModelSpec& spec, int f) {
    ModelSpec s = spec;
    s.rf.seed = detail::derive_seed(spec.rf.seed, static_cast<std::uint64_t>(f));
    return s;
}

}  // namespace

ModelHandle train_fold(const CvProblem& problem, const ModelSpec& spec, const FoldPlan& plan, int f) {
    check_plan(problem, plan);
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < plan.fold.size(); ++i) {
        if (plan.fold[i] != f) train.push_back(i);
    }
    if (train.size() < 2) throw Error(ErrorCode::TooFewHoles, "training portion of fold " + std::to_string(f));
    ModelSpec s = fold_spec(spec, f);
    s.task = problem.task;
    return fit_model(s, take_rows(problem.X, train), take_rows(problem.Y, train), problem.registry_hash);
}

TargetResult summarize_regression(std::string name, std::vector<double> lab, std::vector<double> pred) {
    TargetResult t;
    t.name = std::move(name);
    t.residuals.resize(lab.size());
    for (std::size_t i = 0; i < lab.size(); ++i) t.residuals[i] = lab[i] - pred[i];
    t.agreement = bland_altman(lab, pred);
    t.lab = std::move(lab);
    t.pred = std::move(pred);
    return t;
}

TargetResult summarize_classification(std::string name, std::vector<int> lab, std::vector<int> pred) {
    TargetResult t;
    t.name = std::move(name);
    t.confusion = confusion(pred, lab);
    for (std::size_t i = 0; i < lab.size(); ++i) {
        t.lab.push_back(lab[i]);
        t.pred.push_back(pred[i]);
        t.residuals.push_back(static_cast<double>(lab[i] - pred[i]));
    }
    t.lab_classes = std::move(lab);
    t.pred_classes = std::move(pred);
    return t;
}

EvaluationReport run_cv(const CvProblem& problem, const ModelSpec& spec, const FoldPlan& plan) {
    check_plan(problem, plan);
    const auto n = static_cast<std::size_t>(problem.X.rows());
    const auto q = problem.Y.cols();
    Eigen::MatrixXd pred = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), q);
    std::vector<int> pred_class(n, 0);

    EvaluationReport rep;
    rep.model = spec.kind;
    rep.task = problem.task;
    rep.mode = plan.mode;
    rep.folds = plan.k;
    rep.seed = spec.rf.seed;
    rep.augment = problem.augment;
    rep.hole_ids = problem.hole_ids;
    rep.blast_ids = problem.blast_ids;
    rep.fold = plan.fold;

    for (int f = 0; f < plan.k; ++f) {
        const auto test = plan.members(f);
        if (test.empty()) continue;
        ModelHandle model;
        try {
            model = train_fold(problem, spec, plan, f);
        } catch (const Error& e) {
            // A training fold with a single class cannot fit a classifier; fall back to its majority.
            if (e.code() != ErrorCode::DegenerateTarget && e.code() != ErrorCode::SingleClass) throw;
            ModelSpec fallback = spec;
            fallback.kind = ModelKind::mean;
            fallback.task = problem.task;
            model = train_fold(problem, fallback, plan, f);
            rep.warnings.push_back("fold " + std::to_string(f) + ": single-class training data, predicted majority");
        }
        const Prediction p = predict(model, take_rows(problem.X, test), problem.registry_hash);
        for (std::size_t i = 0; i < test.size(); ++i) {
            pred.row(static_cast<Eigen::Index>(test[i])) = p.values.row(static_cast<Eigen::Index>(i)).leftCols(q);
            if (!p.classes.empty()) pred_class[test[i]] = p.classes[i];
        }
    }

    for (Eigen::Index o = 0; o < q; ++o) {
        const std::string& name = problem.target_names[static_cast<std::size_t>(o)];
        if (problem.task == Task::regression) {
            std::vector<double> lab(n), pr(n);
            for (std::size_t i = 0; i < n; ++i) {
                lab[i] = problem.Y(static_cast<Eigen::Index>(i), o);
                pr[i] = pred(static_cast<Eigen::Index>(i), o);
            }
            rep.targets.push_back(summarize_regression(name, std::move(lab), std::move(pr)));
            if (!rep.targets.back().agreement->r_defined) {
                rep.warnings.push_back(name + ": r undefined (constant lab or predicted values)");
            }
        } else {
            std::vector<int> lab(n);
            for (std::size_t i = 0; i < n; ++i) lab[i] = problem.Y(static_cast<Eigen::Index>(i), o) == 1.0 ? 1 : 0;
            rep.targets.push_back(summarize_classification(name, std::move(lab), pred_class));
        }
    }
    return rep;
}

}  // namespace mwd
