#include "mwd/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mwd/datamodel.hpp"
#include "mwd/error.hpp"

namespace mwd {

std::string_view to_string(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::rf: return "rf";
        case ModelKind::mvrf: return "mvrf";
        case ModelKind::gp: return "gp";
        case ModelKind::svm: return "svm";
        case ModelKind::mean: return "mean";
    }
    return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
    for (auto k : {ModelKind::rf, ModelKind::mvrf, ModelKind::gp, ModelKind::svm, ModelKind::mean}) {
        if (to_string(k) == name) return k;
    }
    return std::nullopt;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
    Standardizer s;
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        const double mu = X.rows() ? X.col(c).mean() : 0.0;
        const double var = X.rows() ? (X.col(c).array() - mu).square().mean() : 0.0;
        s.center.push_back(mu);
        s.scale.push_back(var > 0.0 ? std::sqrt(var) : 1.0);
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
    if (static_cast<std::size_t>(X.cols()) != center.size()) {
        throw Error(ErrorCode::LengthMismatch, "standardizer column count");
    }
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
        out.col(c) = (X.col(c).array() - center[static_cast<std::size_t>(c)]) / scale[static_cast<std::size_t>(c)];
    }
    return out;
}

namespace {

std::vector<int> to_signed_labels(const Eigen::VectorXd& y) {
    std::vector<int> out(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] != 1.0) throw Error(ErrorCode::InvalidParams, "classification targets must be 0 or 1");
        out[static_cast<std::size_t>(i)] = y[i] == 1.0 ? 1 : -1;
    }
    return out;
}

}  // namespace

ModelHandle fit_model(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      std::uint64_t registry_hash) {
    if (Y.rows() != X.rows()) throw Error(ErrorCode::LengthMismatch, "X rows vs targets");
    if (Y.cols() < 1) throw Error(ErrorCode::InvalidParams, "no targets");
    const bool multi_ok = spec.kind == ModelKind::mvrf || spec.kind == ModelKind::gp || spec.kind == ModelKind::mean;
    if (Y.cols() > 1 && !multi_ok) {
        throw Error(ErrorCode::InvalidParams, std::string(to_string(spec.kind)) + " is single-output");
    }

    ModelHandle h;
    h.kind = spec.kind;
    h.task = spec.task;
    h.registry_hash = registry_hash;
    h.seed = spec.rf.seed;
    h.n_features = static_cast<int>(X.cols());
    h.n_outputs = static_cast<int>(Y.cols());

    switch (spec.kind) {
        case ModelKind::rf:
            h.state = train_rf(X, Y.col(0), spec.rf, spec.task);
            break;
        case ModelKind::mvrf:
            if (spec.task != Task::regression) throw Error(ErrorCode::InvalidParams, "mvrf is regression-only");
            h.state = train_mvrf(X, Y, spec.rf);
            break;
        case ModelKind::gp: {
            if (spec.task != Task::regression) throw Error(ErrorCode::InvalidParams, "gp is regression-only");
            h.standardizer = Standardizer::fit(X);
            h.state = train_gp_multi(h.standardizer->apply(X), Y, spec.gp);
            break;
        }
        case ModelKind::svm: {
            if (spec.task != Task::classification) {
                throw Error(ErrorCode::InvalidParams, "svm is classification-only");
            }
            h.standardizer = Standardizer::fit(X);
            h.state = train_svm(h.standardizer->apply(X), to_signed_labels(Y.col(0)), spec.svm);
            break;
        }
        case ModelKind::mean: {
            MeanModel m;
            for (Eigen::Index o = 0; o < Y.cols(); ++o) m.means.push_back(Y.col(o).mean());
            h.state = std::move(m);
            break;
        }
    }
    return h;
}

Prediction predict(const ModelHandle& model, const Eigen::MatrixXd& X, std::uint64_t registry_hash) {
    if (registry_hash != model.registry_hash) {
        throw Error(ErrorCode::RegistryMismatch, "feature registry differs from the one used in training");
    }
    if (X.rows() > 0 && X.cols() != model.n_features) {
        throw Error(ErrorCode::RegistryMismatch, "feature count differs from training");
    }
    if (!X.allFinite()) throw Error(ErrorCode::NonFiniteSample, "prediction inputs");

    Prediction out;
    const Eigen::MatrixXd Xs = model.standardizer ? model.standardizer->apply(X) : X;
    if (const auto* rf = std::get_if<RFModel>(&model.state)) {
        out.values = rf->predict(Xs);
        if (rf->task == Task::classification) {
            for (Eigen::Index i = 0; i < out.values.rows(); ++i) out.classes.push_back(out.values(i, 0) > 0.5 ? 1 : 0);
        }
    } else if (const auto* gps = std::get_if<std::vector<GPModel>>(&model.state)) {
        const auto q = static_cast<Eigen::Index>(gps->size());
        out.values.resize(X.rows(), q);
        Eigen::MatrixXd var(X.rows(), q);
        for (Eigen::Index o = 0; o < q; ++o) {
            const auto& gp = (*gps)[static_cast<std::size_t>(o)];
            if (X.rows() > 0) {
                out.values.col(o) = gp.predict_mean(Xs);
                var.col(o) = gp.predict_variance(Xs);
            }
        }
        out.variance = std::move(var);
    } else if (const auto* svm = std::get_if<SVMModel>(&model.state)) {
        out.values.resize(X.rows(), 1);
        if (X.rows() > 0) out.values.col(0) = svm->decision(Xs);
        for (Eigen::Index i = 0; i < out.values.rows(); ++i) out.classes.push_back(out.values(i, 0) >= 0.0 ? 1 : 0);
    } else if (const auto* mean = std::get_if<MeanModel>(&model.state)) {
        out.values.resize(X.rows(), static_cast<Eigen::Index>(mean->means.size()));
        for (std::size_t o = 0; o < mean->means.size(); ++o) {
            out.values.col(static_cast<Eigen::Index>(o)).setConstant(mean->means[o]);
        }
        if (model.task == Task::classification) {
            for (Eigen::Index i = 0; i < out.values.rows(); ++i) out.classes.push_back(out.values(i, 0) > 0.5 ? 1 : 0);
        }
    }
    return out;
}

std::vector<FeatureImportance> rf_feature_importance(const ModelHandle& model,
                                                     const std::vector<std::string>& feature_names) {
    const auto* rf = std::get_if<RFModel>(&model.state);
    if (!rf || (model.kind != ModelKind::rf && model.kind != ModelKind::mvrf)) {
        throw Error(ErrorCode::WrongModelKind, "feature importance needs an rf or mvrf model");
    }
    if (feature_names.size() != rf->raw_importance.size()) {
        throw Error(ErrorCode::RegistryMismatch, "feature name count differs from model");
    }
    const double total = std::accumulate(rf->raw_importance.begin(), rf->raw_importance.end(), 0.0);
    std::vector<FeatureImportance> out;
    for (std::size_t f = 0; f < feature_names.size(); ++f) {
        // A forest made only of root leaves spreads importance evenly.
        const double v = total > 0.0 ? rf->raw_importance[f] / total : 1.0 / static_cast<double>(feature_names.size());
        out.push_back({feature_names[f], v});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const FeatureImportance& a, const FeatureImportance& b) { return a.importance > b.importance; });
    return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "mwd-model";
constexpr int kFormatVersion = 1;

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}

    Writer& key(std::string_view k) {
        out_ << k;
        return *this;
    }
    Writer& num(double v) {
        out_ << ' ' << format_number(v);
        return *this;
    }
    Writer& integer(long long v) {
        out_ << ' ' << v;
        return *this;
    }
    Writer& word(std::string_view w) {
        out_ << ' ' << w;
        return *this;
    }
    void end() { out_ << '\n'; }

    void vec(std::string_view k, const std::vector<double>& v) {
        key(k).integer(static_cast<long long>(v.size()));
        for (double x : v) num(x);
        end();
    }
    void matrix(std::string_view k, const Eigen::MatrixXd& m) {
        key(k).integer(m.rows()).integer(m.cols());
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) num(m(i, j));
        }
        end();
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    std::string token() {
        std::string t;
        if (!(in_ >> t)) throw Error(ErrorCode::ModelFormat, "unexpected end of model file");
        return t;
    }
    void expect(std::string_view k) {
        const auto t = token();
        if (t != k) throw Error(ErrorCode::ModelFormat, "expected '" + std::string(k) + "', got '" + t + "'");
    }
    double num() {
        const auto t = token();
        double v = 0.0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size()) throw Error(ErrorCode::ModelFormat, "bad number '" + t + "'");
        return v;
    }
    long long integer() {
        const auto t = token();
        long long v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size()) throw Error(ErrorCode::ModelFormat, "bad integer '" + t + "'");
        return v;
    }
    std::uint64_t u64() {
        const auto t = token();
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc() || p != t.data() + t.size()) throw Error(ErrorCode::ModelFormat, "bad integer '" + t + "'");
        return v;
    }
    std::vector<double> vec(std::string_view k) {
        expect(k);
        const auto n = integer();
        std::vector<double> v(static_cast<std::size_t>(n));
        for (auto& x : v) x = num();
        return v;
    }
    Eigen::MatrixXd matrix(std::string_view k) {
        expect(k);
        const auto r = integer(), c = integer();
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index i = 0; i < r; ++i) {
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = num();
        }
        return m;
    }

private:
    std::istream& in_;
};

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

void write_rf(Writer& w, const RFModel& rf) {
    w.key("rf_params")
        .integer(rf.params.n_trees)
        .integer(rf.params.max_depth.value_or(-1))
        .integer(rf.params.min_leaf)
        .integer(rf.params.mtry.value_or(-1))
        .integer(rf.params.bootstrap ? 1 : 0)
        .word(std::to_string(rf.params.seed));
    w.end();
    w.key("rf_shape").word(rf.task == Task::regression ? "regression" : "classification")
        .integer(rf.n_features).integer(rf.n_outputs);
    w.end();
    w.vec("y_center", rf.y_center);
    w.vec("y_scale", rf.y_scale);
    w.vec("raw_importance", rf.raw_importance);
    w.key("trees").integer(static_cast<long long>(rf.trees.size()));
    w.end();
    for (const auto& t : rf.trees) {
        w.key("tree").integer(t.outputs).integer(static_cast<long long>(t.nodes.size()));
        w.end();
        for (const auto& n : t.nodes) {
            w.key("n").integer(n.feature).num(n.threshold).integer(n.left).integer(n.right).integer(n.leaf);
            w.end();
        }
        w.vec("leaves", t.leaf_values);
    }
}

RFModel read_rf(Reader& r) {
    RFModel rf;
    r.expect("rf_params");
    rf.params.n_trees = static_cast<int>(r.integer());
    if (auto d = r.integer(); d >= 0) rf.params.max_depth = static_cast<int>(d);
    rf.params.min_leaf = static_cast<int>(r.integer());
    if (auto m = r.integer(); m >= 0) rf.params.mtry = static_cast<int>(m);
    rf.params.bootstrap = r.integer() != 0;
    rf.params.seed = r.u64();
    r.expect("rf_shape");
    rf.task = r.token() == "regression" ? Task::regression : Task::classification;
    rf.n_features = static_cast<int>(r.integer());
    rf.n_outputs = static_cast<int>(r.integer());
    rf.y_center = r.vec("y_center");
    rf.y_scale = r.vec("y_scale");
    rf.raw_importance = r.vec("raw_importance");
    r.expect("trees");
    const auto n_trees = r.integer();
    for (long long t = 0; t < n_trees; ++t) {
        DecisionTree tree;
        r.expect("tree");
        tree.outputs = static_cast<int>(r.integer());
        const auto n_nodes = r.integer();
        for (long long k = 0; k < n_nodes; ++k) {
            r.expect("n");
            DecisionTree::Node n;
            n.feature = static_cast<int>(r.integer());
            n.threshold = r.num();
            n.left = static_cast<int>(r.integer());
            n.right = static_cast<int>(r.integer());
            n.leaf = static_cast<int>(r.integer());
            tree.nodes.push_back(n);
        }
        tree.leaf_values = r.vec("leaves");
        rf.trees.push_back(std::move(tree));
    }
    return rf;
}

}  // namespace

void save_model(std::ostream& out, const ModelHandle& model) {
    Writer w(out);
    w.key(kMagic).integer(kFormatVersion);
    w.end();
    w.key("kind").word(to_string(model.kind));
    w.end();
    w.key("task").word(model.task == Task::regression ? "regression" : "classification");
    w.end();
    std::ostringstream hash;
    hash << std::hex << model.registry_hash;
    w.key("registry_hash").word(hash.str());
    w.end();
    w.key("seed").word(std::to_string(model.seed));
    w.end();
    w.key("shape").integer(model.n_features).integer(model.n_outputs);
    w.end();
    w.key("standardizer").integer(model.standardizer ? 1 : 0);
    w.end();
    if (model.standardizer) {
        w.vec("center", model.standardizer->center);
        w.vec("scale", model.standardizer->scale);
    }

    if (const auto* rf = std::get_if<RFModel>(&model.state)) {
        write_rf(w, *rf);
    } else if (const auto* gps = std::get_if<std::vector<GPModel>>(&model.state)) {
        w.key("gp_outputs").integer(static_cast<long long>(gps->size()));
        w.end();
        for (const auto& gp : *gps) {
            w.key("gp_params").num(gp.params.lengthscale).num(gp.params.signal_variance).num(gp.params.noise_variance)
                .num(gp.y_mean).num(gp.jitter).num(gp.log_marginal_likelihood);
            w.end();
            w.matrix("X", gp.X);
            w.vec("alpha", to_std(gp.alpha));
            w.matrix("L", gp.chol_L);
        }
    } else if (const auto* svm = std::get_if<SVMModel>(&model.state)) {
        w.key("svm_params").num(svm->params.C).num(svm->params.rbf_gamma).num(svm->params.tolerance)
            .integer(svm->params.max_passes).num(svm->bias).integer(svm->converged ? 1 : 0).integer(svm->iterations);
        w.end();
        w.matrix("support", svm->support);
        w.vec("coef", svm->coef);
    } else if (const auto* mean = std::get_if<MeanModel>(&model.state)) {
        w.vec("means", mean->means);
    }
    w.key("end");
    w.end();
}

ModelHandle load_model(std::istream& in) {
    Reader r(in);
    r.expect(kMagic);
    if (r.integer() != kFormatVersion) throw Error(ErrorCode::ModelFormat, "unsupported model format version");
    ModelHandle h;
    r.expect("kind");
    const auto kind = parse_model_kind(r.token());
    if (!kind) throw Error(ErrorCode::ModelFormat, "unknown model kind");
    h.kind = *kind;
    r.expect("task");
    h.task = r.token() == "regression" ? Task::regression : Task::classification;
    r.expect("registry_hash");
    {
        const auto t = r.token();
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), h.registry_hash, 16);
        if (ec != std::errc() || p != t.data() + t.size()) throw Error(ErrorCode::ModelFormat, "bad registry hash");
    }
    r.expect("seed");
    h.seed = r.u64();
    r.expect("shape");
    h.n_features = static_cast<int>(r.integer());
    h.n_outputs = static_cast<int>(r.integer());
    r.expect("standardizer");
    if (r.integer() != 0) {
        Standardizer s;
        s.center = r.vec("center");
        s.scale = r.vec("scale");
        h.standardizer = std::move(s);
    }
    switch (h.kind) {
        case ModelKind::rf:
        case ModelKind::mvrf:
            h.state = read_rf(r);
            break;
        case ModelKind::gp: {
            r.expect("gp_outputs");
            const auto q = r.integer();
            std::vector<GPModel> gps;
            for (long long o = 0; o < q; ++o) {
                GPModel gp;
                r.expect("gp_params");
                gp.params.lengthscale = r.num();
                gp.params.signal_variance = r.num();
                gp.params.noise_variance = r.num();
                gp.y_mean = r.num();
                gp.jitter = r.num();
                gp.log_marginal_likelihood = r.num();
                gp.X = r.matrix("X");
                gp.alpha = to_vector(r.vec("alpha"));
                gp.chol_L = r.matrix("L");
                gps.push_back(std::move(gp));
            }
            h.state = std::move(gps);
            break;
        }
        case ModelKind::svm: {
            SVMModel svm;
            r.expect("svm_params");
            svm.params.C = r.num();
            svm.params.rbf_gamma = r.num();
            svm.params.tolerance = r.num();
            svm.params.max_passes = static_cast<int>(r.integer());
            svm.bias = r.num();
            svm.converged = r.integer() != 0;
            svm.iterations = r.integer();
            svm.support = r.matrix("support");
            svm.coef = r.vec("coef");
            h.state = std::move(svm);
            break;
        }
        case ModelKind::mean: {
            MeanModel m;
            m.means = r.vec("means");
            h.state = std::move(m);
            break;
        }
    }
    r.expect("end");
    return h;
}

}  // namespace mwd
