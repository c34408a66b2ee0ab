#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mwd/gaussian_process.hpp"
#include "mwd/random_forest.hpp"
#include "mwd/svm.hpp"

namespace mwd {

enum class ModelKind {
    rf,
    mvrf,
    gp,
    svm,
    mean,  // training-mean baseline
};

std::string_view to_string(ModelKind kind) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;

/// Per-column z-scoring fitted on training rows only. Zero-variance columns
/// keep scale 1.
struct Standardizer {
    std::vector<double> center;
    std::vector<double> scale;

    static Standardizer fit(const Eigen::MatrixXd& X);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
};

struct MeanModel {
    std::vector<double> means;
};

struct ModelSpec {
    ModelKind kind = ModelKind::rf;
    Task task = Task::regression;
    RFParams rf;
    GPOptions gp;
    SVMParams svm;
};

struct ModelHandle {
    ModelKind kind = ModelKind::rf;
    Task task = Task::regression;
    std::uint64_t registry_hash = 0;
    std::uint64_t seed = 0;
    int n_features = 0;
    int n_outputs = 1;
    std::optional<Standardizer> standardizer;  // applied before gp / svm
    std::variant<RFModel, std::vector<GPModel>, SVMModel, MeanModel> state;
};

struct Prediction {
    Eigen::MatrixXd values;                   // m x q; class-1 score for classifiers
    std::optional<Eigen::MatrixXd> variance;  // GP only
    std::vector<int> classes;                 // 0/1, classification only
};

/// Trains the requested model. Regression targets are the columns of Y
/// (single column unless kind == mvrf or gp); classification targets are 0/1.
ModelHandle fit_model(const ModelSpec& spec, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      std::uint64_t registry_hash);

/// Throws RegistryMismatch when registry_hash differs from training.
Prediction predict(const ModelHandle& model, const Eigen::MatrixXd& X, std::uint64_t registry_hash);

struct FeatureImportance {
    std::string feature;
    double importance = 0.0;
};

/// Normalised (sum 1) split-criterion reduction per feature, descending,
/// ties in registry order. Throws WrongModelKind for non-forest models.
std::vector<FeatureImportance> rf_feature_importance(const ModelHandle& model,
                                                     const std::vector<std::string>& feature_names);

/// Versioned text format; doubles are written in shortest round-trip form.
void save_model(std::ostream& out, const ModelHandle& model);
ModelHandle load_model(std::istream& in);

}  // namespace mwd
