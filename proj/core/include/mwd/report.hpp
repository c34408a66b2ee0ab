#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mwd/models.hpp"
#include "mwd/stats.hpp"
#include "mwd/validation.hpp"

namespace mwd {

std::string_view tool_version() noexcept;

/// Everything needed to rerun a command. Written into every emitted file.
struct RunConfig {
    std::string command;
    std::map<std::string, std::string> inputs;  // role -> path
    std::string target;
    ModelKind model = ModelKind::rf;
    int n_trees = RFParams{}.n_trees;
    CvMode cv = CvMode::random_kfold;
    int k = kDefaultFolds;
    std::uint64_t seed = 0;
    std::optional<std::string> augment;
    std::string out_dir;
    int embed_dim = 10;
    double threshold = 0.0;

    /// One-line JSON object with sorted keys.
    std::string to_json() const;
};

/// Seven agreement annotations in display order: eq, r, RMSE, p, n, RPC, CV.
/// The report file and every plot print these strings verbatim.
std::vector<std::pair<std::string, std::string>> agreement_annotations(const AgreementStats& s);

/// Formats a statistic with four decimals; NaN prints as "NaN".
std::string format_stat(double v);

struct Histogram {
    double lo = 0.0;
    double width = 0.0;
    std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max]; a constant sample gets one unit-wide bin.
Histogram make_histogram(const std::vector<double>& x, int bins);

struct GradeGroup {
    FeGrade grade;
    std::vector<double> residuals;
};

/// Residuals grouped by the Fe grade of the laboratory value.
std::vector<GradeGroup> residuals_by_grade(const TargetResult& t);

void write_report_text(std::ostream& out, const EvaluationReport& report, std::size_t target, const RunConfig& cfg);
void write_pairs_csv(std::ostream& out, const EvaluationReport& report, std::size_t target);
void write_meta_json(std::ostream& out, const RunConfig& cfg);

void write_bland_altman_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg);
void write_residual_histogram_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg);
void write_residual_by_grade_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg);
void write_qq_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg);
void write_confusion_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg);

/// Writes every artifact for every target of the report into dir and
/// returns the paths in creation order. Throws IoFailure.
std::vector<std::filesystem::path> write_evaluation_artifacts(const EvaluationReport& report, const RunConfig& cfg,
                                                              const std::filesystem::path& dir);

void write_importance_csv(std::ostream& out, const std::vector<FeatureImportance>& ranked);
void write_importance_text(std::ostream& out, const std::vector<FeatureImportance>& ranked, const RunConfig& cfg,
                           std::size_t top = 10);

}  // namespace mwd
