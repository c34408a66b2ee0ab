#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mwd/datamodel.hpp"

namespace mwd {

/// Sample Pearson correlation. Throws ConstantInput when either side is constant.
double pearson_r(std::span<const double> a, std::span<const double> b);

/// Two-sided p-value of r under the t distribution with n-2 degrees of
/// freedom. Returns 0 for |r| == 1. Throws TooFewPoints when n < 3.
double pearson_p(double r, std::size_t n);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares of b on a. Throws ConstantInput when a is constant.
LinearFit linear_fit(std::span<const double> a, std::span<const double> b);

double rmse(std::span<const double> a, std::span<const double> b);

/// Sample (n-1) standard deviation.
double sample_sd(std::span<const double> x);

struct BlandAltmanPoint {
    double mean = 0.0;        // (lab + pred) / 2
    double difference = 0.0;  // lab - pred
};

/// Agreement between laboratory values (reference) and model predictions.
/// Quantities that are undefined for the data (r on a constant vector, the
/// fit on a constant lab vector) are NaN with the matching flag cleared.
struct AgreementStats {
    double slope = 0.0;  // pred = slope * lab + intercept
    double intercept = 0.0;
    double r = 0.0;
    double rmse = 0.0;
    double p = 0.0;
    std::size_t n = 0;
    double rpc = 0.0;         // 1.96 * SD(lab - pred)
    double cv_percent = 0.0;  // SD(lab - pred) / mean of pair averages * 100
    double bias = 0.0;        // mean(lab - pred)
    double sd_difference = 0.0;
    bool r_defined = true;
    bool fit_defined = true;
    std::vector<BlandAltmanPoint> ba_pairs;
};

AgreementStats bland_altman(std::span<const double> lab, std::span<const double> pred);

struct QQPoint {
    double reference = 0.0;
    double sample = 0.0;
};

/// Sorted, standardised sample against standard-normal quantiles at (i-0.5)/n.
std::vector<QQPoint> qq_normal(std::span<const double> sample);

/// Empirical quantiles of both samples at (i-0.5)/m, m = min(sizes), with
/// linear interpolation between order statistics.
std::vector<QQPoint> qq_two_sample(std::span<const double> sample, std::span<const double> reference);

/// Empirical quantile at probability p using position n*p - 0.5 (clamped).
double empirical_quantile(std::span<const double> sorted, double p);

/// Standard-normal inverse CDF.
double normal_quantile(double p);

struct ConfusionMatrix2 {
    std::size_t tn = 0, fp = 0, fn = 0, tp = 0;
    double accuracy = 0.0;

    std::size_t total() const noexcept { return tn + fp + fn + tp; }
};

/// Labels are 0 (absent) / 1 (present).
ConfusionMatrix2 confusion(std::span<const int> predicted, std::span<const int> truth);

enum class FeGrade { waste, med, high };

std::string_view to_string(FeGrade g) noexcept;

/// waste < 50 <= med < 60 <= high (mass %).
FeGrade fe_grade_class(double fe) noexcept;

/// Present iff the logged percentage is strictly above threshold_percent.
/// Throws CodeMissing when the hole has no entry for code.
bool materialize_presence(const LabelRecord& labels, std::string_view code, double threshold_percent);

}  // namespace mwd
