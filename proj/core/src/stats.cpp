#include "mwd/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <limits>
#include <numeric>

#include "mwd/error.hpp"

namespace mwd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require_same_length(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::LengthMismatch, std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

double mean_of(std::span<const double> x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

bool is_constant(std::span<const double> x) {
    return std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); });
}

}  // namespace

double pearson_r(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b);
    if (a.size() < 2) throw Error(ErrorCode::TooFewPoints, "pearson_r needs n >= 2");
    if (is_constant(a) || is_constant(b)) throw Error(ErrorCode::ConstantInput, "pearson_r of a constant vector");
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double pearson_p(double r, std::size_t n) {
    if (n < 3) throw Error(ErrorCode::TooFewPoints, "pearson_p needs n >= 3");
    if (!std::isfinite(r)) return kNaN;
    const double ar = std::abs(r);
    if (ar >= 1.0) return 0.0;
    const double df = static_cast<double>(n) - 2.0;
    const double t2 = r * r * df / (1.0 - r * r);
    // Two-sided tail of Student's t: I_{df/(df+t^2)}(df/2, 1/2).
    const double p = boost::math::ibeta(0.5 * df, 0.5, df / (df + t2));
    return std::clamp(p, 0.0, 1.0);
}

LinearFit linear_fit(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b);
    if (a.size() < 2) throw Error(ErrorCode::TooFewPoints, "linear_fit needs n >= 2");
    if (is_constant(a)) throw Error(ErrorCode::ConstantInput, "linear_fit with a constant regressor");
    const double ma = mean_of(a), mb = mean_of(b);
    double sab = 0.0, saa = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
    }
    LinearFit f;
    f.slope = sab / saa;
    f.intercept = mb - f.slope * ma;
    return f;
}

double rmse(std::span<const double> a, std::span<const double> b) {
    require_same_length(a, b);
    if (a.empty()) throw Error(ErrorCode::TooFewPoints, "rmse of empty input");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) throw Error(ErrorCode::TooFewPoints, "sample_sd needs n >= 2");
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

AgreementStats bland_altman(std::span<const double> lab, std::span<const double> pred) {
    require_same_length(lab, pred);
    if (lab.size() < 2) throw Error(ErrorCode::TooFewPoints, "bland_altman needs n >= 2");
    AgreementStats s;
    s.n = lab.size();

    std::vector<double> diffs(s.n), avgs(s.n);
    for (std::size_t i = 0; i < s.n; ++i) {
        avgs[i] = 0.5 * (lab[i] + pred[i]);
        diffs[i] = lab[i] - pred[i];
        s.ba_pairs.push_back({avgs[i], diffs[i]});
    }
    s.bias = mean_of(diffs);
    s.sd_difference = sample_sd(diffs);
    s.rpc = 1.96 * s.sd_difference;
    const double mean_avg = mean_of(avgs);
    s.cv_percent = mean_avg != 0.0 ? s.sd_difference / mean_avg * 100.0 : kNaN;
    s.rmse = rmse(lab, pred);

    if (is_constant(lab)) {
        s.fit_defined = false;
        s.slope = s.intercept = kNaN;
    } else {
        const LinearFit f = linear_fit(lab, pred);
        s.slope = f.slope;
        s.intercept = f.intercept;
    }
    if (is_constant(lab) || is_constant(pred)) {
        s.r_defined = false;
        s.r = kNaN;
        s.p = kNaN;
    } else {
        s.r = pearson_r(lab, pred);
        s.p = s.n >= 3 ? pearson_p(s.r, s.n) : kNaN;
    }
    return s;
}

double normal_quantile(double p) {
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double empirical_quantile(std::span<const double> sorted, double p) {
    const double n = static_cast<double>(sorted.size());
    const double h = std::clamp(n * p - 0.5, 0.0, n - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<QQPoint> qq_normal(std::span<const double> sample) {
    if (sample.size() < 3) throw Error(ErrorCode::TooShort, "qq plot needs n >= 3");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double m = mean_of(x);
    const double sd = sample_sd(x);
    if (!(sd > 0.0)) throw Error(ErrorCode::ConstantInput, "qq plot of a constant sample");
    const double n = static_cast<double>(x.size());
    std::vector<QQPoint> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.push_back({normal_quantile((static_cast<double>(i) + 0.5) / n), (x[i] - m) / sd});
    }
    return out;
}

std::vector<QQPoint> qq_two_sample(std::span<const double> sample, std::span<const double> reference) {
    if (sample.size() < 3 || reference.size() < 3) throw Error(ErrorCode::TooShort, "qq plot needs n >= 3");
    std::vector<double> a(sample.begin(), sample.end()), b(reference.begin(), reference.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t m = std::min(a.size(), b.size());
    std::vector<QQPoint> out;
    for (std::size_t i = 0; i < m; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        out.push_back({empirical_quantile(b, p), empirical_quantile(a, p)});
    }
    return out;
}

ConfusionMatrix2 confusion(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw Error(ErrorCode::LengthMismatch, "confusion inputs");
    ConfusionMatrix2 c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] != 0, t = truth[i] != 0;
        if (t && p) ++c.tp;
        else if (t) ++c.fn;
        else if (p) ++c.fp;
        else ++c.tn;
    }
    c.accuracy = truth.empty() ? kNaN : static_cast<double>(c.tn + c.tp) / static_cast<double>(truth.size());
    return c;
}

std::string_view to_string(FeGrade g) noexcept {
    switch (g) {
        case FeGrade::waste: return "waste";
        case FeGrade::med: return "med";
        case FeGrade::high: return "high";
    }
    return "?";
}

FeGrade fe_grade_class(double fe) noexcept {
    if (fe < 50.0) return FeGrade::waste;
    if (fe < 60.0) return FeGrade::med;
    return FeGrade::high;
}

bool materialize_presence(const LabelRecord& labels, std::string_view code, double threshold_percent) {
    const auto v = labels.material(code);
    if (!v) throw Error(ErrorCode::CodeMissing, std::string(code) + " not logged for hole " + labels.hole_id);
    return *v > threshold_percent;
}

}  // namespace mwd
