#include "mwd/features.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cfloat>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "csv.hpp"
#include "mwd/error.hpp"

namespace mwd {

namespace {

void require_length(std::span<const double> x, std::size_t n, const char* what) {
    if (x.size() < n) {
        throw Error(ErrorCode::TooShort, std::string(what) + " needs at least " + std::to_string(n) +
                                             " samples, got " + std::to_string(x.size()));
    }
}

double safe_sqrt_ratio(double num, double den) {
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

std::vector<double> offset_or_check(std::span<const double> x, PositivityOffset offset, const char* what) {
    if (offset == PositivityOffset::shift) return positive_offset(x);
    for (double v : x) {
        if (!(v > 0.0)) throw Error(ErrorCode::NonPositiveSample, what);
    }
    return {x.begin(), x.end()};
}

double mean_log(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += std::log(v);
    return acc / static_cast<double>(x.size());
}

}  // namespace

HjorthTriple hjorth(std::span<const double> x) {
    require_length(x, 3, "hjorth");
    const double n = static_cast<double>(x.size());
    double m0 = 0.0;
    for (double v : x) m0 += v * v;
    double d1 = 0.0;
    for (std::size_t j = 0; j + 1 < x.size(); ++j) {
        const double d = x[j + 1] - x[j];
        d1 += d * d;
    }
    double d2 = 0.0;
    for (std::size_t j = 0; j + 2 < x.size(); ++j) {
        const double d = x[j + 2] - 2.0 * x[j + 1] + x[j];
        d2 += d * d;
    }
    const double m2 = d1 / n;
    const double m4 = d2 / n;

    HjorthTriple h;
    h.activity = m0;
    h.mobility = safe_sqrt_ratio(m2, m0);
    h.complexity = h.mobility > 0.0 ? safe_sqrt_ratio(m4, m2) / h.mobility : 0.0;
    return h;
}

double waveform_length(std::span<const double> x) {
    require_length(x, 2, "waveform_length");
    double wl = 0.0;
    for (std::size_t j = 0; j + 1 < x.size(); ++j) wl += std::abs(x[j + 1] - x[j]);
    return wl;
}

double ssi(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double crest_factor(std::span<const double> x) {
    require_length(x, 1, "crest_factor");
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    const double rms = std::sqrt(ssi(x) / static_cast<double>(x.size()));
    if (!(rms > 0.0)) throw Error(ErrorCode::ZeroSignal, "crest_factor of an all-zero signal");
    // Guard the |x| constant case against last-bit rounding below 1.
    return std::max(1.0, peak / rms);
}

std::vector<double> positive_offset(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    if (out.empty()) return out;
    const auto [lo, hi] = std::minmax_element(out.begin(), out.end());
    const double min = *lo;
    if (min > 0.0) return out;
    const double range = *hi - *lo;
    const double eps = range > 0.0 ? kPositivityEpsilon * range : kPositivityEpsilon;
    for (double& v : out) v = v - min + eps;
    return out;
}

double flatness(std::span<const double> x, PositivityOffset offset) {
    require_length(x, 1, "flatness");
    const auto y = offset_or_check(x, offset, "flatness");
    const double arith = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    const double geo = std::exp(mean_log(y));
    return std::min(1.0, geo / arith);
}

std::vector<double> trajectory_singular_values(std::span<const double> x, int embed_dim) {
    if (embed_dim < 2) throw Error(ErrorCode::InvalidParams, "embed_dim must be >= 2");
    require_length(x, 2 * static_cast<std::size_t>(embed_dim), "svd_entropy");
    const auto rows = static_cast<Eigen::Index>(x.size()) - embed_dim + 1;
    Eigen::MatrixXd traj(rows, embed_dim);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (int c = 0; c < embed_dim; ++c) traj(i, c) = x[static_cast<std::size_t>(i + c)];
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(traj);
    const auto& sv = svd.singularValues();
    std::vector<double> out(sv.data(), sv.data() + sv.size());
    // Values at rounding level of the largest one are numerically zero.
    const double cutoff = out.empty() ? 0.0 : out.front() * static_cast<double>(rows) * DBL_EPSILON;
    for (double& v : out) {
        if (v <= cutoff) v = 0.0;
    }
    return out;
}

double svd_entropy(std::span<const double> x, int embed_dim) {
    const auto sv = trajectory_singular_values(x, embed_dim);
    const double total = std::accumulate(sv.begin(), sv.end(), 0.0);
    if (!(total > 0.0)) throw Error(ErrorCode::DegenerateMatrix, "all singular values are zero");
    double h = 0.0;
    for (double v : sv) {
        if (v <= 0.0) continue;
        const double p = v / total;
        h -= p * std::log(p);
    }
    return std::max(0.0, h);
}

DescriptiveStats descriptive_stats(std::span<const double> x, PositivityOffset offset) {
    require_length(x, 2, "descriptive_stats");
    const double n = static_cast<double>(x.size());
    DescriptiveStats s;
    s.max = *std::max_element(x.begin(), x.end());
    s.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;

    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    s.std_dev = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
    }

    s.geometric_mean = std::exp(mean_log(offset_or_check(x, offset, "geometric mean")));

    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
    return s;
}

std::vector<double> pressure_ratio(std::span<const double> rotation_pressure,
                                   std::span<const double> feed_pressure) {
    if (rotation_pressure.size() != feed_pressure.size()) {
        throw Error(ErrorCode::LengthMismatch, "rotationPressure vs feedPressure");
    }
    std::vector<double> pr(rotation_pressure.size());
    for (std::size_t j = 0; j < pr.size(); ++j) {
        pr[j] = rotation_pressure[j] / std::max(feed_pressure[j], kLogEpsilon);
    }
    return pr;
}

PRIndicators pressure_ratio_features(std::span<const double> rotation_pressure,
                                     std::span<const double> feed_pressure,
                                     std::span<const double> fob) {
    if (fob.size() != rotation_pressure.size()) throw Error(ErrorCode::LengthMismatch, "fob");
    require_length(rotation_pressure, 3, "pressure_ratio_features");
    const auto pr = pressure_ratio(rotation_pressure, feed_pressure);

    PRIndicators out;
    out.sad = waveform_length(pr);
    out.spr2 = ssi(pr);
    for (std::size_t j = 0; j + 1 < pr.size(); ++j) {
        const double d = pr[j + 1] - pr[j];
        out.sdpr2 += d * d;
    }
    for (std::size_t j = 0; j + 2 < pr.size(); ++j) {
        const double d = pr[j + 2] - 2.0 * pr[j + 1] + pr[j];
        out.sddpr2 += d * d;
    }
    out.log_spr2 = std::log(out.spr2 + kLogEpsilon);
    out.log_ratio1 = out.spr2 > 0.0 ? std::log(out.sdpr2 / out.spr2 + kLogEpsilon) : std::log(kLogEpsilon);
    out.log_ratio2 = out.sdpr2 > 0.0 ? std::log(out.sddpr2 / out.sdpr2 + kLogEpsilon) : std::log(kLogEpsilon);
    out.maxpr_maxfob = *std::max_element(pr.begin(), pr.end()) * *std::max_element(fob.begin(), fob.end());
    return out;
}

// ---------------------------------------------------------------------------

std::string_view feature_name(SignalFeature f) noexcept {
    switch (f) {
        case SignalFeature::hjorth_activity: return "hjorth_activity";
        case SignalFeature::hjorth_mobility: return "hjorth_mobility";
        case SignalFeature::hjorth_complexity: return "hjorth_complexity";
        case SignalFeature::wl: return "wl";
        case SignalFeature::ssi: return "ssi";
        case SignalFeature::cf: return "cf";
        case SignalFeature::flatness: return "flatness";
        case SignalFeature::svden: return "svden";
        case SignalFeature::max: return "max";
        case SignalFeature::std: return "std";
        case SignalFeature::skewness: return "skewness";
        case SignalFeature::kurtosis: return "kurtosis";
        case SignalFeature::mean: return "mean";
        case SignalFeature::geomean: return "geomean";
        case SignalFeature::median: return "median";
    }
    return "?";
}

namespace {

constexpr std::array<std::string_view, kPressureRatioFeatureCount> kPrNames = {
    "sad", "log_spr2", "sdpr2", "sddpr2", "log_ratio1", "log_ratio2", "maxpr_maxfob",
};

std::vector<Signal> canonical_signals(const FeatureConfig& config) {
    std::vector<Signal> sigs = config.signals;
    std::sort(sigs.begin(), sigs.end());
    sigs.erase(std::unique(sigs.begin(), sigs.end()), sigs.end());
    return sigs;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) noexcept {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

FeatureRegistry::FeatureRegistry(std::vector<FeatureKey> keys, std::map<std::string, std::string> metadata)
    : keys_(std::move(keys)), metadata_(std::move(metadata)) {}

FeatureRegistry FeatureRegistry::from_config(const FeatureConfig& config) {
    std::vector<FeatureKey> keys;
    for (Signal s : canonical_signals(config)) {
        for (std::size_t f = 0; f < kSignalFeatureCount; ++f) {
            keys.push_back({std::string(signal_name(s)),
                            std::string(feature_name(static_cast<SignalFeature>(f)))});
        }
    }
    if (config.pressure_ratio) {
        for (auto name : kPrNames) keys.push_back({std::string(kPressureRatioName), std::string(name)});
        if (config.emit_raw_spr2) keys.push_back({std::string(kPressureRatioName), "spr2"});
    }
    std::map<std::string, std::string> meta{
        {"embed_dim", std::to_string(config.embed_dim)},
        {"svd_matrix", "delay embedding, delay 1"},
        {"log_epsilon", format_number(kLogEpsilon)},
        {"hjorth_divisor", "N (original sample count)"},
        {"positivity_offset", config.offset == PositivityOffset::shift
                                  ? "shift by -min + 1e-9*range when min <= 0"
                                  : "none"},
        {"std_dev", "sample (n-1)"},
        {"kurtosis", "m4/m2^2 (not excess)"},
    };
    return FeatureRegistry(std::move(keys), std::move(meta));
}

std::vector<std::string> FeatureRegistry::column_names() const {
    std::vector<std::string> out;
    out.reserve(keys_.size());
    for (const auto& k : keys_) out.push_back(k.column_name());
    return out;
}

std::uint64_t FeatureRegistry::hash() const noexcept {
    std::uint64_t h = fnv1a64("mwd-feature-registry");
    for (const auto& k : keys_) {
        h = fnv1a64(k.column_name(), h);
        h = fnv1a64(std::string_view("\n", 1), h);
    }
    return h;
}

FeatureRegistry FeatureRegistry::without(const std::vector<std::size_t>& columns) const {
    std::vector<FeatureKey> keys;
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (std::find(columns.begin(), columns.end(), i) == columns.end()) keys.push_back(keys_[i]);
    }
    return FeatureRegistry(std::move(keys), metadata_);
}

FeatureVector extract_hole_features(const HoleSignalSet& hole, const FeatureConfig& config) {
    return extract_hole_features(hole, config,
                                 std::make_shared<const FeatureRegistry>(FeatureRegistry::from_config(config)));
}

FeatureVector extract_hole_features(const HoleSignalSet& hole, const FeatureConfig& config,
                                    std::shared_ptr<const FeatureRegistry> registry) {
    if (hole.sample_count() < 3) {
        throw Error(ErrorCode::TooShort, "hole " + hole.hole_id + " has " +
                                             std::to_string(hole.sample_count()) + " samples");
    }
    FeatureVector fv;
    fv.registry = std::move(registry);
    fv.values.reserve(fv.registry->size());
    const double nan = std::numeric_limits<double>::quiet_NaN();

    // Runs one extractor, mapping its domain errors to the NaN sentinel.
    auto guarded = [nan](auto&& fn) -> double {
        try {
            const double v = fn();
            return std::isfinite(v) ? v : nan;
        } catch (const Error&) {
            return nan;
        }
    };

    for (Signal s : canonical_signals(config)) {
        const std::vector<double>& xs = hole.at(s);
        const std::span<const double> x(xs);
        HjorthTriple hj{nan, nan, nan};
        try {
            hj = hjorth(x);
        } catch (const Error&) {
        }
        DescriptiveStats st{nan, nan, nan, nan, nan, nan, nan};
        try {
            st = descriptive_stats(x, config.offset);
        } catch (const Error&) {
        }
        fv.values.push_back(hj.activity);
        fv.values.push_back(hj.mobility);
        fv.values.push_back(hj.complexity);
        fv.values.push_back(guarded([&] { return waveform_length(x); }));
        fv.values.push_back(guarded([&] { return ssi(x); }));
        fv.values.push_back(guarded([&] { return crest_factor(x); }));
        fv.values.push_back(guarded([&] { return flatness(x, config.offset); }));
        fv.values.push_back(guarded([&] { return svd_entropy(x, config.embed_dim); }));
        for (double v : {st.max, st.std_dev, st.skewness, st.kurtosis, st.mean, st.geometric_mean, st.median}) {
            fv.values.push_back(std::isfinite(v) ? v : nan);
        }
    }

    if (config.pressure_ratio) {
        PRIndicators pr;
        bool ok = true;
        try {
            pr = pressure_ratio_features(hole.at(Signal::rotationPressure), hole.at(Signal::feedPressure),
                                         hole.at(Signal::fob));
        } catch (const Error&) {
            ok = false;
        }
        for (double v : {pr.sad, pr.log_spr2, pr.sdpr2, pr.sddpr2, pr.log_ratio1, pr.log_ratio2,
                         pr.maxpr_maxfob}) {
            fv.values.push_back(ok && std::isfinite(v) ? v : nan);
        }
        if (config.emit_raw_spr2) fv.values.push_back(ok && std::isfinite(pr.spr2) ? pr.spr2 : nan);
    }
    return fv;
}

std::ptrdiff_t FeatureMatrix::find(std::string_view hole_id) const noexcept {
    for (std::size_t i = 0; i < hole_ids.size(); ++i) {
        if (hole_ids[i] == hole_id) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
}

FeatureMatrix build_feature_matrix(const std::vector<HoleSignalSet>& holes, const FeatureConfig& config) {
    auto registry = std::make_shared<const FeatureRegistry>(FeatureRegistry::from_config(config));
    FeatureMatrix m;
    m.rows.reserve(holes.size());
    for (const auto& h : holes) {
        m.hole_ids.push_back(h.hole_id);
        m.rows.push_back(extract_hole_features(h, config, registry).values);
    }

    std::vector<std::size_t> bad;
    for (std::size_t c = 0; c < registry->size(); ++c) {
        for (const auto& row : m.rows) {
            if (!std::isfinite(row[c])) {
                bad.push_back(c);
                break;
            }
        }
    }
    for (std::size_t c : bad) m.dropped_columns.push_back(registry->keys()[c].column_name());
    m.registry = registry->without(bad);
    if (!bad.empty()) {
        for (auto& row : m.rows) {
            std::vector<double> kept;
            kept.reserve(m.registry.size());
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (!std::binary_search(bad.begin(), bad.end(), c)) kept.push_back(row[c]);
            }
            row = std::move(kept);
        }
    }
    return m;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
    out << "hole_id";
    for (const auto& name : m.registry.column_names()) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
        out << m.hole_ids[i];
        for (double v : m.rows[i]) out << ',' << format_number(v);
        out << '\n';
    }
}

FeatureMatrix read_feature_csv(std::istream& in) {
    std::string line;
    if (!detail::read_csv_line(in, line)) throw Error(ErrorCode::MissingColumn, "empty feature file");
    const auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "hole_id") throw Error(ErrorCode::MissingColumn, "hole_id");

    std::vector<FeatureKey> keys;
    for (std::size_t c = 1; c < header.size(); ++c) {
        const auto sep = header[c].find("__");
        if (sep == std::string::npos) throw Error(ErrorCode::UnknownColumn, header[c]);
        keys.push_back({header[c].substr(0, sep), header[c].substr(sep + 2)});
    }
    FeatureMatrix m;
    m.registry = FeatureRegistry(std::move(keys));

    std::size_t line_no = 1;
    while (detail::read_csv_line(in, line)) {
        ++line_no;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::RaggedSignals, "feature line " + std::to_string(line_no));
        }
        std::vector<double> row(fields.size() - 1);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (!detail::parse_double(fields[c], row[c - 1]) || !std::isfinite(row[c - 1])) {
                throw Error(ErrorCode::NonFiniteSample, header[c] + " line " + std::to_string(line_no));
            }
        }
        m.hole_ids.push_back(fields[0]);
        m.rows.push_back(std::move(row));
    }
    return m;
}

}  // namespace mwd
