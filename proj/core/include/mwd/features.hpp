#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mwd/datamodel.hpp"

namespace mwd {

// ---------------------------------------------------------------------------
// Per-signal extractors. All are pure functions of their input samples.
// ---------------------------------------------------------------------------

struct HjorthTriple {
    double activity = 0.0;
    double mobility = 0.0;
    double complexity = 0.0;
};

/// Hjorth descriptors from the zeroth, second and fourth spectral moments,
/// evaluated in the time domain through first and second differences.
///
/// activity = sum x^2, m2 = sum (dx)^2 / N, m4 = sum (d2x)^2 / N with N the
/// original sample count. Mobility and complexity evaluate to 0 whenever their
/// denominator moment is 0. Requires N >= 3.
HjorthTriple hjorth(std::span<const double> x);

/// Sum of absolute first differences. Requires N >= 2.
double waveform_length(std::span<const double> x);

/// Simple square integral, sum of |x|^2.
double ssi(std::span<const double> x);

/// Peak magnitude over RMS. Throws ZeroSignal when RMS is 0.
double crest_factor(std::span<const double> x);

enum class PositivityOffset {
    none,   // non-positive samples are an error
    shift,  // shift by (-min + eps * range) when min <= 0
};

inline constexpr double kPositivityEpsilon = 1e-9;

/// Returns x unchanged when all samples are positive, otherwise x - min + eps * range
/// (eps absolute when the range is 0).
std::vector<double> positive_offset(std::span<const double> x);

/// Geometric over arithmetic mean, computed through the log form. In (0, 1].
double flatness(std::span<const double> x, PositivityOffset offset = PositivityOffset::shift);

inline constexpr int kDefaultEmbedDim = 10;

/// Shannon entropy of the normalised singular values of the delay-embedding
/// matrix (embed_dim columns, delay 1). Range [0, ln(embed_dim)].
double svd_entropy(std::span<const double> x, int embed_dim = kDefaultEmbedDim);

/// Singular values of the delay-embedding matrix in descending order.
std::vector<double> trajectory_singular_values(std::span<const double> x, int embed_dim);

struct DescriptiveStats {
    double max = 0.0;
    double std_dev = 0.0;   // sample (n-1) standard deviation
    double skewness = 0.0;  // m3 / m2^1.5, 0 for a constant signal
    double kurtosis = 0.0;  // m4 / m2^2, not excess-adjusted, 0 for a constant signal
    double mean = 0.0;
    double geometric_mean = 0.0;
    double median = 0.0;
};

DescriptiveStats descriptive_stats(std::span<const double> x,
                                   PositivityOffset offset = PositivityOffset::shift);

inline constexpr double kLogEpsilon = 1e-12;

struct PRIndicators {
    double sad = 0.0;           // sum |dPR|
    double log_spr2 = 0.0;      // ln(sum PR^2 + eps)
    double sdpr2 = 0.0;         // sum (dPR)^2
    double sddpr2 = 0.0;        // sum (d2PR)^2
    double log_ratio1 = 0.0;    // ln(SDPR2 / SPR2 + eps)
    double log_ratio2 = 0.0;    // ln(SDDPR2 / SDPR2 + eps)
    double maxpr_maxfob = 0.0;  // max(PR) * max(fob)
    double spr2 = 0.0;          // raw sum PR^2, exported only on request
};

/// Indicators of the rotation-to-feed pressure ratio. Feed pressure is
/// floored at kLogEpsilon before dividing. Requires equal lengths, N >= 3.
PRIndicators pressure_ratio_features(std::span<const double> rotation_pressure,
                                     std::span<const double> feed_pressure,
                                     std::span<const double> fob);

/// PR ratio sequence with the feed-pressure floor applied.
std::vector<double> pressure_ratio(std::span<const double> rotation_pressure,
                                   std::span<const double> feed_pressure);

// ---------------------------------------------------------------------------
// Registry and assembly
// ---------------------------------------------------------------------------

/// Per-signal feature columns in registry order.
enum class SignalFeature {
    hjorth_activity,
    hjorth_mobility,
    hjorth_complexity,
    wl,
    ssi,
    cf,
    flatness,
    svden,
    max,
    std,
    skewness,
    kurtosis,
    mean,
    geomean,
    median,
};

inline constexpr std::size_t kSignalFeatureCount = 15;
inline constexpr std::size_t kPressureRatioFeatureCount = 7;
inline constexpr std::string_view kPressureRatioName = "pressureRatio";

std::string_view feature_name(SignalFeature f) noexcept;

struct FeatureConfig {
    std::vector<Signal> signals{kAllSignals.begin(), kAllSignals.end()};
    int embed_dim = kDefaultEmbedDim;
    PositivityOffset offset = PositivityOffset::shift;
    bool pressure_ratio = true;
    bool emit_raw_spr2 = false;
};

struct FeatureKey {
    std::string signal;
    std::string feature;

    std::string column_name() const { return signal + "__" + feature; }
    bool operator==(const FeatureKey&) const = default;
};

/// Ordered column registry plus the conventions used to produce it.
class FeatureRegistry {
public:
    FeatureRegistry() = default;
    explicit FeatureRegistry(std::vector<FeatureKey> keys,
                             std::map<std::string, std::string> metadata = {});

    static FeatureRegistry from_config(const FeatureConfig& config);

    std::size_t size() const noexcept { return keys_.size(); }
    const std::vector<FeatureKey>& keys() const noexcept { return keys_; }
    std::vector<std::string> column_names() const;
    const std::map<std::string, std::string>& metadata() const noexcept { return metadata_; }

    /// FNV-1a digest of the ordered column names; stable across platforms.
    std::uint64_t hash() const noexcept;

    FeatureRegistry without(const std::vector<std::size_t>& columns) const;

private:
    std::vector<FeatureKey> keys_;
    std::map<std::string, std::string> metadata_;
};

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) noexcept;

/// Per-hole feature values. Extractors that fail on this hole leave NaN in
/// their column; build_feature_matrix drops such columns dataset-wide.
struct FeatureVector {
    std::vector<double> values;
    std::shared_ptr<const FeatureRegistry> registry;
};

/// Throws TooShort when the hole has fewer than 3 samples.
FeatureVector extract_hole_features(const HoleSignalSet& hole, const FeatureConfig& config);
FeatureVector extract_hole_features(const HoleSignalSet& hole, const FeatureConfig& config,
                                    std::shared_ptr<const FeatureRegistry> registry);

/// Rectangular per-hole feature table.
struct FeatureMatrix {
    std::vector<std::string> hole_ids;
    FeatureRegistry registry;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> dropped_columns;

    std::size_t rows_count() const noexcept { return rows.size(); }
    std::size_t cols_count() const noexcept { return registry.size(); }
    /// Row index of hole_id or -1.
    std::ptrdiff_t find(std::string_view hole_id) const noexcept;
};

FeatureMatrix build_feature_matrix(const std::vector<HoleSignalSet>& holes, const FeatureConfig& config);

void write_feature_csv(std::ostream& out, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(std::istream& in);

}  // namespace mwd
