#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mwd {

/// The eleven logged MWD channels, in canonical feature order.
enum class Signal {
    duration,
    depth,
    rotationRPM,
    airPressure,
    feedPressure,
    torque,
    rop,
    fob,
    rotationPressure,
    apr,
    sed,
};

inline constexpr std::size_t kSignalCount = 11;

inline constexpr std::array<Signal, kSignalCount> kAllSignals = {
    Signal::duration, Signal::depth, Signal::rotationRPM, Signal::airPressure,
    Signal::feedPressure, Signal::torque, Signal::rop, Signal::fob,
    Signal::rotationPressure, Signal::apr, Signal::sed,
};

std::string_view signal_name(Signal s) noexcept;
std::optional<Signal> parse_signal_name(std::string_view name) noexcept;

inline constexpr double kDefaultDepthStep = 0.1;

/// One blast-hole's MWD record sampled on a regular depth grid.
struct HoleSignalSet {
    std::string hole_id;
    std::string blast_id;
    double collar_x = 0.0;
    double collar_y = 0.0;
    double depth_step = kDefaultDepthStep;
    double hole_depth = 0.0;
    std::map<Signal, std::vector<double>> signals;

    std::size_t sample_count() const noexcept;
    const std::vector<double>& at(Signal s) const;

    /// Throws Error(InvalidHole/NonFiniteSample/RaggedSignals) when an invariant fails.
    void validate() const;
};

inline constexpr std::array<std::string_view, 10> kAssayCodes = {
    "Al2O3", "Fe", "SiO2", "P", "S", "Mn", "MgO", "TiO2", "CaO", "LOI",
};

/// Material codes known out of the box. Callers may register more.
inline constexpr std::array<std::string_view, 8> kDefaultMaterialCodes = {
    "SHL", "BIF", "BPO", "GOL", "HGM", "HGF", "SHF", "GMO",
};

bool is_assay_code(std::string_view code) noexcept;
std::vector<std::string> default_material_codes();

/// Per-hole laboratory targets. Absent cells are absent keys, never zero.
struct LabelRecord {
    std::string hole_id;
    std::map<std::string, double> assays;     // mass %
    std::map<std::string, double> materials;  // logged %, [0, 100]

    bool has_chemistry() const noexcept { return !assays.empty(); }
    bool has_materials() const noexcept { return !materials.empty(); }
    std::optional<double> assay(std::string_view code) const;
    std::optional<double> material(std::string_view code) const;
};

struct LabeledHole {
    HoleSignalSet signals;
    std::optional<LabelRecord> labels;
};

struct Dataset {
    std::vector<LabeledHole> holes;
    std::string region_tag;

    std::size_t size() const noexcept { return holes.size(); }
    const LabeledHole* find(std::string_view hole_id) const noexcept;
};

enum class JoinMode { material, chemistry, both };

struct JoinResult {
    Dataset dataset;
    std::size_t dropped_labels = 0;  // labels whose hole_id has no MWD record
};

// Parsing and serialization. Streams are UTF-8 CSV with a header row.

std::vector<HoleSignalSet> parse_mwd_csv(std::istream& in,
                                         double depth_step = kDefaultDepthStep);
void write_mwd_csv(std::ostream& out, const std::vector<HoleSignalSet>& holes);

std::vector<LabelRecord> parse_labels_csv(std::istream& in,
                                          const std::vector<std::string>& material_codes =
                                              default_material_codes());
void write_labels_csv(std::ostream& out, const std::vector<LabelRecord>& labels,
                      const std::vector<std::string>& material_codes = default_material_codes());

JoinResult join(const std::vector<HoleSignalSet>& holes, const std::vector<LabelRecord>& labels,
                JoinMode mode, std::string region_tag = {});

/// Shortest decimal text that parses back to the identical double.
std::string format_number(double v);

}  // namespace mwd
