#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mwd/datamodel.hpp"
#include "mwd/validation.hpp"

namespace mwd {

/// Composition of one material in a hole: mean + spread * z, where z is a
/// per-hole standard-normal grade factor shared by every assay and material.
/// A negative spread anti-correlates the assay with the grade factor.
struct AssaySignature {
    double mean = 0.0;
    double spread = 0.0;
};

struct MaterialSpec {
    std::string code;
    double hardness = 1.0;  // dimensionless, [0.5, 3]
    std::map<std::string, AssaySignature> assays;

    void validate() const;
};

/// Default eight-material palette. Parameter values are arbitrary but chosen
/// so that Fe anti-correlates with SiO2 and Al2O3 across materials.
std::vector<MaterialSpec> default_material_palette();

/// Explicit layering of one blast: boundaries (m, sorted, inside the hole)
/// separate layers; materials index the palette, one per layer.
struct BlastLayers {
    std::vector<double> boundaries;
    std::vector<int> materials;
};

struct SiteSpec {
    int n_regions = 2;
    int n_blasts = 20;  // per region
    int holes_per_blast = 50;
    double hole_depth = 12.0;
    double depth_step = kDefaultDepthStep;
    std::vector<MaterialSpec> materials = default_material_palette();
    std::vector<BlastLayers> layers;  // optional; region templates when empty
    int min_layers = 3;               // layer count range of a region template
    int max_layers = 4;
    double blast_boundary_sd = 1.0; // per-blast displacement of the region template, m
    double boundary_jitter = 2.0;   // per-hole boundary displacement SD, m
    double signal_noise = 0.1;      // per-sample noise SD in hardness units
    double blast_bias = 0.3;        // per-blast, per-channel offset SD in hardness units
    double label_noise = 0.02;      // relative SD of assay observation noise
    double chemistry_coverage = 0.25;
    double material_coverage = 1.0 / 6.0;
    std::uint64_t seed = 1;

    int total_blasts() const noexcept { return n_regions * n_blasts; }
    int total_holes() const noexcept { return total_blasts() * holes_per_blast; }
    std::size_t samples_per_hole() const noexcept;
    void validate() const;
};

SiteSpec parse_site_spec(std::istream& in);
void write_site_spec(std::ostream& out, const SiteSpec& spec);

struct HoleTruth {
    HoleSignalSet signals;                   // noise- and bias-free channels
    std::map<std::string, double> assays;    // before observation noise
    std::map<std::string, double> shares;    // material depth share, percent
    double grade_factor = 0.0;
};

struct GroundTruth {
    std::uint64_t seed = 0;
    std::vector<HoleTruth> holes;

    const HoleTruth* find(std::string_view hole_id) const noexcept;
};

struct SyntheticSite {
    Dataset dataset;                  // every hole; labels where covered
    std::vector<HoleSignalSet> holes; // same holes, for feature extraction
    std::vector<LabelRecord> labels;  // covered holes only
    GroundTruth truth;
};

SyntheticSite generate_site(const SiteSpec& spec);

/// Writes truth signals in the MWD CSV schema.
void write_truth_csv(std::ostream& out, const GroundTruth& truth);

struct TruthDiagnostics {
    std::string target;
    std::size_t n = 0;
    double r_vs_labels = 0.0;
    double rmse_vs_labels = 0.0;
    double r_vs_truth = 0.0;
    double rmse_vs_truth = 0.0;
};

/// Compares pooled predictions of an assay report with noisy labels and with
/// noiseless truth. Throws MismatchedProvenance when holes or the target are
/// unknown to the truth record.
std::vector<TruthDiagnostics> truth_check(const EvaluationReport& report, const GroundTruth& truth);

}  // namespace mwd
