#include "mwd/synth.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include "json.hpp"
#include <numeric>
#include <ostream>
#include <random>

#include "mwd/error.hpp"
#include "mwd/stats.hpp"
#include "parallel.hpp"

namespace mwd {

namespace {

using json = nlohmann::json;

// Saturating response of one channel to effective hardness.
struct ChannelResponse {
    Signal signal;
    double low;
    double high;
    bool increasing;
    double center;
    double width;

    double operator()(double hardness) const {
        const double s = 1.0 / (1.0 + std::exp(-(hardness - center) / width));
        return increasing ? low + (high - low) * s : high - (high - low) * s;
    }
};

// Channels driven directly by hardness; duration and depth are derived.
const std::array<ChannelResponse, 9> kResponses = {{
    {Signal::rotationRPM, 70.0, 110.0, false, 1.6, 0.8},
    {Signal::airPressure, 260.0, 340.0, true, 1.6, 1.0},
    {Signal::feedPressure, 100.0, 112.0, true, 1.6, 1.2},  // weakly coupled
    {Signal::torque, 2.0, 8.0, true, 1.6, 0.7},
    {Signal::rop, 10.0, 60.0, false, 1.6, 0.6},
    {Signal::fob, 20.0, 60.0, true, 1.6, 0.8},
    {Signal::rotationPressure, 40.0, 140.0, true, 1.6, 0.7},
    {Signal::apr, 15.0, 70.0, false, 1.6, 0.7},
    {Signal::sed, 10.0, 120.0, true, 1.6, 0.6},
}};

// Seconds to drill one depth step at the given rate of penetration (m/h).
double step_duration(double rop, double step) { return step / rop * 3600.0; }

MaterialSpec material(std::string code, double hardness,
                      std::initializer_list<std::pair<const char*, AssaySignature>> sig) {
    MaterialSpec m;
    m.code = std::move(code);
    m.hardness = hardness;
    for (const auto& [k, v] : sig) m.assays[k] = v;
    return m;
}

std::string region_tag(int r) { return std::string(1, static_cast<char>('A' + r % 26)) + (r >= 26 ? std::to_string(r / 26) : ""); }

std::string two_digits(int v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

void MaterialSpec::validate() const {
    if (code.empty()) throw Error(ErrorCode::InvalidSpec, "material without code");
    if (!(hardness > 0.0)) throw Error(ErrorCode::InvalidSpec, "hardness must be > 0 for " + code);
    double major = 0.0;
    for (const auto& [assay, s] : assays) {
        if (!is_assay_code(assay)) throw Error(ErrorCode::InvalidSpec, "unknown assay " + assay + " in " + code);
        if (!(s.mean >= 0.0)) throw Error(ErrorCode::InvalidSpec, "negative signature mean in " + code);
        if (assay == "Fe" || assay == "SiO2" || assay == "Al2O3") major += s.mean;
    }
    if (major > 100.0) throw Error(ErrorCode::InvalidSpec, "Fe+SiO2+Al2O3 exceed 100% in " + code);
}

std::vector<MaterialSpec> default_material_palette() {
    // code, hardness, {assay, {mean, spread}}
    return {
        material("SHL", 0.6, {{"Fe", {25.0, 1.0}}, {"SiO2", {38.0, -1.0}}, {"Al2O3", {18.0, -1.0}}, {"P", {0.05, 0.01}},
                              {"S", {0.05, 0.005}}, {"Mn", {0.10, 0.02}}, {"MgO", {0.6, -0.05}}, {"TiO2", {0.9, -0.05}},
                              {"CaO", {0.08, -0.01}}, {"LOI", {8.0, -0.5}}}),
        material("BIF", 2.8, {{"Fe", {40.0, 1.0}}, {"SiO2", {38.0, -1.25}}, {"Al2O3", {1.5, -0.2}}, {"P", {0.06, 0.01}},
                              {"S", {0.02, 0.004}}, {"Mn", {0.05, 0.01}}, {"MgO", {0.15, -0.02}}, {"TiO2", {0.05, -0.01}},
                              {"CaO", {0.05, -0.01}}, {"LOI", {2.0, -0.3}}}),
        material("BPO", 1.4, {{"Fe", {48.0, 1.0}}, {"SiO2", {26.0, -1.25}}, {"Al2O3", {2.5, -0.4}}, {"P", {0.07, 0.01}},
                              {"S", {0.03, 0.004}}, {"Mn", {0.06, 0.01}}, {"MgO", {0.12, -0.02}}, {"TiO2", {0.08, -0.01}},
                              {"CaO", {0.05, -0.01}}, {"LOI", {4.0, -0.4}}}),
        material("GOL", 0.9, {{"Fe", {55.0, 1.0}}, {"SiO2", {6.0, -0.6}}, {"Al2O3", {3.5, -0.75}}, {"P", {0.15, 0.02}},
                              {"S", {0.04, 0.005}}, {"Mn", {0.20, 0.03}}, {"MgO", {0.08, -0.01}}, {"TiO2", {0.12, -0.02}},
                              {"CaO", {0.04, -0.005}}, {"LOI", {11.0, -0.8}}}),
        material("HGM", 2.2, {{"Fe", {62.0, 1.0}}, {"SiO2", {3.5, -0.5}}, {"Al2O3", {1.5, -0.5}}, {"P", {0.10, 0.02}},
                              {"S", {0.02, 0.004}}, {"Mn", {0.10, 0.02}}, {"MgO", {0.06, -0.01}}, {"TiO2", {0.06, -0.01}},
                              {"CaO", {0.03, -0.005}}, {"LOI", {4.0, -0.4}}}),
        material("HGF", 1.7, {{"Fe", {60.0, 1.0}}, {"SiO2", {4.0, -0.5}}, {"Al2O3", {2.0, -0.6}}, {"P", {0.12, 0.02}},
                              {"S", {0.03, 0.004}}, {"Mn", {0.12, 0.02}}, {"MgO", {0.07, -0.01}}, {"TiO2", {0.08, -0.01}},
                              {"CaO", {0.03, -0.005}}, {"LOI", {5.0, -0.5}}}),
        material("SHF", 1.1, {{"Fe", {44.0, 1.0}}, {"SiO2", {18.0, -0.75}}, {"Al2O3", {10.0, -1.0}}, {"P", {0.08, 0.01}},
                              {"S", {0.04, 0.005}}, {"Mn", {0.15, 0.02}}, {"MgO", {0.35, -0.04}}, {"TiO2", {0.5, -0.05}},
                              {"CaO", {0.06, -0.01}}, {"LOI", {9.0, -0.6}}}),
        material("GMO", 2.0, {{"Fe", {58.0, 1.0}}, {"SiO2", {5.0, -0.5}}, {"Al2O3", {2.5, -0.6}}, {"P", {0.13, 0.02}},
                              {"S", {0.03, 0.004}}, {"Mn", {0.10, 0.02}}, {"MgO", {0.07, -0.01}}, {"TiO2", {0.08, -0.01}},
                              {"CaO", {0.03, -0.005}}, {"LOI", {8.0, -0.6}}}),
    };
}

std::size_t SiteSpec::samples_per_hole() const noexcept {
    return static_cast<std::size_t>(std::llround(hole_depth / depth_step));
}

void SiteSpec::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidSpec, msg); };
    if (n_regions < 1 || n_blasts < 1 || holes_per_blast < 1) fail("region/blast/hole counts must be >= 1");
    if (!(depth_step > 0.0)) fail("depth_step must be > 0");
    if (!(hole_depth > 0.0) || samples_per_hole() < 3) fail("hole_depth must cover at least 3 samples");
    if (materials.empty()) fail("material palette is empty");
    for (const auto& m : materials) m.validate();
    if (min_layers < 1 || max_layers < min_layers) fail("layer count range invalid");
    if (signal_noise < 0.0 || blast_bias < 0.0 || label_noise < 0.0 || boundary_jitter < 0.0 ||
        blast_boundary_sd < 0.0) {
        fail("noise levels must be >= 0");
    }
    auto coverage_ok = [](double f) { return f > 0.0 && f <= 1.0; };
    if (!coverage_ok(chemistry_coverage) || !coverage_ok(material_coverage)) fail("coverage fractions must lie in (0, 1]");
    if (!layers.empty()) {
        if (static_cast<int>(layers.size()) != total_blasts()) fail("explicit layers must list every blast");
        for (const auto& bl : layers) {
            if (bl.materials.size() != bl.boundaries.size() + 1) fail("layers need one material more than boundaries");
            if (!std::is_sorted(bl.boundaries.begin(), bl.boundaries.end())) fail("layer boundaries must be sorted");
            for (double b : bl.boundaries) {
                if (b < 0.0 || b > hole_depth) fail("layer boundary outside the hole");
            }
            for (int m : bl.materials) {
                if (m < 0 || m >= static_cast<int>(materials.size())) fail("layer material index out of range");
            }
        }
    }
}

// ---------------------------------------------------------------------------
// spec.json
// ---------------------------------------------------------------------------

SiteSpec parse_site_spec(std::istream& in) {
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, e.what());
    }
    SiteSpec s;
    try {
        auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("n_regions", s.n_regions);
        get("n_blasts", s.n_blasts);
        get("holes_per_blast", s.holes_per_blast);
        get("hole_depth", s.hole_depth);
        get("depth_step", s.depth_step);
        get("min_layers", s.min_layers);
        get("max_layers", s.max_layers);
        get("boundary_jitter", s.boundary_jitter);
        get("blast_boundary_sd", s.blast_boundary_sd);
        get("signal_noise", s.signal_noise);
        get("blast_bias", s.blast_bias);
        get("label_noise", s.label_noise);
        get("chemistry_coverage", s.chemistry_coverage);
        get("material_coverage", s.material_coverage);
        get("seed", s.seed);
        if (j.contains("materials")) {
            s.materials.clear();
            for (const auto& m : j.at("materials")) {
                MaterialSpec ms;
                ms.code = m.at("code").get<std::string>();
                ms.hardness = m.at("hardness").get<double>();
                if (m.contains("assays")) {
                    for (const auto& [code, sig] : m.at("assays").items()) {
                        ms.assays[code] = {sig.at("mean").get<double>(), sig.value("spread", 0.0)};
                    }
                }
                s.materials.push_back(std::move(ms));
            }
        }
        if (j.contains("layers")) {
            for (const auto& l : j.at("layers")) {
                BlastLayers bl;
                bl.boundaries = l.at("boundaries").get<std::vector<double>>();
                bl.materials = l.at("materials").get<std::vector<int>>();
                s.layers.push_back(std::move(bl));
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InvalidSpec, e.what());
    }
    s.validate();
    return s;
}

void write_site_spec(std::ostream& out, const SiteSpec& s) {
    json j;
    j["n_regions"] = s.n_regions;
    j["n_blasts"] = s.n_blasts;
    j["holes_per_blast"] = s.holes_per_blast;
    j["hole_depth"] = s.hole_depth;
    j["depth_step"] = s.depth_step;
    j["min_layers"] = s.min_layers;
    j["max_layers"] = s.max_layers;
    j["boundary_jitter"] = s.boundary_jitter;
    j["blast_boundary_sd"] = s.blast_boundary_sd;
    j["signal_noise"] = s.signal_noise;
    j["blast_bias"] = s.blast_bias;
    j["label_noise"] = s.label_noise;
    j["chemistry_coverage"] = s.chemistry_coverage;
    j["material_coverage"] = s.material_coverage;
    j["seed"] = s.seed;
    json mats = json::array();
    for (const auto& m : s.materials) {
        json jm{{"code", m.code}, {"hardness", m.hardness}};
        json assays = json::object();
        for (const auto& [code, sig] : m.assays) assays[code] = {{"mean", sig.mean}, {"spread", sig.spread}};
        jm["assays"] = std::move(assays);
        mats.push_back(std::move(jm));
    }
    j["materials"] = std::move(mats);
    if (!s.layers.empty()) {
        json layers = json::array();
        for (const auto& l : s.layers) layers.push_back({{"boundaries", l.boundaries}, {"materials", l.materials}});
        j["layers"] = std::move(layers);
    }
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

const HoleTruth* GroundTruth::find(std::string_view hole_id) const noexcept {
    for (const auto& h : holes) {
        if (h.signals.hole_id == hole_id) return &h;
    }
    return nullptr;
}

namespace {

struct BlastPlan {
    std::string id;
    double origin_x = 0.0, origin_y = 0.0;
    BlastLayers layers;
    std::array<double, kSignalCount> bias{};  // hardness-unit offset per channel
};

// Each region has a stratigraphic template: a column of materials with
// boundaries. Blasts displace the template boundaries; holes jitter them again.
// Columns interbed ore (mean Fe >= 50) with waste when the palette has both.
class ColumnDealer {
public:
    ColumnDealer(const std::vector<MaterialSpec>& palette, std::mt19937_64& rng) {
        for (std::size_t i = 0; i < palette.size(); ++i) {
            const auto it = palette[i].assays.find("Fe");
            const bool ore = it != palette[i].assays.end() && it->second.mean >= 50.0;
            (ore ? ore_ : waste_).push_back(static_cast<int>(i));
        }
        std::shuffle(ore_.begin(), ore_.end(), rng);
        std::shuffle(waste_.begin(), waste_.end(), rng);
        if (ore_.empty() || waste_.empty()) {
            ore_.insert(ore_.end(), waste_.begin(), waste_.end());
            waste_.clear();
        }
    }

    int next(bool want_ore) {
        auto& pool = (want_ore || waste_.empty()) ? ore_ : waste_;
        std::size_t& k = (&pool == &ore_) ? k_ore_ : k_waste_;
        return pool[k++ % pool.size()];
    }

private:
    std::vector<int> ore_, waste_;
    std::size_t k_ore_ = 0, k_waste_ = 0;
};

BlastLayers region_template(const SiteSpec& spec, int region, ColumnDealer& dealer, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> count(spec.min_layers, spec.max_layers);
    std::uniform_real_distribution<double> where(0.0, spec.hole_depth);
    const int n = count(rng);
    BlastLayers t;
    for (int i = 0; i + 1 < n; ++i) t.boundaries.push_back(where(rng));
    std::sort(t.boundaries.begin(), t.boundaries.end());
    for (int i = 0; i < n; ++i) {
        int m = dealer.next((i + region) % 2 == 1);
        if (!t.materials.empty() && m == t.materials.back() && spec.materials.size() > 1) m = dealer.next((i + region) % 2 == 1);
        t.materials.push_back(m);
    }
    return t;
}

BlastLayers displace(const SiteSpec& spec, BlastLayers layers, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& b : layers.boundaries) b = std::clamp(b + spec.blast_boundary_sd * gauss(rng), 0.0, spec.hole_depth);
    std::sort(layers.boundaries.begin(), layers.boundaries.end());
    return layers;
}

struct GeneratedHole {
    HoleSignalSet observed;
    HoleTruth truth;
};

GeneratedHole generate_hole(const SiteSpec& spec, const BlastPlan& blast, int index_in_blast, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = spec.samples_per_hole();

    GeneratedHole g;
    HoleSignalSet& h = g.observed;
    h.hole_id = blast.id + "-H" + two_digits(index_in_blast + 1);
    h.blast_id = blast.id;
    const int row = index_in_blast / 10, col = index_in_blast % 10;
    h.collar_x = blast.origin_x + 5.0 * col;
    h.collar_y = blast.origin_y + 5.0 * row;
    h.depth_step = spec.depth_step;
    h.hole_depth = static_cast<double>(n) * spec.depth_step;

    std::vector<double> bounds = blast.layers.boundaries;
    for (double& b : bounds) b = std::clamp(b + spec.boundary_jitter * gauss(rng), 0.0, spec.hole_depth);
    std::sort(bounds.begin(), bounds.end());
    const double z = gauss(rng);

    std::vector<int> mat(n);
    std::vector<double> depth(n);
    for (std::size_t j = 0; j < n; ++j) {
        depth[j] = static_cast<double>(j + 1) * spec.depth_step;
        const double mid = depth[j] - 0.5 * spec.depth_step;
        const auto layer = static_cast<std::size_t>(std::upper_bound(bounds.begin(), bounds.end(), mid) - bounds.begin());
        mat[j] = blast.layers.materials[layer];
    }

    HoleSignalSet clean = h;
    h.signals[Signal::depth] = depth;
    clean.signals[Signal::depth] = depth;
    for (const auto& resp : kResponses) {
        auto& obs = h.signals[resp.signal];
        auto& tru = clean.signals[resp.signal];
        obs.resize(n);
        tru.resize(n);
        const double bias = blast.bias[static_cast<std::size_t>(resp.signal)];
        for (std::size_t j = 0; j < n; ++j) {
            const double hard = spec.materials[static_cast<std::size_t>(mat[j])].hardness;
            tru[j] = resp(hard);
            obs[j] = resp(hard + bias + spec.signal_noise * gauss(rng));
        }
    }
    for (HoleSignalSet* s : {&h, &clean}) {
        const auto& rop = s->signals[Signal::rop];
        auto& dur = s->signals[Signal::duration];
        dur.resize(n);
        for (std::size_t j = 0; j < n; ++j) dur[j] = step_duration(rop[j], spec.depth_step);
    }

    // Depth shares and per-hole composition.
    std::vector<double> share(spec.materials.size(), 0.0);
    for (int m : mat) share[static_cast<std::size_t>(m)] += 1.0;
    for (double& s : share) s /= static_cast<double>(n);

    HoleTruth& t = g.truth;
    t.grade_factor = z;
    for (auto code : kAssayCodes) {
        double v = 0.0;
        for (std::size_t m = 0; m < spec.materials.size(); ++m) {
            if (share[m] == 0.0) continue;
            const auto it = spec.materials[m].assays.find(std::string(code));
            if (it == spec.materials[m].assays.end()) continue;
            v += share[m] * std::max(0.0, it->second.mean + it->second.spread * z);
        }
        t.assays[std::string(code)] = v;
    }
    for (std::size_t m = 0; m < spec.materials.size(); ++m) t.shares[spec.materials[m].code] = 100.0 * share[m];
    t.signals = std::move(clean);
    return g;
}

}  // namespace

SyntheticSite generate_site(const SiteSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ColumnDealer dealer(spec.materials, rng);

    std::vector<BlastPlan> blasts;
    for (int r = 0; r < spec.n_regions; ++r) {
        const BlastLayers tmpl = region_template(spec, r, dealer, rng);
        for (int b = 0; b < spec.n_blasts; ++b) {
            BlastPlan plan;
            plan.id = region_tag(r) + "-B" + two_digits(b + 1);
            plan.origin_x = 2000.0 * r + 200.0 * (b % 5);
            plan.origin_y = 200.0 * (b / 5);
            const auto global = static_cast<std::size_t>(r * spec.n_blasts + b);
            plan.layers = spec.layers.empty() ? displace(spec, tmpl, rng) : spec.layers[global];
            for (auto& v : plan.bias) v = spec.blast_bias * gauss(rng);
            plan.bias[static_cast<std::size_t>(Signal::depth)] = 0.0;
            plan.bias[static_cast<std::size_t>(Signal::duration)] = 0.0;
            blasts.push_back(std::move(plan));
        }
    }

    const auto total = static_cast<std::size_t>(spec.total_holes());
    std::vector<GeneratedHole> generated(total);
    detail::parallel_for(total, [&](std::size_t i) {
        const auto per = static_cast<std::size_t>(spec.holes_per_blast);
        generated[i] = generate_hole(spec, blasts[i / per], static_cast<int>(i % per), detail::derive_seed(spec.seed, i));
    });

    // Sparse label coverage: exact-size random subsets.
    auto subset = [&](double fraction) {
        std::vector<std::size_t> idx(total);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
        std::vector<char> mask(total, 0);
        for (std::size_t k = 0; k < keep; ++k) mask[idx[k]] = 1;
        return mask;
    };
    const auto chem = subset(spec.chemistry_coverage);
    const auto mats = subset(spec.material_coverage);

    SyntheticSite site;
    site.dataset.region_tag = "synthetic";
    site.truth.seed = spec.seed;
    for (std::size_t i = 0; i < total; ++i) {
        auto& g = generated[i];
        std::optional<LabelRecord> rec;
        if (chem[i] || mats[i]) {
            LabelRecord lr;
            lr.hole_id = g.observed.hole_id;
            if (chem[i]) {
                for (const auto& [code, v] : g.truth.assays) {
                    lr.assays[code] = std::max(0.0, v * (1.0 + spec.label_noise * gauss(rng)));
                }
            }
            if (mats[i]) lr.materials = g.truth.shares;
            rec = lr;
            site.labels.push_back(std::move(lr));
        }
        site.holes.push_back(g.observed);
        site.dataset.holes.push_back({std::move(g.observed), std::move(rec)});
        site.truth.holes.push_back(std::move(g.truth));
    }
    return site;
}

void write_truth_csv(std::ostream& out, const GroundTruth& truth) {
    std::vector<HoleSignalSet> holes;
    holes.reserve(truth.holes.size());
    for (const auto& h : truth.holes) holes.push_back(h.signals);
    write_mwd_csv(out, holes);
}

std::vector<TruthDiagnostics> truth_check(const EvaluationReport& report, const GroundTruth& truth) {
    if (report.task != Task::regression) {
        throw Error(ErrorCode::MismatchedProvenance, "truth comparison needs an assay regression report");
    }
    std::vector<const HoleTruth*> rows;
    for (const auto& id : report.hole_ids) {
        const HoleTruth* t = truth.find(id);
        if (!t) throw Error(ErrorCode::MismatchedProvenance, "hole " + id + " is not in the ground truth");
        rows.push_back(t);
    }
    std::vector<TruthDiagnostics> out;
    for (const auto& target : report.targets) {
        std::vector<double> tv;
        for (const HoleTruth* t : rows) {
            const auto it = t->assays.find(target.name);
            if (it == t->assays.end()) throw Error(ErrorCode::MismatchedProvenance, "no truth for " + target.name);
            tv.push_back(it->second);
        }
        TruthDiagnostics d;
        d.target = target.name;
        d.n = tv.size();
        d.r_vs_labels = pearson_r(target.lab, target.pred);
        d.rmse_vs_labels = rmse(target.lab, target.pred);
        d.r_vs_truth = pearson_r(tv, target.pred);
        d.rmse_vs_truth = rmse(tv, target.pred);
        out.push_back(d);
    }
    return out;
}

}  // namespace mwd
