#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "mwd/error.hpp"
#include "mwd/stats.hpp"
#include "mwd/synth.hpp"

using namespace mwd;

namespace {

SiteSpec small_spec(std::uint64_t seed) {
    SiteSpec s;
    s.n_regions = 1;
    s.n_blasts = 4;
    s.holes_per_blast = 10;
    s.hole_depth = 6.0;
    s.chemistry_coverage = 1.0;
    s.material_coverage = 1.0;
    s.seed = seed;
    return s;
}

MaterialSpec flat_material(std::string code, double hardness, double fe) {
    MaterialSpec m;
    m.code = std::move(code);
    m.hardness = hardness;
    m.assays["Fe"] = {fe, 0.0};
    m.assays["SiO2"] = {10.0, 0.0};
    return m;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string csv_of(const SyntheticSite& site) {
    std::ostringstream out;
    write_mwd_csv(out, site.holes);
    write_labels_csv(out, site.labels);
    write_truth_csv(out, site.truth);
    return out.str();
}

}  // namespace

TEST(Synth, NoiselessSingleMaterialSiteIsUniform) {
    SiteSpec s = small_spec(3);
    s.materials = {flat_material("SHL", 1.5, 30.0)};
    s.signal_noise = 0.0;
    s.blast_bias = 0.0;
    s.label_noise = 0.0;
    const auto site = generate_site(s);
    ASSERT_EQ(site.holes.size(), 40u);
    ASSERT_EQ(site.labels.size(), 40u);
    for (const auto& h : site.holes) EXPECT_EQ(h.signals, site.holes.front().signals);
    for (const auto& l : site.labels) {
        EXPECT_EQ(l.assays, site.labels.front().assays);
        EXPECT_EQ(l.materials, site.labels.front().materials);
        EXPECT_EQ(*l.assay("Fe"), 30.0);
        EXPECT_EQ(*l.material("SHL"), 100.0);
    }
    for (std::size_t i = 0; i < site.holes.size(); ++i) EXPECT_EQ(site.holes[i].signals, site.truth.holes[i].signals.signals);
}

TEST(Synth, SofterMaterialDrillsFaster) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SiteSpec s = small_spec(seed);
        s.n_blasts = 2;
        s.materials = {flat_material("SOFT", 1.0, 30.0), flat_material("HARD", 3.0, 60.0)};
        s.layers = {BlastLayers{{}, {0}}, BlastLayers{{}, {1}}};
        const auto site = generate_site(s);
        double soft = 0.0, hard = 0.0;
        for (const auto& h : site.holes) (h.blast_id == site.holes.front().blast_id ? soft : hard) += mean_of(h.at(Signal::rop));
        EXPECT_GT(soft, hard) << seed;
        for (const auto& h : site.holes) {
            for (double v : h.at(Signal::duration)) EXPECT_GT(v, 0.0);
        }
    }
}

TEST(Synth, SameSeedIsBitIdentical) {
    const SiteSpec s = small_spec(7);
    EXPECT_EQ(csv_of(generate_site(s)), csv_of(generate_site(s)));
    SiteSpec t = s;
    t.seed = 8;
    EXPECT_NE(csv_of(generate_site(s)), csv_of(generate_site(t)));
}

TEST(Synth, CoverageIsExact) {
    SiteSpec s = small_spec(2);
    s.n_blasts = 6;
    s.chemistry_coverage = 0.25;
    s.material_coverage = 1.0 / 6.0;
    const auto site = generate_site(s);
    std::size_t chem = 0, mats = 0;
    for (const auto& l : site.labels) {
        chem += l.has_chemistry();
        mats += l.has_materials();
    }
    EXPECT_EQ(chem, 15u);
    EXPECT_EQ(mats, 10u);
    EXPECT_EQ(site.dataset.size(), 60u);
}

TEST(Synth, PresenceFollowsDepthShare) {
    const auto site = generate_site(small_spec(4));
    for (std::size_t i = 0; i < site.dataset.size(); ++i) {
        const auto& rec = site.dataset.holes[i].labels;
        ASSERT_TRUE(rec.has_value());
        double total = 0.0;
        for (const auto& [code, share] : site.truth.holes[i].shares) {
            EXPECT_EQ(materialize_presence(*rec, code, 0.0), share > 0.0);
            total += share;
        }
        EXPECT_NEAR(total, 100.0, 1e-9);
    }
}

TEST(Synth, HoleGeometry) {
    const auto site = generate_site(small_spec(5));
    const auto& h = site.holes.front();
    EXPECT_EQ(h.hole_id, "A-B01-H01");
    EXPECT_EQ(h.sample_count(), 60u);
    EXPECT_NO_THROW(h.validate());
    EXPECT_NEAR(h.at(Signal::depth).back(), 6.0, 1e-12);
}

TEST(Synth, SpecJsonRoundTrip) {
    SiteSpec s = small_spec(9);
    s.blast_bias = 0.7;
    s.materials = {flat_material("SOFT", 1.0, 30.0), flat_material("HARD", 3.0, 60.0)};
    s.layers = {BlastLayers{{2.0}, {0, 1}}, BlastLayers{{}, {1}}, BlastLayers{{}, {0}}, BlastLayers{{1.0, 3.0}, {0, 1, 0}}};
    std::stringstream buf;
    write_site_spec(buf, s);
    const auto back = parse_site_spec(buf);
    EXPECT_EQ(back.seed, 9u);
    EXPECT_EQ(back.blast_bias, 0.7);
    EXPECT_EQ(back.layers.size(), 4u);
    EXPECT_EQ(csv_of(generate_site(back)), csv_of(generate_site(s)));
}

TEST(Synth, InvalidSpecs) {
    auto expect_invalid = [](const SiteSpec& s) {
        try {
            s.validate();
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
        }
    };
    SiteSpec s = small_spec(1);
    s.chemistry_coverage = 0.0;
    expect_invalid(s);
    s = small_spec(1);
    s.material_coverage = 1.5;
    expect_invalid(s);
    s = small_spec(1);
    s.materials = {flat_material("X", 1.0, 95.0)};
    expect_invalid(s);
    s = small_spec(1);
    s.layers = {BlastLayers{{4.0, 2.0}, {0, 1, 2}}, BlastLayers{{}, {0}}, BlastLayers{{}, {0}}, BlastLayers{{}, {0}}};
    expect_invalid(s);
    s = small_spec(1);
    s.signal_noise = -1.0;
    expect_invalid(s);
    std::istringstream bad("{\"n_blasts\": \"many\"}");
    EXPECT_THROW(parse_site_spec(bad), Error);
}

namespace {

EvaluationReport fe_report(const SyntheticSite& site, const std::vector<double>& pred) {
    EvaluationReport r;
    TargetResult t;
    t.name = "Fe";
    std::size_t k = 0;
    for (const auto& h : site.dataset.holes) {
        if (!h.labels || !h.labels->assay("Fe")) continue;
        r.hole_ids.push_back(h.signals.hole_id);
        t.lab.push_back(*h.labels->assay("Fe"));
        t.pred.push_back(pred[k++]);
    }
    r.targets.push_back(t);
    return r;
}

std::vector<double> truth_fe(const SyntheticSite& site) {
    std::vector<double> out;
    for (std::size_t i = 0; i < site.dataset.size(); ++i)
        if (site.dataset.holes[i].labels && site.dataset.holes[i].labels->assay("Fe")) out.push_back(site.truth.holes[i].assays.at("Fe"));
    return out;
}

SiteSpec truth_spec(std::uint64_t seed) {
    SiteSpec s = small_spec(seed);
    s.n_blasts = 10;
    s.holes_per_blast = 25;
    s.label_noise = 0.05;
    return s;
}

}  // namespace

TEST(TruthCheck, OraclePredictorMatchesTruth) {
    const auto site = generate_site(truth_spec(1));
    const auto d = truth_check(fe_report(site, truth_fe(site)), site.truth);
    ASSERT_EQ(d.size(), 1u);
    EXPECT_NEAR(d[0].r_vs_truth, 1.0, 1e-12);
    EXPECT_NEAR(d[0].rmse_vs_truth, 0.0, 1e-12);
    EXPECT_LT(d[0].r_vs_labels, 1.0);
}

TEST(TruthCheck, LabelNoiseAttenuatesAgreement) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto site = generate_site(truth_spec(seed));
        auto pred = truth_fe(site);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> g(0.0, 1.0);
        for (auto& v : pred) v += g(rng);
        const auto d = truth_check(fe_report(site, pred), site.truth);
        EXPECT_GE(d[0].r_vs_truth, d[0].r_vs_labels) << seed;
    }
}

TEST(TruthCheck, ShuffledPredictionsCarryNoSignal) {
    std::vector<double> rs;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto site = generate_site(truth_spec(seed));
        auto pred = truth_fe(site);
        std::shuffle(pred.begin(), pred.end(), std::mt19937_64(seed));
        rs.push_back(std::abs(truth_check(fe_report(site, pred), site.truth)[0].r_vs_truth));
    }
    std::sort(rs.begin(), rs.end());
    EXPECT_LT(0.5 * (rs[9] + rs[10]), 0.1);
}

TEST(TruthCheck, ForeignHolesRejected) {
    const auto site = generate_site(small_spec(1));
    auto r = fe_report(site, truth_fe(site));
    r.hole_ids[0] = "Z-B99-H99";
    EXPECT_THROW(truth_check(r, site.truth), Error);
    r = fe_report(site, truth_fe(site));
    r.task = Task::classification;
    EXPECT_THROW(truth_check(r, site.truth), Error);
}
