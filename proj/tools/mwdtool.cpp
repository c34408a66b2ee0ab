// mwdtool: batch front end for synthetic generation, feature extraction,
// cross-validated evaluation and feature ranking.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mwd/datamodel.hpp"
#include "mwd/error.hpp"
#include "mwd/features.hpp"
#include "mwd/models.hpp"
#include "mwd/report.hpp"
#include "mwd/synth.hpp"
#include "mwd/validation.hpp"

namespace fs = std::filesystem;
using namespace mwd;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::config: return kConfig;
        case ErrorCategory::numeric: return kNumeric;
        case ErrorCategory::data: return kData;
    }
    return kData;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot open " + path);
    return f;
}

void write_with_meta(const fs::path& path, const RunConfig& cfg, const std::function<void(std::ostream&)>& body) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
        body(f);
        if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
    }
    std::ofstream meta(path.string() + ".meta.json", std::ios::binary);
    if (!meta) throw Error(ErrorCode::IoFailure, "cannot write metadata for " + path.string());
    write_meta_json(meta, cfg);
}

std::vector<std::string> split_codes(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ModelKind model_kind(const std::string& name) {
    const auto k = parse_model_kind(name);
    if (!k) throw Error(ErrorCode::InvalidParams, "unknown model " + name);
    return *k;
}

struct Options {
    std::string spec, mwd, labels, features, target, augment, out = ".";
    std::string model = "rf", cv = "random";
    int k = kDefaultFolds;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trees = RFParams{}.n_trees;
    int embed_dim = 10;
    double threshold = 0.0;
    bool raw_spr2 = false;
    int top = 10;
};

RunConfig make_config(const std::string& command, const Options& o) {
    RunConfig c;
    c.command = command;
    if (!o.spec.empty()) c.inputs["spec"] = o.spec;
    if (!o.mwd.empty()) c.inputs["mwd"] = o.mwd;
    if (!o.labels.empty()) c.inputs["labels"] = o.labels;
    if (!o.features.empty()) c.inputs["features"] = o.features;
    c.target = o.target;
    c.model = model_kind(o.model);
    c.n_trees = o.trees;
    c.cv = o.cv == "spatial" ? CvMode::leave_one_blast_out : CvMode::random_kfold;
    c.k = o.k;
    c.seed = o.seed;
    if (!o.augment.empty()) c.augment = o.augment;
    c.out_dir = o.out;
    c.embed_dim = o.embed_dim;
    c.threshold = o.threshold;
    return c;
}

int cmd_generate(Options o) {
    SiteSpec spec;
    if (!o.spec.empty()) {
        auto in = open_in(o.spec);
        spec = parse_site_spec(in);
    }
    if (o.seed_set) spec.seed = o.seed;
    o.seed = spec.seed;
    const RunConfig cfg = make_config("generate", o);
    const SyntheticSite site = generate_site(spec);
    const fs::path dir(o.out);
    write_with_meta(dir / "mwd.csv", cfg, [&](std::ostream& f) { write_mwd_csv(f, site.holes); });
    write_with_meta(dir / "labels.csv", cfg, [&](std::ostream& f) { write_labels_csv(f, site.labels); });
    write_with_meta(dir / "truth.csv", cfg, [&](std::ostream& f) { write_truth_csv(f, site.truth); });
    std::ofstream s(dir / "spec.json", std::ios::binary);
    write_site_spec(s, spec);
    std::cerr << "generated " << site.holes.size() << " holes, " << site.labels.size() << " labelled\n";
    return kOk;
}

int cmd_features(const Options& o) {
    if (o.out.empty() || o.out == ".") throw Error(ErrorCode::InvalidParams, "features needs --out <file>");
    auto in = open_in(o.mwd);
    const auto holes = parse_mwd_csv(in);
    FeatureConfig fc;
    fc.embed_dim = o.embed_dim;
    fc.emit_raw_spr2 = o.raw_spr2;
    const FeatureMatrix m = build_feature_matrix(holes, fc);
    for (const auto& c : m.dropped_columns) std::cerr << "dropped column " << c << '\n';
    const RunConfig cfg = make_config("features", o);
    write_with_meta(o.out, cfg, [&](std::ostream& f) { write_feature_csv(f, m); });
    std::cerr << "wrote " << m.rows.size() << " rows x " << m.registry.column_names().size() << " features\n";
    return kOk;
}

struct Loaded {
    FeatureMatrix features;
    Dataset dataset;
};

Loaded load_inputs(const Options& o, bool need_blasts) {
    Loaded l;
    {
        auto in = open_in(o.features);
        l.features = read_feature_csv(in);
    }
    std::vector<LabelRecord> labels;
    {
        auto in = open_in(o.labels);
        labels = parse_labels_csv(in);
    }
    std::unordered_map<std::string, std::string> blast_of;
    if (!o.mwd.empty()) {
        auto in = open_in(o.mwd);
        for (const auto& h : parse_mwd_csv(in)) blast_of[h.hole_id] = h.blast_id;
    } else if (need_blasts) {
        throw Error(ErrorCode::InvalidParams, "spatial cross-validation needs --mwd for blast ids");
    }
    for (auto& r : labels) {
        LabeledHole h;
        h.signals.hole_id = r.hole_id;
        if (const auto it = blast_of.find(r.hole_id); it != blast_of.end()) h.signals.blast_id = it->second;
        h.labels = std::move(r);
        l.dataset.holes.push_back(std::move(h));
    }
    return l;
}

TargetSpec make_target(const Options& o) {
    const auto codes = split_codes(o.target);
    if (codes.empty()) throw Error(ErrorCode::InvalidParams, "--target is required");
    const bool assay = is_assay_code(codes.front());
    for (const auto& c : codes) {
        if (is_assay_code(c) != assay) throw Error(ErrorCode::InvalidParams, "cannot mix assay and material targets");
    }
    if (assay) {
        TargetSpec t = TargetSpec::assay(codes.front());
        t.codes = codes;
        return t;
    }
    TargetSpec t = TargetSpec::material(codes.front(), o.threshold);
    t.codes = codes;
    return t;
}

ModelSpec make_model(const Options& o, Task task) {
    ModelSpec s;
    s.kind = model_kind(o.model);
    s.task = task;
    s.rf.n_trees = o.trees;
    s.rf.seed = o.seed;
    return s;
}

int cmd_evaluate(const Options& o) {
    const RunConfig cfg = make_config("evaluate", o);
    const Loaded in = load_inputs(o, cfg.cv == CvMode::leave_one_blast_out);
    const TargetSpec target = make_target(o);
    const std::optional<std::string> augment = o.augment.empty() ? std::nullopt : std::optional(o.augment);
    const CvProblem pb = assemble_problem(in.features, in.dataset, target, augment);
    const FoldPlan plan = make_folds(pb.hole_ids, pb.blast_ids, cfg.cv, o.k, o.seed);
    const EvaluationReport rep = run_cv(pb, make_model(o, pb.task), plan);
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& p : write_evaluation_artifacts(rep, cfg, o.out)) std::cerr << "wrote " << p.string() << '\n';
    return kOk;
}

int cmd_importance(const Options& o) {
    const RunConfig cfg = make_config("importance", o);
    if (cfg.model != ModelKind::rf && cfg.model != ModelKind::mvrf) {
        throw Error(ErrorCode::WrongModelKind, "importance needs --model rf or mvrf");
    }
    const Loaded in = load_inputs(o, false);
    const TargetSpec target = make_target(o);
    const std::optional<std::string> augment = o.augment.empty() ? std::nullopt : std::optional(o.augment);
    const CvProblem pb = assemble_problem(in.features, in.dataset, target, augment);
    const ModelHandle model = fit_model(make_model(o, pb.task), pb.X, pb.Y, pb.registry_hash);
    const auto ranked = rf_feature_importance(model, pb.feature_names);
    const fs::path dir(o.out);
    write_with_meta(dir / "importance.csv", cfg, [&](std::ostream& f) { write_importance_csv(f, ranked); });
    std::ofstream txt(dir / "importance.txt", std::ios::binary);
    write_importance_text(txt, ranked, cfg, static_cast<std::size_t>(o.top));
    write_importance_text(std::cout, ranked, cfg, static_cast<std::size_t>(o.top));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Measure-while-drilling assay and material prediction"};
    app.set_version_flag("--version", std::string(tool_version()));
    app.require_subcommand(1);
    Options o;

    auto common_eval = [&](CLI::App* c) {
        c->add_option("--features", o.features, "Feature matrix CSV")->required()->check(CLI::ExistingFile);
        c->add_option("--labels", o.labels, "Label CSV")->required()->check(CLI::ExistingFile);
        c->add_option("--mwd", o.mwd, "MWD CSV (supplies blast ids)")->check(CLI::ExistingFile);
        c->add_option("--target", o.target, "Assay or material code; comma list for multi-output models")->required();
        c->add_option("--model", o.model, "Model kind")->check(CLI::IsMember({"rf", "mvrf", "gp", "svm", "mean"}));
        c->add_option("--augment", o.augment, "Lab assay appended as a feature");
        c->add_option("--threshold", o.threshold, "Material presence threshold, percent")->check(CLI::Range(0.0, 100.0));
        c->add_option("--trees", o.trees, "Random forest size")->check(CLI::PositiveNumber);
        c->add_option("--out", o.out, "Output directory");
    };

    auto* gen = app.add_subcommand("generate", "Write a synthetic site: mwd.csv, labels.csv, truth.csv");
    gen->add_option("--spec", o.spec, "Site spec JSON (defaults used when omitted)")->check(CLI::ExistingFile);
    gen->add_option("--out", o.out, "Output directory");
    gen->add_option("--seed", o.seed, "Override the spec seed")->each([&](const std::string&) { o.seed_set = true; });

    auto* feat = app.add_subcommand("features", "Extract the feature matrix from an MWD CSV");
    feat->add_option("--mwd", o.mwd, "MWD CSV")->required()->check(CLI::ExistingFile);
    feat->add_option("--out", o.out, "Output feature CSV")->required();
    feat->add_option("--embed-dim", o.embed_dim, "SVD entropy embedding dimension")->check(CLI::PositiveNumber);
    feat->add_flag("--raw-spr2", o.raw_spr2, "Also emit the raw pressure-ratio SPR2 column");

    auto* eval = app.add_subcommand("evaluate", "Cross-validated evaluation with report and plots");
    common_eval(eval);
    eval->add_option("--cv", o.cv, "Cross-validation mode")->check(CLI::IsMember({"random", "spatial"}));
    eval->add_option("--k", o.k, "Folds for random cross-validation")->check(CLI::Range(2, 1000));
    eval->add_option("--seed", o.seed, "Random seed");
    eval->add_option("--embed-dim", o.embed_dim, "Recorded in the run config");

    auto* imp = app.add_subcommand("importance", "Rank features by random forest importance");
    common_eval(imp);
    imp->add_option("--seed", o.seed, "Random seed");
    imp->add_option("--top", o.top, "Rows in the text listing")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*gen) return cmd_generate(o);
        if (*feat) return cmd_features(o);
        if (*eval) return cmd_evaluate(o);
        if (*imp) return cmd_importance(o);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return exit_code(e.category());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error [IoFailure]: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
    return kConfig;
}
