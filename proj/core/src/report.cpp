#include "mwd/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "mwd/error.hpp"

#ifndef MWD_VERSION
#define MWD_VERSION "0.0.0"
#endif

namespace mwd {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 200.0;  // annotation column
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string fixed(double v, int decimals) {
    if (std::isnan(v)) return "NaN";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s == "-0.0000" || s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
    return s;
}

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Linear map from a data interval onto a pixel interval.
struct Axis {
    double lo, hi, p0, p1;

    static Axis fit(double lo, double hi, double p0, double p1) {
        if (!(hi > lo)) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        return {lo - pad, hi + pad, p0, p1};
    }
    double operator()(double v) const { return p0 + (v - lo) / (hi - lo) * (p1 - p0); }
};

class Svg {
public:
    Svg(std::ostream& out, const std::string& title, const RunConfig& cfg) : out_(out) {
        out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
             << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
             << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
             << "<metadata>mwdtool " << tool_version() << ' ' << xml_escape(cfg.to_json()) << "</metadata>\n"
             << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
        text(kWidth / 2, 24, title, "middle", 16);
    }
    ~Svg() { out_ << "</svg>\n"; }

    void text(double x, double y, std::string_view s, std::string_view anchor = "start", int size = 12,
              double rotate = 0.0) {
        out_ << "<text x=\"" << fixed(x, 1) << "\" y=\"" << fixed(y, 1) << "\" font-family=\"sans-serif\" font-size=\""
             << size << "\" text-anchor=\"" << anchor << '"';
        if (rotate != 0.0) out_ << " transform=\"rotate(" << fixed(rotate, 0) << ' ' << fixed(x, 1) << ' ' << fixed(y, 1) << ")\"";
        out_ << '>' << xml_escape(s) << "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, std::string_view stroke = "black", bool dashed = false) {
        out_ << "<line x1=\"" << fixed(x1, 2) << "\" y1=\"" << fixed(y1, 2) << "\" x2=\"" << fixed(x2, 2) << "\" y2=\""
             << fixed(y2, 2) << "\" stroke=\"" << stroke << '"' << (dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    }
    void dot(double x, double y, std::string_view fill = "steelblue") {
        out_ << "<circle cx=\"" << fixed(x, 2) << "\" cy=\"" << fixed(y, 2) << "\" r=\"2.5\" fill=\"" << fill
             << "\" fill-opacity=\"0.7\"/>\n";
    }
    void rect(double x, double y, double w, double h, std::string_view fill, std::string_view stroke = "black") {
        out_ << "<rect x=\"" << fixed(x, 2) << "\" y=\"" << fixed(y, 2) << "\" width=\"" << fixed(w, 2) << "\" height=\""
             << fixed(h, 2) << "\" fill=\"" << fill << "\" stroke=\"" << stroke << "\"/>\n";
    }

    void frame(const Axis& xa, const Axis& ya, std::string_view xlabel, std::string_view ylabel) {
        const double x0 = xa.p0, x1 = xa.p1, y0 = ya.p0, y1 = ya.p1;
        rect(x0, y1, x1 - x0, y0 - y1, "none");
        for (int i = 0; i <= 4; ++i) {
            const double fx = xa.lo + (xa.hi - xa.lo) * i / 4.0;
            const double fy = ya.lo + (ya.hi - ya.lo) * i / 4.0;
            text(xa(fx), y0 + 16, fixed(fx, 2), "middle", 10);
            text(x0 - 6, ya(fy) + 4, fixed(fy, 2), "end", 10);
        }
        text((x0 + x1) / 2, kHeight - 16, xlabel, "middle");
        text(18, (y0 + y1) / 2, ylabel, "middle", 12, -90.0);
    }

private:
    std::ostream& out_;
};

std::pair<double, double> range(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 1.0};
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    return {*mn, *mx};
}

Axis x_axis(double lo, double hi) { return Axis::fit(lo, hi, kLeft, kWidth - kRight); }
Axis y_axis(double lo, double hi) { return Axis::fit(lo, hi, kHeight - kBottom, kTop); }

void annotate(Svg& svg, const std::vector<std::pair<std::string, std::string>>& items) {
    double y = kTop + 14;
    for (const auto& [k, v] : items) {
        svg.text(kWidth - kRight + 14, y, k + " = " + v);
        y += 18;
    }
}

const AgreementStats& agreement_of(const TargetResult& t) {
    if (!t.agreement) throw Error(ErrorCode::WrongModelKind, "target " + t.name + " has no regression statistics");
    return *t.agreement;
}

void write_file(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorCode::IoFailure, "cannot write " + p.string());
    f << content;
    if (!f) throw Error(ErrorCode::IoFailure, "write failed for " + p.string());
}

std::string safe_name(std::string s) {
    for (char& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
    }
    return s;
}

}  // namespace

std::string_view tool_version() noexcept { return MWD_VERSION; }

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["target"] = target;
    j["model"] = std::string(to_string(model));
    j["n_trees"] = n_trees;
    j["cv"] = std::string(to_string(cv));
    j["k"] = k;
    j["seed"] = seed;
    j["augment"] = augment ? nlohmann::json(*augment) : nlohmann::json(nullptr);
    j["out"] = out_dir;
    j["embed_dim"] = embed_dim;
    j["threshold"] = threshold;
    return j.dump();
}

std::string format_stat(double v) { return fixed(v, 4); }

std::vector<std::pair<std::string, std::string>> agreement_annotations(const AgreementStats& s) {
    std::string eq = "NaN";
    if (s.fit_defined) {
        eq = "y = " + format_stat(s.slope) + "x " + (s.intercept < 0 ? "- " : "+ ") + format_stat(std::abs(s.intercept));
    }
    char p[32];
    if (std::isnan(s.p)) {
        std::snprintf(p, sizeof p, "NaN");
    } else {
        std::snprintf(p, sizeof p, "%.3e", s.p);
    }
    return {
        {"eq", eq},
        {"r", s.r_defined ? format_stat(s.r) : "NaN"},
        {"RMSE", format_stat(s.rmse)},
        {"p", p},
        {"n", std::to_string(s.n)},
        {"RPC", format_stat(s.rpc)},
        {"CV", format_stat(s.cv_percent) + "%"},
    };
}

Histogram make_histogram(const std::vector<double>& x, int bins) {
    if (bins < 1) throw Error(ErrorCode::InvalidParams, "histogram needs at least one bin");
    Histogram h;
    if (x.empty()) {
        h.width = 1.0;
        h.counts.assign(static_cast<std::size_t>(bins), 0);
        return h;
    }
    const auto [lo, hi] = range(x);
    if (!(hi > lo)) {
        h.lo = lo - 0.5;
        h.width = 1.0;
        h.counts = {x.size()};
        return h;
    }
    h.lo = lo;
    h.width = (hi - lo) / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : x) {
        auto b = static_cast<std::size_t>((v - lo) / h.width);
        h.counts[std::min(b, h.counts.size() - 1)]++;
    }
    return h;
}

std::vector<GradeGroup> residuals_by_grade(const TargetResult& t) {
    std::vector<GradeGroup> g = {{FeGrade::waste, {}}, {FeGrade::med, {}}, {FeGrade::high, {}}};
    for (std::size_t i = 0; i < t.lab.size(); ++i) {
        g[static_cast<std::size_t>(fe_grade_class(t.lab[i]))].residuals.push_back(t.residuals[i]);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Text and CSV
// ---------------------------------------------------------------------------

void write_meta_json(std::ostream& out, const RunConfig& cfg) {
    nlohmann::json j;
    j["tool"] = "mwdtool";
    j["version"] = std::string(tool_version());
    j["seed"] = cfg.seed;
    j["config"] = nlohmann::json::parse(cfg.to_json());
    out << j.dump(2) << '\n';
}

void write_pairs_csv(std::ostream& out, const EvaluationReport& report, std::size_t target) {
    const TargetResult& t = report.targets.at(target);
    out << "hole_id,blast_id,fold,lab,pred,residual\n";
    for (std::size_t i = 0; i < t.lab.size(); ++i) {
        out << report.hole_ids[i] << ',' << (i < report.blast_ids.size() ? report.blast_ids[i] : "") << ','
            << report.fold[i] << ',' << format_number(t.lab[i]) << ',' << format_number(t.pred[i]) << ','
            << format_number(t.residuals[i]) << '\n';
    }
}

void write_report_text(std::ostream& out, const EvaluationReport& report, std::size_t target, const RunConfig& cfg) {
    const TargetResult& t = report.targets.at(target);
    out << "# mwd evaluation report\n"
        << "version: " << tool_version() << '\n'
        << "config: " << cfg.to_json() << '\n'
        << "seed: " << report.seed << '\n'
        << "model: " << to_string(report.model) << '\n'
        << "task: " << (report.task == Task::regression ? "regression" : "classification") << '\n'
        << "cv: " << to_string(report.mode) << '\n'
        << "folds: " << report.folds << '\n'
        << "target: " << t.name << '\n'
        << "augment: " << report.augment.value_or("none") << '\n';

    out << "\n[stats]\n";
    if (t.agreement) {
        const auto& s = *t.agreement;
        for (const auto& [k, v] : agreement_annotations(s)) out << k << ": " << v << '\n';
        out << "bias: " << format_stat(s.bias) << '\n'
            << "sd_difference: " << format_stat(s.sd_difference) << '\n'
            << "r_defined: " << (s.r_defined ? "true" : "false") << '\n';
    }
    if (t.confusion) {
        const auto& c = *t.confusion;
        out << "tn: " << c.tn << "\nfp: " << c.fp << "\nfn: " << c.fn << "\ntp: " << c.tp << '\n'
            << "accuracy: " << format_stat(c.accuracy) << '\n';
    }

    if (!report.warnings.empty()) {
        out << "\n[warnings]\n";
        for (const auto& w : report.warnings) out << w << '\n';
    }

    out << "\n[pairs]\n";
    write_pairs_csv(out, report, target);

    out << "\n[folds]\nfold,n,held_out_blast\n";
    std::vector<std::size_t> sizes(static_cast<std::size_t>(std::max(report.folds, 0)), 0);
    for (int f : report.fold) {
        if (f >= 0 && static_cast<std::size_t>(f) < sizes.size()) sizes[static_cast<std::size_t>(f)]++;
    }
    std::vector<std::string> held(sizes.size());
    if (report.mode == CvMode::leave_one_blast_out) {
        for (std::size_t i = 0; i < report.fold.size() && i < report.blast_ids.size(); ++i) {
            held[static_cast<std::size_t>(report.fold[i])] = report.blast_ids[i];
        }
    }
    for (std::size_t f = 0; f < sizes.size(); ++f) out << f << ',' << sizes[f] << ',' << held[f] << '\n';
}

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

void write_bland_altman_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg) {
    const auto& s = agreement_of(t);
    Svg svg(out, "Bland-Altman: " + t.name, cfg);
    std::vector<double> xs, ys;
    for (const auto& p : s.ba_pairs) {
        xs.push_back(p.mean);
        ys.push_back(p.difference);
    }
    const double upper = s.bias + s.rpc, lower = s.bias - s.rpc;
    auto [ylo, yhi] = range(ys);
    if (std::isfinite(upper)) {
        ylo = std::min(ylo, lower);
        yhi = std::max(yhi, upper);
    }
    const auto [xlo, xhi] = range(xs);
    const Axis xa = x_axis(xlo, xhi), ya = y_axis(ylo, yhi);
    svg.frame(xa, ya, "mean of lab and predicted", "lab - predicted");
    for (std::size_t i = 0; i < xs.size(); ++i) svg.dot(xa(xs[i]), ya(ys[i]));
    svg.line(xa.p0, ya(s.bias), xa.p1, ya(s.bias), "black");
    if (std::isfinite(upper)) {
        svg.line(xa.p0, ya(upper), xa.p1, ya(upper), "firebrick", true);
        svg.line(xa.p0, ya(lower), xa.p1, ya(lower), "firebrick", true);
    }
    annotate(svg, agreement_annotations(s));
}

void write_residual_histogram_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg) {
    const Histogram h = make_histogram(t.residuals, 20);
    Svg svg(out, "Residual histogram: " + t.name, cfg);
    const double hi = h.lo + h.width * static_cast<double>(h.counts.size());
    const std::size_t peak = h.counts.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
    const Axis xa = x_axis(h.lo, hi);
    const Axis ya{0.0, static_cast<double>(peak) * 1.05, kHeight - kBottom, kTop};
    svg.frame(xa, ya, "residual (lab - predicted)", "count");
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        const double x0 = xa(h.lo + h.width * static_cast<double>(b));
        const double x1 = xa(h.lo + h.width * static_cast<double>(b + 1));
        const double y = ya(static_cast<double>(h.counts[b]));
        svg.rect(x0, y, x1 - x0, ya.p0 - y, "steelblue", "white");
    }
    annotate(svg, {{"n", std::to_string(t.residuals.size())}, {"bins", std::to_string(h.counts.size())}});
}

void write_residual_by_grade_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg) {
    const auto groups = residuals_by_grade(t);
    Svg svg(out, "Residuals by Fe grade: " + t.name, cfg);
    const auto [ylo, yhi] = range(t.residuals);
    const Axis ya = y_axis(ylo, yhi);
    const Axis xa{0.0, 3.0, kLeft, kWidth - kRight};
    svg.frame(xa, ya, "Fe grade", "residual (lab - predicted)");
    std::vector<std::pair<std::string, std::string>> counts;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& r = groups[g].residuals;
        const double centre = static_cast<double>(g) + 0.5;
        for (std::size_t i = 0; i < r.size(); ++i) {
            // Deterministic horizontal spread so overlapping points stay visible.
            const double dx = (static_cast<double>(i % 21) - 10.0) / 40.0;
            svg.dot(xa(centre + dx), ya(r[i]));
        }
        svg.text(xa(centre), kHeight - kBottom - 6, to_string(groups[g].grade), "middle", 12);
        counts.emplace_back(std::string(to_string(groups[g].grade)), std::to_string(r.size()));
    }
    svg.line(xa.p0, ya(0.0), xa.p1, ya(0.0), "black", true);
    annotate(svg, counts);
}

void write_qq_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg) {
    std::vector<QQPoint> pts;
    std::string undefined;
    try {
        pts = qq_normal(t.residuals);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ConstantInput && e.code() != ErrorCode::TooShort) throw;
        undefined = e.what();
    }
    Svg svg(out, "Normal QQ of residuals: " + t.name, cfg);
    if (!undefined.empty()) {
        svg.text(kLeft + 10, kTop + 20, "undefined: " + undefined);
        annotate(svg, {{"n", std::to_string(t.residuals.size())}});
        return;
    }
    std::vector<double> xs, ys;
    for (const auto& p : pts) {
        xs.push_back(p.reference);
        ys.push_back(p.sample);
    }
    auto [xlo, xhi] = range(xs);
    auto [ylo, yhi] = range(ys);
    const double lo = std::min(xlo, ylo), hi = std::max(xhi, yhi);
    const Axis xa = x_axis(lo, hi), ya = y_axis(lo, hi);
    svg.frame(xa, ya, "standard normal quantile", "standardised residual");
    svg.line(xa(lo), ya(lo), xa(hi), ya(hi), "firebrick", true);
    for (std::size_t i = 0; i < xs.size(); ++i) svg.dot(xa(xs[i]), ya(ys[i]));
    annotate(svg, {{"n", std::to_string(pts.size())}});
}

void write_confusion_svg(std::ostream& out, const TargetResult& t, const RunConfig& cfg) {
    if (!t.confusion) throw Error(ErrorCode::WrongModelKind, "target " + t.name + " has no confusion matrix");
    const auto& c = *t.confusion;
    Svg svg(out, "Confusion matrix: " + t.name, cfg);
    const std::array<std::string, 2> labels = {"1 - Material does not exist", "2 - Material exist"};
    // cells[true][predicted]
    const std::size_t cells[2][2] = {{c.tn, c.fp}, {c.fn, c.tp}};
    const double x0 = 190.0, y0 = 70.0, cell = 150.0;
    std::size_t peak = 1;
    for (const auto& row : cells) peak = std::max({peak, row[0], row[1]});
    for (int r = 0; r < 2; ++r) {
        for (int k = 0; k < 2; ++k) {
            const double shade = static_cast<double>(cells[r][k]) / static_cast<double>(peak);
            const int level = 255 - static_cast<int>(std::lround(155.0 * shade));
            char fill[40];
            std::snprintf(fill, sizeof fill, "rgb(%d,%d,255)", level, level);
            svg.rect(x0 + k * cell, y0 + r * cell, cell, cell, fill);
            svg.text(x0 + k * cell + cell / 2, y0 + r * cell + cell / 2 + 6, std::to_string(cells[r][k]), "middle", 18);
        }
        svg.text(x0 - 8, y0 + r * cell + cell / 2 + 4, labels[static_cast<std::size_t>(r)], "end", 11);
        svg.text(x0 + r * cell + cell / 2, y0 + 2 * cell + 18, labels[static_cast<std::size_t>(r)], "middle", 11);
    }
    svg.text(x0 + cell, y0 + 2 * cell + 40, "Predicted class", "middle");
    svg.text(x0 - 8, y0 - 10, "True class", "end");
    svg.text(x0 + cell, kHeight - 12, "accuracy = " + format_stat(c.accuracy), "middle");
}

std::vector<std::filesystem::path> write_evaluation_artifacts(const EvaluationReport& report, const RunConfig& cfg,
                                                              const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    auto emit = [&](const std::string& name, const auto& writer) {
        std::ostringstream s;
        writer(s);
        const auto p = dir / name;
        write_file(p, s.str());
        written.push_back(p);
    };
    for (std::size_t i = 0; i < report.targets.size(); ++i) {
        const TargetResult& t = report.targets[i];
        const std::string stem = safe_name(t.name);
        emit(stem + "_report.txt", [&](std::ostream& o) { write_report_text(o, report, i, cfg); });
        emit(stem + "_pairs.csv", [&](std::ostream& o) { write_pairs_csv(o, report, i); });
        emit(stem + "_pairs.csv.meta.json", [&](std::ostream& o) { write_meta_json(o, cfg); });
        if (t.agreement) {
            emit(stem + "_bland_altman.svg", [&](std::ostream& o) { write_bland_altman_svg(o, t, cfg); });
            emit(stem + "_residual_hist.svg", [&](std::ostream& o) { write_residual_histogram_svg(o, t, cfg); });
            if (t.name == "Fe") {
                emit(stem + "_residual_by_grade.svg", [&](std::ostream& o) { write_residual_by_grade_svg(o, t, cfg); });
            }
            emit(stem + "_qq.svg", [&](std::ostream& o) { write_qq_svg(o, t, cfg); });
        }
        if (t.confusion) {
            emit(stem + "_confusion.svg", [&](std::ostream& o) { write_confusion_svg(o, t, cfg); });
        }
    }
    return written;
}

void write_importance_csv(std::ostream& out, const std::vector<FeatureImportance>& ranked) {
    out << "rank,feature,importance\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        out << i + 1 << ',' << ranked[i].feature << ',' << format_number(ranked[i].importance) << '\n';
    }
}

void write_importance_text(std::ostream& out, const std::vector<FeatureImportance>& ranked, const RunConfig& cfg,
                           std::size_t top) {
    out << "# mwd feature importance\n"
        << "version: " << tool_version() << '\n'
        << "config: " << cfg.to_json() << '\n'
        << "seed: " << cfg.seed << "\n\n";
    const std::size_t n = std::min(top, ranked.size());
    std::size_t w = 7;
    for (std::size_t i = 0; i < n; ++i) w = std::max(w, ranked[i].feature.size());
    for (std::size_t i = 0; i < n; ++i) {
        std::string name = ranked[i].feature;
        name.resize(w, ' ');
        out << (i + 1 < 10 ? " " : "") << i + 1 << "  " << name << "  " << fixed(ranked[i].importance, 6) << '\n';
    }
}

}  // namespace mwd
