#include "mwd/datamodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "csv.hpp"
#include "mwd/error.hpp"

namespace mwd {

namespace {

constexpr std::array<std::string_view, kSignalCount> kSignalNames = {
    "duration", "depth", "rotationRPM", "airPressure", "feedPressure", "torque",
    "rop", "fob", "rotationPressure", "apr", "sed",
};

// Column order of the MWD CSV interface.
constexpr std::array<std::string_view, 15> kMwdColumns = {
    "hole_id", "blast_id", "collar_x", "collar_y", "depth", "duration", "rotationRPM",
    "airPressure", "feedPressure", "torque", "rop", "fob", "rotationPressure", "apr", "sed",
};

// Tolerated deviation of a depth increment from the nominal step.
constexpr double kDepthStepTolerance = 0.1;

double parse_cell(const std::string& cell, std::string_view column, std::size_t line_no) {
    double v = 0.0;
    if (cell.empty()) {
        throw Error(ErrorCode::RaggedSignals, "empty '" + std::string(column) + "' cell on line " +
                                                  std::to_string(line_no));
    }
    if (!detail::parse_double(cell, v) || !std::isfinite(v)) {
        throw Error(ErrorCode::NonFiniteSample, "column '" + std::string(column) + "' line " +
                                                    std::to_string(line_no) + ": '" + cell + "'");
    }
    return v;
}

}  // namespace

std::string_view signal_name(Signal s) noexcept {
    return kSignalNames[static_cast<std::size_t>(s)];
}

std::optional<Signal> parse_signal_name(std::string_view name) noexcept {
    for (std::size_t i = 0; i < kSignalNames.size(); ++i) {
        if (kSignalNames[i] == name) return static_cast<Signal>(i);
    }
    return std::nullopt;
}

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) return "nan";
    return std::string(buf, ptr);
}

std::size_t HoleSignalSet::sample_count() const noexcept {
    return signals.empty() ? 0 : signals.begin()->second.size();
}

const std::vector<double>& HoleSignalSet::at(Signal s) const {
    auto it = signals.find(s);
    if (it == signals.end()) {
        throw Error(ErrorCode::MissingColumn, std::string(signal_name(s)) + " in hole " + hole_id);
    }
    return it->second;
}

void HoleSignalSet::validate() const {
    if (!(depth_step > 0.0) || !std::isfinite(depth_step)) {
        throw Error(ErrorCode::InvalidHole, "non-positive depth_step in hole " + hole_id);
    }
    const std::size_t n = sample_count();
    if (n < 2) throw Error(ErrorCode::InvalidHole, "fewer than 2 samples in hole " + hole_id);
    for (const auto& [sig, xs] : signals) {
        if (xs.size() != n) {
            throw Error(ErrorCode::RaggedSignals, std::string(signal_name(sig)) + " in hole " + hole_id);
        }
        if (!std::all_of(xs.begin(), xs.end(), [](double v) { return std::isfinite(v); })) {
            throw Error(ErrorCode::NonFiniteSample, std::string(signal_name(sig)) + " in hole " + hole_id);
        }
    }
    const double expected = static_cast<double>(n) * depth_step;
    if (std::abs(expected - hole_depth) > depth_step * (1.0 + 1e-9)) {
        throw Error(ErrorCode::InvalidHole, "hole_depth inconsistent with sample count in hole " + hole_id);
    }
}

bool is_assay_code(std::string_view code) noexcept {
    return std::find(kAssayCodes.begin(), kAssayCodes.end(), code) != kAssayCodes.end();
}

std::vector<std::string> default_material_codes() {
    return {kDefaultMaterialCodes.begin(), kDefaultMaterialCodes.end()};
}

std::optional<double> LabelRecord::assay(std::string_view code) const {
    auto it = assays.find(std::string(code));
    if (it == assays.end()) return std::nullopt;
    return it->second;
}

std::optional<double> LabelRecord::material(std::string_view code) const {
    auto it = materials.find(std::string(code));
    if (it == materials.end()) return std::nullopt;
    return it->second;
}

const LabeledHole* Dataset::find(std::string_view hole_id) const noexcept {
    for (const auto& h : holes) {
        if (h.signals.hole_id == hole_id) return &h;
    }
    return nullptr;
}

std::vector<HoleSignalSet> parse_mwd_csv(std::istream& in, double depth_step) {
    std::string line;
    if (!detail::read_csv_line(in, line)) throw Error(ErrorCode::MissingColumn, "empty input");
    const auto header = detail::split_csv_line(line);

    std::array<std::size_t, kMwdColumns.size()> col{};
    for (std::size_t c = 0; c < kMwdColumns.size(); ++c) {
        auto it = std::find(header.begin(), header.end(), kMwdColumns[c]);
        if (it == header.end()) throw Error(ErrorCode::MissingColumn, std::string(kMwdColumns[c]));
        col[c] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<HoleSignalSet> holes;
    std::unordered_map<std::string, std::size_t> index;
    std::vector<double> last_depth;

    std::size_t line_no = 1;
    while (detail::read_csv_line(in, line)) {
        ++line_no;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::RaggedSignals, "line " + std::to_string(line_no) + " has " +
                                                      std::to_string(fields.size()) + " fields, expected " +
                                                      std::to_string(header.size()));
        }
        const std::string& hole_id = fields[col[0]];
        auto [it, inserted] = index.try_emplace(hole_id, holes.size());
        if (inserted) {
            HoleSignalSet h;
            h.hole_id = hole_id;
            h.blast_id = fields[col[1]];
            h.collar_x = parse_cell(fields[col[2]], "collar_x", line_no);
            h.collar_y = parse_cell(fields[col[3]], "collar_y", line_no);
            h.depth_step = depth_step;
            for (Signal s : kAllSignals) h.signals[s];
            holes.push_back(std::move(h));
            last_depth.push_back(0.0);
        }
        HoleSignalSet& h = holes[it->second];
        const double depth = parse_cell(fields[col[4]], "depth", line_no);
        auto& depths = h.signals[Signal::depth];
        if (!depths.empty()) {
            const double step = depth - last_depth[it->second];
            if (!(step > 0.0)) {
                throw Error(ErrorCode::NonMonotonicDepth,
                            "hole " + hole_id + " at line " + std::to_string(line_no));
            }
            if (std::abs(step - depth_step) > kDepthStepTolerance * depth_step) {
                throw Error(ErrorCode::IrregularDepthStep,
                            "hole " + hole_id + " step " + format_number(step) + " at line " +
                                std::to_string(line_no));
            }
        }
        last_depth[it->second] = depth;
        depths.push_back(depth);
        for (std::size_t c = 5; c < kMwdColumns.size(); ++c) {
            const Signal s = *parse_signal_name(kMwdColumns[c]);
            h.signals[s].push_back(parse_cell(fields[col[c]], kMwdColumns[c], line_no));
        }
    }

    for (auto& h : holes) {
        if (h.sample_count() < 2) {
            throw Error(ErrorCode::InvalidHole, "hole " + h.hole_id + " has fewer than 2 samples");
        }
        // Drilled length covered by the samples, each sample standing for one step.
        const auto& d = h.signals[Signal::depth];
        h.hole_depth = d.back() - d.front() + depth_step;
        h.validate();
    }
    return holes;
}

void write_mwd_csv(std::ostream& out, const std::vector<HoleSignalSet>& holes) {
    for (std::size_t c = 0; c < kMwdColumns.size(); ++c) {
        if (c) out << ',';
        out << kMwdColumns[c];
    }
    out << '\n';
    for (const auto& h : holes) {
        const std::size_t n = h.sample_count();
        const std::string head = h.hole_id + ',' + h.blast_id + ',' + format_number(h.collar_x) + ',' +
                                 format_number(h.collar_y);
        for (std::size_t j = 0; j < n; ++j) {
            out << head << ',' << format_number(h.at(Signal::depth)[j]);
            for (std::size_t c = 5; c < kMwdColumns.size(); ++c) {
                out << ',' << format_number(h.at(*parse_signal_name(kMwdColumns[c]))[j]);
            }
            out << '\n';
        }
    }
}

std::vector<LabelRecord> parse_labels_csv(std::istream& in,
                                          const std::vector<std::string>& material_codes) {
    std::string line;
    if (!detail::read_csv_line(in, line)) throw Error(ErrorCode::MissingColumn, "empty labels input");
    const auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "hole_id") throw Error(ErrorCode::MissingColumn, "hole_id");

    enum class Kind { assay, material };
    std::vector<Kind> kinds(header.size(), Kind::assay);
    std::set<std::string> seen;
    for (std::size_t c = 1; c < header.size(); ++c) {
        if (!seen.insert(header[c]).second) {
            throw Error(ErrorCode::UnknownColumn, "duplicate column " + header[c]);
        }
        if (is_assay_code(header[c])) {
            kinds[c] = Kind::assay;
        } else if (std::find(material_codes.begin(), material_codes.end(), header[c]) !=
                   material_codes.end()) {
            kinds[c] = Kind::material;
        } else {
            throw Error(ErrorCode::UnknownColumn, header[c]);
        }
    }

    std::vector<LabelRecord> out;
    std::set<std::string> ids;
    std::size_t line_no = 1;
    while (detail::read_csv_line(in, line)) {
        ++line_no;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() > header.size()) {
            throw Error(ErrorCode::RaggedSignals, "labels line " + std::to_string(line_no));
        }
        LabelRecord rec;
        rec.hole_id = fields[0];
        for (std::size_t c = 1; c < fields.size(); ++c) {
            if (fields[c].empty()) continue;
            double v = 0.0;
            if (!detail::parse_double(fields[c], v) || !std::isfinite(v)) {
                throw Error(ErrorCode::NonFiniteSample,
                            header[c] + " line " + std::to_string(line_no) + ": '" + fields[c] + "'");
            }
            if (kinds[c] == Kind::assay) {
                if (v < 0.0) {
                    throw Error(ErrorCode::NegativeAssay, header[c] + " for hole " + rec.hole_id);
                }
                rec.assays[header[c]] = v;
            } else {
                if (v < 0.0 || v > 100.0) {
                    throw Error(ErrorCode::PercentOutOfRange, header[c] + "=" + fields[c] +
                                                                  " for hole " + rec.hole_id);
                }
                rec.materials[header[c]] = v;
            }
        }
        if (!rec.has_chemistry() && !rec.has_materials()) continue;
        if (!ids.insert(rec.hole_id).second) throw Error(ErrorCode::DuplicateHoleId, rec.hole_id);
        out.push_back(std::move(rec));
    }
    return out;
}

void write_labels_csv(std::ostream& out, const std::vector<LabelRecord>& labels,
                      const std::vector<std::string>& material_codes) {
    out << "hole_id";
    for (auto code : kAssayCodes) out << ',' << code;
    for (const auto& code : material_codes) out << ',' << code;
    out << '\n';
    for (const auto& rec : labels) {
        out << rec.hole_id;
        for (auto code : kAssayCodes) {
            out << ',';
            if (auto v = rec.assay(code)) out << format_number(*v);
        }
        for (const auto& code : material_codes) {
            out << ',';
            if (auto v = rec.material(code)) out << format_number(*v);
        }
        out << '\n';
    }
}

JoinResult join(const std::vector<HoleSignalSet>& holes, const std::vector<LabelRecord>& labels,
                JoinMode mode, std::string region_tag) {
    std::unordered_map<std::string, const LabelRecord*> by_id;
    JoinResult result;
    result.dataset.region_tag = std::move(region_tag);

    std::set<std::string> hole_ids;
    for (const auto& h : holes) hole_ids.insert(h.hole_id);
    for (const auto& rec : labels) {
        if (!hole_ids.count(rec.hole_id)) {
            ++result.dropped_labels;
            continue;
        }
        by_id[rec.hole_id] = &rec;
    }

    for (const auto& h : holes) {
        auto it = by_id.find(h.hole_id);
        if (it == by_id.end()) continue;
        const LabelRecord& rec = *it->second;
        const bool keep = (mode == JoinMode::material && rec.has_materials()) ||
                          (mode == JoinMode::chemistry && rec.has_chemistry()) ||
                          (mode == JoinMode::both && rec.has_materials() && rec.has_chemistry());
        if (keep) result.dataset.holes.push_back({h, rec});
    }
    return result;
}

}  // namespace mwd
