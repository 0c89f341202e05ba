#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srr/core/grid_io.hpp"
#include "srr/metrics/metrics.hpp"
#include "srr/sim/dataset.hpp"

namespace srr {

struct MetricRow {
    std::string record;
    std::string method;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MethodSummary {
    std::string method;
    std::size_t count = 0;
    double psnr_mean = 0.0, psnr_std = 0.0;
    double ssim_mean = 0.0, ssim_std = 0.0;
};

/// Per-record rows plus per-method aggregates (population standard deviation).
struct MetricReport {
    std::string manifest;
    std::vector<MetricRow> rows;
    std::vector<MethodSummary> summaries;
    nlohmann::json extra = nlohmann::json::object();

    void add(MetricRow row) { rows.push_back(std::move(row)); }

    /// Recomputes `summaries` from `rows`, methods in first-appearance order.
    void aggregate() {
        summaries.clear();
        std::vector<std::string> order;
        std::map<std::string, std::vector<const MetricRow*>> by;
        for (const auto& r : rows) {
            if (!by.count(r.method)) order.push_back(r.method);
            by[r.method].push_back(&r);
        }
        for (const auto& m : order) {
            const auto& rs = by[m];
            MethodSummary s;
            s.method = m;
            s.count = rs.size();
            const double n = static_cast<double>(rs.size());
            for (const auto* r : rs) {
                s.psnr_mean += r->psnr / n;
                s.ssim_mean += r->ssim / n;
            }
            for (const auto* r : rs) {
                s.psnr_std += (r->psnr - s.psnr_mean) * (r->psnr - s.psnr_mean) / n;
                s.ssim_std += (r->ssim - s.ssim_mean) * (r->ssim - s.ssim_mean) / n;
            }
            s.psnr_std = std::sqrt(s.psnr_std);
            s.ssim_std = std::sqrt(s.ssim_std);
            summaries.push_back(s);
        }
    }

    const MethodSummary* summary(const std::string& method) const {
        for (const auto& s : summaries)
            if (s.method == method) return &s;
        return nullptr;
    }
};

inline nlohmann::json to_json(const MetricReport& r) {
    nlohmann::json rows = nlohmann::json::array(), sums = nlohmann::json::array();
    for (const auto& x : r.rows) rows.push_back({{"record", x.record}, {"method", x.method}, {"psnr", x.psnr}, {"ssim", x.ssim}});
    for (const auto& s : r.summaries)
        sums.push_back({{"method", s.method},
                        {"count", s.count},
                        {"psnr_mean", s.psnr_mean},
                        {"psnr_std", s.psnr_std},
                        {"ssim_mean", s.ssim_mean},
                        {"ssim_std", s.ssim_std}});
    return {{"manifest", r.manifest}, {"rows", rows}, {"summary", sums}, {"extra", r.extra}};
}

inline MetricReport report_from_json(const nlohmann::json& j) {
    MetricReport r;
    r.manifest = j.value("manifest", "");
    for (const auto& x : j.at("rows"))
        r.rows.push_back({x.at("record").get<std::string>(), x.at("method").get<std::string>(), x.at("psnr").get<double>(),
                          x.at("ssim").get<double>()});
    r.extra = j.value("extra", nlohmann::json::object());
    r.aggregate();
    return r;
}

/// Aligned-column plain-text rendering.
inline std::string format_table(const MetricReport& r) {
    std::ostringstream os;
    os << std::fixed;
    os << std::left << std::setw(12) << "record" << std::setw(14) << "method" << std::right << std::setw(10) << "psnr_db"
       << std::setw(10) << "ssim" << '\n';
    for (const auto& x : r.rows)
        os << std::left << std::setw(12) << x.record << std::setw(14) << x.method << std::right << std::setw(10)
           << std::setprecision(3) << x.psnr << std::setw(10) << std::setprecision(4) << x.ssim << '\n';
    os << '\n'
       << std::left << std::setw(14) << "method" << std::right << std::setw(6) << "n" << std::setw(11) << "psnr_mean"
       << std::setw(10) << "psnr_std" << std::setw(11) << "ssim_mean" << std::setw(10) << "ssim_std" << '\n';
    for (const auto& s : r.summaries)
        os << std::left << std::setw(14) << s.method << std::right << std::setw(6) << s.count << std::setw(11)
           << std::setprecision(3) << s.psnr_mean << std::setw(10) << s.psnr_std << std::setw(11) << std::setprecision(4)
           << s.ssim_mean << std::setw(10) << s.ssim_std << '\n';
    return os.str();
}

/// Scores `<outputs>/<record id>` grids against ground truth for every test
/// record of the manifest.
inline MetricReport evaluate(const Manifest& m, const std::filesystem::path& outputs, const std::string& method,
                             const std::string& split = "test") {
    MetricReport r;
    r.manifest = (m.root / "manifest.json").string();
    for (auto i : m.split_indices(split)) {
        const auto& e = m.records[i];
        const auto stem = outputs / e.id;
        require(std::filesystem::exists(header_path(stem)), ErrorCategory::io,
                "missing output for record " + e.id + " (expected " + header_path(stem).string() + ")");
        const auto out = read_grid(stem);
        const auto gt = read_grid(m.root / e.gt);
        require(out.dims() == gt.dims(), ErrorCategory::dimension,
                "output for record " + e.id + " has dims " + dims_string(out.dims()) + ", expected " + dims_string(gt.dims()));
        r.add({e.id, method, psnr(gt, out), ssim(gt, out)});
    }
    r.aggregate();
    return r;
}

}  // namespace srr
