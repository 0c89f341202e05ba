#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include "srr/gan/train.hpp"
#include "srr/metrics/report.hpp"
#include "srr/solver/variational.hpp"

namespace srr {

struct CompareConfig {
    SolverConfig solver;
    double s1_af = 0.0;          // HR mask AF for strategy 1; 0 matches each record's equivalent AF
    Dims s1_center;              // HR calibration block; empty uses the dataset's LR center size
    double af_tolerance = 0.05;  // relative
    std::uint64_t seed = 0;
    std::string split = "test";
    std::filesystem::path out_dir;  // per-strategy images go here when set
};

inline const char* const kStrategyNames[3] = {"strategy1", "strategy2", "strategy3"};

inline std::string format_af(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline void check_equivalent_af(double af1, double af23, double tolerance, const std::string& where) {
    require(std::abs(af1 - af23) <= tolerance * af23, ErrorCategory::config,
            "equivalent AF mismatch" + where + ": strategy1 AF " + format_af(af1) + " vs strategy2/3 AF " +
                format_af(af23));
}

/// Strategy 1: HR acquisition at the equivalent AF, variational HR recon.
inline ComplexGrid strategy1_recon(const Record& r, const Manifest& m, const CompareConfig& cfg, std::size_t index,
                                   double af, SamplingMask* mask_out = nullptr) {
    const Dims hr = m.spec.hr_dims();
    MaskSpec ms;
    ms.dims = hr;
    ms.target_af = af;
    ms.center_size = cfg.s1_center.empty() ? m.spec.mask.center_size : cfg.s1_center;
    ms.seed = derive_seed(cfg.seed, {kHrMaskStream, index});
    ms.af_tolerance = cfg.af_tolerance;
    const auto mask = poisson_disk_mask(ms);
    const auto y = acquire(r.gt, r.sens, mask, hr, m.spec.phantom.noise_sigma, derive_seed(cfg.seed, {kHrNoiseStream, index}));
    ForwardModel model(mask, hr, hr, r.sens);
    if (mask_out != nullptr) *mask_out = mask;
    return solve_variational(model, y, cfg.solver).x;
}

/// Strategy 2: LR variational recon with the coil maps taken to the LR grid,
/// then k-space interpolation.
inline ComplexGrid strategy2_recon(const Record& r, const Manifest& m, const SolverConfig& solver) {
    const auto& lr = m.spec.lr_dims;
    ForwardModel model(r.mask, lr, lr, downsample_sens(r.sens, lr));
    return strategy2_pipeline(model, r.y, m.spec.hr_dims(), solver);
}

/// Runs all three strategies on every record of the split and scores them.
/// Refuses when the strategies' equivalent AFs differ by more than the tolerance.
inline MetricReport compare_strategies(const Manifest& m, const gan::LoadedModel& model, const CompareConfig& cfg) {
    cfg.solver.validate();
    require(cfg.af_tolerance >= 0.0, ErrorCategory::config, "AF tolerance must be >= 0");
    require(cfg.s1_af == 0.0 || cfg.s1_af >= 1.0, ErrorCategory::config, "strategy1 AF must be >= 1");
    MetricReport rep;
    rep.manifest = (m.root / "manifest.json").string();
    const auto idx = m.split_indices(cfg.split);
    nlohmann::json afs = nlohmann::json::array();
    for (auto i : idx) {
        const auto r = load_record(m, i);
        const double af23 = equivalent_af(r.mask, m.spec.hr_dims()).value();
        // A configured AF is checked before any reconstruction work.
        const double target = cfg.s1_af > 0.0 ? cfg.s1_af : af23;
        check_equivalent_af(target, af23, cfg.af_tolerance, " (configured, record " + r.id + ")");
        SamplingMask hr_mask;
        const auto x1 = strategy1_recon(r, m, cfg, i, target, &hr_mask);
        const double af1 = hr_mask.achieved_af();
        check_equivalent_af(af1, af23, cfg.af_tolerance, " (record " + r.id + ")");
        const auto x2 = strategy2_recon(r, m, cfg.solver);
        const auto x3 = gan::infer(model, r.y, r.mask, r.sens, m.spec.hr_dims());
        const ComplexGrid* outs[3] = {&x1, &x2, &x3};
        for (int s = 0; s < 3; ++s) {
            rep.add({r.id, kStrategyNames[s], psnr(r.gt, *outs[s]), ssim(r.gt, *outs[s])});
            if (!cfg.out_dir.empty()) write_grid(cfg.out_dir / kStrategyNames[s] / r.id, *outs[s]);
        }
        afs.push_back({{"record", r.id}, {"strategy1", af1}, {"strategy2", af23}, {"strategy3", af23}});
    }
    rep.aggregate();
    rep.extra["equivalent_af"] = afs;
    return rep;
}

}  // namespace srr
