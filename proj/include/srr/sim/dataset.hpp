#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srr/core/grid_io.hpp"
#include "srr/core/seed.hpp"
#include "srr/sampling/masks.hpp"
#include "srr/sim/phantom.hpp"

namespace srr {

enum class MaskKind { poisson, uniform, center };

inline std::string mask_kind_name(MaskKind k) {
    switch (k) {
        case MaskKind::poisson: return "poisson";
        case MaskKind::uniform: return "uniform";
        case MaskKind::center: return "center";
    }
    return "poisson";
}

inline MaskKind parse_mask_kind(const std::string& s) {
    if (s == "poisson") return MaskKind::poisson;
    if (s == "uniform") return MaskKind::uniform;
    if (s == "center") return MaskKind::center;
    fail(ErrorCategory::usage, "unknown mask kind '" + s + "' (expected poisson|uniform|center)");
}

inline SamplingMask make_mask(MaskKind kind, const MaskSpec& spec) {
    switch (kind) {
        case MaskKind::poisson: return poisson_disk_mask(spec);
        case MaskKind::uniform: return uniform_random_mask(spec);
        case MaskKind::center: return center_block_mask(spec.dims, spec.center_size);
    }
    return poisson_disk_mask(spec);
}

/// Everything needed to regenerate a dataset bit-for-bit.
struct DatasetSpec {
    std::size_t records = 10;
    Dims lr_dims{32, 32};
    std::size_t coils = 8;
    double train_fraction = 0.8;
    double val_fraction = 0.0;
    std::uint64_t seed = 0;
    PhantomSpec phantom;  // hr_dims, shape count, noise sigma; per-record seed overrides phantom.seed
    MaskSpec mask;        // LR mask; per-record seed overrides mask.seed
    MaskKind mask_kind = MaskKind::poisson;

    const Dims& hr_dims() const { return phantom.hr_dims; }
};

struct RecordEntry {
    std::string id;
    std::string split;  // train | val | test
    std::uint64_t phantom_seed = 0, sens_seed = 0, mask_seed = 0, noise_seed = 0;
    // Grid stems relative to the manifest directory.
    std::string gt, sens, y, mask;
};

struct Manifest {
    int schema_version = 1;
    DatasetSpec spec;
    std::vector<RecordEntry> records;
    std::filesystem::path root;  // directory holding manifest.json; not serialized

    std::vector<std::size_t> split_indices(const std::string& split) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].split == split) out.push_back(i);
        return out;
    }
};

/// One loaded record, dim-checked.
struct Record {
    std::string id;
    std::string split;
    ComplexGrid gt;
    SensitivitySet sens;
    ComplexGrid y;
    SamplingMask mask;

    ForwardModel model(const Dims& lr_dims) const { return ForwardModel(mask, lr_dims, gt.dims(), sens); }
};

// ---- JSON -----------------------------------------------------------------

inline nlohmann::json to_json(const PhantomSpec& p) {
    return {{"hr_dims", p.hr_dims},       {"shapes", p.shapes},         {"intensity_min", p.intensity_min},
            {"intensity_max", p.intensity_max}, {"complex_phase", p.complex_phase}, {"edge_width", p.edge_width},
            {"seed", p.seed},             {"noise_sigma", p.noise_sigma}};
}

inline PhantomSpec phantom_from_json(const nlohmann::json& j) {
    PhantomSpec p;
    p.hr_dims = j.at("hr_dims").get<Dims>();
    p.shapes = j.at("shapes").get<std::size_t>();
    p.intensity_min = j.at("intensity_min").get<double>();
    p.intensity_max = j.at("intensity_max").get<double>();
    p.complex_phase = j.at("complex_phase").get<bool>();
    p.edge_width = j.at("edge_width").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    p.noise_sigma = j.at("noise_sigma").get<double>();
    return p;
}

inline nlohmann::json to_json(const MaskSpec& m) {
    return {{"dims", m.dims},
            {"target_af", m.target_af},
            {"center_size", m.center_size},
            {"seed", m.seed},
            {"af_tolerance", m.af_tolerance},
            {"density_slope", m.density_slope},
            {"density_exponent", m.density_exponent}};
}

inline MaskSpec mask_spec_from_json(const nlohmann::json& j) {
    MaskSpec m;
    m.dims = j.at("dims").get<Dims>();
    m.target_af = j.at("target_af").get<double>();
    m.center_size = j.at("center_size").get<Dims>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.af_tolerance = j.at("af_tolerance").get<double>();
    m.density_slope = j.at("density_slope").get<double>();
    m.density_exponent = j.at("density_exponent").get<double>();
    return m;
}

inline nlohmann::json to_json(const DatasetSpec& d) {
    return {{"records", d.records},
            {"lr_dims", d.lr_dims},
            {"coils", d.coils},
            {"train_fraction", d.train_fraction},
            {"val_fraction", d.val_fraction},
            {"seed", d.seed},
            {"phantom", to_json(d.phantom)},
            {"mask", to_json(d.mask)},
            {"mask_kind", mask_kind_name(d.mask_kind)}};
}

inline DatasetSpec dataset_spec_from_json(const nlohmann::json& j) {
    DatasetSpec d;
    d.records = j.at("records").get<std::size_t>();
    d.lr_dims = j.at("lr_dims").get<Dims>();
    d.coils = j.at("coils").get<std::size_t>();
    d.train_fraction = j.at("train_fraction").get<double>();
    d.val_fraction = j.at("val_fraction").get<double>();
    d.seed = j.at("seed").get<std::uint64_t>();
    d.phantom = phantom_from_json(j.at("phantom"));
    d.mask = mask_spec_from_json(j.at("mask"));
    d.mask_kind = parse_mask_kind(j.at("mask_kind").get<std::string>());
    return d;
}

inline nlohmann::json to_json(const Manifest& m) {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : m.records)
        recs.push_back({{"id", r.id},
                        {"split", r.split},
                        {"seeds", {{"phantom", r.phantom_seed}, {"sens", r.sens_seed}, {"mask", r.mask_seed},
                                   {"noise", r.noise_seed}}},
                        {"files", {{"gt", r.gt}, {"sens", r.sens}, {"y", r.y}, {"mask", r.mask}}}});
    return {{"schema_version", m.schema_version}, {"spec", to_json(m.spec)}, {"records", recs}};
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    m.schema_version = j.at("schema_version").get<int>();
    require(m.schema_version == 1, ErrorCategory::format,
            "unsupported manifest schema version " + std::to_string(m.schema_version));
    m.spec = dataset_spec_from_json(j.at("spec"));
    for (const auto& r : j.at("records")) {
        RecordEntry e;
        e.id = r.at("id").get<std::string>();
        e.split = r.at("split").get<std::string>();
        const auto& s = r.at("seeds");
        e.phantom_seed = s.at("phantom").get<std::uint64_t>();
        e.sens_seed = s.at("sens").get<std::uint64_t>();
        e.mask_seed = s.at("mask").get<std::uint64_t>();
        e.noise_seed = s.at("noise").get<std::uint64_t>();
        const auto& f = r.at("files");
        e.gt = f.at("gt").get<std::string>();
        e.sens = f.at("sens").get<std::string>();
        e.y = f.at("y").get<std::string>();
        e.mask = f.at("mask").get<std::string>();
        m.records.push_back(std::move(e));
    }
    return m;
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    require(out.good(), ErrorCategory::io, "cannot write " + (dir / "manifest.json").string());
    out << to_json(m).dump(2) << '\n';
}

/// Accepts either the manifest file or its directory.
inline Manifest read_manifest(const std::filesystem::path& path) {
    const auto file = std::filesystem::is_directory(path) ? path / "manifest.json" : path;
    std::ifstream in(file);
    require(in.good(), ErrorCategory::io, "cannot open manifest " + file.string());
    nlohmann::json j;
    try {
        in >> j;
        auto m = manifest_from_json(j);
        m.root = file.parent_path();
        return m;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::format, "malformed manifest " + file.string() + ": " + e.what());
    }
}

// ---- generation -------------------------------------------------------------

/// Assigns ids, splits, seeds and file stems. No files are touched.
inline Manifest plan_dataset(const DatasetSpec& spec) {
    require(spec.train_fraction >= 0.0 && spec.val_fraction >= 0.0 && spec.train_fraction + spec.val_fraction <= 1.0,
            ErrorCategory::config, "split fractions must be nonnegative and sum to at most 1");
    require(spec.mask.dims == spec.lr_dims, ErrorCategory::config,
            "mask dims " + dims_string(spec.mask.dims) + " must equal lr dims " + dims_string(spec.lr_dims));
    Manifest m;
    m.spec = spec;
    const auto n = spec.records;
    const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
    const auto n_val = std::min(n - n_train, static_cast<std::size_t>(std::llround(spec.val_fraction * static_cast<double>(n))));
    for (std::size_t i = 0; i < n; ++i) {
        RecordEntry e;
        std::ostringstream id;
        id << "rec" << std::setw(4) << std::setfill('0') << i;
        e.id = id.str();
        e.split = i < n_train ? "train" : (i < n_train + n_val ? "val" : "test");
        e.phantom_seed = derive_seed(spec.seed, {i, kPhantomStream});
        e.sens_seed = derive_seed(spec.seed, {i, kSensStream});
        e.mask_seed = derive_seed(spec.seed, {i, kMaskStream});
        e.noise_seed = derive_seed(spec.seed, {i, kNoiseStream});
        const std::string base = "records/" + e.id + "_";
        e.gt = base + "gt";
        e.sens = base + "sens";
        e.y = base + "y";
        e.mask = base + "mask";
        m.records.push_back(std::move(e));
    }
    return m;
}

struct RecordData {
    ComplexGrid gt;
    SensitivitySet sens;
    SamplingMask mask;
    ComplexGrid y;
};

inline RecordData generate_record(const DatasetSpec& spec, const RecordEntry& e) {
    PhantomSpec ps = spec.phantom;
    ps.seed = e.phantom_seed;
    MaskSpec ms = spec.mask;
    ms.seed = e.mask_seed;
    RecordData r;
    r.gt = make_phantom(ps);
    r.sens = make_sens(spec.hr_dims(), spec.coils, e.sens_seed);
    r.mask = make_mask(spec.mask_kind, ms);
    r.y = acquire(r.gt, r.sens, r.mask, spec.lr_dims, ps.noise_sigma, e.noise_seed);
    return r;
}

/// Writes every record of `m` under `dir` plus the manifest itself.
inline void materialize_dataset(Manifest& m, const std::filesystem::path& dir) {
    m.root = dir;
    if (m.records.empty()) {
        write_manifest(m, dir);
        return;
    }
    for (const auto& e : m.records) {
        const auto r = generate_record(m.spec, e);
        write_grid(dir / e.gt, r.gt);
        write_grid(dir / e.sens, r.sens.maps());
        write_grid(dir / e.y, r.y);
        write_grid(dir / e.mask, r.mask.to_grid());
    }
    write_manifest(m, dir);
}

inline Manifest build_dataset(const DatasetSpec& spec, const std::filesystem::path& out_dir) {
    auto m = plan_dataset(spec);
    materialize_dataset(m, out_dir);
    return m;
}

inline Record load_record(const Manifest& m, std::size_t index) {
    require(index < m.records.size(), ErrorCategory::usage, "record index out of range");
    const auto& e = m.records[index];
    Record r;
    r.id = e.id;
    r.split = e.split;
    r.gt = read_grid(m.root / e.gt);
    r.sens = SensitivitySet(read_grid(m.root / e.sens));
    r.y = read_grid(m.root / e.y);
    r.mask = SamplingMask::from_grid(read_grid(m.root / e.mask), m.spec.mask.center_size);
    const auto& lr = m.spec.lr_dims;
    require(r.gt.dims() == m.spec.hr_dims(), ErrorCategory::dimension, "record " + e.id + ": gt dims mismatch");
    require(r.sens.spatial_dims() == r.gt.dims() && r.sens.coils() == m.spec.coils, ErrorCategory::dimension,
            "record " + e.id + ": sensitivity dims mismatch");
    require(r.mask.dims() == lr, ErrorCategory::dimension, "record " + e.id + ": mask dims mismatch");
    Dims ydims{m.spec.coils};
    ydims.insert(ydims.end(), lr.begin(), lr.end());
    require(r.y.dims() == ydims, ErrorCategory::dimension, "record " + e.id + ": data dims mismatch");
    return r;
}

}  // namespace srr
