#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srr/ad/tape.hpp"
#include "srr/core/grid_io.hpp"

namespace srr::ad {

struct Parameter {
    std::string name;
    Dims dims;
    std::vector<double> value;

    bool operator==(const Parameter&) const = default;
};

/// Ordered collection of named trainable tensors.
class ParamSet {
public:
    Parameter& add(std::string name, Dims dims, std::vector<double> value) {
        require(find(name) == nullptr, ErrorCategory::config, "duplicate parameter '" + name + "'");
        require(value.size() == element_count(dims), ErrorCategory::dimension, "parameter '" + name + "' size mismatch");
        params_.push_back({std::move(name), std::move(dims), std::move(value)});
        return params_.back();
    }

    Parameter& add_zeros(std::string name, Dims dims) {
        const auto n = element_count(dims);
        return add(std::move(name), std::move(dims), std::vector<double>(n, 0.0));
    }

    /// Zero-mean normal entries with standard deviation sqrt(2 / fan_in).
    Parameter& add_he(std::string name, Dims dims, std::size_t fan_in, std::mt19937_64& rng) {
        std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
        std::vector<double> v(element_count(dims));
        for (auto& x : v) x = nd(rng);
        return add(std::move(name), std::move(dims), std::move(v));
    }

    const Parameter* find(const std::string& name) const {
        for (const auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }
    Parameter* find(const std::string& name) {
        for (auto& p : params_)
            if (p.name == name) return &p;
        return nullptr;
    }
    const Parameter& at(const std::string& name) const {
        const auto* p = find(name);
        require(p != nullptr, ErrorCategory::config, "unknown parameter '" + name + "'");
        return *p;
    }
    Parameter& at(const std::string& name) {
        auto* p = find(name);
        require(p != nullptr, ErrorCategory::config, "unknown parameter '" + name + "'");
        return *p;
    }

    std::size_t size() const noexcept { return params_.size(); }
    std::size_t count() const noexcept {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.value.size();
        return n;
    }
    bool all_finite() const {
        for (const auto& p : params_)
            for (double v : p.value)
                if (!std::isfinite(v)) return false;
        return true;
    }

    auto begin() noexcept { return params_.begin(); }
    auto end() noexcept { return params_.end(); }
    auto begin() const noexcept { return params_.begin(); }
    auto end() const noexcept { return params_.end(); }
    Parameter& operator[](std::size_t i) { return params_[i]; }
    const Parameter& operator[](std::size_t i) const { return params_[i]; }

    bool operator==(const ParamSet&) const = default;

private:
    std::vector<Parameter> params_;
};

/// Tape leaves for every parameter, in set order.
struct BoundParams {
    std::vector<std::string> names;
    std::vector<Var> vars;

    const Var& operator[](std::size_t i) const { return vars[i]; }
    const Var& operator[](const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return vars[i];
        fail(ErrorCategory::config, "unbound parameter '" + name + "'");
    }
};

inline BoundParams bind(Tape& tape, const ParamSet& params, bool requires_grad = true) {
    BoundParams b;
    for (const auto& p : params) {
        b.names.push_back(p.name);
        b.vars.push_back(tape.leaf(p.dims, p.value, requires_grad));
    }
    return b;
}

// ---- checkpoint -------------------------------------------------------------

inline constexpr std::string_view kCheckpointMagic = "SRRCKPT/1";

/// Layout: magic line, decimal index length line, JSON index, then raw
/// little-endian f64 blocks at the offsets named in the index (relative to the
/// first byte after the index).
inline void save_checkpoint(const std::filesystem::path& path, const std::vector<const ParamSet*>& sets,
                            const std::vector<std::string>& prefixes, const nlohmann::json& meta) {
    require(sets.size() == prefixes.size(), ErrorCategory::config, "checkpoint prefix count mismatch");
    nlohmann::json index;
    index["meta"] = meta;
    index["params"] = nlohmann::json::array();
    std::size_t offset = 0;
    for (std::size_t s = 0; s < sets.size(); ++s)
        for (const auto& p : *sets[s]) {
            index["params"].push_back(
                {{"name", prefixes[s] + p.name}, {"dims", p.dims}, {"offset", offset}, {"count", p.value.size()}});
            offset += p.value.size() * sizeof(double);
        }
    const std::string text = index.dump();
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCategory::io, "cannot write checkpoint " + path.string());
    out << kCheckpointMagic << '\n' << text.size() << '\n' << text << '\n';
    for (const auto* set : sets)
        for (const auto& p : *set)
            for (double v : p.value) {
                const double le = srr::detail::to_little(v);
                out.write(reinterpret_cast<const char*>(&le), sizeof(le));
            }
    require(out.good(), ErrorCategory::io, "write failed for checkpoint " + path.string());
}

struct LoadedCheckpoint {
    nlohmann::json meta;
    ParamSet params;  // full prefixed names
};

inline LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCategory::io, "cannot open checkpoint " + path.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == kCheckpointMagic, ErrorCategory::format,
            "missing SRRCKPT/1 magic in " + path.string());
    require(static_cast<bool>(std::getline(in, line)), ErrorCategory::format, "missing index length");
    std::size_t len = 0;
    try {
        len = std::stoull(line);
    } catch (const std::exception&) {
        fail(ErrorCategory::format, "malformed index length in " + path.string());
    }
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    require(in.good() && in.get() == '\n', ErrorCategory::format, "truncated checkpoint index");
    const auto data_start = in.tellg();
    LoadedCheckpoint ck;
    nlohmann::json index;
    try {
        index = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::format, std::string("malformed checkpoint index: ") + e.what());
    }
    ck.meta = index.value("meta", nlohmann::json::object());
    for (const auto& e : index.at("params")) {
        const auto dims = e.at("dims").get<Dims>();
        const auto count = e.at("count").get<std::size_t>();
        require(count == element_count(dims), ErrorCategory::format, "checkpoint entry count/dims mismatch");
        in.seekg(data_start + static_cast<std::streamoff>(e.at("offset").get<std::size_t>()));
        std::vector<double> v(count);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(double)));
        require(in.good(), ErrorCategory::format, "truncated checkpoint data for " + e.at("name").get<std::string>());
        for (auto& x : v) x = srr::detail::to_little(x);
        ck.params.add(e.at("name").get<std::string>(), dims, std::move(v));
    }
    return ck;
}

/// Copies `prefix`-named entries of a loaded checkpoint into `target` (names without prefix).
inline void restore(ParamSet& target, const ParamSet& loaded, const std::string& prefix) {
    for (auto& p : target) {
        const auto& src = loaded.at(prefix + p.name);
        require(src.dims == p.dims, ErrorCategory::dimension,
                "checkpoint parameter " + prefix + p.name + " has dims " + dims_string(src.dims) + ", expected " +
                    dims_string(p.dims));
        p.value = src.value;
    }
}

}  // namespace srr::ad
