#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "srr/core/grid.hpp"

namespace srr {

enum class Precision { c64, c128 };

inline std::string precision_name(Precision p) { return p == Precision::c64 ? "c64" : "c128"; }

inline std::size_t bytes_per_sample(Precision p) { return p == Precision::c64 ? 8 : 16; }

inline constexpr std::string_view kGridMagic = "SRRGRID/1";

struct GridHeader {
    Dims dims;
    Precision precision = Precision::c128;
    Domain domain = Domain::image;
    // Optional fifth header line: "order row-major <name>...". Row-major is the only order.
    std::vector<std::string> dim_names;
};

namespace detail {

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

inline std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
    auto p = stem;
    if (p.extension() == ".hdr" || p.extension() == ".dat") p.replace_extension();
    p += ext;
    return p;
}

}  // namespace detail

inline std::filesystem::path header_path(const std::filesystem::path& stem) {
    return detail::with_ext(stem, ".hdr");
}
inline std::filesystem::path data_path(const std::filesystem::path& stem) {
    return detail::with_ext(stem, ".dat");
}

inline std::string format_header(const GridHeader& h) {
    std::ostringstream os;
    os << kGridMagic << '\n';
    for (std::size_t i = 0; i < h.dims.size(); ++i) os << (i ? " " : "") << h.dims[i];
    os << '\n' << precision_name(h.precision) << '\n' << domain_name(h.domain) << '\n';
    if (!h.dim_names.empty()) {
        os << "order row-major";
        for (const auto& n : h.dim_names) os << ' ' << n;
        os << '\n';
    }
    return os.str();
}

inline GridHeader parse_header(std::istream& in) {
    GridHeader h;
    std::string line;
    require(static_cast<bool>(std::getline(in, line)) && line == kGridMagic, ErrorCategory::format,
            "missing SRRGRID/1 magic");
    require(static_cast<bool>(std::getline(in, line)), ErrorCategory::format, "missing dims line");
    {
        std::istringstream ds(line);
        long long d = 0;
        while (ds >> d) {
            require(d > 0, ErrorCategory::format, "non-positive extent in header");
            h.dims.push_back(static_cast<std::size_t>(d));
        }
        require(ds.eof() && !h.dims.empty(), ErrorCategory::format, "malformed dims line '" + line + "'");
    }
    require(static_cast<bool>(std::getline(in, line)), ErrorCategory::format, "missing precision line");
    if (line == "c64") h.precision = Precision::c64;
    else if (line == "c128") h.precision = Precision::c128;
    else fail(ErrorCategory::format, "unsupported precision '" + line + "'");
    require(static_cast<bool>(std::getline(in, line)), ErrorCategory::format, "missing domain line");
    h.domain = parse_domain(line);
    if (std::getline(in, line) && !line.empty()) {
        std::istringstream os(line);
        std::string word, order;
        os >> word >> order;
        require(word == "order" && order == "row-major", ErrorCategory::format,
                "unexpected header line '" + line + "'");
        while (os >> word) h.dim_names.push_back(word);
        require(h.dim_names.empty() || h.dim_names.size() == h.dims.size(), ErrorCategory::format,
                "dimension names do not match rank");
    }
    return h;
}

inline GridHeader read_header(const std::filesystem::path& stem) {
    std::ifstream in(header_path(stem));
    require(in.good(), ErrorCategory::io, "cannot open " + header_path(stem).string());
    return parse_header(in);
}

template <class Real>
void write_grid(const std::filesystem::path& stem, const BasicGrid<Real>& g,
                Precision precision = std::is_same_v<Real, float> ? Precision::c64 : Precision::c128,
                std::vector<std::string> dim_names = {}) {
    GridHeader h{g.dims(), precision, g.domain(), std::move(dim_names)};
    if (!stem.parent_path().empty()) std::filesystem::create_directories(stem.parent_path());
    {
        std::ofstream hdr(header_path(stem), std::ios::binary | std::ios::trunc);
        require(hdr.good(), ErrorCategory::io, "cannot write " + header_path(stem).string());
        hdr << format_header(h);
        require(hdr.good(), ErrorCategory::io, "write failed for " + header_path(stem).string());
    }
    std::ofstream dat(data_path(stem), std::ios::binary | std::ios::trunc);
    require(dat.good(), ErrorCategory::io, "cannot write " + data_path(stem).string());
    auto put = [&](auto v) {
        v = detail::to_little(v);
        dat.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    for (const auto& v : g.data()) {
        if (precision == Precision::c64) {
            put(static_cast<float>(v.real()));
            put(static_cast<float>(v.imag()));
        } else {
            put(static_cast<double>(v.real()));
            put(static_cast<double>(v.imag()));
        }
    }
    require(dat.good(), ErrorCategory::io, "write failed for " + data_path(stem).string());
}

/// Reads a grid pair into 64-bit storage. c64 files widen exactly.
inline ComplexGrid read_grid(const std::filesystem::path& stem, GridHeader* header_out = nullptr) {
    GridHeader h = read_header(stem);
    const auto n = element_count(h.dims);
    const auto expected = n * bytes_per_sample(h.precision);
    std::error_code ec;
    const auto actual = std::filesystem::file_size(data_path(stem), ec);
    require(!ec, ErrorCategory::io, "cannot stat " + data_path(stem).string());
    require(actual == expected, ErrorCategory::format,
            "data length mismatch for " + data_path(stem).string() + ": header implies " +
                std::to_string(expected) + " bytes, file has " + std::to_string(actual));
    std::ifstream in(data_path(stem), std::ios::binary);
    require(in.good(), ErrorCategory::io, "cannot open " + data_path(stem).string());
    std::vector<cplx> data(n);
    if (h.precision == Precision::c64) {
        std::vector<float> raw(2 * n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(float)));
        for (std::size_t i = 0; i < n; ++i)
            data[i] = {detail::to_little(raw[2 * i]), detail::to_little(raw[2 * i + 1])};
    } else {
        std::vector<double> raw(2 * n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
        for (std::size_t i = 0; i < n; ++i)
            data[i] = {detail::to_little(raw[2 * i]), detail::to_little(raw[2 * i + 1])};
    }
    require(in.good(), ErrorCategory::io, "read failed for " + data_path(stem).string());
    ComplexGrid g(h.dims, std::move(data), h.domain);
    require(g.all_finite(), ErrorCategory::numeric, "non-finite sample in " + data_path(stem).string());
    if (header_out) *header_out = h;
    return g;
}

}  // namespace srr
