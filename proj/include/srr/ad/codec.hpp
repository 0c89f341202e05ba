#pragma once

#include <vector>

#include "srr/ad/tape.hpp"
#include "srr/core/grid.hpp"

namespace srr::ad {

/// Complex image → real tensor [2, spatial...] (channel 0 real, channel 1 imaginary).
inline std::vector<double> to_channels(const ComplexGrid& g) {
    const std::size_t n = g.size();
    std::vector<double> out(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = g[i].real();
        out[n + i] = g[i].imag();
    }
    return out;
}

inline Dims channel_dims(const Dims& spatial) {
    Dims d{2};
    d.insert(d.end(), spatial.begin(), spatial.end());
    return d;
}

inline ComplexGrid from_channels(const std::vector<double>& v, const Dims& spatial) {
    ComplexGrid g(spatial, Domain::image);
    const std::size_t n = g.size();
    require(v.size() == 2 * n, ErrorCategory::dimension, "channel tensor does not match " + dims_string(spatial));
    for (std::size_t i = 0; i < n; ++i) g[i] = {v[i], v[n + i]};
    return g;
}

inline Var constant_image(Tape& t, const ComplexGrid& g) { return t.constant(channel_dims(g.dims()), to_channels(g)); }

inline ComplexGrid to_grid(const Var& v) {
    const Dims& d = v.dims();
    require(d.size() >= 2 && d[0] == 2, ErrorCategory::dimension, "expected a [2, spatial...] tensor");
    return from_channels(v.value(), Dims(d.begin() + 1, d.end()));
}

}  // namespace srr::ad
