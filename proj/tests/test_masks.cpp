#include <gtest/gtest.h>

#include "srr/ops/operators.hpp"
#include "srr/sampling/masks.hpp"

using namespace srr;

namespace {

MaskSpec spec_for(Dims dims, double af, Dims center, std::uint64_t seed = 1) {
    MaskSpec s;
    s.dims = std::move(dims);
    s.target_af = af;
    s.center_size = std::move(center);
    s.seed = seed;
    return s;
}

}  // namespace

TEST(CenterMask, CountAndPlacement) {
    const auto m = center_block_mask({8, 8}, {4, 4});
    EXPECT_EQ(m.count(), 16u);
    for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x) EXPECT_EQ(m[y * 8 + x], y >= 2 && y < 6 && x >= 2 && x < 6);
    EXPECT_EQ(center_block_mask({8, 8}, {8, 8}).count(), 64u);
}

TEST(CenterMask, PaperCalibrationRatio) {
    const auto m = center_block_mask({168, 140}, {24, 24});
    EXPECT_DOUBLE_EQ(m.achieved_af(), 23520.0 / 576.0);
}

TEST(UniformMask, ExactCountWithCenter) {
    const auto m = uniform_random_mask(spec_for({64, 64}, 4, {8, 8}));
    EXPECT_EQ(m.count(), 1024u);
    EXPECT_TRUE(m.center_fully_sampled());
    const auto m2 = uniform_random_mask(spec_for({64, 64}, 4, {8, 8}, 2));
    EXPECT_EQ(m2.count(), 1024u);
    EXPECT_FALSE(m == m2);
    EXPECT_EQ(uniform_random_mask(spec_for({16, 16}, 1, {4, 4})).count(), 256u);
}

TEST(PoissonMask, FullMaskAtAfOne) {
    const auto m = poisson_disk_mask(spec_for({32, 32}, 1, {8, 8}));
    EXPECT_EQ(m.count(), 1024u);
    EXPECT_DOUBLE_EQ(m.achieved_af(), 1.0);
}

TEST(PoissonMask, DesktopAfWithinTolerance) {
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto m = poisson_disk_mask(spec_for({32, 32}, 4, {8, 8}, seed));
        EXPECT_NEAR(m.achieved_af(), 4.0, 0.2);
        EXPECT_TRUE(m.center_fully_sampled());
    }
}

TEST(PoissonMask, PaperGeometry) {
    const auto m = poisson_disk_mask(spec_for({168, 140}, 4, {24, 24}, 9));
    EXPECT_GE(m.achieved_af(), 3.8);
    EXPECT_LE(m.achieved_af(), 4.2);
    EXPECT_TRUE(m.center_fully_sampled());
    EXPECT_NEAR(equivalent_af(m, {336, 280}).value(), 16.0, 0.8);
}

TEST(PoissonMask, Deterministic) {
    const auto s = spec_for({32, 32}, 4, {8, 8}, 5);
    EXPECT_EQ(poisson_disk_mask(s), poisson_disk_mask(s));
}

TEST(PoissonMask, PairwiseSpacingRespectsRadius) {
    const auto s = spec_for({64, 64}, 8, {8, 8}, 3);
    const auto res = poisson_disk_search(s);
    const PoissonDiskSampler sampler(s);
    std::vector<std::pair<std::size_t, std::size_t>> pts;
    for (std::size_t i = 0; i < res.mask.size(); ++i)
        if (res.mask[i] && !res.mask.in_center(i)) pts.emplace_back(i / 64, i % 64);
    // Smallest radius any dart can carry: the one at the center-block edge.
    const double r_min = sampler.radius_at(res.base_radius, 32 - 4, 32);
    double closest = 1e9;
    for (std::size_t a = 0; a < pts.size(); ++a)
        for (std::size_t b = a + 1; b < pts.size(); ++b)
            closest = std::min(closest, std::hypot(double(pts[a].first) - double(pts[b].first),
                                                   double(pts[a].second) - double(pts[b].second)));
    EXPECT_GE(closest, r_min - 1e-9);
}

TEST(PoissonMask, DensityFallsWithRadius) {
    const auto m = poisson_disk_mask(spec_for({64, 64}, 4, {8, 8}, 4));
    std::size_t inner = 0, inner_n = 0, outer = 0, outer_n = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m.in_center(i)) continue;
        const double d = std::hypot(double(i / 64) - 32.0, double(i % 64) - 32.0);
        if (d < 16) {
            inner += m[i];
            ++inner_n;
        } else if (d > 24) {
            outer += m[i];
            ++outer_n;
        }
    }
    EXPECT_GT(double(inner) / inner_n, double(outer) / outer_n);
}

TEST(PoissonMask, UnreachableAfIsConfigError) {
    try {
        (void)poisson_disk_mask(spec_for({16, 16}, 8, {8, 8}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::config);
    }
}
