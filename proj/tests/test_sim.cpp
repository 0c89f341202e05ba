#include <gtest/gtest.h>

#include <fstream>

#include "srr/sim/dataset.hpp"
#include "test_support.hpp"

using namespace srr;

TEST(Phantom, ZeroShapesGiveZeroImage) {
    PhantomSpec s;
    s.shapes = 0;
    EXPECT_EQ(max_abs(make_phantom(s)), 0.0);
}

TEST(Phantom, DeterministicAndBounded) {
    PhantomSpec s;
    s.seed = 17;
    EXPECT_EQ(make_phantom(s).storage(), make_phantom(s).storage());
    double peak = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        s.seed = seed;
        s.complex_phase = seed % 2 == 1;
        peak = std::max(peak, max_abs(make_phantom(s)));
    }
    EXPECT_LE(peak, 1.0);
    EXPECT_GT(peak, 0.5);
}

TEST(Sens, SingleCoilIsAllOnes) {
    const auto s = make_sens({16, 16}, 1, 3);
    for (auto v : s.maps().data()) EXPECT_LT(std::abs(v - cplx(1.0, 0.0)), 1e-12);
}

TEST(Sens, UnitRss) {
    const auto s = make_sens({64, 64}, 8, 4);
    for (double r : s.rss()) EXPECT_NEAR(r, 1.0, 1e-6);
}

TEST(Sens, SmoothnessBound) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) worst = std::max(worst, sens_max_gradient(make_sens({64, 64}, 8, seed)));
    EXPECT_LT(worst, kSensSmoothnessBound);
}

TEST(Acquire, NoiselessEqualsForward) {
    std::mt19937_64 rng(5);
    PhantomSpec ps;
    const auto x = make_phantom(ps);
    const auto sens = make_sens({64, 64}, 4, 1);
    const auto mask = srr::testing::random_mask({32, 32}, 0.3, rng);
    const auto y = acquire(x, sens, mask, {32, 32}, 0.0, 0);
    ForwardModel a(mask, {32, 32}, {64, 64}, sens);
    EXPECT_EQ(y.storage(), a.forward(x).storage());
    EXPECT_EQ(norm2(acquire(ComplexGrid({64, 64}), sens, mask, {32, 32}, 0.0, 0)), 0.0);
    // Noiseless data is consistent: A*y == A*A x.
    EXPECT_LT(srr::testing::rel_err(a.adjoint(y), a.normal(x)), 1e-12);
}

TEST(Acquire, NoiseStatistics) {
    SamplingMask full({100, 100}, {0, 0});
    for (std::size_t i = 0; i < full.size(); ++i) full.set(i);
    const auto sens = make_sens({100, 100}, 1, 0);
    const double sigma = 0.05;
    const auto y = acquire(ComplexGrid({100, 100}), sens, full, {100, 100}, sigma, 42);
    double ss = 0.0;
    for (auto v : y.data()) ss += v.real() * v.real() + v.imag() * v.imag();
    EXPECT_NEAR(std::sqrt(ss / (2.0 * y.size())), sigma, 0.05 * sigma);
}

TEST(Acquire, UnsampledEntriesStayZero) {
    std::mt19937_64 rng(6);
    const auto mask = srr::testing::random_mask({16, 16}, 0.3, rng);
    const auto y = acquire(ComplexGrid({32, 32}), make_sens({32, 32}, 2, 1), mask, {16, 16}, 0.1, 3);
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!mask[i % 256]) EXPECT_EQ(y[i], cplx(0.0, 0.0));
}

TEST(SensEstimate, SingleCoilIsOnesOnSupport) {
    std::mt19937_64 rng(7);
    const auto y = srr::testing::random_grid({1, 8, 8}, rng, Domain::kspace);
    const auto s = estimate_sens_lowres(y, {32, 32});
    for (auto v : s.maps().data())
        if (v != cplx(0.0, 0.0)) EXPECT_NEAR(std::abs(v), 1.0, 1e-12);
}

TEST(SensEstimate, ZeroDataGivesZeroMaps) {
    const auto s = estimate_sens_lowres(ComplexGrid({4, 8, 8}, Domain::kspace), {32, 32});
    EXPECT_EQ(max_abs(s.maps()), 0.0);
}

TEST(SensEstimate, RecoversSmoothMapsFromCalibration) {
    PhantomSpec ps;
    ps.seed = 3;
    const auto x = make_phantom(ps);
    const auto sens = make_sens({64, 64}, 8, 9);
    const auto calib = center_block_mask({24, 24}, {24, 24});
    const auto y = acquire(x, sens, calib, {24, 24}, 0.0, 0);
    const auto est = estimate_sens_lowres(y, {64, 64});
    // The estimate carries the image phase; divide out the common phase of the
    // coil-combined estimate before comparing.
    const double peak = max_abs(x);
    double worst = 0.0;
    for (std::size_t v = 0; v < 64 * 64; ++v) {
        if (std::abs(x[v]) < 0.1 * peak) continue;
        cplx ref_phase{};
        for (std::size_t c = 0; c < 8; ++c) ref_phase += std::conj(sens.maps()[c * 4096 + v]) * est.maps()[c * 4096 + v];
        const cplx rot = std::abs(ref_phase) > 0 ? ref_phase / std::abs(ref_phase) : cplx(1.0, 0.0);
        for (std::size_t c = 0; c < 8; ++c)
            worst = std::max(worst, std::abs(est.maps()[c * 4096 + v] - sens.maps()[c * 4096 + v] * rot));
    }
    EXPECT_LT(worst, 0.1);
}

TEST(Dataset, SplitCounts) {
    DatasetSpec d;
    d.records = 10;
    const auto m = plan_dataset(d);
    EXPECT_EQ(m.split_indices("train").size(), 8u);
    EXPECT_EQ(m.split_indices("test").size(), 2u);
}

TEST(Dataset, EmptyManifestWritesNoRecords) {
    const auto dir = srr::testing::scratch_dir("ds_empty");
    DatasetSpec d;
    d.records = 0;
    const auto m = build_dataset(d, dir);
    EXPECT_TRUE(m.records.empty());
    EXPECT_FALSE(std::filesystem::exists(dir / "records"));
    EXPECT_TRUE(read_manifest(dir).records.empty());
}

TEST(Dataset, RebuildIsBitIdentical) {
    const auto a = srr::testing::scratch_dir("ds_a"), b = srr::testing::scratch_dir("ds_b");
    DatasetSpec d;
    d.records = 3;
    d.seed = 99;
    build_dataset(d, a);
    auto m = read_manifest(a);
    materialize_dataset(m, b);
    for (const auto& e : m.records)
        for (const auto& stem : {e.gt, e.sens, e.y, e.mask}) {
            std::ifstream fa(data_path(a / stem), std::ios::binary), fb(data_path(b / stem), std::ios::binary);
            const std::string sa((std::istreambuf_iterator<char>(fa)), {}), sb((std::istreambuf_iterator<char>(fb)), {});
            EXPECT_EQ(sa, sb) << stem;
        }
}

TEST(Dataset, LoadChecksDims) {
    const auto dir = srr::testing::scratch_dir("ds_load");
    DatasetSpec d;
    d.records = 2;
    auto m = build_dataset(d, dir);
    const auto r = load_record(read_manifest(dir), 0);
    EXPECT_EQ(r.gt.dims(), (Dims{64, 64}));
    EXPECT_EQ(r.y.dims(), (Dims{8, 32, 32}));
    write_grid(dir / m.records[1].y, ComplexGrid({8, 16, 16}));
    EXPECT_THROW((void)load_record(read_manifest(dir), 1), Error);
}
