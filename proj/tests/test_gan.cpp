#include <gtest/gtest.h>

#include <fstream>

#include "srr/gan/train.hpp"
#include "test_support.hpp"

using namespace srr;
using namespace srr::gan;
using srr::testing::check_gradients;
using srr::testing::random_grid;
using srr::testing::rel_err;

namespace {

std::vector<Dims> dims_of(const ParamSet& p) {
    std::vector<Dims> d;
    for (const auto& q : p) d.push_back(q.dims);
    return d;
}

std::vector<std::vector<double>> values_of(const ParamSet& p) {
    std::vector<std::vector<double>> v;
    for (const auto& q : p) v.push_back(q.value);
    return v;
}

BoundParams rebind(const ParamSet& p, const std::vector<Var>& vars) {
    BoundParams b;
    for (const auto& q : p) b.names.push_back(q.name);
    b.vars = vars;
    return b;
}

DatasetSpec tiny_spec(std::size_t records, std::uint64_t seed) {
    DatasetSpec d;
    d.records = records;
    d.seed = seed;
    d.coils = 2;
    d.lr_dims = {8, 8};
    d.phantom.hr_dims = {16, 16};
    d.mask.dims = {8, 8};
    d.mask.center_size = {2, 2};
    d.mask.target_af = 2;
    d.mask_kind = MaskKind::uniform;
    d.train_fraction = 0.75;
    return d;
}

std::vector<Sample> tiny_samples(std::size_t records, std::uint64_t seed) {
    const auto d = tiny_spec(records, seed);
    const auto m = plan_dataset(d);
    std::vector<Sample> out;
    for (const auto& e : m.records) {
        auto r = generate_record(d, e);
        out.push_back({e.id, r.gt, r.y, std::make_shared<const ForwardModel>(r.mask, d.lr_dims, d.hr_dims(), r.sens)});
    }
    return out;
}

GeneratorConfig small_generator(std::size_t blocks = 2, std::size_t features = 4) {
    GeneratorConfig g;
    g.blocks = blocks;
    g.features = features;
    return g;
}

DiscriminatorConfig small_discriminator() {
    DiscriminatorConfig d;
    d.trunk = 2;
    d.branch = 2;
    d.scales = {1, 2};
    return d;
}

}  // namespace

TEST(Generator, ParameterCounts) {
    GeneratorConfig g;
    g.blocks = 10;
    g.spatial_rank = 3;
    EXPECT_EQ(parameter_count(g), 311720u);
    const GeneratorConfig d2;
    EXPECT_EQ(parameter_count(d2), 4u * 10436u);
    EXPECT_EQ(make_generator_params(d2, 1).count(), parameter_count(d2));
}

TEST(Generator, DegenerateMatchesGradientDescent) {
    std::mt19937_64 rng(1);
    auto model = std::make_shared<const ForwardModel>(srr::testing::random_model({8, 8}, {16, 16}, 3, rng));
    const auto y = random_grid(model->data_dims(), rng);
    auto cfg = small_generator(4);
    auto p = make_generator_params(cfg, 3);
    make_degenerate(p, 0.7);
    Tape tape;
    const auto out = srr_forward(tape, ad::bind(tape, p, false), cfg, model, y, true);
    ASSERT_EQ(out.iterates.size(), 5u);
    auto x = model->adjoint(y);
    for (std::size_t k = 0; k <= 4; ++k) {
        EXPECT_LT(rel_err(ad::to_grid(out.iterates[k]), x), 1e-12) << k;
        x = x - model->adjoint(model->forward(x) - y) * 0.7;
    }
}

TEST(Generator, DegenerateUnitaryIsFixedPoint) {
    std::mt19937_64 rng(2);
    SamplingMask full({8, 8}, {0, 0});
    for (std::size_t i = 0; i < 64; ++i) full.set(i);
    ForwardModel a(full, {8, 8}, {8, 8}, SensitivitySet(ComplexGrid::filled({1, 8, 8}, 1.0)));
    const auto y = random_grid({1, 8, 8}, rng, Domain::kspace);
    auto cfg = small_generator(3);
    auto p = make_generator_params(cfg, 1);
    make_degenerate(p, 1.0);
    ComplexGrid k({8, 8}, Domain::kspace);
    for (std::size_t i = 0; i < 64; ++i) k[i] = y[i];
    EXPECT_LT(rel_err(generate(p, cfg, a, y), idft(k)), 1e-12);
}

TEST(Generator, FiniteDifferences) {
    std::mt19937_64 rng(3);
    auto model = std::make_shared<const ForwardModel>(srr::testing::random_model({8, 8}, {16, 16}, 2, rng));
    const auto y = random_grid(model->data_dims(), rng);
    const auto gt = random_grid({16, 16}, rng);
    const auto cfg = small_generator(2, 4);
    const auto p = make_generator_params(cfg, 7);
    auto f = [&](Tape& t, const std::vector<Var>& in) {
        const Var out = srr_forward(t, rebind(p, in), cfg, model, y).x;
        return mse(ad::constant_image(t, gt), out);
    };
    EXPECT_LT(check_gradients(f, dims_of(p), values_of(p), 1e-5, 12).worst, 1e-5);
}

TEST(Generator, RankMismatchIsDimensionError) {
    std::mt19937_64 rng(4);
    auto model = std::make_shared<const ForwardModel>(srr::testing::random_model({4, 4}, {8, 8}, 1, rng));
    auto cfg = small_generator(1);
    cfg.spatial_rank = 3;
    const auto p = make_generator_params(cfg, 1);
    Tape t;
    try {
        (void)srr_forward(t, ad::bind(t, p), cfg, model, random_grid(model->data_dims(), rng));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::dimension);
    }
}

TEST(Generator, NonFiniteNamesBlock) {
    std::mt19937_64 rng(5);
    auto model = std::make_shared<const ForwardModel>(srr::testing::random_model({4, 4}, {8, 8}, 1, rng));
    auto cfg = small_generator(2);
    auto p = make_generator_params(cfg, 1);
    p.at("block1.alpha").value[0] = std::numeric_limits<double>::infinity();
    try {
        (void)generate(p, cfg, *model, random_grid(model->data_dims(), rng));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.category(), ErrorCategory::numeric);
        EXPECT_NE(std::string(e.what()).find("block 1"), std::string::npos);
    }
}

TEST(Discriminator, ZeroParamsScoreZero) {
    const auto cfg = small_discriminator();
    auto p = make_discriminator_params(cfg, 1);
    for (auto& q : p) std::fill(q.value.begin(), q.value.end(), 0.0);
    std::mt19937_64 rng(6);
    Tape t;
    const auto b = ad::bind(t, p);
    const auto critic = make_critic(b, cfg);
    const Var x = ad::constant_image(t, random_grid({8, 8}, rng));
    EXPECT_EQ(critic(x).item(), 0.0);
    // Zero critic: both scores vanish and the penalty is λ(0 − 1)².
    const auto l = loss_discriminator(critic, x, ad::constant_image(t, random_grid({8, 8}, rng)), 10.0, 0.3);
    EXPECT_NEAR(l.total.item(), 10.0, 1e-4);
}

TEST(Discriminator, LinearCriticPenaltyClosedForm) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        Tape t;
        const auto wv = srr::testing::random_values(2 * 64, rng, 0.2 * (trial + 1));
        const Var w = t.leaf({2, 8, 8}, wv), b = t.leaf({1}, {0.3});
        const auto l = loss_discriminator(linear_critic(w, b), ad::constant_image(t, random_grid({8, 8}, rng)),
                                          ad::constant_image(t, random_grid({8, 8}, rng)), 10.0, 0.4);
        double n = 0.0;
        for (double v : wv) n += v * v;
        const double expect = 10.0 * std::pow(std::sqrt(n) - 1.0, 2);
        EXPECT_NEAR(l.penalty.item(), expect, 1e-10 * std::max(1.0, expect));
    }
}

TEST(Discriminator, PenaltyParameterGradient) {
    const auto cfg = small_discriminator();
    const auto p = make_discriminator_params(cfg, 9);
    std::mt19937_64 rng(8);
    const auto real = random_grid({8, 8}, rng), fake = random_grid({8, 8}, rng);
    auto f = [&](Tape& t, const std::vector<Var>& in) {
        const auto b = rebind(p, in);
        return loss_discriminator(make_critic(b, cfg), ad::constant_image(t, real), ad::constant_image(t, fake), 10.0,
                                  0.35)
            .total;
    };
    EXPECT_LT(check_gradients(f, dims_of(p), values_of(p), 1e-5, 10).worst, 1e-4);
}

TEST(Discriminator, MagnitudeInputGradient) {
    auto cfg = small_discriminator();
    cfg.magnitude = true;
    const auto p = make_discriminator_params(cfg, 2);
    std::mt19937_64 rng(9);
    auto f = [&](Tape& t, const std::vector<Var>& in) {
        const auto b = ad::bind(t, p, false);
        return make_critic(b, cfg)(in[0]);
    };
    EXPECT_LT(check_gradients(f, {{2, 8, 8}}, {srr::testing::random_values(128, rng)}).worst, 1e-6);
}

TEST(Losses, GeneratorLossVanishesOnTarget) {
    std::mt19937_64 rng(10);
    Tape t;
    const Var x = ad::constant_image(t, random_grid({8, 8}, rng));
    EXPECT_EQ(loss_generator(nullptr, x, x, 100.0).item(), 0.0);
    const Var z = ad::constant_image(t, ComplexGrid({8, 8}));
    // η·mean over 128 real entries.
    double ss = 0.0;
    for (double v : x.value()) ss += v * v;
    EXPECT_NEAR(loss_generator(nullptr, x, z, 100.0).item(), 100.0 * ss / 128.0, 1e-10);
}

TEST(Losses, AdversarialTermUsesCritic) {
    std::mt19937_64 rng(11);
    Tape t;
    const Var x = ad::constant_image(t, random_grid({4, 4}, rng));
    const Var w = t.constant({2, 4, 4}, std::vector<double>(32, 0.5)), b = t.constant({1}, {0.25});
    const Critic c = linear_critic(w, b);
    double s = 0.0;
    for (double v : x.value()) s += 0.5 * v;
    EXPECT_NEAR(loss_generator(&c, x, x, 100.0).item(), -(s + 0.25), 1e-12);
}

TEST(Train, ZeroEpochsReturnsInitialization) {
    auto cfg = GanConfig{};
    cfg.generator = small_generator(1);
    cfg.discriminator = small_discriminator();
    cfg.epochs = 0;
    cfg.seed = 4;
    const auto r = train(tiny_samples(2, 1), cfg);
    EXPECT_EQ(r.steps, 0u);
    EXPECT_EQ(r.generator, make_generator_params(cfg.generator, derive_seed(4, {kInitStream, 0})));
}

TEST(Train, EmptyTrainingSetIsNoOp) {
    auto cfg = GanConfig{};
    cfg.generator = small_generator(1);
    const auto r = train(std::vector<Sample>{}, cfg);
    EXPECT_EQ(r.steps, 0u);
    EXPECT_TRUE(r.log.empty());
}

TEST(Train, BitwiseReproducibleAndLogged) {
    const auto samples = tiny_samples(4, 2);
    auto cfg = GanConfig{};
    cfg.generator = small_generator(2);
    cfg.discriminator = small_discriminator();
    cfg.adversarial = true;
    cfg.epochs = 2;
    cfg.seed = 11;
    const auto dir = srr::testing::scratch_dir("train_repro");
    const auto a = train(samples, cfg, dir);
    const auto b = train(samples, cfg);
    EXPECT_EQ(a.steps, 8u);
    EXPECT_EQ(a.generator, b.generator);
    EXPECT_EQ(a.discriminator, b.discriminator);
    for (const auto& r : a.log) EXPECT_TRUE(std::isfinite(r.loss_g) && std::isfinite(r.loss_d));
    std::ifstream log(dir / "train_log.jsonl");
    std::size_t lines = 0;
    for (std::string line; std::getline(log, line); ++lines) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_TRUE(j.contains("L_G") && j.contains("L_D") && j.contains("fidelity"));
    }
    EXPECT_EQ(lines, 8u);
    EXPECT_TRUE(std::filesystem::exists(dir / "epoch001.srrckpt"));
    EXPECT_TRUE(std::filesystem::exists(dir / "epoch002.srrckpt"));
    const auto loaded = load_model(a.checkpoint);
    EXPECT_EQ(loaded.generator, a.generator);
    EXPECT_EQ(loaded.discriminator, a.discriminator);
    EXPECT_EQ(loaded.config.generator.blocks, 2u);
}

TEST(Train, MaxStepsCapsTraining) {
    auto cfg = GanConfig{};
    cfg.generator = small_generator(1);
    cfg.epochs = 5;
    cfg.max_steps = 3;
    EXPECT_EQ(train(tiny_samples(4, 3), cfg).steps, 3u);
}

TEST(Train, L2TrainingReducesLoss) {
    const auto samples = tiny_samples(4, 5);
    auto cfg = GanConfig{};
    cfg.generator = small_generator(2);
    cfg.epochs = 15;
    cfg.decay = 1.0;
    cfg.lr = 3e-3;
    cfg.seed = 2;
    auto init = cfg;
    init.epochs = 0;
    const double before = mean_l2(train(samples, init).generator, cfg.generator, samples);
    const double after = mean_l2(train(samples, cfg).generator, cfg.generator, samples);
    EXPECT_LT(after, before);
}

TEST(Train, InvalidConfigRejected) {
    GanConfig cfg;
    cfg.batch = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = {};
    cfg.decay = 0.0;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(Infer, DeterministicAndShaped) {
    const auto samples = tiny_samples(1, 6);
    auto cfg = GanConfig{};
    cfg.generator = small_generator(2);
    cfg.epochs = 0;
    const auto dir = srr::testing::scratch_dir("infer");
    const auto r = train(samples, cfg, dir);
    const auto& s = samples[0];
    const auto a = infer(r.checkpoint, s.y, s.model->mask(), s.model->sens(), {16, 16});
    const auto b = infer(r.checkpoint, s.y, s.model->mask(), s.model->sens(), {16, 16});
    EXPECT_EQ(a.dims(), (Dims{16, 16}));
    EXPECT_EQ(a.storage(), b.storage());
}

TEST(Config, JsonRoundTrip) {
    GanConfig c;
    c.generator.blocks = 7;
    c.discriminator.scales = {1, 3};
    c.adversarial = true;
    c.eta_gan = 12.5;
    c.seed = 99;
    const auto back = gan_config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
}
