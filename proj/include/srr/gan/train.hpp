#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "srr/ad/optim.hpp"
#include "srr/gan/discriminator.hpp"
#include "srr/gan/generator.hpp"
#include "srr/sim/dataset.hpp"

namespace srr::gan {

struct GanConfig {
    GeneratorConfig generator;
    DiscriminatorConfig discriminator;
    bool adversarial = false;
    std::size_t epochs = 1;
    std::size_t max_steps = 0;  // 0: no cap beyond epochs
    std::size_t batch = 1;
    double lr = 1e-3;
    double lr_disc = 1e-3;
    double decay = 0.95;  // per epoch
    double lambda = 10.0;
    double eta_gan = 100.0;
    std::size_t n_disc = 1;
    std::uint64_t seed = 0;

    void validate() const {
        generator.validate();
        discriminator.validate();
        require(batch >= 1, ErrorCategory::config, "batch must be >= 1");
        require(lr > 0.0 && lr_disc > 0.0, ErrorCategory::config, "learning rates must be > 0");
        require(decay > 0.0 && decay <= 1.0, ErrorCategory::config, "decay must lie in (0, 1]");
        require(lambda >= 0.0, ErrorCategory::config, "lambda must be >= 0");
        require(eta_gan >= 0.0, ErrorCategory::config, "eta_gan must be >= 0");
        require(n_disc >= 1, ErrorCategory::config, "ndisc must be >= 1");
    }
};

inline nlohmann::json to_json(const GanConfig& c) {
    return {{"generator", to_json(c.generator)},
            {"discriminator", to_json(c.discriminator)},
            {"adversarial", c.adversarial},
            {"epochs", c.epochs},
            {"max_steps", c.max_steps},
            {"batch", c.batch},
            {"lr", c.lr},
            {"lr_disc", c.lr_disc},
            {"decay", c.decay},
            {"lambda", c.lambda},
            {"eta_gan", c.eta_gan},
            {"n_disc", c.n_disc},
            {"seed", c.seed}};
}

inline GanConfig gan_config_from_json(const nlohmann::json& j) {
    GanConfig c;
    if (j.contains("generator")) c.generator = generator_config_from_json(j.at("generator"));
    if (j.contains("discriminator")) c.discriminator = discriminator_config_from_json(j.at("discriminator"));
    c.adversarial = j.value("adversarial", c.adversarial);
    c.epochs = j.value("epochs", c.epochs);
    c.max_steps = j.value("max_steps", c.max_steps);
    c.batch = j.value("batch", c.batch);
    c.lr = j.value("lr", c.lr);
    c.lr_disc = j.value("lr_disc", c.lr_disc);
    c.decay = j.value("decay", c.decay);
    c.lambda = j.value("lambda", c.lambda);
    c.eta_gan = j.value("eta_gan", c.eta_gan);
    c.n_disc = j.value("n_disc", c.n_disc);
    c.seed = j.value("seed", c.seed);
    return c;
}

/// A loaded record with its forward model, ready for repeated use.
struct Sample {
    std::string id;
    ComplexGrid gt;
    ComplexGrid y;
    std::shared_ptr<const ForwardModel> model;
};

inline Sample make_sample(Record r, const Dims& lr_dims) {
    auto model = std::make_shared<const ForwardModel>(r.model(lr_dims));
    return {std::move(r.id), std::move(r.gt), std::move(r.y), std::move(model)};
}

inline std::vector<Sample> load_split(const Manifest& m, const std::string& split) {
    std::vector<Sample> out;
    for (auto i : m.split_indices(split)) out.push_back(make_sample(load_record(m, i), m.spec.lr_dims));
    return out;
}

/// Mean over samples of mean((x − x̃)²) for the generator output.
inline double mean_l2(const ParamSet& g, const GeneratorConfig& cfg, const std::vector<Sample>& samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) {
        const auto out = generate(g, cfg, *s.model, s.y);
        const double n = norm2(out - s.gt);
        acc += n * n / (2.0 * static_cast<double>(s.gt.size()));
    }
    return acc / static_cast<double>(samples.size());
}

struct StepRecord {
    std::size_t step = 0;
    std::size_t epoch = 0;
    double loss_g = 0.0;
    double loss_d = 0.0;
    double fidelity = 0.0;
    double lr = 0.0;
};

inline nlohmann::json to_json(const StepRecord& r) {
    return {{"step", r.step},        {"epoch", r.epoch},        {"L_G", r.loss_g},
            {"L_D", r.loss_d},       {"fidelity", r.fidelity}, {"lr", r.lr}};
}

struct TrainResult {
    ParamSet generator;
    ParamSet discriminator;
    std::size_t steps = 0;
    std::size_t epochs_done = 0;
    std::vector<StepRecord> log;
    std::filesystem::path checkpoint;  // latest; empty when out_dir is empty
};

inline nlohmann::json checkpoint_meta(const GanConfig& cfg, std::size_t epoch, std::size_t step) {
    return {{"config", to_json(cfg)}, {"epoch", epoch}, {"step", step}};
}

inline void write_checkpoint(const std::filesystem::path& path, const GanConfig& cfg, const ParamSet& g,
                             const ParamSet& d, std::size_t epoch, std::size_t step) {
    ad::save_checkpoint(path, {&g, &d}, {"g.", "d."}, checkpoint_meta(cfg, epoch, step));
}

struct LoadedModel {
    GanConfig config;
    ParamSet generator;
    ParamSet discriminator;
};

inline LoadedModel load_model(const std::filesystem::path& path) {
    auto ck = ad::load_checkpoint(path);
    require(ck.meta.contains("config"), ErrorCategory::format, "checkpoint " + path.string() + " has no config");
    LoadedModel m;
    m.config = gan_config_from_json(ck.meta.at("config"));
    m.generator = make_generator_params(m.config.generator, 0);
    m.discriminator = make_discriminator_params(m.config.discriminator, 0);
    ad::restore(m.generator, ck.params, "g.");
    ad::restore(m.discriminator, ck.params, "d.");
    return m;
}

/// Trains on the manifest's train split. With `adversarial` off the generator
/// minimizes η·MSE alone; with it on each step runs n_disc critic updates then
/// one generator update. Epoch checkpoints and a JSON-lines step log go to
/// `out_dir` when given. Bitwise reproducible for a fixed seed.
inline TrainResult train(const std::vector<Sample>& train_set, const GanConfig& cfg,
                         const std::filesystem::path& out_dir = {}) {
    cfg.validate();
    TrainResult res;
    res.generator = make_generator_params(cfg.generator, derive_seed(cfg.seed, {kInitStream, 0}));
    res.discriminator = make_discriminator_params(cfg.discriminator, derive_seed(cfg.seed, {kInitStream, 1}));
    auto adam_g = ad::AdamState::like(res.generator);
    auto adam_d = ad::AdamState::like(res.discriminator);
    std::mt19937_64 interp_rng(derive_seed(cfg.seed, {kInterpStream}));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::ofstream log_file;
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        log_file.open(out_dir / "train_log.jsonl", std::ios::trunc);
        require(log_file.good(), ErrorCategory::io, "cannot write training log in " + out_dir.string());
        res.checkpoint = out_dir / "model.srrckpt";
        write_checkpoint(res.checkpoint, cfg, res.generator, res.discriminator, 0, 0);
    }
    if (train_set.empty() || cfg.epochs == 0) return res;

    std::vector<std::size_t> order(train_set.size());
    bool stop = false;
    for (std::size_t epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, {kShuffleStream, epoch}));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        const double lr_g = ad::exp_decay_lr(cfg.lr, cfg.decay, static_cast<long>(epoch));
        const double lr_d = ad::exp_decay_lr(cfg.lr_disc, cfg.decay, static_cast<long>(epoch));

        for (std::size_t start = 0; start < order.size() && !stop; start += cfg.batch) {
            const std::size_t stop_at = std::min(order.size(), start + cfg.batch);
            const double inv_b = 1.0 / static_cast<double>(stop_at - start);
            StepRecord rec;
            rec.step = res.steps + 1;
            rec.epoch = epoch;
            rec.lr = lr_g;

            // Generator outputs of the current parameters, as critic data.
            std::vector<ComplexGrid> fakes;
            if (cfg.adversarial)
                for (std::size_t b = start; b < stop_at; ++b) {
                    const auto& s = train_set[order[b]];
                    fakes.push_back(generate(res.generator, cfg.generator, *s.model, s.y));
                }

            if (cfg.adversarial) {
                for (std::size_t it = 0; it < cfg.n_disc; ++it) {
                    Tape tape;
                    const auto dp = ad::bind(tape, res.discriminator);
                    const auto critic = make_critic(dp, cfg.discriminator);
                    std::vector<Var> losses;
                    for (std::size_t b = start; b < stop_at; ++b) {
                        const auto& s = train_set[order[b]];
                        const Var real = ad::constant_image(tape, s.gt);
                        const Var fake = ad::constant_image(tape, fakes[b - start]);
                        losses.push_back(loss_discriminator(critic, real, fake, cfg.lambda, unit(interp_rng)).total);
                    }
                    Var total = losses[0];
                    for (std::size_t k = 1; k < losses.size(); ++k) total = ad::add(total, losses[k]);
                    total = ad::scale(total, inv_b);
                    rec.loss_d = total.item();
                    require(std::isfinite(rec.loss_d), ErrorCategory::numeric,
                            "non-finite discriminator loss at step " + std::to_string(rec.step));
                    ad::adam_step(res.discriminator, ad::values_of(tape.grad(total, dp.vars)), adam_d, lr_d);
                }
            }

            Tape tape;
            const auto gp = ad::bind(tape, res.generator);
            std::optional<BoundParams> dp;
            Critic critic;
            if (cfg.adversarial) {
                dp = ad::bind(tape, res.discriminator, false);
                critic = make_critic(*dp, cfg.discriminator);
            }
            Var total;
            double fidelity = 0.0;
            for (std::size_t b = start; b < stop_at; ++b) {
                const auto& s = train_set[order[b]];
                const Var out = srr_forward(tape, gp, cfg.generator, s.model, s.y).x;
                const Var real = ad::constant_image(tape, s.gt);
                const Var l = loss_generator(cfg.adversarial ? &critic : nullptr, real, out, cfg.eta_gan);
                total = total.valid() ? ad::add(total, l) : l;
                fidelity += s.model->fidelity(ad::to_grid(out), s.y);
            }
            total = ad::scale(total, inv_b);
            rec.loss_g = total.item();
            rec.fidelity = fidelity * inv_b;
            require(std::isfinite(rec.loss_g), ErrorCategory::numeric,
                    "non-finite generator loss at step " + std::to_string(rec.step));
            ad::adam_step(res.generator, ad::values_of(tape.grad(total, gp.vars)), adam_g, lr_g);
            require(res.generator.all_finite() && res.discriminator.all_finite(), ErrorCategory::numeric,
                    "non-finite parameters after step " + std::to_string(rec.step));

            ++res.steps;
            res.log.push_back(rec);
            if (log_file.is_open()) log_file << to_json(rec).dump() << '\n';
            if (cfg.max_steps != 0 && res.steps >= cfg.max_steps) stop = true;
        }
        res.epochs_done = epoch + 1;
        if (!out_dir.empty()) {
            std::ostringstream name;
            name << "epoch" << std::setw(3) << std::setfill('0') << res.epochs_done << ".srrckpt";
            write_checkpoint(out_dir / name.str(), cfg, res.generator, res.discriminator, res.epochs_done, res.steps);
            write_checkpoint(res.checkpoint, cfg, res.generator, res.discriminator, res.epochs_done, res.steps);
            log_file.flush();
        }
    }
    return res;
}

inline TrainResult train(const Manifest& m, const GanConfig& cfg, const std::filesystem::path& out_dir = {}) {
    require(cfg.generator.spatial_rank == m.spec.hr_dims().size(), ErrorCategory::config,
            "generator rank does not match dataset dims " + dims_string(m.spec.hr_dims()));
    return train(load_split(m, "train"), cfg, out_dir);
}

/// Generator output for one acquisition, no tape recorded.
inline ComplexGrid infer(const LoadedModel& model, const ComplexGrid& y, const SamplingMask& mask,
                         const SensitivitySet& sens, const Dims& hr_dims) {
    ForwardModel fm(mask, mask.dims(), hr_dims, sens);
    return generate(model.generator, model.config.generator, fm, y);
}

inline ComplexGrid infer(const std::filesystem::path& checkpoint, const ComplexGrid& y, const SamplingMask& mask,
                         const SensitivitySet& sens, const Dims& hr_dims) {
    return infer(load_model(checkpoint), y, mask, sens, hr_dims);
}

}  // namespace srr::gan
