#pragma once

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "srr/gan/train.hpp"
#include "srr/metrics/report.hpp"
#include "srr/pipeline/compare.hpp"
#include "srr/solver/variational.hpp"

namespace srr::cli {

namespace fs = std::filesystem;

// Per-stage seeds are derived from the global seed with these tags.
enum StageTag : std::uint64_t { kSimulateStage = 101, kMaskStage = 102, kTrainStage = 103, kCompareStage = 104 };

inline Dims parse_dims(const std::string& s) {
    Dims d;
    std::string tok;
    std::istringstream in(s);
    while (std::getline(in, tok, 'x')) {
        require(!tok.empty() && tok.find_first_not_of("0123456789") == std::string::npos, ErrorCategory::usage,
                "bad dims '" + s + "' (expected e.g. 64x64)");
        d.push_back(std::stoull(tok));
    }
    require(!d.empty(), ErrorCategory::usage, "empty dims");
    return d;
}

inline std::uint64_t seed_from_env() {
    const char* s = std::getenv("SRR_SEED");
    if (s == nullptr || *s == '\0') return 0;
    char* end = nullptr;
    const auto v = std::strtoull(s, &end, 10);
    require(end != nullptr && *end == '\0', ErrorCategory::usage, std::string("SRR_SEED is not an integer: ") + s);
    return v;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorCategory::io, "cannot write " + path.string());
    f << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const fs::path& path) {
    std::ifstream f(path);
    require(f.good(), ErrorCategory::io, "cannot read " + path.string());
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCategory::format, path.string() + ": " + e.what());
    }
}

struct SolverFlags {
    double eta = 1.0, rho = 1.0, tau = 0.0, tolerance = 1e-6;
    std::size_t iterations = 200;
    std::string prox = "identity";
    int levels = 3;

    void attach(CLI::App* sub) {
        sub->add_option("--eta", eta, "solver step size")->capture_default_str();
        sub->add_option("--rho", rho, "penalty weight")->capture_default_str();
        sub->add_option("--tau", tau, "regularization weight")->capture_default_str();
        sub->add_option("--prox", prox, "identity | soft | haar")->capture_default_str();
        sub->add_option("--haar-levels", levels, "Haar decomposition levels")->capture_default_str();
        sub->add_option("--iterations", iterations, "maximum solver iterations")->capture_default_str();
        sub->add_option("--tolerance", tolerance, "relative-change stopping tolerance")->capture_default_str();
    }

    SolverConfig resolve() const {
        SolverConfig c;
        c.eta = eta;
        c.rho = rho;
        c.tau = tau;
        c.prox = parse_prox_kind(prox);
        c.haar_levels = levels;
        c.max_iterations = iterations;
        c.tolerance = tolerance;
        c.validate();
        return c;
    }

    static nlohmann::json to_json(const SolverConfig& c) {
        return {{"eta", c.eta},
                {"rho", c.rho},
                {"tau", c.tau},
                {"prox", prox_kind_name(c.prox)},
                {"haar_levels", c.haar_levels},
                {"max_iterations", c.max_iterations},
                {"tolerance", c.tolerance}};
    }
};

/// Parses and dispatches one invocation. `args` excludes the program name.
class App {
public:
    App(std::ostream& out, std::ostream& err, std::uint64_t default_seed) : out_(out), err_(err), seed_(default_seed) {}

    int run(std::vector<std::string> args) {
        args_ = args;
        CLI::App app{"Super-resolution MRI reconstruction toolkit", "srr"};
        app.fallthrough();
        app.require_subcommand(0, 1);
        app.add_option("--seed", seed_, "global seed (default: $SRR_SEED or 0)")->capture_default_str();
        app.add_option("--jobs", jobs_, "worker cap")->capture_default_str();
        app.add_flag("-v,--verbose", verbosity_, "more log output");
        std::string replay;
        app.add_option("--replay", replay, "rerun the invocation recorded in a run.json");

        auto* sim = app.add_subcommand("simulate", "generate a phantom dataset");
        auto* msk = app.add_subcommand("mask", "generate a sampling mask and report its AFs");
        auto* rec = app.add_subcommand("recon", "classical reconstruction of a dataset split");
        auto* trn = app.add_subcommand("train", "train the unrolled generator");
        auto* inf = app.add_subcommand("infer", "run a trained generator on a dataset split");
        auto* evl = app.add_subcommand("eval", "score reconstructions against ground truth");
        auto* cmp = app.add_subcommand("compare", "run and score strategies 1, 2 and 3");

        // simulate
        DatasetSpec ds;
        std::string lr = "32x32", hr = "64x64", center = "8x8", kind = "poisson", out;
        sim->add_option("-o,--out", out, "output directory")->required();
        sim->add_option("--records", ds.records, "record count")->capture_default_str();
        sim->add_option("--lr", lr, "LR acquisition grid")->capture_default_str();
        sim->add_option("--hr", hr, "HR image grid")->capture_default_str();
        sim->add_option("--coils", ds.coils, "coil count")->capture_default_str();
        sim->add_option("--af", ds.mask.target_af, "LR mask acceleration factor")->capture_default_str();
        sim->add_option("--center", center, "fully sampled calibration block")->capture_default_str();
        sim->add_option("--mask-kind", kind, "poisson | uniform | center")->capture_default_str();
        sim->add_option("--sigma", ds.phantom.noise_sigma, "complex noise std")->capture_default_str();
        sim->add_option("--shapes", ds.phantom.shapes, "ellipses per phantom")->capture_default_str();
        sim->add_option("--train-fraction", ds.train_fraction, "train split fraction")->capture_default_str();
        sim->add_option("--val-fraction", ds.val_fraction, "validation split fraction")->capture_default_str();

        // mask
        MaskSpec ms;
        std::string mdims = "32x32", mhr, mcenter = "8x8", mkind = "poisson";
        std::string mout;
        msk->add_option("-o,--out", mout, "output directory")->required();
        msk->add_option("--dims", mdims, "mask grid")->capture_default_str();
        msk->add_option("--hr", mhr, "HR grid for the equivalent AF");
        msk->add_option("--af", ms.target_af, "target acceleration factor")->capture_default_str();
        msk->add_option("--center", mcenter, "fully sampled calibration block")->capture_default_str();
        msk->add_option("--kind", mkind, "poisson | uniform | center")->capture_default_str();
        msk->add_option("--af-tolerance", ms.af_tolerance, "relative AF tolerance")->capture_default_str();
        msk->add_option("--density-slope", ms.density_slope, "radius growth toward the periphery")->capture_default_str();

        // recon
        std::string manifest, rout, method = "variational", split = "test";
        SolverFlags rsolver;
        rec->add_option("-m,--manifest", manifest, "dataset directory")->required();
        rec->add_option("-o,--out", rout, "output directory")->required();
        rec->add_option("--method", method, "zerofill | variational (pgd) | strategy2 (ki)")->capture_default_str();
        rec->add_option("--split", split, "train | val | test")->capture_default_str();
        rsolver.attach(rec);

        // train
        gan::GanConfig gc;
        std::string tmanifest, tout;
        trn->add_option("-m,--manifest", tmanifest, "dataset directory")->required();
        trn->add_option("-o,--out", tout, "output directory")->required();
        trn->add_option("--blocks", gc.generator.blocks, "unrolled blocks K")->capture_default_str();
        trn->add_option("--features", gc.generator.features, "conv features")->capture_default_str();
        trn->add_option("--kernel", gc.generator.kernel, "conv kernel size")->capture_default_str();
        trn->add_option("--epochs", gc.epochs, "epochs")->capture_default_str();
        trn->add_option("--max-steps", gc.max_steps, "step cap (0: none)")->capture_default_str();
        trn->add_option("--batch", gc.batch, "records per step")->capture_default_str();
        trn->add_option("--lr", gc.lr, "generator learning rate")->capture_default_str();
        trn->add_option("--lr-disc", gc.lr_disc, "critic learning rate")->capture_default_str();
        trn->add_option("--decay", gc.decay, "per-epoch learning-rate decay")->capture_default_str();
        trn->add_flag("--adversarial", gc.adversarial, "enable the WGAN-GP critic");
        trn->add_option("--lambda", gc.lambda, "gradient penalty weight")->capture_default_str();
        trn->add_option("--eta-gan", gc.eta_gan, "L2 weight in the generator loss")->capture_default_str();
        trn->add_option("--ndisc", gc.n_disc, "critic updates per generator update")->capture_default_str();
        trn->add_option("--disc-trunk", gc.discriminator.trunk, "critic trunk features")->capture_default_str();
        trn->add_option("--disc-branch", gc.discriminator.branch, "critic branch features")->capture_default_str();

        // infer
        std::string imanifest, iout, ckpt, isplit = "test";
        inf->add_option("-m,--manifest", imanifest, "dataset directory")->required();
        inf->add_option("-c,--checkpoint", ckpt, "trained model")->required();
        inf->add_option("-o,--out", iout, "output directory")->required();
        inf->add_option("--split", isplit, "train | val | test")->capture_default_str();

        // eval
        std::string emanifest, eoutputs, eout, emethod = "method", esplit = "test";
        evl->add_option("-m,--manifest", emanifest, "dataset directory")->required();
        evl->add_option("-i,--outputs", eoutputs, "directory of reconstructions")->required();
        evl->add_option("-o,--out", eout, "report directory")->required();
        evl->add_option("--method", emethod, "method label")->capture_default_str();
        evl->add_option("--split", esplit, "train | val | test")->capture_default_str();

        // compare
        CompareConfig cc;
        std::string cmanifest, cckpt, cout_, ccenter;
        SolverFlags csolver;
        cmp->add_option("-m,--manifest", cmanifest, "dataset directory")->required();
        cmp->add_option("-c,--checkpoint", cckpt, "trained model for strategy 3")->required();
        cmp->add_option("-o,--out", cout_, "output directory")->required();
        cmp->add_option("--s1-af", cc.s1_af, "strategy 1 HR mask AF (0: match the equivalent AF)")->capture_default_str();
        cmp->add_option("--s1-center", ccenter, "strategy 1 calibration block (default: dataset's)");
        cmp->add_option("--af-tolerance", cc.af_tolerance, "allowed relative AF mismatch")->capture_default_str();
        cmp->add_option("--split", cc.split, "train | val | test")->capture_default_str();
        csolver.attach(cmp);

        try {
            std::reverse(args.begin(), args.end());
            app.parse(args);
        } catch (const CLI::CallForHelp& e) {
            return app.exit(e, out_, err_);
        } catch (const CLI::CallForAllHelp& e) {
            return app.exit(e, out_, err_);
        } catch (const CLI::ParseError& e) {
            return report(Error(ErrorCategory::usage, e.what()));
        }

        try {
            require(jobs_ >= 1, ErrorCategory::usage, "--jobs must be >= 1");
            if (!replay.empty()) return run_replay(replay);
            if (*sim) {
                ds.lr_dims = parse_dims(lr);
                ds.phantom.hr_dims = parse_dims(hr);
                ds.mask.dims = ds.lr_dims;
                ds.mask.center_size = parse_dims(center);
                ds.mask_kind = parse_mask_kind(kind);
                ds.seed = stage_seed(kSimulateStage);
                return do_simulate(ds, out);
            }
            if (*msk) {
                ms.dims = parse_dims(mdims);
                ms.center_size = parse_dims(mcenter);
                ms.seed = stage_seed(kMaskStage);
                return do_mask(ms, parse_mask_kind(mkind), mhr.empty() ? Dims{} : parse_dims(mhr), mout);
            }
            if (*rec) return do_recon(manifest, rout, method, split, rsolver.resolve());
            if (*trn) {
                gc.seed = stage_seed(kTrainStage);
                return do_train(tmanifest, tout, gc);
            }
            if (*inf) return do_infer(imanifest, ckpt, iout, isplit);
            if (*evl) return do_eval(emanifest, eoutputs, eout, emethod, esplit);
            if (*cmp) {
                cc.solver = csolver.resolve();
                if (!ccenter.empty()) cc.s1_center = parse_dims(ccenter);
                cc.seed = stage_seed(kCompareStage);
                return do_compare(cmanifest, cckpt, cout_, cc);
            }
            out_ << app.help();
            return 0;
        } catch (const Error& e) {
            return report(e);
        } catch (const nlohmann::json::exception& e) {
            return report(Error(ErrorCategory::format, e.what()));
        } catch (const fs::filesystem_error& e) {
            return report(Error(ErrorCategory::io, e.what()));
        } catch (const std::exception& e) {
            out_.flush();
            err_ << "error: internal: " << e.what() << '\n';
            return 1;
        }
    }

private:
    std::ostream& out_;
    std::ostream& err_;
    std::uint64_t seed_;
    std::size_t jobs_ = 1;
    int verbosity_ = 0;
    std::vector<std::string> args_;
    nlohmann::json stage_seeds_ = nlohmann::json::object();

    int report(const Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        err_ << "error: " << category_name(e.category()) << ": " << msg << '\n';
        return e.category() == ErrorCategory::usage ? 2 : 1;
    }

    void log(const std::string& s) const {
        if (verbosity_ > 0) err_ << s << '\n';
    }

    std::uint64_t stage_seed(StageTag tag) {
        const auto s = derive_seed(seed_, {tag});
        stage_seeds_[std::to_string(static_cast<std::uint64_t>(tag))] = s;
        return s;
    }

    void write_run(const fs::path& dir, const std::string& sub, nlohmann::json config) {
        fs::create_directories(dir);
        write_json(dir / "run.json", {{"subcommand", sub},
                                      {"argv", args_},
                                      {"seed", seed_},
                                      {"jobs", jobs_},
                                      {"verbosity", verbosity_},
                                      {"stage_seeds", stage_seeds_},
                                      {"config", std::move(config)}});
    }

    int run_replay(const std::string& path) {
        const auto j = read_json(path);
        require(j.contains("argv") && j.contains("seed"), ErrorCategory::format, path + " is not a run.json");
        auto argv = j.at("argv").get<std::vector<std::string>>();
        argv.erase(std::remove_if(argv.begin(), argv.end(), [](const std::string& a) { return a.rfind("--replay", 0) == 0; }),
                   argv.end());
        App inner(out_, err_, j.at("seed").get<std::uint64_t>());
        return inner.run(argv);
    }

    static Manifest open_manifest(const std::string& dir) { return read_manifest(dir); }

    int do_simulate(const DatasetSpec& ds, const fs::path& out) {
        log("simulate: " + std::to_string(ds.records) + " records into " + out.string());
        const auto m = build_dataset(ds, out);
        write_run(out, "simulate", to_json(ds));
        out_ << "simulated " << m.records.size() << " records (" << m.split_indices("train").size() << " train, "
             << m.split_indices("test").size() << " test) in " << out.string() << '\n';
        return 0;
    }

    int do_mask(const MaskSpec& ms, MaskKind kind, const Dims& hr, const fs::path& out) {
        const auto mask = make_mask(kind, ms);
        fs::create_directories(out);
        write_grid(out / "mask", mask.to_grid());
        nlohmann::json cfg{{"mask", to_json(ms)}, {"kind", mask_kind_name(kind)}, {"achieved_af", mask.achieved_af()}};
        out_ << "mask " << dims_string(ms.dims) << " samples " << mask.count() << " AF " << format_af(mask.achieved_af());
        if (!hr.empty()) {
            const double eq = equivalent_af(mask, hr).value();
            cfg["hr_dims"] = hr;
            cfg["equivalent_af"] = eq;
            out_ << " equivalent AF vs " << dims_string(hr) << " " << format_af(eq);
        }
        out_ << '\n';
        write_run(out, "mask", cfg);
        return 0;
    }

    int do_recon(const std::string& manifest, const fs::path& out, std::string method, const std::string& split,
                 const SolverConfig& solver) {
        // pgd and ki are aliases for the proximal-gradient solve and k-space interpolation.
        if (method == "pgd") method = "variational";
        if (method == "ki") method = "strategy2";
        require(method == "zerofill" || method == "variational" || method == "strategy2", ErrorCategory::usage,
                "unknown recon method '" + method + "'");
        const auto m = open_manifest(manifest);
        fs::create_directories(out);
        std::size_t n = 0;
        for (auto i : m.split_indices(split)) {
            const auto r = load_record(m, i);
            const auto model = r.model(m.spec.lr_dims);
            ComplexGrid x;
            if (method == "zerofill") x = model.adjoint(r.y);
            else if (method == "variational") x = solve_variational(model, r.y, solver).x;
            else x = strategy2_recon(r, m, solver);
            write_grid(out / r.id, x);
            ++n;
        }
        write_run(out, "recon",
                  {{"manifest", manifest}, {"method", method}, {"split", split}, {"solver", SolverFlags::to_json(solver)}});
        out_ << "recon " << method << ": " << n << " records in " << out.string() << '\n';
        return 0;
    }

    int do_train(const std::string& manifest, const fs::path& out, const gan::GanConfig& cfg) {
        const auto m = open_manifest(manifest);
        write_run(out, "train", {{"manifest", manifest}, {"gan", to_json(cfg)}});
        const auto res = gan::train(m, cfg, out);
        out_ << "trained " << res.steps << " steps over " << res.epochs_done << " epochs";
        if (!res.log.empty()) out_ << ", final L_G " << res.log.back().loss_g;
        out_ << "; checkpoint " << res.checkpoint.string() << '\n';
        return 0;
    }

    int do_infer(const std::string& manifest, const std::string& ckpt, const fs::path& out, const std::string& split) {
        const auto m = open_manifest(manifest);
        const auto model = gan::load_model(ckpt);
        fs::create_directories(out);
        std::size_t n = 0;
        for (auto i : m.split_indices(split)) {
            const auto r = load_record(m, i);
            write_grid(out / r.id, gan::infer(model, r.y, r.mask, r.sens, m.spec.hr_dims()));
            ++n;
        }
        write_run(out, "infer", {{"manifest", manifest}, {"checkpoint", ckpt}, {"split", split}});
        out_ << "inferred " << n << " records into " << out.string() << '\n';
        return 0;
    }

    int do_eval(const std::string& manifest, const std::string& outputs, const fs::path& out, const std::string& method,
                const std::string& split) {
        const auto m = open_manifest(manifest);
        const auto rep = evaluate(m, outputs, method, split);
        fs::create_directories(out);
        write_json(out / "report.json", to_json(rep));
        write_run(out, "eval", {{"manifest", manifest}, {"outputs", outputs}, {"method", method}, {"split", split}});
        out_ << format_table(rep);
        return 0;
    }

    int do_compare(const std::string& manifest, const std::string& ckpt, const fs::path& out, CompareConfig cfg) {
        const auto m = open_manifest(manifest);
        const auto model = gan::load_model(ckpt);
        cfg.out_dir = out;
        nlohmann::json j{{"manifest", manifest},
                         {"checkpoint", ckpt},
                         {"s1_af", cfg.s1_af},
                         {"s1_center", cfg.s1_center.empty() ? m.spec.mask.center_size : cfg.s1_center},
                         {"af_tolerance", cfg.af_tolerance},
                         {"split", cfg.split},
                         {"solver", SolverFlags::to_json(cfg.solver)}};
        const auto rep = compare_strategies(m, model, cfg);
        fs::create_directories(out);
        write_json(out / "report.json", to_json(rep));
        write_run(out, "compare", j);
        out_ << format_table(rep);
        return 0;
    }
};

inline int run(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::uint64_t seed = 0;
    try {
        seed = seed_from_env();
    } catch (const Error& e) {
        err << "error: " << category_name(e.category()) << ": " << e.what() << '\n';
        return 2;
    }
    std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
    return App(out, err, seed).run(std::move(args));
}

}  // namespace srr::cli
