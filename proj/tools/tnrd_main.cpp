#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "tnrd/dataset.hpp"
#include "tnrd/model_io.hpp"
#include "tnrd/pgm_io.hpp"
#include "tnrd/training.hpp"

using namespace tnrd;

namespace {

ProblemKind parse_problem(const std::string& name, double param) {
    if (name == "denoise") return ProblemKind::make_denoise(param);
    if (name == "sisr") return ProblemKind::make_sisr(static_cast<int>(param));
    if (name == "deblock") return ProblemKind::make_deblock(static_cast<int>(param));
    throw CLI::ValidationError("--problem must be denoise, sisr or deblock");
}

TrainScheme parse_scheme(const std::string& s) {
    if (s == "greedy") return TrainScheme::greedy;
    if (s == "joint") return TrainScheme::joint;
    if (s == "greedy+joint") return TrainScheme::greedy_then_joint;
    throw CLI::ValidationError("--scheme must be greedy, joint or greedy+joint");
}

// Shrinks a crop to the operator grid of the problem (factor / block (8)).
Image fit_to_grid(const Image& img, const ProblemKind& problem) {
    int w = img.width, h = img.height;
    if (problem.task == ProblemKind::sisr) {
        w -= w % problem.factor;
        h -= h % problem.factor;
    } else if (problem.task == ProblemKind::deblock) {
        w -= w % 8;
        h -= h % 8;
    }
    if (w == img.width && h == img.height) return img;
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x, y);
    return out;
}

// Observation synthesized the same way ingestion does it.
Image degrade(const Image& gt, const ProblemKind& problem, uint64_t seed) {
    switch (problem.task) {
        case ProblemKind::denoise: return add_gaussian_noise(gt, problem.sigma, seed);
        case ProblemKind::sisr: return bicubic_downsample(gt, problem.factor);
        case ProblemKind::deblock: return jpeg_roundtrip(gt, problem.quality).decoded;
    }
    return gt;
}

// Baseline restoration the model competes with (input itself, or bicubic).
Image baseline(const Image& f, const ProblemKind& problem) {
    if (problem.task == ProblemKind::sisr) return bicubic_upscale(f, problem.factor);
    return f;
}

int cmd_train(const std::string& problem_name, double param, int stages, int kernel, int filters,
              const std::string& data_dir, int crop_size, int crops_per_image,
              const std::string& scheme_name, int iters, uint64_t seed, int workers,
              const std::string& rbf_kind, const std::string& out_path) {
    ProblemKind problem = parse_problem(problem_name, param);
    problem.validate(false);

    RbfSpec rbf;
    if (rbf_kind == "triangular")
        rbf.kind = RbfKind::triangular;
    else if (rbf_kind != "gaussian")
        throw CLI::ValidationError("--rbf must be gaussian or triangular");

    DatasetManifest manifest;
    manifest.image_paths = list_pgm_files(data_dir);
    if (manifest.image_paths.empty()) {
        std::cerr << "no .pgm images under " << data_dir << "\n";
        return 1;
    }
    manifest.crop_size = crop_size;
    manifest.crops_per_image = crops_per_image;
    manifest.problem = problem;
    manifest.master_seed = seed;
    const auto samples = ingest_dataset(manifest);
    std::cout << "ingested " << samples.size() << " samples from " << manifest.image_paths.size()
              << " images\n";

    Model skeleton = plain_init(kernel, filters, rbf, stages, problem);
    TrainConfig cfg;
    cfg.scheme = parse_scheme(scheme_name);
    cfg.lbfgs_iters = iters;
    cfg.seed = seed;
    cfg.parallel_workers = workers;
    cfg.phase_log = [](const std::string& phase) { std::cout << "phase: " << phase << "\n"; };
    cfg.log = [](int iter, double f, double gnorm, double step) {
        std::printf("iter=%d loss=%.8g gnorm=%.4g step=%.4g\n", iter, f, gnorm, step);
    };
    const Model trained = train(samples, skeleton, cfg);
    save_model(trained, out_path);
    std::cout << "saved " << out_path << "\n";
    return 0;
}

int cmd_apply(const std::string& model_path, const std::string& in_path,
              const std::string& out_path) {
    const Model model = load_model(model_path);
    Image f = load_pgm(in_path);
    if (model.problem.task == ProblemKind::deblock) {
        // the quantization box is derived from the decoded input itself
        f = fit_to_grid(f, model.problem);
    }
    const Image restored = infer(model, f);
    save_pgm(restored, out_path);
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& gt_dir,
             const std::string& restored_dir, const std::string& report_path, uint64_t seed) {
    const auto gt_paths = list_pgm_files(gt_dir);
    if (gt_paths.empty()) {
        std::cerr << "no .pgm images under " << gt_dir << "\n";
        return 1;
    }
    std::ofstream report(report_path);
    if (!report) {
        std::cerr << "cannot write " << report_path << "\n";
        return 1;
    }
    report << "image,input_psnr,restored_psnr,exact\n";

    double sum_in = 0.0, sum_out = 0.0;
    int count = 0;
    Model model;
    const bool compare_only = !restored_dir.empty();
    if (!compare_only) model = load_model(model_path);

    for (const auto& path : gt_paths) {
        const std::string name = std::filesystem::path(path).filename().string();
        Image gt = load_pgm(path);
        Image restored;
        PsnrResult in_psnr{};
        if (compare_only) {
            const auto rp = std::filesystem::path(restored_dir) / name;
            if (!std::filesystem::exists(rp)) {
                std::cerr << "missing restored image: " << rp << "\n";
                return 1;
            }
            restored = load_pgm(rp.string());
            in_psnr = psnr(gt, restored);
        } else {
            gt = fit_to_grid(gt, model.problem);
            const uint64_t img_seed = seed * 1000003 + static_cast<uint64_t>(count);
            const Image f = degrade(gt, model.problem, img_seed);
            in_psnr = psnr(gt, baseline(f, model.problem));
            restored = infer(model, f);
        }
        const PsnrResult out_psnr = psnr(gt, restored);
        report << name << "," << in_psnr.db << "," << out_psnr.db << ","
               << (out_psnr.exact ? 1 : 0) << "\n";
        sum_in += in_psnr.db;
        sum_out += out_psnr.db;
        ++count;
    }
    report << "average," << sum_in / count << "," << sum_out / count << ",\n";
    std::cout << "evaluated " << count << " images: input " << sum_in / count << " dB -> restored "
              << sum_out / count << " dB\n";
    return 0;
}

int cmd_gradcheck(const std::string& problem_name, double param, int size, int kernel, int filters,
                  int stages, double tol, uint64_t seed, double fd_step) {
    const ProblemKind problem = parse_problem(problem_name, param);
    if (fd_step <= 0.0) fd_step = problem.task == ProblemKind::deblock ? 3e-5 : 1e-5;
    const GradCheckReport rep =
        toy_gradient_check(problem, size, kernel, filters, stages, -1, seed, fd_step, tol, 1e-7);
    std::printf("gradcheck %s: dim=%d worst_rel=%.3e worst_abs=%.3e -> %s\n",
                problem.name().c_str(), rep.dim, rep.worst_rel, rep.worst_abs,
                rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 1;
}

int cmd_synthesize(const std::string& model_path, int stage, const std::string& size_str,
                   int steps, uint64_t seed, const std::string& out_path) {
    const Model model = load_model(model_path);
    if (stage < 1 || stage > model.stage_count()) {
        std::cerr << "--stage must be in [1, " << model.stage_count() << "]\n";
        return 1;
    }
    int w = 0, h = 0;
    if (std::sscanf(size_str.c_str(), "%dx%d", &w, &h) != 2 || w < 8 || h < 8) {
        std::cerr << "--size must look like 128x128\n";
        return 1;
    }
    const Image pattern =
        synthesize_pattern(model.stages[stage - 1], model.basis, model.rbf, w, h, steps, seed);
    save_pgm(pattern, out_path);
    return 0;
}

int cmd_export(const std::string& model_path, const std::string& filters_path,
               const std::string& penalties_path) {
    const Model model = load_model(model_path);

    if (!filters_path.empty()) {
        // stages as rows, filters as columns; each kernel blown up 16x with
        // per-kernel normalization into [0,255]
        const int cell = model.kernel_size * 16;
        const int gap = 4;
        const int w = model.filter_count * (cell + gap) + gap;
        const int h = model.stage_count() * (cell + gap) + gap;
        Image sheet(w, h, 128.0);
        for (int t = 0; t < model.stage_count(); ++t) {
            for (int i = 0; i < model.filter_count; ++i) {
                const Kernel k = materialize(model.stages[t].filters[i], model.basis);
                double lo = k.taps[0], hi = k.taps[0];
                for (double v : k.taps) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
                const int ox = gap + i * (cell + gap);
                const int oy = gap + t * (cell + gap);
                for (int y = 0; y < cell; ++y)
                    for (int x = 0; x < cell; ++x)
                        sheet.at(ox + x, oy + y) =
                            (k.at(x / 16, y / 16) - lo) * scale;
            }
        }
        save_pgm(sheet, filters_path);
    }

    if (!penalties_path.empty()) {
        std::ofstream csv(penalties_path);
        if (!csv) {
            std::cerr << "cannot write " << penalties_path << "\n";
            return 1;
        }
        csv << "stage,filter,z,phi,rho\n";
        csv.precision(10);
        for (int t = 0; t < model.stage_count(); ++t)
            for (int i = 0; i < model.filter_count; ++i)
                for (double z = -310.0; z <= 310.0; z += 2.0)
                    csv << t + 1 << "," << i << "," << z << ","
                        << eval_phi(model.stages[t].influences[i], model.rbf, z) << ","
                        << eval_rho(model.stages[t].influences[i], model.rbf, z) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trainable nonlinear reaction-diffusion image restoration"};
    app.require_subcommand(1);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a diffusion model on an image directory");
    std::string t_problem = "denoise", t_data, t_scheme = "greedy+joint", t_out = "model.tnrd";
    std::string t_rbf = "gaussian";
    double t_param = 25.0;
    int t_stages = 5, t_kernel = 5, t_filters = 0, t_crop = 64, t_crops_per = 4, t_iters = 200;
    int t_workers = 0;
    uint64_t t_seed = 0;
    train_cmd->add_option("--problem", t_problem, "denoise | sisr | deblock")->required();
    train_cmd->add_option("--param", t_param, "sigma / factor / quality")->required();
    train_cmd->add_option("--stages", t_stages, "diffusion stages T");
    train_cmd->add_option("--kernel", t_kernel, "odd kernel size m");
    train_cmd->add_option("--filters", t_filters, "filters per stage (default m*m-1)");
    train_cmd->add_option("--data", t_data, "directory of .pgm training images")->required();
    train_cmd->add_option("--crop", t_crop, "crop size");
    train_cmd->add_option("--crops-per-image", t_crops_per, "crops per image");
    train_cmd->add_option("--scheme", t_scheme, "greedy | joint | greedy+joint");
    train_cmd->add_option("--iters", t_iters, "L-BFGS iterations per phase");
    train_cmd->add_option("--seed", t_seed, "master seed for ingestion");
    train_cmd->add_option("--workers", t_workers, "parallel workers (0 = all cores)");
    train_cmd->add_option("--rbf", t_rbf, "gaussian | triangular");
    train_cmd->add_option("--out", t_out, "output model path");

    // apply
    auto* apply_cmd = app.add_subcommand("apply", "restore one image with a trained model");
    std::string a_model, a_in, a_out;
    apply_cmd->add_option("--model", a_model)->required();
    apply_cmd->add_option("--in", a_in)->required();
    apply_cmd->add_option("--out", a_out)->required();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "PSNR report over a ground-truth directory");
    std::string e_model, e_gt, e_restored, e_report = "psnr.csv";
    uint64_t e_seed = 0;
    eval_cmd->add_option("--model", e_model, "model (omit with --restored-dir)");
    eval_cmd->add_option("--gt-dir", e_gt)->required();
    eval_cmd->add_option("--restored-dir", e_restored,
                         "compare gt against existing restorations instead of running the model");
    eval_cmd->add_option("--report", e_report, "CSV output path");
    eval_cmd->add_option("--seed", e_seed, "seed for synthesized degradations");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "analytic vs finite-difference gradients");
    std::string g_problem = "denoise";
    double g_param = 25.0, g_tol = 1e-5, g_step = 0.0;
    int g_size = 8, g_kernel = 3, g_filters = 2, g_stages = 2;
    uint64_t g_seed = 1;
    grad_cmd->add_option("--problem", g_problem, "denoise | sisr | deblock");
    grad_cmd->add_option("--param", g_param, "sigma / factor / quality");
    grad_cmd->add_option("--size", g_size, "toy image size");
    grad_cmd->add_option("--kernel", g_kernel);
    grad_cmd->add_option("--filters", g_filters);
    grad_cmd->add_option("--stages", g_stages);
    grad_cmd->add_option("--tol", g_tol, "relative tolerance");
    grad_cmd->add_option("--seed", g_seed);
    grad_cmd->add_option("--fd-step", g_step, "finite-difference step (0 = per-problem default)");

    // synthesize
    auto* syn_cmd = app.add_subcommand("synthesize", "pattern formation from uniform noise");
    std::string s_model, s_size = "128x128", s_out = "pattern.pgm";
    int s_stage = 1, s_steps = 50;
    uint64_t s_seed = 0;
    syn_cmd->add_option("--model", s_model)->required();
    syn_cmd->add_option("--stage", s_stage, "1-based stage index");
    syn_cmd->add_option("--size", s_size, "WxH");
    syn_cmd->add_option("--steps", s_steps);
    syn_cmd->add_option("--seed", s_seed);
    syn_cmd->add_option("--out", s_out);

    // export
    auto* exp_cmd = app.add_subcommand("export", "dump filters and penalty tables");
    std::string x_model, x_filters, x_penalties;
    exp_cmd->add_option("--model", x_model)->required();
    exp_cmd->add_option("--filters", x_filters, "filter sheet .pgm");
    exp_cmd->add_option("--penalties", x_penalties, "sampled (z, phi, rho) CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train_cmd) {
            if (t_filters <= 0) t_filters = t_kernel * t_kernel - 1;
            return cmd_train(t_problem, t_param, t_stages, t_kernel, t_filters, t_data, t_crop,
                             t_crops_per, t_scheme, t_iters, t_seed, t_workers, t_rbf, t_out);
        }
        if (*apply_cmd) return cmd_apply(a_model, a_in, a_out);
        if (*eval_cmd) {
            if (e_model.empty() && e_restored.empty()) {
                std::cerr << "eval needs --model or --restored-dir\n";
                return 1;
            }
            return cmd_eval(e_model, e_gt, e_restored, e_report, e_seed);
        }
        if (*grad_cmd)
            return cmd_gradcheck(g_problem, g_param, g_size, g_kernel, g_filters, g_stages, g_tol,
                                 g_seed, g_step);
        if (*syn_cmd) return cmd_synthesize(s_model, s_stage, s_size, s_steps, s_seed, s_out);
        if (*exp_cmd) return cmd_export(x_model, x_filters, x_penalties);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
