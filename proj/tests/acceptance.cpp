// Acceptance suite: runs every gate criterion in order and prints one
// PASS/FAIL line each. Exit code is nonzero if any gated criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "test_images.hpp"
#include "tnrd/dataset.hpp"
#include "tnrd/model_io.hpp"
#include "tnrd/training.hpp"

using namespace tnrd;

namespace {

struct Context {
    std::vector<TrainingSample> denoise_train;  // 32 crops, sigma 25
    std::vector<TrainingSample> denoise_test;   // 4 held-out crops
    Model denoise_model;                        // trained in criterion 5
    bool denoise_model_ready = false;
};

double dot(const Image& a, const Image& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a.data[i] * b.data[i];
    return s;
}

Image crop_region(const Image& img, int x0, int y0, int n) {
    Image out(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
    return out;
}

// --- criterion 1: gradient oracle suite ------------------------------------

bool criterion_gradients(std::string& detail) {
    const ProblemKind kinds[3] = {ProblemKind::make_denoise(25.0), ProblemKind::make_sisr(2),
                                  ProblemKind::make_deblock(10)};
    double worst = 0.0;
    int failures = 0;
    for (const auto& problem : kinds) {
        const double step = problem.task == ProblemKind::deblock ? 3e-5 : 1e-5;
        for (uint64_t cfg = 0; cfg < 20; ++cfg) {
            const int stages = 1 + static_cast<int>(cfg % 2);
            const GradCheckReport rep =
                toy_gradient_check(problem, 8, 3, 2, stages, -1, 1 + cfg, step);
            worst = std::max(worst, rep.worst_rel);
            if (!rep.pass) ++failures;
        }
    }
    std::ostringstream os;
    os << "60 toy configs (20 per problem kind), worst rel err " << worst;
    if (failures) os << ", " << failures << " failing";
    detail = os.str();
    return failures == 0;
}

// --- criterion 2: energy-descent equivalence --------------------------------

bool criterion_energy(std::string& detail) {
    const DctBasis basis = build_dct_basis(3);
    const RbfSpec rbf;
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        const bool do_sisr = seed % 2 == 1;
        const ProblemKind problem =
            do_sisr ? ProblemKind::make_sisr(2) : ProblemKind::make_denoise(25.0);
        StageParams s;
        s.lambda_raw = -1.0;
        s.filters.resize(2);
        s.influences.resize(2);
        for (int i = 0; i < 2; ++i) {
            s.filters[i].omega = testimg::uniform(8, 1, -1.0, 1.0, 500 + seed * 7 + i).data;
            s.influences[i].w = testimg::uniform(63, 1, -0.5, 0.5, 600 + seed * 7 + i).data;
        }
        const Image u = testimg::uniform(8, 8, 0.0, 255.0, 700 + seed);
        const Image f = do_sisr ? testimg::uniform(4, 4, 0.0, 255.0, 800 + seed)
                                : testimg::uniform(8, 8, 0.0, 255.0, 800 + seed);
        const Image out = stage_forward(u, f, s, problem, basis, rbf, 0, BoundaryRule::zero);
        const double h = 1e-4;
        for (size_t p = 0; p < u.size(); ++p) {
            Image up = u, um = u;
            up.data[p] += h;
            um.data[p] -= h;
            const double fd = (energy(up, f, s, problem, basis, rbf, BoundaryRule::zero) -
                               energy(um, f, s, problem, basis, rbf, BoundaryRule::zero)) /
                              (2.0 * h);
            const double update = u.data[p] - out.data[p];
            const double rel =
                std::abs(update - fd) / std::max({std::abs(fd), std::abs(update), 1e-8});
            worst = std::max(worst, rel);
        }
    }
    std::ostringstream os;
    os << "10 instances (denoise+sisr), worst rel err " << worst;
    detail = os.str();
    return worst < 1e-5;
}

// --- criterion 3: adjoint identities ----------------------------------------

bool criterion_adjoints(std::string& detail) {
    double worst = 0.0;

    // convolution under the zero boundary vs rotated kernel
    for (uint64_t seed = 0; seed < 5; ++seed) {
        const Image u = testimg::uniform(16, 13, -1.0, 1.0, 900 + seed);
        const Image v = testimg::uniform(16, 13, -1.0, 1.0, 910 + seed);
        Kernel k(3);
        k.taps = testimg::uniform(3, 3, -1.0, 1.0, 920 + seed).data;
        const double lhs = dot(convolve(u, k, BoundaryRule::zero), v);
        const double rhs = dot(u, convolve(v, rotate180(k), BoundaryRule::zero));
        worst = std::max(worst, std::abs(lhs - rhs) / std::max(std::abs(lhs), 1.0));
    }

    // bicubic A vs A^T via dense matrices at 12x12 -> 6x6 / 4x4
    for (int factor : {2, 3}) {
        const int hw = 12, lw = hw / factor;
        for (int j = 0; j < lw * lw; ++j) {
            Image e(lw, lw, 0.0);
            e.data[j] = 1.0;
            const Image col = bicubic_downsample_adjoint(e, factor, hw, hw);
            // column j of A^T equals row j of A; check against forward rows
            for (int i = 0; i < hw * hw; ++i) {
                Image ei(hw, hw, 0.0);
                ei.data[i] = 1.0;
                // avoid building the full dense matrix twice: sample a subset
                if ((i * 7 + j) % 23 != 0) continue;
                const double aij = bicubic_downsample(ei, factor).data[j];
                worst = std::max(worst, std::abs(col.data[i] - aij));
            }
        }
    }

    // block DCT orthonormality: D^T D = I and Parseval at 16x16
    const Image u = testimg::uniform(16, 16, -2.0, 2.0, 930);
    const Image rt = block_idct(block_dct(u));
    for (size_t i = 0; i < u.size(); ++i)
        worst = std::max(worst, std::abs(rt.data[i] - u.data[i]));
    const Image cu = block_dct(u);
    worst = std::max(worst, std::abs(std::sqrt(dot(u, u)) - std::sqrt(dot(cu, cu))));

    std::ostringstream os;
    os << "conv/bicubic/block-DCT adjoints, worst abs err " << worst;
    detail = os.str();
    return worst < 1e-10;
}

// --- criterion 4: RBF approximation ------------------------------------------

bool criterion_rbf(std::string& detail) {
    const RbfSpec spec;
    const auto target = [](double z) {
        const double s = 1.0 / 20.0;
        return 2.0 * s * z / (1.0 + s * s * z * z);
    };
    const InfluenceFunction f = fit_weights(target, spec, sample_grid(-310.0, 310.0, 2.5));
    double worst = 0.0;
    for (double z = -310.0; z <= 310.0; z += 0.5)
        worst = std::max(worst, std::abs(eval_phi(f, spec, z) - target(z)));
    std::ostringstream os;
    os << "63-center Gaussian fit of the scaled odd rational, max abs err " << worst;
    detail = os.str();
    return worst < 0.01;
}

// --- criterion 5: desk-scale denoising training -------------------------------

void build_denoise_sets(Context& ctx) {
    // 32 training crops (64x64) from 8 synthetic scenes, 4 held-out crops
    // from 4 separate scenes
    for (int img = 0; img < 8; ++img) {
        const Image scene = testimg::scene(160, 160, 4000 + img);
        for (int c = 0; c < 4; ++c) {
            TrainingSample s;
            s.u_gt = crop_region(scene, 8 + 40 * (c % 2), 8 + 40 * (c / 2), 64);
            s.f = add_gaussian_noise(s.u_gt, 25.0, 5000 + img * 16 + c);
            ctx.denoise_train.push_back(std::move(s));
        }
    }
    for (int img = 0; img < 4; ++img) {
        const Image scene = testimg::scene(160, 160, 4100 + img);
        TrainingSample s;
        s.u_gt = crop_region(scene, 48, 48, 64);
        s.f = add_gaussian_noise(s.u_gt, 25.0, 5200 + img);
        ctx.denoise_test.push_back(std::move(s));
    }
}

bool criterion_desk_training(Context& ctx, std::string& detail) {
    build_denoise_sets(ctx);
    const Model init = plain_init(3, 8, RbfSpec{}, 2, ProblemKind::make_denoise(25.0));

    const auto training_loss = [&ctx](const Model& m) {
        double acc = 0.0;
        for (const auto& s : ctx.denoise_train) acc += loss(infer(m, s.f), s.u_gt);
        return acc;
    };
    const double init_loss = training_loss(init);

    TrainConfig cfg;
    cfg.scheme = TrainScheme::greedy;
    cfg.lbfgs_iters = 100;
    const Model greedy = train(ctx.denoise_train, init, cfg);
    const double greedy_loss = training_loss(greedy);

    cfg.scheme = TrainScheme::joint;
    const Model joint = train(ctx.denoise_train, greedy, cfg);
    const double joint_loss = training_loss(joint);

    double noisy_psnr = 0.0, restored_psnr = 0.0;
    for (const auto& s : ctx.denoise_test) {
        noisy_psnr += psnr(s.u_gt, s.f).db;
        restored_psnr += psnr(s.u_gt, infer(joint, s.f)).db;
    }
    noisy_psnr /= ctx.denoise_test.size();
    restored_psnr /= ctx.denoise_test.size();

    ctx.denoise_model = joint;
    ctx.denoise_model_ready = true;

    const bool pass_a = joint_loss < init_loss && greedy_loss < init_loss;
    const bool pass_b = restored_psnr >= noisy_psnr + 4.0;
    const bool pass_c = joint_loss <= greedy_loss + 1e-9;
    std::ostringstream os;
    os << "loss init " << init_loss << " -> greedy " << greedy_loss << " -> joint " << joint_loss
       << "; held-out " << noisy_psnr << " dB -> " << restored_psnr << " dB";
    detail = os.str();
    return pass_a && pass_b && pass_c;
}

// --- criterion 7: deblocking feasibility --------------------------------------

bool criterion_deblock(std::string& detail) {
    const DctBasis basis = build_dct_basis(3);
    const RbfSpec rbf;
    StageParams null_stage;
    null_stage.lambda_raw = -700.0;
    null_stage.filters.resize(2);
    null_stage.influences.resize(2);
    for (int i = 0; i < 2; ++i) {
        null_stage.filters[i].omega.assign(8, 0.0);
        null_stage.filters[i].omega[i] = 1.0;
        null_stage.influences[i].w.assign(63, 0.0);
    }

    double worst = 0.0;
    int idx = 0;
    for (int q : {10, 20, 30}) {
        const ProblemKind problem = ProblemKind::make_deblock(q);
        for (int rep = 0; rep < 7 - (q == 30 ? 1 : 0); ++rep, ++idx) {
            const Image clean = testimg::scene(64, 64, 6000 + idx);
            const JpegRoundtrip rt = jpeg_roundtrip(clean, q);
            const QuantBox box = quant_box_from_jpeg(rt.dequantized_coeffs, q);

            // projection idempotence
            const Image u = testimg::uniform(64, 64, -20.0, 275.0, 6100 + idx);
            const Image p1 = prox_deblock(u, box);
            const Image p2 = prox_deblock(p1, box);
            for (size_t i = 0; i < p1.size(); ++i)
                worst = std::max(worst, std::abs(p1.data[i] - p2.data[i]));

            // decoded image is a fixed point
            const Image fx = prox_deblock(rt.decoded, box);
            for (size_t i = 0; i < fx.size(); ++i)
                worst = std::max(worst, std::abs(fx.data[i] - rt.decoded.data[i]));

            // a zero-parameter diffusion stage keeps the image feasible
            const Image padded = pad_symmetric(rt.decoded, 2);
            const Image stepped = stage_forward(padded, rt.decoded, null_stage, problem, basis,
                                                rbf, 2, BoundaryRule::symmetric, &box);
            const Image inner = crop(stepped, 2);
            const Image proj = prox_deblock(inner, box);
            for (size_t i = 0; i < inner.size(); ++i)
                worst = std::max(worst, std::abs(proj.data[i] - inner.data[i]));
        }
    }
    std::ostringstream os;
    os << idx << " quantization-simulated images at q in {10,20,30}, worst abs dev " << worst;
    detail = os.str();
    return worst < 1e-10;
}

// --- criterion 8: SISR smoke ---------------------------------------------------

bool criterion_sisr(std::string& detail) {
    const int factor = 3;
    std::vector<TrainingSample> train_set, test_set;
    for (int img = 0; img < 8; ++img) {
        const Image scene = testimg::scene(120, 120, 7000 + img);
        for (int c = 0; c < 2; ++c) {
            TrainingSample s;
            s.u_gt = crop_region(scene, 8 + 48 * c, 8 + 24 * c, 48);
            s.f = bicubic_downsample(s.u_gt, factor);
            train_set.push_back(std::move(s));
        }
    }
    for (int img = 0; img < 4; ++img) {
        const Image scene = testimg::scene(120, 120, 7100 + img);
        TrainingSample s;
        s.u_gt = crop_region(scene, 36, 36, 48);
        s.f = bicubic_downsample(s.u_gt, factor);
        test_set.push_back(std::move(s));
    }

    const Model init = plain_init(3, 8, RbfSpec{}, 2, ProblemKind::make_sisr(factor));
    TrainConfig cfg;
    cfg.scheme = TrainScheme::greedy_then_joint;
    cfg.lbfgs_iters = 60;
    const Model model = train(train_set, init, cfg);

    double bicubic_psnr = 0.0, restored_psnr = 0.0;
    for (const auto& s : test_set) {
        bicubic_psnr += psnr(s.u_gt, bicubic_upscale(s.f, factor)).db;
        restored_psnr += psnr(s.u_gt, infer(model, s.f)).db;
    }
    bicubic_psnr /= test_set.size();
    restored_psnr /= test_set.size();

    std::ostringstream os;
    os << "x3 on 4 held-out crops: bicubic " << bicubic_psnr << " dB -> model " << restored_psnr
       << " dB";
    detail = os.str();
    return restored_psnr >= bicubic_psnr + 0.3;
}

// --- criterion 9: determinism ---------------------------------------------------

bool criterion_determinism(Context& ctx, std::string& detail) {
    std::vector<TrainingSample> subset(ctx.denoise_train.begin(), ctx.denoise_train.begin() + 8);
    const Model init = plain_init(3, 4, RbfSpec{}, 1, ProblemKind::make_denoise(25.0));
    TrainConfig cfg;
    cfg.scheme = TrainScheme::greedy;
    cfg.lbfgs_iters = 10;
    cfg.seed = 11;

    const auto dir = std::filesystem::temp_directory_path() / "tnrd_acceptance";
    std::filesystem::create_directories(dir);
    cfg.parallel_workers = 1;
    save_model(train(subset, init, cfg), (dir / "a.tnrd").string());
    cfg.parallel_workers = 2;
    save_model(train(subset, init, cfg), (dir / "b.tnrd").string());

    const auto slurp = [](const std::filesystem::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    const bool files_equal = slurp(dir / "a.tnrd") == slurp(dir / "b.tnrd");

    bool apply_stable = true;
    if (ctx.denoise_model_ready) {
        const Image r1 = infer(ctx.denoise_model, ctx.denoise_test[0].f);
        const Image r2 = infer(ctx.denoise_model, ctx.denoise_test[0].f);
        for (size_t i = 0; i < r1.size(); ++i) apply_stable &= r1.data[i] == r2.data[i];
    }
    detail = std::string("model files byte-identical across runs and worker counts: ") +
             (files_equal ? "yes" : "NO") + "; apply bit-stable: " + (apply_stable ? "yes" : "NO");
    return files_equal && apply_stable;
}

// --- criterion 10: pattern synthesis ---------------------------------------------

bool criterion_patterns(Context& ctx, std::string& detail) {
    if (!ctx.denoise_model_ready) {
        detail = "skipped: no trained model from criterion 5";
        return false;
    }
    const Model& m = ctx.denoise_model;
    const Image pattern =
        synthesize_pattern(m.stages[0], m.basis, m.rbf, 64, 64, 30, 12345);
    bool in_range = true;
    for (double v : pattern.data) in_range &= v >= 0.0 && v <= 255.0;

    // lag-1 autocorrelation of the input noise vs the diffused pattern
    const Image noise = testimg::uniform(64, 64, 0.0, 255.0, 12345);
    const double r_noise = lag1_autocorrelation(noise);
    const double r_pattern = lag1_autocorrelation(pattern);
    // measured on the first trained run: r_noise ~ 0.0, r_pattern ~ 0.9;
    // frozen margin below
    const double margin = 0.25;

    std::ostringstream os;
    os << "lag-1 autocorrelation noise " << r_noise << " -> pattern " << r_pattern
       << " (margin " << margin << "), range " << (in_range ? "ok" : "violated");
    detail = os.str();
    return in_range && (r_pattern >= r_noise + margin);
}

struct Criterion {
    int number;
    std::string name;
    std::function<bool(std::string&)> run;
    bool gated = true;
};

}  // namespace

int main() {
    Context ctx;
    std::vector<Criterion> criteria;
    criteria.push_back({1, "gradient oracle suite", criterion_gradients});
    criteria.push_back({2, "energy-descent equivalence", criterion_energy});
    criteria.push_back({3, "adjoint identities", criterion_adjoints});
    criteria.push_back({4, "rbf approximation quality", criterion_rbf});
    criteria.push_back({5, "desk-scale denoising training",
                        [&ctx](std::string& d) { return criterion_desk_training(ctx, d); }});
    criteria.push_back({6, "full-scale reproduction", [](std::string& d) {
                            d = "documented, not CI-gated: 400 images of 180x180, sigma 25; "
                                "5-stage 5x5 target 28.78 dB and 7x7 target 28.92 dB (+-0.15) "
                                "on the 68-image test set; multi-day CPU runtime";
                            return true;
                        },
                        /*gated=*/false});
    criteria.push_back({7, "jpeg deblocking feasibility", criterion_deblock});
    criteria.push_back({8, "sisr smoke training",
                        [&ctx](std::string& d) { (void)ctx; return criterion_sisr(d); }});
    criteria.push_back({9, "determinism",
                        [&ctx](std::string& d) { return criterion_determinism(ctx, d); }});
    criteria.push_back({10, "pattern synthesis contract",
                        [&ctx](std::string& d) { return criterion_patterns(ctx, d); }});

    int failures = 0;
    for (auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const char* verdict = c.gated ? (ok ? "PASS" : "FAIL") : "DOCUMENTED";
        std::printf("%s  criterion %2d (%s): %s  [%.1fs]\n", verdict, c.number, c.name.c_str(),
                    detail.c_str(), secs);
        std::fflush(stdout);
        if (c.gated && !ok) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
