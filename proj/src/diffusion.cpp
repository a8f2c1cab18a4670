#include "tnrd/diffusion.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tnrd {

namespace {

void check_stage(const StageParams& s, const DctBasis& basis, const RbfSpec& rbf) {
    if (s.filters.size() != s.influences.size())
        throw std::invalid_argument("stage: filters and influences must have equal length");
    for (const auto& f : s.filters)
        if (f.omega.size() != basis.atoms.size())
            throw std::invalid_argument("stage: omega length does not match basis");
    for (const auto& w : s.influences)
        if (static_cast<int>(w.w.size()) != rbf.center_count)
            throw std::invalid_argument("stage: influence weight count does not match rbf grid");
}

}  // namespace

double StageParams::lambda() const { return std::exp(lambda_raw); }

void Model::validate() const {
    if (stage_count() < 1) throw std::invalid_argument("Model: needs at least one stage");
    if (basis.m != kernel_size) throw std::invalid_argument("Model: basis size mismatch");
    problem.validate(false);
    rbf.validate();
    for (const auto& s : stages) {
        check_stage(s, basis, rbf);
        if (s.filter_count() != filter_count)
            throw std::invalid_argument("Model: stages disagree on filter count");
    }
}

int default_pad_border(int stages, int kernel_size) { return stages * (kernel_size - 1); }

StageTrace stage_forward_trace(const Image& u_prev, const Image& f, const StageParams& s,
                               const ProblemKind& problem, const DctBasis& basis,
                               const RbfSpec& rbf, int pad_border, BoundaryRule boundary,
                               const QuantBox* box) {
    check_stage(s, basis, rbf);
    StageTrace tr;
    const int n = s.filter_count();
    tr.responses.reserve(n);
    tr.phi_values.reserve(n);

    Image diffusion(u_prev.width, u_prev.height, 0.0);
    for (int i = 0; i < n; ++i) {
        const Kernel k = materialize(s.filters[i], basis);
        Image r = convolve(u_prev, k, boundary);
        Image z(r.width, r.height);
        for (size_t p = 0; p < r.size(); ++p)
            z.data[p] = eval_phi(s.influences[i], rbf, r.data[p]);
        const Image back = convolve(z, rotate180(k), boundary);
        for (size_t p = 0; p < diffusion.size(); ++p) diffusion.data[p] += back.data[p];
        tr.responses.push_back(std::move(r));
        tr.phi_values.push_back(std::move(z));
    }

    Image v = u_prev;
    for (size_t p = 0; p < v.size(); ++p) v.data[p] -= diffusion.data[p];

    switch (problem.task) {
        case ProblemKind::denoise: {
            if (!f.same_dims(u_prev))
                throw std::invalid_argument("stage_forward: denoise expects f on the padded canvas");
            const double lam = s.lambda();
            for (size_t p = 0; p < v.size(); ++p) v.data[p] -= lam * (u_prev.data[p] - f.data[p]);
            tr.pre_prox = v;
            tr.out = std::move(v);
            break;
        }
        case ProblemKind::sisr: {
            // A is defined on the unpadded canvas: evaluate on the interior,
            // re-embed, leave the padding band untouched by the reaction.
            const Image u_c = crop(u_prev, pad_border);
            const Image psi = reaction_sisr(u_c, f, s.lambda(), problem.factor);
            for (int y = 0; y < psi.height; ++y)
                for (int x = 0; x < psi.width; ++x)
                    v.at(x + pad_border, y + pad_border) -= psi.at(x, y);
            tr.pre_prox = v;
            tr.out = std::move(v);
            break;
        }
        case ProblemKind::deblock: {
            tr.pre_prox = v;
            QuantBox derived;
            if (box == nullptr) {
                derived = quant_box_from_jpeg(block_dct(f), problem.quality, false);
                box = &derived;
            }
            const Image v_c = crop(v, pad_border);
            const Image proj = prox_deblock(v_c, *box);
            embed_interior(v, proj, pad_border);
            tr.out = std::move(v);
            break;
        }
    }
    return tr;
}

Image stage_forward(const Image& u_prev, const Image& f, const StageParams& s,
                    const ProblemKind& problem, const DctBasis& basis, const RbfSpec& rbf,
                    int pad_border, BoundaryRule boundary, const QuantBox* box) {
    return stage_forward_trace(u_prev, f, s, problem, basis, rbf, pad_border, boundary, box).out;
}

Image stage_observation(const Model& model, const Image& f) {
    if (model.problem.task == ProblemKind::denoise) return pad_symmetric(f, model.pad_border);
    return f;
}

Image initial_estimate(const Model& model, const Image& f) {
    switch (model.problem.task) {
        case ProblemKind::denoise: return f;
        case ProblemKind::sisr: return bicubic_upscale(f, model.problem.factor);
        case ProblemKind::deblock: return f;
    }
    return f;
}

std::vector<Image> infer_trajectory(const Model& model, const Image& f, const QuantBox* box) {
    model.validate();
    QuantBox derived;
    if (model.problem.task == ProblemKind::deblock && box == nullptr) {
        derived = quant_box_from_jpeg(block_dct(f), model.problem.quality, false);
        box = &derived;
    }
    const Image f_obs = stage_observation(model, f);
    std::vector<Image> traj;
    traj.reserve(model.stage_count() + 1);
    traj.push_back(pad_symmetric(initial_estimate(model, f), model.pad_border));
    for (const auto& s : model.stages)
        traj.push_back(stage_forward(traj.back(), f_obs, s, model.problem, model.basis, model.rbf,
                                     model.pad_border, BoundaryRule::symmetric, box));
    return traj;
}

Image infer(const Model& model, const Image& f) {
    Image out = crop(infer_trajectory(model, f).back(), model.pad_border);
    if (!all_finite(out)) throw std::runtime_error("infer: non-finite samples in output");
    return out;
}

Image synthesize_pattern(const StageParams& s, const DctBasis& basis, const RbfSpec& rbf,
                         int width, int height, int steps, uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("synthesize_pattern: steps must be >= 1");
    std::mt19937_64 rng(seed);
    Image u(width, height);
    for (double& v : u.data)
        v = 255.0 * (static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0));

    const int n = s.filter_count();
    std::vector<Kernel> ks, kbars;
    for (int i = 0; i < n; ++i) {
        ks.push_back(materialize(s.filters[i], basis));
        kbars.push_back(rotate180(ks.back()));
    }
    for (int t = 0; t < steps; ++t) {
        Image diffusion(width, height, 0.0);
        for (int i = 0; i < n; ++i) {
            Image r = convolve(u, ks[i], BoundaryRule::symmetric);
            for (size_t p = 0; p < r.size(); ++p)
                r.data[p] = eval_phi(s.influences[i], rbf, r.data[p]);
            const Image back = convolve(r, kbars[i], BoundaryRule::symmetric);
            for (size_t p = 0; p < diffusion.size(); ++p) diffusion.data[p] += back.data[p];
        }
        // The unconstrained process is unstable; clamp to the image range.
        for (size_t p = 0; p < u.size(); ++p) {
            double v = u.data[p] - diffusion.data[p];
            u.data[p] = v < 0.0 ? 0.0 : (v > 255.0 ? 255.0 : v);
        }
    }
    return u;
}

double energy(const Image& u, const Image& f, const StageParams& s, const ProblemKind& problem,
              const DctBasis& basis, const RbfSpec& rbf, BoundaryRule boundary) {
    check_stage(s, basis, rbf);
    if (problem.task == ProblemKind::deblock)
        throw std::invalid_argument("energy: unsupported for the non-smooth deblocking problem");
    double e = 0.0;
    for (int i = 0; i < s.filter_count(); ++i) {
        const Kernel k = materialize(s.filters[i], basis);
        const Image r = convolve(u, k, boundary);
        for (double z : r.data) e += eval_rho(s.influences[i], rbf, z);
    }
    const double lam = s.lambda();
    if (problem.task == ProblemKind::denoise) {
        if (!u.same_dims(f)) throw std::invalid_argument("energy: dimension mismatch");
        double q = 0.0;
        for (size_t p = 0; p < u.size(); ++p) {
            const double d = u.data[p] - f.data[p];
            q += d * d;
        }
        e += 0.5 * lam * q;
    } else {
        const Image r = bicubic_downsample(u, problem.factor);
        if (!r.same_dims(f)) throw std::invalid_argument("energy: dimension mismatch");
        double q = 0.0;
        for (size_t p = 0; p < r.size(); ++p) {
            const double d = r.data[p] - f.data[p];
            q += d * d;
        }
        e += 0.5 * lam * q;
    }
    return e;
}

double lag1_autocorrelation(const Image& img) {
    double mean = 0.0;
    for (double v : img.data) mean += v;
    mean /= static_cast<double>(img.size());
    double var = 0.0, cov = 0.0;
    long pairs = 0;
    for (double v : img.data) {
        const double d = v - mean;
        var += d * d;
    }
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x + 1 < img.width; ++x) {
            cov += (img.at(x, y) - mean) * (img.at(x + 1, y) - mean);
            ++pairs;
        }
    for (int y = 0; y + 1 < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            cov += (img.at(x, y) - mean) * (img.at(x, y + 1) - mean);
            ++pairs;
        }
    if (var == 0.0 || pairs == 0) return 0.0;
    return (cov / pairs) / (var / static_cast<double>(img.size()));
}

}  // namespace tnrd
