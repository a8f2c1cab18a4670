#ifndef TNRD_DIFFUSION_HPP
#define TNRD_DIFFUSION_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "tnrd/data_terms.hpp"
#include "tnrd/filter_bank.hpp"
#include "tnrd/image.hpp"
#include "tnrd/influence.hpp"

namespace tnrd {

/// Parameters of one diffusion stage. lambda = exp(lambda_raw) keeps the
/// reaction weight positive by construction.
struct StageParams {
    double lambda_raw = 0.0;
    std::vector<FilterAtom> filters;
    std::vector<InfluenceFunction> influences;

    double lambda() const;
    int filter_count() const { return static_cast<int>(filters.size()); }
};

/// A trained multi-stage diffusion process plus its shared configuration.
struct Model {
    int kernel_size = 0;  // m
    int filter_count = 0; // N_k per stage
    DctBasis basis;
    RbfSpec rbf;
    ProblemKind problem;
    int pad_border = 0;   // default T*(m-1)
    std::vector<StageParams> stages;

    int stage_count() const { return static_cast<int>(stages.size()); }
    void validate() const;
};

int default_pad_border(int stages, int kernel_size);

/// Intermediates of one stage update, reused by the backward pass.
struct StageTrace {
    std::vector<Image> responses;   // r_i = k_i * u
    std::vector<Image> phi_values;  // z_i = phi_i(r_i)
    Image pre_prox;                 // v = u - diffusion - reaction
    Image out;
};

/// One diffusion step on the padded canvas:
///   u_t = Prox_G( u_prev - [ sum_i kbar_i * phi_i(k_i * u_prev) + psi(u_prev, f) ] ).
/// psi is lambda*(u-f) for denoising (f on the same padded canvas),
/// lambda*A^T(Au-f) embedded into the interior for SISR (f low-res), and zero
/// for deblocking where Prox_G projects the interior onto the quantization box.
/// box may be null for deblocking, in which case it is derived from f.
Image stage_forward(const Image& u_prev, const Image& f, const StageParams& s,
                    const ProblemKind& problem, const DctBasis& basis, const RbfSpec& rbf,
                    int pad_border, BoundaryRule boundary = BoundaryRule::symmetric,
                    const QuantBox* box = nullptr);

StageTrace stage_forward_trace(const Image& u_prev, const Image& f, const StageParams& s,
                               const ProblemKind& problem, const DctBasis& basis,
                               const RbfSpec& rbf, int pad_border,
                               BoundaryRule boundary = BoundaryRule::symmetric,
                               const QuantBox* box = nullptr);

/// Full inference: problem-specific u0, symmetric padding by model.pad_border,
/// T stages, crop. For deblocking the quantization box is derived once from f.
Image infer(const Model& model, const Image& f);

/// Per-stage snapshots u_0 .. u_T on the padded canvas (training forward pass).
std::vector<Image> infer_trajectory(const Model& model, const Image& f,
                                    const QuantBox* box = nullptr);

/// Observation the stages consume: padded f for denoising, f itself otherwise.
Image stage_observation(const Model& model, const Image& f);
Image initial_estimate(const Model& model, const Image& f);

/// Pure diffusion pattern synthesis from seeded uniform noise in [0,255],
/// clamped to [0,255] after every step.
Image synthesize_pattern(const StageParams& s, const DctBasis& basis, const RbfSpec& rbf,
                         int width, int height, int steps, uint64_t seed);

/// Stage energy sum_i sum_p rho_i((k_i*u)_p) + lambda/2 ||Au - f||^2 for the
/// smooth problems; the stage update is its explicit gradient step. Throws for
/// deblocking (non-smooth G).
double energy(const Image& u, const Image& f, const StageParams& s, const ProblemKind& problem,
              const DctBasis& basis, const RbfSpec& rbf,
              BoundaryRule boundary = BoundaryRule::symmetric);

/// Mean-removed lag-1 spatial autocorrelation (horizontal + vertical average);
/// near 0 for white noise, positive for spatially structured images.
double lag1_autocorrelation(const Image& img);

}  // namespace tnrd

#endif
