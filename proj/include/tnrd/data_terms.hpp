#ifndef TNRD_DATA_TERMS_HPP
#define TNRD_DATA_TERMS_HPP

#include <array>
#include <string>

#include "tnrd/image.hpp"

namespace tnrd {

/// Restoration task plus its degradation parameter. Parameters are
/// restricted to the benchmark values unless strict checking is disabled.
struct ProblemKind {
    enum Task { denoise, sisr, deblock };

    Task task = denoise;
    double sigma = 25.0;  // denoise
    int factor = 3;       // sisr: upscaling factor
    int quality = 10;     // deblock: JPEG quality

    static ProblemKind make_denoise(double sigma);
    static ProblemKind make_sisr(int factor);
    static ProblemKind make_deblock(int quality);

    void validate(bool strict = true) const;
    std::string name() const;
};

/// Per-coefficient interval of block-DCT values consistent with the observed
/// quantized data: [(d-0.5)*q, (d+0.5)*q] per coefficient.
struct QuantBox {
    Image lower;
    Image upper;
};

/// lambda * (u - f); the Gaussian-denoising reaction force.
Image reaction_denoise(const Image& u, const Image& f, double lambda);

/// Standard bicubic kernel (a = -0.5), align-centers sampling, half-sample
/// symmetric boundary. Forward decimation requires dims divisible by factor.
Image bicubic_downsample(const Image& h, int factor);
Image bicubic_downsample_adjoint(const Image& l, int factor, int out_width, int out_height);
Image bicubic_upscale(const Image& l, int factor);

/// lambda * A^T (A u - f) with A the bicubic decimation; dims(f) = dims(u)/factor.
Image reaction_sisr(const Image& u, const Image& f, double lambda, int factor);

/// Orthonormal 8x8 block DCT-II and its inverse. Dims must be multiples of 8.
Image block_dct(const Image& u);
Image block_idct(const Image& c);

/// Standard luminance quantization steps scaled to quality q, tiled over the
/// coefficient image dims (multiples of 8).
std::array<int, 64> jpeg_luminance_steps(int quality);
Image tile_quant_steps(int width, int height, int quality);

/// Box from a JPEG-consistent dequantized coefficient image: d is recovered
/// by rounding coeff/step, bounds are (d -+ 0.5) * step.
QuantBox quant_box_from_jpeg(const Image& dequantized_coeffs, int quality, bool strict = true);

/// Orthogonal projection onto the quantization constraint set:
/// D^T clamp(D u, box). Idempotent and 1-Lipschitz.
Image prox_deblock(const Image& u, const QuantBox& box);

}  // namespace tnrd

#endif
