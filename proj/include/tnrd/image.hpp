#ifndef TNRD_IMAGE_HPP
#define TNRD_IMAGE_HPP

#include <cstdint>
#include <vector>

namespace tnrd {

/// 2D grayscale field, row-major doubles. Intensities are nominally in
/// [0,255] but never clamped; diffusion operates on unconstrained reals.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // size == width*height, index = y*width + x

    Image() = default;
    Image(int w, int h, double fill = 0.0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    double& at(int x, int y) { return data[static_cast<size_t>(y) * width + x]; }
    double at(int x, int y) const { return data[static_cast<size_t>(y) * width + x]; }
    size_t size() const { return data.size(); }
    bool same_dims(const Image& o) const { return width == o.width && height == o.height; }
};

/// Square convolution kernel with odd, centered support.
struct Kernel {
    int size = 0;               // odd
    std::vector<double> taps;   // row-major, size*size

    Kernel() = default;
    explicit Kernel(int m) : size(m), taps(static_cast<size_t>(m) * m, 0.0) {}

    double& at(int x, int y) { return taps[static_cast<size_t>(y) * size + x]; }
    double at(int x, int y) const { return taps[static_cast<size_t>(y) * size + x]; }
    int radius() const { return (size - 1) / 2; }
};

enum class BoundaryRule {
    symmetric,  // half-sample reflection, edge pixel duplicated; pipeline default
    zero,
};

/// out(p) = sum_q k(q) * img(p - q)  (true convolution, kernel flipped
/// relative to correlation). Output dims equal input dims.
Image convolve(const Image& img, const Kernel& k, BoundaryRule b);

/// Exact transpose of the linear map convolve(., k, b). For b == zero this
/// coincides with convolve(., rotate180(k), zero); for the symmetric rule the
/// boundary folds differ and the scatter form here is the true adjoint.
Image convolve_adjoint(const Image& img, const Kernel& k, BoundaryRule b);

/// Gradient of convolve(img, k, b) with respect to the kernel taps:
/// result(q) = sum_p grad_out(p) * img_ext(p - q), img_ext extended per b.
Kernel convolve_kernel_gradient(const Image& img, const Image& grad_out, int m, BoundaryRule b);

Kernel rotate180(const Kernel& k);

/// Half-sample symmetric padding: [1,2,3] with border 2 -> [2,1,1,2,3,3,2].
Image pad_symmetric(const Image& img, int border);
Image crop(const Image& img, int border);

/// Writes src into dst at offset (border, border); dst must be the padded canvas.
void embed_interior(Image& dst, const Image& src, int border);

struct PsnrResult {
    double db = 0.0;
    bool exact = false;  // images identical; db capped at 99.0
};

double mse(const Image& a, const Image& b);
PsnrResult psnr(const Image& a, const Image& b, double peak = 255.0);

/// I.i.d. zero-mean Gaussian perturbation, deterministic given seed,
/// no clamping. Uses a fixed Box-Muller scheme so the stream is
/// platform-independent.
Image add_gaussian_noise(const Image& img, double sigma, uint64_t seed);

bool all_finite(const Image& img);

}  // namespace tnrd

#endif
