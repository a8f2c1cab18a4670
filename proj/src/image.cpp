#include "tnrd/image.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace tnrd {

namespace {

// Half-sample reflection: -1 -> 0, -2 -> 1, n -> n-1, n+1 -> n-2. Loops so
// borders wider than the image keep reflecting.
int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

void check_conv_args(const Image& img, const Kernel& k) {
    if (img.width <= 0 || img.height <= 0)
        throw std::invalid_argument("convolve: empty image");
    if (k.size <= 0 || k.size % 2 == 0)
        throw std::invalid_argument("convolve: kernel size must be odd and positive");
    if (k.taps.size() != static_cast<size_t>(k.size) * k.size)
        throw std::invalid_argument("convolve: kernel tap count mismatch");
}

// Extends img by the kernel radius according to the boundary rule.
Image extend(const Image& img, int border, BoundaryRule b) {
    if (b == BoundaryRule::symmetric) return pad_symmetric(img, border);
    Image out(img.width + 2 * border, img.height + 2 * border, 0.0);
    embed_interior(out, img, border);
    return out;
}

}  // namespace

Image convolve(const Image& img, const Kernel& k, BoundaryRule b) {
    check_conv_args(img, k);
    const int m = k.size;
    const int h = k.radius();
    const Image src = extend(img, h, b);
    Image out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double sum = 0.0;
            // out(x,y) = sum_q k(q) img(x-qx, y-qy); padded index offset = h - q.
            for (int ky = 0; ky < m; ++ky) {
                const double* row = &src.data[static_cast<size_t>(y + (m - 1) - ky) * src.width + x];
                const double* tap = &k.taps[static_cast<size_t>(ky) * m];
                for (int kx = 0; kx < m; ++kx)
                    sum += tap[kx] * row[(m - 1) - kx];
            }
            out.at(x, y) = sum;
        }
    }
    return out;
}

Image convolve_adjoint(const Image& img, const Kernel& k, BoundaryRule b) {
    check_conv_args(img, k);
    const int m = k.size;
    const int h = k.radius();
    // Scatter into the extended canvas, then fold the borders back.
    Image acc(img.width + 2 * h, img.height + 2 * h, 0.0);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const double v = img.at(x, y);
            if (v == 0.0) continue;
            for (int ky = 0; ky < m; ++ky) {
                double* row = &acc.data[static_cast<size_t>(y + (m - 1) - ky) * acc.width + x];
                const double* tap = &k.taps[static_cast<size_t>(ky) * m];
                for (int kx = 0; kx < m; ++kx)
                    row[(m - 1) - kx] += tap[kx] * v;
            }
        }
    }
    Image out(img.width, img.height, 0.0);
    for (int py = 0; py < acc.height; ++py) {
        for (int px = 0; px < acc.width; ++px) {
            const double v = acc.at(px, py);
            if (v == 0.0) continue;
            const int sx = px - h;
            const int sy = py - h;
            if (b == BoundaryRule::zero) {
                if (sx < 0 || sx >= img.width || sy < 0 || sy >= img.height) continue;
                out.at(sx, sy) += v;
            } else {
                out.at(reflect_index(sx, img.width), reflect_index(sy, img.height)) += v;
            }
        }
    }
    return out;
}

Kernel convolve_kernel_gradient(const Image& img, const Image& grad_out, int m, BoundaryRule b) {
    if (!img.same_dims(grad_out))
        throw std::invalid_argument("convolve_kernel_gradient: dimension mismatch");
    if (m <= 0 || m % 2 == 0)
        throw std::invalid_argument("convolve_kernel_gradient: kernel size must be odd");
    const int h = (m - 1) / 2;
    const Image src = extend(img, h, b);
    Kernel g(m);
    for (int ky = 0; ky < m; ++ky) {
        for (int kx = 0; kx < m; ++kx) {
            // d out(p) / d k(q) = img_ext(p - q); padded index offset = h - q.
            double sum = 0.0;
            for (int y = 0; y < img.height; ++y) {
                const double* srow = &src.data[static_cast<size_t>(y + (m - 1) - ky) * src.width];
                const double* grow = &grad_out.data[static_cast<size_t>(y) * img.width];
                for (int x = 0; x < img.width; ++x)
                    sum += grow[x] * srow[x + (m - 1) - kx];
            }
            g.at(kx, ky) = sum;
        }
    }
    return g;
}

Kernel rotate180(const Kernel& k) {
    Kernel out(k.size);
    const size_t n = k.taps.size();
    for (size_t i = 0; i < n; ++i) out.taps[i] = k.taps[n - 1 - i];
    return out;
}

Image pad_symmetric(const Image& img, int border) {
    if (border < 0) throw std::invalid_argument("pad_symmetric: negative border");
    if (border == 0) return img;
    Image out(img.width + 2 * border, img.height + 2 * border);
    for (int y = 0; y < out.height; ++y) {
        const int sy = reflect_index(y - border, img.height);
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(reflect_index(x - border, img.width), sy);
    }
    return out;
}

Image crop(const Image& img, int border) {
    if (border < 0) throw std::invalid_argument("crop: negative border");
    if (border == 0) return img;
    if (2 * border >= img.width || 2 * border >= img.height)
        throw std::invalid_argument("crop: border too large");
    Image out(img.width - 2 * border, img.height - 2 * border);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x)
            out.at(x, y) = img.at(x + border, y + border);
    return out;
}

void embed_interior(Image& dst, const Image& src, int border) {
    if (dst.width != src.width + 2 * border || dst.height != src.height + 2 * border)
        throw std::invalid_argument("embed_interior: dimension mismatch");
    for (int y = 0; y < src.height; ++y)
        for (int x = 0; x < src.width; ++x)
            dst.at(x + border, y + border) = src.at(x, y);
}

double mse(const Image& a, const Image& b) {
    if (!a.same_dims(b)) throw std::invalid_argument("mse: dimension mismatch");
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

PsnrResult psnr(const Image& a, const Image& b, double peak) {
    const double m = mse(a, b);
    if (m == 0.0) return {99.0, true};
    const double db = 10.0 * std::log10(peak * peak / m);
    return {std::min(db, 99.0), false};
}

Image add_gaussian_noise(const Image& img, double sigma, uint64_t seed) {
    if (sigma < 0.0) throw std::invalid_argument("add_gaussian_noise: negative sigma");
    if (sigma == 0.0) return img;
    std::mt19937_64 rng(seed);
    // Box-Muller on (0,1] uniforms drawn from the fully specified mt19937_64
    // stream; std::normal_distribution is implementation-defined and would
    // break cross-platform reproducibility.
    auto uniform01 = [&rng]() {
        return (static_cast<double>(rng() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
    };
    Image out = img;
    const size_t n = out.size();
    for (size_t i = 0; i < n; i += 2) {
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        out.data[i] += sigma * r * std::cos(2.0 * M_PI * u2);
        if (i + 1 < n) out.data[i + 1] += sigma * r * std::sin(2.0 * M_PI * u2);
    }
    return out;
}

bool all_finite(const Image& img) {
    for (double v : img.data)
        if (!std::isfinite(v)) return false;
    return true;
}

}  // namespace tnrd
