#include "tnrd/data_terms.hpp"

#include <cmath>
#include <stdexcept>

namespace tnrd {

namespace {

int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return i;
}

double bicubic_weight(double x) {
    constexpr double a = -0.5;
    x = std::abs(x);
    if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
    if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
    return 0.0;
}

// Four taps per output sample, boundary already resolved by reflection.
struct ResamplePlan {
    int n_out = 0;
    std::vector<std::array<int, 4>> idx;
    std::vector<std::array<double, 4>> wgt;
};

// scale = n_out / n_in; output i samples input coordinate (i+0.5)/scale - 0.5.
ResamplePlan build_plan(int n_in, int n_out, double scale) {
    ResamplePlan p;
    p.n_out = n_out;
    p.idx.resize(n_out);
    p.wgt.resize(n_out);
    for (int i = 0; i < n_out; ++i) {
        const double x = (i + 0.5) / scale - 0.5;
        const int j0 = static_cast<int>(std::floor(x)) - 1;
        for (int t = 0; t < 4; ++t) {
            p.idx[i][t] = reflect_index(j0 + t, n_in);
            p.wgt[i][t] = bicubic_weight(x - (j0 + t));
        }
    }
    return p;
}

std::vector<double> apply_plan(const ResamplePlan& p, const double* v) {
    std::vector<double> out(p.n_out);
    for (int i = 0; i < p.n_out; ++i) {
        double s = 0.0;
        for (int t = 0; t < 4; ++t) s += p.wgt[i][t] * v[p.idx[i][t]];
        out[i] = s;
    }
    return out;
}

void apply_plan_adjoint(const ResamplePlan& p, const double* v, double* acc, int n_in) {
    for (int i = 0; i < n_in; ++i) acc[i] = 0.0;
    for (int i = 0; i < p.n_out; ++i)
        for (int t = 0; t < 4; ++t) acc[p.idx[i][t]] += p.wgt[i][t] * v[i];
}

// Separable resample: rows then columns with per-axis plans.
Image resample(const Image& img, const ResamplePlan& px, const ResamplePlan& py) {
    Image tmp(px.n_out, img.height);
    for (int y = 0; y < img.height; ++y) {
        auto row = apply_plan(px, &img.data[static_cast<size_t>(y) * img.width]);
        for (int x = 0; x < px.n_out; ++x) tmp.at(x, y) = row[x];
    }
    Image out(px.n_out, py.n_out);
    std::vector<double> col(img.height);
    for (int x = 0; x < px.n_out; ++x) {
        for (int y = 0; y < img.height; ++y) col[y] = tmp.at(x, y);
        auto res = apply_plan(py, col.data());
        for (int y = 0; y < py.n_out; ++y) out.at(x, y) = res[y];
    }
    return out;
}

const double* dct8_matrix() {
    static double d[64];
    static bool init = [] {
        for (int k = 0; k < 8; ++k) {
            const double a = (k == 0) ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
            for (int n = 0; n < 8; ++n) d[k * 8 + n] = a * std::cos(M_PI * (2 * n + 1) * k / 16.0);
        }
        return true;
    }();
    (void)init;
    return d;
}

void check_block_dims(const Image& u, const char* who) {
    if (u.width % 8 != 0 || u.height % 8 != 0 || u.width == 0 || u.height == 0)
        throw std::invalid_argument(std::string(who) + ": dims must be positive multiples of 8");
}

// Per-block transform c = D b D^T (forward) or b = D^T c D (inverse).
Image block_transform(const Image& u, bool inverse) {
    const double* D = dct8_matrix();
    Image out(u.width, u.height);
    double tmp[64], blk[64];
    for (int by = 0; by < u.height; by += 8) {
        for (int bx = 0; bx < u.width; bx += 8) {
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) blk[y * 8 + x] = u.at(bx + x, by + y);
            // rows: tmp = blk * D^T (forward) or blk * D (inverse)
            for (int y = 0; y < 8; ++y)
                for (int k = 0; k < 8; ++k) {
                    double s = 0.0;
                    for (int n = 0; n < 8; ++n)
                        s += blk[y * 8 + n] * (inverse ? D[n * 8 + k] : D[k * 8 + n]);
                    tmp[y * 8 + k] = s;
                }
            // cols
            for (int k = 0; k < 8; ++k)
                for (int x = 0; x < 8; ++x) {
                    double s = 0.0;
                    for (int n = 0; n < 8; ++n)
                        s += (inverse ? D[n * 8 + k] : D[k * 8 + n]) * tmp[n * 8 + x];
                    out.at(bx + x, by + k) = s;
                }
        }
    }
    return out;
}

// Standard JPEG luminance table (quality 50 baseline).
constexpr int kLuminance50[64] = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99,
};

}  // namespace

ProblemKind ProblemKind::make_denoise(double sigma) {
    ProblemKind p;
    p.task = denoise;
    p.sigma = sigma;
    return p;
}

ProblemKind ProblemKind::make_sisr(int factor) {
    ProblemKind p;
    p.task = sisr;
    p.factor = factor;
    return p;
}

ProblemKind ProblemKind::make_deblock(int quality) {
    ProblemKind p;
    p.task = deblock;
    p.quality = quality;
    return p;
}

void ProblemKind::validate(bool strict) const {
    switch (task) {
        case denoise:
            if (sigma < 0.0) throw std::invalid_argument("ProblemKind: negative sigma");
            break;
        case sisr:
            if (strict && factor != 2 && factor != 3 && factor != 4)
                throw std::invalid_argument("ProblemKind: factor must be 2, 3 or 4");
            if (factor < 2) throw std::invalid_argument("ProblemKind: factor must be >= 2");
            break;
        case deblock:
            if (strict && quality != 10 && quality != 20 && quality != 30)
                throw std::invalid_argument("ProblemKind: quality must be 10, 20 or 30");
            if (quality < 1 || quality > 100)
                throw std::invalid_argument("ProblemKind: quality out of [1,100]");
            break;
    }
}

std::string ProblemKind::name() const {
    switch (task) {
        case denoise: return "denoise";
        case sisr: return "sisr";
        case deblock: return "deblock";
    }
    return "?";
}

Image reaction_denoise(const Image& u, const Image& f, double lambda) {
    if (!u.same_dims(f)) throw std::invalid_argument("reaction_denoise: dimension mismatch");
    Image out(u.width, u.height);
    for (size_t i = 0; i < u.size(); ++i) out.data[i] = lambda * (u.data[i] - f.data[i]);
    return out;
}

Image bicubic_downsample(const Image& h, int factor) {
    if (factor < 2) throw std::invalid_argument("bicubic_downsample: factor must be >= 2");
    if (h.width % factor != 0 || h.height % factor != 0)
        throw std::invalid_argument("bicubic_downsample: dims not divisible by factor");
    const double s = 1.0 / factor;
    return resample(h, build_plan(h.width, h.width / factor, s),
                    build_plan(h.height, h.height / factor, s));
}

Image bicubic_downsample_adjoint(const Image& l, int factor, int out_width, int out_height) {
    if (out_width != l.width * factor || out_height != l.height * factor)
        throw std::invalid_argument("bicubic_downsample_adjoint: dims mismatch");
    const double s = 1.0 / factor;
    const ResamplePlan px = build_plan(out_width, l.width, s);
    const ResamplePlan py = build_plan(out_height, l.height, s);
    // Transpose of (cols after rows): adjoint cols first, then adjoint rows.
    Image tmp(l.width, out_height);
    std::vector<double> col(l.height), acc_col(out_height);
    for (int x = 0; x < l.width; ++x) {
        for (int y = 0; y < l.height; ++y) col[y] = l.at(x, y);
        apply_plan_adjoint(py, col.data(), acc_col.data(), out_height);
        for (int y = 0; y < out_height; ++y) tmp.at(x, y) = acc_col[y];
    }
    Image out(out_width, out_height);
    std::vector<double> acc_row(out_width);
    for (int y = 0; y < out_height; ++y) {
        apply_plan_adjoint(px, &tmp.data[static_cast<size_t>(y) * tmp.width], acc_row.data(),
                           out_width);
        for (int x = 0; x < out_width; ++x) out.at(x, y) = acc_row[x];
    }
    return out;
}

Image bicubic_upscale(const Image& l, int factor) {
    if (factor < 2) throw std::invalid_argument("bicubic_upscale: factor must be >= 2");
    const double s = static_cast<double>(factor);
    return resample(l, build_plan(l.width, l.width * factor, s),
                    build_plan(l.height, l.height * factor, s));
}

Image reaction_sisr(const Image& u, const Image& f, double lambda, int factor) {
    if (u.width != f.width * factor || u.height != f.height * factor)
        throw std::invalid_argument("reaction_sisr: dimension mismatch");
    Image r = bicubic_downsample(u, factor);
    for (size_t i = 0; i < r.size(); ++i) r.data[i] -= f.data[i];
    Image out = bicubic_downsample_adjoint(r, factor, u.width, u.height);
    for (double& v : out.data) v *= lambda;
    return out;
}

Image block_dct(const Image& u) {
    check_block_dims(u, "block_dct");
    return block_transform(u, false);
}

Image block_idct(const Image& c) {
    check_block_dims(c, "block_idct");
    return block_transform(c, true);
}

std::array<int, 64> jpeg_luminance_steps(int quality) {
    if (quality < 1 || quality > 100)
        throw std::invalid_argument("jpeg_luminance_steps: quality out of [1,100]");
    const int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> t{};
    for (int i = 0; i < 64; ++i) {
        int v = (s * kLuminance50[i] + 50) / 100;
        if (v < 1) v = 1;
        if (v > 255) v = 255;  // baseline 8-bit clamp
        t[i] = v;
    }
    return t;
}

Image tile_quant_steps(int width, int height, int quality) {
    if (width % 8 != 0 || height % 8 != 0)
        throw std::invalid_argument("tile_quant_steps: dims must be multiples of 8");
    const auto t = jpeg_luminance_steps(quality);
    Image out(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.at(x, y) = t[(y % 8) * 8 + (x % 8)];
    return out;
}

QuantBox quant_box_from_jpeg(const Image& dequantized_coeffs, int quality, bool strict) {
    check_block_dims(dequantized_coeffs, "quant_box_from_jpeg");
    if (strict && quality != 10 && quality != 20 && quality != 30 && quality != 50 &&
        quality != 100)
        throw std::invalid_argument("quant_box_from_jpeg: unsupported quality in strict mode");
    const Image steps = tile_quant_steps(dequantized_coeffs.width, dequantized_coeffs.height, quality);
    QuantBox box;
    box.lower = Image(dequantized_coeffs.width, dequantized_coeffs.height);
    box.upper = Image(dequantized_coeffs.width, dequantized_coeffs.height);
    for (size_t i = 0; i < steps.size(); ++i) {
        const double q = steps.data[i];
        const double d = std::round(dequantized_coeffs.data[i] / q);
        box.lower.data[i] = (d - 0.5) * q;
        box.upper.data[i] = (d + 0.5) * q;
    }
    return box;
}

Image prox_deblock(const Image& u, const QuantBox& box) {
    if (!u.same_dims(box.lower)) throw std::invalid_argument("prox_deblock: dims mismatch with box");
    Image c = block_dct(u);
    for (size_t i = 0; i < c.size(); ++i) {
        if (c.data[i] < box.lower.data[i]) c.data[i] = box.lower.data[i];
        if (c.data[i] > box.upper.data[i]) c.data[i] = box.upper.data[i];
    }
    return block_idct(c);
}

}  // namespace tnrd
