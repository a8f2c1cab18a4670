#include "tnrd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>

#include "tnrd/pgm_io.hpp"

namespace tnrd {

namespace {

// Unbiased bounded draw from the fully specified mt19937_64 stream.
uint64_t bounded(std::mt19937_64& rng, uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

Image crop_region(const Image& img, int x0, int y0, int w, int h) {
    Image out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = img.at(x0 + x, y0 + y);
    return out;
}

}  // namespace

std::vector<std::string> list_pgm_files(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        if (entry.path().extension() == ".pgm") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    return paths;
}

JpegRoundtrip jpeg_roundtrip(const Image& img, int quality) {
    JpegRoundtrip rt;
    rt.quality = quality;
    const Image steps = tile_quant_steps(img.width, img.height, quality);
    Image c = block_dct(img);
    for (size_t i = 0; i < c.size(); ++i)
        c.data[i] = std::round(c.data[i] / steps.data[i]) * steps.data[i];
    rt.decoded = block_idct(c);
    rt.dequantized_coeffs = std::move(c);
    return rt;
}

std::vector<TrainingSample> ingest_dataset(const DatasetManifest& manifest) {
    manifest.problem.validate(false);
    if (manifest.image_paths.empty()) throw std::invalid_argument("ingest: no source images");
    if (manifest.crop_size < 8) throw std::invalid_argument("ingest: crop size too small");

    // Crop dims must respect the degradation operator's grid.
    int cw = manifest.crop_size;
    int ch = manifest.crop_size;
    if (manifest.problem.task == ProblemKind::sisr) {
        cw -= cw % manifest.problem.factor;
        ch -= ch % manifest.problem.factor;
    } else if (manifest.problem.task == ProblemKind::deblock) {
        cw -= cw % 8;
        ch -= ch % 8;
    }

    std::mt19937_64 rng(manifest.master_seed);
    std::vector<TrainingSample> samples;
    samples.reserve(manifest.image_paths.size() * manifest.crops_per_image);
    for (const auto& path : manifest.image_paths) {
        const Image img = load_pgm(path);
        if (img.width < cw || img.height < ch)
            throw std::invalid_argument("ingest: image smaller than crop: " + path);
        for (int c = 0; c < manifest.crops_per_image; ++c) {
            const int x0 = static_cast<int>(bounded(rng, img.width - cw + 1));
            const int y0 = static_cast<int>(bounded(rng, img.height - ch + 1));
            const uint64_t noise_seed = rng();  // consumed for every problem kind
            TrainingSample s;
            s.u_gt = crop_region(img, x0, y0, cw, ch);
            switch (manifest.problem.task) {
                case ProblemKind::denoise:
                    s.f = add_gaussian_noise(s.u_gt, manifest.problem.sigma, noise_seed);
                    break;
                case ProblemKind::sisr:
                    s.f = bicubic_downsample(s.u_gt, manifest.problem.factor);
                    break;
                case ProblemKind::deblock:
                    s.f = jpeg_roundtrip(s.u_gt, manifest.problem.quality).decoded;
                    break;
            }
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

}  // namespace tnrd
