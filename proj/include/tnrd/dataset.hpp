#ifndef TNRD_DATASET_HPP
#define TNRD_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tnrd/data_terms.hpp"
#include "tnrd/training.hpp"

namespace tnrd {

/// Reproducible sample synthesis: the same manifest always yields the same
/// samples. Source paths are processed in the order given (callers sort).
struct DatasetManifest {
    std::vector<std::string> image_paths;
    int crop_size = 64;
    int crops_per_image = 4;
    ProblemKind problem;
    uint64_t master_seed = 0;
};

/// Deterministic crops plus per-problem degradation: Gaussian noise for
/// denoising, bicubic decimation for SISR (crop pre-shrunk to a factor
/// multiple), quantization round-trip for deblocking (crop pre-shrunk to a
/// multiple of 8).
std::vector<TrainingSample> ingest_dataset(const DatasetManifest& manifest);

/// Sorted *.pgm paths under dir.
std::vector<std::string> list_pgm_files(const std::string& dir);

struct JpegRoundtrip {
    Image decoded;
    Image dequantized_coeffs;
    int quality = 0;
};

/// Minimal grayscale baseline-JPEG quantization simulation: block DCT,
/// round to the quality-q step grid, dequantize, inverse DCT. The decoded
/// image is always a feasible point of the derived quantization box.
JpegRoundtrip jpeg_roundtrip(const Image& img, int quality);

}  // namespace tnrd

#endif
