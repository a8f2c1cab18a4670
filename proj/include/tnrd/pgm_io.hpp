#ifndef TNRD_PGM_IO_HPP
#define TNRD_PGM_IO_HPP

#include <string>

#include "tnrd/image.hpp"

namespace tnrd {

/// 8-bit binary PGM (P5). Values are mapped to [0,255] reals on load
/// (rescaled linearly when maxval != 255) and rounded-and-clamped on save.
Image load_pgm(const std::string& path);
void save_pgm(const Image& img, const std::string& path);

}  // namespace tnrd

#endif
