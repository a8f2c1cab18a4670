#ifndef TNRD_MODEL_IO_HPP
#define TNRD_MODEL_IO_HPP

#include <iosfwd>
#include <string>

#include "tnrd/diffusion.hpp"

namespace tnrd {

/// Versioned plain-text model format. Parameters are written with 17
/// significant digits so load(save(m)) recovers every double bit-exactly.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

void write_model(const Model& m, std::ostream& out);
Model read_model(std::istream& in);

}  // namespace tnrd

#endif
