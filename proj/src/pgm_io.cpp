#include "tnrd/pgm_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace tnrd {

namespace {

// Next whitespace-delimited token, skipping '#' comment lines.
std::string next_token(std::istream& in) {
    std::string tok;
    for (;;) {
        const int c = in.peek();
        if (c == EOF) throw std::runtime_error("pgm: truncated header");
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        break;
    }
    in >> tok;
    return tok;
}

}  // namespace

Image load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path);
    if (next_token(in) != "P5") throw std::runtime_error("pgm: not a binary P5 file: " + path);
    int width, height, maxval;
    try {
        width = std::stoi(next_token(in));
        height = std::stoi(next_token(in));
        maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw std::runtime_error("pgm: malformed header in " + path);
    }
    if (width <= 0 || height <= 0) throw std::runtime_error("pgm: bad dimensions in " + path);
    if (maxval <= 0 || maxval > 255)
        throw std::runtime_error("pgm: unsupported depth (need 8-bit) in " + path);
    in.get();  // single whitespace after maxval

    std::vector<unsigned char> raw(static_cast<size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        throw std::runtime_error("pgm: truncated pixel data in " + path);

    Image img(width, height);
    const double scale = 255.0 / maxval;
    for (size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] * scale;
    return img;
}

void save_pgm(const Image& img, const std::string& path) {
    if (img.width <= 0 || img.height <= 0) throw std::invalid_argument("pgm: empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot write " + path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> raw(img.size());
    for (size_t i = 0; i < img.size(); ++i) {
        double v = std::round(img.data[i]);
        if (v < 0.0) v = 0.0;
        if (v > 255.0) v = 255.0;
        raw[i] = static_cast<unsigned char>(v);
    }
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path);
}

}  // namespace tnrd
