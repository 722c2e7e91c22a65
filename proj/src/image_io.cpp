#include "rdit/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace rdit {

static uint8_t quantize(float v) {
    return static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

static void write_pnm(const std::string& path, const ImageBuffer& img, int channels,
                      bool binary) {
    check_image(img);
    if (img.channels != channels) {
        throw DimensionError("image channel count does not match format");
    }
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw IoError("cannot open " + path + " for writing");
    const char* magic = channels == 1 ? (binary ? "P5" : "P2") : (binary ? "P6" : "P3");
    os << magic << "\n" << img.width << " " << img.height << "\n255\n";
    if (binary) {
        std::vector<uint8_t> bytes(img.values.size());
        for (size_t i = 0; i < img.values.size(); ++i) bytes[i] = quantize(img.values[i]);
        os.write(reinterpret_cast<const char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size()));
    } else {
        for (size_t i = 0; i < img.values.size(); ++i) {
            os << static_cast<int>(quantize(img.values[i]))
               << ((i + 1) % 12 == 0 ? "\n" : " ");
        }
        os << "\n";
    }
}

void write_pgm(const std::string& path, const ImageBuffer& img, bool binary) {
    write_pnm(path, img, 1, binary);
}

void write_ppm(const std::string& path, const ImageBuffer& img, bool binary) {
    write_pnm(path, img, 3, binary);
}

ImageBuffer read_pnm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path);
    std::string magic;
    is >> magic;
    bool binary = magic == "P5" || magic == "P6";
    int channels;
    if (magic == "P2" || magic == "P5") channels = 1;
    else if (magic == "P3" || magic == "P6") channels = 3;
    else throw IoError("unsupported PNM magic '" + magic + "' in " + path);

    auto next_token = [&]() -> int {
        // skips '#' comment lines
        std::string tok;
        while (is >> tok) {
            if (tok[0] == '#') {
                std::string rest;
                std::getline(is, rest);
                continue;
            }
            return std::stoi(tok);
        }
        throw IoError("truncated PNM header in " + path);
    };

    ImageBuffer img;
    img.width = next_token();
    img.height = next_token();
    img.channels = channels;
    int maxval = next_token();
    if (maxval < 1 || maxval > 255) throw IoError("unsupported maxval in " + path);
    size_t n = static_cast<size_t>(img.width) * img.height * channels;
    img.values.resize(n);
    if (binary) {
        is.get();  // single whitespace after maxval
        std::vector<uint8_t> bytes(n);
        is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
        if (static_cast<size_t>(is.gcount()) != n) throw IoError("truncated PNM data in " + path);
        for (size_t i = 0; i < n; ++i) {
            img.values[i] = static_cast<float>(bytes[i]) / static_cast<float>(maxval);
        }
    } else {
        for (size_t i = 0; i < n; ++i) {
            int v;
            if (!(is >> v)) throw IoError("truncated PNM data in " + path);
            img.values[i] = static_cast<float>(v) / static_cast<float>(maxval);
        }
    }
    check_image(img);
    return img;
}

ImageBuffer mask_to_image(const RegionMask& mask, const LatentGrid& grid) {
    if (mask.values.size() != static_cast<size_t>(grid.cells())) {
        throw DimensionError("mask length does not match grid");
    }
    ImageBuffer img;
    img.height = grid.height;
    img.width = grid.width;
    img.channels = 1;
    img.values.resize(mask.values.size());
    for (size_t i = 0; i < mask.values.size(); ++i) {
        img.values[i] = mask.values[i] ? 1.0f : 0.0f;
    }
    return img;
}

}  // namespace rdit
