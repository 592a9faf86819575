#include "bus/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace bus {

namespace {

void write_header(std::ofstream& out, const char* magic, int w, int h) {
    out << magic << "\n" << w << " " << h << "\n255\n";
}

// Reads one whitespace-delimited token, skipping '#' comments.
std::string next_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
        } else if (!std::isspace(ch)) {
            tok.push_back(static_cast<char>(ch));
            while ((ch = in.get()) != EOF && !std::isspace(ch) && ch != '#')
                tok.push_back(static_cast<char>(ch));
            if (ch == '#')
                while ((ch = in.get()) != EOF && ch != '\n') {
                }
            break;
        }
    }
    return tok;
}

struct PnmHeader {
    int width = 0, height = 0, maxval = 0;
};

PnmHeader read_header(std::istream& in, const std::string& path, const char* magic) {
    if (next_token(in) != magic) throw IoError(path + ": bad magic, expected " + magic);
    PnmHeader h;
    try {
        h.width = std::stoi(next_token(in));
        h.height = std::stoi(next_token(in));
        h.maxval = std::stoi(next_token(in));
    } catch (const std::exception&) {
        throw IoError(path + ": malformed header");
    }
    if (h.width <= 0 || h.height <= 0 || h.maxval != 255)
        throw IoError(path + ": unsupported dimensions or maxval");
    return h;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const ImageTensor& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_header(out, "P6", image.width, image.height);
    std::vector<unsigned char> bytes(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        const double v = std::clamp(image.data[i], 0.0, 1.0);
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

ImageTensor read_ppm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    const PnmHeader h = read_header(in, path.string(), "P6");
    ImageTensor img = ImageTensor::zeros(h.height, h.width);
    std::vector<unsigned char> bytes(img.data.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw IoError(path.string() + ": truncated pixel data");
    for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.0;
    return img;
}

void write_pgm(const std::filesystem::path& path, const LabelMap& labels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    write_header(out, "P5", labels.width, labels.height);
    std::vector<unsigned char> bytes(labels.data.size());
    for (std::size_t i = 0; i < labels.data.size(); ++i) {
        const int v = labels.data[i];
        if (v < 0 || v > 255) throw ValidationError("write_pgm: label outside [0,255]");
        bytes[i] = static_cast<unsigned char>(v);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

LabelMap read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    const PnmHeader h = read_header(in, path.string(), "P5");
    LabelMap labels = LabelMap::filled(h.height, h.width, 0);
    std::vector<unsigned char> bytes(labels.data.size());
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw IoError(path.string() + ": truncated pixel data");
    for (std::size_t i = 0; i < bytes.size(); ++i) labels.data[i] = bytes[i];
    return labels;
}

}  // namespace bus
