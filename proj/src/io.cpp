#include "pg/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pg {

int quantize_unit(double v) {
    if (v < -1.0) v = -1.0;
    if (v > 1.0) v = 1.0;
    return static_cast<int>(std::lround((v + 1.0) * 127.5));
}

namespace {

std::ofstream open_binary(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    return out;
}

} // namespace

void write_pgm(const std::string& path, const Tensor& image) {
    int h = 0, w = 0;
    if (image.ndim() == 2) {
        h = image.extent(0);
        w = image.extent(1);
    } else if (image.ndim() == 3 && image.extent(0) == 1) {
        h = image.extent(1);
        w = image.extent(2);
    } else {
        throw std::invalid_argument("write_pgm: image must be (H,W) or (1,H,W), got " +
                                    shape_str(image.shape()));
    }
    std::ofstream out = open_binary(path);
    out << "P5\n" << w << ' ' << h << "\n255\n";
    for (std::size_t i = 0; i < image.numel(); ++i)
        out.put(static_cast<char>(quantize_unit(image[i])));
    if (!out) throw std::runtime_error("failed writing " + path);
}

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.ndim() != 3 || image.extent(0) != 3)
        throw std::invalid_argument("write_ppm: image must be (3,H,W), got " +
                                    shape_str(image.shape()));
    const int h = image.extent(1), w = image.extent(2);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    std::ofstream out = open_binary(path);
    out << "P6\n" << w << ' ' << h << "\n255\n";
    for (std::size_t i = 0; i < plane; ++i)
        for (int c = 0; c < 3; ++c)
            out.put(static_cast<char>(
                quantize_unit(image[static_cast<std::size_t>(c) * plane + i])));
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::string write_image(const std::string& path_stem, const Tensor& image) {
    if (image.ndim() == 3 && image.extent(0) == 3) {
        const std::string path = path_stem + ".ppm";
        write_ppm(path, image);
        return path;
    }
    const std::string path = path_stem + ".pgm";
    write_pgm(path, image);
    return path;
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    // trim to the shortest representation that round-trips
    for (int prec = 1; prec < 17; ++prec) {
        char probe[40];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        if (std::strtod(probe, nullptr) == v) return probe;
    }
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size())
            throw std::invalid_argument("write_csv: row width does not match header");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path);
}

} // namespace pg
