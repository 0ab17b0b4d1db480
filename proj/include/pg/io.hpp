#pragma once

#include <string>
#include <vector>

#include "pg/tensor.hpp"

namespace pg {

/// Maps v in [-1, 1] to the byte round((v + 1) * 127.5), clamping first.
int quantize_unit(double v);

/// Binary PGM (P5) for a (H,W) or (1,H,W) grayscale image in [-1, 1].
void write_pgm(const std::string& path, const Tensor& image);

/// Binary PPM (P6) for a (3,H,W) image in [-1, 1].
void write_ppm(const std::string& path, const Tensor& image);

/// Writes image as PGM or PPM depending on the channel count.
std::string write_image(const std::string& path_stem, const Tensor& image);

/// Locale-independent decimal formatting ('.' separator, shortest
/// round-trip precision).
std::string csv_double(double v);

/// Comma-separated file with a header row; cells are written verbatim.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

} // namespace pg
