#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "weldpred/dataset.hpp"

namespace weldpred {

/// Gray image with intensities in [0, 1]; scale_max is the mm² value that
/// maps to intensity 1.0.
struct GrayImage {
  int width = 0;
  int height = 0;
  double scale_max = 0.0;
  std::vector<double> pixels;  // row-major

  double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
};

/// 16 slots placed row-major into a 4x4 matrix; pixel = section / scale_max.
GrayImage encode(const WireVector& x, double scale_max = 6.0);

/// k random cell permutations of a 4x4 image. Draws that duplicate the
/// original or an earlier output are re-drawn up to 20 times, then kept.
std::vector<GrayImage> augment(const GrayImage& img, int k, std::uint64_t seed);

/// 4x4 → 16x16 block replication: out(r, c) = in(r/4, c/4).
GrayImage upscale(const GrayImage& img);

struct ImageSample {
  GrayImage image;  // 16x16
  ParamTriple label;
};

/// Per record: encode → [original + augment_k permutations] → upscale, all
/// carrying the record's label. Output size = len(ds) · (augment_k + 1).
std::vector<ImageSample> build_image_dataset(const Dataset& ds, int augment_k, double scale_max,
                                             std::uint64_t seed);

/// Plain-text PGM (P2, maxval 255) debug export.
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace weldpred
