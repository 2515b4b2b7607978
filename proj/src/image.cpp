#include "weldpred/image.hpp"

#include <cmath>
#include <fstream>

#include "weldpred/error.hpp"
#include "weldpred/rng.hpp"

namespace weldpred {

GrayImage encode(const WireVector& x, double scale_max) {
  if (!std::isfinite(scale_max) || scale_max <= 0.0)
    throw Error(Errc::invalid_argument, "scale_max must be positive");
  GrayImage img;
  img.width = img.height = 4;
  img.scale_max = scale_max;
  img.pixels.resize(16);
  for (int i = 0; i < kWireSlots; ++i) {
    const double s = x.sections[i];
    if (s > scale_max)
      throw Error(Errc::invalid_argument,
                  "wire section " + std::to_string(s) + " exceeds scale_max " +
                      std::to_string(scale_max));
    img.pixels[i] = s / scale_max;
  }
  return img;
}

std::vector<GrayImage> augment(const GrayImage& img, int k, std::uint64_t seed) {
  if (img.width != 4 || img.height != 4)
    throw Error(Errc::invalid_argument, "augment expects a 4x4 image");
  if (k < 1) throw Error(Errc::invalid_argument, "augment expects k >= 1");

  Rng rng(seed);
  std::vector<GrayImage> out;
  out.reserve(k);
  for (int m = 0; m < k; ++m) {
    GrayImage perm = img;
    for (int attempt = 0; attempt < 20; ++attempt) {
      perm.pixels = img.pixels;
      rng.shuffle(perm.pixels);
      bool dup = perm.pixels == img.pixels;
      for (const GrayImage& earlier : out) dup = dup || perm.pixels == earlier.pixels;
      if (!dup) break;  // else redraw; after 20 tries keep the duplicate
    }
    out.push_back(std::move(perm));
  }
  return out;
}

GrayImage upscale(const GrayImage& img) {
  if (img.width != 4 || img.height != 4)
    throw Error(Errc::invalid_argument, "upscale expects a 4x4 image");
  GrayImage out;
  out.width = out.height = 16;
  out.scale_max = img.scale_max;
  out.pixels.resize(256);
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) out.pixels[r * 16 + c] = img.at(r / 4, c / 4);
  return out;
}

std::vector<ImageSample> build_image_dataset(const Dataset& ds, int augment_k, double scale_max,
                                             std::uint64_t seed) {
  if (ds.empty()) throw Error(Errc::invalid_argument, "cannot build images from an empty dataset");
  if (augment_k < 0) throw Error(Errc::invalid_argument, "augment_k must be non-negative");

  std::vector<ImageSample> out;
  out.reserve(ds.size() * (augment_k + 1));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Record& rec = ds.records[i];
    GrayImage base = encode(rec.x, scale_max);
    out.push_back({upscale(base), rec.y});
    if (augment_k > 0)
      for (GrayImage& perm : augment(base, augment_k, mix_seed(seed, i)))
        out.push_back({upscale(perm), rec.y});
  }
  return out;
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << "P2\n" << img.width << ' ' << img.height << "\n255\n";
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c)
      out << static_cast<int>(std::lround(img.at(r, c) * 255.0)) << (c + 1 < img.width ? ' ' : '\n');
  }
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

}  // namespace weldpred
