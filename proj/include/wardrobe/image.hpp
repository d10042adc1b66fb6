#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace wardrobe {

// An encoded raster (PNG, JPEG, ...) plus its decoded dimensions. The bytes
// are authoritative; `id` is a human-readable handle used in transcripts and
// run directories. Two images are equal when their bytes are.
struct Image {
  std::string id;
  std::vector<std::uint8_t> bytes;
  int width = 0;
  int height = 0;

  bool empty() const noexcept { return bytes.empty(); }
  friend bool operator==(const Image& a, const Image& b) noexcept { return a.bytes == b.bytes; }
};

// Binary region mask, row-major, one byte per pixel (0 or 1).
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  double coverage() const noexcept;
  static Mask full(int width, int height);
  static Mask rect(int width, int height, int x, int y, int w, int h);
};

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

namespace image {

// Decodes `bytes` to learn the dimensions. Throws InvalidImage when the bytes
// are not a raster OpenCV can read.
Image from_bytes(std::string id, std::vector<std::uint8_t> bytes);
Image load(const std::filesystem::path& path, std::string id = {});
void save(const Image& img, const std::filesystem::path& path);

Image solid(std::string id, int width, int height, Rgb color);

// Left | right, the right image rescaled to the left's height.
Image concat_horizontal(const Image& left, const Image& right, std::string id = {});

// Keeps pixels where the mask is set and paints the rest white.
Image composite_on_white(const Image& img, const Mask& mask, std::string id = {});

Mask decode_mask(const std::vector<std::uint8_t>& png_bytes);
std::vector<std::uint8_t> encode_mask(const Mask& mask);

// Stable 64-bit content fingerprint (FNV-1a), hex encoded.
std::string fingerprint(const std::vector<std::uint8_t>& bytes);

}  // namespace image

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace wardrobe
