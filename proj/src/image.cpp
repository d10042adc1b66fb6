#include "wardrobe/image.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "wardrobe/errors.hpp"

namespace wardrobe {

double Mask::coverage() const noexcept {
  if (bits.empty()) return 0.0;
  auto set = std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; });
  return static_cast<double>(set) / static_cast<double>(bits.size());
}

Mask Mask::full(int width, int height) {
  return Mask{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 1)};
}

Mask Mask::rect(int width, int height, int x, int y, int w, int h) {
  Mask m{width, height, std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, 0)};
  for (int row = std::max(0, y); row < std::min(height, y + h); ++row) {
    for (int col = std::max(0, x); col < std::min(width, x + w); ++col) {
      m.bits[static_cast<std::size_t>(row) * width + col] = 1;
    }
  }
  return m;
}

namespace image {
namespace {

cv::Mat decode(const Image& img) {
  if (img.bytes.empty()) fail(ErrorCode::InvalidImage, "empty image '" + img.id + "'");
  cv::Mat mat = cv::imdecode(cv::Mat(1, static_cast<int>(img.bytes.size()), CV_8UC1,
                                     const_cast<std::uint8_t*>(img.bytes.data())),
                             cv::IMREAD_COLOR);
  if (mat.empty()) fail(ErrorCode::InvalidImage, "cannot decode image '" + img.id + "'");
  return mat;
}

std::vector<std::uint8_t> encode_png(const cv::Mat& mat) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(".png", mat, out)) fail(ErrorCode::InvalidImage, "png encoding failed");
  return out;
}

Image wrap(std::string id, const cv::Mat& mat) {
  Image img;
  img.bytes = encode_png(mat);
  img.width = mat.cols;
  img.height = mat.rows;
  img.id = id.empty() ? "img-" + fingerprint(img.bytes) : std::move(id);
  return img;
}

}  // namespace

Image from_bytes(std::string id, std::vector<std::uint8_t> bytes) {
  Image img;
  img.bytes = std::move(bytes);
  img.id = std::move(id);
  cv::Mat mat = decode(img);
  img.width = mat.cols;
  img.height = mat.rows;
  if (img.id.empty()) img.id = "img-" + fingerprint(img.bytes);
  return img;
}

Image load(const std::filesystem::path& path, std::string id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::InvalidImage, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (id.empty()) id = path.stem().string();
  return from_bytes(std::move(id), std::move(bytes));
}

void save(const Image& img, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::InvalidImage, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(img.bytes.data()), static_cast<std::streamsize>(img.bytes.size()));
}

Image solid(std::string id, int width, int height, Rgb color) {
  require(width > 0 && height > 0, "solid image needs positive dimensions");
  cv::Mat mat(height, width, CV_8UC3, cv::Scalar(color.b, color.g, color.r));
  return wrap(std::move(id), mat);
}

Image concat_horizontal(const Image& left, const Image& right, std::string id) {
  cv::Mat a = decode(left);
  cv::Mat b = decode(right);
  if (b.rows != a.rows) {
    int new_width = std::max(1, static_cast<int>(std::lround(static_cast<double>(b.cols) * a.rows / b.rows)));
    cv::Mat resized;
    cv::resize(b, resized, cv::Size(new_width, a.rows), 0, 0, cv::INTER_AREA);
    b = resized;
  }
  cv::Mat joined;
  cv::hconcat(a, b, joined);
  return wrap(std::move(id), joined);
}

Image composite_on_white(const Image& img, const Mask& mask, std::string id) {
  cv::Mat src = decode(img);
  if (mask.width != src.cols || mask.height != src.rows) {
    fail(ErrorCode::PreconditionViolation, "mask dimensions do not match image '" + img.id + "'");
  }
  cv::Mat out(src.rows, src.cols, CV_8UC3, cv::Scalar(255, 255, 255));
  cv::Mat m(src.rows, src.cols, CV_8UC1, const_cast<std::uint8_t*>(mask.bits.data()));
  src.copyTo(out, m);
  return wrap(std::move(id), out);
}

Mask decode_mask(const std::vector<std::uint8_t>& png_bytes) {
  if (png_bytes.empty()) fail(ErrorCode::InvalidImage, "empty mask");
  cv::Mat mat = cv::imdecode(
      cv::Mat(1, static_cast<int>(png_bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(png_bytes.data())),
      cv::IMREAD_GRAYSCALE);
  if (mat.empty()) fail(ErrorCode::InvalidImage, "cannot decode mask");
  Mask m{mat.cols, mat.rows, std::vector<std::uint8_t>(static_cast<std::size_t>(mat.cols) * mat.rows)};
  for (int row = 0; row < mat.rows; ++row) {
    const auto* p = mat.ptr<std::uint8_t>(row);
    for (int col = 0; col < mat.cols; ++col) m.bits[static_cast<std::size_t>(row) * mat.cols + col] = p[col] ? 1 : 0;
  }
  return m;
}

std::vector<std::uint8_t> encode_mask(const Mask& mask) {
  cv::Mat mat(mask.height, mask.width, CV_8UC1);
  for (int row = 0; row < mask.height; ++row) {
    auto* p = mat.ptr<std::uint8_t>(row);
    for (int col = 0; col < mask.width; ++col) p[col] = mask.bits[static_cast<std::size_t>(row) * mask.width + col] ? 255 : 0;
  }
  return encode_png(mat);
}

std::string fingerprint(const std::vector<std::uint8_t>& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (auto b : bytes) {
    hash ^= b;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace image

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) fail(ErrorCode::InvalidImage, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out(3 * clean.size() / 4);
  int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) fail(ErrorCode::InvalidImage, "invalid base64");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace wardrobe
