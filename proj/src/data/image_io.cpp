#include "attnad/data/image_io.hpp"

#include <openssl/evp.h>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <array>
#include <fstream>
#include <memory>

#include "attnad/common/errors.hpp"

namespace attnad::data {

namespace {

torch::Tensor mat_to_tensor(const cv::Mat& m) {
  // m is 8-bit, HWC
  auto t = torch::from_blob(m.data, {m.rows, m.cols, m.channels()}, torch::kUInt8).clone();
  return t.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0f).contiguous();
}

}  // namespace

torch::Tensor load_image(const std::filesystem::path& path, int channels, int size) {
  if (channels != 1 && channels != 3) throw ConfigError("load_image: channels must be 1 or 3");
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (raw.empty()) throw DataError("cannot decode image '" + path.string() + "'");
  cv::Mat converted;
  if (channels == 3) {
    cv::cvtColor(raw, converted, cv::COLOR_BGR2RGB);
  } else {
    cv::cvtColor(raw, converted, cv::COLOR_BGR2GRAY);
  }
  cv::Mat resized;
  if (converted.rows != size || converted.cols != size) {
    cv::resize(converted, resized, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  } else {
    resized = converted;
  }
  return mat_to_tensor(resized);
}

torch::Tensor load_defect_mask(const std::filesystem::path& path, int size) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
  if (raw.empty()) throw DataError("cannot decode mask '" + path.string() + "'");
  cv::Mat resized;
  cv::resize(raw, resized, cv::Size(size, size), 0, 0, cv::INTER_NEAREST);
  auto defect = torch::from_blob(resized.data, {1, size, size}, torch::kUInt8).clone().gt(0);
  return defect.logical_not().to(torch::kFloat32);
}

void save_png(const std::filesystem::path& path, const torch::Tensor& image) {
  if (image.dim() != 3) throw ShapeError("save_png: expected [C, H, W]");
  auto bytes = image.detach().clamp(0.0, 1.0).mul(255.0).round().to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  const int c = static_cast<int>(image.size(0));
  cv::Mat m(static_cast<int>(image.size(1)), static_cast<int>(image.size(2)), c == 3 ? CV_8UC3 : CV_8UC1,
            bytes.data_ptr());
  cv::Mat out;
  if (c == 3) {
    cv::cvtColor(m, out, cv::COLOR_RGB2BGR);
  } else {
    out = m;
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), out)) throw DataError("cannot write '" + path.string() + "'");
}

torch::Tensor hstack_panels(const std::vector<torch::Tensor>& panels) {
  std::vector<torch::Tensor> rgb;
  for (const auto& p : panels) rgb.push_back(p.size(0) == 1 ? p.expand({3, p.size(1), p.size(2)}) : p);
  return torch::cat(rgb, 2);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

}  // namespace attnad::data
