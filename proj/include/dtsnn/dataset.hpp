#pragma once

// Dataset readers: IDX (MNIST) images/labels and the CIFAR-10 binary batches.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dtsnn/detail/binary.hpp"
#include "dtsnn/error.hpp"
#include "dtsnn/image.hpp"

namespace dtsnn {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordSize = 3073;

inline std::vector<Image> parse_idx_images(std::span<const std::uint8_t> data) {
  detail::ByteReader r(data);
  const std::uint32_t magic = r.u32_be();
  if (magic != kIdxImagesMagic) throw Error(ErrorCode::bad_magic, "not an IDX image file");
  const std::uint32_t count = r.u32_be();
  const std::uint32_t rows = r.u32_be();
  const std::uint32_t cols = r.u32_be();
  const std::uint64_t per = std::uint64_t{rows} * cols;
  if (per == 0 && count > 0) throw Error(ErrorCode::invariant_violation, "IDX images have zero size");
  if (per != 0 && count > r.remaining() / per) {
    throw Error(ErrorCode::truncated, "IDX header announces " + std::to_string(count) + " images, file holds " +
                                          std::to_string(r.remaining() / per));
  }
  if (r.remaining() != count * per) throw Error(ErrorCode::invariant_violation, "IDX image file has trailing bytes");
  std::vector<Image> images(count);
  for (auto& img : images) {
    img.height = rows;
    img.width = cols;
    img.channels = 1;
    const auto px = r.bytes(static_cast<std::size_t>(per));
    img.pixels.assign(px.begin(), px.end());
  }
  return images;
}

inline std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> data) {
  detail::ByteReader r(data);
  if (r.u32_be() != kIdxLabelsMagic) throw Error(ErrorCode::bad_magic, "not an IDX label file");
  const std::uint32_t count = r.u32_be();
  if (count > r.remaining()) {
    throw Error(ErrorCode::truncated, "IDX header announces " + std::to_string(count) + " labels, file holds " +
                                          std::to_string(r.remaining()));
  }
  if (count != r.remaining()) throw Error(ErrorCode::invariant_violation, "IDX label file has trailing bytes");
  const auto b = r.bytes(count);
  return {b.begin(), b.end()};
}

inline std::vector<Image> read_idx_images(const std::filesystem::path& path) {
  return parse_idx_images(detail::read_file(path));
}

inline std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  return parse_idx_labels(detail::read_file(path));
}

/// Records of one label byte plus 1024 red, 1024 green, 1024 blue bytes.
inline LabeledImages parse_cifar10(std::span<const std::uint8_t> data) {
  if (data.size() % kCifarRecordSize != 0) {
    throw Error(ErrorCode::invariant_violation,
                "CIFAR-10 file size " + std::to_string(data.size()) + " is not a multiple of 3073");
  }
  LabeledImages out;
  const std::size_t n = data.size() / kCifarRecordSize;
  out.images.resize(n);
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto rec = data.subspan(i * kCifarRecordSize, kCifarRecordSize);
    out.labels[i] = rec[0];
    auto& img = out.images[i];
    img.height = 32;
    img.width = 32;
    img.channels = 3;
    img.pixels.assign(rec.begin() + 1, rec.end());
  }
  return out;
}

inline LabeledImages read_cifar10_bin(const std::filesystem::path& path) {
  return parse_cifar10(detail::read_file(path));
}

/// Serialize images in IDX layout; used for fixtures and tests.
inline std::vector<std::uint8_t> serialize_idx_images(std::span<const Image> images) {
  std::vector<std::uint8_t> out;
  auto be = [&out](std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  be(kIdxImagesMagic);
  be(static_cast<std::uint32_t>(images.size()));
  be(images.empty() ? 0 : images.front().height);
  be(images.empty() ? 0 : images.front().width);
  for (const auto& img : images) out.insert(out.end(), img.pixels.begin(), img.pixels.end());
  return out;
}

inline std::vector<std::uint8_t> serialize_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out = {0, 0, 8, 1};
  const auto n = static_cast<std::uint32_t>(labels.size());
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(n >> (8 * i)));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

/// Loads a labeled dataset. `.bin` files are CIFAR-10 batches; anything else
/// is an IDX image file whose labels come from `labels` or, when empty, from
/// the sibling file named with "labels-idx1" in place of "images-idx3" if it
/// exists. Without labels the images come back unlabeled.
inline LabeledImages load_dataset(const std::filesystem::path& images, const std::filesystem::path& labels = {}) {
  if (images.extension() == ".bin") return read_cifar10_bin(images);
  LabeledImages out;
  out.images = read_idx_images(images);
  std::filesystem::path lp = labels;
  if (lp.empty()) {
    std::string name = images.filename().string();
    const auto at = name.find("images-idx3");
    if (at != std::string::npos) {
      name.replace(at, 11, "labels-idx1");
      if (std::filesystem::exists(images.parent_path() / name)) lp = images.parent_path() / name;
    }
  }
  if (!lp.empty()) {
    out.labels = read_idx_labels(lp);
    if (out.labels.size() != out.images.size()) {
      throw Error(ErrorCode::invariant_violation, "label count " + std::to_string(out.labels.size()) +
                                                      " differs from image count " + std::to_string(out.images.size()));
    }
  }
  return out;
}

}  // namespace dtsnn
