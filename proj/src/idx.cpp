#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "dal/dataset.hpp"
#include "dal/error.hpp"

namespace dal {

namespace {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t read_u32(const char* what) {
    require(4, what);
    const std::uint32_t v = (std::uint32_t{bytes_[pos_]} << 24) | (std::uint32_t{bytes_[pos_ + 1]} << 16) |
                            (std::uint32_t{bytes_[pos_ + 2]} << 8) | std::uint32_t{bytes_[pos_ + 3]};
    pos_ += 4;
    return v;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    require(n, what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  void require(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw TruncationError(std::string("IDX: truncated ") + what + " (need " + std::to_string(n) +
                            " bytes, have " + std::to_string(bytes_.size() - pos_) + ")");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void check_magic(std::uint32_t found, std::uint32_t expected) {
  if (found != expected) {
    throw FormatError("IDX: bad magic number " + std::to_string(found) + ", expected " +
                      std::to_string(expected));
  }
}

}  // namespace

Matrix parse_idx_images(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  check_magic(in.read_u32("magic"), kIdxImageMagic);
  const std::uint32_t count = in.read_u32("image count");
  // Magic 2051 is an unsigned-byte tensor of rank 3: count x rows x cols.
  const std::uint32_t rows = in.read_u32("row count");
  const std::uint32_t cols = in.read_u32("column count");
  const std::size_t per_image = std::size_t{rows} * cols;
  const auto pixels = in.take(std::size_t{count} * per_image, "pixel data");

  Matrix out(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(per_image));
  for (std::size_t i = 0; i < pixels.size(); ++i) out.data()[i] = pixels[i] / 255.0;
  return out;
}

std::vector<ClassId> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  check_magic(in.read_u32("magic"), kIdxLabelMagic);
  const std::uint32_t count = in.read_u32("label count");
  const auto payload = in.take(count, "label data");
  return {payload.begin(), payload.end()};
}

std::vector<std::uint8_t> encode_idx_images(const Matrix& images,
                                            std::span<const std::uint32_t> item_dims) {
  DAL_REQUIRE(item_dims.size() == 2, "encode_idx_images: images are rank-2 (rows, cols)");
  DAL_REQUIRE(std::size_t{item_dims[0]} * item_dims[1] == static_cast<std::size_t>(images.cols()),
              "encode_idx_images: item dims do not match column count");
  std::vector<std::uint8_t> out;
  out.reserve(16 + static_cast<std::size_t>(images.size()));
  put_u32(out, kIdxImageMagic);
  put_u32(out, static_cast<std::uint32_t>(images.rows()));
  for (std::uint32_t d : item_dims) put_u32(out, d);
  for (Eigen::Index i = 0; i < images.size(); ++i) {
    const double v = std::clamp(images.data()[i], 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const ClassId> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  put_u32(out, kIdxLabelMagic);
  put_u32(out, static_cast<std::uint32_t>(labels.size()));
  for (ClassId y : labels) {
    DAL_REQUIRE(y <= 255, "encode_idx_labels: label does not fit in a byte");
    out.push_back(static_cast<std::uint8_t>(y));
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open file for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path.string(), "read failed");
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open file for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string(), "write failed");
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  Dataset out;
  out.features = parse_idx_images(read_file_bytes(images));
  out.labels = parse_idx_labels(read_file_bytes(labels));
  if (static_cast<std::size_t>(out.features.rows()) != out.labels.size()) {
    throw FormatError("IDX: " + std::to_string(out.features.rows()) + " images but " +
                      std::to_string(out.labels.size()) + " labels");
  }
  ClassId max_label = 0;
  for (ClassId y : out.labels) max_label = std::max(max_label, y);
  out.class_count = std::max<std::size_t>(2, std::size_t{max_label} + 1);
  return out;
}

}  // namespace dal
