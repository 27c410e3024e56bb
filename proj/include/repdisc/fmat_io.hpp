#pragma once

// FMAT / LBL1 binary formats and CSV import.
//
// FMAT layout (all little-endian):
//   0  "FMAT"
//   4  version (0x01)
//   5  flags (bit0 = centered)
//   6  p  (u32)
//   10 n  (u32)
//   14 p*n binary64 values, row-major
//
// LBL1 layout:
//   0  "LBL1"
//   4  kind (0 = regression f64, 1 = class u32)
//   5  n  (u32)
//   9  n values (f64 or u32)
//   .. num_classes (u32, class kind only)

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "repdisc/error.hpp"
#include "repdisc/types.hpp"

namespace repdisc::io {

inline constexpr std::array<char, 4> kFmatMagic{'F', 'M', 'A', 'T'};
inline constexpr std::array<char, 4> kLabelMagic{'L', 'B', 'L', '1'};
inline constexpr std::uint8_t kFmatVersion = 0x01;
inline constexpr std::size_t kFmatHeaderSize = 14;
inline constexpr std::size_t kLabelHeaderSize = 9;

using Labels = std::variant<TaskVector, ClassLabels>;
using Bytes = std::vector<std::uint8_t>;

namespace detail {

template <typename T>
void put_le(Bytes& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  auto bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
}

template <typename T>
T get_le(const std::uint8_t* p) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(p[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::IoError, "cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) raise(ErrorKind::IoError, "read failed: " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorKind::IoError, "cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) raise(ErrorKind::IoError, "write failed: " + path.string());
}

inline bool has_magic(const Bytes& b, const std::array<char, 4>& magic) {
  return b.size() >= 4 && std::memcmp(b.data(), magic.data(), 4) == 0;
}

}  // namespace detail

inline Bytes encode_fmat(const FeatureMatrix& m) {
  const auto p = static_cast<std::uint32_t>(m.dims());
  const auto n = static_cast<std::uint32_t>(m.samples());
  Bytes out;
  out.reserve(kFmatHeaderSize + std::size_t{p} * n * 8);
  out.insert(out.end(), kFmatMagic.begin(), kFmatMagic.end());
  out.push_back(kFmatVersion);
  out.push_back(m.centered() ? 0x01 : 0x00);
  detail::put_le(out, p);
  detail::put_le(out, n);
  for (std::uint32_t r = 0; r < p; ++r)
    for (std::uint32_t c = 0; c < n; ++c) detail::put_le(out, m.data()(r, c));
  return out;
}

inline FeatureMatrix decode_fmat(const Bytes& b, std::string name = {}) {
  if (b.size() < 4 || !detail::has_magic(b, kFmatMagic)) {
    if (b.size() < 4) raise(ErrorKind::TruncatedFile, "file shorter than magic");
    raise(ErrorKind::BadMagic, "expected FMAT magic");
  }
  if (b.size() < kFmatHeaderSize) raise(ErrorKind::TruncatedFile, "FMAT header incomplete");
  if (b[4] != kFmatVersion) {
    raise(ErrorKind::UnsupportedVersion, "FMAT version " + std::to_string(b[4]));
  }
  const bool centered = (b[5] & 0x01) != 0;
  const auto p = detail::get_le<std::uint32_t>(&b[6]);
  const auto n = detail::get_le<std::uint32_t>(&b[10]);
  const std::uint64_t expected = kFmatHeaderSize + std::uint64_t{p} * n * 8;
  if (b.size() != expected) {
    raise(ErrorKind::TruncatedFile, "length " + std::to_string(b.size()) +
                                        " does not match header-implied " +
                                        std::to_string(expected));
  }
  require(p >= 1 && n >= 1, ErrorKind::ShapeError, "FMAT declares an empty matrix");
  Matrix data(p, n);
  const std::uint8_t* cursor = b.data() + kFmatHeaderSize;
  for (std::uint32_t r = 0; r < p; ++r) {
    for (std::uint32_t c = 0; c < n; ++c, cursor += 8) {
      const double v = detail::get_le<double>(cursor);
      if (!std::isfinite(v)) {
        raise(ErrorKind::NonFiniteEntry,
              "entry (" + std::to_string(r) + "," + std::to_string(c) + ") is not finite");
      }
      data(r, c) = v;
    }
  }
  // The stored flag is trusted only if the data agrees.
  const bool keep_flag = centered && repdisc::detail::rows_centered(data);
  return FeatureMatrix(std::move(data), keep_flag, std::move(name));
}

inline void write_fmat(const FeatureMatrix& m, const std::filesystem::path& path) {
  detail::write_file(path, encode_fmat(m));
}

inline FeatureMatrix read_fmat(const std::filesystem::path& path) {
  return decode_fmat(detail::read_file(path), path.stem().string());
}

inline Bytes encode_labels(const Labels& labels) {
  Bytes out;
  out.insert(out.end(), kLabelMagic.begin(), kLabelMagic.end());
  if (const auto* task = std::get_if<TaskVector>(&labels)) {
    out.push_back(0);
    detail::put_le(out, static_cast<std::uint32_t>(task->size()));
    for (Eigen::Index i = 0; i < task->size(); ++i) detail::put_le(out, task->values()(i));
  } else {
    const auto& cls = std::get<ClassLabels>(labels);
    out.push_back(1);
    detail::put_le(out, static_cast<std::uint32_t>(cls.size()));
    for (auto l : cls.labels()) detail::put_le(out, l);
    detail::put_le(out, cls.num_classes());
  }
  return out;
}

inline Labels decode_labels(const Bytes& b) {
  if (b.size() < 4) raise(ErrorKind::TruncatedFile, "file shorter than magic");
  if (!detail::has_magic(b, kLabelMagic)) raise(ErrorKind::BadMagic, "expected LBL1 magic");
  if (b.size() < kLabelHeaderSize) raise(ErrorKind::TruncatedFile, "LBL1 header incomplete");
  const std::uint8_t kind = b[4];
  const auto n = detail::get_le<std::uint32_t>(&b[5]);
  const std::uint8_t* cursor = b.data() + kLabelHeaderSize;
  if (kind == 0) {
    const std::uint64_t expected = kLabelHeaderSize + std::uint64_t{n} * 8;
    if (b.size() != expected) raise(ErrorKind::TruncatedFile, "regression payload length mismatch");
    Vector v(n);
    for (std::uint32_t i = 0; i < n; ++i, cursor += 8) {
      v(i) = detail::get_le<double>(cursor);
      if (!std::isfinite(v(i))) raise(ErrorKind::NonFiniteEntry, "label " + std::to_string(i));
    }
    return TaskVector(std::move(v));
  }
  if (kind == 1) {
    const std::uint64_t expected = kLabelHeaderSize + std::uint64_t{n} * 4 + 4;
    if (b.size() != expected) raise(ErrorKind::TruncatedFile, "class payload length mismatch");
    std::vector<std::uint32_t> labels(n);
    for (std::uint32_t i = 0; i < n; ++i, cursor += 4) labels[i] = detail::get_le<std::uint32_t>(cursor);
    const auto k = detail::get_le<std::uint32_t>(cursor);
    return ClassLabels(std::move(labels), k);
  }
  raise(ErrorKind::UnsupportedVersion, "unknown LBL1 kind " + std::to_string(kind));
}

inline void write_labels(const Labels& labels, const std::filesystem::path& path) {
  detail::write_file(path, encode_labels(labels));
}

inline Labels read_labels(const std::filesystem::path& path) {
  return decode_labels(detail::read_file(path));
}

/// CSV with one sample per line (n lines x p columns); transposed to p x n on load.
inline FeatureMatrix parse_csv_fmat(std::string_view text, std::string name = {}) {
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(field, &used);
      } catch (const std::exception&) {
        raise(ErrorKind::InvalidArgument, "bad number on CSV line " + std::to_string(line_no));
      }
      if (field.find_first_not_of(" \t", used) != std::string::npos) {
        raise(ErrorKind::InvalidArgument, "bad number on CSV line " + std::to_string(line_no));
      }
      if (!std::isfinite(v)) raise(ErrorKind::NonFiniteEntry, "CSV line " + std::to_string(line_no));
      row.push_back(v);
    }
    if (width == 0) width = row.size();
    require(row.size() == width, ErrorKind::ShapeError,
            "CSV line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                " fields, expected " + std::to_string(width));
    rows.push_back(std::move(row));
  }
  require(!rows.empty() && width > 0, ErrorKind::ShapeError, "CSV has no samples");
  Matrix data(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t c = 0; c < rows.size(); ++c)
    for (std::size_t r = 0; r < width; ++r) data(r, c) = rows[c][r];
  return FeatureMatrix(std::move(data), false, std::move(name));
}

inline FeatureMatrix read_csv_fmat(const std::filesystem::path& path) {
  const Bytes bytes = detail::read_file(path);
  return parse_csv_fmat(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                        path.stem().string());
}

/// Dispatches on extension: .csv goes through the CSV path, everything else is FMAT.
inline FeatureMatrix load_features(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_csv_fmat(path);
  return read_fmat(path);
}

}  // namespace repdisc::io
