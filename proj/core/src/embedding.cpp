#include "vlselect/embedding.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "vlselect/errors.hpp"

namespace vlselect {

std::string_view to_string(Space space) {
  return space == Space::Concept ? "concept" : "skill";
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t count, std::size_t dim, Space space, bool normalized)
    : count_(count), dim_(dim), space_(space), normalized_(normalized), data_(count * dim, 0.0f) {}

EmbeddingMatrix::EmbeddingMatrix(std::size_t count, std::size_t dim, Space space, bool normalized,
                                 std::vector<float> data)
    : count_(count), dim_(dim), space_(space), normalized_(normalized), data_(std::move(data)) {
  if (data_.size() != count_ * dim_) {
    throw PreconditionError("embedding data has " + std::to_string(data_.size()) +
                            " values, expected " + std::to_string(count_ * dim_));
  }
}

void EmbeddingMatrix::push_row(std::span<const float> values) {
  if (count_ == 0 && dim_ == 0) dim_ = values.size();
  if (values.size() != dim_) {
    throw DimensionMismatchError("row of dimension " + std::to_string(values.size()) +
                                 " pushed into matrix of dimension " + std::to_string(dim_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++count_;
}

void EmbeddingMatrix::check_finite() const {
  for (std::size_t i = 0; i < count_; ++i) {
    for (float v : row(i)) {
      if (!std::isfinite(v)) {
        throw DataError("non-finite value in embedding row " + std::to_string(i), i);
      }
    }
  }
}

double row_norm(std::span<const float> row) { return std::sqrt(dot(row, row)); }

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& matrix) {
  EmbeddingMatrix out = matrix;
  for (std::size_t i = 0; i < out.count(); ++i) {
    auto r = out.row(i);
    const double norm = row_norm(r);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DegenerateVectorError("cannot normalize zero-norm row " + std::to_string(i), i);
    }
    // rows already unit to float precision stay bit-identical (idempotence)
    if (std::abs(norm - 1.0) < 1e-7) continue;
    for (float& v : r) v = static_cast<float>(static_cast<double>(v) / norm);
  }
  out.set_normalized(true);
  return out;
}

bool rows_are_unit(const EmbeddingMatrix& matrix) {
  for (std::size_t i = 0; i < matrix.count(); ++i) {
    if (std::abs(row_norm(matrix.row(i)) - 1.0) > kUnitNormTolerance) return false;
  }
  return true;
}

namespace {

template <typename T>
T byteswap(T value) {
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get_le(const std::byte* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) value = byteswap(value);
  return value;
}

}  // namespace

std::vector<std::byte> encode_cseb(const EmbeddingMatrix& matrix) {
  std::vector<std::byte> out;
  out.reserve(kCsebHeaderSize + matrix.data().size_bytes());
  for (char c : std::string_view("CSEB")) out.push_back(static_cast<std::byte>(c));
  put_le<std::uint32_t>(out, kCsebVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(matrix.space()));
  put_le<std::uint8_t>(out, matrix.normalized() ? 1 : 0);
  put_le<std::uint16_t>(out, 0);
  put_le<std::uint64_t>(out, matrix.count());
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(matrix.dim()));
  for (float v : matrix.data()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

EmbeddingMatrix decode_cseb(std::span<const std::byte> bytes) {
  if (bytes.size() < kCsebHeaderSize) {
    throw TruncationError("CSEB header needs " + std::to_string(kCsebHeaderSize) + " bytes, got " +
                          std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), "CSEB", 4) != 0) throw FormatError("bad CSEB magic");
  const auto version = get_le<std::uint32_t>(bytes.data() + 4);
  if (version != kCsebVersion) {
    throw FormatError("unsupported CSEB version " + std::to_string(version));
  }
  const auto space = get_le<std::uint8_t>(bytes.data() + 8);
  const auto normalized = get_le<std::uint8_t>(bytes.data() + 9);
  const auto reserved = get_le<std::uint16_t>(bytes.data() + 10);
  if (space > 1) throw FormatError("bad CSEB space byte " + std::to_string(space));
  if (normalized > 1) throw FormatError("bad CSEB normalized byte " + std::to_string(normalized));
  if (reserved != 0) throw FormatError("nonzero CSEB reserved field");
  const auto count = get_le<std::uint64_t>(bytes.data() + 12);
  const auto dim = get_le<std::uint32_t>(bytes.data() + 20);
  if (dim == 0) throw FormatError("CSEB dim must be positive");

  const std::size_t payload = bytes.size() - kCsebHeaderSize;
  // division guards the count*dim*4 product against overflow
  if (count > payload / 4 / dim + 1 || count * dim * 4 != payload) {
    throw TruncationError("CSEB declares " + std::to_string(count) + "x" + std::to_string(dim) +
                          " floats but payload holds " + std::to_string(payload) + " bytes");
  }

  std::vector<float> data(count * dim);
  const std::byte* p = bytes.data() + kCsebHeaderSize;
  for (std::size_t i = 0; i < data.size(); ++i, p += 4) {
    data[i] = std::bit_cast<float>(get_le<std::uint32_t>(p));
  }
  EmbeddingMatrix matrix(count, dim, static_cast<Space>(space), normalized == 1, std::move(data));
  matrix.check_finite();
  return matrix;
}

EmbeddingMatrix load_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string raw = std::move(buffer).str();
  try {
    return decode_cseb(std::as_bytes(std::span(raw.data(), raw.size())));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what(), e.row());
  }
}

void write_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  const auto bytes = encode_cseb(matrix);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace vlselect
