#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace vlselect {

enum class Space : std::uint8_t { Concept = 0, Skill = 1 };

std::string_view to_string(Space space);

// Row-major count x dim block of float32 vectors, one row per corpus record.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t count, std::size_t dim, Space space, bool normalized = false);
  EmbeddingMatrix(std::size_t count, std::size_t dim, Space space, bool normalized,
                  std::vector<float> data);

  std::size_t count() const noexcept { return count_; }
  std::size_t dim() const noexcept { return dim_; }
  Space space() const noexcept { return space_; }
  bool normalized() const noexcept { return normalized_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::span<float> row(std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  std::span<const float> data() const noexcept { return data_; }
  std::span<float> data() noexcept { return data_; }

  void set_normalized(bool normalized) noexcept { normalized_ = normalized; }
  void set_space(Space space) noexcept { space_ = space; }

  // Appends a row; dim must match (or the matrix must be empty with dim 0).
  void push_row(std::span<const float> values);

  // Throws DataError naming the first row holding NaN/Inf.
  void check_finite() const;

  friend bool operator==(const EmbeddingMatrix&, const EmbeddingMatrix&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t dim_ = 0;
  Space space_ = Space::Concept;
  bool normalized_ = false;
  std::vector<float> data_;
};

// Tolerance on |norm - 1| for a row to count as unit length.
inline constexpr double kUnitNormTolerance = 1e-5;

double row_norm(std::span<const float> row);

// Dot product with 64-bit accumulation.
double dot(std::span<const float> a, std::span<const float> b);

// Divides every row by its L2 norm. Throws DegenerateVectorError on a zero row.
EmbeddingMatrix normalize_rows(const EmbeddingMatrix& matrix);

// True when every row norm lies within kUnitNormTolerance of 1.
bool rows_are_unit(const EmbeddingMatrix& matrix);

// CSEB binary format, little-endian:
//   "CSEB" | u32 version=1 | u8 space | u8 normalized | u16 reserved=0 |
//   u64 count | u32 dim | count*dim float32, row-major
inline constexpr std::size_t kCsebHeaderSize = 24;
inline constexpr std::uint32_t kCsebVersion = 1;

EmbeddingMatrix load_embedding_file(const std::filesystem::path& path);
void write_embedding_file(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

// In-memory variants used by the file functions.
EmbeddingMatrix decode_cseb(std::span<const std::byte> bytes);
std::vector<std::byte> encode_cseb(const EmbeddingMatrix& matrix);

}  // namespace vlselect
