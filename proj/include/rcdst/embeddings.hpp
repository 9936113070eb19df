#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "rcdst/tensor.hpp"

namespace rcdst {

inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// Precomputed per-token input vectors, one L x dim record per sub-dialog,
/// keyed "dialogid#t". Read-only once loaded: models never write into it.
///
/// File layout: "DSTE", u32 version, u32 dim, u32 record count, then per
/// record a length-prefixed key, u32 row count and rows x dim little-endian
/// doubles.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;
  explicit EmbeddingStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  void add(const std::string& key, Matrix rows);
  /// Throws DataError when the record is missing or has the wrong length.
  const Matrix& get(const std::string& key, std::size_t expected_rows) const;
  const std::map<std::string, Matrix>& records() const { return records_; }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, Matrix> records_;
};

EmbeddingStore load_embeddings(const std::filesystem::path& path);
void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path);

}  // namespace rcdst
