#include "rcdst/embeddings.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "rcdst/errors.hpp"

namespace rcdst {

using namespace detail;

void EmbeddingStore::add(const std::string& key, Matrix rows) {
  if (static_cast<std::size_t>(rows.cols()) != dim_) {
    throw DataError("embedding record " + key + " has dimension " + std::to_string(rows.cols()) +
                    ", store expects " + std::to_string(dim_));
  }
  records_[key] = std::move(rows);
}

const Matrix& EmbeddingStore::get(const std::string& key, std::size_t expected_rows) const {
  const auto it = records_.find(key);
  if (it == records_.end()) throw DataError("no pretrained embedding record for " + key);
  if (static_cast<std::size_t>(it->second.rows()) != expected_rows) {
    throw DataError("embedding record " + key + " has " + std::to_string(it->second.rows()) +
                    " rows, flattened dialog has " + std::to_string(expected_rows) + " tokens");
  }
  return it->second;
}

EmbeddingStore load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  expect_magic(in, "DSTE", path.string());
  const auto version = get_u32(in, "embedding version");
  if (version != kEmbeddingVersion) {
    throw DataError(path.string() + ": unsupported embedding version " + std::to_string(version));
  }
  const auto dim = get_u32(in, "embedding dim");
  if (dim == 0) throw DataError(path.string() + ": embedding dimension is zero");
  const auto count = get_u32(in, "record count");
  EmbeddingStore store(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    auto key = get_string(in, "record key", 4096);
    const auto rows = get_u32(in, "record rows");
    Matrix m(rows, dim);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get_f64(in, "record data");
    store.add(key, std::move(m));
  }
  return store;
}

void save_embeddings(const EmbeddingStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding file " + path.string());
  out.write("DSTE", 4);
  put_u32(out, kEmbeddingVersion);
  put_u32(out, static_cast<std::uint32_t>(store.dim()));
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& [key, rows] : store.records()) {
    put_string(out, key);
    put_u32(out, static_cast<std::uint32_t>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.size(); ++i) put_f64(out, rows.data()[i]);
  }
}

}  // namespace rcdst
