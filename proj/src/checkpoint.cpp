#include "rcdst/checkpoint.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "rcdst/errors.hpp"

namespace rcdst {

using namespace detail;

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void write_checkpoint(std::ostream& out, const std::string& metadata, const ParameterRefs& params) {
  out.write("DSTC", 4);
  put_u32(out, kCheckpointVersion);
  put_string(out, metadata);
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    put_string(out, p->name);
    const auto shape = p->shape();
    put_u32(out, static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) put_u64(out, d);
    for (Eigen::Index i = 0; i < p->value.size(); ++i) put_f64(out, p->value.data()[i]);
  }
}

void save_checkpoint(const std::filesystem::path& path, const std::string& metadata,
                     const ParameterRefs& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  write_checkpoint(out, metadata, params);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(std::istream& in, const std::string& label) {
  expect_magic(in, "DSTC", label);
  const auto version = get_u32(in, "checkpoint version");
  if (version != kCheckpointVersion) {
    throw DataError(label + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.metadata = get_string(in, "checkpoint metadata");
  const auto count = get_u32(in, "tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = get_string(in, "tensor name", 4096);
    const auto rank = get_u32(in, "tensor rank");
    if (rank < 1 || rank > 2) throw DataError(label + ": tensor " + t.name + " has rank " +
                                              std::to_string(rank));
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(get_u64(in, "tensor dims"));
    const auto rows = rank == 1 ? 1 : t.shape[0];
    const auto cols = rank == 1 ? t.shape[0] : t.shape[1];
    if (rows * cols > (1ull << 32)) throw DataError(label + ": tensor " + t.name + " too large");
    t.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < t.values.size(); ++i) t.values.data()[i] = get_f64(in, "tensor data");
    ck.tensors.push_back(std::move(t));
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in, path.string());
}

void restore_parameters(const Checkpoint& checkpoint, const ParameterRefs& params) {
  if (checkpoint.tensors.size() != params.size()) {
    throw DataError("checkpoint has " + std::to_string(checkpoint.tensors.size()) +
                    " tensors, model expects " + std::to_string(params.size()));
  }
  for (auto* p : params) {
    const auto* t = checkpoint.find(p->name);
    if (!t) throw DataError("checkpoint is missing tensor " + p->name);
    if (t->shape != p->shape()) throw DataError("checkpoint tensor " + p->name + " has wrong shape");
    p->value = t->values;
    p->zero_grad();
  }
}

}  // namespace rcdst
