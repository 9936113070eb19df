#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rcdst/corpus.hpp"
#include "rcdst/embeddings.hpp"
#include "rcdst/encoder.hpp"
#include "rcdst/heads.hpp"
#include "rcdst/jst.hpp"

namespace rcdst {

enum class ModelKind { carryover, type, span, jst };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view s);

struct SpanTarget {
  std::size_t slot = 0;
  std::size_t start = 0;
  std::size_t end = 0;
};

/// Supervision attached to one flattened sub-dialog. Each populated entry is
/// one training unit: the carryover vector, each (slot, type), each span, and
/// the JST slot list as a whole.
struct SubDialogTargets {
  std::optional<RowVector> change;  // M labels, 1 = change
  std::vector<std::pair<std::size_t, SlotType>> types;
  std::vector<SpanTarget> spans;
  std::vector<std::pair<std::size_t, std::size_t>> jst;  // (slot, class)

  std::size_t units() const {
    return (change ? 1 : 0) + types.size() + spans.size() + (jst.empty() ? 0 : 1);
  }
};

/// One independently trained network: its own encoder plus a single head.
class Model {
 public:
  static Model create(ModelKind kind, const EncoderDims& dims, EmbeddingMode mode,
                      const Schema& schema, const Vocabulary& vocab, std::size_t embedding_dim,
                      const Ontology* ontology, std::uint64_t seed);
  static Model load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path);

  ModelKind kind() const { return kind_; }
  const Schema& schema() const { return schema_; }
  const Vocabulary& vocabulary() const { return vocab_; }
  const Encoder& encoder() const { return encoder_; }
  Encoder& encoder() { return encoder_; }
  const JstHead& jst_head() const { return *jst_; }
  CarryoverHead& carryover_head() { return *carryover_; }
  TypeHead& type_head() { return *type_; }
  SpanHead& span_head() { return *span_; }

  ParameterRefs parameters();
  std::string metadata() const;
  bool same_architecture(const Model& other) const;

  EncoderInput prepare(const FlattenedDialog& flat, const EmbeddingStore* store) const;
  DialogEncoding encode(const EncoderInput& input) const { return encoder_.encode(input); }

  RowVector change_probs(const DialogEncoding& enc) const;
  RowVector type_probs(const DialogEncoding& enc, std::size_t slot) const;
  std::pair<RowVector, RowVector> span_probs(const DialogEncoding& enc, std::size_t slot) const;
  RowVector jst_probs(const DialogEncoding& enc, std::size_t slot) const;

  /// Sum of unit losses for one sub-dialog. When `grad_scale` is non-zero the
  /// gradient of grad_scale * loss is added to the parameter gradients.
  double accumulate(const EncoderInput& input, const SubDialogTargets& targets,
                    double grad_scale);

 private:
  Model() = default;

  ModelKind kind_ = ModelKind::carryover;
  Schema schema_;
  Vocabulary vocab_;
  Encoder encoder_;
  std::optional<CarryoverHead> carryover_;
  std::optional<TypeHead> type_;
  std::optional<SpanHead> span_;
  std::optional<JstHead> jst_;
};

/// Builds per-sub-dialog targets for `kind` from gold states. Sub-dialogs
/// without any unit for this kind are omitted.
struct TargetedSubDialog {
  std::size_t dialog_index = 0;
  FlattenedDialog flat;
  SubDialogTargets targets;
};

std::vector<TargetedSubDialog> build_targets(ModelKind kind, const std::vector<Dialog>& corpus,
                                             const Schema& schema, const JstHead* jst = nullptr);

}  // namespace rcdst
