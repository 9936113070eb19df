#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "rcdst/corpus.hpp"
#include "rcdst/embeddings.hpp"
#include "rcdst/model.hpp"
#include "rcdst/predictions.hpp"

namespace rcdst {

/// Stages replaced by ground truth.
struct OracleMask {
  bool carryover = false;
  bool type = false;
  bool span = false;

  static OracleMask all() { return {true, true, true}; }
  bool any() const { return carryover || type || span; }
};

/// Value emitted by an oracle span stage when the gold value is not in the
/// context. Normalized values never contain '<', so it never matches gold.
inline constexpr std::string_view kUnanswerable = "<unanswerable>";

struct SlotPrediction {
  std::optional<double> change_prob;
  bool changed = false;
  std::optional<RowVector> type_probs;
  std::optional<RowVector> start_probs;
  std::optional<RowVector> end_probs;
  std::optional<std::pair<std::size_t, std::size_t>> span;
  Value value;
  Provenance provenance = Provenance::carried;
};

struct TurnPrediction {
  std::string dialog_id;
  std::size_t t = 0;
  std::vector<SlotPrediction> slots;

  DialogState state() const;
  PredictionRecord record() const;
};

struct PipelineOptions {
  OracleMask oracle;
  double change_threshold = 0.5;
  std::optional<std::size_t> max_span_len;
  /// Feed the gold previous state instead of the predicted one (diagnostic).
  bool gold_previous_state = false;
};

/// The three stage models. Several models per stage form an ensemble whose
/// probabilities are averaged. Stages covered by an oracle may be empty.
struct Tracker {
  std::vector<const Model*> carryover;
  std::vector<const Model*> type;
  std::vector<const Model*> span;
  const EmbeddingStore* embeddings = nullptr;

  /// Throws DataError if a stage mixes architectures, a model has the wrong
  /// kind, a schema differs, or a non-oracle stage has no model.
  void validate(const Schema& schema, const PipelineOptions& options) const;
};


/// Decisions for turn t (1-based) of `dialog` given the previous state.
TurnPrediction predict_turn(const DialogState& prev, const Dialog& dialog, std::size_t t,
                            const Tracker& tracker, const PipelineOptions& options);

/// Rolls the tracker through every turn, feeding back its own state.
std::vector<TurnPrediction> track_dialog(const Dialog& dialog, const Tracker& tracker,
                                         const PipelineOptions& options);

std::vector<PredictionRecord> track_corpus(const std::vector<Dialog>& corpus, const Schema& schema,
                                           const Tracker& tracker, const PipelineOptions& options);

/// Closed-vocabulary predictions (probabilities averaged over `models`).
std::vector<PredictionRecord> jst_track_corpus(const std::vector<Dialog>& corpus,
                                               const Schema& schema,
                                               const std::vector<const Model*>& models,
                                               const EmbeddingStore* embeddings);

/// For each slot: true when the JST system is selected (strictly higher dev
/// accuracy); ties keep the reading-comprehension system.
std::vector<bool> hybrid_selection(const std::vector<double>& rc_dev_accuracy,
                                   const std::vector<double>& jst_dev_accuracy);

std::vector<PredictionRecord> hybrid_combine(const std::vector<PredictionRecord>& rc,
                                             const std::vector<PredictionRecord>& jst,
                                             const std::vector<double>& rc_dev_accuracy,
                                             const std::vector<double>& jst_dev_accuracy);

}  // namespace rcdst
