#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "rcdst/adam.hpp"
#include "rcdst/corpus.hpp"
#include "rcdst/embeddings.hpp"
#include "rcdst/model.hpp"

namespace rcdst {

struct TrainConfig {
  ModelKind kind = ModelKind::carryover;
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t patience = 10;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;
  EmbeddingMode embedding_mode = EmbeddingMode::trainable;
  EncoderDims dims;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_loss = 0.0;
  double elapsed_seconds = 0.0;
};

/// Tracks the best dev loss and says when to stop: after `patience`
/// consecutive epochs without a strict decrease.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  /// Returns true when this epoch is the new best.
  bool observe(std::size_t epoch, double dev_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t since_best_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

struct TrainingSet {
  const std::vector<Dialog>* dialogs = nullptr;
  const EmbeddingStore* embeddings = nullptr;
};

struct TrainResult {
  Model model;  // parameters from the best dev epoch
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  std::size_t train_units = 0;
  std::size_t dev_units = 0;
};

/// Per-epoch callback, e.g. for streaming the JSON-lines log.
using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const TrainConfig& config, const TrainingSet& train_set,
                  const TrainingSet& dev_set, const Schema& schema, const Ontology* ontology,
                  const EpochCallback& on_epoch = {});

/// Mean unit loss of `model` over prepared sub-dialogs (no gradients).
double mean_loss(Model& model, const std::vector<TargetedSubDialog>& subs,
                 const std::vector<EncoderInput>& inputs);

/// One Adam step on a single sub-dialog's units; returns the pre-step loss.
double train_step(Model& model, Adam& adam, const EncoderInput& input,
                  const SubDialogTargets& targets);

void write_log_line(std::ostream& out, const EpochLog& entry);

}  // namespace rcdst
