#include "rcdst/trainer.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "rcdst/adam.hpp"
#include "rcdst/errors.hpp"

namespace rcdst {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size == 0) throw std::invalid_argument("batch size must be positive");
  if (patience == 0) throw std::invalid_argument("patience must be at least 1");
  if (max_epochs == 0) throw std::invalid_argument("max epochs must be positive");
}

bool EarlyStopping::observe(std::size_t epoch, double dev_loss) {
  if (dev_loss < best_loss_) {
    best_loss_ = dev_loss;
    best_epoch_ = epoch;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

namespace {

// One training unit: a sub-dialog and which of its targets the unit covers.
struct Unit {
  std::size_t sub = 0;
  enum class What { change, type, span, jst } what = What::change;
  std::size_t index = 0;
};

std::vector<Unit> enumerate_units(const std::vector<TargetedSubDialog>& subs) {
  std::vector<Unit> units;
  for (std::size_t s = 0; s < subs.size(); ++s) {
    const auto& t = subs[s].targets;
    if (t.change) units.push_back({s, Unit::What::change, 0});
    for (std::size_t k = 0; k < t.types.size(); ++k) units.push_back({s, Unit::What::type, k});
    for (std::size_t k = 0; k < t.spans.size(); ++k) units.push_back({s, Unit::What::span, k});
    if (!t.jst.empty()) units.push_back({s, Unit::What::jst, 0});
  }
  return units;
}

std::vector<EncoderInput> prepare_all(const Model& model, const std::vector<TargetedSubDialog>& subs,
                                      const EmbeddingStore* store) {
  std::vector<EncoderInput> inputs;
  inputs.reserve(subs.size());
  for (const auto& s : subs) inputs.push_back(model.prepare(s.flat, store));
  return inputs;
}

}  // namespace

double mean_loss(Model& model, const std::vector<TargetedSubDialog>& subs,
                 const std::vector<EncoderInput>& inputs) {
  double total = 0.0;
  std::size_t units = 0;
  for (std::size_t s = 0; s < subs.size(); ++s) {
    total += model.accumulate(inputs[s], subs[s].targets, 0.0);
    units += subs[s].targets.units();
  }
  return units == 0 ? 0.0 : total / static_cast<double>(units);
}

double train_step(Model& model, Adam& adam, const EncoderInput& input,
                  const SubDialogTargets& targets) {
  auto params = model.parameters();
  zero_grads(params);
  const double scale = 1.0 / static_cast<double>(targets.units());
  const double loss = model.accumulate(input, targets, scale);
  adam.step(params);
  return loss * scale;
}

TrainResult train(const TrainConfig& config, const TrainingSet& train_set,
                  const TrainingSet& dev_set, const Schema& schema, const Ontology* ontology,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (!train_set.dialogs || !dev_set.dialogs) throw std::invalid_argument("train: missing corpus");
  const auto start_time = std::chrono::steady_clock::now();

  const auto vocab = config.embedding_mode == EmbeddingMode::trainable
                         ? Vocabulary::build(*train_set.dialogs)
                         : Vocabulary();
  std::size_t embedding_dim = 0;
  if (config.embedding_mode == EmbeddingMode::pretrained) {
    if (!train_set.embeddings || !dev_set.embeddings) {
      throw DataError("pretrained embedding mode needs embedding files for train and dev");
    }
    embedding_dim = train_set.embeddings->dim();
  }
  Model model = Model::create(config.kind, config.dims, config.embedding_mode, schema, vocab,
                              embedding_dim, ontology, config.seed);
  const JstHead* jst = config.kind == ModelKind::jst ? &model.jst_head() : nullptr;

  const auto train_subs = build_targets(config.kind, *train_set.dialogs, schema, jst);
  const auto dev_subs = build_targets(config.kind, *dev_set.dialogs, schema, jst);
  if (train_subs.empty()) {
    throw DataError("no training examples for the " + std::string(to_string(config.kind)) +
                    " model");
  }
  const auto train_inputs = prepare_all(model, train_subs, train_set.embeddings);
  const auto dev_inputs = prepare_all(model, dev_subs, dev_set.embeddings);
  auto units = enumerate_units(train_subs);

  TrainResult result{model, {}, 0, units.size(), 0};
  for (const auto& s : dev_subs) result.dev_units += s.targets.units();

  Rng shuffle_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  Adam adam(AdamConfig{config.learning_rate});
  EarlyStopping stopper(config.patience);
  auto params = model.parameters();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(units);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < units.size(); b += config.batch_size) {
      const std::size_t e = std::min(units.size(), b + config.batch_size);
      // Group the batch by sub-dialog so each passage is encoded once. The
      // map keeps the summation order fixed.
      std::map<std::size_t, SubDialogTargets> groups;
      for (std::size_t k = b; k < e; ++k) {
        const auto& u = units[k];
        const auto& src = train_subs[u.sub].targets;
        auto& dst = groups[u.sub];
        switch (u.what) {
          case Unit::What::change: dst.change = src.change; break;
          case Unit::What::type: dst.types.push_back(src.types[u.index]); break;
          case Unit::What::span: dst.spans.push_back(src.spans[u.index]); break;
          case Unit::What::jst: dst.jst = src.jst; break;
        }
      }
      zero_grads(params);
      const double scale = 1.0 / static_cast<double>(e - b);
      for (const auto& [sub, targets] : groups) {
        epoch_loss += model.accumulate(train_inputs[sub], targets, scale);
      }
      adam.step(params);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = epoch_loss / static_cast<double>(units.size());
    entry.dev_loss = dev_subs.empty() ? entry.train_loss : mean_loss(model, dev_subs, dev_inputs);
    entry.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();
    if (!std::isfinite(entry.train_loss) || !std::isfinite(entry.dev_loss)) {
      throw std::runtime_error("training diverged at epoch " + std::to_string(epoch));
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (stopper.observe(epoch, entry.dev_loss)) {
      result.model = model;
      result.best_epoch = epoch;
    }
    if (stopper.should_stop()) break;
  }
  return result;
}

void write_log_line(std::ostream& out, const EpochLog& entry) {
  nlohmann::ordered_json j;
  j["epoch"] = entry.epoch;
  j["train_loss"] = entry.train_loss;
  j["dev_loss"] = entry.dev_loss;
  j["elapsed_seconds"] = entry.elapsed_seconds;
  out << j.dump() << "\n";
}

}  // namespace rcdst
