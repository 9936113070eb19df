#include "rcdst/pipeline.hpp"

#include <memory>
#include <stdexcept>

#include "rcdst/errors.hpp"
#include "rcdst/heads.hpp"
#include "rcdst/jst.hpp"
#include "rcdst/text.hpp"

namespace rcdst {

DialogState TurnPrediction::state() const {
  DialogState s;
  s.reserve(slots.size());
  for (const auto& p : slots) s.push_back(p.value);
  return s;
}

PredictionRecord TurnPrediction::record() const {
  PredictionRecord r{dialog_id, t, state(), {}};
  for (const auto& p : slots) r.provenance.push_back(p.provenance);
  return r;
}

namespace {

void check_stage(const std::vector<const Model*>& models, ModelKind kind, const Schema& schema,
                 bool oracle) {
  if (models.empty()) {
    if (!oracle) throw DataError("no " + std::string(to_string(kind)) + " model supplied");
    return;
  }
  for (const auto* m : models) {
    if (m->kind() != kind) {
      throw DataError("expected a " + std::string(to_string(kind)) + " model, got " +
                      std::string(to_string(m->kind())));
    }
    if (m->schema().slots() != schema.slots()) {
      throw DataError("model slot inventory differs from the corpus schema");
    }
    if (!m->same_architecture(*models.front())) {
      throw DataError("ensemble members of the " + std::string(to_string(kind)) +
                      " stage have different architectures");
    }
  }
}

// Lazily encodes one sub-dialog with every model of a stage.
class StageEncodings {
 public:
  StageEncodings(const std::vector<const Model*>& models, const FlattenedDialog& flat,
                 const EmbeddingStore* store)
      : models_(models), flat_(flat), store_(store) {}

  const std::vector<DialogEncoding>& get() {
    if (encodings_.empty()) {
      for (const auto* m : models_) encodings_.push_back(m->encode(m->prepare(flat_, store_)));
    }
    return encodings_;
  }

 private:
  const std::vector<const Model*>& models_;
  const FlattenedDialog& flat_;
  const EmbeddingStore* store_;
  std::vector<DialogEncoding> encodings_;
};

// Running mean; identical members leave it bit-for-bit unchanged.
void accumulate_mean(RowVector& mean, const RowVector& x, std::size_t k) {
  if (k == 0) {
    mean = x;
  } else {
    mean += (x - mean) / static_cast<double>(k + 1);
  }
}

template <typename F>
RowVector average(const std::vector<const Model*>& models, StageEncodings& enc, F&& f) {
  const auto& e = enc.get();
  RowVector mean;
  for (std::size_t k = 0; k < models.size(); ++k) accumulate_mean(mean, f(*models[k], e[k]), k);
  return mean;
}

std::size_t argmax(const RowVector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = k;
  }
  return static_cast<std::size_t>(best);
}

}  // namespace

void Tracker::validate(const Schema& schema, const PipelineOptions& options) const {
  check_stage(carryover, ModelKind::carryover, schema, options.oracle.carryover);
  check_stage(type, ModelKind::type, schema, options.oracle.type);
  check_stage(span, ModelKind::span, schema, options.oracle.span);
}

TurnPrediction predict_turn(const DialogState& prev, const Dialog& dialog, std::size_t t,
                            const Tracker& tracker, const PipelineOptions& options) {
  const auto flat = flatten(dialog, t);
  const auto slots = prev.size();
  const auto& gold = dialog.turns[t - 1].state;
  const DialogState none(slots);
  const auto& gold_prev = t == 1 ? none : dialog.turns[t - 2].state;
  if (gold.size() != slots) throw std::invalid_argument("predict_turn: state size mismatch");

  StageEncodings carry_enc(tracker.carryover, flat, tracker.embeddings);
  StageEncodings type_enc(tracker.type, flat, tracker.embeddings);
  StageEncodings span_enc(tracker.span, flat, tracker.embeddings);

  // Gold spans never contain markers, so neither may decoded ones.
  std::unique_ptr<bool[]> blocked(new bool[flat.size()]);
  for (std::size_t i = 0; i < flat.size(); ++i) blocked[i] = flat.is_marker(i);

  std::optional<RowVector> change_probs;
  TurnPrediction out{dialog.id, t, std::vector<SlotPrediction>(slots)};
  for (std::size_t s = 0; s < slots; ++s) {
    auto& p = out.slots[s];
    if (options.oracle.carryover) {
      p.changed = gold[s] != gold_prev[s];
    } else {
      if (!change_probs) {
        change_probs = average(tracker.carryover, carry_enc,
                               [](const Model& m, const DialogEncoding& e) { return m.change_probs(e); });
      }
      p.change_prob = (*change_probs)(static_cast<Eigen::Index>(s));
      p.changed = !(*p.change_prob < options.change_threshold);
    }
    if (!p.changed) {
      p.value = prev[s];
      p.provenance = Provenance::carried;
      continue;
    }

    SlotType type;
    bool oracle_type = false;
    if (options.oracle.type) {
      if (!gold[s]) {
        p.value = std::nullopt;
        p.provenance = Provenance::oracle;
        continue;
      }
      type = derive_type_label(*gold[s]);
      oracle_type = true;
    } else {
      p.type_probs = average(tracker.type, type_enc, [s](const Model& m, const DialogEncoding& e) {
        return m.type_probs(e, s);
      });
      type = static_cast<SlotType>(argmax(*p.type_probs));
    }

    if (type != SlotType::span) {
      p.value = std::string(to_string(type));
      p.provenance = oracle_type ? Provenance::oracle
                     : type == SlotType::yes ? Provenance::yes
                     : type == SlotType::no  ? Provenance::no
                                             : Provenance::dontcare;
      continue;
    }

    if (options.oracle.span) {
      const auto found = gold[s] ? find_gold_span(flat, *gold[s]) : std::nullopt;
      p.span = found;
      p.value = found ? *gold[s] : std::string(kUnanswerable);
      p.provenance = Provenance::oracle;
      continue;
    }

    const auto& encs = span_enc.get();
    RowVector ps, pe;
    for (std::size_t k = 0; k < tracker.span.size(); ++k) {
      const auto [a, b] = tracker.span[k]->span_probs(encs[k], s);
      accumulate_mean(ps, a, k);
      accumulate_mean(pe, b, k);
    }
    const auto span = decode_span(std::span<const double>(ps.data(), static_cast<std::size_t>(ps.size())),
                                  std::span<const double>(pe.data(), static_cast<std::size_t>(pe.size())),
                                  options.max_span_len,
                                  std::span<const bool>(blocked.get(), flat.size()));
    p.start_probs = std::move(ps);
    p.end_probs = std::move(pe);
    p.span = span;
    if (span) {
      std::vector<std::string> toks(flat.tokens.begin() + static_cast<std::ptrdiff_t>(span->first),
                                    flat.tokens.begin() + static_cast<std::ptrdiff_t>(span->second) + 1);
      p.value = normalize_value(detokenize(toks));
    } else {
      p.value = std::string(kUnanswerable);
    }
    p.provenance = Provenance::span;
  }
  return out;
}

std::vector<TurnPrediction> track_dialog(const Dialog& dialog, const Tracker& tracker,
                                         const PipelineOptions& options) {
  if (dialog.turns.empty()) throw DataError("track_dialog: dialog " + dialog.id + " is empty");
  std::vector<TurnPrediction> out;
  DialogState prev(dialog.turns.front().state.size());
  for (std::size_t t = 1; t <= dialog.turns.size(); ++t) {
    if (options.gold_previous_state && t > 1) prev = dialog.turns[t - 2].state;
    out.push_back(predict_turn(prev, dialog, t, tracker, options));
    prev = out.back().state();
  }
  return out;
}

std::vector<PredictionRecord> track_corpus(const std::vector<Dialog>& corpus, const Schema& schema,
                                           const Tracker& tracker, const PipelineOptions& options) {
  tracker.validate(schema, options);
  std::vector<PredictionRecord> out;
  for (const auto& d : corpus) {
    for (const auto& p : track_dialog(d, tracker, options)) out.push_back(p.record());
  }
  return out;
}

std::vector<PredictionRecord> jst_track_corpus(const std::vector<Dialog>& corpus,
                                               const Schema& schema,
                                               const std::vector<const Model*>& models,
                                               const EmbeddingStore* embeddings) {
  check_stage(models, ModelKind::jst, schema, false);
  std::vector<PredictionRecord> out;
  for (const auto& d : corpus) {
    for (std::size_t t = 1; t <= d.turns.size(); ++t) {
      const auto flat = flatten(d, t);
      StageEncodings enc(models, flat, embeddings);
      PredictionRecord r{d.id, t, empty_state(schema),
                         std::vector<Provenance>(schema.size(), Provenance::jst)};
      for (std::size_t s = 0; s < schema.size(); ++s) {
        const auto probs = average(models, enc, [s](const Model& m, const DialogEncoding& e) {
          return m.jst_probs(e, s);
        });
        r.state[s] = jst_decode(models.front()->jst_head().classes(s), probs);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

std::vector<bool> hybrid_selection(const std::vector<double>& rc_dev_accuracy,
                                   const std::vector<double>& jst_dev_accuracy) {
  if (rc_dev_accuracy.size() != jst_dev_accuracy.size()) {
    throw DataError("hybrid: per-slot accuracy tables differ in size");
  }
  std::vector<bool> use_jst(rc_dev_accuracy.size());
  for (std::size_t s = 0; s < use_jst.size(); ++s) use_jst[s] = jst_dev_accuracy[s] > rc_dev_accuracy[s];
  return use_jst;
}

std::vector<PredictionRecord> hybrid_combine(const std::vector<PredictionRecord>& rc,
                                             const std::vector<PredictionRecord>& jst,
                                             const std::vector<double>& rc_dev_accuracy,
                                             const std::vector<double>& jst_dev_accuracy) {
  const auto use_jst = hybrid_selection(rc_dev_accuracy, jst_dev_accuracy);
  if (rc.size() != jst.size()) throw DataError("hybrid: prediction sets cover different turns");
  std::vector<PredictionRecord> out;
  out.reserve(rc.size());
  for (std::size_t k = 0; k < rc.size(); ++k) {
    if (rc[k].dialog_id != jst[k].dialog_id || rc[k].turn != jst[k].turn) {
      throw DataError("hybrid: prediction sets are misaligned at line " + std::to_string(k + 1));
    }
    if (rc[k].state.size() != use_jst.size() || jst[k].state.size() != use_jst.size()) {
      throw DataError("hybrid: state size does not match the accuracy tables");
    }
    PredictionRecord r = rc[k];
    for (std::size_t s = 0; s < use_jst.size(); ++s) {
      if (use_jst[s]) {
        r.state[s] = jst[k].state[s];
        r.provenance[s] = jst[k].provenance[s];
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace rcdst
