#include "rcdst/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/text.hpp"

namespace rcdst {

AlignedTurns align(const std::vector<PredictionRecord>& predictions,
                   const std::vector<Dialog>& gold) {
  std::map<std::pair<std::string, std::size_t>, const PredictionRecord*> index;
  for (const auto& r : predictions) {
    if (!index.emplace(std::make_pair(r.dialog_id, r.turn), &r).second) {
      throw DataError("duplicate prediction for " + r.dialog_id + " turn " + std::to_string(r.turn));
    }
  }
  AlignedTurns out;
  for (const auto& d : gold) {
    for (std::size_t t = 1; t <= d.turns.size(); ++t) {
      const auto it = index.find({d.id, t});
      if (it == index.end()) {
        throw DataError("no prediction for " + d.id + " turn " + std::to_string(t));
      }
      if (it->second->state.size() != d.turns[t - 1].state.size()) {
        throw DataError("prediction state size mismatch for " + d.id);
      }
      out.predicted.push_back(it->second->state);
      out.gold.push_back(d.turns[t - 1].state);
      out.gold_previous.push_back(t == 1 ? DialogState(d.turns[0].state.size())
                                         : d.turns[t - 2].state);
      out.depth.push_back(t);
      out.dialogs.push_back(&d);
      out.records.push_back(it->second);
      index.erase(it);
    }
  }
  if (!index.empty()) {
    const auto& [key, _] = *index.begin();
    throw DataError("prediction for " + key.first + " turn " + std::to_string(key.second) +
                    " has no gold turn");
  }
  return out;
}

namespace {

void require_aligned(std::size_t a, std::size_t b) {
  if (a != b) throw DataError("misaligned turns: " + std::to_string(a) + " vs " + std::to_string(b));
}

bool contains_tokens(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

}  // namespace

double joint_goal_accuracy(std::span<const DialogState> predicted, std::span<const DialogState> gold) {
  require_aligned(predicted.size(), gold.size());
  if (gold.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    require_aligned(predicted[k].size(), gold[k].size());
    if (predicted[k] == gold[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

std::vector<double> per_slot_accuracy(std::span<const DialogState> predicted,
                                      std::span<const DialogState> gold) {
  require_aligned(predicted.size(), gold.size());
  if (gold.empty()) return {};
  const auto slots = gold.front().size();
  std::vector<std::size_t> correct(slots);
  for (std::size_t k = 0; k < gold.size(); ++k) {
    require_aligned(predicted[k].size(), slots);
    require_aligned(gold[k].size(), slots);
    for (std::size_t s = 0; s < slots; ++s) correct[s] += predicted[k][s] == gold[k][s];
  }
  std::vector<double> out(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    out[s] = static_cast<double>(correct[s]) / static_cast<double>(gold.size());
  }
  return out;
}

double carryover_turn_accuracy(const std::vector<std::vector<bool>>& decisions,
                               const std::vector<std::vector<bool>>& gold) {
  require_aligned(decisions.size(), gold.size());
  if (gold.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    require_aligned(decisions[k].size(), gold[k].size());
    if (decisions[k] == gold[k]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

std::vector<DepthRow> depth_breakdown(std::span<const DialogState> predicted,
                                      std::span<const DialogState> gold,
                                      std::span<const std::size_t> depths) {
  require_aligned(predicted.size(), gold.size());
  require_aligned(depths.size(), gold.size());
  std::map<std::size_t, DepthRow> rows;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    auto& row = rows[depths[k]];
    row.depth = depths[k];
    ++row.total;
    if (predicted[k] != gold[k]) ++row.incorrect;
  }
  std::vector<DepthRow> out;
  for (auto& [_, row] : rows) {
    row.percent_incorrect = 100.0 * static_cast<double>(row.incorrect) / static_cast<double>(row.total);
    out.push_back(row);
  }
  return out;
}

std::string_view to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::unanswerable_predicted_value: return "unanswerable_slot (predicted value, gold none)";
    case ErrorCategory::unanswerable_predicted_none: return "unanswerable_slot (predicted none, gold value)";
    case ErrorCategory::boundary: return "imprecise_slot_boundary";
    case ErrorCategory::resolution: return "imprecise_slot_resolution";
    case ErrorCategory::reference: return "imprecise_slot_reference";
  }
  return "?";
}

ErrorCategory categorize_error(const Value& predicted, const Value& gold,
                               const FlattenedDialog& context) {
  if (!gold && predicted) return ErrorCategory::unanswerable_predicted_value;
  if (gold && !predicted) return ErrorCategory::unanswerable_predicted_none;
  if (!gold && !predicted) throw std::invalid_argument("categorize_error: values are equal");
  const auto p = tokenize(*predicted);
  const auto g = tokenize(*gold);
  const bool gold_in_context = find_gold_span(context, *gold).has_value();
  const bool pred_in_context = find_gold_span(context, *predicted).has_value();
  if (gold_in_context && pred_in_context && (contains_tokens(p, g) || contains_tokens(g, p))) {
    return ErrorCategory::boundary;
  }
  if (!gold_in_context) return ErrorCategory::resolution;
  return ErrorCategory::reference;
}

double ErrorBreakdown::percent(ErrorCategory c) const {
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(counts[static_cast<std::size_t>(c)]) / static_cast<double>(total);
}

ErrorBreakdown categorize_errors(std::span<const DialogState> predicted,
                                 std::span<const DialogState> gold,
                                 std::span<const FlattenedDialog> contexts) {
  require_aligned(predicted.size(), gold.size());
  require_aligned(contexts.size(), gold.size());
  ErrorBreakdown out;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    require_aligned(predicted[k].size(), gold[k].size());
    for (std::size_t s = 0; s < gold[k].size(); ++s) {
      if (predicted[k][s] == gold[k][s]) continue;
      ++out.counts[static_cast<std::size_t>(categorize_error(predicted[k][s], gold[k][s], contexts[k]))];
      ++out.total;
    }
  }
  return out;
}

MetricsReport evaluate(const std::vector<PredictionRecord>& predictions,
                       const std::vector<Dialog>& gold, const Schema& schema) {
  const auto aligned = align(predictions, gold);
  MetricsReport r;
  r.turns = aligned.size();
  r.joint_goal_accuracy = joint_goal_accuracy(aligned.predicted, aligned.gold);
  const auto slot_acc = per_slot_accuracy(aligned.predicted, aligned.gold);
  for (std::size_t s = 0; s < slot_acc.size(); ++s) r.per_slot.emplace_back(schema.slot(s).str(), slot_acc[s]);
  r.depth = depth_breakdown(aligned.predicted, aligned.gold, aligned.depth);

  bool has_decisions = true;
  std::vector<std::vector<bool>> decisions, labels;
  for (std::size_t k = 0; k < aligned.size(); ++k) {
    const auto* rec = aligned.records[k];
    std::vector<bool> d(schema.size()), l(schema.size());
    for (std::size_t s = 0; s < schema.size(); ++s) {
      if (rec->provenance[s] == Provenance::jst) has_decisions = false;
      d[s] = rec->provenance[s] != Provenance::carried;
      l[s] = aligned.gold[k][s] != aligned.gold_previous[k][s];
    }
    decisions.push_back(std::move(d));
    labels.push_back(std::move(l));
  }
  if (has_decisions) r.carryover_turn_accuracy = carryover_turn_accuracy(decisions, labels);

  std::vector<FlattenedDialog> contexts;
  contexts.reserve(aligned.size());
  for (std::size_t k = 0; k < aligned.size(); ++k) {
    contexts.push_back(flatten(*aligned.dialogs[k], aligned.depth[k]));
  }
  r.errors = categorize_errors(aligned.predicted, aligned.gold, contexts);
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["turns"] = turns;
  j["joint_goal_accuracy"] = joint_goal_accuracy;
  j["per_slot_accuracy"] = nlohmann::ordered_json::object();
  for (const auto& [slot, acc] : per_slot) j["per_slot_accuracy"][slot] = acc;
  j["carryover_turn_accuracy"] =
      carryover_turn_accuracy ? nlohmann::ordered_json(*carryover_turn_accuracy) : nullptr;
  j["depth"] = nlohmann::ordered_json::array();
  for (const auto& row : depth) {
    j["depth"].push_back({{"depth", row.depth},
                          {"total_turns", row.total},
                          {"incorrect_turns", row.incorrect},
                          {"percent_incorrect", row.percent_incorrect}});
  }
  j["errors"] = {{"total", errors.total}};
  j["errors"]["categories"] = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < kErrorCategoryCount; ++c) {
    const auto cat = static_cast<ErrorCategory>(c);
    j["errors"]["categories"].push_back(
        {{"category", to_string(cat)}, {"count", errors.counts[c]}, {"percent", errors.percent(cat)}});
  }
  return j.dump(2) + "\n";
}

void MetricsReport::print(std::ostream& out) const {
  const auto flags = out.flags();
  out << std::fixed;
  out << "turns evaluated        " << turns << "\n";
  out << "joint goal accuracy    " << std::setprecision(2) << 100.0 * joint_goal_accuracy << "%\n";
  if (carryover_turn_accuracy) {
    out << "carryover accuracy     " << 100.0 * *carryover_turn_accuracy << "% per turn\n";
  }
  out << "\n" << std::left << std::setw(34) << "slot" << "accuracy\n";
  for (const auto& [slot, acc] : per_slot) {
    out << std::setw(34) << slot << std::setprecision(4) << acc << "\n";
  }
  out << "\n" << std::right << std::setw(6) << "depth" << std::setw(8) << "turns" << std::setw(12)
      << "% incorrect\n";
  for (const auto& row : depth) {
    out << std::setw(6) << row.depth << std::setw(8) << row.total << std::setw(11)
        << std::setprecision(2) << row.percent_incorrect << "\n";
  }
  out << "\n" << std::left << std::setw(50) << "error category" << std::right << std::setw(7)
      << "count" << std::setw(9) << "%\n";
  for (std::size_t c = 0; c < kErrorCategoryCount; ++c) {
    const auto cat = static_cast<ErrorCategory>(c);
    out << std::left << std::setw(50) << to_string(cat) << std::right << std::setw(7)
        << errors.counts[c] << std::setw(8) << std::setprecision(1) << errors.percent(cat) << "\n";
  }
  out << std::left << std::setw(50) << "total" << std::right << std::setw(7) << errors.total << "\n";
  out.flags(flags);
}

}  // namespace rcdst
