#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rcdst/corpus.hpp"
#include "rcdst/predictions.hpp"

namespace rcdst {

/// Predicted and gold states of the same turns, in corpus order.
struct AlignedTurns {
  std::vector<DialogState> predicted;
  std::vector<DialogState> gold;
  std::vector<DialogState> gold_previous;
  std::vector<std::size_t> depth;  // 1-based turn index
  std::vector<const Dialog*> dialogs;
  std::vector<const PredictionRecord*> records;

  std::size_t size() const { return gold.size(); }
};

/// Matches every gold turn to exactly one prediction record.
AlignedTurns align(const std::vector<PredictionRecord>& predictions,
                   const std::vector<Dialog>& gold);

double joint_goal_accuracy(std::span<const DialogState> predicted, std::span<const DialogState> gold);

std::vector<double> per_slot_accuracy(std::span<const DialogState> predicted,
                                      std::span<const DialogState> gold);

/// A turn counts as correct when every keep/change decision matches.
double carryover_turn_accuracy(const std::vector<std::vector<bool>>& decisions,
                               const std::vector<std::vector<bool>>& gold);

struct DepthRow {
  std::size_t depth = 0;
  std::size_t total = 0;
  std::size_t incorrect = 0;
  double percent_incorrect = 0.0;
};

std::vector<DepthRow> depth_breakdown(std::span<const DialogState> predicted,
                                      std::span<const DialogState> gold,
                                      std::span<const std::size_t> depths);

enum class ErrorCategory {
  unanswerable_predicted_value,  // gold None, prediction has a value
  unanswerable_predicted_none,   // gold has a value, prediction None
  boundary,
  resolution,
  reference,
};
inline constexpr std::size_t kErrorCategoryCount = 5;

std::string_view to_string(ErrorCategory c);

/// Category of one wrong (turn, slot), first matching rule wins:
/// exactly one side None -> unanswerable; one value's tokens strictly contain
/// the other's and both occur in the context -> boundary; gold absent from
/// the context -> resolution; anything else -> reference.
ErrorCategory categorize_error(const Value& predicted, const Value& gold,
                               const FlattenedDialog& context);

struct ErrorBreakdown {
  std::array<std::size_t, kErrorCategoryCount> counts{};
  std::size_t total = 0;

  double percent(ErrorCategory c) const;
};

ErrorBreakdown categorize_errors(std::span<const DialogState> predicted,
                                 std::span<const DialogState> gold,
                                 std::span<const FlattenedDialog> contexts);

struct MetricsReport {
  std::size_t turns = 0;
  double joint_goal_accuracy = 0.0;
  std::vector<std::pair<std::string, double>> per_slot;
  std::optional<double> carryover_turn_accuracy;
  std::vector<DepthRow> depth;
  ErrorBreakdown errors;

  std::string to_json() const;
  void print(std::ostream& out) const;
};

/// Runs every metric. Carryover accuracy is reported only when each slot's
/// provenance records a carryover decision (not for JST output).
MetricsReport evaluate(const std::vector<PredictionRecord>& predictions,
                       const std::vector<Dialog>& gold, const Schema& schema);

}  // namespace rcdst
