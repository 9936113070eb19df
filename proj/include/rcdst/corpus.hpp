#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace rcdst {

/// A slot rendered as "domain.category.name", e.g. "hotel.semi.area".
struct SlotId {
  std::string domain;
  std::string category;
  std::string name;

  static SlotId parse(std::string_view rendered);
  std::string str() const { return domain + "." + category + "." + name; }

  friend bool operator==(const SlotId&, const SlotId&) = default;
  friend auto operator<=>(const SlotId&, const SlotId&) = default;
};

/// Ordered slot inventory. Slot indices are positions in this list and are
/// used everywhere a state or a per-slot table is stored.
class Schema {
 public:
  Schema() = default;
  explicit Schema(std::vector<SlotId> slots);

  std::size_t size() const { return slots_.size(); }
  const SlotId& slot(std::size_t i) const { return slots_.at(i); }
  const std::vector<SlotId>& slots() const { return slots_; }
  std::optional<std::size_t> index_of(std::string_view rendered) const;
  std::size_t require(std::string_view rendered) const;

 private:
  std::vector<SlotId> slots_;
  std::unordered_map<std::string, std::size_t> index_;
};

Schema load_schema(const std::filesystem::path& path);
void save_schema(const Schema& schema, const std::filesystem::path& path);

/// Known values per slot, normalized, deduplicated and sorted.
class Ontology {
 public:
  Ontology() = default;
  explicit Ontology(std::map<std::string, std::vector<std::string>> values);

  const std::vector<std::string>* values(std::string_view slot) const;
  const std::map<std::string, std::vector<std::string>>& all() const { return values_; }

 private:
  std::map<std::string, std::vector<std::string>> values_;
};

Ontology load_ontology(const std::filesystem::path& path, const Schema& schema);
void save_ontology(const Ontology& ontology, const std::filesystem::path& path);

/// Value of a slot; std::nullopt is the None value.
using Value = std::optional<std::string>;
/// Total map from slot index to value, normalized.
using DialogState = std::vector<Value>;

struct Turn {
  std::optional<std::string> agent;
  std::string user;
  DialogState state;
};

struct Dialog {
  std::string id;
  std::vector<Turn> turns;
};

std::vector<Dialog> load_corpus(const std::filesystem::path& path, const Schema& schema);
std::vector<Dialog> parse_corpus(std::string_view json_text, const Schema& schema);
void save_corpus(const std::vector<Dialog>& dialogs, const Schema& schema,
                 const std::filesystem::path& path);

enum class Speaker { user, agent, marker };

inline constexpr std::string_view kUserMarker = "[U]";
inline constexpr std::string_view kAgentMarker = "[A]";

/// Where a flattened token came from. `turn` is 0-based; the byte range
/// indexes into that turn's user or agent utterance.
struct TokenOrigin {
  std::size_t turn = 0;
  Speaker speaker = Speaker::marker;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// The sub-dialog u_1, a_1, ..., u_t as one token sequence with [U]/[A]
/// markers in front of every utterance.
struct FlattenedDialog {
  std::string dialog_id;
  std::size_t t = 0;  // number of user turns included, 1-based
  std::vector<std::string> tokens;
  std::vector<TokenOrigin> origins;

  std::size_t size() const { return tokens.size(); }
  bool is_marker(std::size_t i) const { return origins[i].speaker == Speaker::marker; }
  std::string key() const { return embedding_key(dialog_id, t); }

  static std::string embedding_key(std::string_view dialog_id, std::size_t t);
};

FlattenedDialog flatten(const Dialog& dialog, std::size_t t);

/// Maps a token range back to the original utterance text and normalizes it.
std::string span_text_from_alignment(const Dialog& dialog, const FlattenedDialog& flat,
                                     std::size_t start, std::size_t end);

enum class CarryoverLabel { keep, change };
enum class SlotType { yes = 0, no = 1, dontcare = 2, span = 3 };
inline constexpr std::size_t kSlotTypeCount = 4;

std::string_view to_string(SlotType type);

DialogState empty_state(const Schema& schema);

CarryoverLabel derive_carryover_label(const DialogState& prev, const DialogState& cur,
                                      std::size_t slot);
SlotType derive_type_label(std::string_view value);

/// Last occurrence (by start index) of the value's token sequence.
std::optional<std::pair<std::size_t, std::size_t>> find_gold_span(const FlattenedDialog& flat,
                                                                  std::string_view value);

struct TrainingExample {
  std::size_t dialog_index = 0;
  std::string dialog_id;
  std::size_t t = 0;  // 1-based
  std::size_t slot = 0;
  CarryoverLabel carryover = CarryoverLabel::keep;
  std::optional<SlotType> type;
  std::optional<std::pair<std::size_t, std::size_t>> span;
  bool answerable = true;
};

struct ExampleSet {
  std::vector<TrainingExample> examples;
  std::size_t answerable = 0;
  std::size_t unanswerable = 0;
};

ExampleSet build_examples(const std::vector<Dialog>& corpus, const Schema& schema);

/// True when the slot value can be produced from the context: None, yes, no,
/// dontcare, or a value whose token sequence occurs in `flat`.
bool value_derivable(const Value& value, const FlattenedDialog& flat);

/// Fraction of turns whose full gold state the pipeline can reproduce when
/// every stage is replaced by ground truth. A value is judged against the
/// context of the turn where it was last set.
double derivability_coverage(const std::vector<Dialog>& corpus, const Schema& schema);

}  // namespace rcdst
