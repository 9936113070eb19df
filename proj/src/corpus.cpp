#include "rcdst/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/text.hpp"

namespace rcdst {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw DataError(std::string(what) + ": parse error at line " + std::to_string(line) + ": " +
                    e.what());
  }
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

}  // namespace

SlotId SlotId::parse(std::string_view rendered) {
  const auto a = rendered.find('.');
  const auto b = a == std::string_view::npos ? a : rendered.find('.', a + 1);
  if (a == std::string_view::npos || b == std::string_view::npos ||
      rendered.find('.', b + 1) != std::string_view::npos) {
    throw DataError("slot id must be domain.category.name: '" + std::string(rendered) + "'");
  }
  SlotId id{std::string(rendered.substr(0, a)), std::string(rendered.substr(a + 1, b - a - 1)),
            std::string(rendered.substr(b + 1))};
  if (id.domain.empty() || id.category.empty() || id.name.empty()) {
    throw DataError("slot id has an empty component: '" + std::string(rendered) + "'");
  }
  return id;
}

Schema::Schema(std::vector<SlotId> slots) : slots_(std::move(slots)) {
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (!index_.emplace(slots_[i].str(), i).second) {
      throw DataError("duplicate slot in schema: " + slots_[i].str());
    }
  }
}

std::optional<std::size_t> Schema::index_of(std::string_view rendered) const {
  const auto it = index_.find(std::string(rendered));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Schema::require(std::string_view rendered) const {
  if (auto i = index_of(rendered)) return *i;
  throw DataError("unknown slot id: " + std::string(rendered));
}

Schema load_schema(const std::filesystem::path& path) {
  const auto doc = parse_json(read_file(path), path.string());
  if (!doc.is_object() || !doc.contains("slots") || !doc["slots"].is_array()) {
    throw DataError(path.string() + ": expected {\"slots\": [...]}");
  }
  std::vector<SlotId> slots;
  for (const auto& s : doc["slots"]) {
    if (!s.is_string()) throw DataError(path.string() + ": slot entries must be strings");
    slots.push_back(SlotId::parse(s.get<std::string>()));
  }
  if (slots.empty()) throw DataError(path.string() + ": schema has no slots");
  return Schema(std::move(slots));
}

void save_schema(const Schema& schema, const std::filesystem::path& path) {
  json doc;
  doc["slots"] = json::array();
  for (const auto& s : schema.slots()) doc["slots"].push_back(s.str());
  write_file(path, doc.dump(2) + "\n");
}

Ontology::Ontology(std::map<std::string, std::vector<std::string>> values) {
  for (auto& [slot, list] : values) {
    std::set<std::string> uniq;
    for (const auto& v : list) {
      auto n = normalize_value(v);
      if (!n.empty()) uniq.insert(std::move(n));
    }
    values_[slot] = std::vector<std::string>(uniq.begin(), uniq.end());
  }
}

const std::vector<std::string>* Ontology::values(std::string_view slot) const {
  const auto it = values_.find(std::string(slot));
  return it == values_.end() ? nullptr : &it->second;
}

Ontology load_ontology(const std::filesystem::path& path, const Schema& schema) {
  const auto doc = parse_json(read_file(path), path.string());
  if (!doc.is_object()) throw DataError(path.string() + ": ontology must be an object");
  std::map<std::string, std::vector<std::string>> values;
  for (const auto& [slot, list] : doc.items()) {
    schema.require(slot);
    if (!list.is_array()) throw DataError(path.string() + ": values of " + slot + " not a list");
    for (const auto& v : list) values[slot].push_back(v.get<std::string>());
  }
  for (const auto& s : schema.slots()) values.try_emplace(s.str());
  return Ontology(std::move(values));
}

void save_ontology(const Ontology& ontology, const std::filesystem::path& path) {
  json doc = json::object();
  for (const auto& [slot, list] : ontology.all()) doc[slot] = list;
  write_file(path, doc.dump(2) + "\n");
}

std::vector<Dialog> parse_corpus(std::string_view json_text, const Schema& schema) {
  const auto doc = parse_json(json_text, "corpus");
  if (!doc.is_object() || !doc.contains("dialogs") || !doc["dialogs"].is_array()) {
    throw DataError("corpus: expected {\"dialogs\": [...]}");
  }
  std::vector<Dialog> out;
  std::set<std::string> seen;
  for (const auto& d : doc["dialogs"]) {
    Dialog dialog;
    dialog.id = d.at("id").get<std::string>();
    if (!seen.insert(dialog.id).second) throw DataError("corpus: duplicate dialog id " + dialog.id);
    const auto& turns = d.at("turns");
    if (!turns.is_array() || turns.empty()) {
      throw DataError("corpus: dialog " + dialog.id + " is empty");
    }
    for (const auto& t : turns) {
      Turn turn;
      if (t.contains("agent") && !t["agent"].is_null()) {
        turn.agent = t["agent"].get<std::string>();
      }
      turn.user = t.at("user").get<std::string>();
      turn.state = empty_state(schema);
      if (t.contains("state")) {
        for (const auto& [slot, v] : t["state"].items()) {
          const auto idx = schema.index_of(slot);
          if (!idx) {
            throw DataError("corpus: dialog " + dialog.id + " uses unknown slot id " + slot);
          }
          if (!v.is_null()) {
            auto n = normalize_value(v.get<std::string>());
            if (!n.empty()) turn.state[*idx] = std::move(n);
          }
        }
      }
      if (dialog.turns.empty() && turn.agent) {
        throw DataError("corpus: dialog " + dialog.id + " has an agent utterance in turn 1");
      }
      dialog.turns.push_back(std::move(turn));
    }
    out.push_back(std::move(dialog));
  }
  return out;
}

std::vector<Dialog> load_corpus(const std::filesystem::path& path, const Schema& schema) {
  try {
    return parse_corpus(read_file(path), schema);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_corpus(const std::vector<Dialog>& dialogs, const Schema& schema,
                 const std::filesystem::path& path) {
  json doc;
  doc["dialogs"] = json::array();
  for (const auto& d : dialogs) {
    json jd;
    jd["id"] = d.id;
    jd["turns"] = json::array();
    for (const auto& t : d.turns) {
      json jt;
      jt["agent"] = t.agent ? json(*t.agent) : json(nullptr);
      jt["user"] = t.user;
      jt["state"] = json::object();
      for (std::size_t s = 0; s < schema.size(); ++s) {
        if (t.state[s]) jt["state"][schema.slot(s).str()] = *t.state[s];
      }
      jd["turns"].push_back(std::move(jt));
    }
    doc["dialogs"].push_back(std::move(jd));
  }
  write_file(path, doc.dump(1) + "\n");
}

std::string FlattenedDialog::embedding_key(std::string_view dialog_id, std::size_t t) {
  return std::string(dialog_id) + "#" + std::to_string(t);
}

FlattenedDialog flatten(const Dialog& dialog, std::size_t t) {
  if (t < 1 || t > dialog.turns.size()) {
    throw std::out_of_range("flatten: turn " + std::to_string(t) + " out of range 1.." +
                            std::to_string(dialog.turns.size()) + " for dialog " + dialog.id);
  }
  FlattenedDialog flat;
  flat.dialog_id = dialog.id;
  flat.t = t;
  auto append = [&](std::string_view marker, std::string_view text, std::size_t turn,
                    Speaker speaker) {
    flat.tokens.emplace_back(marker);
    flat.origins.push_back({turn, Speaker::marker, 0, 0});
    for (auto& tok : tokenize_with_offsets(text)) {
      flat.tokens.push_back(std::move(tok.text));
      flat.origins.push_back({turn, speaker, tok.begin, tok.end});
    }
  };
  for (std::size_t k = 0; k < t; ++k) {
    const auto& turn = dialog.turns[k];
    if (turn.agent) append(kAgentMarker, *turn.agent, k, Speaker::agent);
    append(kUserMarker, turn.user, k, Speaker::user);
  }
  return flat;
}

std::string span_text_from_alignment(const Dialog& dialog, const FlattenedDialog& flat,
                                     std::size_t start, std::size_t end) {
  const auto& a = flat.origins.at(start);
  const auto& b = flat.origins.at(end);
  if (a.speaker == Speaker::marker || b.speaker == Speaker::marker || a.turn != b.turn ||
      a.speaker != b.speaker) {
    throw std::invalid_argument("span does not lie inside one utterance");
  }
  const auto& turn = dialog.turns.at(a.turn);
  const std::string& text = a.speaker == Speaker::user ? turn.user : *turn.agent;
  return normalize_value(std::string_view(text).substr(a.begin, b.end - a.begin));
}

std::string_view to_string(SlotType type) {
  switch (type) {
    case SlotType::yes: return "yes";
    case SlotType::no: return "no";
    case SlotType::dontcare: return "dontcare";
    case SlotType::span: return "span";
  }
  return "?";
}

DialogState empty_state(const Schema& schema) { return DialogState(schema.size()); }

CarryoverLabel derive_carryover_label(const DialogState& prev, const DialogState& cur,
                                      std::size_t slot) {
  return prev.at(slot) == cur.at(slot) ? CarryoverLabel::keep : CarryoverLabel::change;
}

SlotType derive_type_label(std::string_view value) {
  const auto n = normalize_value(value);
  if (n == "yes") return SlotType::yes;
  if (n == "no") return SlotType::no;
  if (n == kDontCare) return SlotType::dontcare;
  return SlotType::span;
}

std::optional<std::pair<std::size_t, std::size_t>> find_gold_span(const FlattenedDialog& flat,
                                                                  std::string_view value) {
  const auto needle = tokenize(value);
  if (needle.empty() || needle.size() > flat.tokens.size()) return std::nullopt;
  for (std::size_t s = flat.tokens.size() - needle.size() + 1; s-- > 0;) {
    bool hit = true;
    for (std::size_t k = 0; k < needle.size() && hit; ++k) {
      hit = !flat.is_marker(s + k) && flat.tokens[s + k] == needle[k];
    }
    if (hit) return std::make_pair(s, s + needle.size() - 1);
  }
  return std::nullopt;
}

ExampleSet build_examples(const std::vector<Dialog>& corpus, const Schema& schema) {
  ExampleSet set;
  const auto none = empty_state(schema);
  for (std::size_t di = 0; di < corpus.size(); ++di) {
    const auto& dialog = corpus[di];
    for (std::size_t k = 0; k < dialog.turns.size(); ++k) {
      const auto& prev = k == 0 ? none : dialog.turns[k - 1].state;
      const auto& cur = dialog.turns[k].state;
      std::optional<FlattenedDialog> flat;
      for (std::size_t s = 0; s < schema.size(); ++s) {
        TrainingExample ex;
        ex.dialog_index = di;
        ex.dialog_id = dialog.id;
        ex.t = k + 1;
        ex.slot = s;
        ex.carryover = derive_carryover_label(prev, cur, s);
        if (ex.carryover == CarryoverLabel::change && cur[s]) {
          ex.type = derive_type_label(*cur[s]);
          if (*ex.type == SlotType::span) {
            if (!flat) flat = flatten(dialog, k + 1);
            ex.span = find_gold_span(*flat, *cur[s]);
            ex.answerable = ex.span.has_value();
            ++(ex.answerable ? set.answerable : set.unanswerable);
          }
        }
        set.examples.push_back(std::move(ex));
      }
    }
  }
  return set;
}

bool value_derivable(const Value& value, const FlattenedDialog& flat) {
  if (!value) return true;
  if (derive_type_label(*value) != SlotType::span) return true;
  return find_gold_span(flat, *value).has_value();
}

double derivability_coverage(const std::vector<Dialog>& corpus, const Schema& schema) {
  std::size_t total = 0;
  std::size_t derivable = 0;
  for (const auto& dialog : corpus) {
    // Whether the value currently held by each slot was derivable when set.
    std::vector<bool> ok(schema.size(), true);
    DialogState prev = empty_state(schema);
    for (std::size_t k = 0; k < dialog.turns.size(); ++k) {
      const auto& cur = dialog.turns[k].state;
      std::optional<FlattenedDialog> flat;
      for (std::size_t s = 0; s < schema.size(); ++s) {
        if (prev[s] == cur[s]) continue;
        if (!flat) flat = flatten(dialog, k + 1);
        ok[s] = value_derivable(cur[s], *flat);
      }
      ++total;
      if (std::all_of(ok.begin(), ok.end(), [](bool b) { return b; })) ++derivable;
      prev = cur;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(derivable) / static_cast<double>(total);
}

}  // namespace rcdst
