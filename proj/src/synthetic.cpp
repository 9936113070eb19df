#include "rcdst/synthetic.hpp"

#include <array>
#include <map>
#include <set>
#include <string>

#include "rcdst/tensor.hpp"
#include "rcdst/text.hpp"

namespace rcdst::synthetic {

namespace {

enum Slot : std::size_t { kArea, kStars, kParking, kPrice, kFood, kPeople, kDest, kLeave, kSlots };

const std::array<const char*, kSlots> kSlotNames = {
    "hotel.semi.area",      "hotel.semi.stars",       "hotel.semi.parking",
    "hotel.semi.pricerange", "restaurant.semi.food",  "restaurant.book.people",
    "taxi.semi.destination", "taxi.semi.leaveAt"};

const std::vector<std::vector<std::string>> kValues = {
    {"east", "west", "north", "south", "centre"},
    {"2", "3", "4", "5"},
    {"yes", "no"},
    {"cheap", "moderate", "expensive", "dontcare"},
    {"italian", "chinese", "indian", "thai", "french", "british", "korean", "spanish", "turkish",
     "mexican"},
    {"1", "2", "3", "4", "5", "6", "7", "8"},
    {"allenbell", "kings college", "the junction", "nandos city centre", "castle galleries",
     "the cambridge belfry", "trinity college", "the gardenia", "saint johns chop house"},
    {"09:15", "10:30", "15:30", "17:45", "12:00", "08:00"},
};

const std::vector<std::vector<std::string>> kTemplates = {
    {"i need a hotel in the {v} .", "somewhere in the {v} please .", "the hotel should be in the {v} .",
     "i am looking for a place to stay in the {v} of town ."},
    {"it should have {v} stars .", "a {v} star hotel would be great ."},
    {},
    {"i want a {v} hotel .", "something in the {v} price range please ."},
    {"i would like {v} food .", "can you find a {v} restaurant ?",
     "we are hungry , could you suggest somewhere serving {v} cuisine ?"},
    {"a table for {v} people please .", "book it for {v} people ."},
    {"i also need a taxi to {v} .", "please get me a taxi going to {v} ."},
    {"i want to leave at {v} .", "the taxi should leave by {v} .",
     "pick me up after {v} if possible ."},
};

const std::vector<std::string> kParkingYes = {"it needs free parking .", "with parking please ."};
const std::vector<std::string> kParkingNo = {"i do not need parking .", "parking is not needed ."};
const std::vector<std::string> kPriceDontCare = {"the price does not matter .",
                                                 "i do not care about the price ."};
const std::vector<std::string> kAgentGeneric = {
    "i can help you with that . what else ?", "sure . do you have any other preference ?",
    "there are several options . anything else ?", "okay , what else can i do for you ?",
    "certainly . may i ask about your other requirements ?"};
const std::vector<std::string> kAgentAfterClose = {"you are welcome . anything else ?",
                                                   "glad to help . is there more ?"};
const std::vector<std::string> kNoChange = {"thank you , that is all for now .",
                                            "great , thanks ."};

// FNV-1a; std::hash is not stable across standard libraries.
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fill(const std::string& tmpl, const std::string& value) {
  std::string out = tmpl;
  const auto pos = out.find("{v}");
  if (pos != std::string::npos) out.replace(pos, 3, value);
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& items, Rng& rng) {
  return items[rng.below(items.size())];
}

std::string utterance_for(std::size_t slot, const std::string& value, Rng& rng) {
  if (slot == kParking) return pick(value == "yes" ? kParkingYes : kParkingNo, rng);
  if (slot == kPrice && value == "dontcare") return pick(kPriceDontCare, rng);
  return fill(pick(kTemplates[slot], rng), value);
}

Dialog make_dialog(const std::string& id, Rng& rng) {
  Dialog d;
  d.id = id;
  const std::size_t turns = 2 + rng.below(4);  // 2..5
  DialogState state(kSlots);
  std::optional<std::string> recommended;
  for (std::size_t k = 0; k < turns; ++k) {
    Turn turn;
    std::string user;
    if (k > 0) {
      if (!state[kDest] && rng.below(5) == 0) {
        recommended = pick(kValues[kDest], rng);
        turn.agent = "if you like , i recommend " + *recommended + " .";
      } else {
        turn.agent = pick(kAgentGeneric, rng);
      }
    }
    std::vector<std::size_t> unset;
    for (std::size_t s = 0; s < kSlots; ++s) {
      if (!state[s]) unset.push_back(s);
    }
    const auto roll = rng.below(10);
    if (k > 0 && roll == 0) {
      user = pick(kNoChange, rng);
    } else if (k > 0 && turn.agent && recommended && turn.agent->find(*recommended) != std::string::npos &&
               roll < 6) {
      user = "that sounds good . i need a taxi there too .";
      state[kDest] = *recommended;
    } else if (k > 0 && roll < 3) {
      // Correct an earlier value.
      std::vector<std::size_t> set;
      for (std::size_t s = 0; s < kSlots; ++s) {
        if (state[s] && s != kParking) set.push_back(s);
      }
      if (set.empty()) {
        user = pick(kNoChange, rng);
      } else {
        const auto s = pick(set, rng);
        std::string v;
        do {
          v = pick(kValues[s], rng);
        } while (v == *state[s]);
        user = "actually , " + utterance_for(s, v, rng);
        state[s] = v;
      }
    } else {
      const std::size_t n = std::min<std::size_t>(unset.size(), 1 + rng.below(2));
      for (std::size_t j = 0; j < n; ++j) {
        const auto at = rng.below(unset.size());
        const auto s = unset[at];
        unset.erase(unset.begin() + static_cast<std::ptrdiff_t>(at));
        const auto& v = pick(kValues[s], rng);
        if (!user.empty()) user += " ";
        user += utterance_for(s, v, rng);
        state[s] = v;
      }
      if (user.empty()) user = pick(kNoChange, rng);
    }
    turn.user = user;
    turn.state = state;
    d.turns.push_back(std::move(turn));
  }
  return d;
}

}  // namespace

Bundle generate(std::uint64_t seed, std::size_t train_dialogs, std::size_t dev_dialogs) {
  Bundle b;
  std::vector<SlotId> slots;
  for (const auto* name : kSlotNames) slots.push_back(SlotId::parse(name));
  b.schema = Schema(std::move(slots));
  std::map<std::string, std::vector<std::string>> onto;
  for (std::size_t s = 0; s < kSlots; ++s) onto[kSlotNames[s]] = kValues[s];
  b.ontology = Ontology(std::move(onto));
  Rng rng(seed);
  for (std::size_t i = 0; i < train_dialogs; ++i) {
    b.train.push_back(make_dialog("syn-train-" + std::to_string(i), rng));
  }
  for (std::size_t i = 0; i < dev_dialogs; ++i) {
    b.dev.push_back(make_dialog("syn-dev-" + std::to_string(i), rng));
  }
  return b;
}

EmbeddingStore contextual_embeddings(const std::vector<Dialog>& dialogs, const Schema& schema,
                                     const Ontology& ontology, std::uint64_t seed) {
  constexpr std::size_t kIdentity = 16;
  const std::size_t slots = schema.size();
  const std::size_t dim = kIdentity + 2 * slots + 3 + 2 + 1;

  std::vector<std::set<std::string>> lexicon(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    if (const auto* values = ontology.values(schema.slot(s).str())) {
      for (const auto& v : *values) {
        for (auto& tok : tokenize(v)) lexicon[s].insert(tok);
      }
    }
  }

  std::map<std::string, RowVector> identity;
  auto code = [&](const std::string& token) -> const RowVector& {
    auto it = identity.find(token);
    if (it == identity.end()) {
      Rng rng(seed ^ fnv1a(token));
      RowVector v(kIdentity);
      for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = rng.uniform(-1.0, 1.0);
      it = identity.emplace(token, std::move(v)).first;
    }
    return it->second;
  };

  EmbeddingStore store(dim);
  for (const auto& d : dialogs) {
    for (std::size_t t = 1; t <= d.turns.size(); ++t) {
      const auto flat = flatten(d, t);
      Matrix rows = Matrix::Zero(static_cast<Eigen::Index>(flat.size()), static_cast<Eigen::Index>(dim));
      // Per utterance, which slots have a lexicon token anywhere in it.
      std::vector<std::vector<bool>> mentions;
      for (std::size_t i = 0; i < flat.size(); ++i) {
        if (flat.is_marker(i)) mentions.emplace_back(slots, false);
        for (std::size_t s = 0; s < slots; ++s) {
          if (lexicon[s].count(flat.tokens[i])) mentions.back()[s] = true;
        }
      }
      // Token offsets of each utterance for the position feature.
      std::size_t utter_start = 0;
      std::size_t utterance = 0;
      for (std::size_t i = 0; i < flat.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const auto& origin = flat.origins[i];
        if (flat.is_marker(i) && i > 0) ++utterance;
        if (flat.is_marker(i)) utter_start = i;
        rows.block(row, 0, 1, kIdentity) = code(flat.tokens[i]);
        for (std::size_t s = 0; s < slots; ++s) {
          if (lexicon[s].count(flat.tokens[i])) rows(row, static_cast<Eigen::Index>(kIdentity + s)) = 1.0;
        }
        for (std::size_t s = 0; s < slots; ++s) {
          if (mentions[utterance][s]) rows(row, static_cast<Eigen::Index>(kIdentity + slots + s)) = 1.0;
        }
        const auto base = static_cast<Eigen::Index>(kIdentity + 2 * slots);
        rows(row, base + static_cast<int>(origin.speaker)) = 1.0;
        const bool last_user = origin.turn + 1 == t && origin.speaker != Speaker::agent;
        rows(row, base + 3) = last_user ? 1.0 : 0.0;
        rows(row, base + 4) = 1.0 / static_cast<double>(t - origin.turn);
        rows(row, base + 5) = 0.1 * static_cast<double>(i - utter_start);
      }
      store.add(flat.key(), std::move(rows));
    }
  }
  return store;
}

}  // namespace rcdst::synthetic
