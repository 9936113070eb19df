#include <algorithm>

#include "doctest.h"
#include "rcdst/corpus.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/synthetic.hpp"
#include "rcdst/text.hpp"
#include "test_util.hpp"

using namespace rcdst;
using testutil::data;

namespace {

const Schema& multiwoz() {
  static const Schema s = load_schema(data("multiwoz/schema.json"));
  return s;
}

std::vector<Dialog> table1() { return load_corpus(data("examples/table1.json"), multiwoz()); }

// Every (start, end) whose tokens equal the value, by exhaustive scan.
std::vector<std::pair<std::size_t, std::size_t>> all_occurrences(const FlattenedDialog& flat,
                                                                 const std::string& value) {
  const auto needle = tokenize(value);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < flat.size(); ++s) {
    for (std::size_t e = s; e < flat.size(); ++e) {
      std::vector<std::string> piece(flat.tokens.begin() + s, flat.tokens.begin() + e + 1);
      if (piece == needle) out.emplace_back(s, e);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("schema has the 37 MultiWOZ slots") {
  CHECK(multiwoz().size() == 37);
  CHECK(multiwoz().index_of("bus.book.people").has_value());
  CHECK(multiwoz().slot(0).str() == "attraction.semi.area");
  CHECK_THROWS_AS(SlotId::parse("hotel.area"), DataError);
  CHECK_THROWS_AS(SlotId::parse("hotel..area"), DataError);
}

TEST_CASE("load_corpus reads the Table 1 conversation") {
  const auto corpus = table1();
  REQUIRE(corpus.size() == 1);
  const auto& d = corpus[0];
  CHECK(d.turns.size() == 3);
  CHECK_FALSE(d.turns[0].agent.has_value());
  const auto& s1 = d.turns[0].state;
  CHECK(s1[multiwoz().require("hotel.semi.area")] == Value("east"));
  CHECK(s1[multiwoz().require("hotel.semi.stars")] == Value("4"));
  CHECK(std::count_if(s1.begin(), s1.end(), [](const Value& v) { return v.has_value(); }) == 2);
  CHECK(d.turns[2].state[multiwoz().require("taxi.semi.destination")] == Value("allenbell"));
}

TEST_CASE("load_corpus edge cases") {
  CHECK(load_corpus(data("examples/empty.json"), multiwoz()).empty());
  try {
    load_corpus(data("examples/unknown_slot.json"), multiwoz());
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("hotel.semi.colour") != std::string::npos);
  }
  try {
    parse_corpus("{\"dialogs\": [\n{\"id\": \"a\",\n \"turns\": [}", multiwoz());
    FAIL("expected an error");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_corpus(R"({"dialogs": [{"id": "x", "turns": []}]})", multiwoz()), DataError);
  CHECK_THROWS_AS(
      parse_corpus(R"({"dialogs": [{"id": "x", "turns": [{"agent": "hi", "user": "u"}]}]})", multiwoz()),
      DataError);
}

TEST_CASE("flatten inserts markers in dialog order") {
  const auto d = table1()[0];
  const auto f1 = flatten(d, 1);
  const std::vector<std::string> head(f1.tokens.begin(), f1.tokens.begin() + 10);
  CHECK(head == std::vector<std::string>{"[U]", "i", "need", "to", "book", "a", "hotel", "in", "the", "east"});
  CHECK(std::count(f1.tokens.begin(), f1.tokens.end(), "[A]") == 0);

  const auto f2 = flatten(d, 2);
  const auto text = detokenize(f2.tokens);
  CHECK(text.find("[A] i can help you with that") != std::string::npos);
  CHECK(text.find("[U] that doesn't matter") != std::string::npos);
  CHECK(text.rfind("[U]") > text.find("[A]"));
  CHECK(f2.key() == "table1#2");

  CHECK_THROWS_AS(flatten(d, 0), std::out_of_range);
  CHECK_THROWS_AS(flatten(d, 4), std::out_of_range);

  Dialog single{"one", {Turn{std::nullopt, "hello there", empty_state(multiwoz())}}};
  const auto fs = flatten(single, 1);
  CHECK(std::count(fs.tokens.begin(), fs.tokens.end(), "[U]") == 1);
  CHECK(std::count(fs.tokens.begin(), fs.tokens.end(), "[A]") == 0);
  CHECK(fs.size() >= 2);
}

TEST_CASE("flattening grows monotonically") {
  const auto b = synthetic::generate(3, 20, 0);
  for (const auto& d : b.train) {
    for (std::size_t t = 1; t < d.turns.size(); ++t) {
      const auto a = flatten(d, t), c = flatten(d, t + 1);
      REQUIRE(a.size() < c.size());
      CHECK(std::equal(a.tokens.begin(), a.tokens.end(), c.tokens.begin()));
    }
  }
}

TEST_CASE("carryover and type labels") {
  const auto& s = multiwoz();
  const auto area = s.require("hotel.semi.area");
  auto prev = empty_state(s), cur = empty_state(s);
  cur[area] = "east";
  CHECK(derive_carryover_label(prev, cur, area) == CarryoverLabel::change);
  prev[area] = "east";
  CHECK(derive_carryover_label(prev, cur, area) == CarryoverLabel::keep);
  cur[area] = std::nullopt;
  CHECK(derive_carryover_label(prev, cur, area) == CarryoverLabel::change);

  CHECK(derive_type_label("dontcare") == SlotType::dontcare);
  CHECK(derive_type_label("don't care") == SlotType::dontcare);
  CHECK(derive_type_label("yes") == SlotType::yes);
  CHECK(derive_type_label("no") == SlotType::no);
  CHECK(derive_type_label("allenbell") == SlotType::span);
}

TEST_CASE("find_gold_span takes the last occurrence") {
  const auto d = table1()[0];
  const auto f1 = flatten(d, 1);
  const auto east = find_gold_span(f1, "east");
  REQUIRE(east);
  const auto occ = all_occurrences(f1, "east");
  REQUIRE(occ.size() == 1);
  CHECK(*east == occ[0]);

  CHECK_FALSE(find_gold_span(f1, "moderately-priced"));

  Dialog twice{"t", {Turn{std::nullopt, "east or east please", empty_state(multiwoz())}}};
  const auto ft = flatten(twice, 1);
  const auto all = all_occurrences(ft, "east");
  REQUIRE(all.size() == 2);
  CHECK(*find_gold_span(ft, "east") == *std::max_element(all.begin(), all.end()));

  const auto f3 = flatten(d, 3);
  const auto allen = find_gold_span(f3, "allenbell");
  REQUIRE(allen);
  CHECK(f3.origins[allen->first].speaker == Speaker::agent);
}

TEST_CASE("build_examples on Table 1") {
  const auto corpus = table1();
  const auto set = build_examples(corpus, multiwoz());
  CHECK(set.examples.size() == 111);
  const auto area = multiwoz().require("hotel.semi.area");
  const auto& ex = set.examples[area];  // turn 1
  CHECK(ex.t == 1);
  CHECK(ex.carryover == CarryoverLabel::change);
  CHECK(ex.type == SlotType::span);
  REQUIRE(ex.span);
  CHECK(flatten(corpus[0], 1).tokens[ex.span->first] == "east");

  // Turn 2 keeps area and stars.
  const auto& kept = set.examples[37 + area];
  CHECK(kept.carryover == CarryoverLabel::keep);
  CHECK_FALSE(kept.type);
  CHECK_FALSE(kept.span);
  const auto& internet = set.examples[37 + multiwoz().require("hotel.semi.internet")];
  CHECK(internet.type == SlotType::yes);
  CHECK_FALSE(internet.span);

  // Pure function of its inputs.
  const auto again = build_examples(corpus, multiwoz());
  REQUIRE(again.examples.size() == set.examples.size());
  for (std::size_t k = 0; k < set.examples.size(); ++k) {
    CHECK(again.examples[k].span == set.examples[k].span);
    CHECK(again.examples[k].type == set.examples[k].type);
  }
}

TEST_CASE("an unchanged turn yields only keep labels") {
  auto corpus = table1();
  auto& d = corpus[0];
  d.turns.push_back(Turn{"anything else?", "no thanks", d.turns.back().state});
  const auto set = build_examples(corpus, multiwoz());
  for (std::size_t s = 0; s < 37; ++s) {
    const auto& ex = set.examples[3 * 37 + s];
    CHECK(ex.carryover == CarryoverLabel::keep);
    CHECK_FALSE(ex.type);
  }
}

TEST_CASE("example invariants on the synthetic corpus") {
  const auto b = synthetic::generate(11, 30, 0);
  const auto set = build_examples(b.train, b.schema);
  CHECK(set.unanswerable == 0);
  for (const auto& ex : set.examples) {
    const auto& d = b.train[ex.dialog_index];
    const auto& gold = d.turns[ex.t - 1].state[ex.slot];
    CHECK(ex.type.has_value() == (ex.carryover == CarryoverLabel::change && gold.has_value()));
    CHECK(ex.span.has_value() == (ex.type == SlotType::span && ex.answerable));
    if (ex.t == 1) CHECK((ex.carryover == CarryoverLabel::change) == gold.has_value());
    if (ex.span) {
      const auto flat = flatten(d, ex.t);
      CHECK(ex.span->first <= ex.span->second);
      CHECK(ex.span->second < flat.size());
      CHECK(span_text_from_alignment(d, flat, ex.span->first, ex.span->second) == *gold);
    }
  }
}

TEST_CASE("unanswerable values are counted") {
  auto corpus = table1();
  corpus[0].turns[0].state[multiwoz().require("hotel.semi.pricerange")] = "moderately priced";
  const auto set = build_examples(corpus, multiwoz());
  CHECK(set.unanswerable == 1);
  const auto& ex = set.examples[multiwoz().require("hotel.semi.pricerange")];
  CHECK(ex.type == SlotType::span);
  CHECK_FALSE(ex.answerable);
  CHECK_FALSE(ex.span);
}

TEST_CASE("derivability coverage") {
  CHECK(derivability_coverage(table1(), multiwoz()) == doctest::Approx(1.0));
  auto corpus = table1();
  // Not in the context at turn 1, so turns 1..3 all carry an underivable value.
  for (auto& t : corpus[0].turns) t.state[multiwoz().require("hotel.semi.name")] = "acorn guest house";
  CHECK(derivability_coverage(corpus, multiwoz()) == doctest::Approx(0.0));
  const auto b = synthetic::generate(2019);
  CHECK(derivability_coverage(b.train, b.schema) == 1.0);
  CHECK(derivability_coverage(b.dev, b.schema) == 1.0);
}

TEST_CASE("corpus files round-trip") {
  const auto dir = testutil::temp_dir("corpus");
  const auto b = synthetic::generate(5, 4, 0);
  save_corpus(b.train, b.schema, dir / "c.json");
  save_schema(b.schema, dir / "s.json");
  save_ontology(b.ontology, dir / "o.json");
  const auto schema = load_schema(dir / "s.json");
  const auto back = load_corpus(dir / "c.json", schema);
  REQUIRE(back.size() == b.train.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    REQUIRE(back[i].turns.size() == b.train[i].turns.size());
    for (std::size_t k = 0; k < back[i].turns.size(); ++k) {
      CHECK(back[i].turns[k].state == b.train[i].turns[k].state);
      CHECK(back[i].turns[k].user == b.train[i].turns[k].user);
    }
  }
  const auto onto = load_ontology(dir / "o.json", schema);
  CHECK(onto.all() == b.ontology.all());
}
