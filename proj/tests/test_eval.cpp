#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "rcdst/errors.hpp"
#include "rcdst/eval.hpp"
#include "test_util.hpp"

using namespace rcdst;

namespace {

Dialog one_turn(std::string user) {
  return Dialog{"ctx", {Turn{std::nullopt, std::move(user), DialogState(1)}}};
}

FlattenedDialog context(const std::string& agent, const std::string& user) {
  const Dialog d{"ctx", {Turn{std::nullopt, "hello", DialogState(1)}, Turn{agent, user, DialogState(1)}}};
  return flatten(d, 2);
}

struct RandomSet {
  std::vector<DialogState> pred, gold;
  std::vector<std::size_t> depth;
};

RandomSet random_set(Rng& rng) {
  RandomSet r;
  const auto n = 1 + rng.below(40);
  const auto slots = 1 + rng.below(6);
  const std::vector<std::string> pool{"a", "b", "c"};
  auto draw = [&]() -> Value {
    const auto k = rng.below(4);
    return k == 3 ? Value{} : Value{pool[k]};
  };
  for (std::size_t k = 0; k < n; ++k) {
    DialogState g(slots), p(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      g[s] = draw();
      p[s] = rng.below(3) ? g[s] : draw();
    }
    r.gold.push_back(g);
    r.pred.push_back(p);
    r.depth.push_back(1 + rng.below(5));
  }
  return r;
}

}  // namespace

TEST_CASE("metrics agree with a naive recount") {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = random_set(rng);
    const auto n = r.gold.size(), slots = r.gold[0].size();
    std::size_t joint = 0;
    std::vector<std::size_t> per(slots);
    for (std::size_t k = 0; k < n; ++k) {
      bool all = true;
      for (std::size_t s = 0; s < slots; ++s) {
        const bool ok = r.pred[k][s] == r.gold[k][s];
        all = all && ok;
        per[s] += ok;
      }
      joint += all;
    }
    CHECK(joint_goal_accuracy(r.pred, r.gold) == static_cast<double>(joint) / static_cast<double>(n));
    const auto acc = per_slot_accuracy(r.pred, r.gold);
    for (std::size_t s = 0; s < slots; ++s) {
      CHECK(acc[s] == static_cast<double>(per[s]) / static_cast<double>(n));
    }

    std::vector<std::vector<bool>> dec, lab;
    std::size_t turn_ok = 0;
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<bool> d(slots), l(slots);
      bool all = true;
      for (std::size_t s = 0; s < slots; ++s) {
        d[s] = rng.below(2);
        l[s] = rng.below(4) ? d[s] : !d[s];
        all = all && d[s] == l[s];
      }
      turn_ok += all;
      dec.push_back(d);
      lab.push_back(l);
    }
    CHECK(carryover_turn_accuracy(dec, lab) == static_cast<double>(turn_ok) / static_cast<double>(n));

    const auto rows = depth_breakdown(r.pred, r.gold, r.depth);
    std::size_t total = 0, wrong = 0;
    for (const auto& row : rows) {
      total += row.total;
      wrong += row.incorrect;
      std::size_t expect_total = 0, expect_wrong = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (r.depth[k] != row.depth) continue;
        ++expect_total;
        expect_wrong += r.pred[k] != r.gold[k];
      }
      CHECK(row.total == expect_total);
      CHECK(row.incorrect == expect_wrong);
    }
    CHECK(total == n);
    CHECK(wrong == n - joint);
  }
}

TEST_CASE("metric edge cases") {
  const std::vector<DialogState> none;
  CHECK(joint_goal_accuracy(none, none) == 0.0);
  const std::vector<DialogState> a{DialogState{Value("x")}}, b{DialogState{Value("x")}, DialogState{}};
  CHECK_THROWS_AS(joint_goal_accuracy(a, b), DataError);
}

TEST_CASE("error categories on the worked examples") {
  CHECK(categorize_error("east", std::nullopt, context("hi", "east")) ==
        ErrorCategory::unanswerable_predicted_value);
  CHECK(categorize_error(std::nullopt, "east", context("hi", "east")) ==
        ErrorCategory::unanswerable_predicted_none);
  CHECK(categorize_error("4", "8",
                         context("booking was unsuccessful",
                                 "3 nights , and 4 people . monday for 1 night with 8 people")) ==
        ErrorCategory::reference);
  CHECK(categorize_error("3:30", "15:30",
                         context("you like to arrive at the cinema?", "i want to leave the hotel by 3:30")) ==
        ErrorCategory::resolution);
  CHECK(categorize_error("nandos city centre", "nandos",
                         context("number is 01223902168",
                                 "great i am also looking for a restaurant called nandos city centre")) ==
        ErrorCategory::boundary);
  // Character containment without token containment is not a boundary error.
  CHECK(categorize_error("east", "eastern", context("hi", "east or eastern")) == ErrorCategory::reference);
}

TEST_CASE("error categories partition the wrong slots") {
  Rng rng(13);
  const std::vector<std::string> values{"east", "west", "north", "east side", "centre"};
  std::vector<Dialog> dialogs;
  std::vector<FlattenedDialog> contexts;
  std::vector<DialogState> pred, gold;
  for (int k = 0; k < 200; ++k) {
    dialogs.push_back(one_turn("i want the " + values[rng.below(values.size())] + " or " +
                               values[rng.below(values.size())]));
  }
  for (const auto& d : dialogs) {
    contexts.push_back(flatten(d, 1));
    DialogState p(3), g(3);
    for (std::size_t s = 0; s < 3; ++s) {
      if (rng.below(5)) p[s] = values[rng.below(values.size())];
      if (rng.below(5)) g[s] = values[rng.below(values.size())];
    }
    pred.push_back(p);
    gold.push_back(g);
  }
  const auto br = categorize_errors(pred, gold, contexts);
  std::size_t wrong = 0;
  for (std::size_t k = 0; k < pred.size(); ++k)
    for (std::size_t s = 0; s < 3; ++s) wrong += pred[k][s] != gold[k][s];
  std::size_t sum = 0;
  double pct = 0.0;
  for (std::size_t c = 0; c < kErrorCategoryCount; ++c) {
    sum += br.counts[c];
    pct += br.percent(static_cast<ErrorCategory>(c));
  }
  CHECK(br.total == wrong);
  CHECK(sum == wrong);
  CHECK(pct == doctest::Approx(100.0));
  for (std::size_t c = 0; c < kErrorCategoryCount; ++c) CHECK(br.counts[c] > 0);
}

TEST_CASE("alignment catches missing, duplicate and extra predictions") {
  const Schema schema({SlotId::parse("hotel.semi.area")});
  const std::vector<Dialog> gold{
      Dialog{"a", {Turn{std::nullopt, "x", {Value("east")}}, Turn{"y", "z", {Value("east")}}}}};
  std::vector<PredictionRecord> preds{{"a", 2, {Value("east")}, {Provenance::carried}},
                                      {"a", 1, {Value("east")}, {Provenance::span}}};
  const auto r = evaluate(preds, gold, schema);
  CHECK(r.joint_goal_accuracy == 1.0);
  REQUIRE(r.carryover_turn_accuracy);
  CHECK(*r.carryover_turn_accuracy == 1.0);

  auto missing = preds;
  missing.pop_back();
  CHECK_THROWS_AS(evaluate(missing, gold, schema), DataError);
  auto dup = preds;
  dup.push_back(preds[0]);
  CHECK_THROWS_AS(evaluate(dup, gold, schema), DataError);
  auto extra = preds;
  extra.push_back({"b", 1, {Value("east")}, {Provenance::span}});
  CHECK_THROWS_AS(evaluate(extra, gold, schema), DataError);

  auto jst = preds;
  for (auto& p : jst) p.provenance = {Provenance::jst};
  CHECK_FALSE(evaluate(jst, gold, schema).carryover_turn_accuracy);
}

TEST_CASE("metrics report renders as JSON and text") {
  const Schema schema({SlotId::parse("hotel.semi.area"), SlotId::parse("hotel.semi.stars")});
  const std::vector<Dialog> gold{Dialog{
      "a",
      {Turn{std::nullopt, "east please", {Value("east"), std::nullopt}},
       Turn{"ok", "4 stars", {Value("east"), Value("4")}}}}};
  const std::vector<PredictionRecord> preds{
      {"a", 1, {Value("east"), std::nullopt}, {Provenance::span, Provenance::carried}},
      {"a", 2, {Value("east"), std::nullopt}, {Provenance::carried, Provenance::carried}}};
  const auto r = evaluate(preds, gold, schema);
  CHECK(r.joint_goal_accuracy == 0.5);
  CHECK(*r.carryover_turn_accuracy == 0.5);
  CHECK(r.errors.total == 1);
  CHECK(r.errors.counts[static_cast<std::size_t>(ErrorCategory::unanswerable_predicted_none)] == 1);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["joint_goal_accuracy"] == 0.5);
  CHECK(j["per_slot_accuracy"]["hotel.semi.stars"] == 0.5);
  CHECK(j["depth"].size() == 2);
  std::ostringstream text;
  r.print(text);
  CHECK(text.str().find("50.00%") != std::string::npos);
  CHECK(r.to_json() == evaluate(preds, gold, schema).to_json());
}
