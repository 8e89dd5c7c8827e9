#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <random>
#include <string>
#include <vector>

#include <rrt/eval.hpp>

using namespace rrt;

namespace {

BenchmarkItem make_item(const std::string& id, Verdict gold,
                        Modality mod = Modality::Text,
                        std::optional<double> margin = std::nullopt) {
  BenchmarkItem item;
  item.item_id = id;
  item.modality = mod;
  item.gold_label = gold;
  item.margin = margin;
  return item;
}

// Independent Fleiss-kappa transcription working from the per-category count
// matrix rather than raw ratings; used as the oracle.
double kappa_oracle(const std::vector<std::array<size_t, 3>>& counts) {
  const size_t items = counts.size();
  size_t raters = 0;
  for (size_t j = 0; j < 3; ++j) raters += counts.front()[j];
  double p_bar = 0;
  std::array<double, 3> totals{};
  for (const auto& row : counts) {
    double s = 0;
    for (size_t j = 0; j < 3; ++j) {
      s += static_cast<double>(row[j] * row[j]);
      totals[j] += static_cast<double>(row[j]);
    }
    p_bar += (s - raters) / (raters * (raters - 1.0));
  }
  p_bar /= items;
  double p_e = 0;
  for (double t : totals) {
    const double p = t / (items * static_cast<double>(raters));
    p_e += p * p;
  }
  return (p_bar - p_e) / (1.0 - p_e);
}

}  // namespace

TEST_CASE("preference accuracy buckets") {
  std::vector<BenchmarkItem> items = {
      make_item("i1", Verdict::A, Modality::Image, 1.0),
      make_item("i2", Verdict::B, Modality::Image, 3.0),
      make_item("i3", Verdict::A, Modality::Audio, 2.0),
      make_item("i4", Verdict::B, Modality::Text),
  };
  std::map<std::string, Verdict> preds = {{"i1", Verdict::A},
                                          {"i2", Verdict::A},
                                          {"i3", Verdict::A},
                                          {"i4", Verdict::Equal}};
  const EvalReport rep = preference_accuracy(preds, items);
  CHECK(rep.overall.total == 4);
  CHECK(rep.overall.correct == 2.0);
  CHECK(rep.overall.pct() == 50.0);
  CHECK(rep.by_modality.at(Modality::Image).correct == 1.0);
  // Margin of exactly 2 lands in the hard bucket; unmargined items in neither.
  CHECK(rep.hard.total == 2);
  CHECK(rep.hard.correct == 2.0);
  CHECK(rep.easy.total == 1);
  CHECK(rep.easy.correct == 0.0);
}

TEST_CASE("preference accuracy: equal predictions and half credit") {
  std::vector<BenchmarkItem> items = {make_item("i1", Verdict::A),
                                      make_item("i2", Verdict::B)};
  std::map<std::string, Verdict> preds = {{"i1", Verdict::Equal},
                                          {"i2", Verdict::B}};
  CHECK(preference_accuracy(preds, items).overall.pct() == 50.0);
  CHECK(preference_accuracy(preds, items, true).overall.pct() == 75.0);
}

TEST_CASE("preference accuracy: missing prediction throws") {
  std::vector<BenchmarkItem> items = {make_item("i1", Verdict::A)};
  CHECK_THROWS_AS(preference_accuracy({}, items), std::invalid_argument);
}

TEST_CASE("relative improvement rounds half away from zero") {
  CHECK(relative_improvement(80.0, 90.0) == 12.5);
  CHECK(relative_improvement(90.0, 80.0) == -11.1);
  CHECK(relative_improvement(40.0, 40.1) == 0.3);   // 0.25 rounds up
  CHECK(relative_improvement(40.0, 39.9) == -0.3);  // -0.25 rounds away
  CHECK(relative_improvement(50.0, 50.0) == 0.0);
  CHECK_THROWS_AS(relative_improvement(0.0, 10.0), std::invalid_argument);
}

TEST_CASE("fleiss kappa closed-form fixtures") {
  SECTION("perfect agreement") {
    RatingMatrix m;
    m.ratings = {{Verdict::A, Verdict::A}, {Verdict::B, Verdict::B}};
    CHECK_THAT(fleiss_kappa(m), Catch::Matchers::WithinAbs(1.0, 1e-12));
  }
  SECTION("perfect disagreement with two raters") {
    RatingMatrix m;
    m.ratings = {{Verdict::A, Verdict::B}, {Verdict::B, Verdict::A}};
    CHECK_THAT(fleiss_kappa(m), Catch::Matchers::WithinAbs(-1.0, 1e-12));
  }
  SECTION("even 2-2 splits across four raters give -1/3") {
    RatingMatrix m;
    m.ratings = {{Verdict::A, Verdict::A, Verdict::B, Verdict::B},
                 {Verdict::A, Verdict::A, Verdict::B, Verdict::B}};
    CHECK_THAT(fleiss_kappa(m), Catch::Matchers::WithinAbs(-1.0 / 3.0, 1e-12));
  }
  SECTION("single-category saturation returns 1") {
    RatingMatrix m;
    m.ratings = {{Verdict::A, Verdict::A}, {Verdict::A, Verdict::A}};
    CHECK(fleiss_kappa(m) == 1.0);
  }
  SECTION("degenerate inputs throw") {
    CHECK_THROWS_AS(fleiss_kappa({}), std::invalid_argument);
    RatingMatrix one_rater;
    one_rater.ratings = {{Verdict::A}};
    CHECK_THROWS_AS(fleiss_kappa(one_rater), std::invalid_argument);
    RatingMatrix ragged;
    ragged.ratings = {{Verdict::A, Verdict::B}, {Verdict::A}};
    CHECK_THROWS_AS(fleiss_kappa(ragged), std::invalid_argument);
  }
}

TEST_CASE("fleiss kappa matches the count-matrix oracle on random data") {
  std::mt19937_64 rng(314159);
  for (int trial = 0; trial < 50; ++trial) {
    const size_t items = 300;
    const size_t raters = 2 + rng() % 5;
    RatingMatrix m;
    std::vector<std::array<size_t, 3>> counts;
    for (size_t i = 0; i < items; ++i) {
      std::vector<Verdict> row;
      std::array<size_t, 3> c{};
      for (size_t r = 0; r < raters; ++r) {
        const size_t v = rng() % 3;
        row.push_back(static_cast<Verdict>(v));
        ++c[v];
      }
      m.ratings.push_back(std::move(row));
      counts.push_back(c);
    }
    CHECK_THAT(fleiss_kappa(m),
               Catch::Matchers::WithinAbs(kappa_oracle(counts), 1e-9));
  }
}

TEST_CASE("majority vote: strict majority or Equal") {
  RatingMatrix m;
  m.ratings = {{Verdict::A, Verdict::A, Verdict::B, Verdict::Equal},
               {Verdict::A, Verdict::A, Verdict::B, Verdict::B},
               {Verdict::B, Verdict::B, Verdict::B, Verdict::A},
               {Verdict::Equal, Verdict::Equal, Verdict::A, Verdict::B}};
  const auto labels = majority_vote(m);
  CHECK(labels == std::vector<Verdict>{Verdict::A, Verdict::Equal, Verdict::B,
                                       Verdict::Equal});
}

TEST_CASE("rationale acceptance requires three of four raters") {
  RatingMatrix m;
  m.acceptance = {{true, true, true, false},
                  {true, true, false, false},
                  {true, true, true, true},
                  {false, false, false, false}};
  CHECK(rationale_acceptance(m) == 50.0);
  CHECK_THROWS_AS(rationale_acceptance({}), std::invalid_argument);
}

TEST_CASE("bon: clear winner by wins") {
  // Candidate 2 beats everyone under a score-ordered judge.
  const std::vector<double> quality = {0.1, 0.5, 0.9, 0.3};
  const auto judge = [&](size_t a, size_t b) {
    JudgeDecision d;
    d.verdict = quality[a] > quality[b] ? Verdict::A : Verdict::B;
    return d;
  };
  const BonResult r = bon_select(quality.size(), judge);
  CHECK(r.chosen == 2);
  CHECK(r.wins == std::vector<size_t>{0, 2, 3, 1});
  CHECK(r.log.size() == 6);  // C(4,2) single-orientation matches
}

TEST_CASE("bon: head-to-head breaks win ties") {
  // Fixed result table over unordered pairs; 1 and 2 both finish on two wins
  // and 1 won their direct match.
  const std::map<std::pair<size_t, size_t>, size_t> winner = {
      {{0, 1}, 1}, {{0, 2}, 2}, {{0, 3}, 0},
      {{1, 2}, 1}, {{1, 3}, 3}, {{2, 3}, 2}};
  const auto judge = [&](size_t a, size_t b) {
    JudgeDecision d;
    d.verdict = winner.at({a, b}) == a ? Verdict::A : Verdict::B;
    return d;
  };
  const BonResult r = bon_select(4, judge);
  REQUIRE(r.wins == std::vector<size_t>{1, 2, 2, 1});
  CHECK(r.chosen == 1);
}

TEST_CASE("bon: score margin then lowest index") {
  SECTION("all ties, margin decides") {
    const auto judge = [](size_t a, size_t b) {
      JudgeDecision d;
      d.verdict = Verdict::Equal;
      d.score_a = a == 1 ? 8.0 : 5.0;
      d.score_b = b == 1 ? 8.0 : 5.0;
      return d;
    };
    const BonResult r = bon_select(3, judge);
    CHECK(r.wins == std::vector<size_t>{0, 0, 0});
    CHECK(r.chosen == 1);  // highest accumulated score margin
  }
  SECTION("identical candidates fall back to the lowest index") {
    const auto judge = [](size_t, size_t) { return JudgeDecision{}; };
    CHECK(bon_select(4, judge).chosen == 0);
  }
}

TEST_CASE("bon: judge failure is logged as a drawn match") {
  const auto judge = [](size_t a, size_t b) -> JudgeDecision {
    if (a == 0 || b == 0) throw std::runtime_error("backend unavailable");
    JudgeDecision d;
    d.verdict = a < b ? Verdict::A : Verdict::B;
    return d;
  };
  const BonResult r = bon_select(3, judge);
  size_t failures = 0;
  for (const auto& match : r.log) {
    if (match.judge_failed) {
      ++failures;
      CHECK(match.result == Verdict::Equal);
    }
  }
  CHECK(failures == 2);   // matches (0,1) and (0,2)
  CHECK(r.chosen == 1);   // 1 beats 2 in the only decided match
}

TEST_CASE("bon: double orientation doubles the schedule") {
  const auto judge = [](size_t a, size_t b) {
    JudgeDecision d;
    d.verdict = a < b ? Verdict::A : Verdict::B;  // lower index always wins
    return d;
  };
  const BonResult r = bon_select(4, judge, true);
  CHECK(r.log.size() == 12);
  CHECK(r.chosen == 0);
  CHECK(r.wins[0] == 6);
  CHECK_THROWS_AS(bon_select(0, judge), std::invalid_argument);
}

TEST_CASE("answer normalization") {
  CHECK(normalize_answer("  Paris.  ") == "paris");
  CHECK(normalize_answer("PARIS!!") == "paris");
  CHECK(normalize_answer("B.") == "b");
  CHECK(normalize_answer("(b)") == "b");
  CHECK(normalize_answer("C: because of gravity") == "c");
  CHECK(normalize_answer("b") == "b");
  CHECK(normalize_answer("banana") == "banana");  // not an option letter
  CHECK(normalize_answer("the  answer\tis  42") == "the answer is 42");
}

TEST_CASE("self-consistency majority vote with earliest-index ties") {
  const auto r =
      self_consistency({"Paris.", "paris", "Lyon", "PARIS", "Lyon!"});
  CHECK(r.answer == "paris");
  CHECK(r.chosen == 0);

  // 2-2 tie: the answer seen first wins.
  const auto tie = self_consistency({"Lyon", "Paris", "paris", "lyon"});
  CHECK(tie.answer == "lyon");
  CHECK(tie.chosen == 0);

  CHECK_THROWS_AS(self_consistency({}), std::invalid_argument);
}

TEST_CASE("latency/gain aggregation") {
  const LatencyGainRow row = latency_gain_report(
      "bo4", {{100, 1.0}, {300, 3.0}}, {2.0, 4.0, 6.0});
  CHECK(row.label == "bo4");
  CHECK(row.mean_tokens == 200.0);
  CHECK(row.mean_seconds == 2.0);
  CHECK(row.mean_gain_pp == 4.0);
  CHECK_THROWS_AS(latency_gain_report("x", {}, {1.0}), std::invalid_argument);
}
