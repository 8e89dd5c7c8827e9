#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include <rrt/pipeline.hpp>

using namespace rrt;

namespace {

RubricRecord make_record(int a, int b, Verdict better,
                         const std::string& text = "A is more helpful than B.") {
  RubricRecord rec;
  rec.score_a = a;
  rec.score_b = b;
  rec.better = better;
  rec.final_verdict = better;
  for (Dimension d : kAllDimensions) rec.rationale[d] = text;
  return rec;
}

TeacherAnnotation annotate(const std::string& teacher, const std::string& pair,
                           const RubricRecord& rec) {
  return make_annotation(teacher, pair, serialize(rec));
}

CandidatePair make_pair(const std::string& id = "p1") {
  CandidatePair p;
  p.pair_id = id;
  p.modality = Modality::Text;
  p.question = "Which city is the capital of France?";
  p.response_a = "Paris is the capital of France, on the Seine.";
  p.response_b = "It might be Lyon, or possibly Paris.";
  p.generator_a = "strong-gen";
  p.generator_b = "weak-gen";
  return p;
}

}  // namespace

TEST_CASE("reconcile: agreement with close scores is Case I") {
  const auto pair = make_pair();
  const auto t1 = annotate("t1", "p1", make_record(8, 6, Verdict::A));
  const auto t2 = annotate("t2", "p1", make_record(7, 6, Verdict::A));
  const auto out = reconcile(pair, t1, t2, 11);
  REQUIRE(std::holds_alternative<ReconciledSample>(out));
  const auto& s = std::get<ReconciledSample>(out);
  CHECK(s.reconcile_case == ReconcileCase::I);
  CHECK(s.final_score_a == 7.5);
  CHECK(s.final_score_b == 6.0);
  CHECK(s.winner == Verdict::A);
  CHECK(s.margin == 1.5);
  // Case I keeps one rationale verbatim, no teacher labels.
  CHECK(s.merged_rationale.at(Dimension::Fluency).find("[t1]") ==
        std::string::npos);
}

TEST_CASE("reconcile: score gap beyond tau per candidate is Case II") {
  const auto pair = make_pair();
  const auto t1 = annotate("t1", "p1", make_record(9, 4, Verdict::A));
  const auto t2 = annotate("t2", "p1", make_record(6, 4, Verdict::A));
  const auto out = reconcile(pair, t1, t2, 11);
  REQUIRE(std::holds_alternative<ReconciledSample>(out));
  const auto& s = std::get<ReconciledSample>(out);
  CHECK(s.reconcile_case == ReconcileCase::II);
  CHECK(s.final_score_a == 7.5);
  const std::string& merged = s.merged_rationale.at(Dimension::Fluency);
  CHECK(merged.find("[t1]") != std::string::npos);
  CHECK(merged.find(" | [t2]") != std::string::npos);
}

TEST_CASE("reconcile: tau boundary is inclusive") {
  const auto pair = make_pair();
  // Difference of exactly 1 on one candidate stays Case I under tau = 1.
  auto out = reconcile(pair, annotate("t1", "p1", make_record(8, 6, Verdict::A)),
                       annotate("t2", "p1", make_record(7, 6, Verdict::A)), 3);
  CHECK(std::get<ReconciledSample>(out).reconcile_case == ReconcileCase::I);
  // Difference of 2 crosses it.
  out = reconcile(pair, annotate("t1", "p1", make_record(8, 6, Verdict::A)),
                  annotate("t2", "p1", make_record(6, 6, Verdict::A)), 3);
  CHECK(std::get<ReconciledSample>(out).reconcile_case == ReconcileCase::II);
}

TEST_CASE("reconcile: verdict conflict and ties are discarded") {
  const auto pair = make_pair();
  auto out = reconcile(pair, annotate("t1", "p1", make_record(8, 6, Verdict::A)),
                       annotate("t2", "p1", make_record(4, 6, Verdict::B)), 1);
  REQUIRE(std::holds_alternative<Discarded>(out));
  CHECK(std::get<Discarded>(out).reason == DiscardReason::VerdictConflict);

  RubricRecord tie = make_record(6, 6, Verdict::Equal);
  out = reconcile(pair, annotate("t1", "p1", tie),
                  annotate("t2", "p1", make_record(8, 6, Verdict::A)), 1);
  REQUIRE(std::holds_alternative<Discarded>(out));
  CHECK(std::get<Discarded>(out).reason == DiscardReason::Tie);
}

TEST_CASE("reconcile: unparseable annotation is discarded as malformed") {
  const auto pair = make_pair();
  const auto good = annotate("t1", "p1", make_record(8, 6, Verdict::A));
  const auto bad = make_annotation("t2", "p1", "total garbage");
  const auto out = reconcile(pair, good, bad, 1);
  REQUIRE(std::holds_alternative<Discarded>(out));
  CHECK(std::get<Discarded>(out).reason == DiscardReason::MalformedAnnotation);
}

TEST_CASE("reconcile: pair-id mismatch throws") {
  const auto pair = make_pair("p1");
  const auto t1 = annotate("t1", "p2", make_record(8, 6, Verdict::A));
  const auto t2 = annotate("t2", "p1", make_record(8, 6, Verdict::A));
  CHECK_THROWS_AS(reconcile(pair, t1, t2, 1), std::invalid_argument);
}

TEST_CASE("reconcile: Case I rationale choice prefers coverage then findings") {
  const auto pair = make_pair();
  RubricRecord sparse = make_record(8, 6, Verdict::A, "t1 text");
  sparse.rationale.erase(Dimension::Safety);
  RubricRecord full = make_record(8, 6, Verdict::A, "t2 text");
  const auto out = reconcile(pair, annotate("t1", "p1", sparse),
                             annotate("t2", "p1", full), 9);
  const auto& s = std::get<ReconciledSample>(out);
  CHECK(s.merged_rationale.at(Dimension::Fluency) == "t2 text");
}

TEST_CASE("reconcile: seeded coin flip is deterministic") {
  const auto pair = make_pair();
  const auto t1 = annotate("t1", "p1", make_record(8, 6, Verdict::A, "one"));
  const auto t2 = annotate("t2", "p1", make_record(8, 6, Verdict::A, "two"));
  const auto a = reconcile(pair, t1, t2, 77);
  const auto b = reconcile(pair, t1, t2, 77);
  CHECK(std::get<ReconciledSample>(a).merged_rationale ==
        std::get<ReconciledSample>(b).merged_rationale);
  // Both teachers are reachable across seeds.
  bool saw_one = false, saw_two = false;
  for (uint64_t seed = 0; seed < 64; ++seed) {
    const auto& text = std::get<ReconciledSample>(reconcile(pair, t1, t2, seed))
                           .merged_rationale.at(Dimension::Fluency);
    (text == "one" ? saw_one : saw_two) = true;
  }
  CHECK(saw_one);
  CHECK(saw_two);
}

TEST_CASE("reconcile: Case II respects the per-teacher character budget") {
  const auto pair = make_pair();
  PipelineConfig cfg;
  cfg.merge_char_budget = 10;
  const std::string longtext(50, 'x');
  const auto out =
      reconcile(pair, annotate("t1", "p1", make_record(9, 4, Verdict::A, longtext)),
                annotate("t2", "p1", make_record(6, 4, Verdict::A, longtext)), 1,
                cfg);
  const auto& merged =
      std::get<ReconciledSample>(out).merged_rationale.at(Dimension::Safety);
  CHECK(merged == "[t1] " + longtext.substr(0, 10) + " | [t2] " +
                      longtext.substr(0, 10));
}

TEST_CASE("filters: clean sample passes") {
  ReconciledSample s;
  s.final_score_a = 8;
  s.final_score_b = 6;
  s.winner = Verdict::A;
  for (Dimension d : kAllDimensions)
    s.merged_rationale[d] = "A is more precise than B.";
  const auto res = apply_filters(s, make_pair());
  CHECK(res.keep);
  CHECK(res.triggered.empty());
}

TEST_CASE("filters: R1 duplicates, exact and near") {
  ReconciledSample s;
  s.final_score_a = 8;
  s.final_score_b = 6;
  s.winner = Verdict::A;
  for (Dimension d : kAllDimensions) s.merged_rationale[d] = "ok both A B";

  auto pair = make_pair();
  pair.response_b = "  " + pair.response_a + " ";
  CHECK(apply_filters(s, pair).first() == FilterRule::R1);

  // Near-duplicate: identical token multiset bar one word.
  pair = make_pair();
  pair.response_a =
      "one two three four five six seven eight nine ten eleven twelve "
      "thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty";
  pair.response_b = pair.response_a + " extra";
  CHECK(apply_filters(s, pair).first() == FilterRule::R1);
}

TEST_CASE("filters: R2 empty and refusal responses") {
  ReconciledSample s;
  s.final_score_a = 8;
  s.final_score_b = 6;
  s.winner = Verdict::A;
  for (Dimension d : kAllDimensions) s.merged_rationale[d] = "fine for both A B";

  auto pair = make_pair();
  pair.response_b = "   ";
  auto res = apply_filters(s, pair);
  CHECK_FALSE(res.keep);
  CHECK(std::count(res.triggered.begin(), res.triggered.end(), FilterRule::R2) ==
        1);

  pair = make_pair();
  pair.response_b = "I'm sorry, but I can't help with that request.";
  CHECK_FALSE(apply_filters(s, pair).keep);
  // Refusal phrases are anchored at the start, not matched mid-sentence.
  pair = make_pair();
  pair.response_b = "The librarian said I cannot borrow more than five books.";
  CHECK(apply_filters(s, pair).keep);
}

TEST_CASE("filters: R3 requires strictly supportive score ordering") {
  auto pair = make_pair();
  ReconciledSample s;
  s.winner = Verdict::A;
  for (Dimension d : kAllDimensions)
    s.merged_rationale[d] = "A is better than B.";

  s.final_score_a = 6;
  s.final_score_b = 6;  // equality counts against the winner
  CHECK(apply_filters(s, pair).first() == FilterRule::R3);

  s.final_score_a = 5.5;
  s.final_score_b = 6;
  CHECK(apply_filters(s, pair).first() == FilterRule::R3);

  s.final_score_a = 6.5;
  CHECK(apply_filters(s, pair).keep);

  s.winner = Verdict::B;
  for (Dimension d : kAllDimensions)
    s.merged_rationale[d] = "B is better than A.";
  s.final_score_a = 4;
  s.final_score_b = 6;
  CHECK(apply_filters(s, pair).keep);
}

TEST_CASE("filters: R4 incomplete rationale coverage") {
  ReconciledSample s;
  s.final_score_a = 8;
  s.final_score_b = 6;
  s.winner = Verdict::A;
  for (Dimension d : kAllDimensions) s.merged_rationale[d] = "ok for A and B";
  s.merged_rationale.erase(Dimension::Relevance);
  CHECK(apply_filters(s, make_pair()).first() == FilterRule::R4);
}

TEST_CASE("filters: R5 both below quality threshold") {
  ReconciledSample s;
  s.winner = Verdict::A;
  for (Dimension d : kAllDimensions) s.merged_rationale[d] = "ok for A and B";
  s.final_score_a = 3.5;
  s.final_score_b = 2.0;
  CHECK(apply_filters(s, make_pair()).first() == FilterRule::R5);
  s.final_score_a = 4.0;  // at the threshold is acceptable
  CHECK(apply_filters(s, make_pair()).keep);
}

TEST_CASE("filters: R6 rationale polarity against the winner") {
  ReconciledSample s;
  s.final_score_a = 8;
  s.final_score_b = 6;
  s.winner = Verdict::A;
  for (Dimension d : kAllDimensions)
    s.merged_rationale[d] = "B is clearly better than A here.";
  const auto res = apply_filters(s, make_pair());
  REQUIRE(res.first() == FilterRule::R6);
}

TEST_CASE("filters: every triggered rule is recorded in order") {
  CandidatePair pair = make_pair();
  pair.response_a = "";
  pair.response_b = "";
  ReconciledSample s;  // empty rationale, tied zero scores, winner A
  const auto res = apply_filters(s, pair);
  CHECK_FALSE(res.keep);
  CHECK(res.triggered == std::vector<FilterRule>{FilterRule::R1, FilterRule::R2,
                                                 FilterRule::R3, FilterRule::R4,
                                                 FilterRule::R5});
  CHECK(res.first() == FilterRule::R1);
}

TEST_CASE("difficulty thresholds differ between train and eval splits") {
  ReconciledSample s;
  s.margin = 1.5;
  s = tag_difficulty(s);
  CHECK(s.difficulty_train == DifficultyLabel::Hard);
  CHECK(s.difficulty_eval == DifficultyLabel::Hard);

  s.margin = 2.0;
  s = tag_difficulty(s);
  CHECK(s.difficulty_train == DifficultyLabel::Easy);
  CHECK(s.difficulty_eval == DifficultyLabel::Hard);

  s.margin = 2.5;
  s = tag_difficulty(s);
  CHECK(s.difficulty_train == DifficultyLabel::Easy);
  CHECK(s.difficulty_eval == DifficultyLabel::Easy);
}

TEST_CASE("stats: counts per teacher slice and generator pair") {
  std::vector<CandidatePair> pairs;
  std::vector<std::vector<TeacherAnnotation>> anns;
  std::vector<PairOutcome> outcomes;
  std::vector<std::optional<ReconcileCase>> cases;

  // Pair 0: retained via Case I; teacher t2 preferred the weak response.
  pairs.push_back(make_pair("p0"));
  anns.push_back({annotate("t1", "p0", make_record(8, 6, Verdict::A)),
                  annotate("t2", "p0", make_record(4, 6, Verdict::B))});
  outcomes.push_back({true, std::nullopt, std::nullopt});
  cases.push_back(ReconcileCase::I);

  // Pair 1: tie discard; t1 voted Equal.
  pairs.push_back(make_pair("p1"));
  anns.push_back({annotate("t1", "p1", make_record(6, 6, Verdict::Equal)),
                  annotate("t2", "p1", make_record(8, 6, Verdict::A))});
  outcomes.push_back({false, DiscardReason::Tie, std::nullopt});
  cases.push_back(std::nullopt);

  // Pair 2: removed by R3 after Case II reconciliation.
  pairs.push_back(make_pair("p2"));
  anns.push_back({annotate("t1", "p2", make_record(9, 6, Verdict::A)),
                  annotate("t2", "p2", make_record(5, 6, Verdict::A))});
  outcomes.push_back({false, std::nullopt, FilterRule::R3});
  cases.push_back(ReconcileCase::II);

  const PipelineStats st = compute_stats(pairs, anns, outcomes, cases);
  CHECK(st.total_pairs == 3);
  CHECK(st.retained == 1);
  CHECK(st.case_i == 1);
  CHECK(st.case_ii == 0);  // removed pairs do not count toward case totals
  CHECK(st.ties == 1);
  CHECK(st.conflicts == 0);
  CHECK(st.removed_by_rule.at(FilterRule::R3) == 1);
  CHECK(st.removed_total() == 1);

  const auto& gp = st.by_generator_pair.at("strong-gen vs weak-gen");
  CHECK(gp.pairs == 3);
  CHECK(gp.discarded == 2);
  CHECK_THAT(gp.discard_rate(),
             Catch::Matchers::WithinAbs(100.0 * 2 / 3, 1e-9));
  const auto& t2 = gp.by_teacher.at("t2");
  CHECK(t2.annotations == 3);
  CHECK(t2.weak_over_strong == 1);
  CHECK_THAT(t2.weak_over_strong_rate(),
             Catch::Matchers::WithinAbs(100.0 / 3, 1e-9));
  const auto& t1 = gp.by_teacher.at("t1");
  CHECK(t1.ties == 1);
}

TEST_CASE("stats: misaligned inputs throw") {
  CHECK_THROWS_AS(compute_stats({make_pair()}, {}, {}, {}),
                  std::invalid_argument);
}

TEST_CASE("audit sampling is deterministic and bounded") {
  std::vector<int> pool(100);
  for (int i = 0; i < 100; ++i) pool[i] = i;

  const auto a = sample_audit_set(pool, 0.1, 42);
  const auto b = sample_audit_set(pool, 0.1, 42);
  CHECK(a == b);
  CHECK(a.size() == 10);
  CHECK(std::is_sorted(a.begin(), a.end()));

  const auto c = sample_audit_set(pool, 0.1, 43);
  CHECK(c.size() == 10);
  CHECK(a != c);  // different seed, different draw

  CHECK(sample_audit_set(pool, 1.0, 7).size() == 100);
  CHECK(sample_audit_set(pool, 0.005, 7).empty());  // floor(0.5) = 0
  CHECK_THROWS_AS(sample_audit_set(pool, 0.0, 7), std::invalid_argument);
  CHECK_THROWS_AS(sample_audit_set(pool, 1.5, 7), std::invalid_argument);
}

TEST_CASE("seed forking separates stage labels") {
  CHECK(detail::fork_seed(1, "a") != detail::fork_seed(1, "b"));
  CHECK(detail::fork_seed(1, "a") != detail::fork_seed(2, "a"));
  CHECK(detail::fork_seed(1, "a") == detail::fork_seed(1, "a"));
}
