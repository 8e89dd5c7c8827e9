// Preference-pair dataset construction: reconciliation of two teacher
// judgments (Cases I-III), rule-based filtering (R1-R6), difficulty tagging,
// audit sampling, and reliability statistics.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include <rrt/reward.hpp>
#include <rrt/rubric.hpp>

namespace rrt {

enum class Modality { Image, Video, Audio, Text };

inline std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::Image: return "image";
    case Modality::Video: return "video";
    case Modality::Audio: return "audio";
    case Modality::Text: return "text";
  }
  return "?";
}

inline std::optional<Modality> modality_from_string(std::string_view s) {
  if (s == "image") return Modality::Image;
  if (s == "video") return Modality::Video;
  if (s == "audio") return Modality::Audio;
  if (s == "text") return Modality::Text;
  return std::nullopt;
}

// One strong/weak candidate pair: response_a comes from the strong generator,
// response_b from the weak one.
struct CandidatePair {
  std::string pair_id;
  Modality modality = Modality::Text;
  std::string media_path;  // required for non-text modalities
  std::string question;
  std::string response_a;
  std::string response_b;
  std::string generator_a;  // strong role
  std::string generator_b;  // weak role
};

struct TeacherAnnotation {
  std::string teacher_id;
  std::string pair_id;
  std::optional<RubricRecord> record;  // present iff parse succeeded
  ValidationReport validation;
  std::string raw_reply;
};

inline TeacherAnnotation make_annotation(std::string teacher_id,
                                         std::string pair_id,
                                         std::string raw_reply) {
  TeacherAnnotation ann;
  ann.teacher_id = std::move(teacher_id);
  ann.pair_id = std::move(pair_id);
  ann.raw_reply = std::move(raw_reply);
  ParseResult parsed = parse_record(ann.raw_reply);
  ann.validation = validate_record(parsed);
  ann.record = std::move(parsed.record);
  return ann;
}

enum class ReconcileCase { I, II };
enum class DifficultyLabel { Hard, Easy };

struct ReconciledSample {
  std::string pair_id;
  double final_score_a = 0;
  double final_score_b = 0;
  Verdict winner = Verdict::A;
  Rationale merged_rationale;
  ReconcileCase reconcile_case = ReconcileCase::I;
  double margin = 0;  // |final_score_a - final_score_b|
  DifficultyLabel difficulty_train = DifficultyLabel::Easy;
  DifficultyLabel difficulty_eval = DifficultyLabel::Easy;
};

enum class DiscardReason { VerdictConflict, Tie, MalformedAnnotation };

inline std::string_view to_string(DiscardReason r) {
  switch (r) {
    case DiscardReason::VerdictConflict: return "verdict_conflict";
    case DiscardReason::Tie: return "tie";
    case DiscardReason::MalformedAnnotation: return "malformed_annotation";
  }
  return "?";
}

struct Discarded {
  DiscardReason reason;
};

using ReconcileOutcome = std::variant<ReconciledSample, Discarded>;

enum class FilterRule { R1, R2, R3, R4, R5, R6 };

inline std::string_view to_string(FilterRule r) {
  switch (r) {
    case FilterRule::R1: return "R1";
    case FilterRule::R2: return "R2";
    case FilterRule::R3: return "R3";
    case FilterRule::R4: return "R4";
    case FilterRule::R5: return "R5";
    case FilterRule::R6: return "R6";
  }
  return "?";
}

struct FilterResult {
  bool keep = true;
  std::vector<FilterRule> triggered;  // all matched rules, in order

  std::optional<FilterRule> first() const {
    if (triggered.empty()) return std::nullopt;
    return triggered.front();
  }
};

struct PipelineConfig {
  double score_tau = 1.0;        // Case I vs II boundary, per candidate
  double r5_threshold = 4.0;     // both averaged scores below -> R5
  size_t merge_char_budget = 400;  // per-teacher contribution per dimension
  double jaccard_threshold = 0.95;  // R1 near-duplicate
};

namespace detail {

// Stable 64-bit mix used to fork the run seed per pair / per stage label.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fork_seed(uint64_t seed, std::string_view label) {
  uint64_t h = mix64(seed);
  for (char c : label) h = mix64(h ^ static_cast<unsigned char>(c));
  return h;
}

inline std::string normalize_response(std::string_view s) {
  return to_lower(normalize_ws(s));
}

inline double token_jaccard(std::string_view a, std::string_view b) {
  auto tokens = [](std::string_view s) {
    std::unordered_set<std::string> out;
    std::string cur;
    for (char c : s) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      } else if (!cur.empty()) {
        out.insert(cur);
        cur.clear();
      }
    }
    if (!cur.empty()) out.insert(cur);
    return out;
  };
  const auto ta = tokens(a), tb = tokens(b);
  if (ta.empty() && tb.empty()) return 1.0;
  size_t inter = 0;
  for (const auto& t : ta) inter += tb.count(t);
  const size_t uni = ta.size() + tb.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline const std::vector<std::string>& refusal_phrases() {
  static const std::vector<std::string> kPhrases = {
      "i cannot", "i can't", "i am unable", "i'm unable", "i'm sorry",
      "i am sorry", "as an ai", "i won't", "i will not answer",
  };
  return kPhrases;
}

inline bool looks_like_refusal(std::string_view response) {
  const std::string norm = normalize_response(response);
  for (const auto& p : refusal_phrases()) {
    if (norm.rfind(p, 0) == 0) return true;
  }
  return false;
}

inline int rationale_coverage(const Rationale& r) {
  int covered = 0;
  for (Dimension d : kAllDimensions) {
    auto it = r.find(d);
    if (it != r.end() && !it->second.empty()) ++covered;
  }
  return covered;
}

}  // namespace detail

// Merges two teacher judgments for one pair into a training sample or a
// discard. Tie verdicts and verdict conflicts are never retained.
inline ReconcileOutcome reconcile(const CandidatePair& pair,
                                  const TeacherAnnotation& t1,
                                  const TeacherAnnotation& t2, uint64_t seed,
                                  const PipelineConfig& cfg = {}) {
  if (t1.pair_id != pair.pair_id || t2.pair_id != pair.pair_id)
    throw std::invalid_argument("annotations do not reference the given pair");
  if (!t1.record || !t2.record) return Discarded{DiscardReason::MalformedAnnotation};
  const RubricRecord& r1 = *t1.record;
  const RubricRecord& r2 = *t2.record;

  if (r1.better == Verdict::Equal || r2.better == Verdict::Equal)
    return Discarded{DiscardReason::Tie};
  if (r1.better != r2.better) return Discarded{DiscardReason::VerdictConflict};

  ReconciledSample s;
  s.pair_id = pair.pair_id;
  s.winner = r1.better;
  s.final_score_a = 0.5 * (r1.score_a + r2.score_a);
  s.final_score_b = 0.5 * (r1.score_b + r2.score_b);
  s.margin = std::abs(s.final_score_a - s.final_score_b);

  const bool close_scores =
      std::abs(r1.score_a - r2.score_a) <= cfg.score_tau &&
      std::abs(r1.score_b - r2.score_b) <= cfg.score_tau;

  if (close_scores) {
    // Case I: pick the rationale with higher coverage, then fewer validity
    // findings, then a seeded coin flip.
    s.reconcile_case = ReconcileCase::I;
    const int cov1 = detail::rationale_coverage(r1.rationale);
    const int cov2 = detail::rationale_coverage(r2.rationale);
    const size_t bad1 = t1.validation.violations.size();
    const size_t bad2 = t2.validation.violations.size();
    const RubricRecord* pick;
    if (cov1 != cov2) {
      pick = cov1 > cov2 ? &r1 : &r2;
    } else if (bad1 != bad2) {
      pick = bad1 < bad2 ? &r1 : &r2;
    } else {
      std::mt19937_64 rng(detail::fork_seed(seed, "case1:" + pair.pair_id));
      pick = (rng() & 1) ? &r1 : &r2;
    }
    s.merged_rationale = pick->rationale;
  } else {
    // Case II: merge dimension-wise, each teacher's text truncated to the
    // length budget and labeled to keep provenance visible.
    s.reconcile_case = ReconcileCase::II;
    auto clipped = [&](const std::string& text) {
      return text.size() <= cfg.merge_char_budget
                 ? text
                 : text.substr(0, cfg.merge_char_budget);
    };
    for (Dimension d : kAllDimensions) {
      auto i1 = r1.rationale.find(d);
      auto i2 = r2.rationale.find(d);
      std::string merged;
      if (i1 != r1.rationale.end())
        merged = "[" + t1.teacher_id + "] " + clipped(i1->second);
      if (i2 != r2.rationale.end()) {
        if (!merged.empty()) merged += " | ";
        merged += "[" + t2.teacher_id + "] " + clipped(i2->second);
      }
      if (!merged.empty()) s.merged_rationale[d] = std::move(merged);
    }
  }
  return s;
}

// R1-R6 post-reconciliation checks. All triggered rules are recorded; the
// first one is the reported removal reason.
inline FilterResult apply_filters(const ReconciledSample& s,
                                  const CandidatePair& pair,
                                  const PipelineConfig& cfg = {}) {
  FilterResult res;
  auto trigger = [&](FilterRule r) {
    res.keep = false;
    res.triggered.push_back(r);
  };

  // R1: duplicate or near-duplicate responses.
  const std::string na = detail::normalize_response(pair.response_a);
  const std::string nb = detail::normalize_response(pair.response_b);
  if (na == nb ||
      detail::token_jaccard(pair.response_a, pair.response_b) >=
          cfg.jaccard_threshold)
    trigger(FilterRule::R1);

  // R2: empty or refusal-only responses.
  if (na.empty() || nb.empty() || detail::looks_like_refusal(pair.response_a) ||
      detail::looks_like_refusal(pair.response_b))
    trigger(FilterRule::R2);

  // R3: averaged score ordering must strictly back the winner.
  const bool order_ok = s.winner == Verdict::A
                            ? s.final_score_a > s.final_score_b
                            : s.final_score_b > s.final_score_a;
  if (!order_ok) trigger(FilterRule::R3);

  // R4: all five dimensions must carry non-empty justification text.
  if (detail::rationale_coverage(s.merged_rationale) < 5)
    trigger(FilterRule::R4);

  // R5: both responses below the absolute-quality threshold.
  if (s.final_score_a < cfg.r5_threshold && s.final_score_b < cfg.r5_threshold)
    trigger(FilterRule::R5);

  // R6: rationale polarity contradicting the verdict, via the comparative-cue
  // analyzer of the rubric reward.
  if (comparative_score(s.merged_rationale, s.winner).delta < 0)
    trigger(FilterRule::R6);

  return res;
}

// Training split: Hard iff margin < 2. Evaluation split is relaxed to
// margin <= 2, so every train-hard sample is also eval-hard.
inline ReconciledSample tag_difficulty(ReconciledSample s) {
  s.difficulty_train =
      s.margin < 2.0 ? DifficultyLabel::Hard : DifficultyLabel::Easy;
  s.difficulty_eval =
      s.margin <= 2.0 ? DifficultyLabel::Hard : DifficultyLabel::Easy;
  return s;
}

// --- Reliability statistics -------------------------------------------------

struct PairOutcome {
  // Exactly one of these describes the terminal state of a pair.
  bool retained = false;
  std::optional<DiscardReason> discarded;
  std::optional<FilterRule> removed_by;
};

struct TeacherSliceStats {
  size_t annotations = 0;
  size_t weak_over_strong = 0;  // verdict prefers response_b (weak generator)
  size_t ties = 0;

  double weak_over_strong_rate() const {
    return annotations ? 100.0 * weak_over_strong / annotations : 0.0;
  }
  double tie_rate() const {
    return annotations ? 100.0 * ties / annotations : 0.0;
  }
};

struct GeneratorPairStats {
  size_t pairs = 0;
  size_t discarded = 0;  // not retained after reconciliation + filtering
  std::map<std::string, TeacherSliceStats> by_teacher;

  double discard_rate() const {
    return pairs ? 100.0 * discarded / pairs : 0.0;
  }
};

struct PipelineStats {
  size_t total_pairs = 0;
  size_t retained = 0;
  size_t conflicts = 0;
  size_t ties = 0;
  size_t malformed = 0;
  size_t case_i = 0;
  size_t case_ii = 0;
  std::map<FilterRule, size_t> removed_by_rule;
  std::map<std::string, GeneratorPairStats> by_generator_pair;

  size_t removed_total() const {
    size_t n = 0;
    for (const auto& [rule, c] : removed_by_rule) n += c;
    return n;
  }
};

// Aggregates per-teacher verdict statistics (pre-filtering) and per-generator
// discard rates. `outcomes` must hold one terminal outcome per pair.
inline PipelineStats compute_stats(
    const std::vector<CandidatePair>& pairs,
    const std::vector<std::vector<TeacherAnnotation>>& annotations,
    const std::vector<PairOutcome>& outcomes,
    const std::vector<std::optional<ReconcileCase>>& cases) {
  if (pairs.size() != outcomes.size() || pairs.size() != annotations.size() ||
      pairs.size() != cases.size())
    throw std::invalid_argument("stats inputs are not aligned");

  PipelineStats st;
  st.total_pairs = pairs.size();
  for (size_t i = 0; i < pairs.size(); ++i) {
    const std::string gen_key = pairs[i].generator_a + " vs " + pairs[i].generator_b;
    auto& gp = st.by_generator_pair[gen_key];
    ++gp.pairs;

    for (const auto& ann : annotations[i]) {
      auto& slice = gp.by_teacher[ann.teacher_id];
      ++slice.annotations;
      if (ann.record) {
        if (ann.record->better == Verdict::B) ++slice.weak_over_strong;
        if (ann.record->better == Verdict::Equal) ++slice.ties;
      }
    }

    const PairOutcome& out = outcomes[i];
    if (out.retained) {
      ++st.retained;
      if (cases[i] == ReconcileCase::I) ++st.case_i;
      if (cases[i] == ReconcileCase::II) ++st.case_ii;
    } else {
      ++gp.discarded;
      if (out.removed_by) {
        ++st.removed_by_rule[*out.removed_by];
      } else if (out.discarded) {
        switch (*out.discarded) {
          case DiscardReason::VerdictConflict: ++st.conflicts; break;
          case DiscardReason::Tie: ++st.ties; break;
          case DiscardReason::MalformedAnnotation: ++st.malformed; break;
        }
      }
    }
  }
  return st;
}

// Seeded uniform sample of floor(n * fraction) items, without replacement.
// Audit-only: callers must never merge the result into training output.
template <typename T>
std::vector<T> sample_audit_set(const std::vector<T>& discarded,
                                double fraction, uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("audit fraction must be in (0, 1]");
  const size_t want = static_cast<size_t>(
      std::floor(static_cast<double>(discarded.size()) * fraction));
  std::vector<size_t> idx(discarded.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(detail::fork_seed(seed, "audit"));
  // Partial Fisher-Yates; std::sample's output is not pinned across stdlibs.
  for (size_t i = 0; i < want; ++i) {
    std::uniform_int_distribution<size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(want);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(want);
  for (size_t i : idx) out.push_back(discarded[i]);
  return out;
}

}  // namespace rrt
