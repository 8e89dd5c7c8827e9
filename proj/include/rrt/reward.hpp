// Composite GRPO reward: format, preference, and rubric sub-rewards, each
// clipped to [-1, 1], aggregated by a weighted sum that is clipped again.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <rrt/rubric.hpp>

namespace rrt {

struct RewardWeights {
  // Composite weights.
  double lambda_pref = 0.5;
  double lambda_rub = 0.3;
  double lambda_fmt = 0.2;
  // Preference sub-weights.
  double omega_dir = 0.6;
  double omega_score = 0.4;
  // Rubric sub-weights.
  double omega_cover = 0.8;
  double omega_cmp = 0.2;
  // Literal down-weight rule: a negative net comparison halves the rubric
  // reward. Halving makes a negative value *less* negative; the flag exists
  // because the intended direction is debatable.
  bool downweight_negative_cmp = true;
};

// Gold label for the preference reward. Reference scores may be absent, in
// which case only the direction term is used.
struct ReferenceLabel {
  std::optional<int> score_a_star;
  std::optional<int> score_b_star;
  Verdict better_star = Verdict::A;  // never Equal; ties are not trained on
};

struct RewardBreakdown {
  double r_fmt = 0;
  double r_pref = 0;
  double r_rub = 0;
  double r_total = 0;
  // Diagnostics.
  double c_dir = 0;
  double c_score = 0;
  double c_cover = 0;
  double delta_cmp = 0;
};

inline double clip1(double x) { return std::clamp(x, -1.0, 1.0); }

// Valid -> +1, verdict-mismatch-only -> -0.5, anything unparseable -> -1.
inline double format_reward(const ValidationReport& report) {
  switch (report.status) {
    case Status::Valid: return 1.0;
    case Status::SoftMismatch: return -0.5;
    case Status::HardViolation: return -1.0;
  }
  return -1.0;
}

namespace detail {

// Self-consistency: the declared verdict must match the record's own score
// order (A needs score_a > score_b, Equal needs equality).
inline bool verdict_matches_scores(const RubricRecord& rec) {
  switch (rec.better) {
    case Verdict::A: return rec.score_a > rec.score_b;
    case Verdict::B: return rec.score_b > rec.score_a;
    case Verdict::Equal: return rec.score_a == rec.score_b;
  }
  return false;
}

}  // namespace detail

inline double preference_reward(const RubricRecord& rec,
                                const ReferenceLabel& ref,
                                const RewardWeights& w,
                                RewardBreakdown* diag = nullptr) {
  if (!detail::verdict_matches_scores(rec)) {
    if (diag) diag->c_dir = diag->c_score = 0;
    return -1.0;
  }
  const double c_dir = (rec.better == ref.better_star) ? 1.0 : -1.0;
  double r;
  double c_score = 0;
  if (ref.score_a_star && ref.score_b_star) {
    const double dev = std::abs(rec.score_a - *ref.score_a_star) +
                       std::abs(rec.score_b - *ref.score_b_star);
    c_score = 1.0 - 2.0 * dev / 20.0;
    r = clip1(w.omega_dir * c_dir + w.omega_score * c_score);
  } else {
    // Direction only, with the direction weight renormalized to 1 so the
    // range stays [-1, 1].
    r = clip1(c_dir);
  }
  if (diag) {
    diag->c_dir = c_dir;
    diag->c_score = c_score;
  }
  return r;
}

// --- Comparative-cue analysis -----------------------------------------------
//
// Scores whether the dimension-wise justifications contain explicit A-vs-B
// comparisons consistent with the final verdict. Cues are a fixed lexical
// list; support is decided sentence-locally: a positive cue backs the
// sentence's first-mentioned candidate, a negative cue backs the other one.

struct CmpResult {
  double delta = 0;     // averaged cue agreement in [-1, 1]
  int cue_count = 0;    // cues that landed in a candidate-bearing sentence
  bool eligible = false;  // some dimension text references both A and B
};

namespace detail {

inline bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Standalone uppercase A or B (e.g. "Candidate A", "A is better").
inline std::optional<Verdict> first_candidate_mention(std::string_view s) {
  for (size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == 'A' || s[i] == 'B') &&
        (i == 0 || !is_word_char(s[i - 1])) &&
        (i + 1 == s.size() || !is_word_char(s[i + 1]))) {
      return s[i] == 'A' ? Verdict::A : Verdict::B;
    }
  }
  return std::nullopt;
}

inline bool mentions_both_candidates(std::string_view s) {
  bool a = false, b = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if ((s[i] == 'A' || s[i] == 'B') &&
        (i == 0 || !is_word_char(s[i - 1])) &&
        (i + 1 == s.size() || !is_word_char(s[i + 1]))) {
      (s[i] == 'A' ? a : b) = true;
    }
  }
  return a && b;
}

// Counts whole-word, case-insensitive occurrences of `word` in `lower`.
inline int count_word(const std::string& lower, std::string_view word) {
  int n = 0;
  size_t pos = 0;
  while ((pos = lower.find(word, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(lower[pos - 1]);
    const size_t end = pos + word.size();
    const bool right_ok = end == lower.size() || !is_word_char(lower[end]);
    if (left_ok && right_ok) ++n;
    pos = end;
  }
  return n;
}

inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    cur.push_back(c);
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace detail

inline CmpResult comparative_score(const Rationale& rationale,
                                   Verdict verdict) {
  CmpResult res;
  for (const auto& [dim, text] : rationale) {
    if (detail::mentions_both_candidates(text)) {
      res.eligible = true;
      break;
    }
  }
  if (!res.eligible || verdict == Verdict::Equal) return res;

  // Positive cues back the first-mentioned candidate; negative cues back the
  // other one. "than"/"compared to"/"vs." follow the favored subject, so they
  // behave like positive cues.
  static constexpr std::string_view kPositive[] = {"more", "better", "than",
                                                   "vs", "compared to"};
  static constexpr std::string_view kNegative[] = {"less", "worse"};

  int sum = 0, count = 0;
  for (const auto& [dim, text] : rationale) {
    for (const std::string& sentence : detail::split_sentences(text)) {
      auto first = detail::first_candidate_mention(sentence);
      if (!first) continue;
      const std::string lower = detail::to_lower(sentence);
      auto vote = [&](Verdict implied, int n) {
        sum += (implied == verdict ? n : -n);
        count += n;
      };
      for (auto cue : kPositive) {
        if (int n = detail::count_word(lower, cue)) vote(*first, n);
      }
      for (auto cue : kNegative) {
        if (int n = detail::count_word(lower, cue))
          vote(*first == Verdict::A ? Verdict::B : Verdict::A, n);
      }
    }
  }
  res.cue_count = count;
  if (count > 0) res.delta = clip1(static_cast<double>(sum) / count);
  return res;
}

// Coverage maps the fraction of the five dimensions with non-empty text
// linearly onto [-1, 1]; full coverage yields +1.
inline double rubric_reward(const RubricRecord& rec, const RewardWeights& w,
                            RewardBreakdown* diag = nullptr) {
  int covered = 0;
  for (Dimension d : kAllDimensions) {
    auto it = rec.rationale.find(d);
    if (it != rec.rationale.end() && !it->second.empty()) ++covered;
  }
  const double c_cover = 2.0 * covered / 5.0 - 1.0;
  const CmpResult cmp = comparative_score(rec.rationale, rec.final_verdict);
  double raw = w.omega_cover * c_cover + w.omega_cmp * cmp.delta;
  if (cmp.delta < 0 && w.downweight_negative_cmp) raw *= 0.5;
  if (diag) {
    diag->c_cover = c_cover;
    diag->delta_cmp = cmp.delta;
  }
  return clip1(raw);
}

inline double composite_reward(double fmt, double pref, double rub,
                               const RewardWeights& w) {
  return clip1(w.lambda_pref * pref + w.lambda_rub * rub + w.lambda_fmt * fmt);
}

// Scores one raw reply end to end.
inline RewardBreakdown score_reply(std::string_view raw_reply,
                                   const std::optional<ReferenceLabel>& ref,
                                   const RewardWeights& w = {}) {
  RewardBreakdown out;
  const ParseResult parsed = parse_record(raw_reply);
  const ValidationReport report = validate_record(parsed);
  out.r_fmt = format_reward(report);
  if (parsed.record) {
    if (ref) out.r_pref = preference_reward(*parsed.record, *ref, w, &out);
    out.r_rub = rubric_reward(*parsed.record, w, &out);
  } else {
    // Unparseable replies earn the floor on every component.
    out.r_pref = ref ? -1.0 : 0.0;
    out.r_rub = -1.0;
    out.c_cover = -1.0;
  }
  out.r_total = composite_reward(out.r_fmt, out.r_pref, out.r_rub, w);
  return out;
}

}  // namespace rrt
