// Benchmark scoring, agreement statistics, and Best-of-N selection.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <rrt/pipeline.hpp>
#include <rrt/rubric.hpp>

namespace rrt {

struct BenchmarkItem {
  std::string item_id;
  Modality modality = Modality::Text;
  std::string question;
  std::string response_a;
  std::string response_b;
  Verdict gold_label = Verdict::A;  // A or B
  std::optional<double> margin;     // teacher margin for stratification
};

// Percentages rounded half away from zero to one decimal, as reported.
inline double round1(double x) {
  return std::copysign(std::floor(std::abs(x) * 10.0 + 0.5) / 10.0, x);
}

struct AccuracyBucket {
  size_t total = 0;
  double correct = 0;  // fractional only in half-credit mode
  double pct() const { return total ? 100.0 * correct / total : 0.0; }
};

struct EvalReport {
  AccuracyBucket overall;
  std::map<Modality, AccuracyBucket> by_modality;
  AccuracyBucket hard;  // margin <= 2
  AccuracyBucket easy;  // margin > 2
  std::optional<double> relative_improvement_pct;
  std::string baseline_name;
};

// Equal predictions count as incorrect by default; `half_credit_ties` awards
// them half a point instead.
inline EvalReport preference_accuracy(
    const std::map<std::string, Verdict>& predictions,
    const std::vector<BenchmarkItem>& items, bool half_credit_ties = false) {
  EvalReport report;
  for (const auto& item : items) {
    auto it = predictions.find(item.item_id);
    if (it == predictions.end())
      throw std::invalid_argument("missing prediction for item " + item.item_id);
    double credit = it->second == item.gold_label ? 1.0 : 0.0;
    if (half_credit_ties && it->second == Verdict::Equal) credit = 0.5;
    auto tally = [&](AccuracyBucket& b) {
      ++b.total;
      b.correct += credit;
    };
    tally(report.overall);
    tally(report.by_modality[item.modality]);
    if (item.margin) tally(*item.margin <= 2.0 ? report.hard : report.easy);
  }
  return report;
}

inline double relative_improvement(double base_pct, double new_pct) {
  if (base_pct <= 0.0) throw std::invalid_argument("baseline must be positive");
  return round1((new_pct - base_pct) / base_pct * 100.0);
}

// --- Inter-annotator agreement ----------------------------------------------

struct RatingMatrix {
  // ratings[item][rater] over {A, B, Equal}.
  std::vector<std::vector<Verdict>> ratings;
  // acceptance[item][rater]: rationale judged coherent/grounded/valid.
  std::vector<std::vector<bool>> acceptance;
};

inline double fleiss_kappa(const RatingMatrix& m) {
  const size_t items = m.ratings.size();
  if (items == 0) throw std::invalid_argument("empty rating matrix");
  const size_t raters = m.ratings.front().size();
  if (raters < 2) throw std::invalid_argument("need at least two raters");

  std::array<double, 3> category_totals{};
  double sum_pi = 0;
  for (const auto& row : m.ratings) {
    if (row.size() != raters) throw std::invalid_argument("ragged rating matrix");
    std::array<size_t, 3> counts{};
    for (Verdict v : row) ++counts[static_cast<size_t>(v)];
    double agree = 0;
    for (size_t j = 0; j < 3; ++j) {
      agree += static_cast<double>(counts[j]) * (counts[j] - 1);
      category_totals[j] += static_cast<double>(counts[j]);
    }
    sum_pi += agree / (static_cast<double>(raters) * (raters - 1));
  }
  const double p_bar = sum_pi / static_cast<double>(items);
  double p_e = 0;
  const double n_total = static_cast<double>(items * raters);
  for (double t : category_totals) {
    const double p = t / n_total;
    p_e += p * p;
  }
  if (p_e == 1.0) return 1.0;  // all ratings in one category
  return (p_bar - p_e) / (1.0 - p_e);
}

// Strict-majority label per item; ties map to Equal.
inline std::vector<Verdict> majority_vote(const RatingMatrix& m) {
  std::vector<Verdict> out;
  out.reserve(m.ratings.size());
  for (const auto& row : m.ratings) {
    std::array<size_t, 3> counts{};
    for (Verdict v : row) ++counts[static_cast<size_t>(v)];
    const size_t best = *std::max_element(counts.begin(), counts.end());
    int winners = 0;
    Verdict label = Verdict::Equal;
    for (size_t j = 0; j < 3; ++j) {
      if (counts[j] == best) {
        ++winners;
        label = static_cast<Verdict>(j);
      }
    }
    out.push_back(winners == 1 ? label : Verdict::Equal);
  }
  return out;
}

// An item's rationale is accepted when at least 3 of 4 raters accept it.
inline double rationale_acceptance(const RatingMatrix& m) {
  if (m.acceptance.empty()) throw std::invalid_argument("no acceptance data");
  size_t accepted = 0;
  for (const auto& row : m.acceptance) {
    const size_t yes = static_cast<size_t>(
        std::count(row.begin(), row.end(), true));
    if (yes >= 3) ++accepted;
  }
  return 100.0 * accepted / static_cast<double>(m.acceptance.size());
}

// --- Best-of-N ---------------------------------------------------------------

struct JudgeDecision {
  Verdict verdict = Verdict::Equal;
  std::optional<double> score_a;
  std::optional<double> score_b;
};

// Pairwise comparator over ordered candidate pairs. May throw; a throwing
// judge call is logged and scored as Equal.
using PairwiseJudge =
    std::function<JudgeDecision(size_t index_a, size_t index_b)>;

struct BonMatch {
  size_t a = 0;
  size_t b = 0;
  Verdict result = Verdict::Equal;
  bool judge_failed = false;
};

struct BonResult {
  size_t chosen = 0;
  std::vector<size_t> wins;
  std::vector<BonMatch> log;
};

// Single-orientation round-robin over all C(N,2) unordered pairs. Winner is
// the candidate with the most wins; ties fall back to head-to-head, then
// accumulated judge score margin, then lowest index. `double_orientation`
// plays each pair in both A/B orders.
inline BonResult bon_select(size_t n, const PairwiseJudge& judge,
                            bool double_orientation = false) {
  if (n == 0) throw std::invalid_argument("empty candidate set");
  BonResult res;
  res.wins.assign(n, 0);
  std::vector<double> score_margin(n, 0.0);
  // head[i][j]: wins of i over j.
  std::vector<std::vector<int>> head(n, std::vector<int>(n, 0));

  auto play = [&](size_t a, size_t b) {
    BonMatch match{a, b, Verdict::Equal, false};
    JudgeDecision d;
    try {
      d = judge(a, b);
      match.result = d.verdict;
    } catch (const std::exception&) {
      match.judge_failed = true;
    }
    if (match.result == Verdict::A) {
      ++res.wins[a];
      ++head[a][b];
    } else if (match.result == Verdict::B) {
      ++res.wins[b];
      ++head[b][a];
    }
    if (d.score_a && d.score_b) {
      score_margin[a] += *d.score_a - *d.score_b;
      score_margin[b] += *d.score_b - *d.score_a;
    }
    res.log.push_back(match);
  };

  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      play(i, j);
      if (double_orientation) play(j, i);
    }
  }

  size_t best = 0;
  for (size_t i = 1; i < n; ++i) {
    if (res.wins[i] > res.wins[best]) {
      best = i;
    } else if (res.wins[i] == res.wins[best]) {
      const int h2h = head[i][best] - head[best][i];
      if (h2h > 0) {
        best = i;
      } else if (h2h == 0 && score_margin[i] > score_margin[best]) {
        best = i;
      }
      // equal on every tie-break: keep the lower index
    }
  }
  res.chosen = best;
  return res;
}

// Normalization for self-consistency voting: trim, case-fold, strip terminal
// punctuation, and reduce option-letter answers ("B.", "(b)") to the letter.
inline std::string normalize_answer(std::string_view raw) {
  std::string s = detail::to_lower(detail::normalize_ws(raw));
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?' ||
                        s.back() == ':' || s.back() == ','))
    s.pop_back();
  // Leading option letter: "b", "b)", "(b) some text", "b: answer".
  auto letter_at = [&](size_t i) {
    return i < s.size() && s[i] >= 'a' && s[i] <= 'z';
  };
  if (s.size() >= 1 && letter_at(0) &&
      (s.size() == 1 || s[1] == ')' || s[1] == '.' || s[1] == ':')) {
    return std::string(1, s[0]);
  }
  if (s.size() >= 3 && s[0] == '(' && letter_at(1) && s[2] == ')') {
    return std::string(1, s[1]);
  }
  return s;
}

struct SelfConsistencyResult {
  size_t chosen = 0;        // index of the earliest candidate with the modal answer
  std::string answer;       // normalized modal answer
};

// Majority vote over normalized answers; ties go to the earliest candidate
// among the tied answers.
inline SelfConsistencyResult self_consistency(
    const std::vector<std::string>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  std::map<std::string, size_t> counts;
  std::map<std::string, size_t> first_seen;
  std::vector<std::string> normalized;
  normalized.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) {
    std::string norm = normalize_answer(candidates[i]);
    ++counts[norm];
    first_seen.emplace(norm, i);
    normalized.push_back(std::move(norm));
  }
  size_t best_count = 0;
  size_t best_index = 0;
  std::string best_answer;
  for (const auto& [answer, count] : counts) {
    const size_t idx = first_seen.at(answer);
    if (count > best_count || (count == best_count && idx < best_index)) {
      best_count = count;
      best_index = idx;
      best_answer = answer;
    }
  }
  return {best_index, best_answer};
}

// --- Latency / gain reporting -----------------------------------------------

struct LatencySample {
  double tokens = 0;
  double seconds = 0;
};

struct LatencyGainRow {
  std::string label;
  double mean_tokens = 0;
  double mean_seconds = 0;
  double mean_gain_pp = 0;  // accuracy delta in percentage points
};

inline LatencyGainRow latency_gain_report(
    const std::string& label, const std::vector<LatencySample>& timings,
    const std::vector<double>& gains_pp) {
  if (timings.empty() || gains_pp.empty())
    throw std::invalid_argument("empty latency/gain input");
  LatencyGainRow row;
  row.label = label;
  for (const auto& t : timings) {
    row.mean_tokens += t.tokens;
    row.mean_seconds += t.seconds;
  }
  row.mean_tokens /= static_cast<double>(timings.size());
  row.mean_seconds /= static_cast<double>(timings.size());
  for (double g : gains_pp) row.mean_gain_pp += g;
  row.mean_gain_pp /= static_cast<double>(gains_pp.size());
  return row;
}

}  // namespace rrt
