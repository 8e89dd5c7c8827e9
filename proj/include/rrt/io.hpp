// JSONL streaming helpers and row schemas for the batch commands.

#pragma once

#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include <rrt/eval.hpp>
#include <rrt/pipeline.hpp>
#include <rrt/reward.hpp>
#include <rrt/rubric.hpp>

namespace rrt {

// Streams one parsed JSON object per non-empty line; constant memory in the
// input size.
inline void for_each_jsonl(std::istream& in,
                           const std::function<void(const json&, size_t)>& fn) {
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded())
      throw std::runtime_error("bad JSON on line " + std::to_string(lineno));
    fn(row, lineno);
  }
}

inline void write_jsonl(std::ostream& out, const json& row) {
  out << row.dump() << '\n';
}

// --- Row schemas -------------------------------------------------------------

inline json to_json(const RewardBreakdown& b) {
  return {
      {"r_fmt", b.r_fmt},   {"r_pref", b.r_pref},     {"r_rub", b.r_rub},
      {"r_total", b.r_total}, {"c_dir", b.c_dir},     {"c_score", b.c_score},
      {"c_cover", b.c_cover}, {"delta_cmp", b.delta_cmp},
  };
}

inline ReferenceLabel reference_from_json(const json& j) {
  ReferenceLabel ref;
  if (j.contains("score_A") && !j.at("score_A").is_null())
    ref.score_a_star = j.at("score_A").get<int>();
  if (j.contains("score_B") && !j.at("score_B").is_null())
    ref.score_b_star = j.at("score_B").get<int>();
  const std::string b = j.at("better").get<std::string>();
  if (b == "A") ref.better_star = Verdict::A;
  else if (b == "B") ref.better_star = Verdict::B;
  else throw std::runtime_error("reference better must be A or B");
  return ref;
}

inline json to_json(const CandidatePair& p) {
  return {
      {"pair_id", p.pair_id},
      {"modality", std::string(to_string(p.modality))},
      {"media_path", p.media_path},
      {"question", p.question},
      {"response_a", p.response_a},
      {"response_b", p.response_b},
      {"generator_a", p.generator_a},
      {"generator_b", p.generator_b},
  };
}

inline CandidatePair pair_from_json(const json& j) {
  CandidatePair p;
  p.pair_id = j.at("pair_id").get<std::string>();
  auto modality = modality_from_string(j.at("modality").get<std::string>());
  if (!modality) throw std::runtime_error("unknown modality for " + p.pair_id);
  p.modality = *modality;
  p.media_path = j.value("media_path", "");
  if (p.modality != Modality::Text && p.media_path.empty())
    throw std::runtime_error("media_path required for pair " + p.pair_id);
  p.question = j.value("question", "");
  p.response_a = j.at("response_a").get<std::string>();
  p.response_b = j.at("response_b").get<std::string>();
  p.generator_a = j.value("generator_a", "");
  p.generator_b = j.value("generator_b", "");
  return p;
}

inline json to_json(const ReconciledSample& s) {
  json rationale = json::object();
  for (const auto& [dim, text] : s.merged_rationale)
    rationale[std::string(to_string(dim))] = text;
  return {
      {"pair_id", s.pair_id},
      {"final_score_a", s.final_score_a},
      {"final_score_b", s.final_score_b},
      {"winner", std::string(to_string(s.winner))},
      {"rationale", std::move(rationale)},
      {"case", s.reconcile_case == ReconcileCase::I ? "I" : "II"},
      {"margin", s.margin},
      {"difficulty_train",
       s.difficulty_train == DifficultyLabel::Hard ? "hard" : "easy"},
      {"difficulty_eval",
       s.difficulty_eval == DifficultyLabel::Hard ? "hard" : "easy"},
  };
}

inline ReconciledSample sample_from_json(const json& j) {
  ReconciledSample s;
  s.pair_id = j.at("pair_id").get<std::string>();
  s.final_score_a = j.at("final_score_a").get<double>();
  s.final_score_b = j.at("final_score_b").get<double>();
  s.winner = j.at("winner").get<std::string>() == "A" ? Verdict::A : Verdict::B;
  for (const auto& [key, value] : j.at("rationale").items()) {
    if (auto dim = detail::dimension_from_key(key))
      s.merged_rationale[*dim] = value.get<std::string>();
  }
  s.reconcile_case =
      j.at("case").get<std::string>() == "I" ? ReconcileCase::I : ReconcileCase::II;
  s.margin = j.at("margin").get<double>();
  return s;
}

inline BenchmarkItem benchmark_item_from_json(const json& j) {
  BenchmarkItem item;
  item.item_id = j.at("item_id").get<std::string>();
  if (auto m = modality_from_string(j.value("modality", "text")))
    item.modality = *m;
  item.question = j.value("question", "");
  item.response_a = j.value("response_a", "");
  item.response_b = j.value("response_b", "");
  const std::string gold = j.at("gold_label").get<std::string>();
  if (gold == "A") item.gold_label = Verdict::A;
  else if (gold == "B") item.gold_label = Verdict::B;
  else throw std::runtime_error("gold_label must be A or B: " + item.item_id);
  if (j.contains("margin") && !j.at("margin").is_null())
    item.margin = j.at("margin").get<double>();
  return item;
}

inline json to_json(const PipelineStats& st) {
  json rules = json::object();
  for (const auto& [rule, count] : st.removed_by_rule)
    rules[std::string(to_string(rule))] = count;
  json generators = json::object();
  for (const auto& [key, gp] : st.by_generator_pair) {
    json teachers = json::object();
    for (const auto& [tid, slice] : gp.by_teacher) {
      teachers[tid] = {
          {"annotations", slice.annotations},
          {"weak_over_strong_pct", slice.weak_over_strong_rate()},
          {"tie_pct", slice.tie_rate()},
      };
    }
    generators[key] = {
        {"pairs", gp.pairs},
        {"discard_pct", gp.discard_rate()},
        {"teachers", std::move(teachers)},
    };
  }
  return {
      {"total_pairs", st.total_pairs},
      {"retained", st.retained},
      {"conflicts", st.conflicts},
      {"ties", st.ties},
      {"malformed", st.malformed},
      {"case_i", st.case_i},
      {"case_ii", st.case_ii},
      {"removed_by_rule", std::move(rules)},
      {"by_generator_pair", std::move(generators)},
  };
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  return out;
}

}  // namespace rrt
