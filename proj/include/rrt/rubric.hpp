// Parsing, validation, and normalization of rubric-grounded judgment records.
//
// A judgment record is a strict JSON object with keys
//   score_A, score_B, better, reasoning, final_verdict
// where `reasoning` maps the five rubric dimensions to textual justifications
// and `final_verdict` carries an <answer>[[X]]</answer> tag.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rrt {

using json = nlohmann::json;

enum class Verdict { A, B, Equal };

enum class Dimension { Fluency, Relevance, Accuracy, Reasoning, Safety };

inline constexpr std::array<Dimension, 5> kAllDimensions = {
    Dimension::Fluency, Dimension::Relevance, Dimension::Accuracy,
    Dimension::Reasoning, Dimension::Safety};

inline std::string_view to_string(Dimension d) {
  switch (d) {
    case Dimension::Fluency: return "fluency";
    case Dimension::Relevance: return "relevance";
    case Dimension::Accuracy: return "accuracy";
    case Dimension::Reasoning: return "reasoning";
    case Dimension::Safety: return "safety";
  }
  return "?";
}

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::A: return "A";
    case Verdict::B: return "B";
    case Verdict::Equal: return "equal";
  }
  return "?";
}

using Rationale = std::map<Dimension, std::string>;

struct RubricRecord {
  int score_a = 0;
  int score_b = 0;
  Verdict better = Verdict::Equal;
  Rationale rationale;
  Verdict final_verdict = Verdict::Equal;

  friend bool operator==(const RubricRecord&, const RubricRecord&) = default;
};

// Typed findings accumulated by the parser and validator.
enum class Violation {
  NotJson,
  ControlCharacter,
  MissingField,
  TypeError,
  ScoreOutOfRange,
  BadVerdictTag,
  UnknownVerdictLabel,
  UnknownDimension,
  EmptyRationale,
  VerdictMismatch,
};

inline std::string_view to_string(Violation v) {
  switch (v) {
    case Violation::NotJson: return "not_json";
    case Violation::ControlCharacter: return "control_character";
    case Violation::MissingField: return "missing_field";
    case Violation::TypeError: return "type_error";
    case Violation::ScoreOutOfRange: return "score_out_of_range";
    case Violation::BadVerdictTag: return "bad_verdict_tag";
    case Violation::UnknownVerdictLabel: return "unknown_verdict_label";
    case Violation::UnknownDimension: return "unknown_dimension";
    case Violation::EmptyRationale: return "empty_rationale";
    case Violation::VerdictMismatch: return "verdict_mismatch";
  }
  return "?";
}

struct Finding {
  Violation code;
  std::string field;  // offending field or key, may be empty

  friend bool operator==(const Finding&, const Finding&) = default;
};

// Result of parse_record: `record` is populated iff `findings` is empty.
struct ParseResult {
  std::optional<RubricRecord> record;
  std::vector<Finding> findings;

  bool ok() const { return record.has_value() && findings.empty(); }
};

enum class Status { Valid, SoftMismatch, HardViolation };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Valid: return "valid";
    case Status::SoftMismatch: return "soft_mismatch";
    case Status::HardViolation: return "hard_violation";
  }
  return "?";
}

struct ValidationReport {
  Status status = Status::HardViolation;
  std::vector<Finding> violations;
};

namespace detail {

inline std::string normalize_ws(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // trims leading whitespace
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Dimension aliases: the annotation prompt spells two criteria as
// "accuracy/completeness" and "clarity/logic"; both map onto the canonical
// five keys used by the schema examples.
inline std::optional<Dimension> dimension_from_key(std::string_view key) {
  const std::string k = to_lower(normalize_ws(key));
  if (k == "fluency" || k == "fluency and coherence" || k == "fluency/coherence")
    return Dimension::Fluency;
  if (k == "relevance" || k.rfind("relevance to the question", 0) == 0)
    return Dimension::Relevance;
  if (k == "accuracy" || k == "accuracy/completeness" ||
      k == "accuracy and completeness")
    return Dimension::Accuracy;
  if (k == "reasoning" || k == "reasoning quality" || k == "clarity/logic" ||
      k == "clarity and logic")
    return Dimension::Reasoning;
  if (k == "safety" || k == "safety/ethics" ||
      k == "safety and ethical alignment")
    return Dimension::Safety;
  return std::nullopt;
}

// Lead-in phrases of the string-form rationale template, matched
// case-insensitively. Text between one lead-in and the next belongs to the
// lead-in's dimension.
inline constexpr std::array<std::pair<std::string_view, Dimension>, 5>
    kLeadIns = {{
        {"fluency and coherence", Dimension::Fluency},
        {"relevance to the question", Dimension::Relevance},
        {"accuracy and completeness", Dimension::Accuracy},
        {"reasoning quality", Dimension::Reasoning},
        {"safety and ethical alignment", Dimension::Safety},
    }};

inline std::string strip_think_tags(std::string_view s) {
  std::string out(normalize_ws(s));
  const std::string_view open = "<think>", close = "</think>";
  if (out.rfind(open, 0) == 0) out.erase(0, open.size());
  if (out.size() >= close.size() &&
      out.compare(out.size() - close.size(), close.size(), close) == 0)
    out.erase(out.size() - close.size());
  return std::string(normalize_ws(out));
}

inline std::optional<Verdict> decode_better(std::string_view s) {
  if (s == "A") return Verdict::A;
  if (s == "B") return Verdict::B;
  if (s == "equal") return Verdict::Equal;
  return std::nullopt;
}

// Decodes "<answer>[[X]]</answer>" or a bare label ("A"/"B"/"equal"); the
// schema examples use both spellings. Labels are case-sensitive; whitespace
// is tolerated inside the tag only.
inline std::optional<Verdict> decode_verdict_tag(std::string_view raw,
                                                 std::vector<Finding>& out) {
  std::string s(raw);
  if (auto bare = decode_better(s)) return bare;
  const std::string_view open = "<answer>", close = "</answer>";
  if (s.rfind(open, 0) != 0 || s.size() < open.size() + close.size() ||
      s.compare(s.size() - close.size(), close.size(), close) != 0) {
    out.push_back({Violation::BadVerdictTag, "final_verdict"});
    return std::nullopt;
  }
  std::string inner = s.substr(open.size(), s.size() - open.size() - close.size());
  inner = normalize_ws(inner);
  if (inner.size() < 4 || inner.substr(0, 2) != "[[" ||
      inner.substr(inner.size() - 2) != "]]") {
    out.push_back({Violation::BadVerdictTag, "final_verdict"});
    return std::nullopt;
  }
  const std::string label = normalize_ws(inner.substr(2, inner.size() - 4));
  if (label == "A") return Verdict::A;
  if (label == "B") return Verdict::B;
  if (label == "equal") return Verdict::Equal;
  out.push_back({Violation::UnknownVerdictLabel, "final_verdict"});
  return std::nullopt;
}

// C0 control characters other than tab/newline/carriage-return are rejected
// anywhere in the reply.
inline bool has_forbidden_control_char(std::string_view s) {
  for (unsigned char c : s) {
    if (c < 0x20 && c != '\t' && c != '\n' && c != '\r') return true;
  }
  return false;
}

}  // namespace detail

// Normalizes a rationale given either as a key->text object or as a single
// tagged string with dimension lead-ins. Returns the recovered dimension map;
// findings record unknown keys or a fully empty rationale.
inline Rationale normalize_rationale(const json& raw,
                                     std::vector<Finding>& findings) {
  Rationale out;
  if (raw.is_object()) {
    const json* obj = &raw;
    // A single wrapper key ("reasoning" or "rubric") around the dimension map
    // is unwrapped.
    if (obj->size() == 1) {
      const auto& it = obj->begin();
      if ((it.key() == "reasoning" || it.key() == "rubric") &&
          it.value().is_object()) {
        obj = &it.value();
      }
    }
    for (const auto& [key, value] : obj->items()) {
      auto dim = detail::dimension_from_key(key);
      if (!dim) {
        findings.push_back({Violation::UnknownDimension, key});
        continue;
      }
      if (!value.is_string()) {
        findings.push_back({Violation::TypeError, key});
        continue;
      }
      std::string text = detail::normalize_ws(value.get<std::string>());
      if (!text.empty()) out[*dim] = std::move(text);
    }
  } else if (raw.is_string()) {
    const std::string body = detail::strip_think_tags(raw.get<std::string>());
    const std::string lower = detail::to_lower(body);
    // Locate the first occurrence of each lead-in, then segment.
    std::vector<std::pair<size_t, Dimension>> marks;
    for (const auto& [phrase, dim] : detail::kLeadIns) {
      size_t pos = lower.find(std::string(phrase));
      if (pos != std::string::npos) marks.emplace_back(pos, dim);
    }
    std::sort(marks.begin(), marks.end());
    for (size_t i = 0; i < marks.size(); ++i) {
      size_t begin = marks[i].first;
      size_t end = (i + 1 < marks.size()) ? marks[i + 1].first : body.size();
      std::string text = detail::normalize_ws(body.substr(begin, end - begin));
      if (!text.empty()) out[marks[i].second] = std::move(text);
    }
  } else {
    findings.push_back({Violation::TypeError, "reasoning"});
    return out;
  }
  if (out.empty()) findings.push_back({Violation::EmptyRationale, "reasoning"});
  return out;
}

inline Rationale normalize_rationale(const json& raw) {
  std::vector<Finding> sink;
  return normalize_rationale(raw, sink);
}

// Parses one model reply into a RubricRecord, accumulating every finding
// rather than stopping at the first.
inline ParseResult parse_record(std::string_view raw_text) {
  ParseResult res;
  if (detail::has_forbidden_control_char(raw_text)) {
    res.findings.push_back({Violation::ControlCharacter, ""});
    return res;
  }
  json doc = json::parse(raw_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    res.findings.push_back({Violation::NotJson, ""});
    return res;
  }

  RubricRecord rec;
  auto read_score = [&](const char* key, int& out) {
    if (!doc.contains(key)) {
      res.findings.push_back({Violation::MissingField, key});
      return;
    }
    const json& v = doc.at(key);
    if (!v.is_number_integer()) {
      res.findings.push_back({Violation::TypeError, key});
      return;
    }
    const auto s = v.get<int64_t>();
    if (s < 0 || s > 10) {
      res.findings.push_back({Violation::ScoreOutOfRange, key});
      return;
    }
    out = static_cast<int>(s);
  };
  read_score("score_A", rec.score_a);
  read_score("score_B", rec.score_b);

  if (!doc.contains("better")) {
    res.findings.push_back({Violation::MissingField, "better"});
  } else if (!doc.at("better").is_string()) {
    res.findings.push_back({Violation::TypeError, "better"});
  } else if (auto b = detail::decode_better(doc.at("better").get<std::string>())) {
    rec.better = *b;
  } else {
    res.findings.push_back({Violation::TypeError, "better"});
  }

  // Canonical container key is `reasoning`; `rubric` is an accepted alias.
  const char* container =
      doc.contains("reasoning") ? "reasoning"
      : doc.contains("rubric")  ? "rubric"
                                : nullptr;
  if (!container) {
    res.findings.push_back({Violation::MissingField, "reasoning"});
  } else {
    rec.rationale = normalize_rationale(doc.at(container), res.findings);
  }

  if (!doc.contains("final_verdict")) {
    res.findings.push_back({Violation::MissingField, "final_verdict"});
  } else if (!doc.at("final_verdict").is_string()) {
    res.findings.push_back({Violation::TypeError, "final_verdict"});
  } else if (auto v = detail::decode_verdict_tag(
                 doc.at("final_verdict").get<std::string>(), res.findings)) {
    rec.final_verdict = *v;
  }

  if (res.findings.empty()) res.record = std::move(rec);
  return res;
}

// Canonical serialized form; parse_record(serialize(r)) round-trips for every
// valid record.
inline std::string serialize(const RubricRecord& rec) {
  json reasoning = json::object();
  for (const auto& [dim, text] : rec.rationale)
    reasoning[std::string(to_string(dim))] = text;
  json doc = {
      {"score_A", rec.score_a},
      {"score_B", rec.score_b},
      {"better", std::string(to_string(rec.better))},
      {"reasoning", std::move(reasoning)},
      {"final_verdict",
       "<answer>[[" + std::string(to_string(rec.final_verdict)) + "]]</answer>"},
  };
  return doc.dump();
}

// Classifies a parse outcome into the three-tier status used by the format
// reward: any parse finding is a hard violation; a lone verdict/better
// disagreement is a soft mismatch.
inline ValidationReport validate_record(const ParseResult& parsed) {
  ValidationReport report;
  if (!parsed.ok()) {
    report.status = Status::HardViolation;
    report.violations = parsed.findings;
    if (report.violations.empty())
      report.violations.push_back({Violation::NotJson, ""});
    return report;
  }
  if (parsed.record->final_verdict != parsed.record->better) {
    report.status = Status::SoftMismatch;
    report.violations.push_back({Violation::VerdictMismatch, "final_verdict"});
    return report;
  }
  report.status = Status::Valid;
  return report;
}

inline ValidationReport validate_record(std::string_view raw_text) {
  return validate_record(parse_record(raw_text));
}

}  // namespace rrt
