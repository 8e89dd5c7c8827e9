// rrt: command-line front end for the rubric reward toolkit.
//
// Exit codes: 0 success, 1 data error, 2 usage error, 3 network exhaustion.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <rrt/client.hpp>
#include <rrt/eval.hpp>
#include <rrt/grpo.hpp>
#include <rrt/io.hpp>
#include <rrt/pipeline_run.hpp>
#include <rrt/prompts.hpp>
#include <rrt/reward.hpp>
#include <rrt/rubric.hpp>

namespace {

using rrt::json;

struct NetworkExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  uint64_t seed = 0;
  rrt::ReplyMode mode = rrt::ReplyMode::Strict;
  rrt::RewardWeights weights;
  rrt::PipelineConfig pipeline;
  std::map<std::string, rrt::EndpointConfig> endpoints;
};

rrt::EndpointConfig endpoint_from_json(const std::string& name, const json& j) {
  rrt::EndpointConfig e;
  e.name = name;
  e.base_url = j.at("base_url").get<std::string>();
  e.path = j.value("path", e.path);
  e.model = j.value("model", "");
  e.api_key_env = j.value("api_key_env", "");
  e.max_retries = j.value("max_retries", e.max_retries);
  e.backoff_base = std::chrono::milliseconds(j.value("backoff_base_ms", 200));
  e.backoff_cap = std::chrono::milliseconds(j.value("backoff_cap_ms", 5000));
  e.max_concurrency = j.value("max_concurrency", e.max_concurrency);
  e.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
  e.temperature = j.value("temperature", e.temperature);
  e.top_p = j.value("top_p", e.top_p);
  e.max_tokens = j.value("max_tokens", e.max_tokens);
  return e;
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in = rrt::open_input(path);
  json doc = json::parse(in);
  cfg.seed = doc.value("seed", uint64_t{0});
  if (doc.value("mode", "strict") == "lenient") cfg.mode = rrt::ReplyMode::Lenient;
  if (doc.contains("weights")) {
    const json& w = doc.at("weights");
    cfg.weights.lambda_pref = w.value("lambda_pref", cfg.weights.lambda_pref);
    cfg.weights.lambda_rub = w.value("lambda_rub", cfg.weights.lambda_rub);
    cfg.weights.lambda_fmt = w.value("lambda_fmt", cfg.weights.lambda_fmt);
    cfg.weights.omega_dir = w.value("omega_dir", cfg.weights.omega_dir);
    cfg.weights.omega_score = w.value("omega_score", cfg.weights.omega_score);
    cfg.weights.omega_cover = w.value("omega_cover", cfg.weights.omega_cover);
    cfg.weights.omega_cmp = w.value("omega_cmp", cfg.weights.omega_cmp);
    cfg.weights.downweight_negative_cmp =
        w.value("downweight_negative_cmp", cfg.weights.downweight_negative_cmp);
  }
  if (doc.contains("pipeline")) {
    const json& p = doc.at("pipeline");
    cfg.pipeline.score_tau = p.value("score_tau", cfg.pipeline.score_tau);
    cfg.pipeline.r5_threshold = p.value("r5_threshold", cfg.pipeline.r5_threshold);
    cfg.pipeline.merge_char_budget =
        p.value("merge_char_budget", cfg.pipeline.merge_char_budget);
    cfg.pipeline.jaccard_threshold =
        p.value("jaccard_threshold", cfg.pipeline.jaccard_threshold);
  }
  if (doc.contains("endpoints")) {
    for (const auto& [name, block] : doc.at("endpoints").items())
      cfg.endpoints.emplace(name, endpoint_from_json(name, block));
  }
  return cfg;
}

const rrt::EndpointConfig& require_endpoint(const RunConfig& cfg,
                                            const std::string& name) {
  auto it = cfg.endpoints.find(name);
  if (it == cfg.endpoints.end())
    throw std::runtime_error("endpoint not found in config: " + name);
  return it->second;
}

// Loads pairs and groups annotations (two per pair, config teacher order) for
// the pipeline commands.
void load_pairs_and_annotations(
    const std::string& pairs_path, const std::string& annotations_path,
    std::vector<rrt::CandidatePair>& pairs,
    std::vector<std::vector<rrt::TeacherAnnotation>>& grouped) {
  std::map<std::string, size_t> index;
  {
    auto in = rrt::open_input(pairs_path);
    rrt::for_each_jsonl(in, [&](const json& row, size_t) {
      index.emplace(row.at("pair_id").get<std::string>(), pairs.size());
      pairs.push_back(rrt::pair_from_json(row));
    });
  }
  grouped.resize(pairs.size());
  {
    auto in = rrt::open_input(annotations_path);
    rrt::for_each_jsonl(in, [&](const json& row, size_t lineno) {
      const std::string pair_id = row.at("pair_id").get<std::string>();
      auto it = index.find(pair_id);
      if (it == index.end())
        throw std::runtime_error("annotation line " + std::to_string(lineno) +
                                 " references unknown pair " + pair_id);
      grouped[it->second].push_back(rrt::make_annotation(
          row.at("teacher_id").get<std::string>(), pair_id,
          row.at("raw_reply").get<std::string>()));
    });
  }
}

rrt::Verdict verdict_from_string(const std::string& s) {
  if (s == "A") return rrt::Verdict::A;
  if (s == "B") return rrt::Verdict::B;
  if (s == "equal" || s == "Equal") return rrt::Verdict::Equal;
  throw std::runtime_error("bad verdict label: " + s);
}

// --- Subcommand bodies -------------------------------------------------------

void cmd_validate(const std::string& in_path, const std::string& out_path) {
  auto in = rrt::open_input(in_path);
  auto out = rrt::open_output(out_path);
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    const std::string raw = row.at("raw_reply").get<std::string>();
    const rrt::ValidationReport report = rrt::validate_record(raw);
    json violations = json::array();
    for (const auto& f : report.violations)
      violations.push_back({{"code", std::string(to_string(f.code))},
                            {"field", f.field}});
    rrt::write_jsonl(out, {{"status", std::string(to_string(report.status))},
                           {"violations", std::move(violations)}});
  });
}

void cmd_score(const RunConfig& cfg, const std::string& in_path,
               const std::string& refs_path, const std::string& out_path) {
  std::map<size_t, rrt::ReferenceLabel> refs;
  if (!refs_path.empty()) {
    auto rin = rrt::open_input(refs_path);
    size_t i = 0;
    rrt::for_each_jsonl(rin, [&](const json& row, size_t) {
      refs.emplace(i++, rrt::reference_from_json(row));
    });
  }
  auto in = rrt::open_input(in_path);
  auto out = rrt::open_output(out_path);
  size_t i = 0;
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    std::optional<rrt::ReferenceLabel> ref;
    if (row.contains("reference"))
      ref = rrt::reference_from_json(row.at("reference"));
    else if (auto it = refs.find(i); it != refs.end())
      ref = it->second;
    const auto breakdown = rrt::score_reply(
        row.at("raw_reply").get<std::string>(), ref, cfg.weights);
    rrt::write_jsonl(out, rrt::to_json(breakdown));
    ++i;
  });
}

void cmd_advantage(const std::string& in_path, const std::string& out_path) {
  auto in = rrt::open_input(in_path);
  auto out = rrt::open_output(out_path);
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    rrt::RewardGroup g;
    g.rewards = row.at("rewards").get<std::vector<double>>();
    g.epsilon = row.value("epsilon", g.epsilon);
    rrt::write_jsonl(out, {{"advantages", rrt::group_advantages(g)}});
  });
}

void cmd_loss_eval(const std::string& in_path, const std::string& out_path) {
  auto in = rrt::open_input(in_path);
  auto out = rrt::open_output(out_path);
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    rrt::GroupAdvantage adv;
    if (row.contains("advantages")) {
      adv = row.at("advantages").get<std::vector<double>>();
    } else {
      rrt::RewardGroup g;
      g.rewards = row.at("rewards").get<std::vector<double>>();
      g.epsilon = row.value("epsilon", g.epsilon);
      adv = rrt::group_advantages(g);
    }
    rrt::TokenTrace trace;
    trace.ratios = row.at("ratios").get<std::vector<std::vector<double>>>();
    if (row.contains("kls"))
      trace.kls = row.at("kls").get<std::vector<std::vector<double>>>();
    rrt::LossConfig lc;
    lc.clip_eps = row.value("clip_eps", lc.clip_eps);
    lc.beta = row.value("beta", lc.beta);
    rrt::write_jsonl(out, {{"loss", rrt::clipped_loss(adv, trace, lc)}});
  });
}

void cmd_reconcile(const RunConfig& cfg, const std::string& pairs_path,
                   const std::string& annotations_path,
                   const std::string& out_path,
                   const std::string& discards_path,
                   const std::string& stats_path) {
  std::vector<rrt::CandidatePair> pairs;
  std::vector<std::vector<rrt::TeacherAnnotation>> annotations;
  load_pairs_and_annotations(pairs_path, annotations_path, pairs, annotations);
  const rrt::PipelineRun run =
      rrt::run_pipeline(pairs, annotations, cfg.seed, cfg.pipeline);
  {
    auto out = rrt::open_output(out_path);
    rrt::write_retained(out, run);
  }
  if (!discards_path.empty()) {
    auto out = rrt::open_output(discards_path);
    rrt::write_discards(out, run);
  }
  if (!stats_path.empty()) {
    auto out = rrt::open_output(stats_path);
    out << rrt::to_json(run.stats).dump(2) << '\n';
  }
}

void cmd_filter(const RunConfig& cfg, const std::string& in_path,
                const std::string& pairs_path, const std::string& out_path,
                const std::string& removed_path) {
  std::map<std::string, rrt::CandidatePair> pairs;
  {
    auto in = rrt::open_input(pairs_path);
    rrt::for_each_jsonl(in, [&](const json& row, size_t) {
      rrt::CandidatePair p = rrt::pair_from_json(row);
      pairs.emplace(p.pair_id, std::move(p));
    });
  }
  auto in = rrt::open_input(in_path);
  auto out = rrt::open_output(out_path);
  std::optional<std::ofstream> removed;
  if (!removed_path.empty()) removed = rrt::open_output(removed_path);
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    rrt::ReconciledSample s = rrt::sample_from_json(row);
    auto it = pairs.find(s.pair_id);
    if (it == pairs.end())
      throw std::runtime_error("no pair for sample " + s.pair_id);
    const rrt::FilterResult res = rrt::apply_filters(s, it->second, cfg.pipeline);
    if (res.keep) {
      rrt::write_jsonl(out, row);
    } else if (removed) {
      json rules = json::array();
      for (rrt::FilterRule r : res.triggered)
        rules.push_back(std::string(to_string(r)));
      rrt::write_jsonl(*removed, {{"pair_id", s.pair_id},
                                  {"reason", std::string(to_string(*res.first()))},
                                  {"all_rules", std::move(rules)}});
    }
  });
}

void cmd_stats(const RunConfig& cfg, const std::string& pairs_path,
               const std::string& annotations_path,
               const std::string& out_path) {
  std::vector<rrt::CandidatePair> pairs;
  std::vector<std::vector<rrt::TeacherAnnotation>> annotations;
  load_pairs_and_annotations(pairs_path, annotations_path, pairs, annotations);
  const rrt::PipelineRun run =
      rrt::run_pipeline(pairs, annotations, cfg.seed, cfg.pipeline);
  if (!out_path.empty()) {
    auto out = rrt::open_output(out_path);
    out << rrt::to_json(run.stats).dump(2) << '\n';
  }
  rrt::write_stats_table(std::cout, run.stats);
}

void cmd_difficulty(const std::string& in_path, const std::string& out_path) {
  auto in = rrt::open_input(in_path);
  auto out = rrt::open_output(out_path);
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    rrt::ReconciledSample s = rrt::tag_difficulty(rrt::sample_from_json(row));
    rrt::write_jsonl(out, rrt::to_json(s));
  });
}

void cmd_audit_sample(const RunConfig& cfg, const std::string& in_path,
                      double fraction, const std::string& out_path) {
  std::vector<json> rows;
  {
    auto in = rrt::open_input(in_path);
    rrt::for_each_jsonl(in, [&](const json& row, size_t) { rows.push_back(row); });
  }
  const auto picked = rrt::sample_audit_set(rows, fraction, cfg.seed);
  auto out = rrt::open_output(out_path);
  for (json row : picked) {
    row["audit_only"] = true;
    rrt::write_jsonl(out, row);
  }
}

void cmd_generate(const RunConfig& cfg, const std::string& strong_name,
                  const std::string& weak_name, const std::string& queries_path,
                  const std::string& out_path, const std::string& audit_path) {
  std::optional<std::ofstream> audit_file;
  rrt::AuditSink sink;
  if (!audit_path.empty()) {
    audit_file = rrt::open_output(audit_path);
    sink = [&](const json& line) { rrt::write_jsonl(*audit_file, line); };
  }
  rrt::ChatClient strong(require_endpoint(cfg, strong_name), cfg.seed, sink);
  rrt::ChatClient weak(require_endpoint(cfg, weak_name), cfg.seed, sink);
  auto in = rrt::open_input(queries_path);
  auto out = rrt::open_output(out_path);
  bool exhausted = false;
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    auto modality =
        rrt::modality_from_string(row.value("modality", "text"));
    if (!modality) throw std::runtime_error("unknown modality");
    const auto res = rrt::generate_candidates(
        row.at("pair_id").get<std::string>(), *modality,
        row.value("media_path", ""), row.at("question").get<std::string>(),
        strong, weak);
    if (res.pair) {
      rrt::write_jsonl(out, rrt::to_json(*res.pair));
    } else {
      exhausted = true;
      rrt::write_jsonl(out, {{"pair_id", row.at("pair_id")},
                             {"error", std::string(to_string(*res.error))}});
    }
  });
  if (exhausted) throw NetworkExhausted("generation failed for some queries");
}

void cmd_annotate(const RunConfig& cfg, const std::string& teacher_name,
                  const std::string& pairs_path, const std::string& out_path,
                  const std::string& audit_path, bool swap_order) {
  std::optional<std::ofstream> audit_file;
  rrt::AuditSink sink;
  if (!audit_path.empty()) {
    audit_file = rrt::open_output(audit_path);
    sink = [&](const json& line) { rrt::write_jsonl(*audit_file, line); };
  }
  rrt::ChatClient teacher(require_endpoint(cfg, teacher_name), cfg.seed, sink);
  auto in = rrt::open_input(pairs_path);
  auto out = rrt::open_output(out_path);
  bool exhausted = false;
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    rrt::CandidatePair pair = rrt::pair_from_json(row);
    auto emit = [&](const rrt::CandidatePair& p, bool swapped) {
      const auto res = rrt::annotate_pair(p, teacher, cfg.mode);
      if (res.error == rrt::ClientError::Exhausted ||
          res.error == rrt::ClientError::Timeout)
        exhausted = true;
      json line = {
          {"pair_id", p.pair_id},
          {"teacher_id", res.annotation.teacher_id},
          {"raw_reply", res.annotation.raw_reply},
          {"status", std::string(to_string(res.annotation.validation.status))},
          {"attempts", res.attempts},
          {"swapped", swapped},
      };
      if (res.error) line["error"] = std::string(to_string(*res.error));
      rrt::write_jsonl(out, line);
    };
    emit(pair, false);
    if (swap_order) {
      std::swap(pair.response_a, pair.response_b);
      std::swap(pair.generator_a, pair.generator_b);
      emit(pair, true);
    }
  });
  if (exhausted) throw NetworkExhausted("annotation failed for some pairs");
}

void cmd_eval(const std::string& bench_path, const std::string& pred_path,
              const std::string& out_path, bool half_credit) {
  std::vector<rrt::BenchmarkItem> items;
  {
    auto in = rrt::open_input(bench_path);
    rrt::for_each_jsonl(in, [&](const json& row, size_t) {
      items.push_back(rrt::benchmark_item_from_json(row));
    });
  }
  std::map<std::string, rrt::Verdict> predictions;
  {
    auto in = rrt::open_input(pred_path);
    rrt::for_each_jsonl(in, [&](const json& row, size_t) {
      predictions[row.at("item_id").get<std::string>()] =
          verdict_from_string(row.at("prediction").get<std::string>());
    });
  }
  const rrt::EvalReport report =
      rrt::preference_accuracy(predictions, items, half_credit);
  json by_modality = json::object();
  for (const auto& [m, bucket] : report.by_modality)
    by_modality[std::string(to_string(m))] = rrt::round1(bucket.pct());
  json doc = {
      {"overall_pct", rrt::round1(report.overall.pct())},
      {"by_modality", std::move(by_modality)},
      {"hard_pct", rrt::round1(report.hard.pct())},
      {"easy_pct", rrt::round1(report.easy.pct())},
  };
  if (!out_path.empty()) {
    auto out = rrt::open_output(out_path);
    out << doc.dump(2) << '\n';
  }
  std::cout << doc.dump(2) << '\n';
}

void cmd_bon(const RunConfig& cfg, const std::string& judge_name,
             const std::string& in_path, const std::string& out_path,
             bool double_orientation, bool use_self_consistency) {
  std::optional<rrt::ChatClient> judge;
  if (!use_self_consistency)
    judge.emplace(require_endpoint(cfg, judge_name), cfg.seed);
  auto in = rrt::open_input(in_path);
  auto out = rrt::open_output(out_path);
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    const auto candidates = row.at("candidates").get<std::vector<std::string>>();
    if (use_self_consistency) {
      const auto res = rrt::self_consistency(candidates);
      rrt::write_jsonl(out, {{"group_id", row.value("group_id", "")},
                             {"chosen", res.chosen},
                             {"answer", res.answer}});
      return;
    }
    auto modality = rrt::modality_from_string(row.value("modality", "text"));
    const std::string question = row.value("question", "");
    const std::string media = row.value("media_path", "");
    rrt::PairwiseJudge pairwise = [&](size_t a, size_t b) {
      const auto prompt = rrt::render_prompt(
          rrt::get_template(rrt::TemplateId::Inference),
          {{"modality", std::string(to_string(*modality))},
           {"modality_path", media},
           {"question", question},
           {"answer_a", candidates[a]},
           {"answer_b", candidates[b]}});
      const auto chat = judge->chat(prompt, *modality, media);
      if (!chat.ok) throw std::runtime_error("judge call failed");
      rrt::ClientError err{};
      auto payload = rrt::extract_reply_json(chat.reply, cfg.mode, err);
      if (!payload) throw std::runtime_error("judge reply not parseable");
      const auto parsed = rrt::parse_record(*payload);
      if (!parsed.record) throw std::runtime_error("judge record invalid");
      rrt::JudgeDecision d;
      d.verdict = parsed.record->final_verdict;
      d.score_a = parsed.record->score_a;
      d.score_b = parsed.record->score_b;
      return d;
    };
    const auto res =
        rrt::bon_select(candidates.size(), pairwise, double_orientation);
    json log = json::array();
    for (const auto& m : res.log)
      log.push_back({{"a", m.a},
                     {"b", m.b},
                     {"result", std::string(to_string(m.result))},
                     {"judge_failed", m.judge_failed}});
    rrt::write_jsonl(out, {{"group_id", row.value("group_id", "")},
                           {"chosen", res.chosen},
                           {"wins", res.wins},
                           {"log", std::move(log)}});
  });
}

void cmd_kappa(const std::string& in_path) {
  rrt::RatingMatrix m;
  auto in = rrt::open_input(in_path);
  rrt::for_each_jsonl(in, [&](const json& row, size_t) {
    std::vector<rrt::Verdict> ratings;
    for (const auto& r : row.at("ratings"))
      ratings.push_back(verdict_from_string(r.get<std::string>()));
    m.ratings.push_back(std::move(ratings));
    if (row.contains("acceptance"))
      m.acceptance.push_back(row.at("acceptance").get<std::vector<bool>>());
  });
  json doc = {{"fleiss_kappa", rrt::fleiss_kappa(m)}};
  json majority = json::array();
  for (rrt::Verdict v : rrt::majority_vote(m))
    majority.push_back(std::string(to_string(v)));
  doc["majority"] = std::move(majority);
  if (!m.acceptance.empty())
    doc["rationale_acceptance_pct"] = rrt::rationale_acceptance(m);
  std::cout << doc.dump(2) << '\n';
}

void cmd_report(double base, double next, const std::string& timings_path) {
  json doc = json::object();
  if (base > 0)
    doc["relative_improvement_pct"] = rrt::relative_improvement(base, next);
  if (!timings_path.empty()) {
    auto in = rrt::open_input(timings_path);
    json rows = json::array();
    rrt::for_each_jsonl(in, [&](const json& row, size_t) {
      std::vector<rrt::LatencySample> timings;
      for (const auto& t : row.at("timings"))
        timings.push_back({t.at("tokens").get<double>(),
                           t.at("seconds").get<double>()});
      const auto gains = row.at("gains_pp").get<std::vector<double>>();
      const auto r = rrt::latency_gain_report(row.value("label", ""), timings, gains);
      rows.push_back({{"label", r.label},
                      {"mean_tokens", r.mean_tokens},
                      {"mean_seconds", r.mean_seconds},
                      {"mean_gain_pp", r.mean_gain_pp}});
    });
    doc["latency_gain"] = std::move(rows);
  }
  std::cout << doc.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rubric-grounded reward toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  uint64_t seed_flag = 0;
  bool seed_set = false;
  std::string mode_flag;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed_flag, "run seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--mode", mode_flag, "strict|lenient reply parsing");

  // Per-subcommand options.
  std::string in_path, out_path, refs_path, pairs_path, annotations_path,
      discards_path, stats_path, removed_path, bench_path, pred_path,
      queries_path, audit_path, strong_name, weak_name, teacher_name,
      judge_name, timings_path;
  double fraction = 0.05, base_pct = 0, new_pct = 0;
  bool half_credit = false, double_orientation = false, swap_order = false,
       use_self_consistency = false;

  auto* validate = app.add_subcommand("validate", "validate raw judgment replies");
  validate->add_option("--in", in_path)->required();
  validate->add_option("--out", out_path)->required();

  auto* score = app.add_subcommand("score", "compute reward breakdowns");
  score->add_option("--in", in_path)->required();
  score->add_option("--refs", refs_path);
  score->add_option("--out", out_path)->required();

  auto* generate = app.add_subcommand("generate", "generate candidate pairs");
  generate->add_option("--strong", strong_name)->required();
  generate->add_option("--weak", weak_name)->required();
  generate->add_option("--queries", queries_path)->required();
  generate->add_option("--out", out_path)->required();
  generate->add_option("--audit-log", audit_path);

  auto* annotate = app.add_subcommand("annotate", "query a teacher for judgments");
  annotate->add_option("--teacher", teacher_name)->required();
  annotate->add_option("--pairs", pairs_path)->required();
  annotate->add_option("--out", out_path)->required();
  annotate->add_option("--audit-log", audit_path);
  annotate->add_flag("--swap-order", swap_order,
                     "double pass with swapped candidate order");

  auto* reconcile = app.add_subcommand("reconcile", "reconcile teacher pairs");
  reconcile->add_option("--pairs", pairs_path)->required();
  reconcile->add_option("--annotations", annotations_path)->required();
  reconcile->add_option("--out", out_path)->required();
  reconcile->add_option("--discards", discards_path);
  reconcile->add_option("--stats", stats_path);

  auto* filter = app.add_subcommand("filter", "apply rules R1-R6");
  filter->add_option("--in", in_path)->required();
  filter->add_option("--pairs", pairs_path)->required();
  filter->add_option("--out", out_path)->required();
  filter->add_option("--removed", removed_path);

  auto* stats = app.add_subcommand("stats", "reliability statistics");
  stats->add_option("--pairs", pairs_path)->required();
  stats->add_option("--annotations", annotations_path)->required();
  stats->add_option("--out", out_path);

  auto* difficulty = app.add_subcommand("difficulty", "tag hard/easy margins");
  difficulty->add_option("--in", in_path)->required();
  difficulty->add_option("--out", out_path)->required();

  auto* audit = app.add_subcommand("audit-sample", "sample discarded conflicts");
  audit->add_option("--in", in_path)->required();
  audit->add_option("--fraction", fraction)->check(CLI::Range(0.0, 1.0));
  audit->add_option("--out", out_path)->required();

  auto* advantage = app.add_subcommand("advantage", "group-normalized advantages");
  advantage->add_option("--in", in_path)->required();
  advantage->add_option("--out", out_path)->required();

  auto* loss_eval = app.add_subcommand("loss-eval", "clipped policy loss");
  loss_eval->add_option("--in", in_path)->required();
  loss_eval->add_option("--out", out_path)->required();

  auto* eval = app.add_subcommand("eval", "preference accuracy report");
  eval->add_option("--bench", bench_path)->required();
  eval->add_option("--pred", pred_path)->required();
  eval->add_option("--out", out_path);
  eval->add_flag("--half-credit-ties", half_credit);

  auto* bon = app.add_subcommand("bon", "best-of-N selection");
  bon->add_option("--judge", judge_name);
  bon->add_option("--in", in_path)->required();
  bon->add_option("--out", out_path)->required();
  bon->add_flag("--double-orientation", double_orientation);
  bon->add_flag("--self-consistency", use_self_consistency);

  auto* kappa = app.add_subcommand("kappa", "inter-annotator agreement");
  kappa->add_option("--in", in_path)->required();

  auto* report = app.add_subcommand("report", "relative-improvement and latency");
  report->add_option("--base", base_pct);
  report->add_option("--new", new_pct);
  report->add_option("--timings", timings_path);

  // Let --config/--seed/--mode appear after the subcommand name as well.
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed_set) cfg.seed = seed_flag;
    if (mode_flag == "strict") cfg.mode = rrt::ReplyMode::Strict;
    else if (mode_flag == "lenient") cfg.mode = rrt::ReplyMode::Lenient;
    else if (!mode_flag.empty()) throw std::runtime_error("bad --mode value");

    if (*validate) cmd_validate(in_path, out_path);
    else if (*score) cmd_score(cfg, in_path, refs_path, out_path);
    else if (*generate)
      cmd_generate(cfg, strong_name, weak_name, queries_path, out_path, audit_path);
    else if (*annotate)
      cmd_annotate(cfg, teacher_name, pairs_path, out_path, audit_path, swap_order);
    else if (*reconcile)
      cmd_reconcile(cfg, pairs_path, annotations_path, out_path, discards_path,
                    stats_path);
    else if (*filter) cmd_filter(cfg, in_path, pairs_path, out_path, removed_path);
    else if (*stats) cmd_stats(cfg, pairs_path, annotations_path, out_path);
    else if (*difficulty) cmd_difficulty(in_path, out_path);
    else if (*audit) cmd_audit_sample(cfg, in_path, fraction, out_path);
    else if (*advantage) cmd_advantage(in_path, out_path);
    else if (*loss_eval) cmd_loss_eval(in_path, out_path);
    else if (*eval) cmd_eval(bench_path, pred_path, out_path, half_credit);
    else if (*bon)
      cmd_bon(cfg, judge_name, in_path, out_path, double_orientation,
              use_self_consistency);
    else if (*kappa) cmd_kappa(in_path);
    else if (*report) cmd_report(base_pct, new_pct, timings_path);
  } catch (const NetworkExhausted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
