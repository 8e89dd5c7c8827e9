// End-to-end dataset build: reconcile + filter + difficulty-tag every pair,
// in stable input order, and aggregate statistics. One seed determines every
// random choice, so re-runs are byte-identical.

#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <rrt/io.hpp>
#include <rrt/pipeline.hpp>

namespace rrt {

struct PipelineRun {
  std::vector<ReconciledSample> retained;
  std::vector<json> discard_log;  // one row per non-retained pair
  std::vector<PairOutcome> outcomes;
  std::vector<std::optional<ReconcileCase>> cases;
  PipelineStats stats;
};

inline PipelineRun run_pipeline(
    const std::vector<CandidatePair>& pairs,
    const std::vector<std::vector<TeacherAnnotation>>& annotations,
    uint64_t seed, const PipelineConfig& cfg = {}) {
  if (pairs.size() != annotations.size())
    throw std::invalid_argument("one annotation set required per pair");

  PipelineRun run;
  run.outcomes.resize(pairs.size());
  run.cases.resize(pairs.size());

  for (size_t i = 0; i < pairs.size(); ++i) {
    const CandidatePair& pair = pairs[i];
    if (annotations[i].size() != 2)
      throw std::invalid_argument("exactly two teacher annotations expected for "
                                  + pair.pair_id);
    ReconcileOutcome outcome =
        reconcile(pair, annotations[i][0], annotations[i][1], seed, cfg);

    if (auto* discarded = std::get_if<Discarded>(&outcome)) {
      run.outcomes[i].discarded = discarded->reason;
      run.discard_log.push_back({
          {"pair_id", pair.pair_id},
          {"stage", "reconcile"},
          {"reason", std::string(to_string(discarded->reason))},
      });
      continue;
    }

    ReconciledSample sample = tag_difficulty(std::get<ReconciledSample>(outcome));
    run.cases[i] = sample.reconcile_case;
    const FilterResult filtered = apply_filters(sample, pair, cfg);
    if (!filtered.keep) {
      run.outcomes[i].removed_by = filtered.first();
      json rules = json::array();
      for (FilterRule r : filtered.triggered)
        rules.push_back(std::string(to_string(r)));
      run.discard_log.push_back({
          {"pair_id", pair.pair_id},
          {"stage", "filter"},
          {"reason", std::string(to_string(*filtered.first()))},
          {"all_rules", std::move(rules)},
      });
      continue;
    }

    run.outcomes[i].retained = true;
    run.retained.push_back(std::move(sample));
  }

  run.stats = compute_stats(pairs, annotations, run.outcomes, run.cases);
  return run;
}

inline void write_retained(std::ostream& out, const PipelineRun& run) {
  for (const auto& sample : run.retained) write_jsonl(out, to_json(sample));
}

inline void write_discards(std::ostream& out, const PipelineRun& run) {
  for (const auto& row : run.discard_log) write_jsonl(out, row);
}

// Plain-text reliability table mirroring the per-generator, per-teacher
// breakdown of the stats report.
inline void write_stats_table(std::ostream& out, const PipelineStats& st) {
  out << "pairs=" << st.total_pairs << " retained=" << st.retained
      << " (case I=" << st.case_i << ", case II=" << st.case_ii << ")"
      << " conflicts=" << st.conflicts << " ties=" << st.ties
      << " malformed=" << st.malformed << " rule-removed=" << st.removed_total()
      << "\n\n";
  out << "generator pair | teacher | weak>strong % | ties % | discard %\n";
  for (const auto& [gen, gp] : st.by_generator_pair) {
    for (const auto& [tid, slice] : gp.by_teacher) {
      char line[256];
      std::snprintf(line, sizeof(line), "%s | %s | %.2f | %.2f | %.2f\n",
                    gen.c_str(), tid.c_str(), slice.weak_over_strong_rate(),
                    slice.tie_rate(), gp.discard_rate());
      out << line;
    }
  }
}

}  // namespace rrt
