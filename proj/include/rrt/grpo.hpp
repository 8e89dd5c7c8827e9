// Group-normalized advantages and the clipped token-level policy loss,
// evaluated numerically from externally supplied per-token traces. No model
// is evaluated here; ratios and KL values arrive pre-computed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rrt {

struct RewardGroup {
  std::vector<double> rewards;  // k >= 1
  double epsilon = 1e-8;        // variance guard, distinct from the clip radius
};

struct TokenTrace {
  // ratios[i][t] = pi_theta / pi_old for token t of candidate i; kls[i][t] is
  // the per-token KL to the reference policy. kls may be empty when beta = 0.
  std::vector<std::vector<double>> ratios;
  std::vector<std::vector<double>> kls;
};

struct LossConfig {
  double clip_eps = 0.2;
  double beta = 0.0;
};

using GroupAdvantage = std::vector<double>;

// A_i = (r_i - mu) / (sigma + eps) with population standard deviation.
// Constant groups (including k = 1) yield all-zero advantages.
inline GroupAdvantage group_advantages(const RewardGroup& g) {
  if (g.rewards.empty()) throw std::invalid_argument("empty reward group");
  const size_t k = g.rewards.size();
  const bool constant =
      std::all_of(g.rewards.begin(), g.rewards.end(),
                  [&](double r) { return r == g.rewards.front(); });
  if (constant) return GroupAdvantage(k, 0.0);

  double mu = 0;
  for (double r : g.rewards) mu += r;
  mu /= static_cast<double>(k);
  double var = 0;
  for (double r : g.rewards) var += (r - mu) * (r - mu);
  var /= static_cast<double>(k);
  const double denom = std::sqrt(var) + g.epsilon;

  GroupAdvantage adv(k);
  for (size_t i = 0; i < k; ++i) adv[i] = (g.rewards[i] - mu) / denom;
  return adv;
}

// -(1/k) sum_i (1/|y_i|) sum_t [ min(rho*A_i, clip(rho)*A_i) - beta*kl ]
inline double clipped_loss(const GroupAdvantage& adv, const TokenTrace& trace,
                           const LossConfig& cfg) {
  const size_t k = adv.size();
  if (trace.ratios.size() != k)
    throw std::invalid_argument("trace/advantage length mismatch");
  if (cfg.beta != 0.0 && trace.kls.size() != k)
    throw std::invalid_argument("trace/kl length mismatch");

  double total = 0;
  for (size_t i = 0; i < k; ++i) {
    const auto& ratios = trace.ratios[i];
    if (ratios.empty())
      throw std::invalid_argument("empty token sequence in trace");
    if (cfg.beta != 0.0 && trace.kls[i].size() != ratios.size())
      throw std::invalid_argument("ratio/kl token count mismatch");
    double inner = 0;
    for (size_t t = 0; t < ratios.size(); ++t) {
      const double rho = ratios[t];
      const double clipped =
          std::clamp(rho, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      double term = std::min(rho * adv[i], clipped * adv[i]);
      if (cfg.beta != 0.0) term -= cfg.beta * trace.kls[i][t];
      inner += term;
    }
    total += inner / static_cast<double>(ratios.size());
  }
  return -total / static_cast<double>(k);
}

}  // namespace rrt
