#include "sampcf/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sampcf {

DiscreteDistribution::DiscreteDistribution(std::vector<double> weights) {
  if (weights.empty()) throw DataError("empty distribution");
  long double total = 0.0L;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("distribution weights must be finite and >= 0");
    total += w;
  }
  if (total <= 0.0L) throw DataError("distribution weights sum to zero");

  const std::size_t n = weights.size();
  probs_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    probs_[i] = static_cast<double>(static_cast<long double>(weights[i]) / total);

  // Vose two-worklist construction. Worklists are filled in ascending id
  // order and consumed FIFO, so pairing is deterministic (lowest id first).
  // Residuals are tracked in long double to keep the implied probabilities
  // within 1e-12 of the inputs.
  cutoff_.assign(n, 1.0);
  alias_.resize(n);
  std::vector<long double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = static_cast<long double>(weights[i]) / total * n;
    alias_[i] = static_cast<std::uint32_t>(i);
  }
  std::vector<std::uint32_t> small, large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    (scaled[i] < 1.0L ? small : large).push_back(static_cast<std::uint32_t>(i));

  std::size_t small_head = 0, large_head = 0;
  while (small_head < small.size() && large_head < large.size()) {
    const std::uint32_t s = small[small_head++];
    const std::uint32_t l = large[large_head];
    cutoff_[s] = static_cast<double>(scaled[s]);
    alias_[s] = l;
    scaled[l] -= 1.0L - scaled[s];
    if (scaled[l] < 1.0L) {
      ++large_head;
      small.push_back(l);
    }
  }
  // Leftovers are exactly 1 up to rounding.
  while (small_head < small.size()) cutoff_[small[small_head++]] = 1.0;
  while (large_head < large.size()) cutoff_[large[large_head++]] = 1.0;
}

std::vector<double> DiscreteDistribution::alias_implied_probs() const {
  const std::size_t n = probs_.size();
  std::vector<long double> acc(n, 0.0L);
  for (std::size_t i = 0; i < n; ++i) {
    acc[i] += static_cast<long double>(cutoff_[i]);
    if (cutoff_[i] < 1.0) acc[alias_[i]] += 1.0L - static_cast<long double>(cutoff_[i]);
  }
  std::vector<double> implied(n);
  for (std::size_t i = 0; i < n; ++i) implied[i] = static_cast<double>(acc[i] / n);
  return implied;
}

void NoiseSpec::validate() const {
  if (kind == NoiseKind::UnigramPower && alpha < 0.0)
    throw ConfigError("noise.alpha must be >= 0, got " + std::to_string(alpha));
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "degree-unigram" || name == "unigram") return NoiseKind::DegreeUnigram;
  if (name == "uniform") return NoiseKind::Uniform;
  if (name == "unigram-power") return NoiseKind::UnigramPower;
  throw ConfigError("unknown noise.kind: " + name);
}

std::string noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::DegreeUnigram: return "degree-unigram";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::UnigramPower: return "unigram-power";
  }
  return "?";
}

Marginals build_marginals(const InteractionGraph& g) {
  if (g.num_links == 0) throw DataError("cannot build marginals of an empty graph");
  std::vector<double> user_w(g.num_users), item_w(g.num_items);
  for (Count u = 0; u < g.num_users; ++u) user_w[u] = static_cast<double>(g.user_degree(static_cast<NodeId>(u)));
  for (Count v = 0; v < g.num_items; ++v) item_w[v] = static_cast<double>(g.item_degree(static_cast<NodeId>(v)));
  return Marginals{DiscreteDistribution(std::move(user_w)), DiscreteDistribution(std::move(item_w))};
}

DiscreteDistribution build_noise(const InteractionGraph& g, const NoiseSpec& spec) {
  spec.validate();
  if (g.num_links == 0) throw DataError("cannot build a noise distribution over an empty graph");
  std::vector<double> w(g.num_items);
  switch (spec.kind) {
    case NoiseKind::DegreeUnigram:
      for (Count v = 0; v < g.num_items; ++v) w[v] = static_cast<double>(g.item_degree(static_cast<NodeId>(v)));
      break;
    case NoiseKind::Uniform:
      std::fill(w.begin(), w.end(), 1.0);
      break;
    case NoiseKind::UnigramPower:
      for (Count v = 0; v < g.num_items; ++v)
        w[v] = std::pow(static_cast<double>(g.item_degree(static_cast<NodeId>(v))), spec.alpha);
      break;
  }
  return DiscreteDistribution(std::move(w));
}

double neg_weight(NodeId item, const DiscreteDistribution& noise, const DiscreteDistribution& item_marginal) {
  const double pd = item_marginal.prob(item);
  if (pd <= 0.0)
    throw DataError("neg_weight undefined: item " + std::to_string(item) + " has zero data mass");
  return noise.prob(item) / pd;
}

std::vector<double> negative_weight_table(const InteractionGraph& g, const NoiseSpec& spec,
                                          const DiscreteDistribution& noise,
                                          const DiscreteDistribution& item_marginal) {
  std::vector<double> w(g.num_items, std::numeric_limits<double>::quiet_NaN());
  for (Count v = 0; v < g.num_items; ++v) {
    if (g.item_degree(static_cast<NodeId>(v)) == 0) continue;
    // Degree-unigram noise IS the data marginal; keep the ratio exactly 1.
    w[v] = spec.kind == NoiseKind::DegreeUnigram
               ? 1.0
               : neg_weight(static_cast<NodeId>(v), noise, item_marginal);
  }
  return w;
}

}  // namespace sampcf
