#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/graph.hpp"
#include "sampcf/rng.hpp"

namespace sampcf {

// Normalized categorical distribution over node ids with O(1) sampling via
// Walker/Vose alias tables and exact probability lookup. Immutable after
// construction; concurrent reads are fine (sampling needs a caller-owned rng).
class DiscreteDistribution {
 public:
  // Weights are normalized internally; they must be non-negative with a
  // positive sum.
  explicit DiscreteDistribution(std::vector<double> weights);

  std::size_t size() const { return probs_.size(); }
  double prob(std::size_t i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }

  std::size_t sample(CounterRng& rng) const {
    const std::size_t column = static_cast<std::size_t>(rng.next_below(probs_.size()));
    return rng.next_double() < cutoff_[column] ? column : alias_[column];
  }

  // Probabilities implied by the alias tables:
  //   p[i] = (cutoff[i] + sum over j with alias[j] == i of (1 - cutoff[j])) / n.
  // Construction keeps these within 1e-12 of probs().
  std::vector<double> alias_implied_probs() const;

 private:
  std::vector<double> probs_;
  std::vector<double> cutoff_;         // stay-probability of each column
  std::vector<std::uint32_t> alias_;   // overflow target of each column
};

enum class NoiseKind { DegreeUnigram, Uniform, UnigramPower };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::DegreeUnigram;
  double alpha = 0.75;  // exponent for UnigramPower

  void validate() const;
};

NoiseKind parse_noise_kind(const std::string& name);
std::string noise_kind_name(NoiseKind kind);

struct Marginals {
  DiscreteDistribution user;  // P_d(u) = deg(u) / num_links
  DiscreteDistribution item;  // P_d(v) = deg(v) / num_links
};

// Empirical data marginals of the positive links.
Marginals build_marginals(const InteractionGraph& g);

// Negative/noise item distribution per spec.kind.
DiscreteDistribution build_noise(const InteractionGraph& g, const NoiseSpec& spec);

// Importance weight P_n(v) / P_d(v) correcting a negative item that was
// materialized from the data marginal instead of the noise distribution.
// Undefined (throws DataError) for items the data marginal never produces.
double neg_weight(NodeId item, const DiscreteDistribution& noise, const DiscreteDistribution& item_marginal);

// Per-item table of neg_weight values. Exactly 1.0 for DegreeUnigram noise;
// items with zero data mass get NaN (they cannot appear in a data-drawn
// batch, so the entry is never read).
std::vector<double> negative_weight_table(const InteractionGraph& g, const NoiseSpec& spec,
                                          const DiscreteDistribution& noise,
                                          const DiscreteDistribution& item_marginal);

}  // namespace sampcf
