#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/distribution.hpp"
#include "sampcf/graph.hpp"
#include "sampcf/rng.hpp"

namespace sampcf {

enum class Strategy { Iid, Negative, Stratified, NegSharing, StratifiedNS };

Strategy parse_strategy(const std::string& name);
std::string strategy_name(Strategy s);

// How each batch's positive links are obtained:
//   Shuffle  – epoch plan; every training link appears exactly once per epoch
//              (strata are shuffled at stratum granularity for the
//              stratified variants). Used for training.
//   IidDraw  – fresh independent draws per batch (links ~ uniform, strata
//              items ~ P_d(v), stratum users ~ P_d(u|v) with replacement).
//              This is the regime the unbiasedness analysis assumes; the
//              enumeration and Monte Carlo oracles run in this mode.
enum class PositiveSource { Shuffle, IidDraw };

struct SamplerConfig {
  Strategy strategy = Strategy::Negative;
  Count batch_positives = 512;        // b: positive links per full batch
  Count negatives_per_positive = 10;  // k: drawn negatives per positive
  Count stratum_size = 4;             // s: positives per stratum
  std::uint64_t seed = 0;
  PositiveSource source = PositiveSource::Shuffle;
  // When set, grid pairs that are positive links elsewhere in the training
  // graph get weight 0 instead of counting as negatives.
  bool exclude_known_positives = false;

  bool stratified() const {
    return strategy == Strategy::Stratified || strategy == Strategy::StratifiedNS;
  }
  bool dense() const {
    return strategy == Strategy::NegSharing || strategy == Strategy::StratifiedNS;
  }
  void validate() const;
};

struct PosLink {
  std::uint32_t user_slot = 0;
  std::uint32_t item_slot = 0;
};

struct NegLink {
  std::uint32_t user_slot = 0;
  std::uint32_t item_slot = 0;
  double weight = 1.0;       // P_n/P_d correction (1 for directly drawn noise)
  std::uint32_t pos_index = 0;  // positive this negative is attached to
};

// Shared-negative block. Columns are indexed by positive (NegSharing) or by
// stratum (StratifiedNS); distinct columns may map to the same item slot, in
// which case the interaction is computed once but the loss terms keep their
// multiplicity. The negative partners of positive i are all columns except
// pos_col[i] (minus any masked ones).
struct DenseGrid {
  std::vector<std::uint32_t> col_item_slot;  // column -> item slot
  std::vector<double> col_weight;            // column -> P_n/P_d weight
  std::vector<std::uint32_t> pos_col;        // positive index -> own column
  std::vector<std::uint8_t> masked;          // optional, positives.size() x cols

  std::size_t cols() const { return col_item_slot.size(); }
  bool is_masked(std::size_t pos, std::size_t col) const {
    return !masked.empty() && masked[pos * cols() + col] != 0;
  }
};

struct MiniBatch {
  Strategy strategy = Strategy::Iid;
  std::vector<NodeId> users;  // slot -> user id (unique, first-appearance order)
  std::vector<NodeId> items;  // slot -> item id
  std::vector<PosLink> positives;
  std::vector<NegLink> explicit_negatives;  // empty when dense
  DenseGrid grid;                           // cols() == 0 when explicit
  bool dense = false;
  // No usable negative term for at least one positive (single-column grid).
  bool degenerate = false;

  Count negative_term_count() const;
  Count interaction_count() const;  // vec: links scored; mat: grid cells
};

// One stratum: an item with its sampled positive users and (for plain
// stratified sampling) the negative users drawn from P_d(u).
struct StratumDraw {
  NodeId item = 0;
  std::vector<NodeId> users;
  std::vector<NodeId> neg_users;  // k per positive user; empty for StratifiedNS
};

// Deterministic batch construction from explicit draws. The Sampler feeds
// these from its rng; oracle tests enumerate the draw space directly.
MiniBatch build_iid_batch(const std::vector<Link>& positives, const std::vector<Link>& negatives,
                          Count k);
MiniBatch build_negative_batch(const std::vector<Link>& positives,
                               const std::vector<NodeId>& neg_items, Count k);
MiniBatch build_stratified_batch(const std::vector<StratumDraw>& strata,
                                 const std::vector<double>& neg_weight_by_item, Count k);
MiniBatch build_neg_sharing_batch(const std::vector<Link>& positives,
                                  const std::vector<double>& neg_weight_by_item,
                                  const InteractionGraph* mask_graph = nullptr);
MiniBatch build_stratified_ns_batch(const std::vector<StratumDraw>& strata,
                                    const std::vector<double>& neg_weight_by_item,
                                    const InteractionGraph* mask_graph = nullptr);

// Draws batches for one strategy over an immutable training graph. Owns its
// rng stream and epoch cursor; one instance per logical training thread.
class Sampler {
 public:
  Sampler(const InteractionGraph& g, const SamplerConfig& cfg, const NoiseSpec& noise_spec);

  // Rebuilds and reshuffles the epoch plan (no-op ordering for IidDraw).
  void start_epoch();
  // Next batch. Shuffle mode consumes the epoch plan batches_per_epoch()
  // at a time (the last batch of an epoch may be short) and rolls into a
  // fresh shuffle automatically.
  MiniBatch next_batch();
  Count batches_per_epoch() const { return batches_per_epoch_; }
  Count links_per_epoch() const { return graph_->num_links; }

  const Marginals& marginals() const { return marginals_; }
  const DiscreteDistribution& noise() const { return noise_; }
  const std::vector<double>& neg_weights() const { return neg_w_; }
  const SamplerConfig& config() const { return cfg_; }
  const InteractionGraph& graph() const { return *graph_; }

 private:
  std::vector<Link> draw_positive_links();
  std::vector<StratumDraw> draw_strata(bool with_neg_users);

  const InteractionGraph* graph_;
  SamplerConfig cfg_;
  Marginals marginals_;
  DiscreteDistribution noise_;
  std::vector<double> neg_w_;
  CounterRng rng_;
  std::vector<Link> links_;

  Count batches_per_epoch_ = 0;
  Count strata_per_batch_ = 0;
  // Shuffle-mode epoch plan.
  std::vector<Link> link_plan_;
  std::vector<StratumDraw> stratum_plan_;
  Count cursor_ = 0;
};

}  // namespace sampcf
