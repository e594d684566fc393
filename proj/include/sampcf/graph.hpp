#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sampcf/common.hpp"

namespace sampcf {

// Immutable bipartite implicit-feedback graph. Adjacency is kept in both
// directions (sorted, duplicate-free); construction validates transpose
// consistency. After construction any number of threads may read it.
struct InteractionGraph {
  Count num_users = 0;
  Count num_items = 0;
  std::vector<std::vector<NodeId>> user_adj;       // user -> sorted item ids
  std::vector<std::vector<NodeId>> item_adj;       // item -> sorted user ids
  std::vector<std::vector<NodeId>> item_features;  // item -> token bag; empty if absent
  Count num_links = 0;

  bool has_features() const { return !item_features.empty(); }
  Count user_degree(NodeId u) const { return user_adj[u].size(); }
  Count item_degree(NodeId v) const { return item_adj[v].size(); }
  bool has_link(NodeId u, NodeId v) const;
  Count feature_vocab() const;  // max token id + 1, or 0 without features

  // All links in user-major, item-ascending order.
  std::vector<Link> all_links() const;
};

// Build from an explicit link list; duplicates collapse to one link.
// Throws DataError on out-of-range ids.
InteractionGraph build_graph(Count num_users, Count num_items, std::vector<Link> links,
                             std::vector<std::vector<NodeId>> item_features = {});

// Read a `user<TAB>item` TSV. Dimensions are inferred as max id + 1 when
// passed as 0. An optional `item<TAB>tok tok ...` file attaches feature bags.
InteractionGraph ingest_links(const std::string& links_path, Count num_users = 0,
                              Count num_items = 0, const std::string& features_path = "");

// Canonical TSV serialization (user-major order); ingest(write(g)) == g.
void write_links(const InteractionGraph& g, const std::string& path);
void write_features(const InteractionGraph& g, const std::string& path);

struct SplitSpec {
  double test_item_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct HoldoutSplit {
  InteractionGraph train;           // same node universe, held-out links removed
  std::vector<NodeId> test_pool;    // sorted held-out item ids
  std::vector<Link> test_links;     // every link into the pool
};

// Hold out a uniform random floor(fraction * num_items) subset of items and
// all links touching them. Deterministic per seed.
HoldoutSplit split_holdout(const InteractionGraph& g, const SplitSpec& spec);

struct SynthSpec {
  Count num_users = 0;
  Count num_items = 0;
  Count target_links = 0;
  double degree_exponent = 1.0;  // item popularity ~ rank^(-exponent)
  std::uint64_t seed = 0;

  // Planted preference structure: users and items get latent factors of
  // this rank and links favor high-affinity pairs, so training has signal.
  // Rank 0 yields pure popularity sampling.
  Count planted_rank = 8;
  double planted_strength = 2.0;

  // Feature bags: token `v` identifies item v, plus `extra_tokens` shared
  // topic tokens drawn from the planted factors. 0 extra tokens with
  // with_features=false omits bags entirely.
  bool with_features = false;
  Count extra_tokens = 2;
};

// Random bipartite graph: item marginals follow the popularity power law,
// users are chosen per item by planted affinity. Deterministic per seed.
InteractionGraph synth_graph(const SynthSpec& spec);

}  // namespace sampcf
