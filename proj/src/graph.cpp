#include "sampcf/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_set>

#include "sampcf/rng.hpp"

namespace sampcf {

namespace {

constexpr Count kMaxNodes = std::numeric_limits<NodeId>::max();

std::uint64_t pair_key(NodeId u, NodeId v) {
  return (static_cast<std::uint64_t>(u) << 32) | v;
}

// Strict non-negative integer parse; returns false on garbage.
bool parse_id(const char* begin, const char* end, Count& out) {
  if (begin == end) return false;
  auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace

bool InteractionGraph::has_link(NodeId u, NodeId v) const {
  const auto& adj = user_adj[u];
  return std::binary_search(adj.begin(), adj.end(), v);
}

Count InteractionGraph::feature_vocab() const {
  Count vocab = 0;
  for (const auto& bag : item_features)
    for (NodeId tok : bag) vocab = std::max<Count>(vocab, Count{tok} + 1);
  return vocab;
}

std::vector<Link> InteractionGraph::all_links() const {
  std::vector<Link> links;
  links.reserve(num_links);
  for (NodeId u = 0; u < num_users; ++u)
    for (NodeId v : user_adj[u]) links.push_back({u, v});
  return links;
}

InteractionGraph build_graph(Count num_users, Count num_items, std::vector<Link> links,
                             std::vector<std::vector<NodeId>> item_features) {
  if (num_users == 0 || num_items == 0) throw DataError("graph needs at least one user and one item");
  if (num_users > kMaxNodes || num_items > kMaxNodes) throw DataError("node count exceeds id width");

  InteractionGraph g;
  g.num_users = num_users;
  g.num_items = num_items;
  g.user_adj.resize(num_users);
  g.item_adj.resize(num_items);

  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());
  for (const Link& l : links) {
    if (l.user >= num_users)
      throw DataError("user id " + std::to_string(l.user) + " >= num_users " + std::to_string(num_users));
    if (l.item >= num_items)
      throw DataError("item id " + std::to_string(l.item) + " >= num_items " + std::to_string(num_items));
    g.user_adj[l.user].push_back(l.item);
    g.item_adj[l.item].push_back(l.user);
  }
  for (auto& adj : g.item_adj) std::sort(adj.begin(), adj.end());
  g.num_links = links.size();

  if (!item_features.empty()) {
    if (item_features.size() != num_items)
      throw DataError("feature bags cover " + std::to_string(item_features.size()) + " items, graph has " +
                      std::to_string(num_items));
    g.item_features = std::move(item_features);
  }
  return g;
}

InteractionGraph ingest_links(const std::string& links_path, Count num_users, Count num_items,
                              const std::string& features_path) {
  std::ifstream in(links_path);
  if (!in) throw DataError("cannot open link file: " + links_path);

  std::vector<Link> links;
  Count max_user = 0, max_item = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    Count u = 0, v = 0;
    if (tab == std::string::npos || !parse_id(line.data(), line.data() + tab, u) ||
        !parse_id(line.data() + tab + 1, line.data() + line.size(), v)) {
      throw DataError(links_path + ":" + std::to_string(line_no) + ": malformed link line");
    }
    if (num_users != 0 && u >= num_users)
      throw DataError(links_path + ":" + std::to_string(line_no) + ": user id " + std::to_string(u) +
                      " >= num_users " + std::to_string(num_users));
    if (num_items != 0 && v >= num_items)
      throw DataError(links_path + ":" + std::to_string(line_no) + ": item id " + std::to_string(v) +
                      " >= num_items " + std::to_string(num_items));
    max_user = std::max(max_user, u);
    max_item = std::max(max_item, v);
    links.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
  }
  if (links.empty()) throw DataError("link file is empty: " + links_path);
  if (num_users == 0) num_users = max_user + 1;
  if (num_items == 0) num_items = max_item + 1;

  std::vector<std::vector<NodeId>> bags;
  if (!features_path.empty()) {
    std::ifstream fin(features_path);
    if (!fin) throw DataError("cannot open feature file: " + features_path);
    bags.assign(num_items, {});
    line_no = 0;
    while (std::getline(fin, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      Count v = 0;
      if (tab == std::string::npos || !parse_id(line.data(), line.data() + tab, v))
        throw DataError(features_path + ":" + std::to_string(line_no) + ": malformed feature line");
      if (v >= num_items)
        throw DataError(features_path + ":" + std::to_string(line_no) + ": item id " + std::to_string(v) +
                        " >= num_items " + std::to_string(num_items));
      std::vector<NodeId> bag;
      std::size_t pos = tab + 1;
      while (pos < line.size()) {
        std::size_t sp = line.find(' ', pos);
        if (sp == std::string::npos) sp = line.size();
        if (sp > pos) {
          Count tok = 0;
          if (!parse_id(line.data() + pos, line.data() + sp, tok) || tok > kMaxNodes)
            throw DataError(features_path + ":" + std::to_string(line_no) + ": malformed token");
          bag.push_back(static_cast<NodeId>(tok));
        }
        pos = sp + 1;
      }
      bags[v] = std::move(bag);
    }
  }
  return build_graph(num_users, num_items, std::move(links), std::move(bags));
}

void write_links(const InteractionGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write link file: " + path);
  for (NodeId u = 0; u < g.num_users; ++u)
    for (NodeId v : g.user_adj[u]) out << u << '\t' << v << '\n';
}

void write_features(const InteractionGraph& g, const std::string& path) {
  if (!g.has_features()) throw DataError("graph has no item features");
  std::ofstream out(path);
  if (!out) throw DataError("cannot write feature file: " + path);
  for (NodeId v = 0; v < g.num_items; ++v) {
    out << v << '\t';
    for (std::size_t i = 0; i < g.item_features[v].size(); ++i) {
      if (i) out << ' ';
      out << g.item_features[v][i];
    }
    out << '\n';
  }
}

HoldoutSplit split_holdout(const InteractionGraph& g, const SplitSpec& spec) {
  if (!(spec.test_item_fraction > 0.0 && spec.test_item_fraction < 1.0))
    throw ConfigError("split.fraction must lie in (0,1), got " + std::to_string(spec.test_item_fraction));
  const Count pool_size = static_cast<Count>(spec.test_item_fraction * static_cast<double>(g.num_items));
  if (pool_size == 0)
    throw ConfigError("split.fraction " + std::to_string(spec.test_item_fraction) +
                      " selects zero of " + std::to_string(g.num_items) + " items");

  // Partial Fisher-Yates: the first pool_size entries are a uniform subset.
  CounterRng rng(spec.seed, rng_stream::kSplit);
  std::vector<NodeId> perm(g.num_items);
  for (Count v = 0; v < g.num_items; ++v) perm[v] = static_cast<NodeId>(v);
  for (Count i = 0; i < pool_size; ++i) {
    const Count j = i + rng.next_below(g.num_items - i);
    std::swap(perm[i], perm[j]);
  }
  std::vector<NodeId> pool(perm.begin(), perm.begin() + pool_size);
  std::sort(pool.begin(), pool.end());

  std::vector<bool> held(g.num_items, false);
  for (NodeId v : pool) held[v] = true;

  std::vector<Link> train_links, test_links;
  for (const Link& l : g.all_links()) (held[l.item] ? test_links : train_links).push_back(l);
  if (train_links.empty()) throw DataError("split held out every link; lower split.fraction");

  HoldoutSplit split;
  split.train = build_graph(g.num_users, g.num_items, std::move(train_links), g.item_features);
  split.test_pool = std::move(pool);
  split.test_links = std::move(test_links);
  return split;
}

InteractionGraph synth_graph(const SynthSpec& spec) {
  const Count total_pairs = spec.num_users * spec.num_items;
  if (spec.num_users == 0 || spec.num_items == 0) throw ConfigError("synth needs users and items");
  if (spec.target_links == 0 || spec.target_links > total_pairs)
    throw ConfigError("synth.links must lie in [1, users*items], got " + std::to_string(spec.target_links));

  CounterRng rng(spec.seed, rng_stream::kSynth);

  // Item popularity: rank by id, weight (v+1)^(-exponent).
  std::vector<double> item_weight(spec.num_items);
  for (Count v = 0; v < spec.num_items; ++v)
    item_weight[v] = std::pow(static_cast<double>(v + 1), -spec.degree_exponent);

  const Count rank = spec.planted_rank;
  std::vector<double> user_factors(spec.num_users * rank);
  std::vector<double> item_factors(spec.num_items * rank);
  for (auto& x : user_factors) x = 2.0 * rng.next_double() - 1.0;
  for (auto& x : item_factors) x = 2.0 * rng.next_double() - 1.0;

  // Affinity of user u for item v, as an unnormalized weight.
  auto user_weight = [&](Count u, Count v) {
    if (rank == 0) return 1.0;
    double dot = 0.0;
    for (Count r = 0; r < rank; ++r) dot += user_factors[u * rank + r] * item_factors[v * rank + r];
    return std::exp(spec.planted_strength * dot);
  };

  std::unordered_set<std::uint64_t> seen;
  seen.reserve(spec.target_links * 2);
  std::vector<Link> links;
  links.reserve(spec.target_links);

  const bool dense_regime = spec.target_links * 4 >= total_pairs;
  if (!dense_regime) {
    // Rejection sampling over (item ~ popularity, user ~ affinity | item).
    std::vector<double> item_cdf(spec.num_items);
    double acc = 0.0;
    for (Count v = 0; v < spec.num_items; ++v) {
      acc += item_weight[v];
      item_cdf[v] = acc;
    }
    std::vector<double> user_cdf(spec.num_users);
    const Count max_attempts = spec.target_links * 64 + 4096;
    Count attempts = 0;
    while (links.size() < spec.target_links && attempts < max_attempts) {
      ++attempts;
      const double rv = rng.next_double() * acc;
      const Count v = static_cast<Count>(
          std::lower_bound(item_cdf.begin(), item_cdf.end(), rv) - item_cdf.begin());
      double uacc = 0.0;
      for (Count u = 0; u < spec.num_users; ++u) {
        uacc += user_weight(u, v);
        user_cdf[u] = uacc;
      }
      const double ru = rng.next_double() * uacc;
      const Count u = static_cast<Count>(
          std::lower_bound(user_cdf.begin(), user_cdf.end(), ru) - user_cdf.begin());
      if (seen.insert(pair_key(static_cast<NodeId>(u), static_cast<NodeId>(v))).second)
        links.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
    }
  }
  if (links.size() < spec.target_links) {
    // Dense regime (or rejection stalled): weighted sampling without
    // replacement over all remaining pairs, Efraimidis-Spirakis keys.
    std::vector<std::pair<double, std::uint64_t>> keyed;
    keyed.reserve(total_pairs - links.size());
    for (Count v = 0; v < spec.num_items; ++v) {
      double z = 0.0;
      for (Count u = 0; u < spec.num_users; ++u) z += user_weight(u, v);
      for (Count u = 0; u < spec.num_users; ++u) {
        if (seen.count(pair_key(static_cast<NodeId>(u), static_cast<NodeId>(v)))) continue;
        const double w = item_weight[v] * user_weight(u, v) / z;
        const double key = -std::log1p(-rng.next_double()) / w;  // Exp(w)
        keyed.emplace_back(key, pair_key(static_cast<NodeId>(u), static_cast<NodeId>(v)));
      }
    }
    const Count need = spec.target_links - links.size();
    std::nth_element(keyed.begin(), keyed.begin() + need, keyed.end());
    keyed.resize(need);
    std::sort(keyed.begin(), keyed.end());  // deterministic order
    for (const auto& [key, pk] : keyed)
      links.push_back({static_cast<NodeId>(pk >> 32), static_cast<NodeId>(pk & 0xFFFFFFFFULL)});
  }

  std::vector<std::vector<NodeId>> bags;
  if (spec.with_features) {
    bags.resize(spec.num_items);
    for (Count v = 0; v < spec.num_items; ++v) {
      auto& bag = bags[v];
      bag.push_back(static_cast<NodeId>(v));  // identity token
      if (rank > 0) {
        // Shared topic tokens: indexes of the strongest factor components.
        std::vector<Count> order(rank);
        for (Count r = 0; r < rank; ++r) order[r] = r;
        std::sort(order.begin(), order.end(), [&](Count a, Count b) {
          const double fa = std::fabs(item_factors[v * rank + a]);
          const double fb = std::fabs(item_factors[v * rank + b]);
          if (fa != fb) return fa > fb;
          return a < b;
        });
        for (Count t = 0; t < std::min(spec.extra_tokens, rank); ++t)
          bag.push_back(static_cast<NodeId>(spec.num_items + order[t]));
      }
    }
  }
  return build_graph(spec.num_users, spec.num_items, std::move(links), std::move(bags));
}

}  // namespace sampcf
