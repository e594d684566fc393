#include "sampcf/sampler.hpp"

#include <algorithm>
#include <unordered_map>

namespace sampcf {

namespace {

// Assigns slots in first-appearance order so batch layout is deterministic.
class SlotMap {
 public:
  std::uint32_t intern(NodeId id, std::vector<NodeId>& universe) {
    auto [it, inserted] = index_.try_emplace(id, static_cast<std::uint32_t>(universe.size()));
    if (inserted) universe.push_back(id);
    return it->second;
  }

 private:
  std::unordered_map<NodeId, std::uint32_t> index_;
};

void fill_grid_mask(MiniBatch& batch, const InteractionGraph& g) {
  auto& grid = batch.grid;
  grid.masked.assign(batch.positives.size() * grid.cols(), 0);
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    const NodeId user = batch.users[batch.positives[i].user_slot];
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      if (c == grid.pos_col[i]) continue;
      const NodeId item = batch.items[grid.col_item_slot[c]];
      if (g.has_link(user, item)) grid.masked[i * grid.cols() + c] = 1;
    }
  }
}

}  // namespace

Strategy parse_strategy(const std::string& name) {
  if (name == "iid") return Strategy::Iid;
  if (name == "negative") return Strategy::Negative;
  if (name == "stratified") return Strategy::Stratified;
  if (name == "neg-sharing") return Strategy::NegSharing;
  if (name == "stratified-ns") return Strategy::StratifiedNS;
  throw ConfigError("unknown sampler.strategy: " + name);
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::Iid: return "iid";
    case Strategy::Negative: return "negative";
    case Strategy::Stratified: return "stratified";
    case Strategy::NegSharing: return "neg-sharing";
    case Strategy::StratifiedNS: return "stratified-ns";
  }
  return "?";
}

void SamplerConfig::validate() const {
  if (batch_positives == 0) throw ConfigError("sampler.b must be positive");
  const bool needs_k = strategy == Strategy::Iid || strategy == Strategy::Negative ||
                       strategy == Strategy::Stratified;
  if (needs_k && negatives_per_positive == 0)
    throw ConfigError("sampler.k must be >= 1 for strategy " + strategy_name(strategy));
  if (stratified()) {
    if (stratum_size == 0) throw ConfigError("sampler.s must be >= 1");
    if (batch_positives % stratum_size != 0)
      throw ConfigError("sampler.s (" + std::to_string(stratum_size) + ") must divide sampler.b (" +
                        std::to_string(batch_positives) + ")");
  }
}

Count MiniBatch::negative_term_count() const {
  if (!dense) return explicit_negatives.size();
  Count n = 0;
  for (std::size_t i = 0; i < positives.size(); ++i)
    for (std::size_t c = 0; c < grid.cols(); ++c)
      if (c != grid.pos_col[i]) ++n;
  return n;
}

Count MiniBatch::interaction_count() const {
  if (dense) return Count{users.size()} * Count{items.size()};
  return positives.size() + explicit_negatives.size();
}

MiniBatch build_iid_batch(const std::vector<Link>& positives, const std::vector<Link>& negatives,
                          Count k) {
  if (negatives.size() != positives.size() * k)
    throw InternalError("iid batch expects k negatives per positive");
  MiniBatch batch;
  batch.strategy = Strategy::Iid;
  SlotMap users, items;
  for (const Link& l : positives)
    batch.positives.push_back({users.intern(l.user, batch.users), items.intern(l.item, batch.items)});
  for (std::size_t j = 0; j < negatives.size(); ++j) {
    const Link& l = negatives[j];
    batch.explicit_negatives.push_back({users.intern(l.user, batch.users),
                                        items.intern(l.item, batch.items), 1.0,
                                        static_cast<std::uint32_t>(j / k)});
  }
  return batch;
}

MiniBatch build_negative_batch(const std::vector<Link>& positives,
                               const std::vector<NodeId>& neg_items, Count k) {
  if (neg_items.size() != positives.size() * k)
    throw InternalError("negative batch expects k negative items per positive");
  MiniBatch batch;
  batch.strategy = Strategy::Negative;
  SlotMap users, items;
  for (const Link& l : positives)
    batch.positives.push_back({users.intern(l.user, batch.users), items.intern(l.item, batch.items)});
  for (std::size_t j = 0; j < neg_items.size(); ++j) {
    const auto pos = static_cast<std::uint32_t>(j / k);
    batch.explicit_negatives.push_back({batch.positives[pos].user_slot,
                                        items.intern(neg_items[j], batch.items), 1.0, pos});
  }
  return batch;
}

MiniBatch build_stratified_batch(const std::vector<StratumDraw>& strata,
                                 const std::vector<double>& neg_weight_by_item, Count k) {
  MiniBatch batch;
  batch.strategy = Strategy::Stratified;
  SlotMap users, items;
  for (const StratumDraw& st : strata) {
    if (st.neg_users.size() != st.users.size() * k)
      throw InternalError("stratum expects k negative users per positive");
    const std::uint32_t item_slot = items.intern(st.item, batch.items);
    const double w = neg_weight_by_item[st.item];
    const auto base = static_cast<std::uint32_t>(batch.positives.size());
    for (const NodeId u : st.users)
      batch.positives.push_back({users.intern(u, batch.users), item_slot});
    for (std::size_t j = 0; j < st.neg_users.size(); ++j) {
      batch.explicit_negatives.push_back({users.intern(st.neg_users[j], batch.users), item_slot, w,
                                          base + static_cast<std::uint32_t>(j / k)});
    }
  }
  return batch;
}

MiniBatch build_neg_sharing_batch(const std::vector<Link>& positives,
                                  const std::vector<double>& neg_weight_by_item,
                                  const InteractionGraph* mask_graph) {
  MiniBatch batch;
  batch.strategy = Strategy::NegSharing;
  batch.dense = true;
  SlotMap users, items;
  for (const Link& l : positives) {
    const std::uint32_t us = users.intern(l.user, batch.users);
    const std::uint32_t is = items.intern(l.item, batch.items);
    batch.positives.push_back({us, is});
    batch.grid.col_item_slot.push_back(is);
    batch.grid.col_weight.push_back(neg_weight_by_item[l.item]);
    batch.grid.pos_col.push_back(static_cast<std::uint32_t>(batch.grid.pos_col.size()));
  }
  batch.degenerate = positives.size() < 2;
  if (mask_graph != nullptr) fill_grid_mask(batch, *mask_graph);
  return batch;
}

MiniBatch build_stratified_ns_batch(const std::vector<StratumDraw>& strata,
                                    const std::vector<double>& neg_weight_by_item,
                                    const InteractionGraph* mask_graph) {
  MiniBatch batch;
  batch.strategy = Strategy::StratifiedNS;
  batch.dense = true;
  SlotMap users, items;
  for (std::size_t t = 0; t < strata.size(); ++t) {
    const StratumDraw& st = strata[t];
    const std::uint32_t item_slot = items.intern(st.item, batch.items);
    batch.grid.col_item_slot.push_back(item_slot);
    batch.grid.col_weight.push_back(neg_weight_by_item[st.item]);
    for (const NodeId u : st.users) {
      batch.positives.push_back({users.intern(u, batch.users), item_slot});
      batch.grid.pos_col.push_back(static_cast<std::uint32_t>(t));
    }
  }
  batch.degenerate = strata.size() < 2;
  if (mask_graph != nullptr) fill_grid_mask(batch, *mask_graph);
  return batch;
}

Sampler::Sampler(const InteractionGraph& g, const SamplerConfig& cfg, const NoiseSpec& noise_spec)
    : graph_(&g),
      cfg_(cfg),
      marginals_(build_marginals(g)),
      noise_(build_noise(g, noise_spec)),
      neg_w_(negative_weight_table(g, noise_spec, noise_, marginals_.item)),
      rng_(cfg.seed, rng_stream::kSampler),
      links_(g.all_links()) {
  cfg_.validate();
  if (cfg_.stratified()) {
    strata_per_batch_ = cfg_.batch_positives / cfg_.stratum_size;
    Count total_strata = 0;
    for (Count v = 0; v < g.num_items; ++v) {
      const Count deg = g.item_degree(static_cast<NodeId>(v));
      total_strata += (deg + cfg_.stratum_size - 1) / cfg_.stratum_size;
    }
    batches_per_epoch_ = (total_strata + strata_per_batch_ - 1) / strata_per_batch_;
  } else {
    batches_per_epoch_ = (g.num_links + cfg_.batch_positives - 1) / cfg_.batch_positives;
  }
  start_epoch();
}

void Sampler::start_epoch() {
  cursor_ = 0;
  if (cfg_.source == PositiveSource::IidDraw) return;

  if (!cfg_.stratified()) {
    link_plan_ = links_;
    for (std::size_t i = link_plan_.size(); i > 1; --i)
      std::swap(link_plan_[i - 1], link_plan_[rng_.next_below(i)]);
    return;
  }

  // Stratified plan: shuffle the users of each item, cut them into runs of
  // up to s (last run may be short), then shuffle the runs.
  stratum_plan_.clear();
  for (Count v = 0; v < graph_->num_items; ++v) {
    auto users = graph_->item_adj[static_cast<NodeId>(v)];
    if (users.empty()) continue;
    for (std::size_t i = users.size(); i > 1; --i)
      std::swap(users[i - 1], users[rng_.next_below(i)]);
    for (std::size_t off = 0; off < users.size(); off += cfg_.stratum_size) {
      StratumDraw st;
      st.item = static_cast<NodeId>(v);
      const std::size_t end = std::min(users.size(), off + cfg_.stratum_size);
      st.users.assign(users.begin() + off, users.begin() + end);
      stratum_plan_.push_back(std::move(st));
    }
  }
  for (std::size_t i = stratum_plan_.size(); i > 1; --i)
    std::swap(stratum_plan_[i - 1], stratum_plan_[rng_.next_below(i)]);
}

std::vector<Link> Sampler::draw_positive_links() {
  const Count b = cfg_.batch_positives;
  std::vector<Link> positives;
  if (cfg_.source == PositiveSource::IidDraw) {
    positives.reserve(b);
    for (Count i = 0; i < b; ++i) positives.push_back(links_[rng_.next_below(links_.size())]);
  } else {
    if (cursor_ >= link_plan_.size()) start_epoch();  // roll into a fresh epoch
    const Count take = std::min<Count>(b, link_plan_.size() - cursor_);
    positives.assign(link_plan_.begin() + cursor_, link_plan_.begin() + cursor_ + take);
    cursor_ += take;
  }
  return positives;
}

std::vector<StratumDraw> Sampler::draw_strata(bool with_neg_users) {
  const Count k = cfg_.negatives_per_positive;
  std::vector<StratumDraw> strata;
  if (cfg_.source == PositiveSource::IidDraw) {
    strata.reserve(strata_per_batch_);
    for (Count t = 0; t < strata_per_batch_; ++t) {
      StratumDraw st;
      st.item = static_cast<NodeId>(marginals_.item.sample(rng_));
      const auto& adj = graph_->item_adj[st.item];
      // With replacement: every slot is an independent P_d(u|v) draw.
      for (Count j = 0; j < cfg_.stratum_size; ++j)
        st.users.push_back(adj[rng_.next_below(adj.size())]);
      strata.push_back(std::move(st));
    }
  } else {
    if (cursor_ >= stratum_plan_.size()) start_epoch();  // roll into a fresh epoch
    const Count take = std::min<Count>(strata_per_batch_, stratum_plan_.size() - cursor_);
    strata.assign(stratum_plan_.begin() + cursor_, stratum_plan_.begin() + cursor_ + take);
    cursor_ += take;
  }
  if (with_neg_users) {
    for (auto& st : strata) {
      st.neg_users.reserve(st.users.size() * k);
      for (Count j = 0; j < st.users.size() * k; ++j)
        st.neg_users.push_back(static_cast<NodeId>(marginals_.user.sample(rng_)));
    }
  }
  return strata;
}

MiniBatch Sampler::next_batch() {
  const Count k = cfg_.negatives_per_positive;
  const InteractionGraph* mask = cfg_.exclude_known_positives ? graph_ : nullptr;
  switch (cfg_.strategy) {
    case Strategy::Iid: {
      const auto positives = draw_positive_links();
      std::vector<Link> negatives;
      negatives.reserve(positives.size() * k);
      for (std::size_t i = 0; i < positives.size() * k; ++i) {
        const auto u = static_cast<NodeId>(marginals_.user.sample(rng_));
        const auto v = static_cast<NodeId>(noise_.sample(rng_));
        negatives.push_back({u, v});
      }
      return build_iid_batch(positives, negatives, k);
    }
    case Strategy::Negative: {
      const auto positives = draw_positive_links();
      std::vector<NodeId> neg_items;
      neg_items.reserve(positives.size() * k);
      for (std::size_t i = 0; i < positives.size() * k; ++i)
        neg_items.push_back(static_cast<NodeId>(noise_.sample(rng_)));
      return build_negative_batch(positives, neg_items, k);
    }
    case Strategy::Stratified:
      return build_stratified_batch(draw_strata(/*with_neg_users=*/true), neg_w_, k);
    case Strategy::NegSharing:
      return build_neg_sharing_batch(draw_positive_links(), neg_w_, mask);
    case Strategy::StratifiedNS:
      return build_stratified_ns_batch(draw_strata(/*with_neg_users=*/false), neg_w_, mask);
  }
  throw InternalError("unreachable strategy");
}

}  // namespace sampcf
