#include "sampcf/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "sampcf/rng.hpp"

namespace sampcf {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

enum BlockIdx : std::size_t { kUserTable = 0, kItemTable = 1, kTokenTable = 1, kW1 = 2, kB1 = 3, kW2 = 4, kB2 = 5 };

void relu_rows(const Matrix& pre, Matrix& post, bool parallel) {
  post.rows = pre.rows;
  post.cols = pre.cols;
  post.data.resize(pre.data.size());
  const auto n = static_cast<std::int64_t>(pre.data.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) post.data[i] = pre.data[i] > 0.0 ? pre.data[i] : 0.0;
}

void add_bias_rows(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    double* row = m.row(i);
    for (std::size_t j = 0; j < m.cols; ++j) row[j] += bias.data[j];
  }
}

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

}  // namespace

ItemFnKind parse_item_fn(const std::string& name) {
  if (name == "id-table") return ItemFnKind::IdTable;
  if (name == "linear-bag") return ItemFnKind::LinearBag;
  if (name == "mlp-bag") return ItemFnKind::MlpBag;
  throw ConfigError("unknown model.item-fn: " + name);
}

std::string item_fn_name(ItemFnKind kind) {
  switch (kind) {
    case ItemFnKind::IdTable: return "id-table";
    case ItemFnKind::LinearBag: return "linear-bag";
    case ItemFnKind::MlpBag: return "mlp-bag";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (dim == 0) throw ConfigError("model.dim must be positive");
  if (item_fn == ItemFnKind::MlpBag && (input_dim == 0 || hidden == 0))
    throw ConfigError("model.input-dim and model.hidden must be positive for mlp-bag");
  if (g_cost_multiplier == 0) throw ConfigError("model.g-cost-multiplier must be >= 1");
  if (!(init_range > 0.0)) throw ConfigError("model.init-range must be positive");
}

EmbeddingModel::EmbeddingModel(Count num_users, Count num_items,
                               std::vector<std::vector<NodeId>> item_features, const ModelConfig& cfg)
    : cfg_(cfg), num_users_(num_users), num_items_(num_items), item_features_(std::move(item_features)) {
  cfg_.validate();
  const bool needs_bags = cfg_.item_fn != ItemFnKind::IdTable;
  if (needs_bags) {
    if (item_features_.empty())
      throw DataError("item function " + item_fn_name(cfg_.item_fn) + " requires item features");
    for (const auto& bag : item_features_)
      for (NodeId tok : bag) vocab_ = std::max<Count>(vocab_, Count{tok} + 1);
    if (vocab_ == 0) throw DataError("item feature bags are all empty");
  }

  blocks_.push_back({"user_table", Matrix(num_users_, cfg_.dim), Matrix(num_users_, cfg_.dim)});
  switch (cfg_.item_fn) {
    case ItemFnKind::IdTable:
      blocks_.push_back({"item_table", Matrix(num_items_, cfg_.dim), Matrix(num_items_, cfg_.dim)});
      break;
    case ItemFnKind::LinearBag:
      blocks_.push_back({"token_table", Matrix(vocab_, cfg_.dim), Matrix(vocab_, cfg_.dim)});
      break;
    case ItemFnKind::MlpBag:
      blocks_.push_back({"token_table", Matrix(vocab_, cfg_.input_dim), Matrix(vocab_, cfg_.input_dim)});
      blocks_.push_back({"w1", Matrix(cfg_.input_dim, cfg_.hidden), Matrix(cfg_.input_dim, cfg_.hidden)});
      blocks_.push_back({"b1", Matrix(1, cfg_.hidden), Matrix(1, cfg_.hidden)});
      blocks_.push_back({"w2", Matrix(cfg_.hidden, cfg_.dim), Matrix(cfg_.hidden, cfg_.dim)});
      blocks_.push_back({"b2", Matrix(1, cfg_.dim), Matrix(1, cfg_.dim)});
      break;
  }

  CounterRng rng(cfg_.seed, rng_stream::kModelInit);
  for (auto& block : blocks_)
    for (double& x : block.value.data) x = (2.0 * rng.next_double() - 1.0) * cfg_.init_range;
}

EmbeddingModel EmbeddingModel::for_graph(const InteractionGraph& g, const ModelConfig& cfg) {
  return EmbeddingModel(g.num_users, g.num_items,
                        cfg.item_fn == ItemFnKind::IdTable ? std::vector<std::vector<NodeId>>{}
                                                           : g.item_features,
                        cfg);
}

void EmbeddingModel::bag_means(const std::vector<NodeId>& ids, Matrix& z, bool parallel) const {
  const Matrix& tokens = block_value(kTokenTable);
  // Validate before the parallel region; exceptions may not cross it.
  for (NodeId item : ids)
    if (item >= item_features_.size() || item_features_[item].empty())
      throw DataError("item " + std::to_string(item) + " has no feature bag");
  z = Matrix(ids.size(), tokens.cols);
  const auto n = static_cast<std::int64_t>(ids.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t i = 0; i < n; ++i) {
    const NodeId item = ids[static_cast<std::size_t>(i)];
    const auto& bag = item_features_[item];
    double* zi = z.row(static_cast<std::size_t>(i));
    for (NodeId tok : bag) {
      const double* trow = tokens.row(tok);
      for (std::size_t c = 0; c < tokens.cols; ++c) zi[c] += trow[c];
    }
    const double inv = 1.0 / static_cast<double>(bag.size());
    for (std::size_t c = 0; c < tokens.cols; ++c) zi[c] *= inv;
  }
}

void EmbeddingModel::item_forward(const std::vector<NodeId>& ids, Matrix& g_out, Matrix* z,
                                  Matrix* hpre, Matrix* hpost, bool parallel) const {
  switch (cfg_.item_fn) {
    case ItemFnKind::IdTable: {
      const Matrix& table = block_value(kItemTable);
      g_out = Matrix(ids.size(), cfg_.dim);
      for (Count rep = 0; rep < cfg_.g_cost_multiplier; ++rep) {
        for (std::size_t i = 0; i < ids.size(); ++i)
          std::memcpy(g_out.row(i), table.row(ids[i]), cfg_.dim * sizeof(double));
      }
      return;
    }
    case ItemFnKind::LinearBag: {
      Matrix local;
      Matrix& means = z != nullptr ? *z : local;
      for (Count rep = 0; rep < cfg_.g_cost_multiplier; ++rep) bag_means(ids, means, parallel);
      g_out = means;
      return;
    }
    case ItemFnKind::MlpBag: {
      Matrix lz, lpre, lpost;
      Matrix& mz = z != nullptr ? *z : lz;
      Matrix& mpre = hpre != nullptr ? *hpre : lpre;
      Matrix& mpost = hpost != nullptr ? *hpost : lpost;
      g_out = Matrix(ids.size(), cfg_.dim);
      mpre = Matrix(ids.size(), cfg_.hidden);
      for (Count rep = 0; rep < cfg_.g_cost_multiplier; ++rep) {
        bag_means(ids, mz, parallel);
        gemm_nn(mz, block_value(kW1), mpre, parallel);
        add_bias_rows(mpre, block_value(kB1));
        relu_rows(mpre, mpost, parallel);
        gemm_nn(mpost, block_value(kW2), g_out, parallel);
        add_bias_rows(g_out, block_value(kB2));
      }
      return;
    }
  }
}

BatchActivations EmbeddingModel::forward(const MiniBatch& batch, bool parallel) const {
  BatchActivations acts;
  acts.F = embed_users(batch.users);
  const bool mlp = cfg_.item_fn == ItemFnKind::MlpBag;
  item_forward(batch.items, acts.G, mlp || cfg_.item_fn == ItemFnKind::LinearBag ? &acts.Z : nullptr,
               mlp ? &acts.Hpre : nullptr, mlp ? &acts.Hpost : nullptr, parallel);
  return acts;
}

BatchScores EmbeddingModel::score_links(const BatchActivations& acts, const MiniBatch& batch,
                                        bool parallel) const {
  BatchScores scores;
  if (batch.dense) {
    scores.grid = Matrix(acts.F.rows, acts.G.rows);
    gemm_nt(acts.F, acts.G, scores.grid, parallel);
    scores.positive.resize(batch.positives.size());
    for (std::size_t i = 0; i < batch.positives.size(); ++i)
      scores.positive[i] = scores.grid.at(batch.positives[i].user_slot, batch.positives[i].item_slot);
    return scores;
  }
  std::vector<std::uint32_t> us(batch.positives.size()), is(batch.positives.size());
  for (std::size_t i = 0; i < batch.positives.size(); ++i) {
    us[i] = batch.positives[i].user_slot;
    is[i] = batch.positives[i].item_slot;
  }
  link_dots(acts.F, acts.G, us, is, scores.positive, parallel);
  us.resize(batch.explicit_negatives.size());
  is.resize(batch.explicit_negatives.size());
  for (std::size_t j = 0; j < batch.explicit_negatives.size(); ++j) {
    us[j] = batch.explicit_negatives[j].user_slot;
    is[j] = batch.explicit_negatives[j].item_slot;
  }
  link_dots(acts.F, acts.G, us, is, scores.explicit_neg, parallel);
  return scores;
}

void EmbeddingModel::backward(const MiniBatch& batch, const BatchActivations& acts, const Matrix& d_f,
                              const Matrix& d_g, bool parallel) {
  if (d_f.rows != batch.users.size() || d_g.rows != batch.items.size())
    throw InternalError("upstream gradient shape mismatch");

  // User side: slots are unique users, plain row scatter.
  Matrix& user_grad = blocks_[kUserTable].grad;
  for (std::size_t s = 0; s < batch.users.size(); ++s) {
    double* dst = user_grad.row(batch.users[s]);
    const double* src = d_f.row(s);
    for (std::size_t c = 0; c < cfg_.dim; ++c) dst[c] += src[c];
  }

  switch (cfg_.item_fn) {
    case ItemFnKind::IdTable: {
      Matrix& table_grad = blocks_[kItemTable].grad;
      for (std::size_t s = 0; s < batch.items.size(); ++s) {
        double* dst = table_grad.row(batch.items[s]);
        const double* src = d_g.row(s);
        for (std::size_t c = 0; c < cfg_.dim; ++c) dst[c] += src[c];
      }
      return;
    }
    case ItemFnKind::LinearBag: {
      Matrix& token_grad = blocks_[kTokenTable].grad;
      for (std::size_t s = 0; s < batch.items.size(); ++s) {
        const auto& bag = item_features_[batch.items[s]];
        const double inv = 1.0 / static_cast<double>(bag.size());
        const double* src = d_g.row(s);
        for (NodeId tok : bag) {
          double* dst = token_grad.row(tok);
          for (std::size_t c = 0; c < cfg_.dim; ++c) dst[c] += src[c] * inv;
        }
      }
      return;
    }
    case ItemFnKind::MlpBag: {
      Matrix dw2(cfg_.hidden, cfg_.dim);
      Matrix dhpost(d_g.rows, cfg_.hidden);
      Matrix dhpre(d_g.rows, cfg_.hidden);
      Matrix dw1(cfg_.input_dim, cfg_.hidden);
      Matrix dz(d_g.rows, cfg_.input_dim);
      for (Count rep = 0; rep < cfg_.g_cost_multiplier; ++rep) {
        gemm_tn(acts.Hpost, d_g, dw2, parallel);
        gemm_nt(d_g, block_value(kW2), dhpost, parallel);
        const auto n = static_cast<std::int64_t>(dhpre.data.size());
#pragma omp parallel for schedule(static) if (parallel)
        for (std::int64_t i = 0; i < n; ++i)
          dhpre.data[i] = acts.Hpre.data[i] > 0.0 ? dhpost.data[i] : 0.0;
        gemm_tn(acts.Z, dhpre, dw1, parallel);
        gemm_nt(dhpre, block_value(kW1), dz, parallel);
      }

      auto& g_token = blocks_[kTokenTable].grad;
      auto& g_w1 = blocks_[kW1].grad;
      auto& g_b1 = blocks_[kB1].grad;
      auto& g_w2 = blocks_[kW2].grad;
      auto& g_b2 = blocks_[kB2].grad;
      for (std::size_t i = 0; i < dw1.data.size(); ++i) g_w1.data[i] += dw1.data[i];
      for (std::size_t i = 0; i < dw2.data.size(); ++i) g_w2.data[i] += dw2.data[i];
      for (std::size_t s = 0; s < d_g.rows; ++s) {
        const double* row = dhpre.row(s);
        for (std::size_t c = 0; c < cfg_.hidden; ++c) g_b1.data[c] += row[c];
        const double* grow = d_g.row(s);
        for (std::size_t c = 0; c < cfg_.dim; ++c) g_b2.data[c] += grow[c];
      }
      for (std::size_t s = 0; s < batch.items.size(); ++s) {
        const auto& bag = item_features_[batch.items[s]];
        const double inv = 1.0 / static_cast<double>(bag.size());
        const double* src = dz.row(s);
        for (NodeId tok : bag) {
          double* dst = g_token.row(tok);
          for (std::size_t c = 0; c < cfg_.input_dim; ++c) dst[c] += src[c] * inv;
        }
      }
      return;
    }
  }
}

void EmbeddingModel::zero_grads() {
  for (auto& block : blocks_) block.grad.set_zero();
}

double EmbeddingModel::grad_norm() const {
  double acc = 0.0;
  for (const auto& block : blocks_)
    for (double x : block.grad.data) acc += x * x;
  return std::sqrt(acc);
}

std::size_t EmbeddingModel::param_count() const {
  std::size_t n = 0;
  for (const auto& block : blocks_) n += block.value.data.size();
  return n;
}

double EmbeddingModel::get_param(std::size_t i) const {
  for (const auto& block : blocks_) {
    if (i < block.value.data.size()) return block.value.data[i];
    i -= block.value.data.size();
  }
  throw InternalError("parameter index out of range");
}

void EmbeddingModel::set_param(std::size_t i, double x) {
  for (auto& block : blocks_) {
    if (i < block.value.data.size()) {
      block.value.data[i] = x;
      return;
    }
    i -= block.value.data.size();
  }
  throw InternalError("parameter index out of range");
}

double EmbeddingModel::get_grad(std::size_t i) const {
  for (const auto& block : blocks_) {
    if (i < block.grad.data.size()) return block.grad.data[i];
    i -= block.grad.data.size();
  }
  throw InternalError("parameter index out of range");
}

Matrix EmbeddingModel::embed_users(const std::vector<NodeId>& users) const {
  const Matrix& table = block_value(kUserTable);
  Matrix f(users.size(), cfg_.dim);
  for (std::size_t i = 0; i < users.size(); ++i)
    std::memcpy(f.row(i), table.row(users[i]), cfg_.dim * sizeof(double));
  return f;
}

Matrix EmbeddingModel::embed_items(const std::vector<NodeId>& items, bool parallel) const {
  Matrix g;
  item_forward(items, g, nullptr, nullptr, nullptr, parallel);
  return g;
}

void EmbeddingModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(cfg_.item_fn));
  write_pod(out, static_cast<std::uint64_t>(num_users_));
  write_pod(out, static_cast<std::uint64_t>(num_items_));
  write_pod(out, static_cast<std::uint64_t>(cfg_.dim));
  write_pod(out, static_cast<std::uint64_t>(vocab_));
  write_pod(out, static_cast<std::uint64_t>(cfg_.input_dim));
  write_pod(out, static_cast<std::uint64_t>(cfg_.hidden));
  for (const auto& block : blocks_) {
    write_pod(out, static_cast<std::uint64_t>(block.value.rows));
    write_pod(out, static_cast<std::uint64_t>(block.value.cols));
    out.write(reinterpret_cast<const char*>(block.value.data.data()),
              static_cast<std::streamsize>(block.value.data.size() * sizeof(double)));
  }
  if (!out) throw DataError("short write on checkpoint: " + path);
}

EmbeddingModel EmbeddingModel::load(const std::string& path, const InteractionGraph& g) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a model checkpoint: " + path);
  std::uint32_t version = 0, kind_raw = 0;
  read_pod(in, version);
  if (version != kVersion) throw DataError("unsupported checkpoint version");
  read_pod(in, kind_raw);
  std::uint64_t num_users = 0, num_items = 0, dim = 0, vocab = 0, input_dim = 0, hidden = 0;
  read_pod(in, num_users);
  read_pod(in, num_items);
  read_pod(in, dim);
  read_pod(in, vocab);
  read_pod(in, input_dim);
  read_pod(in, hidden);
  if (num_users != g.num_users || num_items != g.num_items)
    throw DataError("checkpoint dimensions do not match the graph");

  ModelConfig cfg;
  cfg.item_fn = static_cast<ItemFnKind>(kind_raw);
  cfg.dim = dim;
  cfg.input_dim = input_dim == 0 ? 1 : input_dim;
  cfg.hidden = hidden == 0 ? 1 : hidden;
  EmbeddingModel model = EmbeddingModel::for_graph(g, cfg);
  if (model.vocab_ != vocab) throw DataError("checkpoint vocabulary does not match item features");
  for (auto& block : model.blocks_) {
    std::uint64_t rows = 0, cols = 0;
    read_pod(in, rows);
    read_pod(in, cols);
    if (rows != block.value.rows || cols != block.value.cols)
      throw DataError("checkpoint block shape mismatch in " + block.name);
    in.read(reinterpret_cast<char*>(block.value.data.data()),
            static_cast<std::streamsize>(block.value.data.size() * sizeof(double)));
  }
  if (!in) throw DataError("truncated checkpoint: " + path);
  return model;
}

}  // namespace sampcf
