#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/graph.hpp"
#include "sampcf/kernels.hpp"
#include "sampcf/sampler.hpp"

namespace sampcf {

enum class ItemFnKind { IdTable, LinearBag, MlpBag };

ItemFnKind parse_item_fn(const std::string& name);
std::string item_fn_name(ItemFnKind kind);

struct ModelConfig {
  Count dim = 16;        // embedding width d
  ItemFnKind item_fn = ItemFnKind::IdTable;
  Count input_dim = 32;  // token embedding width (MlpBag)
  Count hidden = 64;     // MlpBag hidden width
  // Artificial repeat factor for the item function (forward and backward)
  // so experiments can push the item cost far above everything else.
  Count g_cost_multiplier = 1;
  std::uint64_t seed = 0;
  double init_range = 0.05;

  void validate() const;
};

struct ParamBlock {
  std::string name;
  Matrix value;
  Matrix grad;  // same shape
};

// Per-batch forward state. Row i of F/G belongs to user/item slot i.
struct BatchActivations {
  Matrix F;  // |user slots| x d
  Matrix G;  // |item slots| x d
  // MlpBag caches (empty otherwise).
  Matrix Z;      // |item slots| x input_dim  (bag means)
  Matrix Hpre;   // |item slots| x hidden     (pre-activation)
  Matrix Hpost;  // |item slots| x hidden     (after ReLU)
};

struct BatchScores {
  std::vector<double> positive;      // per positive index
  std::vector<double> explicit_neg;  // per explicit negative
  Matrix grid;                       // dense mode: |user slots| x |item slots|
};

// Functional embedding: a user function (id-table lookup) and a pluggable
// item function, both emitting d-dimensional vectors scored by dot product.
class EmbeddingModel {
 public:
  EmbeddingModel(Count num_users, Count num_items, std::vector<std::vector<NodeId>> item_features,
                 const ModelConfig& cfg);
  static EmbeddingModel for_graph(const InteractionGraph& g, const ModelConfig& cfg);

  // One user-function evaluation per unique user slot and one item-function
  // evaluation per unique item slot; this is what the cost ledger counts.
  BatchActivations forward(const MiniBatch& batch, bool parallel) const;

  // Per-link dots for explicit negatives, one F*G^T matrix for dense grids.
  BatchScores score_links(const BatchActivations& acts, const MiniBatch& batch, bool parallel) const;

  // Accumulates into the grad buffers. Upstream slot gradients arrive
  // already aggregated across links, so the item function runs backward
  // exactly once per unique item slot.
  void backward(const MiniBatch& batch, const BatchActivations& acts, const Matrix& d_f,
                const Matrix& d_g, bool parallel);

  void zero_grads();
  double grad_norm() const;

  std::vector<ParamBlock>& blocks() { return blocks_; }
  const std::vector<ParamBlock>& blocks() const { return blocks_; }

  // Flat parameter view (blocks in declared order) for finite differences.
  std::size_t param_count() const;
  double get_param(std::size_t i) const;
  void set_param(std::size_t i, double x);
  double get_grad(std::size_t i) const;

  // Embeddings for arbitrary node lists (evaluation path).
  Matrix embed_users(const std::vector<NodeId>& users) const;
  Matrix embed_items(const std::vector<NodeId>& items, bool parallel) const;

  const ModelConfig& config() const { return cfg_; }
  Count num_users() const { return num_users_; }
  Count num_items() const { return num_items_; }
  Count vocab() const { return vocab_; }

  // Versioned little-endian checkpoint: header (dims, item function kind)
  // then parameter blocks in declared order.
  void save(const std::string& path) const;
  static EmbeddingModel load(const std::string& path, const InteractionGraph& g);

 private:
  void item_forward(const std::vector<NodeId>& ids, Matrix& g_out, Matrix* z, Matrix* hpre,
                    Matrix* hpost, bool parallel) const;
  void bag_means(const std::vector<NodeId>& ids, Matrix& z, bool parallel) const;
  const Matrix& block_value(std::size_t idx) const { return blocks_[idx].value; }

  ModelConfig cfg_;
  Count num_users_ = 0;
  Count num_items_ = 0;
  Count vocab_ = 0;
  std::vector<std::vector<NodeId>> item_features_;
  std::vector<ParamBlock> blocks_;  // [user_table, item blocks...]
};

}  // namespace sampcf
