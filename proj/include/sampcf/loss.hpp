#pragma once

#include <string>
#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/kernels.hpp"
#include "sampcf/model.hpp"
#include "sampcf/sampler.hpp"

namespace sampcf {

enum class LossKind { Sg, Mse, LogPair, HingePair };

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind kind);
bool is_pairwise(LossKind kind);
// Pairwise losses need negatives that share the positive's user; only the
// negative-item and shared-negative strategies provide that.
bool strategy_supports_pairwise(Strategy s);

struct LossSpec {
  LossKind kind = LossKind::Sg;
  double lambda = 128.0;  // pointwise negative-term weight
  double gamma = 10.0;    // pairwise margin (hinge) / scale (log)
  double r_pos = 1.0;     // MSE target for positives
  double r_neg = 0.0;     // MSE target for negatives

  void validate() const;
};

// Stable scalar pieces, exposed for tests.
double softplus(double x);
double sigmoid(double x);

// Loss of one batch, normalized per positive link, with the gradients of
// that normalized loss w.r.t. every score.
//
// Pointwise: (1/m) * sum_i [ L+(x_i) + lambda/n_i * sum_j w_ij L-(x_ij) ].
// Pairwise:  (1/m') * sum_i (1/n_i) * sum_j w_ij L(x+_i, x-_ij), where m'
// counts positives with at least one partner.
// Each positive's negative block is averaged over its own partner count, so
// the block estimates the inner expectation over the noise distribution.
struct LossResult {
  double loss = 0.0;
  std::vector<double> d_positive;  // per positive index (explicit mode)
  std::vector<double> d_explicit;  // per explicit negative
  Matrix d_grid;                   // dense mode: per score-matrix cell
  bool degenerate = false;         // some positive had no negative partner
};

LossResult compute_loss(const LossSpec& spec, const MiniBatch& batch, const BatchScores& scores);

// Chain rule through r(u,v) = f_u . g_v, aggregating per slot:
// dL/df_u = sum over links at u of dL/dx * g_v, and symmetrically for g.
// Dense grids use matrix products against the cell-gradient matrix.
struct UpstreamGrads {
  Matrix d_f;  // |user slots| x d
  Matrix d_g;  // |item slots| x d
};

UpstreamGrads assemble_gradients(const MiniBatch& batch, const BatchActivations& acts,
                                 const LossResult& loss, bool parallel);

}  // namespace sampcf
