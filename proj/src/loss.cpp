#include "sampcf/loss.hpp"

#include <cmath>

namespace sampcf {

namespace {

struct PointGrad {
  double loss;
  double d;
};

PointGrad pos_term(LossKind kind, double x, const LossSpec& spec) {
  switch (kind) {
    case LossKind::Sg: return {softplus(-x), sigmoid(x) - 1.0};
    case LossKind::Mse: {
      const double diff = spec.r_pos - x;
      return {diff * diff, -2.0 * diff};
    }
    default: throw InternalError("pointwise term on pairwise kind");
  }
}

PointGrad neg_term(LossKind kind, double x, const LossSpec& spec) {
  switch (kind) {
    case LossKind::Sg: return {softplus(x), sigmoid(x)};
    case LossKind::Mse: {
      const double diff = spec.r_neg - x;
      return {diff * diff, -2.0 * diff};
    }
    default: throw InternalError("pointwise term on pairwise kind");
  }
}

// Returns loss and d/d(x_pos); d/d(x_neg) is the negation.
PointGrad pair_term(LossKind kind, double x_pos, double x_neg, const LossSpec& spec) {
  const double delta = x_pos - x_neg;
  switch (kind) {
    case LossKind::LogPair:
      return {softplus(-spec.gamma * delta), -spec.gamma * sigmoid(-spec.gamma * delta)};
    case LossKind::HingePair: {
      // Subgradient convention: the margin term is active at the kink.
      const double slack = -delta + spec.gamma;
      if (slack < 0.0) return {0.0, 0.0};
      return {slack, -1.0};
    }
    default: throw InternalError("pairwise term on pointwise kind");
  }
}

}  // namespace

double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "sg") return LossKind::Sg;
  if (name == "mse") return LossKind::Mse;
  if (name == "log-pair") return LossKind::LogPair;
  if (name == "hinge-pair") return LossKind::HingePair;
  throw ConfigError("unknown loss.kind: " + name);
}

std::string loss_kind_name(LossKind kind) {
  switch (kind) {
    case LossKind::Sg: return "sg";
    case LossKind::Mse: return "mse";
    case LossKind::LogPair: return "log-pair";
    case LossKind::HingePair: return "hinge-pair";
  }
  return "?";
}

bool is_pairwise(LossKind kind) {
  return kind == LossKind::LogPair || kind == LossKind::HingePair;
}

bool strategy_supports_pairwise(Strategy s) {
  return s == Strategy::Negative || s == Strategy::NegSharing || s == Strategy::StratifiedNS;
}

void LossSpec::validate() const {
  if (!(lambda > 0.0)) throw ConfigError("loss.lambda must be positive");
  if (!(gamma > 0.0)) throw ConfigError("loss.gamma must be positive");
}

LossResult compute_loss(const LossSpec& spec, const MiniBatch& batch, const BatchScores& scores) {
  spec.validate();
  const bool pairwise = is_pairwise(spec.kind);
  if (pairwise && !strategy_supports_pairwise(batch.strategy))
    throw ConfigError("loss " + loss_kind_name(spec.kind) + " needs negatives sharing the positive's user; strategy " +
                      strategy_name(batch.strategy) + " cannot pair them");

  const std::size_t m = batch.positives.size();
  LossResult out;
  out.d_positive.assign(m, 0.0);
  if (batch.dense) out.d_grid = Matrix(batch.users.size(), batch.items.size());
  else out.d_explicit.assign(batch.explicit_negatives.size(), 0.0);
  if (m == 0) return out;

  // Partner bookkeeping: explicit negatives grouped by pos_index, dense
  // partners are every grid column except the positive's own.
  std::vector<std::uint32_t> partner_count(m, 0);
  if (batch.dense) {
    const auto cols = static_cast<std::uint32_t>(batch.grid.cols());
    for (std::size_t i = 0; i < m; ++i) partner_count[i] = cols - 1;
  } else {
    for (const NegLink& n : batch.explicit_negatives) ++partner_count[n.pos_index];
  }

  double total = 0.0;

  if (!pairwise) {
    // Positive terms.
    for (std::size_t i = 0; i < m; ++i) {
      const auto [l, d] = pos_term(spec.kind, scores.positive[i], spec);
      total += l;
      if (batch.dense) {
        const auto& p = batch.positives[i];
        out.d_grid.at(p.user_slot, p.item_slot) += d;
      } else {
        out.d_positive[i] += d;
      }
    }
    // Negative blocks, each averaged over its own partner count.
    if (batch.dense) {
      const std::size_t cols = batch.grid.cols();
      for (std::size_t i = 0; i < m; ++i) {
        if (partner_count[i] == 0) {
          out.degenerate = true;
          continue;
        }
        const double scale = spec.lambda / partner_count[i];
        const auto us = batch.positives[i].user_slot;
        for (std::size_t c = 0; c < cols; ++c) {
          if (c == batch.grid.pos_col[i]) continue;
          if (batch.grid.is_masked(i, c)) continue;
          const double w = batch.grid.col_weight[c];
          const auto is = batch.grid.col_item_slot[c];
          const auto [l, d] = neg_term(spec.kind, scores.grid.at(us, is), spec);
          total += scale * w * l;
          out.d_grid.at(us, is) += scale * w * d;
        }
      }
    } else {
      for (std::size_t j = 0; j < batch.explicit_negatives.size(); ++j) {
        const NegLink& n = batch.explicit_negatives[j];
        const double scale = spec.lambda / partner_count[n.pos_index];
        const auto [l, d] = neg_term(spec.kind, scores.explicit_neg[j], spec);
        total += scale * n.weight * l;
        out.d_explicit[j] += scale * n.weight * d;
      }
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    total *= inv_m;
    for (double& d : out.d_positive) d *= inv_m;
    for (double& d : out.d_explicit) d *= inv_m;
    for (double& d : out.d_grid.data) d *= inv_m;
    out.loss = total;
    return out;
  }

  // Pairwise: triplets (positive, partner negative) with the negative's
  // P_n/P_d weight; normalized over positives that have partners.
  std::size_t contributing = 0;
  if (batch.dense) {
    const std::size_t cols = batch.grid.cols();
    for (std::size_t i = 0; i < m; ++i) {
      if (partner_count[i] == 0) {
        out.degenerate = true;
        continue;
      }
      ++contributing;
      const double inv_n = 1.0 / partner_count[i];
      const auto us = batch.positives[i].user_slot;
      const auto pos_is = batch.positives[i].item_slot;
      const double x_pos = scores.grid.at(us, pos_is);
      for (std::size_t c = 0; c < cols; ++c) {
        if (c == batch.grid.pos_col[i]) continue;
        if (batch.grid.is_masked(i, c)) continue;
        const double w = batch.grid.col_weight[c] * inv_n;
        const auto is = batch.grid.col_item_slot[c];
        const auto [l, d] = pair_term(spec.kind, x_pos, scores.grid.at(us, is), spec);
        total += w * l;
        out.d_grid.at(us, pos_is) += w * d;
        out.d_grid.at(us, is) -= w * d;
      }
    }
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      if (partner_count[i] == 0) out.degenerate = true;
      else ++contributing;
    }
    for (std::size_t j = 0; j < batch.explicit_negatives.size(); ++j) {
      const NegLink& n = batch.explicit_negatives[j];
      const double w = n.weight / partner_count[n.pos_index];
      const auto [l, d] = pair_term(spec.kind, scores.positive[n.pos_index], scores.explicit_neg[j], spec);
      total += w * l;
      out.d_positive[n.pos_index] += w * d;
      out.d_explicit[j] -= w * d;
    }
  }
  if (contributing == 0) {
    out.degenerate = true;
    return out;
  }
  const double inv_m = 1.0 / static_cast<double>(contributing);
  total *= inv_m;
  for (double& d : out.d_positive) d *= inv_m;
  for (double& d : out.d_explicit) d *= inv_m;
  for (double& d : out.d_grid.data) d *= inv_m;
  out.loss = total;
  return out;
}

UpstreamGrads assemble_gradients(const MiniBatch& batch, const BatchActivations& acts,
                                 const LossResult& loss, bool parallel) {
  UpstreamGrads grads;
  grads.d_f = Matrix(acts.F.rows, acts.F.cols);
  grads.d_g = Matrix(acts.G.rows, acts.G.cols);
  if (batch.dense) {
    gemm_nn(loss.d_grid, acts.G, grads.d_f, parallel);
    gemm_tn(loss.d_grid, acts.F, grads.d_g, parallel);
    return grads;
  }
  const std::size_t d = acts.F.cols;
  auto scatter = [&](std::uint32_t us, std::uint32_t is, double dldx) {
    if (dldx == 0.0) return;
    double* fu = grads.d_f.row(us);
    double* gv = grads.d_g.row(is);
    const double* f = acts.F.row(us);
    const double* g = acts.G.row(is);
    for (std::size_t c = 0; c < d; ++c) {
      fu[c] += dldx * g[c];
      gv[c] += dldx * f[c];
    }
  };
  for (std::size_t i = 0; i < batch.positives.size(); ++i)
    scatter(batch.positives[i].user_slot, batch.positives[i].item_slot, loss.d_positive[i]);
  for (std::size_t j = 0; j < batch.explicit_negatives.size(); ++j)
    scatter(batch.explicit_negatives[j].user_slot, batch.explicit_negatives[j].item_slot,
            loss.d_explicit[j]);
  return grads;
}

}  // namespace sampcf
