#include "sampcf/optimizer.hpp"

#include <cmath>

namespace sampcf {

OptKind parse_opt_kind(const std::string& name) {
  if (name == "sgd") return OptKind::Sgd;
  if (name == "adam") return OptKind::Adam;
  throw ConfigError("unknown opt.kind: " + name);
}

std::string opt_kind_name(OptKind kind) {
  return kind == OptKind::Sgd ? "sgd" : "adam";
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("opt.lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("opt.beta1/opt.beta2 must lie in [0,1)");
  if (!(eps > 0.0)) throw ConfigError("opt.eps must be positive");
}

void adam_update(Matrix& value, const Matrix& grad, Matrix& m, Matrix& v, std::uint64_t step,
                 double lr, double beta1, double beta2, double eps) {
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < value.data.size(); ++i) {
    const double g = grad.data[i];
    m.data[i] = beta1 * m.data[i] + (1.0 - beta1) * g;
    v.data[i] = beta2 * v.data[i] + (1.0 - beta2) * g * g;
    const double m_hat = m.data[i] / bc1;
    const double v_hat = v.data[i] / bc2;
    value.data[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

void sgd_update(Matrix& value, const Matrix& grad, double lr) {
  for (std::size_t i = 0; i < value.data.size(); ++i) value.data[i] -= lr * grad.data[i];
}

Optimizer::Optimizer(const OptimizerConfig& cfg, const std::vector<ParamBlock>& blocks) : cfg_(cfg) {
  cfg_.validate();
  if (cfg_.kind == OptKind::Adam) {
    for (const auto& block : blocks) {
      m_.emplace_back(block.value.rows, block.value.cols);
      v_.emplace_back(block.value.rows, block.value.cols);
    }
  }
}

void Optimizer::apply(std::vector<ParamBlock>& blocks) {
  ++step_;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    if (cfg_.kind == OptKind::Sgd) {
      sgd_update(blocks[b].value, blocks[b].grad, cfg_.lr);
    } else {
      adam_update(blocks[b].value, blocks[b].grad, m_[b], v_[b], step_, cfg_.lr, cfg_.beta1,
                  cfg_.beta2, cfg_.eps);
    }
  }
}

}  // namespace sampcf
