#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sampcf/common.hpp"
#include "sampcf/kernels.hpp"
#include "sampcf/model.hpp"

namespace sampcf {

enum class OptKind { Sgd, Adam };

OptKind parse_opt_kind(const std::string& name);
std::string opt_kind_name(OptKind kind);

struct OptimizerConfig {
  OptKind kind = OptKind::Adam;
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// One bias-corrected Adam update on a parameter block. `step` counts from 1.
void adam_update(Matrix& value, const Matrix& grad, Matrix& m, Matrix& v, std::uint64_t step,
                 double lr, double beta1, double beta2, double eps);

void sgd_update(Matrix& value, const Matrix& grad, double lr);

// Owns per-block moment state; apply() consumes the model's grad buffers
// (they are left untouched; the trainer zeroes them).
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& cfg, const std::vector<ParamBlock>& blocks);
  void apply(std::vector<ParamBlock>& blocks);
  std::uint64_t steps() const { return step_; }

 private:
  OptimizerConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace sampcf
