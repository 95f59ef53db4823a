#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "table/fusion/model.hpp"

namespace table::trainer {

using fusion::ParamGroup;
using numerics::Tensor;

/// Linear warmup from 0 to base_lr over warmup_frac * total_steps, then
/// cosine decay to 0 at total_steps.
double lr_schedule(std::size_t step, std::size_t total_steps, double base_lr, double warmup_frac);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place. `step` is 1-based.
void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> first,
                 std::span<float> second, std::size_t step, double lr, const AdamHyper& hyper);

/// Adam over the model's two learning-rate groups.
class Adam {
 public:
  /// Registers every parameter of `params`; throws numerics::ContractError if
  /// a tensor is reachable twice.
  explicit Adam(fusion::ModelParams<float>& params, AdamHyper hyper = {});

  /// Applies one update with the given per-group rates. Parameters without a
  /// gradient are left untouched.
  void step(double lr_encoders, double lr_cross);

  std::size_t steps() const { return steps_; }
  std::size_t size(ParamGroup group) const;

 private:
  struct Slot {
    Tensor<float> param;
    ParamGroup group;
    std::vector<float> first, second;
  };
  std::vector<Slot> slots_;
  AdamHyper hyper_;
  std::size_t steps_ = 0;
};

/// Global L2 norm of every gradient; rescales all of them when it exceeds
/// max_norm. Returns the norm before clipping.
double clip_grad_norm(std::vector<Tensor<float>>& params, double max_norm);

void zero_grads(std::vector<Tensor<float>>& params);

}  // namespace table::trainer
