#include "table/trainer/optimizer.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

namespace table::trainer {

namespace num = table::numerics;

double lr_schedule(std::size_t step, std::size_t total_steps, double base_lr, double warmup_frac) {
  if (total_steps == 0) return 0.0;
  const double s = static_cast<double>(std::min(step, total_steps));
  const double total = static_cast<double>(total_steps);
  const double warmup = warmup_frac * total;
  if (s < warmup) return base_lr * s / warmup;
  if (total <= warmup) return base_lr;
  const double progress = (s - warmup) / (total - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> first,
                 std::span<float> second, std::size_t step, double lr, const AdamHyper& hyper) {
  if (grad.size() != param.size() || first.size() != param.size() ||
      second.size() != param.size()) {
    throw num::DimensionError("adam_update: buffer sizes differ");
  }
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double m = hyper.beta1 * first[i] + (1.0 - hyper.beta1) * g;
    const double v = hyper.beta2 * second[i] + (1.0 - hyper.beta2) * g * g;
    first[i] = static_cast<float>(m);
    second[i] = static_cast<float>(v);
    param[i] = static_cast<float>(param[i] - lr * (m / c1) / (std::sqrt(v / c2) + hyper.eps));
  }
}

Adam::Adam(fusion::ModelParams<float>& params, AdamHyper hyper) : hyper_(hyper) {
  std::unordered_set<const num::Node<float>*> seen;
  params.visit([&](const std::string& name, Tensor<float>& t, ParamGroup group) {
    if (!seen.insert(t.node().get()).second) {
      throw num::ContractError("Adam: parameter " + name + " registered twice");
    }
    slots_.push_back(Slot{t, group, std::vector<float>(t.numel(), 0.0f),
                          std::vector<float>(t.numel(), 0.0f)});
  });
}

void Adam::step(double lr_encoders, double lr_cross) {
  ++steps_;
  for (auto& slot : slots_) {
    if (!slot.param.has_grad()) continue;
    const double lr = slot.group == ParamGroup::encoders ? lr_encoders : lr_cross;
    adam_update(slot.param.mutable_data(), slot.param.grad(), slot.first, slot.second, steps_, lr,
                hyper_);
  }
}

std::size_t Adam::size(ParamGroup group) const {
  std::size_t n = 0;
  for (const auto& slot : slots_) n += slot.group == group ? 1 : 0;
  return n;
}

double clip_grad_norm(std::vector<Tensor<float>>& params, double max_norm) {
  double squared = 0.0;
  for (const auto& p : params) {
    if (!p.has_grad()) continue;
    for (float g : p.grad()) squared += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(squared);
  if (norm > max_norm && norm > 0.0) {
    const auto factor = static_cast<float>(max_norm / norm);
    for (auto& p : params) {
      if (!p.has_grad()) continue;
      for (auto& g : p.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void zero_grads(std::vector<Tensor<float>>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace table::trainer
