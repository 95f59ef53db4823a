#include "table/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "table/numerics/random.hpp"

namespace table::numerics {

std::string GradcheckReport::describe() const {
  std::ostringstream out;
  out << (passed ? "gradcheck passed" : "gradcheck FAILED") << " over " << checked
      << " coordinates; worst: tensor " << worst.tensor_index << " coord " << worst.coordinate
      << " analytic=" << worst.analytic << " numeric=" << worst.numeric
      << " rel_err=" << worst.relative_error;
  return out.str();
}

GradcheckReport gradcheck(const std::function<Tensor<double>()>& loss,
                          std::vector<Tensor<double>> params, const GradcheckOptions& options) {
  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    Tensor<double> value = loss();
    tape.backward(value);
  }

  auto evaluate = [&loss] {
    NoGradScope<double> no_grad;
    return loss().item();
  };

  Rng rng(options.seed);
  GradcheckReport report;
  report.worst.relative_error = -1.0;
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor<double>& p = params[t];
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    std::vector<std::size_t> coords(p.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.samples_per_tensor != 0 && coords.size() > options.samples_per_tensor) {
      rng.shuffle(coords.begin(), coords.end());
      coords.resize(options.samples_per_tensor);
      std::sort(coords.begin(), coords.end());
    }
    auto values = p.mutable_data();
    for (std::size_t c : coords) {
      const double original = values[c];
      values[c] = original + options.step;
      const double up = evaluate();
      values[c] = original - options.step;
      const double down = evaluate();
      values[c] = original;
      const double numeric = (up - down) / (2.0 * options.step);
      const double denom =
          std::max({std::abs(analytic[c]), std::abs(numeric), options.floor});
      const double rel = std::abs(analytic[c] - numeric) / denom;
      ++report.checked;
      if (rel > report.worst.relative_error) {
        report.worst = GradcheckFailure{t, c, analytic[c], numeric, rel};
      }
    }
  }
  report.passed = report.worst.relative_error <= options.tolerance;
  return report;
}

}  // namespace table::numerics
