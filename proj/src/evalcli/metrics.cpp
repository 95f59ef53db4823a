#include "table/evalcli/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace table::evalcli {

ScoreMatrix::ScoreMatrix(std::size_t r, std::size_t c, std::vector<double> v)
    : rows(r), cols(c), values(std::move(v)) {
  if (values.size() != rows * cols) throw std::invalid_argument("ScoreMatrix: size mismatch");
}

ScoreMatrix ScoreMatrix::transposed() const {
  ScoreMatrix out(cols, rows, std::vector<double>(values.size()));
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(c, r) = at(r, c);
  }
  return out;
}

std::string direction_name(Direction d) {
  return d == Direction::text_to_video ? "T2V" : "V2T";
}

void to_json(nlohmann::json& j, const RetrievalReport& r) {
  j = nlohmann::json{{"direction", direction_name(r.direction)},
                     {"R@1", r.r1},
                     {"R@5", r.r5},
                     {"R@10", r.r10},
                     {"MdR", r.median_rank},
                     {"MnR", r.mean_rank}};
}

std::vector<std::size_t> truth_ranks(const ScoreMatrix& scores,
                                     const std::vector<std::size_t>& truth) {
  if (truth.size() != scores.rows) {
    throw std::invalid_argument("truth_ranks: one truth index per query required");
  }
  std::vector<std::size_t> ranks(scores.rows);
  for (std::size_t q = 0; q < scores.rows; ++q) {
    const std::size_t t = truth[q];
    if (t >= scores.cols) {
      throw std::out_of_range("truth_ranks: truth index " + std::to_string(t) + " for query " +
                              std::to_string(q) + " exceeds " + std::to_string(scores.cols) +
                              " candidates");
    }
    const double target = scores.at(q, t);
    std::size_t ahead = 0;
    for (std::size_t c = 0; c < scores.cols; ++c) {
      const double s = scores.at(q, c);
      if (s > target || (s == target && c < t)) ++ahead;
    }
    ranks[q] = ahead + 1;
  }
  return ranks;
}

RetrievalReport compute_metrics(const ScoreMatrix& scores, const std::vector<std::size_t>& truth,
                                Direction direction) {
  RetrievalReport report;
  report.direction = direction;
  report.ranks = truth_ranks(scores, truth);
  const auto n = report.ranks.size();
  if (n == 0) return report;

  const auto recall = [&](std::size_t k) {
    const auto hits = std::count_if(report.ranks.begin(), report.ranks.end(),
                                    [k](std::size_t r) { return r <= k; });
    return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
  };
  report.r1 = recall(1);
  report.r5 = recall(5);
  report.r10 = recall(10);

  auto sorted = report.ranks;
  std::sort(sorted.begin(), sorted.end());
  report.median_rank = n % 2 == 1 ? static_cast<double>(sorted[n / 2])
                                   : 0.5 * static_cast<double>(sorted[n / 2 - 1] + sorted[n / 2]);
  report.mean_rank =
      static_cast<double>(std::accumulate(sorted.begin(), sorted.end(), std::size_t{0})) /
      static_cast<double>(n);
  return report;
}

ScoreMatrix dsl_revise(const ScoreMatrix& scores, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("dsl_revise: temperature must be > 0");
  ScoreMatrix out = scores;
  for (std::size_t c = 0; c < scores.cols; ++c) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < scores.rows; ++q) peak = std::max(peak, scores.at(q, c));
    double total = 0.0;
    for (std::size_t q = 0; q < scores.rows; ++q) {
      total += std::exp(temperature * (scores.at(q, c) - peak));
    }
    for (std::size_t q = 0; q < scores.rows; ++q) {
      out.at(q, c) = scores.at(q, c) * std::exp(temperature * (scores.at(q, c) - peak)) / total;
    }
  }
  return out;
}

}  // namespace table::evalcli
