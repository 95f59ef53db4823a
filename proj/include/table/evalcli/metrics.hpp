#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace table::evalcli {

/// Dense row-major score matrix, rows = queries, columns = candidates.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  ScoreMatrix() = default;
  ScoreMatrix(std::size_t r, std::size_t c, std::vector<double> v);

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  ScoreMatrix transposed() const;
};

enum class Direction { text_to_video, video_to_text };

std::string direction_name(Direction d);

struct RetrievalReport {
  Direction direction = Direction::text_to_video;
  double r1 = 0.0;  // percentages
  double r5 = 0.0;
  double r10 = 0.0;
  double median_rank = 0.0;
  double mean_rank = 0.0;
  std::vector<std::size_t> ranks;  // 1-based rank of the truth, per query

  bool operator==(const RetrievalReport&) const = default;
};

void to_json(nlohmann::json& j, const RetrievalReport& r);

/// 1-based rank of each query's true candidate. Candidates scoring equal to
/// the truth are ranked ahead of it when their index is lower.
std::vector<std::size_t> truth_ranks(const ScoreMatrix& scores,
                                     const std::vector<std::size_t>& truth);

/// R@1/5/10, median rank (mean of the two middle ranks for an even count) and
/// mean rank. Throws std::out_of_range for a truth index outside the columns.
RetrievalReport compute_metrics(const ScoreMatrix& scores, const std::vector<std::size_t>& truth,
                                Direction direction = Direction::text_to_video);

/// S ⊙ softmax over the query axis of (S * temperature): each candidate
/// column is reweighted by how strongly it prefers each query.
ScoreMatrix dsl_revise(const ScoreMatrix& scores, double temperature = 100.0);

}  // namespace table::evalcli
