#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "table/encoders/transformer.hpp"

namespace table::evalcli {

enum class SlotKind { frame, tag, text };

struct SlotLabel {
  SlotKind kind = SlotKind::frame;
  std::string text;
};

/// Head-averaged attention of every layer for one sample.
struct AttentionTrace {
  std::size_t slots = 0;
  std::vector<std::vector<double>> layers;  // each [slots, slots], row-major
  std::vector<SlotLabel> labels;            // one per slot

  static AttentionTrace from_capture(const encoders::AttentionCapture& capture,
                                     std::vector<SlotLabel> labels);
};

/// Product of the per-layer matrices 0.5 A + 0.5 I (rows renormalized), last
/// layer leftmost. Returns [slots, slots] row-major. Throws
/// numerics::ContractError when an input row does not sum to 1 within 1e-5.
std::vector<double> attention_rollout(const AttentionTrace& trace);

/// SVG colour bar of the frame weights in the rollout row of the first tag
/// slot. Byte-identical for identical inputs.
std::string render_attention_svg(const std::vector<double>& rollout, const AttentionTrace& trace,
                                 const std::string& title);

void render_attention(const std::vector<double>& rollout, const AttentionTrace& trace,
                      const std::string& title, const std::filesystem::path& out_path);

}  // namespace table::evalcli
