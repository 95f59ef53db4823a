#include "table/evalcli/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "table/numerics/tensor.hpp"

namespace table::evalcli {

namespace num = table::numerics;

AttentionTrace AttentionTrace::from_capture(const encoders::AttentionCapture& capture,
                                            std::vector<SlotLabel> labels) {
  if (labels.size() != capture.slots) {
    throw num::DimensionError("AttentionTrace: " + std::to_string(labels.size()) +
                              " labels for " + std::to_string(capture.slots) + " slots");
  }
  return AttentionTrace{capture.slots, capture.layers, std::move(labels)};
}

std::vector<double> attention_rollout(const AttentionTrace& trace) {
  const std::size_t n = trace.slots;
  if (n == 0 || trace.layers.empty()) throw num::ContractError("attention_rollout: empty trace");

  std::vector<double> rollout(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) rollout[i * n + i] = 1.0;

  std::vector<double> mixed(n * n), next(n * n);
  for (std::size_t l = 0; l < trace.layers.size(); ++l) {
    const auto& a = trace.layers[l];
    if (a.size() != n * n) throw num::DimensionError("attention_rollout: layer size mismatch");
    for (std::size_t r = 0; r < n; ++r) {
      double row_sum = 0.0;
      for (std::size_t c = 0; c < n; ++c) row_sum += a[r * n + c];
      if (std::abs(row_sum - 1.0) > 1e-5) {
        throw num::ContractError("attention_rollout: layer " + std::to_string(l) + " row " +
                                 std::to_string(r) + " sums to " + std::to_string(row_sum));
      }
      double mixed_sum = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        mixed[r * n + c] = 0.5 * a[r * n + c] + (r == c ? 0.5 : 0.0);
        mixed_sum += mixed[r * n + c];
      }
      for (std::size_t c = 0; c < n; ++c) mixed[r * n + c] /= mixed_sum;
    }
    // next = mixed · rollout
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t k = 0; k < n; ++k) {
        const double m = mixed[r * n + k];
        for (std::size_t c = 0; c < n; ++c) next[r * n + c] += m * rollout[k * n + c];
      }
    }
    rollout.swap(next);
  }
  return rollout;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

/// White at 0, navy (#000080) at 1.
std::string ramp_colour(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const auto channel = [t](double lo, double hi) {
    return static_cast<int>(std::lround(lo + (hi - lo) * t));
  };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(255, 0), channel(255, 0),
                channel(255, 128));
  return buf;
}

}  // namespace

std::string render_attention_svg(const std::vector<double>& rollout, const AttentionTrace& trace,
                                 const std::string& title) {
  const std::size_t n = trace.slots;
  if (rollout.size() != n * n || trace.labels.size() != n) {
    throw num::DimensionError("render_attention: rollout does not match the trace");
  }
  const auto tag_it = std::find_if(trace.labels.begin(), trace.labels.end(),
                                   [](const SlotLabel& l) { return l.kind == SlotKind::tag; });
  if (tag_it == trace.labels.end()) throw num::ContractError("render_attention: no tag slot");
  const auto query = static_cast<std::size_t>(tag_it - trace.labels.begin());

  std::vector<std::size_t> frames;
  std::vector<std::string> notes;
  for (std::size_t s = 0; s < n; ++s) {
    const auto& label = trace.labels[s];
    if (label.kind == SlotKind::frame) {
      frames.push_back(s);
    } else {
      const char* kind = label.kind == SlotKind::tag ? "tag" : "text";
      notes.push_back(std::string(kind) + " [" + std::to_string(s) + "] " + label.text +
                      " (" + fixed4(rollout[query * n + s]) + ")");
    }
  }
  double peak = 0.0;
  for (std::size_t f : frames) peak = std::max(peak, rollout[query * n + f]);

  constexpr int cell_w = 72, cell_h = 48, pitch = 80, margin = 20;
  const int width = std::max<int>(2 * margin + static_cast<int>(frames.size()) * pitch, 480);
  const int height = 140 + 20 * static_cast<int>(notes.size());

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << margin << "\" y=\"20\" font-family=\"monospace\" font-size=\"13\">"
      << xml_escape(title) << "</text>\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double w = rollout[query * n + frames[i]];
    const int x = margin + static_cast<int>(i) * pitch;
    svg << "<rect x=\"" << x << "\" y=\"32\" width=\"" << cell_w << "\" height=\"" << cell_h
        << "\" fill=\"" << ramp_colour(peak > 0.0 ? w / peak : 0.0)
        << "\" stroke=\"#404040\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"96\" font-family=\"monospace\" font-size=\"11\">frame "
        << i << "</text>\n";
    svg << "<text x=\"" << x << "\" y=\"110\" font-family=\"monospace\" font-size=\"11\">"
        << fixed4(w) << "</text>\n";
  }
  for (std::size_t i = 0; i < notes.size(); ++i) {
    svg << "<text x=\"" << margin << "\" y=\"" << 130 + 20 * static_cast<int>(i)
        << "\" font-family=\"monospace\" font-size=\"11\">" << xml_escape(notes[i])
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void render_attention(const std::vector<double>& rollout, const AttentionTrace& trace,
                      const std::string& title, const std::filesystem::path& out_path) {
  const auto svg = render_attention_svg(rollout, trace, title);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("render_attention: cannot open " + out_path.string());
  out << svg;
  if (!out) throw std::runtime_error("render_attention: write failed for " + out_path.string());
}

}  // namespace table::evalcli
