#pragma once

#include <string>
#include <vector>

#include "itts/core.hpp"
#include "itts/metrics.hpp"

namespace itts {

// Heatmap of T_emitted x N attention weights with the read staircase on top.
struct PathPlotData {
  std::size_t source_length = 0;
  std::vector<std::size_t> read_before;     // per emitted frame
  std::vector<std::vector<double>> weights;  // per emitted frame, N entries
};

PathPlotData path_plot_data(const EpisodeTrace& trace);

// Every heatmap cell is a <rect class="cell"> carrying data-s / data-i (both
// one-based); cells with i > R_before(s) additionally carry class "unread" and
// are filled grey. The staircase is a <polyline class="path">.
std::string path_plot_svg(const PathPlotData& data, const std::string& title);

// One labelled point per policy: x = mean d_T, y = mean MSE.
std::string tradeoff_svg(const std::vector<EvalSummary>& rows, const std::string& title);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace itts
