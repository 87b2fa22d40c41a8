#pragma once

#include "unlearnkit/experiment.hpp"

namespace unlearnkit {

// Grouped bar chart: one group per label, one bar per series.
struct BarChartData {
  std::string title;
  std::vector<std::string> group_labels;
  std::vector<std::string> series_labels;
  std::vector<std::vector<double>> values;  // [series][group]
  double value_cap = 0.0;                   // 0 = auto scale
};

void render_bar_chart_png(const BarChartData& data, const std::filesystem::path& png_path);
void write_chart_sidecar_csv(const BarChartData& data, const std::filesystem::path& csv_path);

// Accuracy bars (forget/retain across methods) and, when wall clocks are
// present, a timing chart. Every chart gets a CSV sidecar with the same
// numbers; charts whose metrics are missing are skipped with a notice on
// stderr. Returns the written image paths.
std::vector<std::filesystem::path> emit_plots(const std::vector<MetricsReport>& reports,
                                              const std::filesystem::path& out_dir);

}  // namespace unlearnkit
