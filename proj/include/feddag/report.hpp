#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "feddag/config.hpp"
#include "feddag/protocol.hpp"

namespace feddag {

// Fixed CSV headers of the run outputs.
inline constexpr std::string_view kMetricsHeader =
    "held_out,round,warmup,source_val_loss,source_val_acc,mean_train_loss,target_acc,target_f1,"
    "target_auc";
inline constexpr std::string_view kShaLogHeader =
    "held_out,round,client,raw_score,post_dense_score,weight";
inline constexpr std::string_view kTraceHeader =
    "held_out,round,client,batch,l_cls_g,l_dis,l_cls_s,l_sim";
inline constexpr std::string_view kSweepHeader = "param,value,acc,f1,auc";

/// Shortest round-trip decimal; NaN and infinities become an empty cell.
std::string format_number(double v);

nlohmann::ordered_json report_json(const RunConfig& config, const RunReport& report);
std::string metrics_csv(const RunReport& report);
std::string sha_log_csv(const RunReport& report);
std::string train_trace_csv(const RunReport& report);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws ContractError
};

CsvTable parse_csv_table(std::string_view text);

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Polyline chart with axes, tick labels and a legend.
std::string line_plot_svg(std::string_view title, std::string_view x_label,
                          std::string_view y_label, const std::vector<Series>& series);

/// Plots built from CSV text only, one series per held-out domain
/// (or a single series for sweeps).
std::string loss_plot_from_csv(std::string_view metrics_csv_text);
std::string accuracy_plot_from_csv(std::string_view metrics_csv_text);
std::string sweep_plot_from_csv(std::string_view sweep_csv_text);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

/// report.json, metrics.csv, sha_log.csv, train_trace.csv, the two SVG plots
/// and the final global models (one checkpoint per fold).
void write_run_outputs(const std::filesystem::path& dir, const RunConfig& config,
                       const RunReport& report, const ModelArchs& archs);

}  // namespace feddag
