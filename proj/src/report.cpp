#include "feddag/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "feddag/checkpoint.hpp"
#include "feddag/errors.hpp"

namespace feddag {
namespace {

using ojson = nlohmann::ordered_json;

ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson eval_json(const EvalResult& r) {
  ojson j;
  j["acc"] = r.acc;
  j["f1"] = r.f1;
  j["auc"] = r.auc ? number_or_null(*r.auc) : ojson(nullptr);
  j["n"] = r.n;
  j["support"] = r.support;
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

double mean_train_loss(const RoundMetrics& m) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& c : m.clients) {
    if (std::isfinite(c.train_loss)) {
      s += c.train_loss;
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(n);
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += cells[i];
  }
  return out;
}

std::string u(std::size_t v) { return std::to_string(v); }

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string tick_label(double v, double span) {
  if (span == 0.0) return fixed(v, 3);
  const int digits = std::clamp(static_cast<int>(std::ceil(-std::log10(span))) + 2, 0, 6);
  return fixed(v, digits);
}

std::vector<Series> series_by_domain(std::string_view metrics_csv_text, std::string_view column) {
  const auto table = parse_csv_table(metrics_csv_text);
  const auto c_fold = table.column("held_out");
  const auto c_round = table.column("round");
  const auto c_value = table.column(column);
  std::vector<Series> out;
  for (const auto& row : table.rows) {
    if (row[c_value].empty()) continue;
    const std::string name = "held-out " + row[c_fold];
    auto it = std::find_if(out.begin(), out.end(), [&](const Series& s) { return s.name == name; });
    if (it == out.end()) {
      out.push_back({name, {}});
      it = out.end() - 1;
    }
    it->points.emplace_back(std::stod(row[c_round]), std::stod(row[c_value]));
  }
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return {};
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ojson report_json(const RunConfig& config, const RunReport& report) {
  ojson j;
  j["config"] = to_json(config);
  j["domains"] = ojson::array();
  for (const auto& fold : report.folds) {
    ojson f;
    f["held_out"] = fold.held_out;
    f["final"] = eval_json(fold.final_metrics);
    f["rounds"] = ojson::array();
    for (const auto& m : fold.rounds) {
      ojson r;
      r["round"] = m.round;
      r["warmup"] = m.warmup;
      r["source_val_loss"] = number_or_null(m.source_val_loss);
      r["source_val_acc"] = number_or_null(m.source_val_acc);
      r["mean_train_loss"] = number_or_null(mean_train_loss(m));
      if (m.target) r["target"] = eval_json(*m.target);
      r["clients"] = ojson::array();
      for (const auto& c : m.clients) {
        ojson cj;
        cj["client"] = c.client;
        cj["train_loss"] = number_or_null(c.train_loss);
        cj["raw_score"] = number_or_null(c.raw_score);
        cj["post_dense_score"] = number_or_null(c.post_dense_score);
        cj["weight"] = c.weight;
        cj["perturbed"] = c.perturbed;
        cj["dense_selected"] = c.dense_selected;
        cj["degenerate_samples"] = c.degenerate_samples;
        r["clients"].push_back(std::move(cj));
      }
      f["rounds"].push_back(std::move(r));
    }
    j["domains"].push_back(std::move(f));
  }
  j["average"] = {{"acc", report.average.acc},
                  {"f1", report.average.f1},
                  {"auc", number_or_null(report.average.auc)}};
  return j;
}

std::string metrics_csv(const RunReport& report) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& fold : report.folds) {
    for (const auto& m : fold.rounds) {
      const bool probed = m.target.has_value();
      out += join({u(fold.held_out), u(m.round), m.warmup ? "1" : "0",
                   format_number(m.source_val_loss), format_number(m.source_val_acc),
                   format_number(mean_train_loss(m)), probed ? format_number(m.target->acc) : "",
                   probed ? format_number(m.target->f1) : "",
                   probed && m.target->auc ? format_number(*m.target->auc) : ""});
      out += '\n';
    }
  }
  return out;
}

std::string sha_log_csv(const RunReport& report) {
  std::string out(kShaLogHeader);
  out += '\n';
  for (const auto& fold : report.folds) {
    for (const auto& m : fold.rounds) {
      for (const auto& c : m.clients) {
        out += join({u(fold.held_out), u(m.round), u(c.client), format_number(c.raw_score),
                     format_number(c.post_dense_score), format_number(c.weight)});
        out += '\n';
      }
    }
  }
  return out;
}

std::string train_trace_csv(const RunReport& report) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& fold : report.folds) {
    for (const auto& m : fold.rounds) {
      for (const auto& c : m.clients) {
        for (const auto& t : c.trace) {
          out += join({u(fold.held_out), u(m.round), u(c.client), u(t.batch),
                       format_number(t.l_cls_g), format_number(t.l_dis), format_number(t.l_cls_s),
                       format_number(t.l_sim)});
          out += '\n';
        }
      }
    }
  }
  return out;
}

std::size_t CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  require(it != header.end(), "csv: missing column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

CsvTable parse_csv_table(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      cells.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (table.header.empty()) {
      table.header = std::move(cells);
    } else {
      require(cells.size() == table.header.size(),
              "csv line " + std::to_string(line_no) + ": expected " +
                  std::to_string(table.header.size()) + " cells, got " + std::to_string(cells.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  require(!table.header.empty(), "csv: empty document");
  return table;
}

std::string line_plot_svg(std::string_view title, std::string_view x_label,
                          std::string_view y_label, const std::vector<Series>& series) {
  constexpr double W = 640, H = 400, left = 70, right = 160, top = 40, bottom = 50;
  constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                     "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  auto sx = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape_xml(title) << "</text>\n";
  svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    svg << "<text x=\"" << sx(fx) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
        << tick_label(fx, x1 - x0) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << sy(fy) + 4 << "\" text-anchor=\"end\">"
        << tick_label(fy, y1 - y0) << "</text>\n";
    svg << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << sy(fy) << "\" y2=\""
        << sy(fy) << "\" stroke=\"#ddd\"/>\n";
  }
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">"
      << escape_xml(x_label) << "</text>\n";
  svg << "<text transform=\"translate(16," << top + ph / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto* color = palette[k % std::size(palette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[k].points) svg << sx(x) << ',' << sy(y) << ' ';
    svg << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    svg << "<line x1=\"" << left + pw + 10 << "\" x2=\"" << left + pw + 30 << "\" y1=\"" << ly - 4
        << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 36 << "\" y=\"" << ly << "\">" << escape_xml(series[k].name)
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string loss_plot_from_csv(std::string_view metrics_csv_text) {
  return line_plot_svg("Source validation loss", "round", "cross-entropy",
                       series_by_domain(metrics_csv_text, "source_val_loss"));
}

std::string accuracy_plot_from_csv(std::string_view metrics_csv_text) {
  auto series = series_by_domain(metrics_csv_text, "target_acc");
  // Without per-round probing only the final round has a target accuracy,
  // so fall back to source validation accuracy curves.
  const bool curves = std::any_of(series.begin(), series.end(),
                                  [](const Series& s) { return s.points.size() > 1; });
  if (!curves) {
    return line_plot_svg("Source validation accuracy", "round", "accuracy",
                         series_by_domain(metrics_csv_text, "source_val_acc"));
  }
  return line_plot_svg("Held-out domain accuracy", "round", "accuracy", series);
}

std::string sweep_plot_from_csv(std::string_view sweep_csv_text) {
  const auto table = parse_csv_table(sweep_csv_text);
  const auto c_param = table.column("param");
  const auto c_value = table.column("value");
  std::vector<Series> series;
  for (const char* metric : {"acc", "f1", "auc"}) {
    const auto c = table.column(metric);
    Series s{metric, {}};
    for (const auto& row : table.rows) {
      if (!row[c].empty()) s.points.emplace_back(std::stod(row[c_value]), std::stod(row[c]));
    }
    series.push_back(std::move(s));
  }
  const std::string param = table.rows.empty() ? "value" : table.rows.front()[c_param];
  return line_plot_svg("Average held-out metrics vs " + param, param, "metric", series);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_run_outputs(const std::filesystem::path& dir, const RunConfig& config,
                       const RunReport& report, const ModelArchs& archs) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_text(dir / "report.json", report_json(config, report).dump(2) + "\n");
  const auto metrics = metrics_csv(report);
  write_text(dir / "metrics.csv", metrics);
  write_text(dir / "sha_log.csv", sha_log_csv(report));
  write_text(dir / "train_trace.csv", train_trace_csv(report));
  write_text(dir / "loss_vs_round.svg", loss_plot_from_csv(metrics));
  write_text(dir / "accuracy_vs_round.svg", accuracy_plot_from_csv(metrics));
  for (const auto& fold : report.folds) {
    const auto tag = "heldout" + std::to_string(fold.held_out);
    save_checkpoint({ModelRole::global_task, fold.final_server.round, describe(archs.task),
                     fold.final_server.global_task},
                    dir / ("global_task_" + tag + ".json"));
    save_checkpoint({ModelRole::global_generator, fold.final_server.round, describe(archs.gen),
                     fold.final_server.global_gen},
                    dir / ("global_generator_" + tag + ".json"));
  }
}

}  // namespace feddag
