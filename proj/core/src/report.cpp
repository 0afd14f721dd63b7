#include "frofa/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace frofa {

namespace fs = std::filesystem;

RunSummary read_run_summary(const fs::path& run_dir) {
  const fs::path path = run_dir / "summary.json";
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    RunSummary out;
    out.pipeline_id = j.at("pipeline_id").get<std::string>();
    out.config_hash = j.value("config_hash", "");
    for (const auto& s : j.at("shots")) {
      out.shot_means.emplace_back(s.at("shot").get<std::uint32_t>(), s.at("mean_top1").get<double>());
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed " + path.string() + ": " + e.what());
  }
}

std::vector<fs::path> find_runs(const std::vector<fs::path>& roots) {
  std::vector<fs::path> runs;
  for (const auto& root : roots) {
    if (!fs::is_directory(root)) throw std::invalid_argument("not a directory: " + root.string());
    if (fs::exists(root / "summary.json")) {
      runs.push_back(root);
      continue;
    }
    for (const auto& entry : fs::directory_iterator(root)) {
      if (entry.is_directory() && fs::exists(entry.path() / "summary.json")) runs.push_back(entry.path());
    }
  }
  std::sort(runs.begin(), runs.end());
  return runs;
}

std::vector<GainRow> compute_gains(const std::vector<RunSummary>& runs, const std::string& baseline_id) {
  const auto base = std::find_if(runs.begin(), runs.end(),
                                 [&](const RunSummary& r) { return r.pipeline_id == baseline_id; });
  if (base == runs.end()) throw std::invalid_argument("missing baseline id '" + baseline_id + "'");
  std::map<std::uint32_t, double> baseline(base->shot_means.begin(), base->shot_means.end());

  std::vector<GainRow> rows;
  for (const auto& [shot, base_mean] : baseline) {
    for (const auto& run : runs) {
      if (run.pipeline_id == baseline_id) continue;
      for (const auto& [s, mean] : run.shot_means) {
        if (s == shot) rows.push_back({shot, run.pipeline_id, base_mean, mean, mean - base_mean});
      }
    }
  }
  return rows;
}

std::string format_gain(double gain) {
  char buf[32];
  if (std::lround(gain * 1000.0) == 0) return "0.000";
  std::snprintf(buf, sizeof buf, "%+.3f", gain);
  return buf;
}

namespace {

std::string escape_xml(const std::string& s) {
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

std::string bar_chart(std::uint32_t shot, const std::vector<const GainRow*>& rows) {
  const double bar_w = 48, gap = 24, left = 60, top = 40, plot_h = 240;
  const double width = left + static_cast<double>(rows.size()) * (bar_w + gap) + gap;
  const double height = top + plot_h + 90;
  double span = 0.01;
  for (const auto* r : rows) span = std::max(span, std::abs(r->gain));
  const double zero_y = top + plot_h / 2;
  const double scale = (plot_h / 2) / span;

  char buf[512];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
                "font-family=\"sans-serif\" font-size=\"11\">\n",
                width, height);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<text x=\"%.0f\" y=\"20\" font-size=\"14\">%u-shot top-1 gain vs baseline</text>\n", left, shot);
  svg += buf;
  std::snprintf(buf, sizeof buf,
                "<line x1=\"%.0f\" y1=\"%.1f\" x2=\"%.0f\" y2=\"%.1f\" stroke=\"black\"/>\n", left - 10, zero_y,
                width - 10, zero_y);
  svg += buf;
  std::snprintf(buf, sizeof buf, "<text x=\"5\" y=\"%.1f\">%+.3f</text>\n", top + 4, span);
  svg += buf;
  std::snprintf(buf, sizeof buf, "<text x=\"5\" y=\"%.1f\">%+.3f</text>\n", top + plot_h + 4, -span);
  svg += buf;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double x = left + gap / 2 + static_cast<double>(i) * (bar_w + gap);
    const double h = std::abs(rows[i]->gain) * scale;
    const double y = rows[i]->gain >= 0 ? zero_y - h : zero_y;
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.0f\" height=\"%.1f\" fill=\"%s\"/>\n", x, y, bar_w,
                  h, rows[i]->gain >= 0 ? "#3b7dd8" : "#d8553b");
    svg += buf;
    std::snprintf(buf, sizeof buf, "<text x=\"%.1f\" y=\"%.1f\" text-anchor=\"middle\">%s</text>\n",
                  x + bar_w / 2, rows[i]->gain >= 0 ? y - 4 : y + h + 12, format_gain(rows[i]->gain).c_str());
    svg += buf;
    std::snprintf(buf, sizeof buf,
                  "<text transform=\"translate(%.1f,%.1f) rotate(35)\">", x + 4, top + plot_h + 16);
    svg += buf;
    svg += escape_xml(rows[i]->pipeline_id) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace

std::vector<fs::path> write_report(const std::vector<GainRow>& rows, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const fs::path csv_path = out_dir / "gains.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path.string());
  csv << "shot,pipeline_id,baseline_top1,top1,gain\n";
  char buf[64];
  std::map<std::uint32_t, std::vector<const GainRow*>> by_shot;
  for (const auto& r : rows) {
    csv << r.shot << ',' << r.pipeline_id << ',';
    std::snprintf(buf, sizeof buf, "%.3f,%.3f,", r.baseline_top1, r.top1);
    csv << buf << format_gain(r.gain) << '\n';
    by_shot[r.shot].push_back(&r);
  }
  written.push_back(csv_path);
  for (const auto& [shot, shot_rows] : by_shot) {
    const fs::path svg_path = out_dir / ("gains_shot" + std::to_string(shot) + ".svg");
    std::ofstream svg(svg_path);
    if (!svg) throw std::runtime_error("cannot write " + svg_path.string());
    svg << bar_chart(shot, shot_rows);
    written.push_back(svg_path);
  }
  return written;
}

}  // namespace frofa
