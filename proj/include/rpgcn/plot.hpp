#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rpgcn/dataset.hpp"
#include "rpgcn/error.hpp"
#include "rpgcn/graph.hpp"

namespace rpgcn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string comment;  // text of a leading "# ..." line, if any

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::Parse, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      if (t.header.empty() && t.comment.empty()) t.comment = line.substr(1);
      continue;
    }
    std::vector<std::string> cells;
    for (auto v : detail::split_commas(line)) cells.emplace_back(v);
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) {
        throw Error(ErrorKind::Parse, path + ": row " + std::to_string(t.rows.size() + 1) + " has " +
                                          std::to_string(cells.size()) + " cells, expected " +
                                          std::to_string(t.header.size()));
      }
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty() || t.rows.empty()) throw Error(ErrorKind::Parse, path + ": no data rows");
  return t;
}

namespace detail {

inline double cell_number(const std::string& s, const std::string& what) {
  const auto v = parse_double(s);
  if (!v) throw Error(ErrorKind::Parse, "non-numeric " + what + " '" + s + "'");
  return *v;
}

inline std::string xml_escape(const std::string& s) {
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

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kLeft = 70;
constexpr double kRight = 20;
constexpr double kTop = 40;
constexpr double kBottom = 60;

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return colors[k % 8];
}

inline void svg_open(std::ostream& o, const std::string& title, const std::string& comment) {
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comment.empty()) o << "<!--" << xml_escape(comment) << " -->\n";
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << xml_escape(title) << "</text>\n";
}

inline void svg_axes(std::ostream& o, double y_max, const std::string& y_label, const std::string& x_label) {
  const double x0 = kLeft;
  const double y0 = kHeight - kBottom;
  o << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << y0
    << "\" stroke=\"black\"/>\n"
    << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << kTop
    << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = y_max * k / 4.0;
    const double y = y0 - (y0 - kTop) * k / 4.0;
    o << "<text x=\"" << x0 - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  o << "<text x=\"16\" y=\"" << (kTop + y0) / 2 << "\" transform=\"rotate(-90 16 " << (kTop + y0) / 2
    << ")\" text-anchor=\"middle\">" << xml_escape(y_label) << "</text>\n"
    << "<text x=\"" << (x0 + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
    << "\" text-anchor=\"middle\">" << xml_escape(x_label) << "</text>\n";
}

inline void sweep_chart(std::ostream& o, const CsvTable& t, const std::string& title) {
  const auto ct = t.column("T");
  const auto cs = t.column("std_v0");
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : t.rows) pts.emplace_back(cell_number(r[ct], "T"), cell_number(r[cs], "std_v0"));
  double x_min = pts.front().first;
  double x_max = pts.front().first;
  double y_max = 0.0;
  for (const auto& [x, y] : pts) {
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_max = std::max(y_max, y);
  }
  if (y_max <= 0.0) y_max = 1.0;
  if (x_max == x_min) x_max = x_min + 1.0;
  svg_open(o, title, t.comment);
  svg_axes(o, y_max, "std of v0", "number of trees T");
  auto sx = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * (kWidth - kLeft - kRight); };
  auto sy = [&](double y) { return kHeight - kBottom - y / y_max * (kHeight - kTop - kBottom); };
  o << "<polyline class=\"series\" fill=\"none\" stroke=\"" << palette(0) << "\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < pts.size(); ++k) o << (k ? " " : "") << sx(pts[k].first) << ',' << sy(pts[k].second);
  o << "\"/>\n";
  for (const auto& [x, y] : pts) {
    o << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << palette(0) << "\"/>\n"
      << "<text x=\"" << sx(x) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
      << fmt(x) << "</text>\n";
  }
  o << "</svg>\n";
}

/// Bars of the per-(builder, dataset) mean of `value_col`, grouped by builder.
inline void grouped_bars(std::ostream& o, const CsvTable& t, const std::string& value_col,
                         const std::string& title, const std::string& y_label) {
  const auto cb = t.column("builder");
  const auto cd = t.column("dataset");
  const auto cv = t.column(value_col);
  std::vector<std::string> builders;
  std::vector<std::string> datasets;
  std::map<std::pair<std::string, std::string>, std::pair<double, int>> sums;
  for (const auto& r : t.rows) {
    if (std::find(builders.begin(), builders.end(), r[cb]) == builders.end()) builders.push_back(r[cb]);
    if (std::find(datasets.begin(), datasets.end(), r[cd]) == datasets.end()) datasets.push_back(r[cd]);
    auto& s = sums[{r[cb], r[cd]}];
    s.first += cell_number(r[cv], value_col);
    s.second += 1;
  }
  double y_max = 0.0;
  for (const auto& [key, s] : sums) y_max = std::max(y_max, s.first / s.second);
  if (y_max <= 0.0) y_max = 1.0;
  svg_open(o, title, t.comment);
  svg_axes(o, y_max, y_label, "graph builder");
  const double plot_w = kWidth - kLeft - kRight;
  const double group_w = plot_w / static_cast<double>(builders.size());
  const double bar_w = group_w * 0.8 / static_cast<double>(datasets.size());
  const double y0 = kHeight - kBottom;
  for (std::size_t g = 0; g < builders.size(); ++g) {
    const double gx = kLeft + group_w * static_cast<double>(g) + group_w * 0.1;
    o << "<g class=\"group\" data-builder=\"" << xml_escape(builders[g]) << "\">\n";
    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto it = sums.find({builders[g], datasets[d]});
      if (it == sums.end()) continue;
      const double v = it->second.first / it->second.second;
      const double h = v / y_max * (y0 - kTop);
      o << "  <rect x=\"" << gx + bar_w * static_cast<double>(d) << "\" y=\"" << y0 - h << "\" width=\""
        << bar_w * 0.95 << "\" height=\"" << h << "\" fill=\"" << palette(d) << "\"><title>"
        << xml_escape(datasets[d]) << ": " << fmt(v) << "</title></rect>\n";
    }
    o << "  <text x=\"" << gx + group_w * 0.4 << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">"
      << xml_escape(builders[g]) << "</text>\n</g>\n";
  }
  for (std::size_t d = 0; d < datasets.size(); ++d) {
    const double ly = kTop + 14.0 * static_cast<double>(d);
    o << "<rect x=\"" << kWidth - kRight - 120 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << palette(d) << "\"/><text x=\"" << kWidth - kRight - 105 << "\" y=\"" << ly << "\">"
      << xml_escape(datasets[d]) << "</text>\n";
  }
  o << "</svg>\n";
}

}  // namespace detail

/// Renders every CSV into SVG charts under `out_dir`; returns the files written.
/// Sweep CSVs become line charts, result CSVs become accuracy and
/// total-weight bar charts grouped by builder.
inline std::vector<std::filesystem::path> emit_plots(const std::vector<std::string>& csv_paths,
                                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& path, auto&& fn) {
    std::ofstream o(path, std::ios::binary);
    if (!o) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    fn(o);
    written.push_back(path);
  };
  for (const auto& csv : csv_paths) {
    const auto table = read_csv_table(csv);
    const auto stem = fs::path(csv).stem().string();
    const bool is_sweep = std::find(table.header.begin(), table.header.end(), "std_v0") != table.header.end();
    const bool is_result =
        std::find(table.header.begin(), table.header.end(), "test_accuracy") != table.header.end();
    if (is_sweep) {
      emit(fs::path(out_dir) / (stem + ".svg"),
           [&](std::ostream& o) { detail::sweep_chart(o, table, "Connectivity sweep (" + stem + ")"); });
    } else if (is_result) {
      emit(fs::path(out_dir) / (stem + "_accuracy.svg"), [&](std::ostream& o) {
        detail::grouped_bars(o, table, "test_accuracy", "Mean test accuracy", "test accuracy");
      });
      emit(fs::path(out_dir) / (stem + "_total_weight.svg"), [&](std::ostream& o) {
        detail::grouped_bars(o, table, "total_weight", "Mean total adjacency weight", "total weight");
      });
    } else {
      throw Error(ErrorKind::Parse, csv + ": not a sweep or result CSV");
    }
  }
  return written;
}

}  // namespace rpgcn
