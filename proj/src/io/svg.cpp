#include "twpa/io/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "twpa/error.hpp"

namespace twpa::io {

namespace {

constexpr double kW = 720.0, kH = 420.0;
constexpr double kLeft = 70.0, kRight = 160.0, kTop = 40.0, kBottom = 50.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> pts;
};

bool numeric(const std::string& s, double& out) {
  try {
    out = parse_double(s);
    return std::isfinite(out);
  } catch (const ConfigError&) {
    return false;
  }
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::vector<Series> collect(const CsvTable& t) {
  std::vector<Series> out;
  if (t.header.empty()) return out;
  if (t.has_column("quantity") && t.has_column("value")) {
    const std::size_t q = t.column("quantity"), v = t.column("value");
    std::map<std::string, std::size_t> idx;
    for (const auto& row : t.rows) {
      double x, y;
      if (!numeric(row[0], x) || !numeric(row[v], y)) continue;
      auto [it, fresh] = idx.try_emplace(row[q], out.size());
      if (fresh) out.push_back({row[q], {}});
      out[it->second].pts.emplace_back(x, y);
    }
    return out;
  }
  for (std::size_t c = 1; c < t.header.size(); ++c) {
    Series s{t.header[c], {}};
    for (const auto& row : t.rows) {
      double x, y;
      if (numeric(row[0], x) && numeric(row[c], y)) s.pts.emplace_back(x, y);
    }
    if (!s.pts.empty()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::string line_chart_svg(const CsvTable& table, const std::string& title) {
  const auto series = collect(table);
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    for (auto [x, y] : s.pts) {
      x0 = std::min(x0, x); x1 = std::max(x1, x);
      y0 = std::min(y0, y); y1 = std::max(y1, y);
    }
  }
  if (!(x1 > x0)) { x0 -= 0.5; x1 += 0.5; }
  if (!(y1 > y0)) { y0 -= 0.5; y1 += 0.5; }
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
  auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"14\">" << escape(title) << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0, fy = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << sx(fx) << "\" y=\"" << kH - kBottom + 16
       << "\" text-anchor=\"middle\">" << fx << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(fy) + 4 << "\" text-anchor=\"end\">" << fy
       << "</text>\n";
  }
  if (!table.header.empty()) {
    os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">"
       << escape(table.header[0]) << "</text>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    for (auto [x, y] : series[k].pts) os << sx(x) << ',' << sy(y) << ' ';
    os << "\"/>\n";
    const double ly = kTop + 14.0 * static_cast<double>(k) + 8.0;
    os << "<line x1=\"" << kW - kRight + 10 << "\" y1=\"" << ly << "\" x2=\"" << kW - kRight + 30
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\"/>\n";
    os << "<text x=\"" << kW - kRight + 34 << "\" y=\"" << ly + 4 << "\">"
       << escape(series[k].name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const std::string& path, const CsvTable& table, const std::string& title) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << line_chart_svg(table, title);
}

}  // namespace twpa::io
