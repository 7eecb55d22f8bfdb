#include "itts/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "itts/trace_io.hpp"

namespace itts {

PathPlotData path_plot_data(const EpisodeTrace& trace) {
  PathPlotData d;
  d.source_length = trace.source_length();
  d.read_before = frame_reads(trace);
  auto padded = [&](const std::vector<double>& row) {
    std::vector<double> out(d.source_length, 0.0);
    std::copy_n(row.begin(), std::min(row.size(), out.size()), out.begin());
    return out;
  };
  for (const auto& st : trace.steps) {
    if (st.action == Action::kSpeak) d.weights.push_back(padded(st.alpha));
    for (const auto& row : st.forced_alpha) d.weights.push_back(padded(row));
  }
  return d;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

// White to dark blue.
std::string shade(double w) {
  w = std::clamp(w, 0.0, 1.0);
  const auto channel = [&](int from, int to) { return static_cast<int>(std::lround(from + (to - from) * w)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", channel(255, 8), channel(255, 48), channel(255, 107));
  return buf;
}

}  // namespace

std::string path_plot_svg(const PathPlotData& data, const std::string& title) {
  const std::size_t frames = data.read_before.size();
  const std::size_t n = data.source_length;
  if (data.weights.size() != frames) throw std::domain_error("path plot: one weight row per frame expected");
  const double cell = std::clamp(600.0 / std::max<std::size_t>(frames, 1), 4.0, 24.0);
  const double left = 50, top = 40;
  const double w = cell * static_cast<double>(frames), h = cell * static_cast<double>(n);

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(left + w + 20) << "\" height=\""
    << num(top + h + 50) << "\" data-frames=\"" << frames << "\" data-chars=\"" << n << "\">\n"
    << "<title>" << escape(title) << "</title>\n"
    << "<text x=\"" << num(left) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title)
    << "</text>\n<g class=\"heatmap\">\n";
  for (std::size_t s = 1; s <= frames; ++s) {
    for (std::size_t i = 1; i <= n; ++i) {
      const bool unread = i > data.read_before[s - 1];
      const double x = left + cell * static_cast<double>(s - 1);
      const double y = top + h - cell * static_cast<double>(i);
      o << "<rect class=\"cell" << (unread ? " unread" : "") << "\" data-s=\"" << s << "\" data-i=\"" << i
        << "\" x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(cell) << "\" height=\"" << num(cell)
        << "\" fill=\"" << (unread ? std::string("#bdbdbd") : shade(data.weights[s - 1][i - 1])) << "\"/>\n";
    }
  }
  o << "</g>\n";
  if (frames > 0) {
    o << "<polyline class=\"path\" fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
    for (std::size_t s = 1; s <= frames; ++s) {
      const double y = top + h - cell * static_cast<double>(data.read_before[s - 1]);
      o << num(left + cell * static_cast<double>(s - 1)) << ',' << num(y) << ' '
        << num(left + cell * static_cast<double>(s)) << ',' << num(y) << (s < frames ? " " : "");
    }
    o << "\"/>\n";
  }
  o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
    << "\" fill=\"none\" stroke=\"#000000\"/>\n"
    << "<text x=\"" << num(left + w / 2) << "\" y=\"" << num(top + h + 30)
    << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">output frame</text>\n"
    << "<text x=\"15\" y=\"" << num(top + h / 2) << "\" font-family=\"sans-serif\" font-size=\"12\""
    << " text-anchor=\"middle\" transform=\"rotate(-90 15 " << num(top + h / 2) << ")\">input character</text>\n"
    << "</svg>\n";
  return o.str();
}

std::string tradeoff_svg(const std::vector<EvalSummary>& rows, const std::string& title) {
  const double left = 70, top = 40, w = 480, h = 320;
  double max_mse = 0.0;
  for (const auto& r : rows) max_mse = std::max(max_mse, r.mean_mse);
  if (max_mse <= 0.0) max_mse = 1.0;
  max_mse *= 1.1;
  const auto px = [&](double d) { return left + w * std::clamp(d, 0.0, 1.0); };
  const auto py = [&](double m) { return top + h - h * (m / max_mse); };

  std::ostringstream o;
  o << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(left + w + 40) << "\" height=\""
    << num(top + h + 60) << "\">\n"
    << "<title>" << escape(title) << "</title>\n"
    << "<text x=\"" << num(left) << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << escape(title)
    << "</text>\n"
    << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
    << "\" fill=\"none\" stroke=\"#000000\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double d = k / 5.0;
    o << "<text x=\"" << num(px(d)) << "\" y=\"" << num(top + h + 16)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">" << num(d) << "</text>\n";
    char label[32];
    std::snprintf(label, sizeof label, "%.2e", max_mse * d);
    o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(max_mse * d) + 3)
      << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">" << label << "</text>\n";
  }
  o << "<text x=\"" << num(left + w / 2) << "\" y=\"" << num(top + h + 40)
    << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">latency d_T</text>\n"
    << "<text x=\"15\" y=\"" << num(top + h / 2) << "\" font-family=\"sans-serif\" font-size=\"12\""
    << " text-anchor=\"middle\" transform=\"rotate(-90 15 " << num(top + h / 2) << ")\">MSE</text>\n";
  for (const auto& r : rows) {
    o << "<circle class=\"point\" data-policy=\"" << escape(r.policy) << "\" cx=\"" << num(px(r.mean_d_T))
      << "\" cy=\"" << num(py(r.mean_mse)) << "\" r=\"5\" fill=\"#1f77b4\"/>\n"
      << "<text x=\"" << num(px(r.mean_d_T) + 8) << "\" y=\"" << num(py(r.mean_mse) - 6)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(r.policy) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace itts
