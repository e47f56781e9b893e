#include "lds/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lds/error.hpp"

namespace lds {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMargin = 56;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  out << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title
      << "</text>\n";
}

}  // namespace

std::string loss_curve_svg(const std::vector<double>& losses,
                           const std::string& title) {
  std::ostringstream out;
  open_svg(out, title);
  if (losses.empty()) {
    out << "</svg>\n";
    return out.str();
  }

  double lo = 0.0, hi = 0.0;
  bool first = true;
  std::vector<double> logs(losses.size());
  for (size_t i = 0; i < losses.size(); ++i) {
    logs[i] = std::log10(std::max(losses[i], 1e-300));
    if (first) {
      lo = hi = logs[i];
      first = false;
    } else {
      lo = std::min(lo, logs[i]);
      hi = std::max(hi, logs[i]);
    }
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;

  const double plot_w = kWidth - 2 * kMargin;
  const double plot_h = kHeight - 2 * kMargin;
  auto px = [&](double i) {
    return kMargin + plot_w * (losses.size() > 1
                                   ? i / double(losses.size() - 1)
                                   : 0.5);
  };
  auto py = [&](double v) {
    return kHeight - kMargin - plot_h * (v - lo) / (hi - lo);
  };

  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
      << num(plot_w) << "\" height=\"" << num(plot_h)
      << "\" fill=\"none\" stroke=\"#888\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (hi - lo) * tick / 4.0;
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << num(py(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">1e" << num(v) << "</text>\n";
    const double i = (losses.size() - 1) * tick / 4.0;
    out << "<text x=\"" << num(px(i)) << "\" y=\"" << kHeight - kMargin + 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << num(std::round(i)) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"12\">iteration</text>\n";

  out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
         "points=\"";
  for (size_t i = 0; i < losses.size(); ++i) {
    if (i) out << " ";
    out << num(px(double(i))) << "," << num(py(logs[i]));
  }
  out << "\"/>\n</svg>\n";
  return out.str();
}

std::string eigen_plane_svg(
    const std::vector<std::vector<std::complex<double>>>& trace,
    const std::vector<std::complex<double>>& truth, const std::string& title) {
  std::ostringstream out;
  open_svg(out, title);

  double extent = 1.3;
  for (const auto& eigs : trace) {
    for (const auto& z : eigs) {
      extent = std::max({extent, std::abs(z.real()), std::abs(z.imag())});
    }
  }
  for (const auto& z : truth) {
    extent = std::max({extent, std::abs(z.real()), std::abs(z.imag())});
  }
  extent *= 1.1;

  const double plot = std::min(kWidth, kHeight) - 2 * kMargin;
  const double cx = kWidth / 2.0;
  const double cy = kHeight / 2.0 + 10.0;
  auto px = [&](double re) { return cx + plot / 2.0 * re / extent; };
  auto py = [&](double im) { return cy - plot / 2.0 * im / extent; };

  out << "<line x1=\"" << num(px(-extent)) << "\" y1=\"" << num(cy)
      << "\" x2=\"" << num(px(extent)) << "\" y2=\"" << num(cy)
      << "\" stroke=\"#bbb\"/>\n";
  out << "<line x1=\"" << num(cx) << "\" y1=\"" << num(py(-extent))
      << "\" x2=\"" << num(cx) << "\" y2=\"" << num(py(extent))
      << "\" stroke=\"#bbb\"/>\n";
  out << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\""
      << num(plot / 2.0 / extent)
      << "\" fill=\"none\" stroke=\"#666\" stroke-dasharray=\"4 3\"/>\n";

  const size_t total = trace.size();
  for (size_t it = 0; it < total; ++it) {
    const double opacity = total > 1 ? 0.08 + 0.92 * double(it) / double(total - 1)
                                     : 1.0;
    for (const auto& z : trace[it]) {
      out << "<circle cx=\"" << num(px(z.real())) << "\" cy=\""
          << num(py(z.imag())) << "\" r=\"2.2\" fill=\"#2ca02c\" "
          << "fill-opacity=\"" << num(opacity) << "\"/>\n";
    }
  }

  for (const auto& z : truth) {
    const double x = px(z.real());
    const double y = py(z.imag());
    const double r = 7.0;
    out << "<path d=\"";
    for (int k = 0; k < 10; ++k) {
      const double ang = -M_PI / 2.0 + k * M_PI / 5.0;
      const double rr = (k % 2 == 0) ? r : r * 0.42;
      out << (k == 0 ? "M" : "L") << num(x + rr * std::cos(ang)) << " "
          << num(y + rr * std::sin(ang));
    }
    out << "Z\" fill=\"#d62728\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << content;
}

}  // namespace lds
