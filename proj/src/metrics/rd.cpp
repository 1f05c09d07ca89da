#include "dsvr/metrics/rd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "dsvr/error.hpp"

namespace dsvr::metrics {

RDCurve aggregate_rd(std::vector<RDPoint> points) {
  if (points.size() < 2) throw DataError("aggregate_rd needs at least two points");
  for (const auto& p : points) {
    if (!std::isfinite(p.bpp) || !std::isfinite(p.psnr) || !std::isfinite(p.ms_ssim) || p.ms_ssim > 1.0) {
      throw DataError("RD point has non-finite values or ms_ssim > 1");
    }
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  RDCurve curve;
  for (const auto& p : points) {
    if (!curve.points.empty() && curve.points.back().bpp == p.bpp) {
      std::ostringstream msg;
      msg << "duplicate bpp " << p.bpp << ": kept the point with the higher PSNR";
      curve.warnings.push_back(msg.str());
      if (p.psnr > curve.points.back().psnr) curve.points.back() = p;
      continue;
    }
    curve.points.push_back(p);
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    if (curve.points[i].psnr < curve.points[i - 1].psnr) curve.inversions.push_back(i);
  }
  return curve;
}

void RDCurve::write_csv(const std::filesystem::path& file) const {
  std::ofstream os(file);
  if (!os) throw DataError("cannot write " + file.string());
  os << "size_params,bpp,psnr,ms_ssim\n" << std::setprecision(10);
  for (const auto& p : points) {
    os << p.model_size << ',' << p.bpp << ',' << p.psnr << ',' << p.ms_ssim << '\n';
  }
}

std::string RDCurve::summary() const {
  std::ostringstream os;
  os << points.size() << " RD points";
  if (inversions.empty()) {
    os << ", PSNR monotone in bpp";
  } else {
    os << ", " << inversions.size() << " PSNR inversion(s) at bpp";
    for (auto i : inversions) os << ' ' << points[i].bpp;
  }
  for (const auto& w : warnings) os << "\nwarning: " << w;
  return os.str();
}

std::vector<RDPoint> read_rd_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw DataError("cannot read " + file.string());
  std::string line;
  std::getline(is, line);
  if (line != "size_params,bpp,psnr,ms_ssim") throw DataError(file.string() + " is not an RD table");
  std::vector<RDPoint> points;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    RDPoint p;
    char sep;
    if (!(ls >> p.model_size >> sep >> p.bpp >> sep >> p.psnr >> sep >> p.ms_ssim)) {
      throw DataError("malformed RD row: " + line);
    }
    points.push_back(p);
  }
  return points;
}

void write_rd_svg(const std::vector<RDPoint>& points, const std::filesystem::path& file,
                  const std::string& title) {
  constexpr double kW = 640, kH = 420, kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  std::vector<RDPoint> sorted = points;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RDPoint& a, const RDPoint& b) { return a.bpp < b.bpp; });
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!sorted.empty()) {
    x0 = x1 = sorted.front().bpp;
    y0 = y1 = sorted.front().psnr;
    for (const auto& p : sorted) {
      x0 = std::min(x0, p.bpp);
      x1 = std::max(x1, p.bpp);
      y0 = std::min(y0, p.psnr);
      y1 = std::max(y1, p.psnr);
    }
  }
  // Pad degenerate ranges so a single point lands mid-plot.
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  const double px = (x1 - x0) * 0.05, py = (y1 - y0) * 0.05;
  x0 -= px; x1 += px; y0 -= py; y1 += py;
  auto sx = [&](double v) { return kLeft + (v - x0) / (x1 - x0) * (kW - kLeft - kRight); };
  auto sy = [&](double v) { return kH - kBottom - (v - y0) / (y1 - y0) * (kH - kTop - kBottom); };

  std::ofstream os(file);
  if (!os) throw DataError("cannot write " + file.string());
  os << std::fixed << std::setprecision(2);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kH - kBottom << "\" x2=\"" << kW - kRight << "\" y2=\""
     << kH - kBottom << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kH - kBottom
     << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = x0 + (x1 - x0) * i / 4.0;
    const double yv = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << sx(xv) << "\" y=\"" << kH - kBottom + 16 << "\" text-anchor=\"middle\">"
       << std::setprecision(3) << xv << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << yv
       << "</text>\n" << std::setprecision(2);
  }
  os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 12 << "\" text-anchor=\"middle\">bits per pixel</text>\n";
  os << "<text x=\"16\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kH / 2
     << ")\">PSNR (dB)</text>\n";
  if (sorted.size() > 1) {
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
    for (const auto& p : sorted) os << sx(p.bpp) << ',' << sy(p.psnr) << ' ';
    os << "\"/>\n";
  }
  for (const auto& p : sorted) {
    os << "<circle cx=\"" << sx(p.bpp) << "\" cy=\"" << sy(p.psnr) << "\" r=\"4\" fill=\"#1f77b4\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace dsvr::metrics
