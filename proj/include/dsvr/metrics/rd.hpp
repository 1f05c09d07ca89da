#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dsvr::metrics {

struct RDPoint {
  long long model_size = 0;
  double bpp = 0.0;
  double psnr = 0.0;
  double ms_ssim = 0.0;
};

struct RDCurve {
  std::vector<RDPoint> points;          // sorted by bpp
  std::vector<std::size_t> inversions;  // i where psnr[i] < psnr[i-1]
  std::vector<std::string> warnings;

  // size_params,bpp,psnr,ms_ssim
  void write_csv(const std::filesystem::path& file) const;
  std::string summary() const;
};

// Needs at least two points. Points with equal bpp collapse to the one with
// the highest PSNR (with a warning).
RDCurve aggregate_rd(std::vector<RDPoint> points);

std::vector<RDPoint> read_rd_csv(const std::filesystem::path& file);

// PSNR-vs-bpp line chart as a standalone SVG document. Accepts any number of
// points, including one.
void write_rd_svg(const std::vector<RDPoint>& points, const std::filesystem::path& file,
                  const std::string& title);

}  // namespace dsvr::metrics
