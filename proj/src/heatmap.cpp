#include "lamil/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace lamil {

namespace {

constexpr double kPixelsPerTile = 16.0;

void check_lengths(std::span<const Point> coords, std::span<const double> scores) {
  if (coords.size() != scores.size()) {
    throw std::invalid_argument("heatmap: " + std::to_string(coords.size()) + " tiles but " +
                                std::to_string(scores.size()) + " scores");
  }
}

}  // namespace

void write_scores_csv(std::ostream& out, std::span<const Point> coords,
                      std::span<const double> scores) {
  check_lengths(coords, scores);
  out << "tile_index,x,y,score\n";
  char buf[128];
  for (std::size_t i = 0; i < coords.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g,%.6f\n", i, coords[i][0], coords[i][1], scores[i]);
    out << buf;
  }
}

std::string score_color(double score) {
  const double s = std::clamp(score, 0.0, 1.0);
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - s)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "rgb(255,%d,%d)", fade, fade);
  return buf;
}

void write_heatmap_svg(std::ostream& out, std::span<const Point> coords,
                       std::span<const double> scores) {
  check_lengths(coords, scores);
  if (coords.empty()) throw std::invalid_argument("heatmap: no tiles");
  double min_x = coords[0][0], max_x = coords[0][0], min_y = coords[0][1], max_y = coords[0][1];
  for (const auto& p : coords) {
    min_x = std::min(min_x, p[0]);
    max_x = std::max(max_x, p[0]);
    min_y = std::min(min_y, p[1]);
    max_y = std::max(max_y, p[1]);
  }
  // Half a tile of margin on each side so edge squares are fully visible.
  const double width = (max_x - min_x + 1.0) * kPixelsPerTile;
  const double height = (max_y - min_y + 1.0) * kPixelsPerTile;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.2f\" height=\"%.2f\" "
                "viewBox=\"0 0 %.2f %.2f\">\n",
                width, height, width, height);
  out << buf;
  out << "<rect width=\"100%\" height=\"100%\" fill=\"rgb(235,235,235)\"/>\n";
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double x = (coords[i][0] - min_x) * kPixelsPerTile;
    const double y = (coords[i][1] - min_y) * kPixelsPerTile;
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" fill=\"%s\">"
                  "<title>tile %zu: %.4f</title></rect>\n",
                  x, y, kPixelsPerTile, kPixelsPerTile, score_color(scores[i]).c_str(), i,
                  scores[i]);
    out << buf;
  }
  out << "</svg>\n";
}

}  // namespace lamil
