#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "lamil/graph.hpp"

namespace lamil {

// "tile_index,x,y,score" with one row per tile.
void write_scores_csv(std::ostream& out, std::span<const Point> coords,
                      std::span<const double> scores);

// White (score 0) to red (score 1) fill for a score in [0, 1].
std::string score_color(double score);

// One unit square per tile centred on its coordinate.
void write_heatmap_svg(std::ostream& out, std::span<const Point> coords,
                       std::span<const double> scores);

}  // namespace lamil
