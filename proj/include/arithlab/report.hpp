#pragma once

#include <string>

#include "arithlab/eval.hpp"

namespace arithlab {

// Renders a grid as an SVG heatmap: linear red (0.0) to blue (1.0) cells,
// 2-decimal labels, m1/m2 axis labels, and a provenance comment.
void write_heatmap_svg(const std::string& path, const GridFile& grid, const std::string& provenance);

}  // namespace arithlab
