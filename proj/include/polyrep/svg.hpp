#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyrep/dataset_io.hpp"

namespace polyrep {

/// Closed boundary loops of the occupied region, in pixel-corner
/// coordinates. Outer loops wind clockwise on screen (y down), holes the
/// opposite way, so even-odd filling renders them correctly. Collinear
/// corners are merged.
std::vector<std::vector<Point2>> traceOutlines(const RasterGrid& grid);

/// One drawable prediction: representation outline plus an optional IoU tag.
struct OverlayShape {
    Representation rep;
    ClassLabel classLabel = ClassLabel::vehicle;
    std::optional<double> iou;
};

/// Self-contained SVG document: instance masks filled translucently,
/// representation outlines stroked, IoU labels next to each shape.
std::string frameOverlaySvg(int width, int height,
                            std::span<const FrameInstance> instances,
                            std::span<const OverlayShape> shapes);

} // namespace polyrep
