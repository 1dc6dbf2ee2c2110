#pragma once

#include <string>
#include <variant>
#include <vector>

#include "polyrep/geometry.hpp"

namespace polyrep {

enum class ClassLabel { vehicle, pedestrian };

std::string toString(ClassLabel label);
ClassLabel classLabelFromString(const std::string& s);

/// Axis-aligned box: center and extents in pixels.
struct BoundingBox {
    double cx = 0.0, cy = 0.0;
    double w = 0.0, h = 0.0;
};

/// Rotated box. thetaDeg is the angle of the w-axis from +x in degrees,
/// positive toward +y. Canonical form has w >= h and thetaDeg in (-90, 90].
struct OrientedBox {
    double cx = 0.0, cy = 0.0;
    double w = 0.0, h = 0.0;
    double thetaDeg = 0.0;
};

/// Ellipse sharing the oriented-box parameterization (inscribed form).
struct Ellipse {
    double cx = 0.0, cy = 0.0;
    double semiMajor = 0.0;
    double semiMinor = 0.0;
    double thetaDeg = 0.0;
};

/// Contour as radii sampled at fixed angular steps of 360/R degrees about a
/// pole; radius k belongs to angle k*360/R. One parameter per vertex.
struct PolarPolygon {
    double cx = 0.0, cy = 0.0;
    std::vector<double> radii;

    int pointCount() const { return static_cast<int>(radii.size()); }
};

using Representation = std::variant<BoundingBox, OrientedBox, Ellipse, PolarPolygon>;

/// Binary instance mask on a pixel grid plus its class.
struct InstanceMask {
    RasterGrid grid;
    ClassLabel label = ClassLabel::vehicle;
};

void validate(const BoundingBox& b);
void validate(const OrientedBox& b);
void validate(const Ellipse& e);
void validate(const PolarPolygon& p);
void validate(const Representation& r);
void validate(const InstanceMask& m);

/// Wrap an angle into (-180, 180].
double wrapDeg180(double deg);

/// Reduce to the canonical parameterization: w >= h, thetaDeg in (-90, 90].
OrientedBox canonicalized(const OrientedBox& b);

/// Tightest axis-aligned box covering all occupied cells (cell extents).
BoundingBox maskToBoundingBox(const InstanceMask& m);

/// Minimum-area rectangle around the convex hull of occupied-cell corners
/// (rotating calipers), returned in canonical form.
OrientedBox maskToOrientedBox(const InstanceMask& m);

/// Ellipse inscribed in maskToOrientedBox(m): same center and angle,
/// semi-axes w/2 and h/2.
Ellipse maskToEllipse(const InstanceMask& m);

/// Polar contour about the occupied-cell centroid. Radius k is the farthest
/// extent of occupied cell centers along ray k*360/R, taken over cells whose
/// bearing is within +-(180/R) degrees of the ray; 0 when the bin is empty.
/// If diagnosticPoleInside is non-null it reports whether the pole cell is
/// occupied (the conversion proceeds either way).
PolarPolygon maskToPolarPolygon(const InstanceMask& m, int pointCount,
                                bool* diagnosticPoleInside = nullptr);

/// Uniform polygon view of any representation, for IoU and rendering.
/// Boxes become 4-gons, ellipses arcSegments-gons sampled uniformly in the
/// parameter angle, polar polygons R-gons (consecutive zero-radius vertices
/// are collapsed).
SimplePolygon toPolygon(const Representation& rep, int arcSegments = 64);

struct IoUConfig {
    int maskSupersample = 4;  ///< supersampling of the mask grid for oracle IoU
    int pairResolution = 512; ///< raster resolution for mask-free shape pairs
};

/// IoU between representations and/or masks. Box and oriented-box pairs take
/// the exact convex-clipping path; anything involving an ellipse, polar
/// polygon, or mask is measured on a supersampled raster. When a mask is
/// involved the evaluation frame is the mask's grid; shape area outside that
/// frame is clipped. Symmetric in its arguments.
double representationIoU(const Representation& a, const Representation& b,
                         const IoUConfig& cfg = {});
double representationIoU(const Representation& a, const InstanceMask& m,
                         const IoUConfig& cfg = {});
double representationIoU(const InstanceMask& m, const Representation& b,
                         const IoUConfig& cfg = {});
double representationIoU(const InstanceMask& a, const InstanceMask& b,
                         const IoUConfig& cfg = {});

enum class RepKind { box, orientedBox, ellipse, polarPolygon };

std::string toString(RepKind kind);
RepKind repKindFromString(const std::string& s);
RepKind kindOf(const Representation& r);

/// Representation family selector for studies and conversion: a kind plus the
/// sampling count used by polar polygons.
struct RepSpec {
    RepKind kind = RepKind::box;
    int points = 24;
};

Representation convertMask(const InstanceMask& m, const RepSpec& spec);

Bounds representationBounds(const Representation& r);

} // namespace polyrep
