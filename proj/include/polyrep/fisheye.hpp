#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "polyrep/representations.hpp"

namespace polyrep {

/// Camera-frame direction: +z along the optical axis, +x right, +y down
/// (matching the image frame).
struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

double norm(const Vec3& v);
Vec3 normalized(const Vec3& v);

/// Radial fisheye model r(theta) = k1 t + k2 t^2 + k3 t^3 + k4 t^4 mapping
/// the angle from the optical axis to a pixel radius about the principal
/// point. r must be strictly increasing up to thetaMax (checked by dense
/// sampling at construction).
class CameraModel {
public:
    static CameraModel create(const std::array<double, 4>& k, Point2 principal,
                              int width, int height, double thetaMaxRad);

    /// Synthetic defaults: 1280x960, centered principal point,
    /// k = (400, 0, -20, 0), 95 degree half-angle (190 degree field of view).
    static CameraModel defaultSynthetic();

    const std::array<double, 4>& coefficients() const { return k_; }
    Point2 principalPoint() const { return principal_; }
    int width() const { return width_; }
    int height() const { return height_; }
    double thetaMax() const { return thetaMax_; }

    /// Pixel radius at angle theta from the axis.
    double radiusOf(double theta) const;
    /// Radius of the field-of-view rim, r(thetaMax).
    double maxRadius() const { return maxRadius_; }

    /// Image point of a viewing direction, or nullopt when the direction lies
    /// beyond thetaMax. Throws PreconditionError on a zero-length ray.
    std::optional<Point2> projectRay(const Vec3& ray) const;

    /// Unit direction whose projection is p. Solves r(theta) = |p - principal|
    /// by safeguarded Newton iteration to 1e-10 rad. Throws OutOfFovError when
    /// the radius exceeds maxRadius().
    Vec3 unprojectPoint(Point2 p) const;

private:
    CameraModel() = default;
    std::array<double, 4> k_{};
    Point2 principal_;
    int width_ = 0;
    int height_ = 0;
    double thetaMax_ = 0.0;
    double maxRadius_ = 0.0;
};

enum class ProjectionKind { rectilinear, cylindrical, piecewiseLinear };

std::string toString(ProjectionKind kind);
ProjectionKind projectionKindFromString(const std::string& s);

/// A corrected (undistorted) view of the fisheye image. focal is in pixels;
/// facetCount applies to the piecewise-linear kind only: that view is a fan
/// of facetCount tangent planes sharing the vertical axis, with hard
/// nearest-facet transitions.
struct Projection {
    ProjectionKind kind = ProjectionKind::cylindrical;
    double focal = 300.0;
    int facetCount = 4;
};

void validate(const Projection& p);

/// View-plane position (offset from the view center in pixels) -> direction.
/// horizontalHalfFov bounds the azimuth range used for facet layout.
Vec3 viewToRay(const Projection& p, Point2 viewOffset, double horizontalHalfFov);

/// Direction -> view-plane position, or nullopt when the direction cannot be
/// represented (behind a tangent plane, outside the facet fan, or on the
/// cylinder axis).
std::optional<Point2> rayToView(const Projection& p, const Vec3& ray,
                                double horizontalHalfFov);

/// Precomputed destination-to-source pixel map for binary-mask resampling
/// (nearest neighbor). correct: fisheye image -> corrected view;
/// distort: corrected view -> fisheye image.
class WarpMap {
public:
    enum class Direction { correct, distort };

    /// Throws LossOfFovError for a rectilinear projection when the camera
    /// half-angle reaches 90 degrees (the plane cannot carry the view).
    static WarpMap build(const CameraModel& cam, const Projection& proj,
                         Direction dir);

    int width() const { return width_; }
    int height() const { return height_; }

    RasterGrid apply(const RasterGrid& src) const;

private:
    WarpMap() = default;
    int width_ = 0;
    int height_ = 0;
    std::vector<std::int32_t> srcIndex_; // -1 where the view has no preimage
};

/// One-shot warp of an instance mask (grid must match the camera canvas).
InstanceMask warpMask(const InstanceMask& m, const CameraModel& cam,
                      const Projection& proj, WarpMap::Direction dir);

} // namespace polyrep
