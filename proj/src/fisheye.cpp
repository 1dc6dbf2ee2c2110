#include "polyrep/fisheye.hpp"

#include <algorithm>
#include <cmath>

#include "polyrep/errors.hpp"

namespace polyrep {

namespace {

constexpr double kAxisEps = 1e-12;
constexpr double kRimSlack = 1e-9;

double polyR(const std::array<double, 4>& k, double t) {
    return ((k[3] * t + k[2]) * t + k[1]) * t * t + k[0] * t;
}

double polyDr(const std::array<double, 4>& k, double t) {
    return ((4.0 * k[3] * t + 3.0 * k[2]) * t + 2.0 * k[1]) * t + k[0];
}

/// Rotation about the vertical (y) axis; maps +z to (sin a, 0, cos a).
Vec3 rotateY(const Vec3& v, double a) {
    const double c = std::cos(a), s = std::sin(a);
    return {v.x * c + v.z * s, v.y, -v.x * s + v.z * c};
}

double facetWidth(const Projection& p, double halfFov) {
    return 2.0 * halfFov / p.facetCount;
}

double facetCenter(const Projection& p, double halfFov, int facet) {
    return -halfFov + (facet + 0.5) * facetWidth(p, halfFov);
}

int facetOf(const Projection& p, double halfFov, double azimuth) {
    const int i = static_cast<int>(std::floor((azimuth + halfFov) / facetWidth(p, halfFov)));
    return std::clamp(i, 0, p.facetCount - 1);
}

} // namespace

double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }

Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    if (!(n > 0.0) || !std::isfinite(n))
        throw PreconditionError("cannot normalize a zero or non-finite vector");
    return {v.x / n, v.y / n, v.z / n};
}

CameraModel CameraModel::create(const std::array<double, 4>& k, Point2 principal,
                                int width, int height, double thetaMaxRad) {
    for (double c : k)
        if (!std::isfinite(c)) throw PreconditionError("camera coefficients must be finite");
    if (!(k[0] > 0.0)) throw PreconditionError("leading radial coefficient must be positive");
    if (!std::isfinite(principal.x) || !std::isfinite(principal.y))
        throw PreconditionError("principal point must be finite");
    if (width < 1 || height < 1) throw PreconditionError("image size must be positive");
    if (!(thetaMaxRad > 0.0) || !(thetaMaxRad < kPi))
        throw PreconditionError("thetaMax must lie in (0, pi)");

    constexpr int kSamples = 10000;
    double prev = 0.0;
    for (int i = 1; i <= kSamples; ++i) {
        const double t = thetaMaxRad * i / kSamples;
        const double r = polyR(k, t);
        if (!(r > prev))
            throw PreconditionError("radial polynomial must be strictly increasing up to thetaMax");
        prev = r;
    }

    CameraModel cam;
    cam.k_ = k;
    cam.principal_ = principal;
    cam.width_ = width;
    cam.height_ = height;
    cam.thetaMax_ = thetaMaxRad;
    cam.maxRadius_ = polyR(k, thetaMaxRad);
    return cam;
}

CameraModel CameraModel::defaultSynthetic() {
    return create({400.0, 0.0, -20.0, 0.0}, {640.0, 480.0}, 1280, 960, degToRad(95.0));
}

double CameraModel::radiusOf(double theta) const { return polyR(k_, theta); }

std::optional<Point2> CameraModel::projectRay(const Vec3& ray) const {
    const Vec3 d = normalized(ray);
    const double planar = std::hypot(d.x, d.y);
    const double theta = std::atan2(planar, d.z);
    if (theta > thetaMax_) return std::nullopt;
    if (planar < kAxisEps) return principal_;
    const double r = polyR(k_, theta);
    return Point2{principal_.x + r * d.x / planar, principal_.y + r * d.y / planar};
}

Vec3 CameraModel::unprojectPoint(Point2 p) const {
    const double dx = p.x - principal_.x;
    const double dy = p.y - principal_.y;
    const double rho = std::hypot(dx, dy);
    if (!std::isfinite(rho)) throw PreconditionError("image point must be finite");
    if (rho > maxRadius_ + kRimSlack)
        throw OutOfFovError("image point lies beyond the field-of-view rim");
    if (rho < kAxisEps) return {0.0, 0.0, 1.0};

    const double target = std::min(rho, maxRadius_);
    double lo = 0.0, hi = thetaMax_;
    double t = std::clamp(target / k_[0], 0.0, thetaMax_);
    constexpr double kTol = 1e-10;
    for (int iter = 0; iter < 200; ++iter) {
        const double f = polyR(k_, t) - target;
        if (f > 0.0) hi = t; else lo = t;
        const double df = polyDr(k_, t);
        double next = df > 0.0 ? t - f / df : 0.5 * (lo + hi);
        if (!(next >= lo) || !(next <= hi)) next = 0.5 * (lo + hi);
        const double step = std::abs(next - t);
        t = next;
        if (step < kTol) break;
    }

    const double s = std::sin(t), c = std::cos(t);
    return {s * dx / rho, s * dy / rho, c};
}

std::string toString(ProjectionKind kind) {
    switch (kind) {
        case ProjectionKind::rectilinear: return "rectilinear";
        case ProjectionKind::cylindrical: return "cylindrical";
        case ProjectionKind::piecewiseLinear: return "piecewiseLinear";
    }
    throw PreconditionError("unknown projection kind");
}

ProjectionKind projectionKindFromString(const std::string& s) {
    if (s == "rectilinear") return ProjectionKind::rectilinear;
    if (s == "cylindrical") return ProjectionKind::cylindrical;
    if (s == "piecewiseLinear") return ProjectionKind::piecewiseLinear;
    throw PreconditionError("unknown projection kind: " + s);
}

void validate(const Projection& p) {
    if (!(p.focal > 0.0) || !std::isfinite(p.focal))
        throw PreconditionError("projection focal length must be positive");
    if (p.kind == ProjectionKind::piecewiseLinear && p.facetCount < 2)
        throw PreconditionError("piecewise-linear projection needs at least two facets");
}

Vec3 viewToRay(const Projection& p, Point2 viewOffset, double horizontalHalfFov) {
    validate(p);
    switch (p.kind) {
        case ProjectionKind::rectilinear:
            return normalized({viewOffset.x / p.focal, viewOffset.y / p.focal, 1.0});
        case ProjectionKind::cylindrical: {
            const double phi = viewOffset.x / p.focal;
            return normalized({std::sin(phi), viewOffset.y / p.focal, std::cos(phi)});
        }
        case ProjectionKind::piecewiseLinear: {
            const double phi = viewOffset.x / p.focal;
            const double center = facetCenter(p, horizontalHalfFov,
                                              facetOf(p, horizontalHalfFov, phi));
            const Vec3 local = normalized(
                {std::tan(phi - center), viewOffset.y / p.focal, 1.0});
            return rotateY(local, center);
        }
    }
    throw PreconditionError("unknown projection kind");
}

std::optional<Point2> rayToView(const Projection& p, const Vec3& ray,
                                double horizontalHalfFov) {
    validate(p);
    const Vec3 d = normalized(ray);
    switch (p.kind) {
        case ProjectionKind::rectilinear: {
            if (d.z < kAxisEps) return std::nullopt;
            return Point2{p.focal * d.x / d.z, p.focal * d.y / d.z};
        }
        case ProjectionKind::cylindrical: {
            const double planar = std::hypot(d.x, d.z);
            if (planar < kAxisEps) return std::nullopt;
            const double phi = std::atan2(d.x, d.z);
            return Point2{p.focal * phi, p.focal * d.y / planar};
        }
        case ProjectionKind::piecewiseLinear: {
            if (std::hypot(d.x, d.z) < kAxisEps) return std::nullopt;
            const double phi = std::atan2(d.x, d.z);
            if (std::abs(phi) > horizontalHalfFov) return std::nullopt;
            const double center = facetCenter(p, horizontalHalfFov,
                                              facetOf(p, horizontalHalfFov, phi));
            const Vec3 local = rotateY(d, -center);
            if (local.z < kAxisEps) return std::nullopt;
            return Point2{p.focal * phi, p.focal * local.y / local.z};
        }
    }
    throw PreconditionError("unknown projection kind");
}

WarpMap WarpMap::build(const CameraModel& cam, const Projection& proj,
                       Direction dir) {
    validate(proj);
    if (proj.kind == ProjectionKind::rectilinear && cam.thetaMax() >= 0.5 * kPi)
        throw LossOfFovError(
            "rectilinear projection cannot carry a field of view of 180 degrees or more");

    WarpMap map;
    map.width_ = cam.width();
    map.height_ = cam.height();
    map.srcIndex_.assign(static_cast<std::size_t>(map.width_) * map.height_, -1);

    const double halfFov = cam.thetaMax();
    const Point2 viewCenter{0.5 * map.width_, 0.5 * map.height_};

    for (int y = 0; y < map.height_; ++y) {
        for (int x = 0; x < map.width_; ++x) {
            const Point2 dest{x + 0.5, y + 0.5};
            std::optional<Point2> src;
            if (dir == Direction::correct) {
                const Vec3 ray = viewToRay(proj, dest - viewCenter, halfFov);
                src = cam.projectRay(ray);
            } else {
                const double rho = std::hypot(dest.x - cam.principalPoint().x,
                                              dest.y - cam.principalPoint().y);
                if (rho <= cam.maxRadius()) {
                    const Vec3 ray = cam.unprojectPoint(dest);
                    if (auto v = rayToView(proj, ray, halfFov))
                        src = *v + viewCenter;
                }
            }
            if (!src) continue;
            const int sx = static_cast<int>(std::floor(src->x));
            const int sy = static_cast<int>(std::floor(src->y));
            if (sx < 0 || sx >= map.width_ || sy < 0 || sy >= map.height_) continue;
            map.srcIndex_[static_cast<std::size_t>(y) * map.width_ + x] =
                sy * map.width_ + sx;
        }
    }
    return map;
}

RasterGrid WarpMap::apply(const RasterGrid& src) const {
    if (src.width() != width_ || src.height() != height_)
        throw PreconditionError("mask size does not match the warp canvas");
    RasterGrid out(width_, height_);
    std::size_t i = 0;
    for (int y = 0; y < height_; ++y) {
        for (int x = 0; x < width_; ++x, ++i) {
            const std::int32_t s = srcIndex_[i];
            if (s >= 0 && src.at(s % width_, s / width_)) out.set(x, y, true);
        }
    }
    return out;
}

InstanceMask warpMask(const InstanceMask& m, const CameraModel& cam,
                      const Projection& proj, WarpMap::Direction dir) {
    const WarpMap map = WarpMap::build(cam, proj, dir);
    return InstanceMask{map.apply(m.grid), m.label};
}

} // namespace polyrep
