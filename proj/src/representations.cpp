#include "polyrep/representations.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace polyrep {

std::string toString(ClassLabel label) {
    switch (label) {
        case ClassLabel::vehicle: return "vehicle";
        case ClassLabel::pedestrian: return "pedestrian";
    }
    throw PreconditionError("unknown class label");
}

ClassLabel classLabelFromString(const std::string& s) {
    if (s == "vehicle") return ClassLabel::vehicle;
    if (s == "pedestrian") return ClassLabel::pedestrian;
    throw PreconditionError("unknown class label: " + s);
}

std::string toString(RepKind kind) {
    switch (kind) {
        case RepKind::box: return "box";
        case RepKind::orientedBox: return "obox";
        case RepKind::ellipse: return "ellipse";
        case RepKind::polarPolygon: return "polygon";
    }
    throw PreconditionError("unknown representation kind");
}

RepKind repKindFromString(const std::string& s) {
    if (s == "box") return RepKind::box;
    if (s == "obox") return RepKind::orientedBox;
    if (s == "ellipse") return RepKind::ellipse;
    if (s == "polygon") return RepKind::polarPolygon;
    throw PreconditionError("unknown representation kind: " + s);
}

RepKind kindOf(const Representation& r) {
    if (std::holds_alternative<BoundingBox>(r)) return RepKind::box;
    if (std::holds_alternative<OrientedBox>(r)) return RepKind::orientedBox;
    if (std::holds_alternative<Ellipse>(r)) return RepKind::ellipse;
    return RepKind::polarPolygon;
}

namespace {

constexpr double kAngleSlack = 1e-9;

bool finiteAll(std::initializer_list<double> vs) {
    for (double v : vs)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

void validate(const BoundingBox& b) {
    if (!finiteAll({b.cx, b.cy, b.w, b.h}) || b.w <= 0.0 || b.h <= 0.0)
        throw PreconditionError("bounding box requires finite fields and positive extents");
}

void validate(const OrientedBox& b) {
    if (!finiteAll({b.cx, b.cy, b.w, b.h, b.thetaDeg}) || b.w <= 0.0 || b.h <= 0.0)
        throw PreconditionError("oriented box requires finite fields and positive extents");
    if (b.thetaDeg < -180.0 - kAngleSlack || b.thetaDeg > 180.0 + kAngleSlack)
        throw PreconditionError("oriented box angle outside [-180, 180] degrees");
}

void validate(const Ellipse& e) {
    if (!finiteAll({e.cx, e.cy, e.semiMajor, e.semiMinor, e.thetaDeg}) ||
        e.semiMinor <= 0.0 || e.semiMajor < e.semiMinor)
        throw PreconditionError("ellipse requires semiMajor >= semiMinor > 0");
    if (e.thetaDeg < -180.0 - kAngleSlack || e.thetaDeg > 180.0 + kAngleSlack)
        throw PreconditionError("ellipse angle outside [-180, 180] degrees");
}

void validate(const PolarPolygon& p) {
    if (!finiteAll({p.cx, p.cy}) || p.radii.size() < 3)
        throw PreconditionError("polar polygon needs a finite pole and at least 3 radii");
    bool anyPositive = false;
    for (double r : p.radii) {
        if (!std::isfinite(r) || r < 0.0)
            throw PreconditionError("polar polygon radii must be finite and non-negative");
        anyPositive |= r > 0.0;
    }
    if (!anyPositive)
        throw PreconditionError("polar polygon needs at least one positive radius");
}

void validate(const Representation& r) {
    std::visit([](const auto& v) { validate(v); }, r);
}

void validate(const InstanceMask& m) {
    if (m.grid.empty())
        throw PreconditionError("instance mask has no occupied cells");
}

double wrapDeg180(double deg) {
    double d = std::fmod(deg, 360.0);
    if (d <= -180.0) d += 360.0;
    if (d > 180.0) d -= 360.0;
    return d;
}

OrientedBox canonicalized(const OrientedBox& b) {
    OrientedBox out = b;
    if (out.h > out.w) {
        std::swap(out.w, out.h);
        out.thetaDeg += 90.0;
    }
    out.thetaDeg = wrapDeg180(out.thetaDeg);
    if (out.thetaDeg > 90.0) out.thetaDeg -= 180.0;
    if (out.thetaDeg <= -90.0) out.thetaDeg += 180.0;
    return out;
}

// ---------------------------------------------------------------------------
// Mask scanning
// ---------------------------------------------------------------------------

namespace {

// Visit the maximal occupied runs [x0, x1) of row y.
template <typename Fn>
void forEachRun(const RasterGrid& g, int y, Fn&& fn) {
    const auto words = g.words();
    const int wpr = g.wordsPerRow();
    const std::size_t base = static_cast<std::size_t>(y) * wpr;
    int runStart = -1;
    for (int w = 0; w < wpr; ++w) {
        const std::uint64_t bits = words[base + w];
        const int offset = w * 64;
        int pos = 0;
        while (pos < 64) {
            if (runStart < 0) {
                const std::uint64_t rest = bits >> pos;
                if (rest == 0) break;
                pos += std::countr_zero(rest);
                runStart = offset + pos;
            } else {
                const std::uint64_t rest = ~(bits >> pos);
                if (rest == 0) {
                    pos = 64; // run continues into the next word
                    break;
                }
                pos += std::countr_zero(rest);
                if (pos >= 64) break;
                fn(runStart, offset + pos);
                runStart = -1;
            }
        }
    }
    if (runStart >= 0) fn(runStart, g.width());
}

struct CellRect {
    int x0 = 0, y0 = 0, x1 = -1, y1 = -1; // inclusive cell indices
    bool valid() const { return x1 >= x0 && y1 >= y0; }
};

CellRect occupiedCellBounds(const RasterGrid& g) {
    CellRect r{g.width(), g.height(), -1, -1};
    for (int y = 0; y < g.height(); ++y) {
        forEachRun(g, y, [&](int x0, int x1) {
            r.x0 = std::min(r.x0, x0);
            r.x1 = std::max(r.x1, x1 - 1);
            r.y0 = std::min(r.y0, y);
            r.y1 = std::max(r.y1, y);
        });
    }
    return r;
}

Point2 maskCentroid(const RasterGrid& g) {
    double sx = 0.0, sy = 0.0;
    double n = 0.0;
    for (int y = 0; y < g.height(); ++y) {
        forEachRun(g, y, [&](int x0, int x1) {
            const double count = x1 - x0;
            sx += 0.5 * (x0 + x1) * count; // sum of centers x+0.5 over the run
            sy += (y + 0.5) * count;
            n += count;
        });
    }
    return {sx / n, sy / n};
}

} // namespace

BoundingBox maskToBoundingBox(const InstanceMask& m) {
    validate(m);
    const CellRect r = occupiedCellBounds(m.grid);
    BoundingBox box;
    box.w = r.x1 + 1 - r.x0;
    box.h = r.y1 + 1 - r.y0;
    box.cx = r.x0 + 0.5 * box.w;
    box.cy = r.y0 + 0.5 * box.h;
    return box;
}

// ---------------------------------------------------------------------------
// Minimum-area enclosing rectangle
// ---------------------------------------------------------------------------

namespace {

// Andrew monotone chain; returns CCW hull without collinear interior points.
std::vector<Point2> convexHull(std::vector<Point2> pts) {
    std::sort(pts.begin(), pts.end(), [](Point2 a, Point2 b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](Point2 a, Point2 b) { return a == b; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Point2> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

// Hull corner candidates: per occupied row only the extreme cell corners can
// be hull vertices, so 4 points per row suffice.
std::vector<Point2> maskCornerCandidates(const RasterGrid& g) {
    std::vector<Point2> pts;
    for (int y = 0; y < g.height(); ++y) {
        int minX = g.width(), maxX = -1;
        forEachRun(g, y, [&](int x0, int x1) {
            minX = std::min(minX, x0);
            maxX = std::max(maxX, x1);
        });
        if (maxX < 0) continue;
        const double lo = minX, hi = maxX;
        pts.push_back({lo, static_cast<double>(y)});
        pts.push_back({hi, static_cast<double>(y)});
        pts.push_back({lo, static_cast<double>(y + 1)});
        pts.push_back({hi, static_cast<double>(y + 1)});
    }
    return pts;
}

} // namespace

OrientedBox maskToOrientedBox(const InstanceMask& m) {
    validate(m);
    const std::vector<Point2> hull = convexHull(maskCornerCandidates(m.grid));

    double bestArea = std::numeric_limits<double>::infinity();
    OrientedBox best;
    const std::size_t n = hull.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 edge = hull[(i + 1) % n] - hull[i];
        const double len = norm(edge);
        if (len == 0.0) continue;
        const Point2 u{edge.x / len, edge.y / len};
        const Point2 v{-u.y, u.x};
        double uMin = std::numeric_limits<double>::infinity(), uMax = -uMin;
        double vMin = uMin, vMax = -uMin;
        for (const Point2& p : hull) {
            const double pu = dot(p, u);
            const double pv = dot(p, v);
            uMin = std::min(uMin, pu);
            uMax = std::max(uMax, pu);
            vMin = std::min(vMin, pv);
            vMax = std::max(vMax, pv);
        }
        const double du = uMax - uMin;
        const double dv = vMax - vMin;
        const double area = du * dv;
        if (area < bestArea) {
            bestArea = area;
            const double cu = 0.5 * (uMin + uMax);
            const double cv = 0.5 * (vMin + vMax);
            best.cx = u.x * cu + v.x * cv;
            best.cy = u.y * cu + v.y * cv;
            best.w = du;
            best.h = dv;
            best.thetaDeg = radToDeg(std::atan2(u.y, u.x));
        }
    }
    return canonicalized(best);
}

Ellipse maskToEllipse(const InstanceMask& m) {
    const OrientedBox b = maskToOrientedBox(m);
    // Canonical box has w >= h, so the axis order is already correct.
    return Ellipse{b.cx, b.cy, 0.5 * b.w, 0.5 * b.h, b.thetaDeg};
}

PolarPolygon maskToPolarPolygon(const InstanceMask& m, int pointCount,
                                bool* diagnosticPoleInside) {
    validate(m);
    if (pointCount < 3)
        throw PreconditionError("polar polygon needs at least 3 sampling points");

    const Point2 pole = maskCentroid(m.grid);
    if (diagnosticPoleInside != nullptr) {
        const int px = static_cast<int>(std::floor(pole.x));
        const int py = static_cast<int>(std::floor(pole.y));
        *diagnosticPoleInside = px >= 0 && px < m.grid.width() && py >= 0 &&
                                py < m.grid.height() && m.grid.at(px, py);
    }

    const double step = 2.0 * kPi / pointCount;
    std::vector<Point2> rayDir(pointCount);
    for (int k = 0; k < pointCount; ++k)
        rayDir[k] = {std::cos(k * step), std::sin(k * step)};

    // Farthest extent along each ray, over the cells binned to that ray.
    std::vector<double> radii(pointCount, 0.0);
    for (int y = 0; y < m.grid.height(); ++y) {
        forEachRun(m.grid, y, [&](int x0, int x1) {
            const double dy = y + 0.5 - pole.y;
            for (int x = x0; x < x1; ++x) {
                const double dx = x + 0.5 - pole.x;
                if (dx == 0.0 && dy == 0.0) continue;
                const double angle = std::atan2(dy, dx);
                int bin = static_cast<int>(std::lround(angle / step)) % pointCount;
                if (bin < 0) bin += pointCount;
                const double extent = dx * rayDir[bin].x + dy * rayDir[bin].y;
                radii[bin] = std::max(radii[bin], extent);
            }
        });
    }

    PolarPolygon poly{pole.x, pole.y, std::move(radii)};
    bool anyPositive = false;
    for (double r : poly.radii) anyPositive |= r > 0.0;
    if (!anyPositive)
        throw DegenerateGeometryError("mask has no extent about its pole");
    return poly;
}

// ---------------------------------------------------------------------------
// Polygonization
// ---------------------------------------------------------------------------

namespace {

std::vector<Point2> orientedBoxCorners(double cx, double cy, double w, double h,
                                       double thetaDeg) {
    const double th = degToRad(thetaDeg);
    const Point2 u{std::cos(th), std::sin(th)};
    const Point2 v{-u.y, u.x};
    const Point2 c{cx, cy};
    const double hw = 0.5 * w, hh = 0.5 * h;
    return {c - u * hw - v * hh, c + u * hw - v * hh,
            c + u * hw + v * hh, c - u * hw + v * hh};
}

} // namespace

SimplePolygon toPolygon(const Representation& rep, int arcSegments) {
    validate(rep);
    if (const auto* b = std::get_if<BoundingBox>(&rep)) {
        return SimplePolygon::create(
            orientedBoxCorners(b->cx, b->cy, b->w, b->h, 0.0));
    }
    if (const auto* b = std::get_if<OrientedBox>(&rep)) {
        return SimplePolygon::create(
            orientedBoxCorners(b->cx, b->cy, b->w, b->h, b->thetaDeg));
    }
    if (const auto* e = std::get_if<Ellipse>(&rep)) {
        if (arcSegments < 8)
            throw PreconditionError("ellipse polygonization needs at least 8 segments");
        const double th = degToRad(e->thetaDeg);
        const Point2 u{std::cos(th), std::sin(th)};
        const Point2 v{-u.y, u.x};
        std::vector<Point2> verts(arcSegments);
        for (int k = 0; k < arcSegments; ++k) {
            const double t = 2.0 * kPi * k / arcSegments;
            verts[k] = Point2{e->cx, e->cy} + u * (e->semiMajor * std::cos(t)) +
                       v * (e->semiMinor * std::sin(t));
        }
        return SimplePolygon::create(std::move(verts));
    }
    const auto& p = std::get<PolarPolygon>(rep);
    const int n = p.pointCount();
    const double step = 2.0 * kPi / n;
    std::vector<Point2> verts;
    verts.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Point2 vert{p.cx + p.radii[k] * std::cos(k * step),
                          p.cy + p.radii[k] * std::sin(k * step)};
        if (!verts.empty() && norm(vert - verts.back()) < 1e-12) continue;
        verts.push_back(vert);
    }
    while (verts.size() > 1 && norm(verts.front() - verts.back()) < 1e-12)
        verts.pop_back();
    return SimplePolygon::create(std::move(verts));
}

Bounds representationBounds(const Representation& r) {
    if (const auto* b = std::get_if<BoundingBox>(&r)) {
        return {b->cx - 0.5 * b->w, b->cy - 0.5 * b->h,
                b->cx + 0.5 * b->w, b->cy + 0.5 * b->h};
    }
    if (const auto* e = std::get_if<Ellipse>(&r)) {
        const double th = degToRad(e->thetaDeg);
        const double c = std::cos(th), s = std::sin(th);
        const double a = e->semiMajor, b2 = e->semiMinor;
        const double ex = std::sqrt(a * a * c * c + b2 * b2 * s * s);
        const double ey = std::sqrt(a * a * s * s + b2 * b2 * c * c);
        return {e->cx - ex, e->cy - ey, e->cx + ex, e->cy + ey};
    }
    const SimplePolygon poly = toPolygon(r, 8);
    return poly.bounds();
}

// ---------------------------------------------------------------------------
// IoU
// ---------------------------------------------------------------------------

namespace {

bool isBoxLike(const Representation& r) {
    return std::holds_alternative<BoundingBox>(r) ||
           std::holds_alternative<OrientedBox>(r);
}

double exactConvexIoU(const Representation& a, const Representation& b) {
    const SimplePolygon pa = toPolygon(a);
    const SimplePolygon pb = toPolygon(b);
    const auto inter = clipConvex(pa, pb);
    const double ai = inter ? polygonArea(*inter) : 0.0;
    const double uni = polygonArea(pa) + polygonArea(pb) - ai;
    return ai / uni;
}

// Rasterize a representation under the affine map p -> (p - origin) * scale.
RasterGrid rasterizeScaled(const Representation& r, Point2 origin, double scale,
                           int width, int height) {
    if (const auto* e = std::get_if<Ellipse>(&r)) {
        EllipseShape shape;
        shape.center = (Point2{e->cx, e->cy} - origin) * scale;
        shape.semiMajor = e->semiMajor * scale;
        shape.semiMinor = e->semiMinor * scale;
        shape.thetaDeg = e->thetaDeg;
        return rasterize(shape, width, height);
    }
    const SimplePolygon poly = toPolygon(r);
    std::vector<Point2> verts(poly.vertices().begin(), poly.vertices().end());
    for (Point2& p : verts) p = (p - origin) * scale;
    return rasterize(SimplePolygon::create(std::move(verts)), width, height);
}

// Upsample the crop [rect] of a mask by an integer factor.
RasterGrid upsampleCrop(const RasterGrid& g, const CellRect& rect, int s) {
    RasterGrid out((rect.x1 - rect.x0 + 1) * s, (rect.y1 - rect.y0 + 1) * s);
    for (int y = rect.y0; y <= rect.y1; ++y) {
        forEachRun(g, y, [&](int x0, int x1) {
            x0 = std::max(x0, rect.x0);
            x1 = std::min(x1, rect.x1 + 1);
            if (x0 >= x1) return;
            for (int sy = 0; sy < s; ++sy)
                out.fillRowSpan((y - rect.y0) * s + sy, (x0 - rect.x0) * s,
                                (x1 - rect.x0) * s);
        });
    }
    return out;
}

double maskVsShapeIoU(const InstanceMask& m, const Representation& r,
                      const IoUConfig& cfg) {
    validate(m);
    validate(r);
    const int s = std::max(1, cfg.maskSupersample);

    CellRect crop = occupiedCellBounds(m.grid);
    const Bounds sb = representationBounds(r);
    crop.x0 = std::min(crop.x0, static_cast<int>(std::floor(sb.minX)) - 1);
    crop.y0 = std::min(crop.y0, static_cast<int>(std::floor(sb.minY)) - 1);
    crop.x1 = std::max(crop.x1, static_cast<int>(std::ceil(sb.maxX)) + 1);
    crop.y1 = std::max(crop.y1, static_cast<int>(std::ceil(sb.maxY)) + 1);
    // The mask's grid frame bounds the evaluation: clip the crop to it.
    crop.x0 = std::max(crop.x0, 0);
    crop.y0 = std::max(crop.y0, 0);
    crop.x1 = std::min(crop.x1, m.grid.width() - 1);
    crop.y1 = std::min(crop.y1, m.grid.height() - 1);

    const RasterGrid maskGrid = upsampleCrop(m.grid, crop, s);
    const RasterGrid shapeGrid =
        rasterizeScaled(r, {static_cast<double>(crop.x0), static_cast<double>(crop.y0)},
                        s, maskGrid.width(), maskGrid.height());
    return rasterIoU(maskGrid, shapeGrid);
}

} // namespace

double representationIoU(const Representation& a, const Representation& b,
                         const IoUConfig& cfg) {
    validate(a);
    validate(b);
    if (isBoxLike(a) && isBoxLike(b)) return exactConvexIoU(a, b);

    const Bounds bounds =
        representationBounds(a).united(representationBounds(b)).padded(1e-9);
    const double span = std::max({bounds.width(), bounds.height(), 1e-9});
    const int res = std::max(16, cfg.pairResolution);
    const double scale = (res - 2) / span;
    const int width = std::max(1, static_cast<int>(std::ceil(bounds.width() * scale)) + 2);
    const int height = std::max(1, static_cast<int>(std::ceil(bounds.height() * scale)) + 2);
    const Point2 origin{bounds.minX - 1.0 / scale, bounds.minY - 1.0 / scale};
    const RasterGrid ga = rasterizeScaled(a, origin, scale, width, height);
    const RasterGrid gb = rasterizeScaled(b, origin, scale, width, height);
    return rasterIoU(ga, gb);
}

double representationIoU(const Representation& a, const InstanceMask& m,
                         const IoUConfig& cfg) {
    return maskVsShapeIoU(m, a, cfg);
}

double representationIoU(const InstanceMask& m, const Representation& b,
                         const IoUConfig& cfg) {
    return maskVsShapeIoU(m, b, cfg);
}

double representationIoU(const InstanceMask& a, const InstanceMask& b,
                         const IoUConfig&) {
    if (!a.grid.sameSize(b.grid))
        throw PreconditionError("mask IoU requires masks on the same grid");
    return rasterIoU(a.grid, b.grid);
}

Representation convertMask(const InstanceMask& m, const RepSpec& spec) {
    switch (spec.kind) {
        case RepKind::box: return maskToBoundingBox(m);
        case RepKind::orientedBox: return maskToOrientedBox(m);
        case RepKind::ellipse: return maskToEllipse(m);
        case RepKind::polarPolygon: return maskToPolarPolygon(m, spec.points);
    }
    throw PreconditionError("unknown representation kind");
}

} // namespace polyrep
