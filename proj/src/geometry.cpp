#include "polyrep/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

namespace polyrep {

double norm(Point2 a) { return std::hypot(a.x, a.y); }

Bounds Bounds::united(const Bounds& o) const {
    return {std::min(minX, o.minX), std::min(minY, o.minY),
            std::max(maxX, o.maxX), std::max(maxY, o.maxY)};
}

Bounds Bounds::padded(double pad) const {
    return {minX - pad, minY - pad, maxX + pad, maxY + pad};
}

double signedRingArea(std::span<const Point2> ring) {
    double twiceArea = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point2& a = ring[i];
        const Point2& b = ring[(i + 1) % n];
        twiceArea += a.x * b.y - b.x * a.y;
    }
    return 0.5 * twiceArea;
}

namespace {

Bounds pointBounds(std::span<const Point2> pts) {
    Bounds b{pts[0].x, pts[0].y, pts[0].x, pts[0].y};
    for (const Point2& p : pts) {
        b.minX = std::min(b.minX, p.x);
        b.minY = std::min(b.minY, p.y);
        b.maxX = std::max(b.maxX, p.x);
        b.maxY = std::max(b.maxY, p.y);
    }
    return b;
}

// Tolerance scaled to the coordinate magnitude of the ring.
double areaEpsilon(std::span<const Point2> pts) {
    const Bounds b = pointBounds(pts);
    const double span = std::max({1.0, b.width(), b.height()});
    return 1e-12 * span * span;
}

} // namespace

SimplePolygon SimplePolygon::create(std::vector<Point2> vertices) {
    if (vertices.size() < 3)
        throw DegenerateGeometryError("polygon needs at least 3 vertices");
    for (const Point2& v : vertices)
        if (!std::isfinite(v.x) || !std::isfinite(v.y))
            throw DegenerateGeometryError("polygon vertex is not finite");
    for (std::size_t i = 0; i < vertices.size(); ++i) {
        const Point2& a = vertices[i];
        const Point2& b = vertices[(i + 1) % vertices.size()];
        if (a == b)
            throw DegenerateGeometryError("consecutive polygon vertices coincide");
    }
    const double area = signedRingArea(vertices);
    if (std::abs(area) <= areaEpsilon(vertices))
        throw DegenerateGeometryError("polygon has zero area");
    if (area < 0.0)
        std::reverse(vertices.begin(), vertices.end());
    return SimplePolygon(std::move(vertices));
}

Bounds SimplePolygon::bounds() const { return pointBounds(verts_); }

bool SimplePolygon::isConvex() const {
    // CCW winding established at construction: every turn must be >= 0.
    const std::size_t n = verts_.size();
    const Bounds b = pointBounds(verts_);
    const double span = std::max({1.0, b.width(), b.height()});
    const double eps = 1e-12 * span * span;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 e1 = verts_[(i + 1) % n] - verts_[i];
        const Point2 e2 = verts_[(i + 2) % n] - verts_[(i + 1) % n];
        if (cross(e1, e2) < -eps) return false;
    }
    return true;
}

double polygonArea(const SimplePolygon& p) {
    return std::abs(signedRingArea(p.vertices()));
}

namespace {

// Half-plane test for a CCW clip edge a->b: inside is the left side.
bool insideEdge(Point2 p, Point2 a, Point2 b, double eps) {
    return cross(b - a, p - a) >= -eps;
}

Point2 lineIntersect(Point2 p, Point2 q, Point2 a, Point2 b) {
    const Point2 r = q - p;
    const Point2 s = b - a;
    const double denom = cross(r, s);
    const double t = cross(a - p, s) / denom;
    return p + r * t;
}

} // namespace

std::optional<SimplePolygon> clipConvex(const SimplePolygon& subject,
                                        const SimplePolygon& clip) {
    if (!subject.isConvex() || !clip.isConvex())
        throw PreconditionError("clipConvex requires convex polygons");

    const Bounds joint = subject.bounds().united(clip.bounds());
    const double span = std::max({1.0, joint.width(), joint.height()});
    const double eps = 1e-12 * span;

    std::vector<Point2> output(subject.vertices().begin(), subject.vertices().end());
    const auto clipVerts = clip.vertices();
    for (std::size_t i = 0; i < clipVerts.size() && !output.empty(); ++i) {
        const Point2 a = clipVerts[i];
        const Point2 b = clipVerts[(i + 1) % clipVerts.size()];
        std::vector<Point2> input;
        input.swap(output);
        for (std::size_t j = 0; j < input.size(); ++j) {
            const Point2 cur = input[j];
            const Point2 nxt = input[(j + 1) % input.size()];
            const bool curIn = insideEdge(cur, a, b, eps);
            const bool nxtIn = insideEdge(nxt, a, b, eps);
            if (curIn) output.push_back(cur);
            if (curIn != nxtIn) output.push_back(lineIntersect(cur, nxt, a, b));
        }
    }

    // Collapse near-duplicate consecutive vertices introduced by clipping.
    std::vector<Point2> cleaned;
    for (const Point2& p : output) {
        if (cleaned.empty() || norm(p - cleaned.back()) > eps) cleaned.push_back(p);
    }
    while (cleaned.size() > 1 && norm(cleaned.front() - cleaned.back()) <= eps)
        cleaned.pop_back();

    if (cleaned.size() < 3) return std::nullopt;
    if (std::abs(signedRingArea(cleaned)) <= areaEpsilon(cleaned)) return std::nullopt;
    return SimplePolygon::create(std::move(cleaned));
}

RasterGrid::RasterGrid(int width, int height)
    : width_(width), height_(height) {
    if (width < 1 || height < 1)
        throw PreconditionError("raster grid dimensions must be at least 1x1");
    wordsPerRow_ = (width + 63) / 64;
    words_.assign(static_cast<std::size_t>(wordsPerRow_) * height, 0);
}

void RasterGrid::set(int x, int y, bool on) {
    const std::uint64_t bit = 1ULL << (x & 63);
    if (on)
        words_[wordIndex(x, y)] |= bit;
    else
        words_[wordIndex(x, y)] &= ~bit;
}

void RasterGrid::fillRowSpan(int y, int x0, int x1) {
    x0 = std::max(x0, 0);
    x1 = std::min(x1, width_);
    if (x0 >= x1) return;
    const std::size_t rowBase = static_cast<std::size_t>(y) * wordsPerRow_;
    int w0 = x0 >> 6;
    int w1 = (x1 - 1) >> 6;
    const std::uint64_t first = ~0ULL << (x0 & 63);
    const std::uint64_t last = ~0ULL >> (63 - ((x1 - 1) & 63));
    if (w0 == w1) {
        words_[rowBase + w0] |= first & last;
        return;
    }
    words_[rowBase + w0] |= first;
    for (int w = w0 + 1; w < w1; ++w) words_[rowBase + w] = ~0ULL;
    words_[rowBase + w1] |= last;
}

std::uint64_t RasterGrid::occupiedCount() const {
    std::uint64_t n = 0;
    for (std::uint64_t w : words_) n += std::popcount(w);
    return n;
}

namespace {

// Shared row-fill driver: computes inclusive center spans per row and fills.
// spansForRow returns pairs of x-interval bounds in pixel units; a cell is
// filled iff its center x+0.5 lies within [lo, hi].
template <typename SpanFn>
RasterGrid scanlineFill(int width, int height, SpanFn&& spansForRow) {
    RasterGrid grid(width, height);
    for (int y = 0; y < height; ++y) {
        const double cy = y + 0.5;
        spansForRow(cy, [&](double lo, double hi) {
            // First center >= lo and last center <= hi.
            const int x0 = static_cast<int>(std::ceil(lo - 0.5));
            const int x1 = static_cast<int>(std::floor(hi - 0.5));
            if (x1 >= x0) grid.fillRowSpan(y, x0, x1 + 1);
        });
    }
    return grid;
}

} // namespace

RasterGrid rasterize(const SimplePolygon& shape, int width, int height) {
    const auto verts = shape.vertices();
    const std::size_t n = verts.size();
    std::vector<double> xs;
    RasterGrid grid = scanlineFill(width, height, [&](double cy, auto&& fill) {
        xs.clear();
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 a = verts[i];
            const Point2 b = verts[(i + 1) % n];
            // Half-open rule on y keeps vertex hits from double-counting.
            if ((a.y <= cy && b.y > cy) || (b.y <= cy && a.y > cy)) {
                const double t = (cy - a.y) / (b.y - a.y);
                xs.push_back(a.x + t * (b.x - a.x));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) fill(xs[i], xs[i + 1]);
    });
    // Boundary centers count as inside. The parity pass misses exactly one
    // configuration: centers lying on a horizontal edge (the half-open y rule
    // skips the locally-top edge). Mark those directly.
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = verts[i];
        const Point2 b = verts[(i + 1) % n];
        if (a.y != b.y) continue;
        const double row = a.y - 0.5;
        const int y = static_cast<int>(std::floor(row));
        if (row != static_cast<double>(y) || y < 0 || y >= height) continue;
        const int x0 = static_cast<int>(std::ceil(std::min(a.x, b.x) - 0.5));
        const int x1 = static_cast<int>(std::floor(std::max(a.x, b.x) - 0.5));
        if (x1 >= x0) grid.fillRowSpan(y, x0, x1 + 1);
    }
    return grid;
}

RasterGrid rasterize(const EllipseShape& shape, int width, int height) {
    if (shape.semiMajor <= 0.0 || shape.semiMinor <= 0.0)
        throw DegenerateGeometryError("ellipse semi-axes must be positive");
    const double th = degToRad(shape.thetaDeg);
    const double c = std::cos(th), s = std::sin(th);
    const double ia2 = 1.0 / (shape.semiMajor * shape.semiMajor);
    const double ib2 = 1.0 / (shape.semiMinor * shape.semiMinor);
    // Quadratic form coefficients of ((lx/a)^2 + (ly/b)^2 <= 1) in (dx, dy).
    const double A = c * c * ia2 + s * s * ib2;
    const double B = 2.0 * c * s * (ia2 - ib2);
    const double C = s * s * ia2 + c * c * ib2;
    return scanlineFill(width, height, [&](double cy, auto&& fill) {
        const double dy = cy - shape.center.y;
        // A dx^2 + (B dy) dx + (C dy^2 - 1) <= 0
        const double b = B * dy;
        const double cc = C * dy * dy - 1.0;
        const double disc = b * b - 4.0 * A * cc;
        if (disc < 0.0) return;
        const double sq = std::sqrt(disc);
        fill(shape.center.x + (-b - sq) / (2.0 * A),
             shape.center.x + (-b + sq) / (2.0 * A));
    });
}

double rasterIoU(const RasterGrid& a, const RasterGrid& b) {
    if (!a.sameSize(b))
        throw PreconditionError("rasterIoU requires identical grid dimensions");
    const auto wa = a.words();
    const auto wb = b.words();
    std::uint64_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < wa.size(); ++i) {
        inter += std::popcount(wa[i] & wb[i]);
        uni += std::popcount(wa[i] | wb[i]);
    }
    if (uni == 0)
        throw UndefinedIoUError("IoU of two empty grids is undefined");
    return static_cast<double>(inter) / static_cast<double>(uni);
}

bool pointInPolygon(Point2 p, const SimplePolygon& poly) {
    const auto verts = poly.vertices();
    const std::size_t n = verts.size();
    bool inside = false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point2 a = verts[i];
        const Point2 b = verts[(i + 1) % n];
        // Boundary check: point on segment counts as inside.
        const Point2 e = b - a;
        const double c = cross(e, p - a);
        if (c == 0.0 && dot(p - a, p - b) <= 0.0) return true;
        if ((a.y <= p.y && b.y > p.y) || (b.y <= p.y && a.y > p.y)) {
            const double t = (p.y - a.y) / (b.y - a.y);
            if (p.x < a.x + t * (b.x - a.x)) inside = !inside;
        }
    }
    return inside;
}

} // namespace polyrep
