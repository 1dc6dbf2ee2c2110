#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "polyrep/errors.hpp"

namespace polyrep {

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double degToRad(double deg) { return deg * kPi / 180.0; }
inline constexpr double radToDeg(double rad) { return rad * 180.0 / kPi; }

/// Planar point in continuous pixel units. Image frame: x grows right,
/// y grows downward. Positive rotation maps +x toward +y.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Point2 operator*(Point2 a, double s) { return {a.x * s, a.y * s}; }
    friend Point2 operator*(double s, Point2 a) { return a * s; }
    friend bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
double norm(Point2 a);

/// Axis-aligned extent of a point set or shape.
struct Bounds {
    double minX = 0.0, minY = 0.0, maxX = 0.0, maxY = 0.0;

    double width() const { return maxX - minX; }
    double height() const { return maxY - minY; }
    Bounds united(const Bounds& o) const;
    Bounds padded(double pad) const;
};

/// Shoelace area of a closed vertex ring, signed. Positive means the ring
/// winds in the +x-toward-+y sense (counter-clockwise in the y-down frame).
double signedRingArea(std::span<const Point2> ring);

/// Simple polygon with normalized orientation.
///
/// Invariants established at construction: at least 3 vertices, no two
/// consecutive vertices coincide, nonzero area, counter-clockwise winding
/// in the y-down frame (positive shoelace area).
class SimplePolygon {
public:
    /// Validates and normalizes. Throws DegenerateGeometryError on violation.
    static SimplePolygon create(std::vector<Point2> vertices);

    std::span<const Point2> vertices() const { return verts_; }
    std::size_t size() const { return verts_.size(); }
    const Point2& operator[](std::size_t i) const { return verts_[i]; }

    Bounds bounds() const;
    bool isConvex() const;

private:
    explicit SimplePolygon(std::vector<Point2> v) : verts_(std::move(v)) {}
    std::vector<Point2> verts_;
};

/// |signed shoelace area| of a valid polygon; always positive.
double polygonArea(const SimplePolygon& p);

/// Exact intersection of two convex polygons (Sutherland-Hodgman).
/// Returns std::nullopt when the intersection has zero area.
/// Throws PreconditionError if either input is not convex.
std::optional<SimplePolygon> clipConvex(const SimplePolygon& subject,
                                        const SimplePolygon& clip);

/// Binary occupancy raster. Cell (x, y) covers [x,x+1) x [y,y+1) in pixel
/// units with its center at (x+0.5, y+0.5). Bits are packed row-major,
/// 64 cells per word, rows padded to a word boundary.
class RasterGrid {
public:
    RasterGrid(int width, int height);

    int width() const { return width_; }
    int height() const { return height_; }

    bool at(int x, int y) const {
        return (words_[wordIndex(x, y)] >> (x & 63)) & 1u;
    }
    void set(int x, int y, bool on = true);
    /// Fill cells [x0, x1) of row y.
    void fillRowSpan(int y, int x0, int x1);

    std::uint64_t occupiedCount() const;
    bool empty() const { return occupiedCount() == 0; }

    int wordsPerRow() const { return wordsPerRow_; }
    std::span<const std::uint64_t> words() const { return words_; }

    bool sameSize(const RasterGrid& o) const {
        return width_ == o.width_ && height_ == o.height_;
    }
    friend bool operator==(const RasterGrid&, const RasterGrid&) = default;

private:
    std::size_t wordIndex(int x, int y) const {
        return static_cast<std::size_t>(y) * wordsPerRow_ + (x >> 6);
    }
    int width_;
    int height_;
    int wordsPerRow_;
    std::vector<std::uint64_t> words_;
};

/// Rotated-ellipse region used by the rasterizer (quadratic-form inside test).
struct EllipseShape {
    Point2 center;
    double semiMajor = 0.0;
    double semiMinor = 0.0;
    double thetaDeg = 0.0; // major-axis angle from +x, degrees
};

/// Rasterize a polygon onto a width x height grid: a cell is occupied iff its
/// center lies inside by the even-odd rule; boundary centers count as inside.
/// The shape is silently clipped to the grid. Throws on a zero-size grid.
RasterGrid rasterize(const SimplePolygon& shape, int width, int height);
RasterGrid rasterize(const EllipseShape& shape, int width, int height);

/// Intersection-over-union of two equally sized grids.
/// Throws UndefinedIoUError when both are empty, PreconditionError on
/// dimension mismatch.
double rasterIoU(const RasterGrid& a, const RasterGrid& b);

/// Even-odd point-in-polygon test; boundary points count as inside.
bool pointInPolygon(Point2 p, const SimplePolygon& poly);

} // namespace polyrep
