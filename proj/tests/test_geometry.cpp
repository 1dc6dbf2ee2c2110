#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "polyrep/geometry.hpp"
#include "polyrep/rng.hpp"

using namespace polyrep;

namespace {

SimplePolygon square(double x0, double y0, double x1, double y1) {
    return SimplePolygon::create({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

SimplePolygon regularNGon(int n, double radius, Point2 c = {0, 0},
                          double phase = 0.0) {
    std::vector<Point2> v(n);
    for (int k = 0; k < n; ++k) {
        const double t = phase + 2.0 * kPi * k / n;
        v[k] = {c.x + radius * std::cos(t), c.y + radius * std::sin(t)};
    }
    return SimplePolygon::create(std::move(v));
}

// Random convex polygon: hull of points on a jittered circle.
SimplePolygon randomConvex(Rng& rng, Point2 c, double maxR) {
    const int n = static_cast<int>(rng.uniformInt(3, 8));
    std::vector<double> angles(n);
    for (double& a : angles) a = rng.uniform(0.0, 2.0 * kPi);
    std::sort(angles.begin(), angles.end());
    std::vector<Point2> v;
    for (double a : angles) {
        const double r = rng.uniform(0.3 * maxR, maxR);
        const Point2 p{c.x + r * std::cos(a), c.y + r * std::sin(a)};
        if (!v.empty() && norm(p - v.back()) < 1e-9) continue;
        v.push_back(p);
    }
    if (v.size() < 3) return regularNGon(3, maxR, c);
    auto poly = SimplePolygon::create(std::move(v));
    if (!poly.isConvex()) return regularNGon(5, maxR, c); // rare collinear jitter
    return poly;
}

} // namespace

TEST_CASE("shoelace area of canonical shapes") {
    CHECK(polygonArea(square(0, 0, 1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(polygonArea(SimplePolygon::create({{0, 0}, {2, 0}, {0, 2}})) ==
          doctest::Approx(2.0).epsilon(1e-12));
    // Regular n-gon inscribed in radius-r circle has area (n/2) r^2 sin(2pi/n).
    const double oracle = (12.0 / 2.0) * std::sin(2.0 * kPi / 12.0);
    CHECK(polygonArea(regularNGon(12, 1.0)) == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(oracle == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("polygon construction rejects degenerate rings") {
    CHECK_THROWS_AS(SimplePolygon::create({{0, 0}, {1, 1}}), DegenerateGeometryError);
    CHECK_THROWS_AS(SimplePolygon::create({{0, 0}, {1, 1}, {2, 2}}),
                    DegenerateGeometryError);
    CHECK_THROWS_AS(SimplePolygon::create({{0, 0}, {0, 0}, {1, 1}, {0, 1}}),
                    DegenerateGeometryError);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(SimplePolygon::create({{0, 0}, {inf, 0}, {0, 1}}),
                    DegenerateGeometryError);
}

TEST_CASE("orientation normalized to positive winding, idempotently") {
    // (0,0)->(1,0)->(1,1) winds +x toward +y: positive shoelace, kept as is.
    auto ccw = SimplePolygon::create({{0, 0}, {1, 0}, {1, 1}, {0, 1}});
    CHECK(signedRingArea(ccw.vertices()) > 0.0);
    auto cw = SimplePolygon::create({{0, 1}, {1, 1}, {1, 0}, {0, 0}});
    CHECK(signedRingArea(cw.vertices()) > 0.0);

    std::vector<Point2> again(ccw.vertices().begin(), ccw.vertices().end());
    auto renorm = SimplePolygon::create(again);
    REQUIRE(renorm.size() == ccw.size());
    for (std::size_t i = 0; i < ccw.size(); ++i) CHECK(renorm[i] == ccw[i]);
}

TEST_CASE("convex clip of overlapping axis-aligned squares") {
    auto out = clipConvex(square(0, 0, 2, 2), square(1, 1, 3, 3));
    REQUIRE(out.has_value());
    CHECK(polygonArea(*out) == doctest::Approx(1.0).epsilon(1e-12));
    const Bounds b = out->bounds();
    CHECK(b.minX == doctest::Approx(1.0));
    CHECK(b.minY == doctest::Approx(1.0));
    CHECK(b.maxX == doctest::Approx(2.0));
    CHECK(b.maxY == doctest::Approx(2.0));
}

TEST_CASE("convex clip identity and disjoint cases") {
    auto self = clipConvex(square(0, 0, 1, 1), square(0, 0, 1, 1));
    REQUIRE(self.has_value());
    CHECK(polygonArea(*self) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(clipConvex(square(0, 0, 1, 1), square(5, 5, 6, 6)).has_value());
    // Shared edge only: zero-area intersection reports empty.
    CHECK_FALSE(clipConvex(square(0, 0, 1, 1), square(1, 0, 2, 1)).has_value());
}

TEST_CASE("convex clip of square with its 45-degree rotation is the octagon") {
    auto base = square(-0.5, -0.5, 0.5, 0.5);
    const double r = std::sqrt(0.5);
    auto rotated = SimplePolygon::create({{r, 0}, {0, r}, {-r, 0}, {0, -r}});
    auto out = clipConvex(base, rotated);
    REQUIRE(out.has_value());
    CHECK(out->size() == 8);
    const double oracle = 2.0 * (std::sqrt(2.0) - 1.0);
    CHECK(polygonArea(*out) == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("convex clip rejects non-convex input") {
    auto notched = SimplePolygon::create(
        {{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}});
    CHECK_FALSE(notched.isConvex());
    CHECK_THROWS_AS(clipConvex(notched, square(0, 0, 1, 1)), PreconditionError);
    CHECK_THROWS_AS(clipConvex(square(0, 0, 1, 1), notched), PreconditionError);
}

TEST_CASE("raster grid bit plumbing") {
    CHECK_THROWS_AS(RasterGrid(0, 4), PreconditionError);
    CHECK_THROWS_AS(RasterGrid(4, 0), PreconditionError);

    RasterGrid g(130, 3); // spans three words per row
    CHECK(g.empty());
    g.fillRowSpan(1, 60, 70); // crosses a word boundary
    CHECK(g.occupiedCount() == 10);
    CHECK(g.at(60, 1));
    CHECK(g.at(69, 1));
    CHECK_FALSE(g.at(59, 1));
    CHECK_FALSE(g.at(70, 1));
    g.fillRowSpan(0, -5, 200); // clipped to the row
    CHECK(g.occupiedCount() == 10 + 130);
    g.set(60, 1, false);
    CHECK_FALSE(g.at(60, 1));
    CHECK(g.occupiedCount() == 9 + 130);
}

TEST_CASE("rasterize squares under the cell-center rule") {
    auto g = rasterize(square(0, 0, 10, 10), 10, 10);
    CHECK(g.occupiedCount() == 100);

    // Shape entirely outside the grid leaves it empty.
    CHECK(rasterize(square(20, 20, 30, 30), 10, 10).empty());

    // No cell center inside: nothing marked.
    CHECK(rasterize(square(0.6, 0.6, 1.4, 1.4), 4, 4).empty());

    // Boundary centers count as inside: [0.5,2.5]^2 touches 3x3 centers.
    CHECK(rasterize(square(0.5, 0.5, 2.5, 2.5), 4, 4).occupiedCount() == 9);

    CHECK_THROWS_AS(rasterize(square(0, 0, 1, 1), 0, 4), PreconditionError);
}

TEST_CASE("rasterized disk area converges to pi r^2") {
    const double r = 50.0;
    auto poly = rasterize(regularNGon(720, r, {64, 64}), 128, 128);
    const double area = kPi * r * r;
    CHECK(std::abs(static_cast<double>(poly.occupiedCount()) - area) < 0.01 * area);

    auto ell = rasterize(EllipseShape{{64, 64}, r, r, 0.0}, 128, 128);
    CHECK(std::abs(static_cast<double>(ell.occupiedCount()) - area) < 0.01 * area);

    // Polygonal and quadratic-form disks agree except at the rim.
    std::uint64_t diff = 0;
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) diff += poly.at(x, y) != ell.at(x, y);
    CHECK(diff < 40);
}

TEST_CASE("rotated ellipse rasterization matches its polygonization") {
    EllipseShape e{{60, 50}, 40.0, 15.0, 30.0};
    auto fromQuadratic = rasterize(e, 120, 100);
    const double th = degToRad(e.thetaDeg);
    const Point2 u{std::cos(th), std::sin(th)};
    const Point2 v{-u.y, u.x};
    std::vector<Point2> verts(720);
    for (int k = 0; k < 720; ++k) {
        const double t = 2.0 * kPi * k / 720;
        verts[k] = e.center + u * (e.semiMajor * std::cos(t)) +
                   v * (e.semiMinor * std::sin(t));
    }
    auto fromPolygon = rasterize(SimplePolygon::create(verts), 120, 100);
    CHECK(rasterIoU(fromQuadratic, fromPolygon) > 0.995);
}

TEST_CASE("raster IoU basics") {
    auto a = rasterize(square(0, 0, 200, 200), 300, 300);
    CHECK(rasterIoU(a, a) == 1.0);

    auto b = rasterize(square(100, 100, 300, 300), 300, 300);
    CHECK(rasterIoU(a, b) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
    CHECK(rasterIoU(a, b) == rasterIoU(b, a));

    auto far = rasterize(square(250, 250, 290, 290), 300, 300);
    CHECK(rasterIoU(a, far) == 0.0);

    RasterGrid e1(300, 300), e2(300, 300);
    CHECK_THROWS_AS(rasterIoU(e1, e2), UndefinedIoUError);
    RasterGrid small(10, 10);
    CHECK_THROWS_AS(rasterIoU(a, small), PreconditionError);
}

TEST_CASE("exact convex clip agrees with the raster oracle") {
    Rng rng(0x9e11aU);
    const int res = 512;
    for (int trial = 0; trial < 40; ++trial) {
        auto p = randomConvex(rng, {rng.uniform(150, 350), rng.uniform(150, 350)},
                              rng.uniform(40, 140));
        auto q = randomConvex(rng, {rng.uniform(150, 350), rng.uniform(150, 350)},
                              rng.uniform(40, 140));
        auto inter = clipConvex(p, q);
        const double ai = inter ? polygonArea(*inter) : 0.0;
        const double exact = ai / (polygonArea(p) + polygonArea(q) - ai);

        auto ga = rasterize(p, res, res);
        auto gb = rasterize(q, res, res);
        const double approx = rasterIoU(ga, gb);
        CHECK(std::abs(exact - approx) <= 3.0 / res);
    }
}

TEST_CASE("point-in-polygon even-odd with inclusive boundary") {
    auto tri = SimplePolygon::create({{0, 0}, {4, 0}, {0, 4}});
    CHECK(pointInPolygon({1, 1}, tri));
    CHECK(pointInPolygon({2, 2}, tri));   // on hypotenuse
    CHECK(pointInPolygon({0, 0}, tri));   // vertex
    CHECK(pointInPolygon({2, 0}, tri));   // on edge
    CHECK_FALSE(pointInPolygon({3, 3}, tri));
    CHECK_FALSE(pointInPolygon({-0.1, 0}, tri));

    // Star-like non-convex ring: even-odd leaves the notch outside.
    auto notched = SimplePolygon::create(
        {{0, 0}, {4, 0}, {4, 4}, {2, 1}, {0, 4}});
    CHECK(pointInPolygon({1, 0.5}, notched));
    CHECK_FALSE(pointInPolygon({2, 3}, notched));
}

TEST_CASE("deterministic rng streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.nextU64() == b.nextU64());
    Rng c(43);
    CHECK(Rng(42).nextU64() != c.nextU64());

    Rng r(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = r.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const auto k = r.uniformInt(-3, 3);
        CHECK(k >= -3);
        CHECK(k <= 3);
    }
    CHECK(Rng::deriveSeed(1, 2) == Rng::deriveSeed(1, 2));
    CHECK(Rng::deriveSeed(1, 2) != Rng::deriveSeed(1, 3));
}
