#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "polyrep/representations.hpp"
#include "polyrep/rng.hpp"

using namespace polyrep;

namespace {

InstanceMask maskFromGrid(RasterGrid g) {
    return InstanceMask{std::move(g), ClassLabel::vehicle};
}

InstanceMask rectMask(int gw, int gh, int x0, int y0, int w, int h) {
    RasterGrid g(gw, gh);
    for (int y = y0; y < y0 + h; ++y) g.fillRowSpan(y, x0, x0 + w);
    return maskFromGrid(std::move(g));
}

InstanceMask diskMask(int gw, int gh, double cx, double cy, double r) {
    return maskFromGrid(rasterize(EllipseShape{{cx, cy}, r, r, 0.0}, gw, gh));
}

InstanceMask shapeMask(const Representation& rep, int gw, int gh) {
    return maskFromGrid(rasterize(toPolygon(rep, 720), gw, gh));
}

// Signed inset of p w.r.t. a convex CCW polygon: >= -tol means inside.
bool insideConvex(Point2 p, const SimplePolygon& poly, double tol) {
    const auto v = poly.vertices();
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point2 a = v[i];
        const Point2 b = v[(i + 1) % v.size()];
        const Point2 e = b - a;
        if (cross(e, p - a) < -tol * norm(e)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("string round trips") {
    CHECK((classLabelFromString(toString(ClassLabel::vehicle)) == ClassLabel::vehicle));
    CHECK((classLabelFromString(toString(ClassLabel::pedestrian)) ==
           ClassLabel::pedestrian));
    CHECK_THROWS_AS(classLabelFromString("bicycle"), PreconditionError);
    for (RepKind k : {RepKind::box, RepKind::orientedBox, RepKind::ellipse,
                      RepKind::polarPolygon})
        CHECK((repKindFromString(toString(k)) == k));
    CHECK_THROWS_AS(repKindFromString("blob"), PreconditionError);
}

TEST_CASE("representation validation") {
    CHECK_NOTHROW(validate(BoundingBox{1, 1, 2, 3}));
    CHECK_THROWS_AS(validate(BoundingBox{0, 0, 0, 1}), PreconditionError);
    CHECK_THROWS_AS(validate(BoundingBox{0, 0, 1, -1}), PreconditionError);
    CHECK_NOTHROW(validate(OrientedBox{0, 0, 2, 1, 180.0}));
    CHECK_THROWS_AS(validate(OrientedBox{0, 0, 2, 1, 181.0}), PreconditionError);
    CHECK_NOTHROW(validate(Ellipse{0, 0, 2, 2, 0}));
    CHECK_THROWS_AS(validate(Ellipse{0, 0, 1, 2, 0}), PreconditionError);
    CHECK_THROWS_AS(validate(PolarPolygon{0, 0, {1.0, 2.0}}), PreconditionError);
    CHECK_THROWS_AS(validate(PolarPolygon{0, 0, {0.0, 0.0, 0.0}}), PreconditionError);
    CHECK_THROWS_AS(validate(PolarPolygon{0, 0, {1.0, -0.5, 1.0}}), PreconditionError);
    CHECK_NOTHROW(validate(PolarPolygon{0, 0, {1.0, 0.0, 1.0}}));
    CHECK_THROWS_AS(validate(maskFromGrid(RasterGrid(4, 4))), PreconditionError);
}

TEST_CASE("angle wrapping and canonical oriented boxes") {
    CHECK(wrapDeg180(190.0) == doctest::Approx(-170.0));
    CHECK(wrapDeg180(-190.0) == doctest::Approx(170.0));
    CHECK(wrapDeg180(180.0) == doctest::Approx(180.0));
    CHECK(wrapDeg180(-180.0) == doctest::Approx(180.0));
    CHECK(wrapDeg180(360.0) == doctest::Approx(0.0));

    auto c1 = canonicalized(OrientedBox{0, 0, 2, 4, 0});
    CHECK(c1.w == doctest::Approx(4.0));
    CHECK(c1.h == doctest::Approx(2.0));
    CHECK(c1.thetaDeg == doctest::Approx(90.0));

    auto c2 = canonicalized(OrientedBox{0, 0, 4, 2, 135.0});
    CHECK(c2.thetaDeg == doctest::Approx(-45.0));

    auto c3 = canonicalized(OrientedBox{0, 0, 4, 2, -90.0});
    CHECK(c3.thetaDeg == doctest::Approx(90.0));

    // Canonicalization preserves the vertex set.
    auto before = toPolygon(OrientedBox{3, 2, 2, 4, 30.0});
    auto after = toPolygon(canonicalized(OrientedBox{3, 2, 2, 4, 30.0}));
    for (const Point2& p : before.vertices()) {
        bool found = false;
        for (const Point2& q : after.vertices()) found |= norm(p - q) < 1e-9;
        CHECK(found);
    }
}

TEST_CASE("mask to axis-aligned bounding box") {
    RasterGrid single(8, 8);
    single.set(3, 4);
    auto b1 = maskToBoundingBox(maskFromGrid(single));
    CHECK(b1.cx == doctest::Approx(3.5));
    CHECK(b1.cy == doctest::Approx(4.5));
    CHECK(b1.w == doctest::Approx(1.0));
    CHECK(b1.h == doctest::Approx(1.0));

    auto b2 = maskToBoundingBox(rectMask(10, 10, 0, 0, 10, 10));
    CHECK(b2.cx == doctest::Approx(5.0));
    CHECK(b2.cy == doctest::Approx(5.0));
    CHECK(b2.w == doctest::Approx(10.0));
    CHECK(b2.h == doctest::Approx(10.0));

    CHECK_THROWS_AS(maskToBoundingBox(maskFromGrid(RasterGrid(4, 4))),
                    PreconditionError);

    // Runs crossing 64-bit word boundaries are scanned correctly.
    RasterGrid wide(130, 3);
    wide.set(63, 1);
    wide.set(64, 1);
    wide.set(129, 1);
    auto b3 = maskToBoundingBox(maskFromGrid(wide));
    CHECK(b3.w == doctest::Approx(67.0));
    CHECK(b3.cx == doctest::Approx(63.0 + 33.5));
    CHECK(b3.h == doctest::Approx(1.0));
}

TEST_CASE("L-shaped mask: box covers 19 of 100 cells") {
    RasterGrid g(10, 10);
    for (int y = 0; y < 10; ++y) g.set(0, y);
    g.fillRowSpan(9, 0, 10);
    auto m = maskFromGrid(g);
    CHECK(m.grid.occupiedCount() == 19);
    auto box = maskToBoundingBox(m);
    CHECK(box.w == doctest::Approx(10.0));
    CHECK(box.h == doctest::Approx(10.0));
    CHECK(representationIoU(Representation{box}, m) ==
          doctest::Approx(0.19).epsilon(1e-12));
    CHECK(representationIoU(m, Representation{box}) ==
          doctest::Approx(0.19).epsilon(1e-12));
}

TEST_CASE("mask to oriented box") {
    auto rect = maskToOrientedBox(rectMask(20, 20, 3, 5, 12, 5));
    CHECK(rect.thetaDeg == doctest::Approx(0.0));
    CHECK(rect.w == doctest::Approx(12.0));
    CHECK(rect.h == doctest::Approx(5.0));
    CHECK(rect.cx == doctest::Approx(9.0));
    CHECK(rect.cy == doctest::Approx(7.5));

    RasterGrid single(8, 8);
    single.set(2, 2);
    auto one = maskToOrientedBox(maskFromGrid(single));
    CHECK(one.w == doctest::Approx(1.0));
    CHECK(one.h == doctest::Approx(1.0));
    CHECK(one.thetaDeg == doctest::Approx(0.0));

    auto barRep = Representation{OrientedBox{60, 60, 50, 10, 45.0}};
    auto bar = shapeMask(barRep, 120, 120);
    auto obox = maskToOrientedBox(bar);
    CHECK(std::abs(obox.thetaDeg - 45.0) < 1.0);
    CHECK(obox.w == doctest::Approx(50.0).epsilon(0.05));
    CHECK(obox.h == doctest::Approx(10.0).epsilon(0.2));
    auto aligned = maskToBoundingBox(bar);
    CHECK(obox.w * obox.h < aligned.w * aligned.h);
}

TEST_CASE("oriented box area never exceeds axis-aligned box area") {
    Rng rng(0xb0b1U);
    for (int trial = 0; trial < 25; ++trial) {
        Representation rep = OrientedBox{
            rng.uniform(40, 90), rng.uniform(40, 90), rng.uniform(8, 40),
            rng.uniform(4, 20), rng.uniform(-90, 90)};
        auto m = shapeMask(rep, 128, 128);
        auto obox = maskToOrientedBox(m);
        auto bbox = maskToBoundingBox(m);
        CHECK(obox.w * obox.h <= bbox.w * bbox.h + 1e-9);
        CHECK(obox.w >= obox.h);
        CHECK(obox.thetaDeg > -90.0);
        CHECK(obox.thetaDeg <= 90.0);
    }
}

TEST_CASE("mask to inscribed ellipse") {
    auto sq = maskToEllipse(rectMask(20, 20, 4, 4, 10, 10));
    CHECK(sq.semiMajor == doctest::Approx(5.0));
    CHECK(sq.semiMinor == doctest::Approx(5.0));

    auto disk = maskToEllipse(diskMask(128, 128, 64, 64, 40));
    CHECK(std::abs(disk.semiMajor - 40.0) < 1.0);
    CHECK(std::abs(disk.semiMinor - 40.0) < 1.0);

    auto bar = shapeMask(Representation{OrientedBox{60, 60, 50, 10, 45.0}}, 120, 120);
    auto obox = maskToOrientedBox(bar);
    auto ell = maskToEllipse(bar);
    CHECK(ell.thetaDeg == obox.thetaDeg);
    CHECK(ell.cx == obox.cx);
    CHECK(ell.cy == obox.cy);
    CHECK(ell.semiMajor == doctest::Approx(0.5 * obox.w));
    CHECK(ell.semiMinor == doctest::Approx(0.5 * obox.h));
}

TEST_CASE("inscribed ellipse lies inside its oriented box") {
    auto m = shapeMask(Representation{OrientedBox{70, 60, 64, 30, 20.0}}, 140, 120);
    auto boxPoly = toPolygon(Representation{maskToOrientedBox(m)});
    auto ellPoly = toPolygon(Representation{maskToEllipse(m)}, 256);
    for (const Point2& p : ellPoly.vertices())
        CHECK(insideConvex(p, boxPoly, 1e-9));
}

TEST_CASE("polar polygon of a disk") {
    const double r = 50.0;
    auto m = diskMask(128, 128, 64, 64, r);
    bool poleInside = false;
    auto p12 = maskToPolarPolygon(m, 12, &poleInside);
    CHECK(poleInside);
    REQUIRE(p12.pointCount() == 12);
    for (double rad : p12.radii) CHECK(std::abs(rad - r) < 1.0);
    CHECK(p12.cx == doctest::Approx(64.0).epsilon(1e-6));
    CHECK(p12.cy == doctest::Approx(64.0).epsilon(1e-6));

    const double closed12 = (12.0 / (2.0 * kPi)) * std::sin(2.0 * kPi / 12.0);
    const double iou12 = representationIoU(Representation{p12}, m);
    CHECK(std::abs(iou12 - closed12) < 0.015);

    auto p120 = maskToPolarPolygon(m, 120);
    CHECK(representationIoU(Representation{p120}, m) >= 0.985);
}

TEST_CASE("polar IoU approaches the inscribed-polygon ratio on a large disk") {
    const double r = 150.0;
    auto m = diskMask(340, 340, 170, 170, r);
    for (int R : {12, 24, 36}) {
        const double closed = (R / (2.0 * kPi)) * std::sin(2.0 * kPi / R);
        const double iou =
            representationIoU(Representation{maskToPolarPolygon(m, R)}, m);
        CHECK(std::abs(iou - closed) < 0.01);
    }
}

TEST_CASE("polar polygon of a square with four rays is the midpoint diamond") {
    auto m = rectMask(256, 256, 28, 28, 200, 200);
    auto p4 = maskToPolarPolygon(m, 4);
    REQUIRE(p4.pointCount() == 4);
    // Radii stop at the farthest cell centers: half a cell short of the edge.
    for (double rad : p4.radii) CHECK(rad == doctest::Approx(99.5));
    CHECK(representationIoU(Representation{p4}, m) ==
          doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("polar conversion degeneracies and diagnostics") {
    RasterGrid single(8, 8);
    single.set(3, 3);
    CHECK_THROWS_AS(maskToPolarPolygon(maskFromGrid(single), 12),
                    DegenerateGeometryError);
    CHECK_THROWS_AS(maskToPolarPolygon(diskMask(64, 64, 32, 32, 10), 2),
                    PreconditionError);

    // Ring mask: centroid falls in the hole, conversion still proceeds.
    RasterGrid ring(96, 96);
    for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) {
            const double d = std::hypot(x + 0.5 - 48.0, y + 0.5 - 48.0);
            if (d >= 30.0 && d <= 36.0) ring.set(x, y);
        }
    bool poleInside = true;
    auto poly = maskToPolarPolygon(maskFromGrid(ring), 24, &poleInside);
    CHECK_FALSE(poleInside);
    for (double rad : poly.radii) CHECK(rad > 30.0);
}

TEST_CASE("containment chain: polygon IoU non-decreasing in sampling count") {
    auto m = diskMask(200, 200, 100, 100, 80);
    double prev = 0.0;
    for (int R : {12, 24, 36, 60, 120}) {
        const double iou =
            representationIoU(Representation{maskToPolarPolygon(m, R)}, m);
        CHECK(iou >= prev - 1e-3);
        prev = iou;
    }
    CHECK(prev > 0.98);
}

TEST_CASE("polygon views of representations") {
    auto sq = toPolygon(Representation{BoundingBox{1, 1, 2, 2}});
    REQUIRE(sq.size() == 4);
    CHECK(sq[0] == Point2{0, 0});
    CHECK(sq[1] == Point2{2, 0});
    CHECK(sq[2] == Point2{2, 2});
    CHECK(sq[3] == Point2{0, 2});

    auto a = toPolygon(Representation{OrientedBox{5, 5, 4, 2, 90.0}});
    auto b = toPolygon(Representation{OrientedBox{5, 5, 2, 4, 0.0}});
    for (const Point2& p : a.vertices()) {
        bool found = false;
        for (const Point2& q : b.vertices()) found |= norm(p - q) < 1e-9;
        CHECK(found);
    }

    const double r = 7.0;
    auto circle = toPolygon(Representation{Ellipse{0, 0, r, r, 0}}, 360);
    CHECK(polygonArea(circle) == doctest::Approx(kPi * r * r).epsilon(1e-3));
    CHECK_THROWS_AS(toPolygon(Representation{Ellipse{0, 0, r, r, 0}}, 7),
                    PreconditionError);

    auto diamond = toPolygon(Representation{PolarPolygon{0, 0, {3, 4, 3, 4}}});
    CHECK(polygonArea(diamond) == doctest::Approx(2.0 * 3 * 4).epsilon(1e-12));
    // Consecutive zero radii collapse to one pole vertex.
    auto collapsed = toPolygon(Representation{PolarPolygon{0, 0, {0, 0, 4, 4}}});
    CHECK(collapsed.size() == 3);
    CHECK_THROWS_AS(toPolygon(Representation{PolarPolygon{0, 0, {0.5, 0, 0.5, 0}}}),
                    DegenerateGeometryError);
}

TEST_CASE("representation IoU: exact path for box pairs") {
    Representation a = OrientedBox{4, 4, 3, 2, 30.0};
    CHECK(representationIoU(a, a) == doctest::Approx(1.0).epsilon(1e-12));

    Representation unitBox = BoundingBox{0, 0, 1, 1};
    Representation rot45 = OrientedBox{0, 0, 1, 1, 45.0};
    const double inter = 2.0 * (std::sqrt(2.0) - 1.0);
    const double oracle = inter / (2.0 - inter);
    CHECK(representationIoU(unitBox, rot45) ==
          doctest::Approx(oracle).epsilon(1e-12));
    CHECK(oracle == doctest::Approx(0.7071).epsilon(1e-3));

    Representation disjoint = BoundingBox{10, 10, 1, 1};
    CHECK(representationIoU(unitBox, disjoint) == 0.0);
}

TEST_CASE("representation IoU: raster path consistency") {
    Representation circle = Ellipse{100, 100, 30, 30, 0};
    CHECK(representationIoU(circle, circle) == doctest::Approx(1.0));

    // Concentric circles: IoU = (r2/r1)^2.
    Representation small = Ellipse{100, 100, 21.2132, 21.2132, 0};
    const double iou = representationIoU(circle, small);
    CHECK(iou == doctest::Approx(0.5).epsilon(0.01));
    CHECK(representationIoU(small, circle) == doctest::Approx(iou));

    // Mixed exact-kind and raster-kind arguments take the raster path.
    Representation box = BoundingBox{100, 100, 60, 60};
    const double boxCircle = representationIoU(box, circle);
    const double oracle = kPi * 30 * 30 / (60.0 * 60.0);
    CHECK(boxCircle == doctest::Approx(oracle).epsilon(0.01));

    Representation polar = PolarPolygon{100, 100, {30, 30, 30, 30}};
    const double diamondInCircle = representationIoU(polar, circle);
    const double diamondOracle = (2.0 * 30 * 30) / (kPi * 30 * 30);
    CHECK(diamondInCircle == doctest::Approx(diamondOracle).epsilon(0.01));
}

TEST_CASE("exact and raster box IoU agree") {
    Rng rng(0xace5U);
    for (int trial = 0; trial < 60; ++trial) {
        OrientedBox p{rng.uniform(100, 160), rng.uniform(100, 160),
                      rng.uniform(20, 80), rng.uniform(10, 50),
                      rng.uniform(-90, 90)};
        OrientedBox q{rng.uniform(100, 160), rng.uniform(100, 160),
                      rng.uniform(20, 80), rng.uniform(10, 50),
                      rng.uniform(-90, 90)};
        const double exact = representationIoU(Representation{p}, Representation{q});

        auto pa = toPolygon(Representation{p});
        auto pb = toPolygon(Representation{q});
        auto ga = rasterize(pa, 260, 260);
        auto gb = rasterize(pb, 260, 260);
        const double approx = rasterIoU(ga, gb);
        CHECK(std::abs(exact - approx) <= 0.01);
    }
}

TEST_CASE("mask-vs-mask IoU and frame checks") {
    auto a = rectMask(32, 32, 4, 4, 10, 10);
    auto b = rectMask(32, 32, 9, 4, 10, 10);
    // Overlap 5x10 of union 150.
    CHECK(representationIoU(a, b) == doctest::Approx(50.0 / 150.0).epsilon(1e-12));
    auto c = rectMask(16, 16, 0, 0, 4, 4);
    CHECK_THROWS_AS(representationIoU(a, c), PreconditionError);

    // Shape partly outside the mask frame is clipped to it.
    Representation huge = BoundingBox{0, 0, 64, 64};
    auto corner = rectMask(32, 32, 0, 0, 16, 16);
    const double clipped = representationIoU(huge, corner);
    // Inside-frame shape area is 32x32; the mask 16x16 sits inside it.
    CHECK(clipped == doctest::Approx(256.0 / 1024.0).epsilon(1e-12));
}

TEST_CASE("convertMask dispatches on representation kind") {
    auto m = diskMask(96, 96, 48, 48, 30);
    CHECK(std::holds_alternative<BoundingBox>(convertMask(m, {RepKind::box, 0})));
    CHECK(std::holds_alternative<OrientedBox>(
        convertMask(m, {RepKind::orientedBox, 0})));
    CHECK(std::holds_alternative<Ellipse>(convertMask(m, {RepKind::ellipse, 0})));
    auto poly = convertMask(m, {RepKind::polarPolygon, 36});
    REQUIRE(std::holds_alternative<PolarPolygon>(poly));
    CHECK(std::get<PolarPolygon>(poly).pointCount() == 36);
}

TEST_CASE("representation bounds cover the polygonized shape") {
    Rng rng(0xbedU);
    for (int trial = 0; trial < 20; ++trial) {
        Representation rep;
        switch (trial % 4) {
            case 0:
                rep = BoundingBox{rng.uniform(-5, 5), rng.uniform(-5, 5),
                                  rng.uniform(1, 9), rng.uniform(1, 9)};
                break;
            case 1:
                rep = OrientedBox{rng.uniform(-5, 5), rng.uniform(-5, 5),
                                  rng.uniform(2, 9), rng.uniform(1, 2),
                                  rng.uniform(-180, 180)};
                break;
            case 2: {
                const double a = rng.uniform(2, 9);
                rep = Ellipse{rng.uniform(-5, 5), rng.uniform(-5, 5), a,
                              rng.uniform(0.5, a), rng.uniform(-180, 180)};
                break;
            }
            default:
                rep = PolarPolygon{rng.uniform(-5, 5), rng.uniform(-5, 5),
                                   {rng.uniform(1, 9), rng.uniform(1, 9),
                                    rng.uniform(1, 9), rng.uniform(1, 9),
                                    rng.uniform(1, 9)}};
        }
        const Bounds bounds = representationBounds(rep);
        auto poly = toPolygon(rep, 512);
        for (const Point2& p : poly.vertices()) {
            CHECK(p.x >= bounds.minX - 1e-6);
            CHECK(p.x <= bounds.maxX + 1e-6);
            CHECK(p.y >= bounds.minY - 1e-6);
            CHECK(p.y <= bounds.maxY + 1e-6);
        }
    }
}
