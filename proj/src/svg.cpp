#include "polyrep/svg.hpp"

#include <cstdint>
#include <cstdio>
#include <unordered_map>

#include "polyrep/errors.hpp"

namespace polyrep {

namespace {

struct Edge {
    std::int64_t from = 0;
    std::int64_t to = 0;
    bool used = false;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

const char* classColor(ClassLabel label) {
    return label == ClassLabel::vehicle ? "#4e79a7" : "#e15759";
}

const char* shapeColor(ClassLabel label) {
    return label == ClassLabel::vehicle ? "#76b7b2" : "#f28e2b";
}

void appendLoopPath(std::string& out, const std::vector<Point2>& loop) {
    for (std::size_t i = 0; i < loop.size(); ++i) {
        out += i == 0 ? "M" : " L";
        out += fmt(loop[i].x);
        out += ' ';
        out += fmt(loop[i].y);
    }
    out += " Z";
}

} // namespace

std::vector<std::vector<Point2>> traceOutlines(const RasterGrid& grid) {
    const int w = grid.width();
    const int h = grid.height();
    const std::int64_t stride = w + 1;
    const auto corner = [stride](int x, int y) { return y * stride + x; };

    // Free edges of occupied cells, directed so the cell stays on the right
    // in screen coordinates; every boundary vertex then has equal in and out
    // degree and the edges chain into closed loops.
    std::vector<Edge> edges;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> outgoing;
    const auto occupied = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h && grid.at(x, y);
    };
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!grid.at(x, y)) continue;
            const auto add = [&](std::int64_t from, std::int64_t to) {
                outgoing[from].push_back(edges.size());
                edges.push_back({from, to, false});
            };
            if (!occupied(x, y - 1)) add(corner(x, y), corner(x + 1, y));
            if (!occupied(x + 1, y)) add(corner(x + 1, y), corner(x + 1, y + 1));
            if (!occupied(x, y + 1)) add(corner(x + 1, y + 1), corner(x, y + 1));
            if (!occupied(x - 1, y)) add(corner(x, y + 1), corner(x, y));
        }
    }

    std::vector<std::vector<Point2>> loops;
    for (std::size_t start = 0; start < edges.size(); ++start) {
        if (edges[start].used) continue;
        std::vector<std::int64_t> corners;
        corners.push_back(edges[start].from);
        std::size_t cur = start;
        while (true) {
            edges[cur].used = true;
            const std::int64_t at = edges[cur].to;
            if (at == corners.front()) break;
            corners.push_back(at);
            std::size_t next = edges.size();
            for (std::size_t cand : outgoing[at]) {
                if (!edges[cand].used) {
                    next = cand;
                    break;
                }
            }
            if (next == edges.size())
                throw PreconditionError("boundary trace left an open chain");
            cur = next;
        }

        // Drop corners that continue in the same axis direction.
        const auto pointOf = [&](std::int64_t key) {
            return Point2{static_cast<double>(key % stride),
                          static_cast<double>(key / stride)};
        };
        const std::size_t n = corners.size();
        std::vector<Point2> loop;
        for (std::size_t i = 0; i < n; ++i) {
            const Point2 prev = pointOf(corners[(i + n - 1) % n]);
            const Point2 here = pointOf(corners[i]);
            const Point2 next = pointOf(corners[(i + 1) % n]);
            const bool straight = (prev.x == here.x && here.x == next.x) ||
                                  (prev.y == here.y && here.y == next.y);
            if (!straight) loop.push_back(here);
        }
        loops.push_back(std::move(loop));
    }
    return loops;
}

std::string frameOverlaySvg(int width, int height,
                            std::span<const FrameInstance> instances,
                            std::span<const OverlayShape> shapes) {
    if (width <= 0 || height <= 0)
        throw PreconditionError("overlay canvas must be positive");

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) +
           "\" height=\"" + fmt(height) + "\" viewBox=\"0 0 " + fmt(width) + " " +
           fmt(height) + "\">\n";
    out += "  <rect width=\"100%\" height=\"100%\" fill=\"#1c1c24\"/>\n";

    for (const FrameInstance& inst : instances) {
        const auto loops = traceOutlines(inst.mask);
        if (loops.empty()) continue;
        std::string d;
        for (const auto& loop : loops) {
            if (!d.empty()) d += ' ';
            appendLoopPath(d, loop);
        }
        out += std::string("  <path d=\"") + d + "\" fill=\"" +
               classColor(inst.label) + "\" fill-opacity=\"0.35\" fill-rule=\"evenodd\" stroke=\"" +
               classColor(inst.label) + "\" stroke-width=\"1\"/>\n";
    }

    for (const OverlayShape& shape : shapes) {
        const SimplePolygon poly = toPolygon(shape.rep);
        std::string pts;
        for (const Point2& p : poly.vertices()) {
            if (!pts.empty()) pts += ' ';
            pts += fmt(p.x) + "," + fmt(p.y);
        }
        const char* color = shapeColor(shape.classLabel);
        out += std::string("  <polygon points=\"") + pts + "\" fill=\"none\" stroke=\"" +
               color + "\" stroke-width=\"1.5\" stroke-dasharray=\"5 3\"/>\n";
        if (shape.iou) {
            const Bounds b = representationBounds(shape.rep);
            char label[48];
            std::snprintf(label, sizeof(label), "IoU %.3f", *shape.iou);
            out += std::string("  <text x=\"") + fmt(b.minX) + "\" y=\"" +
                   fmt(b.minY - 4.0) + "\" font-family=\"monospace\" font-size=\"14\" fill=\"" +
                   color + "\">" + label + "</text>\n";
        }
    }

    out += "</svg>\n";
    return out;
}

} // namespace polyrep
