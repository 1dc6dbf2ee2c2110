#include "polyrep/losses.hpp"

#include <algorithm>
#include <cmath>

#include "polyrep/rng.hpp"

namespace polyrep {

void validate(const GridSpec& g) {
    if (g.cellsPerSide < 1)
        throw PreconditionError("grid needs at least one cell per side");
    if (g.anchors.empty())
        throw PreconditionError("grid needs at least one anchor");
    for (const Anchor& a : g.anchors)
        if (!(a.w > 0.0) || !(a.h > 0.0))
            throw PreconditionError("anchor dimensions must be positive");
}

void validate(const LossWeights& w) {
    if (!(w.lambdaCoord > 0.0))
        throw PreconditionError("lambda_coord must be positive");
}

std::string toString(Head head) {
    switch (head) {
        case Head::box: return "box";
        case Head::oriented: return "oriented";
        case Head::ellipse: return "ellipse";
        case Head::polygon: return "polygon";
    }
    throw PreconditionError("unknown head");
}

Head headFromString(const std::string& s) {
    if (s == "box") return Head::box;
    if (s == "oriented") return Head::oriented;
    if (s == "ellipse") return Head::ellipse;
    if (s == "polygon") return Head::polygon;
    throw PreconditionError("unknown head: " + s);
}

BoundingBox decodeAnchor(const CellPrediction& pred, int gx, int gy,
                         const Anchor& anchor, const LossOptions& opts) {
    if (!(anchor.w > 0.0) || !(anchor.h > 0.0))
        throw PreconditionError("anchor dimensions must be positive");
    BoundingBox box;
    box.cx = gx + pred.fx;
    box.cy = opts.literalCenterDecode ? gy * pred.fy : gy + pred.fy;
    box.w = anchor.w * std::exp(pred.fw);
    box.h = anchor.h * std::exp(pred.fh);
    if (!std::isfinite(box.cx) || !std::isfinite(box.cy) ||
        !std::isfinite(box.w) || !std::isfinite(box.h))
        throw NumericRangeError("anchor decode left the finite range");
    return box;
}

CellPrediction encodeAnchor(const BoundingBox& box, int gx, int gy,
                            const Anchor& anchor) {
    if (!(anchor.w > 0.0) || !(anchor.h > 0.0))
        throw PreconditionError("anchor dimensions must be positive");
    if (!(box.w > 0.0) || !(box.h > 0.0))
        throw PreconditionError("box dimensions must be positive");
    CellPrediction p;
    p.fx = box.cx - gx;
    p.fy = box.cy - gy;
    p.fw = std::log(box.w / anchor.w);
    p.fh = std::log(box.h / anchor.h);
    if (!std::isfinite(p.fw) || !std::isfinite(p.fh))
        throw NumericRangeError("anchor encode left the finite range");
    return p;
}

namespace {

constexpr double kRangeSlack = 1e-9;
// Simplex-sum check loose enough to admit finite-difference probes.
constexpr double kSimplexSlack = 1e-3;

void checkSpans(PredSpan preds, TargetSpan targets, const GridSpec& grid) {
    validate(grid);
    const std::size_t n = static_cast<std::size_t>(grid.slotCount());
    if (preds.size() != n || targets.size() != n)
        throw PreconditionError("prediction/target spans must match the grid slot count");
}

struct SlotPos {
    int gx, gy, anchor;
};

SlotPos slotPos(const GridSpec& grid, std::size_t slot) {
    const int b = grid.anchorsPerCell();
    const int cell = static_cast<int>(slot) / b;
    return {cell % grid.cellsPerSide, cell / grid.cellsPerSide,
            static_cast<int>(slot) % b};
}

double xyCore(PredSpan preds, TargetSpan targets, const GridSpec& grid,
              const LossWeights& weights, const LossOptions& opts,
              std::vector<CellGradient>* grad) {
    checkSpans(preds, targets, grid);
    validate(weights);
    const double lambda = weights.lambdaCoord;
    double loss = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        if (!targets[s].hasObject) continue;
        const SlotPos pos = slotPos(grid, s);
        const double cx = pos.gx + preds[s].fx;
        const double cy = opts.literalCenterDecode ? pos.gy * preds[s].fy
                                                   : pos.gy + preds[s].fy;
        const double dx = cx - targets[s].x;
        const double dy = cy - targets[s].y;
        loss += lambda * (dx * dx + dy * dy);
        if (grad != nullptr) {
            (*grad)[s].fx += 2.0 * lambda * dx;
            (*grad)[s].fy +=
                2.0 * lambda * dy * (opts.literalCenterDecode ? pos.gy : 1.0);
        }
    }
    return loss;
}

double whCore(PredSpan preds, TargetSpan targets, const GridSpec& grid,
              const LossWeights& weights, std::vector<CellGradient>* grad) {
    checkSpans(preds, targets, grid);
    validate(weights);
    const double lambda = weights.lambdaCoord;
    double loss = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        if (!targets[s].hasObject) continue;
        if (targets[s].w < 0.0 || targets[s].h < 0.0)
            throw PreconditionError("target dimensions must be non-negative");
        const Anchor& a = grid.anchors[slotPos(grid, s).anchor];
        const double w = a.w * std::exp(preds[s].fw);
        const double h = a.h * std::exp(preds[s].fh);
        if (!std::isfinite(w) || !std::isfinite(h))
            throw NumericRangeError("anchor decode left the finite range");
        const double dw = std::sqrt(w) - std::sqrt(targets[s].w);
        const double dh = std::sqrt(h) - std::sqrt(targets[s].h);
        loss += lambda * (dw * dw + dh * dh);
        if (grad != nullptr) {
            // d sqrt(w)/d fw = sqrt(w)/2, so the chain gives lambda*dw*sqrt(w).
            (*grad)[s].fw += lambda * dw * std::sqrt(w);
            (*grad)[s].fh += lambda * dh * std::sqrt(h);
        }
    }
    return loss;
}

double objCore(PredSpan preds, TargetSpan targets, const GridSpec& grid,
               const LossOptions& opts, std::vector<CellGradient>* grad) {
    checkSpans(preds, targets, grid);
    const double eps = opts.epsilon;
    double loss = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        const double c = targets[s].objectness;
        if (c != 0.0 && c != 1.0)
            throw PreconditionError("target objectness must be 0 or 1");
        const double raw = preds[s].objectness;
        if (raw < -kRangeSlack || raw > 1.0 + kRangeSlack)
            throw PreconditionError("predicted objectness outside [0, 1]");
        const double p = std::clamp(raw, eps, 1.0 - eps);
        const bool clamped = raw < eps || raw > 1.0 - eps;
        if (opts.literalObjectness) {
            loss += -c * std::log(p);
            if (grad != nullptr && !clamped) (*grad)[s].objectness += -c / p;
        } else {
            loss += -(c * std::log(p) + (1.0 - c) * std::log(1.0 - p));
            if (grad != nullptr && !clamped)
                (*grad)[s].objectness += -c / p + (1.0 - c) / (1.0 - p);
        }
    }
    return loss;
}

double classCore(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                 const LossOptions& opts, std::vector<CellGradient>* grad) {
    checkSpans(preds, targets, grid);
    const double eps = opts.epsilon;
    double loss = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        if (!targets[s].hasObject) continue;
        const auto& scores = preds[s].classScores;
        const int idx = targets[s].classIndex;
        if (idx < 0 || static_cast<std::size_t>(idx) >= scores.size())
            throw PreconditionError("target class index outside the score vector");
        double sum = 0.0;
        for (double v : scores) {
            if (v < -kRangeSlack)
                throw PreconditionError("class scores must be non-negative");
            sum += v;
        }
        if (std::abs(sum - 1.0) > kSimplexSlack)
            throw PreconditionError("class scores must lie on the simplex");
        const double raw = scores[static_cast<std::size_t>(idx)];
        const double p = std::clamp(raw, eps, 1.0);
        loss += -std::log(p);
        if (grad != nullptr && raw > eps && raw < 1.0)
            (*grad)[s].classScores[static_cast<std::size_t>(idx)] += -1.0 / raw;
    }
    return loss;
}

double orientationCore(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                       std::vector<CellGradient>* grad) {
    checkSpans(preds, targets, grid);
    double loss = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        if (!targets[s].hasObject) continue;
        if (!preds[s].theta.has_value() || !targets[s].theta.has_value())
            throw PreconditionError("orientation loss needs theta on both sides");
        const double th = *targets[s].theta;
        const double tp = *preds[s].theta;
        if (std::abs(th) > 1.0 + kRangeSlack || std::abs(tp) > 1.0 + kRangeSlack)
            throw PreconditionError("normalized theta outside [-1, 1]");
        const double d = tp - th;
        loss += d * d;
        if (grad != nullptr) (*grad)[s].theta += 2.0 * d;
    }
    return loss;
}

double polygonCore(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                   int pointCount, std::vector<CellGradient>* grad) {
    checkSpans(preds, targets, grid);
    if (pointCount < 3)
        throw PreconditionError("polygon loss needs at least 3 sampling points");
    double loss = 0.0;
    for (std::size_t s = 0; s < preds.size(); ++s) {
        if (!targets[s].hasObject) continue;
        if (!preds[s].radii.has_value() || !targets[s].radii.has_value())
            throw PreconditionError("polygon loss needs radii on both sides");
        const auto& rp = *preds[s].radii;
        const auto& rt = *targets[s].radii;
        if (rp.size() != static_cast<std::size_t>(pointCount) ||
            rt.size() != static_cast<std::size_t>(pointCount))
            throw PreconditionError("radii list length must equal the sampling count");
        for (std::size_t k = 0; k < rp.size(); ++k) {
            if (rt[k] < -kRangeSlack || rp[k] < -kRangeSlack)
                throw PreconditionError("radii must be non-negative");
            const double d = rp[k] - rt[k];
            loss += d * d;
            if (grad != nullptr) (*grad)[s].radii[k] += 2.0 * d;
        }
    }
    return loss;
}

int polygonPointCount(PredSpan preds, TargetSpan targets) {
    for (std::size_t s = 0; s < targets.size(); ++s) {
        if (!targets[s].hasObject) continue;
        if (targets[s].radii.has_value())
            return static_cast<int>(targets[s].radii->size());
        if (preds[s].radii.has_value())
            return static_cast<int>(preds[s].radii->size());
    }
    return 0;
}

double totalCore(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                 const LossWeights& weights, Head head, const LossOptions& opts,
                 std::vector<CellGradient>* grad) {
    double loss = xyCore(preds, targets, grid, weights, opts, grad) +
                  whCore(preds, targets, grid, weights, grad) +
                  objCore(preds, targets, grid, opts, grad) +
                  classCore(preds, targets, grid, opts, grad);
    if (head == Head::oriented || head == Head::ellipse)
        loss += orientationCore(preds, targets, grid, grad);
    if (head == Head::polygon) {
        const int r = polygonPointCount(preds, targets);
        bool anyObject = false;
        for (const CellTarget& t : targets) anyObject |= t.hasObject;
        if (anyObject && r == 0)
            throw PreconditionError("polygon head needs radii on object slots");
        if (r > 0) loss += polygonCore(preds, targets, grid, r, grad);
    }
    return loss;
}

} // namespace

double lossXY(PredSpan preds, TargetSpan targets, const GridSpec& grid,
              const LossWeights& weights, const LossOptions& opts) {
    return xyCore(preds, targets, grid, weights, opts, nullptr);
}

double lossWH(PredSpan preds, TargetSpan targets, const GridSpec& grid,
              const LossWeights& weights, const LossOptions&) {
    return whCore(preds, targets, grid, weights, nullptr);
}

double lossObj(PredSpan preds, TargetSpan targets, const GridSpec& grid,
               const LossOptions& opts) {
    return objCore(preds, targets, grid, opts, nullptr);
}

double lossClass(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                 const LossOptions& opts) {
    return classCore(preds, targets, grid, opts, nullptr);
}

double lossOrientation(PredSpan preds, TargetSpan targets, const GridSpec& grid) {
    return orientationCore(preds, targets, grid, nullptr);
}

double lossPolygon(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                   int pointCount) {
    return polygonCore(preds, targets, grid, pointCount, nullptr);
}

double lossTotal(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                 const LossWeights& weights, Head head, const LossOptions& opts) {
    return totalCore(preds, targets, grid, weights, head, opts, nullptr);
}

std::vector<CellGradient> lossGradient(PredSpan preds, TargetSpan targets,
                                       const GridSpec& grid,
                                       const LossWeights& weights, Head head,
                                       const LossOptions& opts) {
    checkSpans(preds, targets, grid);
    std::vector<CellGradient> grad(preds.size());
    for (std::size_t s = 0; s < preds.size(); ++s) {
        grad[s].classScores.assign(preds[s].classScores.size(), 0.0);
        if (preds[s].radii.has_value())
            grad[s].radii.assign(preds[s].radii->size(), 0.0);
    }
    totalCore(preds, targets, grid, weights, head, opts, &grad);
    return grad;
}

namespace {

struct FieldProbe {
    std::string name;
    double* value;
    double analytic;
};

std::vector<CellPrediction> randomPredictions(Rng& rng, const GridSpec& grid,
                                              Head head, int pointCount) {
    std::vector<CellPrediction> preds(grid.slotCount());
    for (CellPrediction& p : preds) {
        p.fx = rng.uniform(-1.0, 1.0);
        p.fy = rng.uniform(-1.0, 1.0);
        p.fw = rng.uniform(-1.0, 1.0);
        p.fh = rng.uniform(-1.0, 1.0);
        p.objectness = rng.uniform(0.05, 0.95);
        const double a = rng.uniform(0.05, 0.95);
        p.classScores = {a, 1.0 - a};
        if (head == Head::oriented || head == Head::ellipse)
            p.theta = rng.uniform(-0.95, 0.95);
        if (head == Head::polygon) {
            std::vector<double> r(pointCount);
            for (double& v : r) v = rng.uniform(0.05, 0.95);
            p.radii = std::move(r);
        }
    }
    return preds;
}

std::vector<CellTarget> randomTargets(Rng& rng, const GridSpec& grid, Head head,
                                      int pointCount) {
    std::vector<CellTarget> targets(grid.slotCount());
    bool anyObject = false;
    for (std::size_t s = 0; s < targets.size(); ++s) {
        CellTarget& t = targets[s];
        t.hasObject = rng.chance(0.7);
        anyObject |= t.hasObject;
        t.x = rng.uniform(0.0, grid.cellsPerSide);
        t.y = rng.uniform(0.0, grid.cellsPerSide);
        t.w = rng.uniform(4.0, 128.0);
        t.h = rng.uniform(4.0, 128.0);
        t.objectness = t.hasObject ? 1.0 : 0.0;
        t.classIndex = static_cast<int>(rng.uniformInt(0, 1));
        if (head == Head::oriented || head == Head::ellipse)
            t.theta = rng.uniform(-0.95, 0.95);
        if (head == Head::polygon) {
            std::vector<double> r(pointCount);
            for (double& v : r) v = rng.uniform(0.05, 0.95);
            t.radii = std::move(r);
        }
    }
    if (!anyObject) {
        targets[0].hasObject = true;
        targets[0].objectness = 1.0;
    }
    return targets;
}

} // namespace

AuditResult runGradientAudit(std::uint64_t seed, int trialsPerHead,
                             const LossOptions& opts) {
    if (trialsPerHead < 1)
        throw PreconditionError("audit needs at least one trial per head");
    constexpr double kStep = 1e-5;
    const Head heads[] = {Head::box, Head::oriented, Head::ellipse, Head::polygon};
    AuditResult result;
    const LossWeights weights{};

    for (std::size_t h = 0; h < 4; ++h) {
        const Head head = heads[h];
        for (int trial = 0; trial < trialsPerHead; ++trial) {
            Rng rng(Rng::deriveSeed(seed, h * 1000003ULL + trial));
            GridSpec grid;
            grid.cellsPerSide = static_cast<int>(rng.uniformInt(1, 3));
            const int b = static_cast<int>(rng.uniformInt(1, 2));
            for (int i = 0; i < b; ++i)
                grid.anchors.push_back({rng.uniform(8.0, 64.0), rng.uniform(8.0, 64.0)});
            const int pointCount = 8;

            auto preds = randomPredictions(rng, grid, head, pointCount);
            const auto targets = randomTargets(rng, grid, head, pointCount);
            const auto analytic = lossGradient(preds, targets, grid, weights, head, opts);

            std::vector<FieldProbe> probes;
            for (std::size_t s = 0; s < preds.size(); ++s) {
                CellPrediction& p = preds[s];
                probes.push_back({"fx", &p.fx, analytic[s].fx});
                probes.push_back({"fy", &p.fy, analytic[s].fy});
                probes.push_back({"fw", &p.fw, analytic[s].fw});
                probes.push_back({"fh", &p.fh, analytic[s].fh});
                probes.push_back({"objectness", &p.objectness, analytic[s].objectness});
                for (std::size_t c = 0; c < p.classScores.size(); ++c)
                    probes.push_back({"classScores[" + std::to_string(c) + "]",
                                      &p.classScores[c], analytic[s].classScores[c]});
                if (p.theta.has_value())
                    probes.push_back({"theta", &*p.theta, analytic[s].theta});
                if (p.radii.has_value())
                    for (std::size_t k = 0; k < p.radii->size(); ++k)
                        probes.push_back({"radii[" + std::to_string(k) + "]",
                                          &(*p.radii)[k], analytic[s].radii[k]});
            }

            for (FieldProbe& probe : probes) {
                const double saved = *probe.value;
                *probe.value = saved + kStep;
                const double up = lossTotal(preds, targets, grid, weights, head, opts);
                *probe.value = saved - kStep;
                const double down = lossTotal(preds, targets, grid, weights, head, opts);
                *probe.value = saved;
                const double fd = (up - down) / (2.0 * kStep);
                const double rel = std::abs(probe.analytic - fd) /
                                   std::max({1.0, std::abs(probe.analytic), std::abs(fd)});
                if (rel > result.maxRelError) {
                    result.maxRelError = rel;
                    result.worstHead = head;
                    result.worstField = probe.name;
                }
            }
            ++result.trialsRun;
        }
    }
    return result;
}

} // namespace polyrep
