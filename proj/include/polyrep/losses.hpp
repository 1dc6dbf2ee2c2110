#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyrep/representations.hpp"

namespace polyrep {

/// Width/height prior in pixels.
struct Anchor {
    double w = 0.0;
    double h = 0.0;
};

/// Prediction grid layout: S x S cells, B anchors per cell. Slot index is
/// cell * B + anchor with cells row-major (cell = gy * S + gx).
struct GridSpec {
    int cellsPerSide = 1;
    std::vector<Anchor> anchors;

    int anchorsPerCell() const { return static_cast<int>(anchors.size()); }
    int slotCount() const {
        return cellsPerSide * cellsPerSide * anchorsPerCell();
    }
};

void validate(const GridSpec& g);

/// Raw network outputs for one grid slot. Center offsets fx, fy are in
/// grid-cell units; fw, fh are log-scales against the slot's anchor.
/// theta is the orientation normalized to [-1, 1] (+-180 degrees); radii are
/// polar distances normalized to [0, 1] by the image diagonal.
struct CellPrediction {
    double fx = 0.0, fy = 0.0;
    double fw = 0.0, fh = 0.0;
    double objectness = 0.0;
    std::vector<double> classScores;
    std::optional<double> theta;
    std::optional<std::vector<double>> radii;
};

/// Regression targets for one grid slot. x, y are the object center in
/// grid-cell units; w, h in pixels. objectness is the confidence target
/// C in {0, 1}; hasObject is the indicator gating the coordinate losses.
struct CellTarget {
    bool hasObject = false;
    double x = 0.0, y = 0.0;
    double w = 0.0, h = 0.0;
    double objectness = 0.0;
    int classIndex = 0;
    std::optional<double> theta;
    std::optional<std::vector<double>> radii;
};

struct LossWeights {
    double lambdaCoord = 5.0;
};

void validate(const LossWeights& w);

/// Output head: which optional fields participate in the total loss.
enum class Head { box, oriented, ellipse, polygon };

std::string toString(Head head);
Head headFromString(const std::string& s);

struct LossOptions {
    /// Objectness as the literal positive-half sum -sum C log(C_hat) instead
    /// of full binary cross-entropy over all slots.
    bool literalObjectness = false;
    /// Center-y decode as the literal y_hat = g_y * f_y instead of g_y + f_y.
    bool literalCenterDecode = false;
    double epsilon = 1e-7;
};

/// Anchor decode: w = a_w exp(fw), h = a_h exp(fh), cx = g_x + fx,
/// cy = g_y + fy (cx, cy in grid-cell units, w, h in pixels).
/// Throws NumericRangeError when exp overflows to non-finite.
BoundingBox decodeAnchor(const CellPrediction& pred, int gx, int gy,
                         const Anchor& anchor, const LossOptions& opts = {});

/// Inverse of decodeAnchor (offset fields only); exact up to rounding.
CellPrediction encodeAnchor(const BoundingBox& box, int gx, int gy,
                            const Anchor& anchor);

using PredSpan = std::span<const CellPrediction>;
using TargetSpan = std::span<const CellTarget>;

/// Center loss: lambda * sum over object slots of squared center error.
double lossXY(PredSpan preds, TargetSpan targets, const GridSpec& grid,
              const LossWeights& weights, const LossOptions& opts = {});

/// Size loss: lambda * sum over object slots of squared sqrt-dimension error.
double lossWH(PredSpan preds, TargetSpan targets, const GridSpec& grid,
              const LossWeights& weights, const LossOptions& opts = {});

/// Objectness loss: full binary cross-entropy over every slot (or the literal
/// positive half when opts.literalObjectness).
double lossObj(PredSpan preds, TargetSpan targets, const GridSpec& grid,
               const LossOptions& opts = {});

/// Class loss: categorical cross-entropy over object slots.
double lossClass(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                 const LossOptions& opts = {});

/// Orientation loss: squared difference of normalized angles over object
/// slots. No wrap-around: +1 vs -1 scores as maximally wrong.
double lossOrientation(PredSpan preds, TargetSpan targets, const GridSpec& grid);

/// Polygon loss: squared radius errors over object slots; every radii list
/// must have exactly pointCount entries.
double lossPolygon(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                   int pointCount);

/// Head-dependent sum of sub-losses. box: xy+wh+obj+class; oriented and
/// ellipse add orientation; polygon adds the radius term.
double lossTotal(PredSpan preds, TargetSpan targets, const GridSpec& grid,
                 const LossWeights& weights, Head head,
                 const LossOptions& opts = {});

/// Partials of lossTotal w.r.t. one slot's prediction fields. Vector fields
/// are sized like the prediction's; gradients of absent optionals are empty.
struct CellGradient {
    double fx = 0.0, fy = 0.0;
    double fw = 0.0, fh = 0.0;
    double objectness = 0.0;
    std::vector<double> classScores;
    double theta = 0.0;
    std::vector<double> radii;
};

std::vector<CellGradient> lossGradient(PredSpan preds, TargetSpan targets,
                                       const GridSpec& grid,
                                       const LossWeights& weights, Head head,
                                       const LossOptions& opts = {});

/// Finite-difference audit of lossGradient on random interior configurations.
struct AuditResult {
    double maxRelError = 0.0;
    Head worstHead = Head::box;
    std::string worstField;
    int trialsRun = 0;
    bool pass(double tol = 1e-5) const { return maxRelError <= tol; }
};

AuditResult runGradientAudit(std::uint64_t seed, int trialsPerHead,
                             const LossOptions& opts = {});

} // namespace polyrep
