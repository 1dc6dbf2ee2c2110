#include "polyrep/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <variant>

#include "polyrep/errors.hpp"
#include "polyrep/parallel.hpp"

namespace polyrep {

namespace {

bool detBefore(const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.id < b.id;
}

BoundingBox boundsBox(const Bounds& b) {
    return {0.5 * (b.minX + b.maxX), 0.5 * (b.minY + b.maxY), b.width(), b.height()};
}

RepSpec specOf(const Representation& r) {
    RepSpec spec{kindOf(r), 24};
    if (const auto* poly = std::get_if<PolarPolygon>(&r))
        spec.points = static_cast<int>(poly->radii.size());
    return spec;
}

/// IoU between a detection and a ground truth under the configured mode.
struct TruthScorer {
    const EvalConfig& cfg;
    // repVsRep conversions of one truth mask, keyed by kind and point count
    std::map<std::pair<std::size_t, long long>, Representation> cache;

    double iou(const Detection& d, std::size_t truthIdx, const GroundTruth& t) {
        if (cfg.mode == EvalMode::repVsInstance)
            return representationIoU(d.rep, t.mask, cfg.iou);
        if (std::holds_alternative<PolarPolygon>(d.rep) && cfg.polygonRepVsRepAsBox) {
            const Representation detBox{boundsBox(representationBounds(d.rep))};
            const Representation gtBox{maskToBoundingBox(t.mask)};
            return representationIoU(detBox, gtBox, cfg.iou);
        }
        const RepSpec spec = specOf(d.rep);
        const long long key = static_cast<long long>(spec.kind) * 1000000 + spec.points;
        auto it = cache.find({truthIdx, key});
        if (it == cache.end())
            it = cache.emplace(std::pair{truthIdx, key}, convertMask(t.mask, spec)).first;
        return representationIoU(d.rep, it->second, cfg.iou);
    }
};

void requireSingleFrame(std::span<const Detection> dets,
                        std::span<const GroundTruth> truths) {
    const std::string* frame = nullptr;
    for (const auto& d : dets) {
        if (frame && d.frameId != *frame)
            throw PreconditionError("detections and truths must share one frame");
        frame = &d.frameId;
    }
    for (const auto& t : truths) {
        if (frame && t.frameId != *frame)
            throw PreconditionError("detections and truths must share one frame");
        frame = &t.frameId;
    }
}

} // namespace

void validate(const Detection& d) {
    validate(d.rep);
    if (!std::isfinite(d.confidence) || d.confidence < 0.0 || d.confidence > 1.0)
        throw PreconditionError("detection confidence must lie in [0, 1]");
}

std::string toString(EvalMode mode) {
    switch (mode) {
        case EvalMode::repVsRep: return "repVsRep";
        case EvalMode::repVsInstance: return "repVsInstance";
    }
    throw PreconditionError("unknown evaluation mode");
}

EvalMode evalModeFromString(const std::string& s) {
    if (s == "repVsRep") return EvalMode::repVsRep;
    if (s == "repVsInstance") return EvalMode::repVsInstance;
    throw PreconditionError("unknown evaluation mode: " + s);
}

void validate(const EvalConfig& cfg) {
    if (!(cfg.iouThreshold > 0.0) || !(cfg.iouThreshold < 1.0))
        throw PreconditionError("IoU threshold must lie in (0, 1)");
    if (cfg.iou.maskSupersample < 1 || cfg.iou.pairResolution < 8)
        throw PreconditionError("invalid IoU raster configuration");
}

std::vector<Detection> nms(std::vector<Detection> dets, double iouThreshold,
                           const IoUConfig& cfg) {
    if (!(iouThreshold > 0.0) || !(iouThreshold < 1.0))
        throw PreconditionError("IoU threshold must lie in (0, 1)");
    for (const auto& d : dets) validate(d);
    requireSingleFrame(dets, {});

    std::sort(dets.begin(), dets.end(), detBefore);
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (k.classLabel != d.classLabel) continue;
            if (representationIoU(d.rep, k.rep, cfg) >= iouThreshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

std::vector<MatchRecord> matchDetections(std::span<const Detection> dets,
                                         std::span<const GroundTruth> truths,
                                         const EvalConfig& cfg) {
    validate(cfg);
    for (const auto& d : dets) validate(d);
    requireSingleFrame(dets, truths);

    std::vector<const Detection*> order;
    order.reserve(dets.size());
    for (const auto& d : dets) order.push_back(&d);
    std::sort(order.begin(), order.end(),
              [](const Detection* a, const Detection* b) { return detBefore(*a, *b); });

    TruthScorer scorer{cfg, {}};
    std::vector<bool> taken(truths.size(), false);
    std::vector<MatchRecord> rows;
    rows.reserve(dets.size() + truths.size());

    for (const Detection* d : order) {
        std::size_t best = truths.size();
        double bestIoU = 0.0;
        for (std::size_t t = 0; t < truths.size(); ++t) {
            if (taken[t] || truths[t].mask.label != d->classLabel) continue;
            const double iou = scorer.iou(*d, t, truths[t]);
            if (iou < cfg.iouThreshold) continue;
            const bool better =
                best == truths.size() || iou > bestIoU ||
                (iou == bestIoU && truths[t].id < truths[best].id);
            if (better) {
                best = t;
                bestIoU = iou;
            }
        }
        MatchRecord row{d->frameId, d->classLabel, d->id, std::nullopt, d->confidence, 0.0};
        if (best != truths.size()) {
            taken[best] = true;
            row.truthId = truths[best].id;
            row.iou = bestIoU;
        }
        rows.push_back(std::move(row));
    }

    std::vector<std::size_t> missed;
    for (std::size_t t = 0; t < truths.size(); ++t)
        if (!taken[t]) missed.push_back(t);
    std::sort(missed.begin(), missed.end(), [&](std::size_t a, std::size_t b) {
        return truths[a].id < truths[b].id;
    });
    for (std::size_t t : missed)
        rows.push_back({truths[t].frameId, truths[t].mask.label, std::nullopt,
                        truths[t].id, 0.0, 0.0});
    return rows;
}

std::optional<double> averagePrecision(std::span<const MatchRecord> matches,
                                       ClassLabel label) {
    long long totalTruths = 0;
    std::vector<const MatchRecord*> ranked;
    for (const auto& row : matches) {
        if (row.classLabel != label) continue;
        if (row.truthId) ++totalTruths;
        if (row.detectionId) ranked.push_back(&row);
    }
    if (totalTruths == 0) return std::nullopt;

    std::sort(ranked.begin(), ranked.end(), [](const MatchRecord* a, const MatchRecord* b) {
        if (a->confidence != b->confidence) return a->confidence > b->confidence;
        if (a->frameId != b->frameId) return a->frameId < b->frameId;
        return a->detectionId < b->detectionId;
    });

    std::vector<double> recall(ranked.size()), precision(ranked.size());
    long long tp = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (ranked[i]->truthId) ++tp;
        recall[i] = static_cast<double>(tp) / static_cast<double>(totalTruths);
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }

    double envelope = 0.0, ap = 0.0, prevRecall = 0.0;
    std::vector<double> env(ranked.size());
    for (std::size_t i = ranked.size(); i-- > 0;) {
        envelope = std::max(envelope, precision[i]);
        env[i] = envelope;
    }
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        ap += (recall[i] - prevRecall) * env[i];
        prevRecall = recall[i];
    }
    return ap;
}

EvalReport evaluate(std::span<const Detection> dets,
                    std::span<const GroundTruth> truths, const EvalConfig& cfg) {
    validate(cfg);
    if (truths.empty())
        throw UndefinedMetricError("evaluation requires at least one ground truth");

    std::map<std::string, std::pair<std::vector<Detection>, std::vector<GroundTruth>>>
        byFrame;
    for (const auto& d : dets) byFrame[d.frameId].first.push_back(d);
    for (const auto& t : truths) byFrame[t.frameId].second.push_back(t);

    std::vector<const std::pair<std::vector<Detection>, std::vector<GroundTruth>>*>
        frames;
    frames.reserve(byFrame.size());
    for (const auto& [id, group] : byFrame) frames.push_back(&group);

    std::vector<std::vector<MatchRecord>> perFrame(frames.size());
    parallelFor(frames.size(), [&](std::size_t i) {
        perFrame[i] = matchDetections(frames[i]->first, frames[i]->second, cfg);
    });

    EvalReport report;
    for (auto& rows : perFrame)
        report.matches.insert(report.matches.end(), rows.begin(), rows.end());

    for (const auto& row : report.matches) {
        ClassCounts& c = report.counts[row.classLabel];
        if (row.detectionId && row.truthId) ++c.tp;
        else if (row.detectionId) ++c.fp;
        else ++c.fn;
    }

    double sum = 0.0;
    int present = 0;
    for (ClassLabel label : {ClassLabel::vehicle, ClassLabel::pedestrian}) {
        const auto ap = averagePrecision(report.matches, label);
        report.perClassAP[label] = ap;
        if (ap) {
            sum += *ap;
            ++present;
        }
    }
    report.mAP = present > 0 ? sum / present : 0.0;
    return report;
}

std::vector<double> upperBoundStudy(std::span<const InstanceMask> masks,
                                    std::span<const RepSpec> specs,
                                    const IoUConfig& cfg) {
    if (masks.empty()) throw PreconditionError("upper-bound study requires masks");
    if (specs.empty()) throw PreconditionError("upper-bound study requires specs");

    std::vector<double> scores(masks.size() * specs.size());
    parallelFor(masks.size(), [&](std::size_t i) {
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const Representation rep = convertMask(masks[i], specs[s]);
            scores[i * specs.size() + s] = representationIoU(rep, masks[i], cfg);
        }
    });

    std::vector<double> means(specs.size(), 0.0);
    for (std::size_t i = 0; i < masks.size(); ++i)
        for (std::size_t s = 0; s < specs.size(); ++s) means[s] += scores[i * specs.size() + s];
    for (double& m : means) m /= static_cast<double>(masks.size());
    return means;
}

bool occupancyPredicate(const SimplePolygon& region,
                        std::span<const Detection> dets,
                        const OccupancyConfig& cfg) {
    if (!std::isfinite(cfg.minOverlapFraction) || cfg.minOverlapFraction < 0.0 ||
        cfg.minOverlapFraction >= 1.0)
        throw PreconditionError("overlap fraction must lie in [0, 1)");
    if (dets.empty()) return false;

    const Bounds b = region.bounds();
    const int res = std::max(cfg.iou.pairResolution, 8);
    const double span = std::max(b.width(), b.height());
    const double scale = (res - 2) / span;
    const Point2 origin{b.minX - 1.0 / scale, b.minY - 1.0 / scale};

    auto scaled = [&](std::span<const Point2> verts) {
        std::vector<Point2> out;
        out.reserve(verts.size());
        for (Point2 p : verts) out.push_back((p - origin) * scale);
        return SimplePolygon::create(std::move(out));
    };

    const RasterGrid regionRaster = rasterize(scaled(region.vertices()), res, res);
    const std::uint64_t regionCells = regionRaster.occupiedCount();
    if (regionCells == 0) return false;

    for (const auto& d : dets) {
        validate(d);
        RasterGrid repRaster(res, res);
        if (const auto* e = std::get_if<Ellipse>(&d.rep)) {
            const EllipseShape shape{(Point2{e->cx, e->cy} - origin) * scale,
                                     e->semiMajor * scale, e->semiMinor * scale,
                                     e->thetaDeg};
            repRaster = rasterize(shape, res, res);
        } else {
            repRaster = rasterize(scaled(toPolygon(d.rep).vertices()), res, res);
        }

        std::uint64_t inter = 0;
        const auto wa = regionRaster.words(), wb = repRaster.words();
        for (std::size_t i = 0; i < wa.size(); ++i)
            inter += static_cast<std::uint64_t>(std::popcount(wa[i] & wb[i]));
        if (static_cast<double>(inter) >
            cfg.minOverlapFraction * static_cast<double>(regionCells))
            return true;
    }
    return false;
}

} // namespace polyrep
