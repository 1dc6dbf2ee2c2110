#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polyrep/representations.hpp"

namespace polyrep {

struct Detection {
    Representation rep;
    ClassLabel classLabel = ClassLabel::vehicle;
    double confidence = 0.0;
    std::string frameId;
    std::string id; // stable tie-break key for sorting and reports
};

void validate(const Detection& d);

struct GroundTruth {
    InstanceMask mask;
    std::string frameId;
    std::string id;
};

/// repVsRep scores a detection against the ground-truth mask converted to the
/// detection's own representation type; repVsInstance scores it against the
/// raw instance mask.
enum class EvalMode { repVsRep, repVsInstance };

std::string toString(EvalMode mode);
EvalMode evalModeFromString(const std::string& s);

struct EvalConfig {
    double iouThreshold = 0.5;
    EvalMode mode = EvalMode::repVsInstance;
    IoUConfig iou;
    /// In repVsRep mode polygon detections are compared box-to-box (their
    /// bounding box against the mask's bounding box) instead of
    /// polygon-to-polygon.
    bool polygonRepVsRepAsBox = true;
};

void validate(const EvalConfig& cfg);

/// One scored row: a matched pair carries both ids, a false positive only the
/// detection id, a missed truth only the truth id.
struct MatchRecord {
    std::string frameId;
    ClassLabel classLabel = ClassLabel::vehicle;
    std::optional<std::string> detectionId;
    std::optional<std::string> truthId;
    double confidence = 0.0;
    double iou = 0.0;
};

struct ClassCounts {
    int tp = 0, fp = 0, fn = 0;
};

struct EvalReport {
    /// AP per class; nullopt marks a class absent from the ground truth
    /// (excluded from the mean).
    std::map<ClassLabel, std::optional<double>> perClassAP;
    double mAP = 0.0;
    std::vector<MatchRecord> matches;
    std::map<ClassLabel, ClassCounts> counts;
};

/// Greedy per-class suppression within one frame: detections sorted by
/// descending confidence (ties by id), each kept iff its IoU with every
/// already-kept detection of the same class stays below the threshold.
std::vector<Detection> nms(std::vector<Detection> dets, double iouThreshold,
                           const IoUConfig& cfg = {});

/// Greedy matching within one frame: per class in descending confidence,
/// each detection takes the highest-IoU still-unmatched truth at or above
/// the threshold (TP), otherwise scores as FP; leftover truths become FN.
std::vector<MatchRecord> matchDetections(std::span<const Detection> dets,
                                         std::span<const GroundTruth> truths,
                                         const EvalConfig& cfg);

/// Area under the precision envelope over recall (all-point interpolation).
/// nullopt when the class never appears in the ground truth.
std::optional<double> averagePrecision(std::span<const MatchRecord> matches,
                                       ClassLabel label);

/// Per-frame matching plus corpus-level aggregation. Frames evaluate
/// independently; rows aggregate ordered by frame id, then class.
/// Detections are taken as given (run nms first when they are raw).
EvalReport evaluate(std::span<const Detection> dets,
                    std::span<const GroundTruth> truths, const EvalConfig& cfg);

/// Mean representationIoU(convert(mask), mask) per spec, over all masks.
std::vector<double> upperBoundStudy(std::span<const InstanceMask> masks,
                                    std::span<const RepSpec> specs,
                                    const IoUConfig& cfg = {});

struct OccupancyConfig {
    double minOverlapFraction = 0.01;
    IoUConfig iou;
};

/// True iff any detection overlaps the region by more than
/// minOverlapFraction of the region's area.
bool occupancyPredicate(const SimplePolygon& region,
                        std::span<const Detection> dets,
                        const OccupancyConfig& cfg = {});

} // namespace polyrep
