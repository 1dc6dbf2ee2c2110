#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "polyrep/evaluation.hpp"
#include "polyrep/fisheye.hpp"

namespace polyrep {

/// strict rejects unknown JSON fields; warn records them and carries on.
enum class ParseMode { strict, warn };

/// Surround-view camera positions: front, rear, mirror-left, mirror-right.
enum class CameraView { FV, RV, MLV, MRV };

std::string toString(CameraView view);
CameraView cameraViewFromString(const std::string& s);

/// Column-major run lengths alternating background/foreground, starting with
/// background. The trailing run is never a padded zero; a leading zero marks
/// a mask that starts with foreground.
std::vector<std::int64_t> encodeRLE(const RasterGrid& m);
RasterGrid decodeRLE(const std::vector<std::int64_t>& counts, int width, int height,
                     const std::string& fieldPath = "rle");

struct FrameInstance {
    ClassLabel label = ClassLabel::vehicle;
    RasterGrid mask;
};

struct FrameRecord {
    std::string frameId;
    CameraView camera = CameraView::FV;
    int width = 0;
    int height = 0;
    std::vector<FrameInstance> instances;
    std::optional<std::vector<Detection>> detections;
};

struct SplitFractions {
    double train = 0.70;
    double val = 0.15;
    double test = 0.15;
};

void validate(const SplitFractions& f);

struct CorpusManifest {
    int schemaVersion = 1;
    std::optional<std::string> split; // "train" | "val" | "test" once split
    SplitFractions fractions;
    std::vector<std::string> frames; // frame file paths relative to the manifest
    std::optional<std::uint64_t> generatorSeed;
};

/// Canonical JSON: fixed key order, reals at 9 significant digits, so a
/// load/save cycle is byte-identical.
std::string frameToJson(const FrameRecord& frame);
std::string manifestToJson(const CorpusManifest& manifest);
std::string predictionsToJson(const std::vector<Detection>& dets);
std::string cameraToJson(const CameraModel& cam);

FrameRecord frameFromJson(const std::string& text, ParseMode mode = ParseMode::strict,
                          std::vector<std::string>* warnings = nullptr);
CorpusManifest manifestFromJson(const std::string& text,
                                ParseMode mode = ParseMode::strict,
                                std::vector<std::string>* warnings = nullptr);
std::vector<Detection> predictionsFromJson(const std::string& text,
                                           ParseMode mode = ParseMode::strict,
                                           std::vector<std::string>* warnings = nullptr);
CameraModel cameraFromJson(const std::string& text, ParseMode mode = ParseMode::strict,
                           std::vector<std::string>* warnings = nullptr);

std::string readTextFile(const std::filesystem::path& path);
void writeTextFile(const std::filesystem::path& path, const std::string& text);

/// Seeded shuffle then contiguous partition into train/val/test manifests.
std::array<CorpusManifest, 3> splitCorpus(const CorpusManifest& manifest,
                                          const SplitFractions& fractions,
                                          std::uint64_t seed);

struct SceneSpec {
    enum class Placement { nearField, central, peripheral };

    std::uint64_t seed = 1;
    int minObjects = 3;
    int maxObjects = 8;
    double pedestrianFraction = 0.35;
    Placement placement = Placement::nearField;
    double vehicleRotationMaxDeg = 25.0;
    /// Undistorted view the shapes are drawn on before warping to the
    /// fisheye canvas.
    Projection view{ProjectionKind::cylindrical, 400.0, 4};
};

void validate(const SceneSpec& spec);

struct GenerationLog {
    int dropped = 0;
    std::vector<std::string> messages;
};

/// Draws rounded-rectangle vehicles and capsule pedestrians on the corrected
/// view, then warps every instance to the fisheye canvas. Instances that end
/// up empty are dropped and logged. Fully determined by spec.seed.
FrameRecord generateScene(const SceneSpec& spec, const CameraModel& cam,
                          const WarpMap& distortMap, const std::string& frameId,
                          CameraView view, GenerationLog* log = nullptr);
FrameRecord generateScene(const SceneSpec& spec, const CameraModel& cam,
                          GenerationLog* log = nullptr);

struct CorpusBuildResult {
    CorpusManifest manifest;
    std::vector<FrameRecord> frames;
    GenerationLog log;
};

/// frameCount scenes with per-frame seeds spec.seed xor frame index and
/// camera views cycling FV, RV, MLV, MRV.
CorpusBuildResult generateCorpus(const SceneSpec& base, const CameraModel& cam,
                                 int frameCount);

/// Writes corpus.json plus frames/<frameId>.json under dir.
void writeCorpus(const std::filesystem::path& dir, const CorpusBuildResult& corpus);

/// Loads a manifest and every frame it references (paths resolved relative
/// to the manifest), enforcing frame-id uniqueness.
std::pair<CorpusManifest, std::vector<FrameRecord>> loadCorpus(
    const std::filesystem::path& manifestPath, ParseMode mode = ParseMode::strict,
    std::vector<std::string>* warnings = nullptr);

} // namespace polyrep
