// polyrep: reproducible experiments over the representation toolkit.
// Subcommands: generate, upper-bound, eval, convert, loss-check, occupancy.
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 internal.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "polyrep/dataset_io.hpp"
#include "polyrep/errors.hpp"
#include "polyrep/evaluation.hpp"
#include "polyrep/losses.hpp"
#include "polyrep/svg.hpp"

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;
using namespace polyrep;

namespace {

/// Bad input data (unreadable or malformed); maps to exit 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad configuration or unwritable output; maps to exit 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Library-level check failed; maps to exit 4.
struct InternalCheckError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string readInput(const fs::path& path) {
    try {
        return readTextFile(path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

void writeOutput(const fs::path& path, const std::string& text) {
    try {
        writeTextFile(path, text);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

fs::path ensureOutDir(const std::string& out) {
    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory " + dir.string());
    return dir;
}

/// A corpus argument may name the manifest itself or its directory.
fs::path manifestPathOf(const std::string& corpus) {
    fs::path p(corpus);
    if (fs::is_directory(p)) p /= "corpus.json";
    return p;
}

std::pair<CorpusManifest, std::vector<FrameRecord>> loadCorpusArg(
    const std::string& corpus) {
    try {
        return loadCorpus(manifestPathOf(corpus));
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

void writeConfigEcho(const fs::path& outDir, OJson config) {
    OJson doc;
    doc["schemaVersion"] = 1;
    doc["tool"] = "polyrep";
    doc["config"] = std::move(config);
    writeOutput(outDir / "config-echo.json", doc.dump(2) + "\n");
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::vector<GroundTruth> truthsOf(const std::vector<FrameRecord>& frames) {
    std::vector<GroundTruth> truths;
    for (const FrameRecord& frame : frames)
        for (std::size_t i = 0; i < frame.instances.size(); ++i) {
            const FrameInstance& inst = frame.instances[i];
            truths.push_back({InstanceMask{inst.mask, inst.label}, frame.frameId,
                              frame.frameId + "#" + std::to_string(i)});
        }
    return truths;
}

std::string placementName(SceneSpec::Placement p) {
    switch (p) {
    case SceneSpec::Placement::nearField: return "nearField";
    case SceneSpec::Placement::central: return "central";
    default: return "peripheral";
    }
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::uint64_t seed = 1;
    int frames = 200;
    std::string camera;
    std::string out;
};

void runGenerate(const GenerateArgs& a) {
    const CameraModel cam = a.camera.empty()
                                ? CameraModel::defaultSynthetic()
                                : cameraFromJson(readInput(a.camera));
    SceneSpec base;
    base.seed = a.seed;
    const CorpusBuildResult corpus = generateCorpus(base, cam, a.frames);

    const fs::path outDir = ensureOutDir(a.out);
    try {
        writeCorpus(outDir, corpus);
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
    writeOutput(outDir / "camera.json", cameraToJson(cam));

    OJson echo;
    echo["command"] = "generate";
    echo["seed"] = a.seed;
    echo["frames"] = a.frames;
    echo["camera"] = a.camera.empty() ? "builtin" : a.camera;
    echo["scene"] = {{"minObjects", base.minObjects},
                     {"maxObjects", base.maxObjects},
                     {"pedestrianFraction", base.pedestrianFraction},
                     {"placement", placementName(base.placement)},
                     {"vehicleRotationMaxDeg", base.vehicleRotationMaxDeg},
                     {"view",
                      {{"kind", toString(base.view.kind)},
                       {"focal", base.view.focal},
                       {"facetCount", base.view.facetCount}}}};
    echo["out"] = a.out;
    writeConfigEcho(outDir, std::move(echo));

    std::size_t instances = 0;
    for (const FrameRecord& f : corpus.frames) instances += f.instances.size();
    for (const std::string& msg : corpus.log.messages) std::cerr << msg << "\n";
    std::cout << "generated " << corpus.frames.size() << " frames, " << instances
              << " instances (" << corpus.log.dropped << " dropped) -> " << a.out
              << "\n";
}

// -------------------------------------------------------------- upper-bound

struct UpperBoundArgs {
    std::string corpus;
    std::vector<int> points{12, 24, 36, 60, 120};
    int resolution = 512;
    std::string out;
};

void runUpperBound(const UpperBoundArgs& a) {
    for (int r : a.points)
        if (r < 3) throw UsageError("--points entries must be at least 3");

    const auto [manifest, frames] = loadCorpusArg(a.corpus);
    std::vector<InstanceMask> masks;
    for (const FrameRecord& frame : frames)
        for (const FrameInstance& inst : frame.instances)
            masks.push_back({inst.mask, inst.label});
    if (masks.empty()) throw DataError("corpus has no instances");

    std::vector<RepSpec> specs{{RepKind::box, 0}, {RepKind::orientedBox, 0}};
    std::vector<std::string> columns{"BoundingBox", "RotatedBox"};
    for (int r : a.points) {
        specs.push_back({RepKind::polarPolygon, r});
        columns.push_back("P" + std::to_string(r));
    }

    IoUConfig iouCfg;
    iouCfg.pairResolution = a.resolution;
    const std::vector<double> means = upperBoundStudy(masks, specs, iouCfg);

    const fs::path outDir = ensureOutDir(a.out);
    std::string csv = "Representation";
    for (const std::string& c : columns) csv += "," + c;
    csv += "\nIoU";
    for (double v : means) csv += "," + fixed4(v);
    csv += "\n";
    writeOutput(outDir / "report.csv", csv);

    OJson report;
    report["schemaVersion"] = 1;
    report["corpus"] = a.corpus;
    report["frameCount"] = frames.size();
    report["instanceCount"] = masks.size();
    report["columns"] = columns;
    report["meanIoU"] = means;
    writeOutput(outDir / "report.json", report.dump(2) + "\n");

    OJson echo;
    echo["command"] = "upper-bound";
    echo["corpus"] = a.corpus;
    echo["points"] = a.points;
    echo["resolution"] = a.resolution;
    echo["out"] = a.out;
    writeConfigEcho(outDir, std::move(echo));

    for (std::size_t i = 0; i < columns.size(); ++i)
        std::cout << columns[i] << " " << fixed4(means[i]) << "\n";
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
    std::string truth;
    std::string pred;
    std::string mode = "repVsInstance";
    double iou = 0.5;
    std::optional<double> nms;
    int resolution = 512;
    bool overlays = false;
    std::string out;
};

std::string experimentName(const std::vector<Detection>& dets) {
    if (dets.empty()) return "none";
    const RepKind first = kindOf(dets.front().rep);
    for (const Detection& d : dets)
        if (kindOf(d.rep) != first) return "mixed";
    return toString(first);
}

void runEval(const EvalArgs& a) {
    const auto [manifest, frames] = loadCorpusArg(a.truth);
    const std::vector<GroundTruth> truths = truthsOf(frames);
    std::vector<Detection> dets = predictionsFromJson(readInput(a.pred));

    EvalConfig cfg;
    cfg.iouThreshold = a.iou;
    cfg.mode = evalModeFromString(a.mode);
    cfg.iou.pairResolution = a.resolution;
    validate(cfg);
    if (a.nms) {
        std::map<std::string, std::vector<Detection>> byFrame;
        for (auto& d : dets) byFrame[d.frameId].push_back(std::move(d));
        dets.clear();
        for (auto& [frameId, group] : byFrame) {
            auto kept = nms(std::move(group), *a.nms, cfg.iou);
            dets.insert(dets.end(), std::make_move_iterator(kept.begin()),
                        std::make_move_iterator(kept.end()));
        }
    }

    const EvalReport report = evaluate(dets, truths, cfg);
    const std::string experiment = experimentName(dets);

    const fs::path outDir = ensureOutDir(a.out);
    OJson doc;
    doc["schemaVersion"] = 1;
    doc["mode"] = a.mode;
    doc["iouThreshold"] = a.iou;
    doc["experiment"] = experiment;
    doc["mAP"] = report.mAP;
    doc["perClass"] = OJson::object();
    for (const auto& [label, ap] : report.perClassAP) {
        const ClassCounts counts = report.counts.at(label);
        OJson entry;
        entry["ap"] = ap ? OJson(*ap) : OJson(nullptr);
        entry["tp"] = counts.tp;
        entry["fp"] = counts.fp;
        entry["fn"] = counts.fn;
        doc["perClass"][toString(label)] = std::move(entry);
    }
    doc["matches"] = OJson::array();
    for (const MatchRecord& m : report.matches) {
        OJson row;
        row["frameId"] = m.frameId;
        row["classLabel"] = toString(m.classLabel);
        row["detectionId"] = m.detectionId ? OJson(*m.detectionId) : OJson(nullptr);
        row["truthId"] = m.truthId ? OJson(*m.truthId) : OJson(nullptr);
        row["confidence"] = m.confidence;
        row["iou"] = m.iou;
        doc["matches"].push_back(std::move(row));
    }
    writeOutput(outDir / "report.json", doc.dump(2) + "\n");

    std::string csv = "Experiment,Vehicle,Pedestrian,mAP\n" + experiment;
    for (ClassLabel label : {ClassLabel::vehicle, ClassLabel::pedestrian}) {
        const auto& ap = report.perClassAP.at(label);
        csv += ",";
        if (ap) csv += fixed4(*ap);
    }
    csv += "," + fixed4(report.mAP) + "\n";
    writeOutput(outDir / "report.csv", csv);

    if (a.overlays) {
        const fs::path overlayDir = outDir / "overlays";
        std::error_code ec;
        fs::create_directories(overlayDir, ec);
        if (ec) throw UsageError("cannot create " + overlayDir.string());

        std::map<std::pair<std::string, std::string>, double> iouOf;
        for (const MatchRecord& m : report.matches)
            if (m.detectionId) iouOf[{m.frameId, *m.detectionId}] = m.iou;
        for (const FrameRecord& frame : frames) {
            std::vector<OverlayShape> shapes;
            for (const Detection& d : dets) {
                if (d.frameId != frame.frameId) continue;
                std::optional<double> iou;
                const auto it = iouOf.find({frame.frameId, d.id});
                if (it != iouOf.end()) iou = it->second;
                shapes.push_back({d.rep, d.classLabel, iou});
            }
            writeOutput(overlayDir / (frame.frameId + ".svg"),
                        frameOverlaySvg(frame.width, frame.height, frame.instances,
                                        shapes));
        }
    }

    OJson echo;
    echo["command"] = "eval";
    echo["truth"] = a.truth;
    echo["pred"] = a.pred;
    echo["mode"] = a.mode;
    echo["iouThreshold"] = a.iou;
    echo["nms"] = a.nms ? OJson(*a.nms) : OJson(nullptr);
    echo["resolution"] = a.resolution;
    echo["overlays"] = a.overlays;
    echo["out"] = a.out;
    writeConfigEcho(outDir, std::move(echo));

    std::cout << "experiment " << experiment << ", mAP " << fixed4(report.mAP)
              << "\n";
}

// ------------------------------------------------------------------ convert

struct ConvertArgs {
    std::string corpus;
    std::string to;
    int points = 24;
    std::string out;
};

void runConvert(const ConvertArgs& a) {
    RepSpec spec;
    spec.kind = repKindFromString(a.to);
    spec.points = a.points;
    if (spec.kind == RepKind::polarPolygon && spec.points < 3)
        throw UsageError("--points must be at least 3 for polygon output");

    const auto [manifest, frames] = loadCorpusArg(a.corpus);
    std::vector<Detection> dets;
    for (const FrameRecord& frame : frames)
        for (std::size_t i = 0; i < frame.instances.size(); ++i) {
            const FrameInstance& inst = frame.instances[i];
            dets.push_back({convertMask({inst.mask, inst.label}, spec), inst.label,
                            1.0, frame.frameId,
                            frame.frameId + "#" + std::to_string(i)});
        }

    const fs::path outDir = ensureOutDir(a.out);
    writeOutput(outDir / "predictions.json", predictionsToJson(dets));

    OJson echo;
    echo["command"] = "convert";
    echo["corpus"] = a.corpus;
    echo["to"] = a.to;
    echo["points"] = a.points;
    echo["out"] = a.out;
    writeConfigEcho(outDir, std::move(echo));

    std::cout << "converted " << dets.size() << " instances to " << a.to << "\n";
}

// --------------------------------------------------------------- loss-check

struct LossCheckArgs {
    std::uint64_t seed = 1;
    int trials = 100;
    std::string out;
};

void runLossCheck(const LossCheckArgs& a) {
    const AuditResult audit = runGradientAudit(a.seed, a.trials);
    char line[160];
    std::snprintf(line, sizeof(line),
                  "worst relative error %.3e (head %s, field %s) over %d trials",
                  audit.maxRelError, toString(audit.worstHead).c_str(),
                  audit.worstField.c_str(), audit.trialsRun);
    std::cout << line << "\n"
              << (audit.pass() ? "PASS" : "FAIL") << "\n";

    if (!a.out.empty()) {
        const fs::path outDir = ensureOutDir(a.out);
        OJson echo;
        echo["command"] = "loss-check";
        echo["seed"] = a.seed;
        echo["trials"] = a.trials;
        echo["out"] = a.out;
        writeConfigEcho(outDir, std::move(echo));
    }
    if (!audit.pass())
        throw InternalCheckError("gradient audit exceeded tolerance");
}

// ---------------------------------------------------------------- occupancy

struct OccupancyArgs {
    std::string region;
    std::string pred;
    std::vector<std::string> reps{"box", "obox", "ellipse", "polygon"};
    double minOverlap = 0.01;
    std::string out;
};

SimplePolygon regionFromJson(const std::string& text) {
    OJson doc;
    try {
        doc = OJson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("$", e.what());
    }
    if (!doc.is_object()) throw FormatError("$", "region must be a JSON object");
    for (const auto& [key, value] : doc.items())
        if (key != "schemaVersion" && key != "vertices")
            throw FormatError("$." + key, "unknown field");
    if (!doc.contains("schemaVersion") || !doc["schemaVersion"].is_number_integer() ||
        doc["schemaVersion"].get<int>() != 1)
        throw FormatError("$.schemaVersion", "expected 1");
    if (!doc.contains("vertices") || !doc["vertices"].is_array())
        throw FormatError("$.vertices", "expected an array of points");

    std::vector<Point2> points;
    int i = 0;
    for (const auto& v : doc["vertices"]) {
        const std::string at = "$.vertices[" + std::to_string(i++) + "]";
        if (!v.is_object() || !v.contains("x") || !v.contains("y") ||
            !v["x"].is_number() || !v["y"].is_number())
            throw FormatError(at, "expected an object with numeric x and y");
        points.push_back({v["x"].get<double>(), v["y"].get<double>()});
    }
    try {
        return SimplePolygon::create(std::move(points));
    } catch (const PreconditionError& e) {
        throw FormatError("$.vertices", e.what());
    }
}

void runOccupancy(const OccupancyArgs& a) {
    const SimplePolygon region = regionFromJson(readInput(a.region));
    const std::vector<Detection> dets = predictionsFromJson(readInput(a.pred));

    OccupancyConfig cfg;
    cfg.minOverlapFraction = a.minOverlap;

    OJson rows = OJson::array();
    for (const std::string& name : a.reps) {
        const RepKind kind = repKindFromString(name);
        std::vector<Detection> subset;
        for (const Detection& d : dets)
            if (kindOf(d.rep) == kind) subset.push_back(d);
        const bool occupied = occupancyPredicate(region, subset, cfg);
        std::cout << name << ": " << (occupied ? "occupied" : "free") << " ("
                  << subset.size() << " detections)\n";
        rows.push_back({{"representation", name},
                        {"occupied", occupied},
                        {"detections", subset.size()}});
    }

    if (!a.out.empty()) {
        const fs::path outDir = ensureOutDir(a.out);
        OJson report;
        report["schemaVersion"] = 1;
        report["region"] = a.region;
        report["results"] = std::move(rows);
        writeOutput(outDir / "occupancy.json", report.dump(2) + "\n");
        OJson echo;
        echo["command"] = "occupancy";
        echo["region"] = a.region;
        echo["pred"] = a.pred;
        echo["reps"] = a.reps;
        echo["minOverlap"] = a.minOverlap;
        echo["out"] = a.out;
        writeConfigEcho(outDir, std::move(echo));
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"representation toolkit for fisheye object detection"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* cGen = app.add_subcommand("generate", "build a synthetic corpus");
    cGen->add_option("--seed", gen.seed, "generator seed");
    cGen->add_option("--frames", gen.frames, "number of frames")
        ->check(CLI::Range(1, 1000000));
    cGen->add_option("--camera", gen.camera, "camera intrinsics JSON (default builtin)");
    cGen->add_option("--out", gen.out, "output directory")->required();

    UpperBoundArgs ub;
    CLI::App* cUb = app.add_subcommand("upper-bound",
                                       "best achievable IoU per representation");
    cUb->add_option("--corpus", ub.corpus, "corpus manifest or directory")->required();
    cUb->add_option("--points", ub.points, "polygon point counts")->delimiter(',');
    cUb->add_option("--resolution", ub.resolution, "raster resolution");
    cUb->add_option("--out", ub.out, "output directory")->required();

    EvalArgs ev;
    CLI::App* cEv = app.add_subcommand("eval", "match predictions and report AP");
    cEv->add_option("--truth", ev.truth, "ground-truth corpus manifest or directory")
        ->required();
    cEv->add_option("--pred", ev.pred, "predictions JSON")->required();
    cEv->add_option("--mode", ev.mode, "repVsRep or repVsInstance")
        ->check(CLI::IsMember({"repVsRep", "repVsInstance"}));
    cEv->add_option("--iou", ev.iou, "matching IoU threshold");
    cEv->add_option("--nms", ev.nms, "suppress overlaps above this IoU before matching");
    cEv->add_option("--resolution", ev.resolution, "raster resolution");
    cEv->add_flag("--overlays", ev.overlays, "write per-frame SVG overlays");
    cEv->add_option("--out", ev.out, "output directory")->required();

    ConvertArgs cv;
    CLI::App* cCv = app.add_subcommand("convert",
                                       "corpus masks to self-evaluation predictions");
    cCv->add_option("--corpus", cv.corpus, "corpus manifest or directory")->required();
    cCv->add_option("--to", cv.to, "target representation")
        ->required()
        ->check(CLI::IsMember({"box", "obox", "ellipse", "polygon"}));
    cCv->add_option("--points", cv.points, "polygon point count");
    cCv->add_option("--out", cv.out, "output directory")->required();

    LossCheckArgs lc;
    CLI::App* cLc = app.add_subcommand("loss-check",
                                       "finite-difference audit of loss gradients");
    cLc->add_option("--seed", lc.seed, "audit seed");
    cLc->add_option("--trials", lc.trials, "trials per head")
        ->check(CLI::Range(1, 1000000));
    cLc->add_option("--out", lc.out, "optional directory for the config echo");

    OccupancyArgs oc;
    CLI::App* cOc = app.add_subcommand("occupancy",
                                       "free/occupied verdict per representation");
    cOc->add_option("--region", oc.region, "region polygon JSON")->required();
    cOc->add_option("--pred", oc.pred, "predictions JSON")->required();
    cOc->add_option("--reps", oc.reps, "representations to test")->delimiter(',');
    cOc->add_option("--min-overlap", oc.minOverlap,
                    "region-area fraction that counts as occupied");
    cOc->add_option("--out", oc.out, "optional output directory");

    try {
        app.parse(argc, argv);
        if (cGen->parsed()) runGenerate(gen);
        if (cUb->parsed()) runUpperBound(ub);
        if (cEv->parsed()) runEval(ev);
        if (cCv->parsed()) runConvert(cv);
        if (cLc->parsed()) runLossCheck(lc);
        if (cOc->parsed()) runOccupancy(oc);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const FormatError& e) {
        std::cerr << "data error at " << e.path() << ": " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const UndefinedMetricError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const PreconditionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InternalCheckError& e) {
        std::cerr << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
