#include "polyrep/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "json.hpp"

#include "polyrep/errors.hpp"
#include "polyrep/parallel.hpp"
#include "polyrep/rng.hpp"

namespace polyrep {

namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
    throw FormatError(path, message);
}

const Json& member(const Json& obj, const std::string& path, const char* key) {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing field");
    return *it;
}

double numberAt(const Json& obj, const std::string& path, const char* key) {
    const Json& v = member(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

std::int64_t intAt(const Json& obj, const std::string& path, const char* key) {
    const Json& v = member(obj, path, key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        fail(path + "." + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::string stringAt(const Json& obj, const std::string& path, const char* key) {
    const Json& v = member(obj, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

const Json& arrayAt(const Json& obj, const std::string& path, const char* key) {
    const Json& v = member(obj, path, key);
    if (!v.is_array()) fail(path + "." + key, "expected an array");
    return v;
}

void checkUnknown(const Json& obj, const std::string& path,
                  std::initializer_list<const char*> known, ParseMode mode,
                  std::vector<std::string>* warnings) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
        bool found = false;
        for (const char* k : known)
            if (item.key() == k) {
                found = true;
                break;
            }
        if (found) continue;
        if (mode == ParseMode::strict) fail(path + "." + item.key(), "unknown field");
        if (warnings)
            warnings->push_back(path + "." + item.key() + ": unknown field ignored");
    }
}

void requireSchemaVersion(const Json& obj, const std::string& path) {
    if (intAt(obj, path, "schemaVersion") != 1)
        fail(path + ".schemaVersion", "unsupported schema version");
}

Json parseDocument(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail("$", std::string("invalid JSON: ") + e.what());
    }
}

// --- canonical writer: fixed key order, reals at 9 significant digits ---

std::string formatReal(double v) {
    if (!std::isfinite(v)) throw PreconditionError("cannot serialize a non-finite number");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

bool isScalar(const OJson& j) { return !j.is_object() && !j.is_array(); }

void dumpValue(const OJson& j, std::string& out, int depth) {
    const auto indent = [&](int d) { out.append(static_cast<std::size_t>(d) * 2, ' '); };
    switch (j.type()) {
        case OJson::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            std::size_t i = 0;
            for (const auto& item : j.items()) {
                indent(depth + 1);
                out += OJson(item.key()).dump();
                out += ": ";
                dumpValue(item.value(), out, depth + 1);
                if (++i < j.size()) out += ',';
                out += '\n';
            }
            indent(depth);
            out += '}';
            return;
        }
        case OJson::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            const bool inline_ =
                std::all_of(j.begin(), j.end(), [](const OJson& e) { return isScalar(e); });
            if (inline_) {
                out += '[';
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) out += ", ";
                    dumpValue(j[i], out, depth);
                }
                out += ']';
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                indent(depth + 1);
                dumpValue(j[i], out, depth + 1);
                if (i + 1 < j.size()) out += ',';
                out += '\n';
            }
            indent(depth);
            out += ']';
            return;
        }
        case OJson::value_t::string:
            out += j.dump();
            return;
        case OJson::value_t::boolean:
            out += j.get<bool>() ? "true" : "false";
            return;
        case OJson::value_t::number_unsigned:
            out += std::to_string(j.get<std::uint64_t>());
            return;
        case OJson::value_t::number_integer:
            out += std::to_string(j.get<std::int64_t>());
            return;
        case OJson::value_t::number_float:
            out += formatReal(j.get<double>());
            return;
        case OJson::value_t::null:
            out += "null";
            return;
        default:
            throw PreconditionError("unsupported JSON value type");
    }
}

std::string canonicalDump(const OJson& j) {
    std::string out;
    dumpValue(j, out, 0);
    out += '\n';
    return out;
}

// --- representation / detection JSON ---

OJson repToJson(const Representation& rep) {
    OJson j;
    if (const auto* b = std::get_if<BoundingBox>(&rep)) {
        j["kind"] = toString(RepKind::box);
        j["cx"] = b->cx;
        j["cy"] = b->cy;
        j["w"] = b->w;
        j["h"] = b->h;
    } else if (const auto* ob = std::get_if<OrientedBox>(&rep)) {
        j["kind"] = toString(RepKind::orientedBox);
        j["cx"] = ob->cx;
        j["cy"] = ob->cy;
        j["w"] = ob->w;
        j["h"] = ob->h;
        j["thetaDeg"] = ob->thetaDeg;
    } else if (const auto* e = std::get_if<Ellipse>(&rep)) {
        j["kind"] = toString(RepKind::ellipse);
        j["cx"] = e->cx;
        j["cy"] = e->cy;
        j["semiMajor"] = e->semiMajor;
        j["semiMinor"] = e->semiMinor;
        j["thetaDeg"] = e->thetaDeg;
    } else {
        const auto& p = std::get<PolarPolygon>(rep);
        j["kind"] = toString(RepKind::polarPolygon);
        j["cx"] = p.cx;
        j["cy"] = p.cy;
        j["radii"] = p.radii;
    }
    return j;
}

Representation repFromJson(const Json& j, const std::string& path, ParseMode mode,
                           std::vector<std::string>* warnings) {
    RepKind kind = RepKind::box;
    try {
        kind = repKindFromString(stringAt(j, path, "kind"));
    } catch (const PreconditionError& e) {
        fail(path + ".kind", e.what());
    }
    Representation rep;
    switch (kind) {
        case RepKind::box:
            checkUnknown(j, path, {"kind", "cx", "cy", "w", "h"}, mode, warnings);
            rep = BoundingBox{numberAt(j, path, "cx"), numberAt(j, path, "cy"),
                              numberAt(j, path, "w"), numberAt(j, path, "h")};
            break;
        case RepKind::orientedBox:
            checkUnknown(j, path, {"kind", "cx", "cy", "w", "h", "thetaDeg"}, mode,
                         warnings);
            rep = OrientedBox{numberAt(j, path, "cx"), numberAt(j, path, "cy"),
                              numberAt(j, path, "w"), numberAt(j, path, "h"),
                              numberAt(j, path, "thetaDeg")};
            break;
        case RepKind::ellipse:
            checkUnknown(j, path, {"kind", "cx", "cy", "semiMajor", "semiMinor", "thetaDeg"},
                         mode, warnings);
            rep = Ellipse{numberAt(j, path, "cx"), numberAt(j, path, "cy"),
                          numberAt(j, path, "semiMajor"), numberAt(j, path, "semiMinor"),
                          numberAt(j, path, "thetaDeg")};
            break;
        case RepKind::polarPolygon: {
            checkUnknown(j, path, {"kind", "cx", "cy", "radii"}, mode, warnings);
            PolarPolygon p{numberAt(j, path, "cx"), numberAt(j, path, "cy"), {}};
            const Json& radii = arrayAt(j, path, "radii");
            for (std::size_t i = 0; i < radii.size(); ++i) {
                if (!radii[i].is_number())
                    fail(path + ".radii[" + std::to_string(i) + "]", "expected a number");
                p.radii.push_back(radii[i].get<double>());
            }
            rep = std::move(p);
            break;
        }
    }
    try {
        validate(rep);
    } catch (const PreconditionError& e) {
        fail(path, e.what());
    }
    return rep;
}

OJson detectionToJson(const Detection& d) {
    OJson j;
    j["id"] = d.id;
    j["frameId"] = d.frameId;
    j["classLabel"] = toString(d.classLabel);
    j["confidence"] = d.confidence;
    j["rep"] = repToJson(d.rep);
    return j;
}

Detection detectionFromJson(const Json& j, const std::string& path, ParseMode mode,
                            std::vector<std::string>* warnings) {
    checkUnknown(j, path, {"id", "frameId", "classLabel", "confidence", "rep"}, mode,
                 warnings);
    Detection d;
    d.id = stringAt(j, path, "id");
    d.frameId = stringAt(j, path, "frameId");
    try {
        d.classLabel = classLabelFromString(stringAt(j, path, "classLabel"));
    } catch (const PreconditionError& e) {
        fail(path + ".classLabel", e.what());
    }
    d.confidence = numberAt(j, path, "confidence");
    d.rep = repFromJson(member(j, path, "rep"), path + ".rep", mode, warnings);
    try {
        validate(d);
    } catch (const PreconditionError& e) {
        fail(path, e.what());
    }
    return d;
}

std::pair<int, int> imageSizeFromJson(const Json& j, const std::string& path,
                                      ParseMode mode, std::vector<std::string>* warnings) {
    const Json& size = member(j, path, "imageSize");
    const std::string sizePath = path + ".imageSize";
    checkUnknown(size, sizePath, {"width", "height"}, mode, warnings);
    const std::int64_t w = intAt(size, sizePath, "width");
    const std::int64_t h = intAt(size, sizePath, "height");
    if (w < 1 || w > 1 << 16) fail(sizePath + ".width", "expected a positive pixel count");
    if (h < 1 || h > 1 << 16) fail(sizePath + ".height", "expected a positive pixel count");
    return {static_cast<int>(w), static_cast<int>(h)};
}

std::string frameFileName(const std::string& frameId) {
    return "frames/" + frameId + ".json";
}

} // namespace

std::string toString(CameraView view) {
    switch (view) {
        case CameraView::FV: return "FV";
        case CameraView::RV: return "RV";
        case CameraView::MLV: return "MLV";
        case CameraView::MRV: return "MRV";
    }
    throw PreconditionError("unknown camera view");
}

CameraView cameraViewFromString(const std::string& s) {
    if (s == "FV") return CameraView::FV;
    if (s == "RV") return CameraView::RV;
    if (s == "MLV") return CameraView::MLV;
    if (s == "MRV") return CameraView::MRV;
    throw PreconditionError("unknown camera view: " + s);
}

std::vector<std::int64_t> encodeRLE(const RasterGrid& m) {
    std::vector<std::int64_t> counts;
    bool value = false;
    std::int64_t run = 0;
    for (int x = 0; x < m.width(); ++x)
        for (int y = 0; y < m.height(); ++y) {
            const bool v = m.at(x, y);
            if (v == value) {
                ++run;
            } else {
                counts.push_back(run);
                value = v;
                run = 1;
            }
        }
    counts.push_back(run);
    return counts;
}

RasterGrid decodeRLE(const std::vector<std::int64_t>& counts, int width, int height,
                     const std::string& fieldPath) {
    if (width < 1 || height < 1) throw PreconditionError("mask size must be positive");
    const std::int64_t total = static_cast<std::int64_t>(width) * height;
    RasterGrid g(width, height);
    std::int64_t pos = 0;
    bool value = false;
    for (const std::int64_t c : counts) {
        if (c < 0) throw FormatError(fieldPath, "negative run length");
        if (pos + c > total)
            throw FormatError(fieldPath, "run lengths exceed width*height");
        if (value)
            for (std::int64_t i = pos; i < pos + c; ++i)
                g.set(static_cast<int>(i / height), static_cast<int>(i % height), true);
        pos += c;
        value = !value;
    }
    if (pos != total)
        throw FormatError(fieldPath, "run lengths sum to " + std::to_string(pos) +
                                         ", expected " + std::to_string(total));
    return g;
}

void validate(const SplitFractions& f) {
    for (double v : {f.train, f.val, f.test})
        if (!std::isfinite(v) || v <= 0.0)
            throw PreconditionError("split fractions must be positive");
    if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
        throw PreconditionError("split fractions must sum to 1");
}

std::string frameToJson(const FrameRecord& frame) {
    OJson j;
    j["schemaVersion"] = 1;
    j["frameId"] = frame.frameId;
    j["camera"] = toString(frame.camera);
    j["imageSize"] = {{"width", frame.width}, {"height", frame.height}};
    j["instances"] = OJson::array();
    for (const auto& inst : frame.instances) {
        if (inst.mask.width() != frame.width || inst.mask.height() != frame.height)
            throw PreconditionError("instance mask size differs from the frame");
        OJson rec;
        rec["classLabel"] = toString(inst.label);
        rec["rle"] = encodeRLE(inst.mask);
        j["instances"].push_back(std::move(rec));
    }
    if (frame.detections) {
        j["detections"] = OJson::array();
        for (const auto& d : *frame.detections) j["detections"].push_back(detectionToJson(d));
    }
    return canonicalDump(j);
}

FrameRecord frameFromJson(const std::string& text, ParseMode mode,
                          std::vector<std::string>* warnings) {
    const Json j = parseDocument(text);
    checkUnknown(j, "$",
                 {"schemaVersion", "frameId", "camera", "imageSize", "instances",
                  "detections"},
                 mode, warnings);
    requireSchemaVersion(j, "$");

    FrameRecord frame;
    frame.frameId = stringAt(j, "$", "frameId");
    if (frame.frameId.empty()) fail("$.frameId", "must not be empty");
    try {
        frame.camera = cameraViewFromString(stringAt(j, "$", "camera"));
    } catch (const PreconditionError& e) {
        fail("$.camera", e.what());
    }
    std::tie(frame.width, frame.height) = imageSizeFromJson(j, "$", mode, warnings);

    const Json& instances = arrayAt(j, "$", "instances");
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const std::string path = "$.instances[" + std::to_string(i) + "]";
        checkUnknown(instances[i], path, {"classLabel", "rle"}, mode, warnings);
        ClassLabel label = ClassLabel::vehicle;
        try {
            label = classLabelFromString(stringAt(instances[i], path, "classLabel"));
        } catch (const PreconditionError& e) {
            fail(path + ".classLabel", e.what());
        }
        const Json& rle = arrayAt(instances[i], path, "rle");
        std::vector<std::int64_t> counts;
        counts.reserve(rle.size());
        for (std::size_t c = 0; c < rle.size(); ++c) {
            if (!rle[c].is_number_integer() && !rle[c].is_number_unsigned())
                fail(path + ".rle[" + std::to_string(c) + "]", "expected an integer");
            counts.push_back(rle[c].get<std::int64_t>());
        }
        frame.instances.push_back(
            {label, decodeRLE(counts, frame.width, frame.height, path + ".rle")});
    }

    if (const auto it = j.find("detections"); it != j.end()) {
        if (!it->is_array()) fail("$.detections", "expected an array");
        std::vector<Detection> dets;
        for (std::size_t i = 0; i < it->size(); ++i) {
            const std::string path = "$.detections[" + std::to_string(i) + "]";
            Detection d = detectionFromJson((*it)[i], path, mode, warnings);
            if (d.frameId != frame.frameId)
                fail(path + ".frameId", "does not match the frame");
            dets.push_back(std::move(d));
        }
        frame.detections = std::move(dets);
    }
    return frame;
}

std::string manifestToJson(const CorpusManifest& manifest) {
    if (manifest.schemaVersion != 1)
        throw PreconditionError("unsupported schema version");
    if (manifest.split && *manifest.split != "train" && *manifest.split != "val" &&
        *manifest.split != "test")
        throw PreconditionError("split must be train, val, or test");
    validate(manifest.fractions);

    OJson j;
    j["schemaVersion"] = 1;
    if (manifest.split) j["split"] = *manifest.split;
    j["splitFractions"] = {{"train", manifest.fractions.train},
                           {"val", manifest.fractions.val},
                           {"test", manifest.fractions.test}};
    j["frames"] = manifest.frames;
    if (manifest.generatorSeed) j["generatorSeed"] = *manifest.generatorSeed;
    return canonicalDump(j);
}

CorpusManifest manifestFromJson(const std::string& text, ParseMode mode,
                                std::vector<std::string>* warnings) {
    const Json j = parseDocument(text);
    checkUnknown(j, "$",
                 {"schemaVersion", "split", "splitFractions", "frames", "generatorSeed"},
                 mode, warnings);
    requireSchemaVersion(j, "$");

    CorpusManifest manifest;
    if (const auto it = j.find("split"); it != j.end()) {
        if (!it->is_string()) fail("$.split", "expected a string");
        const std::string split = it->get<std::string>();
        if (split != "train" && split != "val" && split != "test")
            fail("$.split", "expected train, val, or test");
        manifest.split = split;
    }

    const Json& fractions = member(j, "$", "splitFractions");
    checkUnknown(fractions, "$.splitFractions", {"train", "val", "test"}, mode, warnings);
    manifest.fractions = {numberAt(fractions, "$.splitFractions", "train"),
                          numberAt(fractions, "$.splitFractions", "val"),
                          numberAt(fractions, "$.splitFractions", "test")};
    try {
        validate(manifest.fractions);
    } catch (const PreconditionError& e) {
        fail("$.splitFractions", e.what());
    }

    const Json& frames = arrayAt(j, "$", "frames");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (!frames[i].is_string())
            fail("$.frames[" + std::to_string(i) + "]", "expected a string");
        manifest.frames.push_back(frames[i].get<std::string>());
    }

    if (const auto it = j.find("generatorSeed"); it != j.end()) {
        if (!it->is_number_integer() && !it->is_number_unsigned())
            fail("$.generatorSeed", "expected an integer");
        if (it->is_number_integer() && it->get<std::int64_t>() < 0)
            fail("$.generatorSeed", "expected a non-negative integer");
        manifest.generatorSeed = it->get<std::uint64_t>();
    }
    return manifest;
}

std::string predictionsToJson(const std::vector<Detection>& dets) {
    OJson j;
    j["schemaVersion"] = 1;
    j["detections"] = OJson::array();
    for (const auto& d : dets) j["detections"].push_back(detectionToJson(d));
    return canonicalDump(j);
}

std::vector<Detection> predictionsFromJson(const std::string& text, ParseMode mode,
                                           std::vector<std::string>* warnings) {
    const Json j = parseDocument(text);
    checkUnknown(j, "$", {"schemaVersion", "detections"}, mode, warnings);
    requireSchemaVersion(j, "$");
    const Json& arr = arrayAt(j, "$", "detections");
    std::vector<Detection> dets;
    dets.reserve(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i)
        dets.push_back(detectionFromJson(arr[i], "$.detections[" + std::to_string(i) + "]",
                                         mode, warnings));
    return dets;
}

std::string cameraToJson(const CameraModel& cam) {
    OJson j;
    j["schemaVersion"] = 1;
    j["k"] = cam.coefficients();
    j["principalPoint"] = {{"x", cam.principalPoint().x}, {"y", cam.principalPoint().y}};
    j["imageSize"] = {{"width", cam.width()}, {"height", cam.height()}};
    j["thetaMaxDeg"] = radToDeg(cam.thetaMax());
    return canonicalDump(j);
}

CameraModel cameraFromJson(const std::string& text, ParseMode mode,
                           std::vector<std::string>* warnings) {
    const Json j = parseDocument(text);
    checkUnknown(j, "$", {"schemaVersion", "k", "principalPoint", "imageSize", "thetaMaxDeg"},
                 mode, warnings);
    requireSchemaVersion(j, "$");

    const Json& k = arrayAt(j, "$", "k");
    if (k.size() != 4) fail("$.k", "expected exactly 4 coefficients");
    std::array<double, 4> coeff{};
    for (std::size_t i = 0; i < 4; ++i) {
        if (!k[i].is_number()) fail("$.k[" + std::to_string(i) + "]", "expected a number");
        coeff[i] = k[i].get<double>();
    }

    const Json& pp = member(j, "$", "principalPoint");
    checkUnknown(pp, "$.principalPoint", {"x", "y"}, mode, warnings);
    const Point2 principal{numberAt(pp, "$.principalPoint", "x"),
                           numberAt(pp, "$.principalPoint", "y")};
    const auto [width, height] = imageSizeFromJson(j, "$", mode, warnings);
    const double thetaMaxDeg = numberAt(j, "$", "thetaMaxDeg");

    try {
        return CameraModel::create(coeff, principal, width, height, degToRad(thetaMaxDeg));
    } catch (const PreconditionError& e) {
        fail("$", e.what());
    }
}

std::string readTextFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (!in.good() && !in.eof())
        throw std::runtime_error("failed reading " + path.string());
    return std::move(buf).str();
}

void writeTextFile(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out.good()) throw std::runtime_error("failed writing " + path.string());
}

std::array<CorpusManifest, 3> splitCorpus(const CorpusManifest& manifest,
                                          const SplitFractions& fractions,
                                          std::uint64_t seed) {
    validate(fractions);
    const std::size_t n = manifest.frames.size();
    if (n < 3) throw PreconditionError("corpus needs at least as many frames as splits");

    std::vector<std::string> paths = manifest.frames;
    Rng rng(seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto jdx = static_cast<std::size_t>(
            rng.uniformInt(0, static_cast<std::int64_t>(i)));
        std::swap(paths[i], paths[jdx]);
    }

    const auto c1 = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * fractions.train));
    const auto c2 = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * (fractions.train + fractions.val)));
    const std::size_t b1 = std::min(c1, n);
    const std::size_t b2 = std::min(std::max(c2, b1), n);

    std::array<CorpusManifest, 3> out;
    const char* names[3] = {"train", "val", "test"};
    const std::size_t bounds[4] = {0, b1, b2, n};
    for (int s = 0; s < 3; ++s) {
        out[s].schemaVersion = 1;
        out[s].split = names[s];
        out[s].fractions = fractions;
        out[s].generatorSeed = manifest.generatorSeed;
        out[s].frames.assign(paths.begin() + static_cast<std::ptrdiff_t>(bounds[s]),
                             paths.begin() + static_cast<std::ptrdiff_t>(bounds[s + 1]));
    }
    return out;
}

void validate(const SceneSpec& spec) {
    if (spec.minObjects < 0 || spec.maxObjects < spec.minObjects)
        throw PreconditionError("object count range must satisfy 0 <= min <= max");
    if (!std::isfinite(spec.pedestrianFraction) || spec.pedestrianFraction < 0.0 ||
        spec.pedestrianFraction > 1.0)
        throw PreconditionError("pedestrian fraction must lie in [0, 1]");
    if (!std::isfinite(spec.vehicleRotationMaxDeg) || spec.vehicleRotationMaxDeg < 0.0 ||
        spec.vehicleRotationMaxDeg > 90.0)
        throw PreconditionError("vehicle rotation bound must lie in [0, 90] degrees");
    validate(spec.view);
}

namespace {

struct ShapeDraw {
    ClassLabel label = ClassLabel::vehicle;
    double cx = 0.0, cy = 0.0; // view-canvas pixels
    double w = 0.0, h = 0.0;
    double rotDeg = 0.0;
};

/// Rounded rectangle (vehicles) or capsule (pedestrians) via a signed
/// distance test per cell center within the rotated bounding box.
void drawShape(RasterGrid& g, const ShapeDraw& s) {
    const double rad = degToRad(s.rotDeg);
    const double c = std::cos(rad), sn = std::sin(rad);
    const double hw = 0.5 * s.w, hh = 0.5 * s.h;
    const double ex = std::abs(c) * hw + std::abs(sn) * hh + 1.0;
    const double ey = std::abs(sn) * hw + std::abs(c) * hh + 1.0;
    const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - ex)));
    const int x1 = std::min(g.width() - 1, static_cast<int>(std::ceil(s.cx + ex)));
    const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - ey)));
    const int y1 = std::min(g.height() - 1, static_cast<int>(std::ceil(s.cy + ey)));

    const bool capsule = s.label == ClassLabel::pedestrian;
    const double r = capsule ? hw : 0.25 * std::min(s.w, s.h);
    const double coreX = hw - r, coreY = hh - r;

    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double px = x + 0.5 - s.cx, py = y + 0.5 - s.cy;
            const double a = px * c + py * sn;
            const double b = -px * sn + py * c;
            double d;
            if (capsule) {
                const double t = std::clamp(b, -coreY, coreY);
                d = std::hypot(a, b - t);
            } else {
                const double qx = std::max(std::abs(a) - coreX, 0.0);
                const double qy = std::max(std::abs(b) - coreY, 0.0);
                d = std::hypot(qx, qy);
            }
            if (d <= r) g.set(x, y, true);
        }
}

CameraView viewForIndex(int i) {
    static constexpr CameraView kCycle[4] = {CameraView::FV, CameraView::RV,
                                             CameraView::MLV, CameraView::MRV};
    return kCycle[i % 4];
}

std::string frameIdForIndex(int i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "frame-%06d", i);
    return buf;
}

} // namespace

FrameRecord generateScene(const SceneSpec& spec, const CameraModel& cam,
                          const WarpMap& distortMap, const std::string& frameId,
                          CameraView view, GenerationLog* log) {
    validate(spec);
    if (distortMap.width() != cam.width() || distortMap.height() != cam.height())
        throw PreconditionError("warp map does not match the camera canvas");

    Rng rng(spec.seed);
    const int W = cam.width(), H = cam.height();
    const double f = spec.view.focal;
    const double centerX = 0.5 * W;

    FrameRecord frame;
    frame.frameId = frameId;
    frame.camera = view;
    frame.width = W;
    frame.height = H;

    const int count = static_cast<int>(rng.uniformInt(spec.minObjects, spec.maxObjects));
    for (int k = 0; k < count; ++k) {
        ShapeDraw s;
        s.label = rng.chance(spec.pedestrianFraction) ? ClassLabel::pedestrian
                                                      : ClassLabel::vehicle;
        if (s.label == ClassLabel::vehicle) {
            s.w = rng.uniform(90.0, 240.0);
            s.h = rng.uniform(55.0, 130.0);
            s.rotDeg = rng.uniform(-spec.vehicleRotationMaxDeg, spec.vehicleRotationMaxDeg);
        } else {
            s.w = rng.uniform(26.0, 56.0);
            s.h = s.w * rng.uniform(2.6, 3.6);
        }

        double phi = 0.0;
        switch (spec.placement) {
            case SceneSpec::Placement::nearField:
                phi = rng.uniform(-1.3, 1.3);
                break;
            case SceneSpec::Placement::central:
                phi = rng.uniform(-0.35, 0.35);
                break;
            case SceneSpec::Placement::peripheral:
                phi = rng.uniform(0.85, 1.3) * (rng.chance(0.5) ? 1.0 : -1.0);
                break;
        }
        s.cx = centerX + f * phi;
        s.cy = rng.uniform(0.55 * H, 0.85 * H);

        const double half = 0.5 * std::max(s.w, s.h) + 2.0;
        if (2.0 * half >= std::min(W, H)) {
            if (log) {
                ++log->dropped;
                log->messages.push_back(frameId + ": instance " + std::to_string(k) +
                                        " (" + toString(s.label) +
                                        ") does not fit the canvas, dropped");
            }
            continue;
        }
        s.cx = std::clamp(s.cx, half, W - half);
        s.cy = std::clamp(s.cy, half, H - half);

        RasterGrid viewMask(W, H);
        drawShape(viewMask, s);
        RasterGrid warped = distortMap.apply(viewMask);
        if (warped.empty()) {
            if (log) {
                ++log->dropped;
                log->messages.push_back(frameId + ": instance " + std::to_string(k) +
                                        " (" + toString(s.label) +
                                        ") has zero area after distortion, dropped");
            }
            continue;
        }
        frame.instances.push_back({s.label, std::move(warped)});
    }
    return frame;
}

FrameRecord generateScene(const SceneSpec& spec, const CameraModel& cam,
                          GenerationLog* log) {
    validate(spec);
    const WarpMap map = WarpMap::build(cam, spec.view, WarpMap::Direction::distort);
    return generateScene(spec, cam, map, frameIdForIndex(0), CameraView::FV, log);
}

CorpusBuildResult generateCorpus(const SceneSpec& base, const CameraModel& cam,
                                 int frameCount) {
    validate(base);
    if (frameCount < 1) throw PreconditionError("frame count must be positive");

    const WarpMap map = WarpMap::build(cam, base.view, WarpMap::Direction::distort);
    std::vector<FrameRecord> frames(static_cast<std::size_t>(frameCount));
    std::vector<GenerationLog> logs(static_cast<std::size_t>(frameCount));
    parallelFor(static_cast<std::size_t>(frameCount), [&](std::size_t i) {
        SceneSpec spec = base;
        spec.seed = base.seed ^ static_cast<std::uint64_t>(i);
        frames[i] = generateScene(spec, cam, map, frameIdForIndex(static_cast<int>(i)),
                                  viewForIndex(static_cast<int>(i)), &logs[i]);
    });

    CorpusBuildResult result;
    result.frames = std::move(frames);
    for (auto& log : logs) {
        result.log.dropped += log.dropped;
        result.log.messages.insert(result.log.messages.end(), log.messages.begin(),
                                   log.messages.end());
    }
    result.manifest.schemaVersion = 1;
    result.manifest.generatorSeed = base.seed;
    for (const auto& frame : result.frames)
        result.manifest.frames.push_back(frameFileName(frame.frameId));
    return result;
}

void writeCorpus(const std::filesystem::path& dir, const CorpusBuildResult& corpus) {
    std::filesystem::create_directories(dir / "frames");
    writeTextFile(dir / "corpus.json", manifestToJson(corpus.manifest));
    for (const auto& frame : corpus.frames)
        writeTextFile(dir / frameFileName(frame.frameId), frameToJson(frame));
}

std::pair<CorpusManifest, std::vector<FrameRecord>> loadCorpus(
    const std::filesystem::path& manifestPath, ParseMode mode,
    std::vector<std::string>* warnings) {
    CorpusManifest manifest = manifestFromJson(readTextFile(manifestPath), mode, warnings);
    const std::filesystem::path base = manifestPath.parent_path();

    std::vector<FrameRecord> frames;
    frames.reserve(manifest.frames.size());
    std::set<std::string> seen;
    for (const auto& rel : manifest.frames) {
        FrameRecord frame = frameFromJson(readTextFile(base / rel), mode, warnings);
        if (!seen.insert(frame.frameId).second)
            throw FormatError("$.frames", "duplicate frameId '" + frame.frameId + "'");
        frames.push_back(std::move(frame));
    }
    return {std::move(manifest), std::move(frames)};
}

} // namespace polyrep
