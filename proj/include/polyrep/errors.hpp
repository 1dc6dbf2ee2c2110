#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace polyrep {

/// Violated call contract: bad arguments, mismatched shapes, invalid config.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Geometry collapsed to zero measure (collinear polygon, vanished mask).
class DegenerateGeometryError : public PreconditionError {
public:
    using PreconditionError::PreconditionError;
};

/// IoU of two empty regions.
class UndefinedIoUError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Metric has no defined value (e.g. mAP with no ground truth at all).
class UndefinedMetricError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Arithmetic left the representable range (overflowing exp, non-finite result).
class NumericRangeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Image point or ray lies outside the camera field of view.
class OutOfFovError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested projection cannot carry the camera's field of view.
class LossOfFovError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed data file. `path()` names the offending field, e.g. "frames[3].rle".
class FormatError : public std::runtime_error {
public:
    FormatError(std::string fieldPath, const std::string& message)
        : std::runtime_error(fieldPath + ": " + message), path_(std::move(fieldPath)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace polyrep
