#pragma once

#include <stdexcept>
#include <string>

namespace predrisk {

// Base for all library errors; what() carries the context.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingVehicle : Error { using Error::Error; };
struct InvalidPose : Error { using Error::Error; };

struct ParseError : Error { using Error::Error; };
struct InvalidValue : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct ResampleError : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };
struct InvalidParameter : Error { using Error::Error; };

struct ShapeError : Error { using Error::Error; };
struct NotScalar : Error { using Error::Error; };
struct NumericalError : Error { using Error::Error; };

struct InvalidHorizon : Error { using Error::Error; };
struct SplineError : Error { using Error::Error; };
struct OutOfHorizon : Error { using Error::Error; };

struct InvalidAxis : Error { using Error::Error; };
struct InvalidParams : Error { using Error::Error; };
struct GridError : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

}  // namespace predrisk
