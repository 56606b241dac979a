#pragma once

#include <stdexcept>
#include <string>

namespace tdbs {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input file could not be parsed; message names the offending line/byte.
struct MalformedInputError : Error {
  using Error::Error;
};

// Input exists but holds no usable data (empty cloud, single point, ...).
struct EmptyInputError : Error {
  using Error::Error;
};

struct ParameterError : Error {
  using Error::Error;
};

// PLY/OBJ feature outside the supported subset.
struct UnsupportedFeatureError : Error {
  using Error::Error;
};

struct DegenerateGeometryError : Error {
  using Error::Error;
};

// A keypoint could not be described (short neighborhood etc.).
struct SignatureSkippedError : Error {
  using Error::Error;
};

// A loaded xyz keypoint matched no cloud point within tolerance.
struct UnmatchedKeypointError : Error {
  using Error::Error;
};

}  // namespace tdbs
