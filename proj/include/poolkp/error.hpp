#pragma once

#include <stdexcept>
#include <string>

namespace poolkp {

/// Coarse failure classes. The C API maps each one to a distinct status code.
enum class ErrorKind {
  Config,         // invalid pool configuration
  OutOfBounds,    // key-point outside the raster
  Numeric,        // non-finite input
  Shape,          // dimension mismatch
  Domain,         // negative probabilities and similar
  Format,         // binary volume file malformed
  Validation,     // JSON schema violations, duplicate ids
  Parse,          // malformed XML / JSON text
  Io,             // file system failures
  Rank,           // too few homography constraints
  Degenerate,     // constraint configuration cannot fix a homography
  NoModel,        // RANSAC found no consensus
  Insufficient,   // too few detections to localize
  Projective,     // point maps to infinity
  Sampling,       // synthetic camera rejection budget exhausted
  Input,          // generic bad argument
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace poolkp
