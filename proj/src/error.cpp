#include "poolkp/error.hpp"

namespace poolkp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::OutOfBounds: return "out_of_bounds";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Format: return "format";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    case ErrorKind::Rank: return "rank";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::NoModel: return "no_model";
    case ErrorKind::Insufficient: return "insufficient";
    case ErrorKind::Projective: return "projective";
    case ErrorKind::Sampling: return "sampling";
    case ErrorKind::Input: return "input";
  }
  return "unknown";
}

}  // namespace poolkp
