#include "sparfima/error.hpp"

namespace sparfima {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::invalid_state: return "invalid_state";
    case ErrorKind::domain: return "domain";
    case ErrorKind::numerical_failure: return "numerical_failure";
    case ErrorKind::unsupported_matrix: return "unsupported_matrix";
    case ErrorKind::convergence_failure: return "convergence_failure";
    case ErrorKind::degenerate_geometry: return "degenerate_geometry";
    case ErrorKind::degenerate_input: return "degenerate_input";
    case ErrorKind::unsupported_layout: return "unsupported_layout";
    case ErrorKind::parse: return "parse";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace sparfima
