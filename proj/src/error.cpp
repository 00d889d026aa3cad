#include "waggle/error.hpp"

#include <sstream>

namespace waggle {

namespace {

std::string divergence_message(double t, std::optional<int> iteration) {
  std::ostringstream os;
  os << "integration diverged at t=" << t;
  if (iteration) os << " (iteration " << *iteration << ")";
  return os.str();
}

}  // namespace

DivergenceError::DivergenceError(double t, std::optional<int> iteration)
    : Error(divergence_message(t, iteration)), t_(t), iteration_(iteration) {}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

}  // namespace waggle
