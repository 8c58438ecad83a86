#include "ambipose/error.hpp"

#include <fmt/format.h>

namespace ambipose {

NearPiRotation::NearPiRotation(double angle)
    : Error(fmt::format("rotation angle {} is too close to pi for a stable logarithm", angle)),
      angle_(angle) {}

ParseError::ParseError(const std::string& source, int line, const std::string& message)
    : Error(line > 0 ? fmt::format("{}:{}: {}", source, line, message)
                     : fmt::format("{}: {}", source, message)),
      line_(line) {}

}  // namespace ambipose
