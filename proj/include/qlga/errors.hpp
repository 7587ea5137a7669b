#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qlga {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define QLGA_ERROR(Name)                          \
  struct Name : Error {                           \
    explicit Name(const std::string& m)           \
        : Error(std::string(#Name ": ") + m) {}   \
  };

QLGA_ERROR(UnknownStencil)
QLGA_ERROR(StencilTooLarge)
QLGA_ERROR(InvalidGate)
QLGA_ERROR(InvalidSpec)
QLGA_ERROR(InvalidSize)
QLGA_ERROR(InvalidInit)
QLGA_ERROR(DuplicateInit)
QLGA_ERROR(InvalidVolume)
QLGA_ERROR(InvalidStep)
QLGA_ERROR(InvalidSegment)
QLGA_ERROR(InvalidRegion)
QLGA_ERROR(InvalidGeometry)
QLGA_ERROR(SupportOverflow)
QLGA_ERROR(ConfigError)

#undef QLGA_ERROR

struct BudgetExceeded : Error {
  std::size_t required;
  std::size_t limit;
  BudgetExceeded(std::size_t req, std::size_t lim, const std::string& m)
      : Error("BudgetExceeded: " + m + " (required " + std::to_string(req) +
              " qubits, limit " + std::to_string(lim) + ")"),
        required(req), limit(lim) {}
};

}  // namespace qlga
