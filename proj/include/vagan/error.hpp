#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vagan {

// Broad failure categories. The CLI prints the category name as the first
// token of its one-line error report.
enum class ErrorKind {
  usage,
  config,
  io,
  parse,
  dimension,
  numeric,
  checkpoint,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace vagan
