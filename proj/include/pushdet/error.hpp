#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pushdet {

enum class Errc {
  Parse,
  Schema,
  Sequencing,
  Validation,
  DegenerateGeometry,
  Domain,
  Training,
  ModelFormat,
  Split,
  Config,
};

const char* to_string(Errc code) noexcept;

/// Single exception type for the library. `line` is 1-based and set when the
/// failure can be located in a text input; `field` names the offending key.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt,
        std::string field = {});

  Errc code() const noexcept { return code_; }
  const std::optional<std::size_t>& line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }
  /// Message without the code/location prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
  std::string field_;
  std::string message_;
};

}  // namespace pushdet
