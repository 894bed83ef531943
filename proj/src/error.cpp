#include "pushdet/error.hpp"

namespace pushdet {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::Parse: return "parse error";
    case Errc::Schema: return "schema error";
    case Errc::Sequencing: return "sequencing error";
    case Errc::Validation: return "validation error";
    case Errc::DegenerateGeometry: return "degenerate geometry";
    case Errc::Domain: return "domain error";
    case Errc::Training: return "training error";
    case Errc::ModelFormat: return "model format error";
    case Errc::Split: return "split error";
    case Errc::Config: return "configuration error";
  }
  return "error";
}

namespace {

std::string compose(Errc code, const std::string& message, const std::optional<std::size_t>& line,
                    const std::string& field) {
  std::string out = to_string(code);
  if (line) out += " at line " + std::to_string(*line);
  if (!field.empty()) out += " (field `" + field + "`)";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line, std::string field)
    : std::runtime_error(compose(code, message, line, field)),
      code_(code),
      line_(line),
      field_(std::move(field)),
      message_(message) {}

}  // namespace pushdet
