#include "sde/error.hpp"

namespace sde {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BadK: return "BadK";
    case ErrorCode::BadArgument: return "BadArgument";
    case ErrorCode::BackendError: return "BackendError";
    case ErrorCode::MalformedOutput: return "MalformedOutput";
    case ErrorCode::InvalidScene: return "InvalidScene";
    case ErrorCode::InvalidTemplate: return "InvalidTemplate";
    case ErrorCode::OrphanPath: return "OrphanPath";
    case ErrorCode::PathNotFound: return "PathNotFound";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::InvalidEdit: return "InvalidEdit";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::EmptyPrompt: return "EmptyPrompt";
    case ErrorCode::StageOrderViolation: return "StageOrderViolation";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::InjectedFault: return "InjectedFault";
  }
  return "Unknown";
}

namespace {

std::string summarize(ErrorCode code, const std::vector<Violation>& violations) {
  std::string out{to_string(code)};
  out += ": ";
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i > 0) out += "; ";
    out += violations[i].rule;
    if (!violations[i].path.empty()) out += " at " + violations[i].path;
    if (!violations[i].message.empty()) out += " (" + violations[i].message + ")";
  }
  return out;
}

}  // namespace

ValidationError::ValidationError(ErrorCode code, std::vector<Violation> violations)
    : Error(code, summarize(code, violations)), violations_(std::move(violations)) {}

}  // namespace sde
