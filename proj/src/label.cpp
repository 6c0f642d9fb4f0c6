#include "stancebench/label.hpp"

#include "stancebench/error.hpp"
#include "text_util.hpp"

namespace stancebench {

std::string_view to_string(Label label) {
  switch (label) {
    case Label::For: return "For";
    case Label::Against: return "Against";
    case Label::NoArgument: return "NoArgument";
  }
  return "?";
}

std::string_view to_string(const Prediction& prediction) {
  return prediction ? to_string(*prediction) : std::string_view("Unparsed");
}

std::optional<Label> parse_label_name(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "for") return Label::For;
  if (s == "against") return Label::Against;
  if (s == "noargument" || s == "no argument" || s == "no_argument") return Label::NoArgument;
  return std::nullopt;
}

bool parse_prediction_name(std::string_view text, Prediction& out) {
  if (detail::to_lower(detail::trim(text)) == "unparsed") {
    out.reset();
    return true;
  }
  auto label = parse_label_name(text);
  if (!label) return false;
  out = *label;
  return true;
}

std::string_view to_string(DatasetKind kind) {
  return kind == DatasetKind::UKP ? "UKP" : "ArgsMe";
}

std::optional<DatasetKind> parse_dataset_kind(std::string_view text) {
  const std::string s = detail::to_lower(detail::trim(text));
  if (s == "ukp") return DatasetKind::UKP;
  if (s == "argsme" || s == "args.me" || s == "args_me") return DatasetKind::ArgsMe;
  return std::nullopt;
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnknownAnnotation: return "UnknownAnnotation";
    case ErrorCode::EmptySentence: return "EmptySentence";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::MissingConclusion: return "MissingConclusion";
    case ErrorCode::UnknownStance: return "UnknownStance";
    case ErrorCode::SampleTooLarge: return "SampleTooLarge";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MissingTopicSpec: return "MissingTopicSpec";
    case ErrorCode::UnsupportedKind: return "UnsupportedKind";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::CacheMissInReplayOnlyMode: return "CacheMissInReplayOnlyMode";
    case ErrorCode::AllUnparsed: return "AllUnparsed";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::MissingData: return "MissingData";
  }
  return "Unknown";
}

ErrorDomain domain_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::Timeout:
    case ErrorCode::HttpError:
    case ErrorCode::RateLimited:
    case ErrorCode::CacheMissInReplayOnlyMode:
      return ErrorDomain::Gateway;
    default:
      return ErrorDomain::Data;
  }
}

}  // namespace stancebench
