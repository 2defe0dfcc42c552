#include "cd2/error.hpp"

namespace cd2 {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::GridTooFine: return "GridTooFine";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::SchemeMismatch: return "SchemeMismatch";
    case ErrorCode::StreamTruncated: return "StreamTruncated";
    case ErrorCode::StreamOverrun: return "StreamOverrun";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::CountOverflow: return "CountOverflow";
    case ErrorCode::Unencodable: return "Unencodable";
    case ErrorCode::EmptyHistogram: return "EmptyHistogram";
    case ErrorCode::BadTail: return "BadTail";
    case ErrorCode::UnknownOperation: return "UnknownOperation";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::FeatureOrderMismatch: return "FeatureOrderMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnreadablePath: return "UnreadablePath";
    case ErrorCode::TooFewGroups: return "TooFewGroups";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace cd2
