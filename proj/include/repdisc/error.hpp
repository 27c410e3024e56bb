#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace repdisc {

enum class ErrorKind {
  IoError,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  NonFiniteEntry,
  LabelOutOfRange,
  RankDeficient,
  NotPsd,
  ShapeError,
  NotAProbability,
  ZeroMatrix,
  UnsortedSigma,
  SigmaOutOfRange,
  NormViolation,
  IndexOutOfRange,
  InvalidArgument,
};

constexpr std::string_view error_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::NonFiniteEntry: return "NonFiniteEntry";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::NotPsd: return "NotPsd";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::NotAProbability: return "NotAProbability";
    case ErrorKind::ZeroMatrix: return "ZeroMatrix";
    case ErrorKind::UnsortedSigma: return "UnsortedSigma";
    case ErrorKind::SigmaOutOfRange: return "SigmaOutOfRange";
    case ErrorKind::NormViolation: return "NormViolation";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library. `kind()` is the stable name printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(error_name(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return error_name(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) raise(kind, what);
}

}  // namespace repdisc
