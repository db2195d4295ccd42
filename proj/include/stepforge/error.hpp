#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stepforge {

enum class ErrorCode {
  InvalidKey,
  InvalidRecord,
  BackendUnavailable,
  ReplayMiss,
  MalformedResponse,
  NoJsonFound,
  ShapeMismatch,
  UnreadableFile,
  EmptyCorpus,
  DecompositionFailed,
  PlanParseFailed,
  ActionConstraintViolated,
  SynthesisParseFailed,
  StructuralViolation,
  JudgeParseFailed,
  ClientParseFailed,
  CandidateFailure,
  EvaluatorParseFailed,
  UnknownTag,
  SchemaMismatch,
  DuplicateVote,
  TaskClosed,
  TaskNotFound,
  ConfigError,
  StageFailed,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure raised by the library. The code is the
/// stable, machine-checkable part; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a generated action sequence breaks the key constraints.
class ActionConstraintError : public Error {
 public:
  ActionConstraintError(std::vector<std::string> offending, const std::string& message)
      : Error(ErrorCode::ActionConstraintViolated, message), offending_(std::move(offending)) {}

  const std::vector<std::string>& offending_keys() const noexcept { return offending_; }

 private:
  std::vector<std::string> offending_;
};

/// Raised when a stage or pipeline step fails; carries the stage tag.
class StageError : public Error {
 public:
  StageError(ErrorCode code, std::string stage, const std::string& message)
      : Error(code, "[" + stage + "] " + message), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidKey: return "InvalidKey";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DecompositionFailed: return "DecompositionFailed";
    case ErrorCode::PlanParseFailed: return "PlanParseFailed";
    case ErrorCode::ActionConstraintViolated: return "ActionConstraintViolated";
    case ErrorCode::SynthesisParseFailed: return "SynthesisParseFailed";
    case ErrorCode::StructuralViolation: return "StructuralViolation";
    case ErrorCode::JudgeParseFailed: return "JudgeParseFailed";
    case ErrorCode::ClientParseFailed: return "ClientParseFailed";
    case ErrorCode::CandidateFailure: return "CandidateFailure";
    case ErrorCode::EvaluatorParseFailed: return "EvaluatorParseFailed";
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DuplicateVote: return "DuplicateVote";
    case ErrorCode::TaskClosed: return "TaskClosed";
    case ErrorCode::TaskNotFound: return "TaskNotFound";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::StageFailed: return "StageFailed";
  }
  return "Unknown";
}

}  // namespace stepforge
