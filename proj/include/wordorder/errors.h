// Exception types shared by every wordorder module.

#ifndef WORDORDER_ERRORS_H_
#define WORDORDER_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace wordorder {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input line in a treebank, sidecar or model file.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A sentence whose head structure is not a single rooted tree, or which
// violates a structural precondition (e.g. non-projective input).
class StructureError : public Error {
 public:
  StructureError(std::string sentence_id, const std::string &what)
      : Error(sentence_id + ": " + what), sentence_id_(std::move(sentence_id)) {}
  const std::string &sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class AlignmentError : public Error {
 public:
  AlignmentError(std::string sentence_id, const std::string &what)
      : Error(sentence_id + ": " + what), sentence_id_(std::move(sentence_id)) {}
  const std::string &sentence_id() const { return sentence_id_; }

 private:
  std::string sentence_id_;
};

class AnnotationError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class StatisticsError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class IterationLimitError : public Error {
 public:
  using Error::Error;
};

// Coefficients diverge: some linear combination of predictors separates the
// labels perfectly.
class SeparationError : public Error {
 public:
  SeparationError(std::string predictor, const std::string &what)
      : Error(what), predictor_(std::move(predictor)) {}
  const std::string &predictor() const { return predictor_; }

 private:
  std::string predictor_;
};

// Pipeline failure tagged with the stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string &what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)) {}
  const std::string &stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace wordorder

#endif  // WORDORDER_ERRORS_H_
