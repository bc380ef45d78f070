#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vlselect {

// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Input,     // malformed or inconsistent user-supplied data
  Provider,  // remote model/provider failure
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define VLSELECT_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

// corpus
VLSELECT_DEFINE_ERROR(FormatError, Input)
VLSELECT_DEFINE_ERROR(TruncationError, Input)
VLSELECT_DEFINE_ERROR(ParseError, Input)
VLSELECT_DEFINE_ERROR(DuplicateIdError, Input)
VLSELECT_DEFINE_ERROR(AlignmentError, Input)
VLSELECT_DEFINE_ERROR(IoError, Input)

// skillgen
VLSELECT_DEFINE_ERROR(EmptyInputError, Input)
VLSELECT_DEFINE_ERROR(EmptyResponseError, Provider)

// knn / selector / rankalyzer / synth
VLSELECT_DEFINE_ERROR(DimensionMismatchError, Input)
VLSELECT_DEFINE_ERROR(PreconditionError, Input)
VLSELECT_DEFINE_ERROR(IndexError, Input)
VLSELECT_DEFINE_ERROR(SpaceMismatchError, Input)
VLSELECT_DEFINE_ERROR(EmptyBenchmarkError, Input)
VLSELECT_DEFINE_ERROR(PoolMismatchError, Input)
VLSELECT_DEFINE_ERROR(MissingSpaceError, Input)
VLSELECT_DEFINE_ERROR(CapacityError, Input)

#undef VLSELECT_DEFINE_ERROR

// Non-finite matrix entry; carries the first offending row.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t row) : Error(ErrorKind::Input, what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class DegenerateVectorError : public Error {
 public:
  DegenerateVectorError(const std::string& what, std::size_t row)
      : Error(ErrorKind::Input, what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::string record_id = {})
      : Error(ErrorKind::Provider, what), record_id_(std::move(record_id)) {}
  const std::string& record_id() const noexcept { return record_id_; }

 private:
  std::string record_id_;
};

}  // namespace vlselect
