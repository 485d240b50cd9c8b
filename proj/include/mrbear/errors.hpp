#pragma once

#include <stdexcept>
#include <string>

namespace mrbear {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MRBEAR_DEFINE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

MRBEAR_DEFINE_ERROR(InvalidArgument);
MRBEAR_DEFINE_ERROR(NonUnichain);
MRBEAR_DEFINE_ERROR(NoConvergence);
MRBEAR_DEFINE_ERROR(NotErgodic);
MRBEAR_DEFINE_ERROR(TooLarge);
MRBEAR_DEFINE_ERROR(EmptyVector);
MRBEAR_DEFINE_ERROR(OrderTooLarge);
MRBEAR_DEFINE_ERROR(OrderTooSmall);
MRBEAR_DEFINE_ERROR(IndexOutOfRange);
MRBEAR_DEFINE_ERROR(DomainError);
MRBEAR_DEFINE_ERROR(HorizonTooSmall);
MRBEAR_DEFINE_ERROR(AllEliminated);
MRBEAR_DEFINE_ERROR(InvalidParams);
MRBEAR_DEFINE_ERROR(ParseError);
MRBEAR_DEFINE_ERROR(IoError);

#undef MRBEAR_DEFINE_ERROR

// Configuration error tied to a specific field of a document.
class ValidationError : public Error {
 public:
  ValidationError(std::string field, const std::string& what);
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace mrbear
