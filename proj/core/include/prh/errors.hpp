#pragma once

#include <stdexcept>
#include <string>

namespace prh {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define PRH_ERROR(Name)                                      \
  class Name : public Error {                                \
   public:                                                   \
    using Error::Error;                                      \
    const char* kind() const noexcept override { return #Name; } \
  }

PRH_ERROR(PrecisionExhausted);
PRH_ERROR(ConfigMismatch);
PRH_ERROR(DivergentSeries);
PRH_ERROR(TruncationOverflow);
PRH_ERROR(CommutationFailure);
PRH_ERROR(NotSmall);
PRH_ERROR(SizeLimit);
PRH_ERROR(PreconditionFailed);
PRH_ERROR(InputError);

#undef PRH_ERROR

}  // namespace prh
