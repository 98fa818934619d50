#pragma once

#include <stdexcept>
#include <string>

namespace nln {

// Base of every error the library throws; category() names the CLI error class.
class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
  virtual const char* category() const noexcept { return "error"; }
};

#define NLN_ERROR(name, tag)                                                  \
  class name : public error {                                                 \
  public:                                                                     \
    using error::error;                                                       \
    const char* category() const noexcept override { return tag; }           \
  };

NLN_ERROR(dimension_error, "dimension")
NLN_ERROR(domain_error, "domain")
NLN_ERROR(precondition_error, "precondition")
NLN_ERROR(schema_error, "schema")
NLN_ERROR(data_error, "data")
NLN_ERROR(capacity_error, "capacity")
NLN_ERROR(not_discretized_error, "not-discretized")
NLN_ERROR(threshold_error, "threshold")
NLN_ERROR(numeric_error, "numeric")
NLN_ERROR(format_error, "format")

#undef NLN_ERROR

}  // namespace nln
