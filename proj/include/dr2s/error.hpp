#pragma once

#include <stdexcept>
#include <string>

namespace dr2s {

enum class ErrorCode {
  input,            // malformed or rejected instance / arguments
  infeasible,       // first stage or ambiguity set empty
  recourse,         // node relaxation infeasible (complete recourse violated)
  numerical,        // IPM failure that could not be recovered
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dr2s
