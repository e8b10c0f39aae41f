#pragma once

#include <stdexcept>

namespace hiertopics {

// Problems with input data or files (missing, malformed, out-of-range ids).
// The CLI maps these to exit code 3.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace hiertopics
