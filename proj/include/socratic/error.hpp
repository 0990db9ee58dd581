#pragma once

#include <stdexcept>
#include <string>

namespace socratic {

// Root of every error the library throws. Each module derives its own
// kinds so callers can catch narrowly or at this level.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace socratic
