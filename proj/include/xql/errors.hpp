#ifndef XQL_ERRORS_HPP
#define XQL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace xql {

struct degenerate_sample_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct convergence_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown by training loops when the loss explodes; carries the failing step.
struct divergence_error : std::runtime_error {
  long step;
  divergence_error(const std::string& what, long step_)
      : std::runtime_error(what), step(step_) {}
};

struct parse_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct support_error : std::domain_error {
  using std::domain_error::domain_error;
};

}  // namespace xql

#endif  // XQL_ERRORS_HPP
