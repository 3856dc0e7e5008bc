#pragma once

#include <stdexcept>
#include <string>

namespace krein {

// Requested object cannot be expressed in the density-segments + atoms model
// (e.g. a dual string that would need a point mass sitting on the boundary).
class not_representable_error : public std::runtime_error {
 public:
  explicit not_representable_error(const std::string& what) : std::runtime_error(what) {}
};

// Adaptive procedure hit its work cap before reaching the requested tolerance.
// Carries the best estimate obtained so far.
class accuracy_error : public std::runtime_error {
 public:
  accuracy_error(const std::string& what, double best)
      : std::runtime_error(what), best_estimate_(best) {}
  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

}  // namespace krein
