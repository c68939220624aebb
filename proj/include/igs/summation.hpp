#pragma once

#include <span>
#include <vector>

namespace igs {

/// Correctly rounded sum of doubles (Shewchuk partials, as in Python's
/// math.fsum). The result does not depend on the order of the terms.
double exact_sum(std::span<const double> terms);

/// Streaming form of exact_sum.
class ExactAccumulator {
 public:
  void add(double x);
  double result() const;

 private:
  std::vector<double> partials_;
};

}  // namespace igs
