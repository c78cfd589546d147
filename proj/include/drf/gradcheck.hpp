#pragma once

#include <functional>
#include <string>
#include <vector>

#include "drf/param.hpp"

namespace drf {

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double autodiff_value = 0.0;
  double fd_value = 0.0;
  std::size_t checked = 0;
};

// Compares accumulated parameter gradients against central finite
// differences of a forward-only loss evaluation. `forward` must be a
// deterministic function of the current parameter values (fix all noise
// draws). Entries where both |g| and |fd| fall below abs_floor are compared
// absolutely. Relies only on forward evaluations, so it stays independent
// of the reverse-mode path it is checking.
GradCheckResult gradient_check(const std::vector<Parameter*>& params,
                               const std::function<double()>& forward,
                               double step = 1e-5, double abs_floor = 1e-8);

}  // namespace drf
