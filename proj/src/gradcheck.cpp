#include "drf/gradcheck.hpp"

#include <cmath>

namespace drf {

GradCheckResult gradient_check(const std::vector<Parameter*>& params,
                               const std::function<double()>& forward,
                               double step, double abs_floor) {
  GradCheckResult res;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + step;
      const double f_plus = forward();
      p->value[i] = saved - step;
      const double f_minus = forward();
      p->value[i] = saved;
      const double fd = (f_plus - f_minus) / (2.0 * step);
      const double g = p->grad[i];
      const double mag = std::max(std::abs(g), std::abs(fd));
      const double err =
          mag < abs_floor ? std::abs(g - fd) : std::abs(g - fd) / mag;
      if (err > res.max_rel_err) {
        res.max_rel_err = err;
        res.worst_param = p->name;
        res.worst_index = i;
        res.autodiff_value = g;
        res.fd_value = fd;
      }
      ++res.checked;
    }
  }
  return res;
}

}  // namespace drf
