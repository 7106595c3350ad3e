#include <algorithm>

#include "motrims/profile.hpp"

namespace motrims {

double interpolate(const Profile& p, double x) {
  if (p.x.empty() || x < p.x.front() || x > p.x.back()) return 0.0;
  if (p.x.size() == 1) return p.y.front();
  const auto it = std::upper_bound(p.x.begin(), p.x.end(), x);
  if (it == p.x.end()) return p.y.back();
  const auto i = static_cast<std::size_t>(it - p.x.begin());
  const double x0 = p.x[i - 1], x1 = p.x[i];
  const double f = x1 > x0 ? (x - x0) / (x1 - x0) : 0.0;
  return p.y[i - 1] * (1.0 - f) + p.y[i] * f;
}

}  // namespace motrims
