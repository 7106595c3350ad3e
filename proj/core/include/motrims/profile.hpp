#pragma once

#include <cstddef>
#include <vector>

namespace motrims {

// A sampled 1D curve y(x).
struct Profile {
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
};

// Linear interpolation; zero outside [x.front(), x.back()]. x must be sorted.
double interpolate(const Profile& p, double x);

}  // namespace motrims
