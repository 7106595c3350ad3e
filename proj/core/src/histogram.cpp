#include <cmath>
#include <cstdio>

#include "motrims/analysis.hpp"

namespace motrims::analysis {

std::string component_label(Component c) {
  switch (c) {
    case Component::kPx: return "px";
    case Component::kPy: return "py";
    case Component::kPz: return "pz";
  }
  return "?";
}

std::optional<std::size_t> HistAxis::locate(double v) const {
  if (!(v >= lo && v < hi)) return std::nullopt;
  auto i = static_cast<std::size_t>((v - lo) / width());
  if (i >= bins) i = bins - 1;  // rounding just below hi
  return i;
}

bool Slice::accepts(const Vec3& p) const {
  switch (kind) {
    case Kind::kNone: return true;
    case Kind::kCylinder: return std::hypot(p.x, p.y) < value;
    case Kind::kSlab: return std::abs(p.y) < value;
  }
  return false;
}

std::string Slice::describe() const {
  char buf[64];
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kCylinder: std::snprintf(buf, sizeof buf, "cylinder rho<%g", value); return buf;
    case Kind::kSlab: std::snprintf(buf, sizeof buf, "slab |py|<%g", value); return buf;
  }
  return "?";
}

namespace {

void check_axis(const HistAxis& a) {
  if (a.bins == 0 || !(a.hi > a.lo) || !std::isfinite(a.lo) || !std::isfinite(a.hi)) {
    throw DomainError("histogram axis needs bins > 0 and lo < hi");
  }
}

void check_slice(const Slice& s) {
  if (s.kind != Slice::Kind::kNone && !(s.value > 0.0)) throw DomainError("slice width must be positive");
}

double component(const Vec3& p, Component c) { return p[static_cast<int>(c)]; }

}  // namespace

std::uint64_t Histogram1D::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

void Histogram1D::merge(const Histogram1D& other) {
  if (!(axis == other.axis) || slice != other.slice) throw DataError("histogram merge: axis or slice mismatch");
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

Profile Histogram1D::as_profile() const {
  Profile p;
  p.x.reserve(axis.bins);
  p.y.reserve(axis.bins);
  for (std::size_t i = 0; i < axis.bins; ++i) {
    p.x.push_back(axis.center(i));
    p.y.push_back(static_cast<double>(counts[i]));
  }
  return p;
}

std::vector<double> Histogram1D::poisson_sigma() const {
  std::vector<double> s(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) s[i] = std::sqrt(std::max<double>(static_cast<double>(counts[i]), 1.0));
  return s;
}

std::uint64_t Histogram2D::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

void Histogram2D::merge(const Histogram2D& other) {
  if (!(u == other.u) || !(v == other.v) || slice != other.slice) {
    throw DataError("histogram merge: axis or slice mismatch");
  }
  for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

Histogram1D histogram(std::span<const MomentumRecord> records, const HistAxis& axis, const Slice& slice) {
  check_axis(axis);
  check_slice(slice);
  Histogram1D h{axis, std::vector<std::uint64_t>(axis.bins, 0), slice.describe()};
  for (const auto& r : records) {
    if (!slice.accepts(r.p_au)) continue;
    if (auto i = axis.locate(component(r.p_au, axis.quantity))) ++h.counts[*i];
  }
  return h;
}

Histogram2D histogram2d(std::span<const MomentumRecord> records, const HistAxis& u, const HistAxis& v,
                        const Slice& slice) {
  check_axis(u);
  check_axis(v);
  check_slice(slice);
  Histogram2D h{u, v, std::vector<std::uint64_t>(u.bins * v.bins, 0), slice.describe()};
  for (const auto& r : records) {
    if (!slice.accepts(r.p_au)) continue;
    const auto iu = u.locate(component(r.p_au, u.quantity));
    const auto iv = v.locate(component(r.p_au, v.quantity));
    if (iu && iv) ++h.counts[*iu * v.bins + *iv];
  }
  return h;
}

}  // namespace motrims::analysis
