#include "bbmlab/point_configuration.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bbmlab/error.hpp"

namespace bbmlab {

std::string_view origin_name(Origin origin) {
  switch (origin) {
    case Origin::extremal: return "extremal";
    case Origin::auxiliary: return "auxiliary";
    case Origin::cluster: return "cluster";
    case Origin::synthetic: return "synthetic";
  }
  return "synthetic";
}

PointConfiguration::PointConfiguration(std::vector<double> points, Origin origin)
    : points_(std::move(points)), origin_(origin) {
  for (double p : points_) {
    if (!std::isfinite(p)) throw std::invalid_argument("point configuration: non-finite point");
  }
  std::sort(points_.begin(), points_.end());
}

double PointConfiguration::max() const {
  if (points_.empty()) throw EmptyPopulationError();
  return points_.back();
}

PointConfiguration PointConfiguration::shifted(double offset) const {
  PointConfiguration out;
  out.origin_ = origin_;
  out.points_.reserve(points_.size());
  for (double p : points_) out.points_.push_back(p + offset);
  return out;
}

std::size_t PointConfiguration::count_in(double lo, double hi) const {
  const auto a = std::lower_bound(points_.begin(), points_.end(), lo);
  const auto b = std::lower_bound(a, points_.end(), hi);
  return static_cast<std::size_t>(b - a);
}

}  // namespace bbmlab
