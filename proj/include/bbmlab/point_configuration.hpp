#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace bbmlab {

enum class Origin { extremal, auxiliary, cluster, synthetic };

std::string_view origin_name(Origin origin);

// Finite multiset of reals, kept sorted ascending.
class PointConfiguration {
 public:
  PointConfiguration() = default;
  // Sorts the input; throws std::invalid_argument on non-finite points.
  explicit PointConfiguration(std::vector<double> points, Origin origin = Origin::synthetic);

  const std::vector<double>& points() const { return points_; }
  std::span<const double> view() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  Origin origin() const { return origin_; }

  // Largest point; throws EmptyPopulationError when empty.
  double max() const;
  PointConfiguration shifted(double offset) const;
  // Number of points in [lo, hi).
  std::size_t count_in(double lo, double hi) const;

  friend bool operator==(const PointConfiguration& a, const PointConfiguration& b) {
    return a.points_ == b.points_;
  }

 private:
  std::vector<double> points_;
  Origin origin_ = Origin::synthetic;
};

}  // namespace bbmlab
