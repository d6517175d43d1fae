#include "bbmlab/branching_law.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bbmlab {

namespace {
constexpr double kLawTolerance = 1e-12;
}

BranchingLaw::BranchingLaw(std::map<int, double> offspring_probs)
    : probs_(std::move(offspring_probs)) {
  if (probs_.empty()) throw std::invalid_argument("branching law: no offspring probabilities");
  double total = 0.0;
  double mean = 0.0;
  for (const auto& [k, p] : probs_) {
    if (k < 1) throw std::invalid_argument("branching law: offspring counts must be >= 1");
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("branching law: probabilities must be finite and >= 0");
    }
    total += p;
    mean += k * p;
  }
  if (std::fabs(total - 1.0) > kLawTolerance) {
    throw std::invalid_argument("branching law: probabilities must sum to 1");
  }
  if (std::fabs(mean - 2.0) > kLawTolerance) {
    throw std::invalid_argument("branching law: mean offspring number must be 2");
  }
  index();
}

BranchingLaw::BranchingLaw(std::map<int, double> probs, Unchecked) : probs_(std::move(probs)) {
  index();
}

BranchingLaw BranchingLaw::degenerate() {
  BranchingLaw law({{1, 1.0}}, Unchecked{});
  law.degenerate_ = true;
  return law;
}

void BranchingLaw::index() {
  double acc = 0.0;
  k_moment_ = 0.0;
  for (const auto& [k, p] : probs_) {
    if (p == 0.0) continue;
    acc += p;
    counts_.push_back(k);
    cumulative_.push_back(acc);
    k_moment_ += static_cast<double>(k) * (k - 1) * p;
  }
  cumulative_.back() = 1.0;
  binary_ = counts_.size() == 1 && counts_.front() == 2;
}

double BranchingLaw::mean() const {
  double m = 0.0;
  for (const auto& [k, p] : probs_) m += k * p;
  return m;
}

int BranchingLaw::sample(double uniform) const {
  for (std::size_t i = 0; i + 1 < cumulative_.size(); ++i) {
    if (uniform < cumulative_[i]) return counts_[i];
  }
  return counts_.back();
}

double BranchingLaw::generating(double s) const {
  double g = 0.0;
  for (const auto& [k, p] : probs_) g += p * std::pow(s, k);
  return g;
}

double BranchingLaw::generating_derivative(double s) const {
  double g = 0.0;
  for (const auto& [k, p] : probs_) g += p * k * std::pow(s, k - 1);
  return g;
}

std::string BranchingLaw::describe() const {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (const auto& [k, p] : probs_) {
    if (!first) os << ',';
    os << '"' << k << "\":" << p;
    first = false;
  }
  os << '}';
  return os.str();
}

}  // namespace bbmlab
