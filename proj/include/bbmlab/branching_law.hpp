#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace bbmlab {

// Offspring distribution {p_k}, k >= 1, normalized to mean 2.
class BranchingLaw {
 public:
  // Throws std::invalid_argument unless sum p_k = 1 and sum k p_k = 2
  // (both to 1e-12), every p_k >= 0 and every k >= 1.
  explicit BranchingLaw(std::map<int, double> offspring_probs);

  static BranchingLaw binary() { return BranchingLaw({{2, 1.0}}); }
  // p_1 = 1 is not a valid normalized law (mean 1); it is exposed separately
  // because it reduces the process to a single Brownian motion.
  static BranchingLaw degenerate();

  const std::map<int, double>& probabilities() const { return probs_; }
  bool is_binary() const { return binary_; }
  bool is_degenerate() const { return degenerate_; }
  double mean() const;
  // K = sum k (k - 1) p_k.
  double second_factorial_moment() const { return k_moment_; }

  // Offspring count for a uniform draw in (0,1), by inversion.
  int sample(double uniform) const;

  // Generating function G(s) = sum p_k s^k and its derivative.
  double generating(double s) const;
  double generating_derivative(double s) const;

  std::string describe() const;

 private:
  struct Unchecked {};
  BranchingLaw(std::map<int, double> probs, Unchecked);
  void index();

  std::map<int, double> probs_;
  std::vector<int> counts_;
  std::vector<double> cumulative_;
  double k_moment_ = 0.0;
  bool binary_ = false;
  bool degenerate_ = false;
};

}  // namespace bbmlab
