#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <span>

namespace pdeopt {

// Neumaier compensated accumulator. Weighted sums over quadrature nodes are
// always taken in ascending node order through this accumulator so that
// "exact equality" contracts between different call sites are meaningful.
class NeumaierSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  NeumaierSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

// Entry-wise compensated accumulation of weighted vector terms.
class CompensatedVectorSum {
 public:
  explicit CompensatedVectorSum(Eigen::Index n)
      : sum_(Eigen::VectorXd::Zero(n)), comp_(Eigen::VectorXd::Zero(n)) {}

  void add(double weight, const Eigen::VectorXd& term) {
    for (Eigen::Index i = 0; i < sum_.size(); ++i) {
      const double x = weight * term[i];
      const double t = sum_[i] + x;
      if (std::abs(sum_[i]) >= std::abs(x))
        comp_[i] += (sum_[i] - t) + x;
      else
        comp_[i] += (x - t) + sum_[i];
      sum_[i] = t;
    }
  }

  Eigen::VectorXd value() const { return sum_ + comp_; }

 private:
  Eigen::VectorXd sum_;
  Eigen::VectorXd comp_;
};

}  // namespace pdeopt
