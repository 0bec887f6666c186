#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pdeopt/rng.hpp"

namespace pdeopt {

// One-dimensional Gauss-Legendre rule on (-1,1), probability-normalized:
// weights are the classical Lebesgue weights divided by 2 and sum to 1.
struct UnivariateRule {
  int degree = 0;
  std::vector<double> nodes;    // strictly increasing, symmetric about 0
  std::vector<double> weights;  // positive, sum 1
};

// Nodes via Newton iteration on the Legendre polynomial with asymptotic
// initial guesses; accurate well beyond q = 100. Throws on q < 1.
UnivariateRule gauss_legendre(int q);

// Axis-aligned parameter box, one [lo, hi] interval per dimension.
struct Box {
  std::vector<std::array<double, 2>> dims;

  static Box symmetric(int m);  // [-1,1]^m
  static Box unit(int m);       // [0,1]^m
  int dimension() const { return static_cast<int>(dims.size()); }
  bool contains(std::span<const double> point, double tol = 1e-12) const;
  bool operator==(const Box&) const = default;
};

// Discrete expectation rule: n nodes in an M-dimensional box with positive
// weights summing to 1. Node j occupies nodes()[j*M .. j*M+M).
class QuadratureRule {
 public:
  // Tensor product of per-dimension rules, nodes mapped affinely into `box`.
  // Global numbering is lexicographic in the multi-index, last dimension
  // fastest. Throws if the node count would exceed `max_nodes`.
  static QuadratureRule tensor(const std::vector<UnivariateRule>& per_dim, Box box,
                               std::size_t max_nodes = 10'000'000);

  // Isotropic tensor Gauss-Legendre rule: q nodes per dimension.
  static QuadratureRule tensor_gauss_legendre(int q, Box box, std::size_t max_nodes = 10'000'000);

  // n i.i.d. uniform draws in the box with weights 1/n, reproducible from seed.
  static QuadratureRule monte_carlo(std::size_t n, std::uint64_t seed, Box box);

  int dimension() const { return box_.dimension(); }
  std::size_t size() const { return weights_.size(); }
  const Box& box() const { return box_; }
  std::span<const double> node(std::size_t j) const {
    return {nodes_.data() + j * dimension(), static_cast<std::size_t>(dimension())};
  }
  double weight(std::size_t j) const { return weights_[j]; }
  std::span<const double> weights() const { return weights_; }

  std::string to_json() const;                       // 17 significant digits
  static QuadratureRule from_json(const std::string& text);

 private:
  QuadratureRule() = default;
  Box box_;
  std::vector<double> nodes_;    // n * M, node-major
  std::vector<double> weights_;  // n
};

// Discrete probability measure on {0..n-1} with a cumulative table for
// inverse-CDF draws.
class SamplingDistribution {
 public:
  static SamplingDistribution uniform(std::size_t n);
  // Normalizes `weights` (all must be positive).
  static SamplingDistribution from_weights(std::span<const double> weights);

  std::size_t size() const { return prob_.size(); }
  double prob(std::size_t j) const { return prob_[j]; }
  std::span<const double> probabilities() const { return prob_; }

 private:
  friend std::size_t draw_index(const SamplingDistribution&, Rng&);
  std::vector<double> prob_;
  std::vector<double> cdf_;
};

// Evaluates the discrete expectation of the tabulated values (ascending node
// order, compensated).
double expectation(const QuadratureRule& rule, std::span<const double> values);
double expectation(const QuadratureRule& rule, const std::function<double(std::span<const double>)>& f);

// Variance-control quantity sum_j w_j^2 / p_j of a rule against a sampling
// distribution; equals 1 when p_j = w_j.
double s_tilde(const QuadratureRule& rule, const SamplingDistribution& dist);

// Index in {0..n-1} with law `dist`, via binary search on the cumulative
// table. Advances only the caller-owned rng.
std::size_t draw_index(const SamplingDistribution& dist, Rng& rng);

}  // namespace pdeopt
