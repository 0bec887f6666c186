#include "pdeopt/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "pdeopt/summation.hpp"

namespace pdeopt {

namespace {

// Legendre P_q and its derivative at x by the three-term recurrence.
struct LegendreEval {
  double p;   // P_q(x)
  double dp;  // P_q'(x)
};

LegendreEval legendre(int q, double x) {
  double p0 = 1.0, p1 = x;
  if (q == 0) return {1.0, 0.0};
  for (int j = 2; j <= q; ++j) {
    const double p2 = ((2 * j - 1) * x * p1 - (j - 1) * p0) / j;
    p0 = p1;
    p1 = p2;
  }
  const double dp = q * (x * p1 - p0) / (x * x - 1.0);
  return {p1, dp};
}

}  // namespace

UnivariateRule gauss_legendre(int q) {
  if (q < 1) throw std::invalid_argument("gauss_legendre: degree must be >= 1");
  UnivariateRule rule;
  rule.degree = q;
  rule.nodes.resize(q);
  rule.weights.resize(q);

  // Compute the roots in the left half and mirror, so symmetry is exact.
  const int half = q / 2;
  for (int i = 0; i < half; ++i) {
    // Tricomi-type initial guess for root i (ascending order).
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (q + 0.5));
    LegendreEval ev{};
    for (int it = 0; it < 100; ++it) {
      ev = legendre(q, x);
      const double dx = ev.p / ev.dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    ev = legendre(q, x);
    const double w = 1.0 / ((1.0 - x * x) * ev.dp * ev.dp);  // Lebesgue/2
    rule.nodes[i] = x;
    rule.weights[i] = w;
    rule.nodes[q - 1 - i] = -x;
    rule.weights[q - 1 - i] = w;
  }
  if (q % 2 == 1) {
    const LegendreEval ev = legendre(q, 0.0);
    rule.nodes[half] = 0.0;
    rule.weights[half] = 1.0 / (ev.dp * ev.dp);
  }
  return rule;
}

Box Box::symmetric(int m) {
  Box b;
  b.dims.assign(m, {-1.0, 1.0});
  return b;
}

Box Box::unit(int m) {
  Box b;
  b.dims.assign(m, {0.0, 1.0});
  return b;
}

bool Box::contains(std::span<const double> point, double tol) const {
  if (point.size() != dims.size()) return false;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (point[k] < dims[k][0] - tol || point[k] > dims[k][1] + tol) return false;
  return true;
}

QuadratureRule QuadratureRule::tensor(const std::vector<UnivariateRule>& per_dim, Box box,
                                      std::size_t max_nodes) {
  const int m = static_cast<int>(per_dim.size());
  if (m < 1 || m > 16) throw std::invalid_argument("tensor: dimension must be in [1,16]");
  if (box.dimension() != m) throw std::invalid_argument("tensor: box dimension mismatch");

  std::size_t n = 1;
  for (const auto& r : per_dim) {
    if (r.degree < 1) throw std::invalid_argument("tensor: empty univariate rule");
    if (n > max_nodes / r.nodes.size())
      throw std::invalid_argument("tensor: node count exceeds cap");
    n *= r.nodes.size();
  }

  QuadratureRule rule;
  rule.box_ = std::move(box);
  rule.nodes_.resize(n * m);
  rule.weights_.resize(n);

  std::vector<std::size_t> idx(m, 0);
  for (std::size_t j = 0; j < n; ++j) {
    double w = 1.0;
    for (int k = 0; k < m; ++k) {
      const auto& [lo, hi] = rule.box_.dims[k];
      const double x = per_dim[k].nodes[idx[k]];
      rule.nodes_[j * m + k] = lo + 0.5 * (x + 1.0) * (hi - lo);
      w *= per_dim[k].weights[idx[k]];
    }
    rule.weights_[j] = w;
    // Advance the multi-index, last dimension fastest.
    for (int k = m - 1; k >= 0; --k) {
      if (++idx[k] < per_dim[k].nodes.size()) break;
      idx[k] = 0;
    }
  }
  return rule;
}

QuadratureRule QuadratureRule::tensor_gauss_legendre(int q, Box box, std::size_t max_nodes) {
  std::vector<UnivariateRule> per_dim(box.dimension(), gauss_legendre(q));
  return tensor(per_dim, std::move(box), max_nodes);
}

QuadratureRule QuadratureRule::monte_carlo(std::size_t n, std::uint64_t seed, Box box) {
  if (n < 1) throw std::invalid_argument("monte_carlo: need n >= 1");
  const int m = box.dimension();
  QuadratureRule rule;
  rule.box_ = std::move(box);
  rule.nodes_.resize(n * m);
  rule.weights_.assign(n, 1.0 / static_cast<double>(n));
  Rng rng(seed);
  for (std::size_t j = 0; j < n; ++j)
    for (int k = 0; k < m; ++k) {
      const auto& [lo, hi] = rule.box_.dims[k];
      rule.nodes_[j * m + k] = lo + (hi - lo) * rng.next_double();
    }
  return rule;
}

double expectation(const QuadratureRule& rule, std::span<const double> values) {
  if (values.size() != rule.size())
    throw std::invalid_argument("expectation: values must cover every node");
  NeumaierSum acc;
  for (std::size_t j = 0; j < rule.size(); ++j) acc.add(rule.weight(j) * values[j]);
  return acc.value();
}

double expectation(const QuadratureRule& rule,
                   const std::function<double(std::span<const double>)>& f) {
  NeumaierSum acc;
  for (std::size_t j = 0; j < rule.size(); ++j) acc.add(rule.weight(j) * f(rule.node(j)));
  return acc.value();
}

double s_tilde(const QuadratureRule& rule, const SamplingDistribution& dist) {
  if (dist.size() != rule.size()) throw std::invalid_argument("s_tilde: length mismatch");
  NeumaierSum acc;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const double w = rule.weight(j);
    acc.add(w * w / dist.prob(j));
  }
  return acc.value();
}

SamplingDistribution SamplingDistribution::uniform(std::size_t n) {
  std::vector<double> w(n, 1.0);
  return from_weights(w);
}

SamplingDistribution SamplingDistribution::from_weights(std::span<const double> weights) {
  if (weights.empty()) throw std::invalid_argument("sampling distribution: empty weights");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw std::invalid_argument("sampling distribution: weights must be positive");
    total += w;
  }
  SamplingDistribution d;
  d.prob_.resize(weights.size());
  d.cdf_.resize(weights.size());
  double run = 0.0;
  for (std::size_t j = 0; j < weights.size(); ++j) {
    d.prob_[j] = weights[j] / total;
    run += d.prob_[j];
    d.cdf_[j] = run;
  }
  d.cdf_.back() = 1.0;  // guard against rounding in the last bin
  return d;
}

std::size_t draw_index(const SamplingDistribution& dist, Rng& rng) {
  const double u = rng.next_double();
  const auto it = std::upper_bound(dist.cdf_.begin(), dist.cdf_.end(), u);
  return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
      it - dist.cdf_.begin(), static_cast<std::ptrdiff_t>(dist.cdf_.size()) - 1));
}

namespace {

std::string fmt17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string QuadratureRule::to_json() const {
  nlohmann::json j;
  j["dimension"] = dimension();
  auto& box = j["box"] = nlohmann::json::array();
  for (const auto& [lo, hi] : box_.dims) box.push_back({fmt17(lo), fmt17(hi)});
  auto& nodes = j["nodes"] = nlohmann::json::array();
  for (double x : nodes_) nodes.push_back(fmt17(x));
  auto& weights = j["weights"] = nlohmann::json::array();
  for (double w : weights_) weights.push_back(fmt17(w));
  return j.dump();
}

QuadratureRule QuadratureRule::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  QuadratureRule rule;
  const int m = j.at("dimension").get<int>();
  for (const auto& iv : j.at("box"))
    rule.box_.dims.push_back({std::stod(iv.at(0).get<std::string>()),
                              std::stod(iv.at(1).get<std::string>())});
  if (rule.box_.dimension() != m) throw std::invalid_argument("rule json: box dimension mismatch");
  for (const auto& x : j.at("nodes")) rule.nodes_.push_back(std::stod(x.get<std::string>()));
  for (const auto& w : j.at("weights")) rule.weights_.push_back(std::stod(w.get<std::string>()));
  if (rule.nodes_.size() != rule.weights_.size() * m)
    throw std::invalid_argument("rule json: node/weight size mismatch");
  return rule;
}

}  // namespace pdeopt
