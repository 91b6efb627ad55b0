#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hyrom/linalg.hpp"
#include "hyrom/snapshots.hpp"

namespace hyrom {

struct ParameterSpace {
  std::vector<double> low;
  std::vector<double> high;
  std::vector<std::string> names;

  std::size_t dimension() const { return low.size(); }
  void validate() const;
};

/// Latin hypercube design: each coordinate's n strata hold exactly one point.
std::vector<std::vector<double>> lhs_sample(const ParameterSpace& space, int n, std::uint64_t seed);

/// Uniform random points (held-out test parameters).
std::vector<std::vector<double>> uniform_sample(const ParameterSpace& space, int n, std::uint64_t seed);

enum class PodMethod { Deterministic, Randomized };

struct ReducedBasis {
  DenseMatrix V;            // N_h x N
  Vector singular_values;   // all computed singular values
  double ric_tolerance = 0.0;
  double total_energy = 0.0;  // ||S||_F^2

  Eigen::Index dimension() const { return V.cols(); }
};

/// RIC(N) = sum_{i<=N} sigma_i^2 / total.
double relative_information_content(const Vector& sigma, Eigen::Index n, double total_energy);

/// Minimal N with RIC(N) >= 1 - eps^2, or -1 if the listed values never reach it.
Eigen::Index pod_dimension(const Vector& sigma, double eps, double total_energy);

/// Left singular vectors of S truncated by the RIC criterion. The randomized
/// variant doubles the sketch rank until the selected N is strictly inside it.
ReducedBasis pod(const DenseMatrix& S, double eps_pod, PodMethod method = PodMethod::Randomized,
                 std::uint64_t seed = 0);
ReducedBasis pod(const SnapshotMatrix& S, double eps_pod, PodMethod method = PodMethod::Randomized,
                 std::uint64_t seed = 0);

/// Basis with a prescribed number of columns (ignores the RIC criterion).
ReducedBasis pod_fixed(const DenseMatrix& S, Eigen::Index n, PodMethod method = PodMethod::Randomized,
                       std::uint64_t seed = 0);

}  // namespace hyrom
