#include "hyrom/pod.hpp"

#include <algorithm>
#include <numeric>

#include "hyrom/errors.hpp"
#include "hyrom/rng.hpp"

namespace hyrom {

void ParameterSpace::validate() const {
  if (low.size() != high.size()) throw InvalidArgument("parameter space: bound arrays differ in length");
  if (!names.empty() && names.size() != low.size()) throw InvalidArgument("parameter space: name count mismatch");
  for (std::size_t i = 0; i < low.size(); ++i)
    if (!(low[i] < high[i])) throw InvalidArgument("parameter space: low >= high for coordinate " + std::to_string(i));
}

std::vector<std::vector<double>> lhs_sample(const ParameterSpace& space, int n, std::uint64_t seed) {
  space.validate();
  if (n < 1) throw InvalidArgument("lhs_sample: n must be >= 1");
  const std::size_t p = space.dimension();
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(n), std::vector<double>(p));
  CounterRng rng(seed);
  for (std::size_t d = 0; d < p; ++d) {
    std::vector<int> strata(static_cast<std::size_t>(n));
    std::iota(strata.begin(), strata.end(), 0);
    shuffle(strata, rng);
    const double width = (space.high[d] - space.low[d]) / n;
    for (int i = 0; i < n; ++i) {
      const double offset = rng.uniform();
      pts[static_cast<std::size_t>(i)][d] = space.low[d] + width * (strata[static_cast<std::size_t>(i)] + offset);
    }
  }
  return pts;
}

std::vector<std::vector<double>> uniform_sample(const ParameterSpace& space, int n, std::uint64_t seed) {
  space.validate();
  if (n < 1) throw InvalidArgument("uniform_sample: n must be >= 1");
  CounterRng rng(seed);
  std::vector<std::vector<double>> pts(static_cast<std::size_t>(n), std::vector<double>(space.dimension()));
  for (auto& pt : pts)
    for (std::size_t d = 0; d < pt.size(); ++d) pt[d] = rng.uniform(space.low[d], space.high[d]);
  return pts;
}

double relative_information_content(const Vector& sigma, Eigen::Index n, double total_energy) {
  if (total_energy <= 0.0) return 1.0;
  return sigma.head(std::min(n, sigma.size())).squaredNorm() / total_energy;
}

Eigen::Index pod_dimension(const Vector& sigma, double eps, double total_energy) {
  const double target = (1.0 - eps * eps) * total_energy;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    acc += sigma(i) * sigma(i);
    if (acc >= target) return i + 1;
  }
  return -1;
}

namespace {

// Rows that vanish in every snapshot (clamped dofs) vanish exactly in the basis; the SVD leaves
// roundoff there, which would lift to spurious displacements on the Dirichlet boundary.
ReducedBasis make_basis(const DenseMatrix& S, const SvdResult& s, Eigen::Index n, double eps, double total) {
  ReducedBasis b;
  b.V = s.left_vectors.leftCols(n);
  for (Eigen::Index i = 0; i < S.rows(); ++i)
    if (S.row(i).cwiseAbs().maxCoeff() == 0.0) b.V.row(i).setZero();
  b.singular_values = s.singular_values;
  b.ric_tolerance = eps;
  b.total_energy = total;
  return b;
}

}  // namespace

ReducedBasis pod(const DenseMatrix& S, double eps_pod, PodMethod method, std::uint64_t seed) {
  if (S.rows() < 1 || S.cols() < 1) throw InvalidArgument("pod: empty snapshot matrix");
  if (!(eps_pod > 0.0) || !(eps_pod < 1.0)) throw InvalidArgument("pod: tolerance must lie in (0, 1)");
  require_finite(S, "pod");
  const double total = S.squaredNorm();
  if (total == 0.0) throw InvalidArgument("pod: all-zero snapshot matrix");

  if (method == PodMethod::Deterministic) {
    const SvdResult s = svd(S);
    Eigen::Index n = pod_dimension(s.singular_values, eps_pod, total);
    if (n < 0) n = s.singular_values.size();
    return make_basis(S, s, n, eps_pod, total);
  }

  const Eigen::Index max_rank = std::min(S.rows(), S.cols());
  Eigen::Index k = std::min<Eigen::Index>(8, max_rank);
  for (;;) {
    const SvdResult s = randomized_svd(S, static_cast<int>(k), seed);
    const Eigen::Index n = pod_dimension(s.singular_values, eps_pod, total);
    if (n > 0 && (n < k || k == max_rank)) return make_basis(S, s, n, eps_pod, total);
    if (k == max_rank) return make_basis(S, s, k, eps_pod, total);
    k = std::min(2 * k, max_rank);
  }
}

ReducedBasis pod(const SnapshotMatrix& S, double eps_pod, PodMethod method, std::uint64_t seed) {
  if (S.empty()) throw InvalidArgument("pod: empty snapshot matrix");
  return pod(DenseMatrix(S.data()), eps_pod, method, seed);
}

ReducedBasis pod_fixed(const DenseMatrix& S, Eigen::Index n, PodMethod method, std::uint64_t seed) {
  const Eigen::Index max_rank = std::min(S.rows(), S.cols());
  if (n < 1 || n > max_rank) throw InvalidArgument("pod_fixed: dimension out of range");
  require_finite(S, "pod");
  const double total = S.squaredNorm();
  if (total == 0.0) throw InvalidArgument("pod: all-zero snapshot matrix");
  const SvdResult s = method == PodMethod::Deterministic
                          ? svd(S)
                          : randomized_svd(S, static_cast<int>(std::min(2 * n, max_rank)), seed);
  return make_basis(S, s, n, 0.0, total);
}

}  // namespace hyrom
