#include <memory>

#include "doctest.h"
#include "hyrom/errors.hpp"
#include "hyrom/online.hpp"
#include "hyrom/pod.hpp"
#include "support.hpp"

using namespace hyrom;
using namespace hyrom::testing;

namespace {

struct Call {
  char which;
  double t;
  double k;
};

// rho(k = 0) = r0, rho(k >= 1) = 0, iota constant.
OperatorModel one_step_model(const Vector& r0, const DenseMatrix& J, std::vector<Call>* log) {
  OperatorModel m;
  m.rho = [=](const Vector& x) {
    if (log) log->push_back({'r', x[x.size() - 2], x[x.size() - 1]});
    return x[x.size() - 1] == 0.0 ? r0 : Vector(Vector::Zero(r0.size()));
  };
  m.iota = [=](const Vector& x) {
    if (log) log->push_back({'j', x[x.size() - 2], x[x.size() - 1]});
    return vec(J);
  };
  m.max_newton_index = 1;
  return m;
}

// Zero-weight surrogate: predicts the stored output mean for every input.
Surrogate constant_surrogate(int input_dim, const Vector& value) {
  Surrogate s;
  s.spec = NetworkSpec::make(input_dim, static_cast<int>(value.size()), DecoderKind::Dense);
  s.spec.dfnn_widths = {3};
  s.spec.dense_width = 3;
  s.spec.dense_depth = 1;
  s.input_stats = {Vector::Zero(input_dim), Vector::Ones(input_dim)};
  s.output_stats = {value, Vector::Ones(value.size())};
  s.weights.values.assign(static_cast<std::size_t>(NetworkModel(s.spec).param_count()), 0.0);
  return s;
}

}  // namespace

TEST_SUITE("hyromnet-online") {

TEST_CASE("one update per step with delta = -iota^{-1} rho") {
  const Vector r0{{1.0, -2.0}};
  const DenseMatrix J{{2.0, 1.0}, {0.0, 4.0}};
  std::vector<Call> log;
  const TimeGrid grid{0.3, 0.1, 3};
  const HyromnetRun run = run_hyromnet(one_step_model(r0, J, &log), 2, {7.0}, grid);
  const Vector delta{{-0.75, 0.5}};  // -J^{-1} r0 by hand
  REQUIRE(run.traj.states.size() == 3);
  for (int n = 0; n < 3; ++n) {
    CHECK(run.traj.iterations[static_cast<std::size_t>(n)] == 1);
    // the previous step is the initial guess, so the updates accumulate
    CHECK((run.traj.states[static_cast<std::size_t>(n)] - (n + 1) * delta).norm() < 1e-14);
  }
  REQUIRE(log.size() == 9);
  for (int n = 0; n < 3; ++n) {
    const Call* c = &log[static_cast<std::size_t>(3 * n)];
    CHECK(c[0].which == 'r');
    CHECK(c[0].k == 0.0);
    CHECK(c[1].which == 'j');
    CHECK(c[1].k == 0.0);
    CHECK(c[2].which == 'r');
    CHECK(c[2].k == 1.0);
    CHECK(c[0].t == doctest::Approx(grid.time(n + 1)));
  }
  CHECK(run.assembly_calls == 0);
  CHECK(run.capped_steps == 0);
  CHECK(run.extrapolated_evals == 0);
}

TEST_CASE("zero predicted residual leaves the state untouched") {
  const HyromnetRun run = run_hyromnet(one_step_model(Vector::Zero(3), DenseMatrix::Identity(3, 3), nullptr), 3,
                                       {1.0, 2.0}, {0.2, 0.1, 2});
  for (const auto& u : run.traj.states) CHECK(u.norm() == 0.0);
  CHECK(run.traj.iterations == std::vector<int>{0, 0});
}

TEST_CASE("iteration cap is counted or reported") {
  auto fed_k = std::make_shared<double>(0.0);
  OperatorModel m;
  m.rho = [fed_k](const Vector& x) {
    *fed_k = std::max(*fed_k, x[x.size() - 1]);
    return Vector(Vector::Ones(2));
  };
  m.iota = [](const Vector&) { return vec(DenseMatrix::Identity(2, 2)); };
  m.max_newton_index = 2;
  const TimeGrid grid{0.4, 0.1, 4};
  const HyromnetRun run = run_hyromnet(m, 2, {1.0}, grid);
  CHECK(run.capped_steps == 4);
  CHECK(run.traj.iterations == std::vector<int>{4, 4, 4, 4});  // max k seen + 2
  // by default k is clamped to the training range
  CHECK(*fed_k == 2.0);
  CHECK(run.extrapolated_evals == 0);

  OnlineSettings open;
  open.k_cap = 100;
  // k = 3 and k = 4 lie beyond the training range
  CHECK(run_hyromnet(m, 2, {1.0}, grid, open).extrapolated_evals == 4 * 3);

  OnlineSettings capped;
  capped.k_cap = 1;
  capped.max_iters = 6;
  const HyromnetRun r2 = run_hyromnet(m, 2, {1.0}, grid, capped);
  CHECK(r2.extrapolated_evals == 0);
  CHECK(r2.traj.iterations.front() == 6);

  OnlineSettings strict;
  strict.fail_on_cap = true;
  CHECK_THROWS_AS(run_hyromnet(m, 2, {1.0}, grid, strict), Divergence);
}

TEST_CASE("singular predicted jacobian is regularised once") {
  const DenseMatrix J{{1.0, 0.0}, {0.0, 0.0}};
  const Vector r0{{1.0, 0.0}};
  const HyromnetRun run = run_hyromnet(one_step_model(r0, J, nullptr), 2, {1.0}, {0.1, 0.1, 1});
  CHECK(run.singular_fallbacks == 1);
  CHECK(run.traj.states[0][0] == doctest::Approx(-1.0 / (1.0 + 0.5e-8)));
  CHECK(run.traj.states[0][1] == 0.0);
}

TEST_CASE("argument checks") {
  OperatorModel empty;
  CHECK_THROWS_AS(run_hyromnet(empty, 2, {1.0}, {0.1, 0.1, 1}), InvalidArgument);
  const OperatorModel m = one_step_model(Vector::Ones(3), DenseMatrix::Identity(3, 3), nullptr);
  CHECK_THROWS_AS(run_hyromnet(m, 2, {1.0}, {0.1, 0.1, 1}), InvalidArgument);
  OnlineSettings bad;
  bad.eps_stop = 0.0;
  CHECK_THROWS_AS(run_hyromnet(m, 3, {1.0}, {0.1, 0.1, 1}, bad), InvalidArgument);

  SurrogatePair pair{constant_surrogate(3, Vector::Ones(2)), constant_surrogate(3, vec(DenseMatrix::Identity(2, 2)))};
  CHECK_THROWS_AS(run_hyromnet(pair, DenseMatrix::Zero(10, 3), {1.0}, {0.1, 0.1, 1}), InvalidArgument);
  CHECK_THROWS_AS(run_hyromnet(pair, DenseMatrix::Zero(10, 2), {1.0, 2.0}, {0.1, 0.1, 1}), InvalidArgument);
}

TEST_CASE("surrogate pair drives the solver without assembly") {
  // rho is a constant nonzero prediction so every step runs to the cap
  SurrogatePair pair{constant_surrogate(3, Vector{{0.5, -0.5}}),
                     constant_surrogate(3, vec(DenseMatrix{{2.0, 0.0}, {0.0, 2.0}}))};
  pair.rho.max_newton_index = pair.iota.max_newton_index = 1;
  const Mesh mesh = build_box_mesh({1e-2, 1e-3, 1e-3}, {10, 2, 2});
  const Assembler a(mesh);
  const std::uint64_t before = assembly_counter();
  const HyromnetRun run = run_hyromnet(pair, DenseMatrix::Zero(a.dofs(), 2), {4.0}, {0.05, 5e-3, 10});
  CHECK(run.assembly_calls == 0);
  CHECK(assembly_counter() == before);
  CHECK(run.capped_steps == 10);
  CHECK(run.traj.iterations.front() == 3);
  CHECK(run.traj.states.front()[0] == doctest::Approx(-0.75));
}

TEST_CASE("train_pair input checks") {
  const auto specs = default_pair_specs(3, 2);
  CHECK(specs.first.input_dim == 5);
  CHECK(specs.first.output_dim == 2);
  CHECK(specs.second.output_dim == 4);
  OperatorSnapshotSet empty;
  CHECK_THROWS_AS(train_pair(empty, specs.first, specs.second, {}), InvalidArgument);
  OperatorSnapshotSet bad;
  bad.residuals = SnapshotMatrix(2);
  bad.jacobians = SnapshotMatrix(4);
  bad.inputs = SnapshotMatrix(5);
  bad.residuals.append(Vector::Ones(2), {});
  bad.residuals.append(Vector::Ones(2), {});
  bad.jacobians.append(Vector::Ones(4), {});
  bad.inputs.append(Vector::Ones(5), {});
  CHECK_THROWS_AS(train_pair(bad, specs.first, specs.second, {}), InvalidArgument);
}

TEST_CASE("beam pipeline: trained pair runs online and audits against the projected residual") {
  const Mesh mesh = build_box_mesh({1e-2, 1e-3, 1e-3}, {10, 2, 2});
  const Assembler a(mesh);
  const TimeGrid grid{0.1, 5e-3, 20};
  const std::vector<double> mu{1e4, 5e4, 4.0};
  SnapshotMatrix S;
  run_fom(a, beam_setup(mu[0], mu[1], mu[2]), grid, {}, {SnapshotMode::Iterates, mu}, &S);
  const ReducedBasis basis = pod(S, 1e-3);
  const GalerkinProjector proj(a, basis.V);
  OperatorSnapshotSet data;
  const RomTrajectory rom = run_rom(proj, beam_setup(mu[0], mu[1], mu[2]), grid, {}, {true, false, mu}, &data);

  auto specs = default_pair_specs(3, static_cast<int>(basis.dimension()), DecoderKind::Dense);
  TrainConfig cfg;
  cfg.Ne = 5;
  cfg.seed = 3;
  const PairTrainResult tr = train_pair(data, specs.first, specs.second, cfg);
  CHECK(tr.rho_history.epochs.size() == 6);
  CHECK(tr.pair.rho.max_newton_index == *std::max_element(rom.iterations.begin(), rom.iterations.end()));

  const HyromnetRun run = run_hyromnet(tr.pair, basis.V, mu, grid);
  CHECK(run.assembly_calls == 0);
  CHECK(run.traj.states.size() == 20);

  const std::uint64_t audits = audit_counter(), calls = assembly_counter();
  const auto r = audit_residuals(proj, beam_setup(mu[0], mu[1], mu[2]), grid, rom);
  CHECK(assembly_counter() == calls);
  CHECK(audit_counter() > audits);
  REQUIRE(r.size() == 20);
  for (double v : r) CHECK(v < 1e-8);
}

}  // TEST_SUITE
