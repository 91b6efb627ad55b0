#include <functional>

#include "doctest.h"
#include "hyrom/dnn.hpp"
#include "hyrom/errors.hpp"
#include "support.hpp"

using namespace hyrom;
using namespace hyrom::testing;

namespace {

double at(const DenseMatrix& img, int c, int H, int W, int y, int x, Eigen::Index b) {
  if (y < 0 || y >= H || x < 0 || x >= W) return 0.0;
  return img((c * H + y) * W + x, b);
}

// Direct loops; W is cout x (cin*k*k) with (ci, ky, kx) ordering.
DenseMatrix naive_conv(const std::vector<double>& p, const DenseMatrix& X, int cin, int cout, int H, int W, int k, int s,
                       int pad) {
  const int Ho = (H + 2 * pad - k) / s + 1, Wo = (W + 2 * pad - k) / s + 1;
  const Eigen::Map<const DenseMatrix> Wm(p.data(), cout, cin * k * k);
  DenseMatrix Y(cout * Ho * Wo, X.cols());
  for (Eigen::Index b = 0; b < X.cols(); ++b)
    for (int co = 0; co < cout; ++co)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          double acc = p[static_cast<std::size_t>(cout * cin * k * k + co)];
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx)
                acc += Wm(co, (ci * k + ky) * k + kx) * at(X, ci, H, W, oy * s - pad + ky, ox * s - pad + kx, b);
          Y((co * Ho + oy) * Wo + ox, b) = acc;
        }
  return Y;
}

// Scatter form of the transposed convolution; Wt is (cout*k*k) x cin.
DenseMatrix naive_conv_t(const std::vector<double>& p, const DenseMatrix& X, int cin, int cout, int H, int W, int k,
                         int s, int pad, int outpad) {
  const int Ho = (H - 1) * s - 2 * pad + k + outpad, Wo = (W - 1) * s - 2 * pad + k + outpad;
  const Eigen::Map<const DenseMatrix> Wt(p.data(), cout * k * k, cin);
  DenseMatrix Y(cout * Ho * Wo, X.cols());
  for (Eigen::Index b = 0; b < X.cols(); ++b) {
    for (int co = 0; co < cout; ++co)
      for (int i = 0; i < Ho * Wo; ++i) Y(co * Ho * Wo + i, b) = p[static_cast<std::size_t>(cout * k * k * cin + co)];
    for (int ci = 0; ci < cin; ++ci)
      for (int iy = 0; iy < H; ++iy)
        for (int ix = 0; ix < W; ++ix)
          for (int co = 0; co < cout; ++co)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int y = iy * s - pad + ky, x = ix * s - pad + kx;
                if (y < 0 || y >= Ho || x < 0 || x >= Wo) continue;
                Y((co * Ho + y) * Wo + x, b) += Wt((co * k + ky) * k + kx, ci) * X((ci * H + iy) * W + ix, b);
              }
  }
  return Y;
}

std::vector<double> random_params(Eigen::Index n, CounterRng& rng) {
  std::vector<double> p(static_cast<std::size_t>(n));
  for (auto& v : p) v = rng.normal() * 0.5;
  return p;
}

// Backprop through a single layer against central differences of L = <G, f(X)>.
void check_layer_gradient(const nn::Layer& layer, std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<double> p = random_params(layer.param_count(), rng);
  const DenseMatrix X = random_matrix(layer.in_dim(), 3, rng);
  const DenseMatrix G = random_matrix(layer.out_dim(), 3, rng);
  const DenseMatrix Y = layer.forward(p.data(), X);
  std::vector<double> g(p.size(), 0.0);
  const DenseMatrix dX = layer.backward(p.data(), X, Y, G, g.data());
  const double h = 1e-5;
  auto L = [&](const std::vector<double>& q, const DenseMatrix& Z) { return (G.array() * layer.forward(q.data(), Z).array()).sum(); };

  for (int t = 0; t < 20 && !p.empty(); ++t) {
    const auto i = static_cast<std::size_t>(rng.below(p.size()));
    auto pp = p, pm = p;
    pp[i] += h;
    pm[i] -= h;
    const double fd = (L(pp, X) - L(pm, X)) / (2 * h);
    CHECK(std::abs(fd - g[i]) <= 1e-4 * std::max(1.0, std::abs(g[i])));
  }
  for (int t = 0; t < 20; ++t) {
    const Eigen::Index r = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(X.rows())));
    const Eigen::Index c = static_cast<Eigen::Index>(rng.below(3));
    DenseMatrix Xp = X, Xm = X;
    Xp(r, c) += h;
    Xm(r, c) -= h;
    const double fd = (L(p, Xp) - L(p, Xm)) / (2 * h);
    CHECK(std::abs(fd - dX(r, c)) <= 1e-4 * std::max(1.0, std::abs(dX(r, c))));
  }
}

NetworkSpec small_spec(int in, int out, DecoderKind kind) {
  NetworkSpec s = NetworkSpec::make(in, out, kind);
  s.dfnn_widths = {6, 6};
  s.conv_channels = 2;
  s.dense_width = 7;
  s.dense_depth = 2;
  s.validate();
  return s;
}

double relative_fd_error(const NetworkModel& model, const std::vector<double>& w, const DenseMatrix& X,
                         const DenseMatrix& Y, double omega, std::uint64_t seed) {
  std::vector<double> g;
  loss_eval(model, w, X, Y, omega, &g);
  CounterRng rng(seed);
  const double h = 1e-5;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto i = static_cast<std::size_t>(rng.below(w.size()));
    auto wp = w, wm = w;
    wp[i] += h;
    wm[i] -= h;
    const double fd = (loss_eval(model, wp, X, Y, omega).total - loss_eval(model, wm, X, Y, omega).total) / (2 * h);
    const double scale = std::max(std::abs(g[i]), 1e-6);
    worst = std::max(worst, std::abs(fd - g[i]) / scale);
  }
  return worst;
}

}  // namespace

TEST_SUITE("dnn-surrogate") {

TEST_CASE("standardization statistics and roundtrip") {
  const DenseMatrix X{{1, 2, 3}, {5, 5, 5}};
  const NormStats s = standardize_fit(X);
  CHECK(s.mean[0] == 2.0);
  CHECK(s.sd[0] == doctest::Approx(1.0));
  CHECK(s.sd[1] == 1.0);  // constant row
  const DenseMatrix Z = standardize_apply(s, X);
  CHECK(Z(0, 0) == doctest::Approx(-1.0));
  CHECK(Z(1, 2) == 0.0);

  CounterRng rng(1);
  for (int t = 0; t < 10; ++t) {
    DenseMatrix A = random_matrix(4, 9, rng) * 1e3;
    A.row(2).array() += 5e4;
    const NormStats st = standardize_fit(A);
    const DenseMatrix Za = standardize_apply(st, A);
    CHECK(Za.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK((standardize_invert(st, Za) - A).cwiseAbs().maxCoeff() <= 1e-12 * A.cwiseAbs().maxCoeff());
  }
  CHECK_THROWS_AS(standardize_fit(DenseMatrix(3, 0)), InvalidArgument);
  CHECK_THROWS_AS(standardize_apply(s, DenseMatrix::Ones(3, 1)), InvalidArgument);
}

TEST_CASE("reshape and padding") {
  CHECK(padded_side(1) == 1);
  CHECK(padded_side(9) == 3);
  CHECK(padded_side(10) == 4);
  CHECK(padded_side(100) == 10);
  CHECK_THROWS_AS(padded_side(0), InvalidArgument);
  const DenseMatrix g = reshape_pad(Vector{{1, 2, 3, 4, 5}}, 3);
  CHECK(g == DenseMatrix{{1, 2, 3}, {4, 5, 0}, {0, 0, 0}});
  CounterRng rng(2);
  for (Eigen::Index n : {1, 7, 16, 50}) {
    const Vector x = random_vector(n, rng);
    CHECK(unpad_flatten(reshape_pad(x, padded_side(n)), n) == x);
  }
  CHECK_THROWS_AS(reshape_pad(Vector::Ones(10), 3), InvalidArgument);
}

TEST_CASE("dense layer equals W x + b") {
  auto layer = nn::dense(3, 2);
  const std::vector<double> p{1, 4, 2, 5, 3, 6, 0.5, -0.5};  // column-major W then b
  const DenseMatrix X{{1, 0}, {1, 1}, {1, 2}};
  const DenseMatrix W{{1, 2, 3}, {4, 5, 6}};
  DenseMatrix expect = W * X;
  expect.row(0).array() += 0.5;
  expect.row(1).array() -= 0.5;
  CHECK(layer->forward(p.data(), X) == expect);
  CHECK(layer->param_count() == 8);
}

TEST_CASE("elu values") {
  auto layer = nn::elu(3);
  const DenseMatrix X{{-1.0}, {0.0}, {2.0}};
  const DenseMatrix Y = layer->forward(nullptr, X);
  CHECK(Y(0, 0) == doctest::Approx(std::exp(-1.0) - 1.0));
  CHECK(Y(1, 0) == 0.0);
  CHECK(Y(2, 0) == 2.0);
}

TEST_CASE("convolution layers match direct loops") {
  CounterRng rng(3);
  struct Geo { int cin, cout, h, w, k, s, p; };
  for (const Geo g : {Geo{1, 2, 5, 5, 3, 1, 1}, Geo{2, 3, 8, 8, 3, 2, 1}, Geo{3, 1, 6, 4, 3, 2, 0}}) {
    auto conv = nn::conv2d(g.cin, g.cout, g.h, g.w, g.k, g.s, g.p);
    const auto p = random_params(conv->param_count(), rng);
    const DenseMatrix X = random_matrix(conv->in_dim(), 2, rng);
    CHECK(rel_diff(conv->forward(p.data(), X), naive_conv(p, X, g.cin, g.cout, g.h, g.w, g.k, g.s, g.p)) < 1e-13);
  }
  struct GeoT { int cin, cout, h, w, k, s, p, op; };
  for (const GeoT g : {GeoT{2, 2, 2, 2, 3, 2, 1, 1}, GeoT{1, 3, 3, 4, 3, 2, 1, 0}, GeoT{3, 1, 4, 4, 3, 1, 1, 0}}) {
    auto ct = nn::conv_transpose2d(g.cin, g.cout, g.h, g.w, g.k, g.s, g.p, g.op);
    const auto p = random_params(ct->param_count(), rng);
    const DenseMatrix X = random_matrix(ct->in_dim(), 2, rng);
    CHECK(rel_diff(ct->forward(p.data(), X), naive_conv_t(p, X, g.cin, g.cout, g.h, g.w, g.k, g.s, g.p, g.op)) < 1e-13);
  }
  // output side (h-1)s - 2p + k + outpad
  CHECK(nn::conv_transpose2d(8, 8, 3, 3, 3, 2, 1, 1)->out_dim() == 8 * 6 * 6);
  CHECK_THROWS_AS(nn::conv_transpose2d(1, 1, 2, 2, 3, 2, 1, 2), InvalidArgument);
  CHECK_THROWS_AS(nn::conv2d(1, 1, 2, 2, 5, 1, 0), InvalidArgument);
}

TEST_CASE("select and scatter are adjoint index maps") {
  auto sel = nn::select(5, {4, 0, 2});
  auto sca = nn::scatter(5, {4, 0, 2});
  const DenseMatrix X{{1}, {2}, {3}, {4}, {5}};
  CHECK(sel->forward(nullptr, X) == DenseMatrix{{5}, {1}, {3}});
  CHECK(sca->forward(nullptr, DenseMatrix{{5}, {1}, {3}}) == DenseMatrix{{1}, {0}, {3}, {0}, {5}});
  CHECK_THROWS_AS(nn::select(3, {3}), InvalidArgument);
}

TEST_CASE("layer backprop matches finite differences") {
  SUBCASE("dense") { check_layer_gradient(*nn::dense(5, 4), 11); }
  SUBCASE("elu") { check_layer_gradient(*nn::elu(6), 12); }
  SUBCASE("conv") { check_layer_gradient(*nn::conv2d(2, 3, 6, 6, 3, 2, 1), 13); }
  SUBCASE("conv transpose") { check_layer_gradient(*nn::conv_transpose2d(3, 2, 3, 3, 3, 2, 1, 1), 14); }
  SUBCASE("select") { check_layer_gradient(*nn::select(7, {6, 1, 3}), 15); }
  SUBCASE("scatter") { check_layer_gradient(*nn::scatter(7, {6, 1, 3}), 16); }
}

TEST_CASE("sequential rejects mismatched layers and reports non-finite activations") {
  nn::Sequential s;
  s.add(nn::dense(2, 3));
  CHECK_THROWS_AS(s.add(nn::dense(4, 1)), InvalidArgument);
  std::vector<double> p(static_cast<std::size_t>(s.param_count()), 1e308);
  try {
    s.forward(p.data(), DenseMatrix::Constant(2, 1, 1e308));
    FAIL("expected divergence");
  } catch (const Divergence& e) {
    CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
  }
  CHECK_THROWS_AS(s.forward(p.data(), DenseMatrix::Ones(3, 1)), InvalidArgument);
}

TEST_CASE("network architecture") {
  const NetworkSpec conv = NetworkSpec::make(5, 100);
  CHECK(conv.latent_dim == 5);
  CHECK(conv.padded_side == 10);
  CHECK(conv.resolved_decoder() == DecoderKind::Conv);
  CHECK(conv.coarse_side() == 3);
  const NetworkModel m(conv);
  CHECK(m.dfnn.in_dim() == 5);
  CHECK(m.dfnn.out_dim() == 5);
  CHECK(m.decoder.in_dim() == 5);
  CHECK(m.decoder.out_dim() == 100);
  CHECK(m.encoder.in_dim() == 100);
  CHECK(m.encoder.out_dim() == 5);
  CHECK(NetworkSpec::make(5, 16).resolved_decoder() == DecoderKind::Dense);
  CHECK(NetworkSpec::make(5, 17).resolved_decoder() == DecoderKind::Conv);
  NetworkSpec bad = conv;
  bad.activation = "relu";
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad = conv;
  bad.padded_side = 9;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("descriptor roundtrip") {
  NetworkSpec s = NetworkSpec::make(6, 49, DecoderKind::Dense);
  s.dfnn_widths = {10, 20, 30};
  s.dense_width = 12;
  const NetworkSpec r = NetworkSpec::parse(s.descriptor());
  CHECK(r.descriptor() == s.descriptor());
  CHECK(r.dfnn_widths == s.dfnn_widths);
  CHECK(r.decoder == DecoderKind::Dense);
  CHECK_THROWS_AS(NetworkSpec::parse("other/1 input=3"), FormatError);
  CHECK_THROWS_AS(NetworkSpec::parse("hyromnet/1 input=x"), FormatError);
  CHECK_THROWS_AS(NetworkSpec::parse("hyromnet/1 input=3 latent=3 output=4 side=1"), FormatError);
}

TEST_CASE("zero weights predict the training mean") {
  CounterRng rng(4);
  const DenseMatrix X = random_matrix(4, 30, rng);
  const DenseMatrix Y = random_matrix(9, 30, rng) * 3.0;
  Surrogate s;
  s.spec = small_spec(4, 9, DecoderKind::Dense);
  s.input_stats = standardize_fit(X);
  s.output_stats = standardize_fit(Y);
  s.weights.values.assign(static_cast<std::size_t>(NetworkModel(s.spec).param_count()), 0.0);
  const DenseMatrix out = s.forward(X);
  for (Eigen::Index j = 0; j < out.cols(); ++j) CHECK((out.col(j) - s.output_stats.mean).norm() < 1e-14);
  s.weights.values.pop_back();
  CHECK_THROWS_AS(s.forward(X), InvalidArgument);
}

TEST_CASE("linear layer on standardized input matches a matrix-product oracle") {
  nn::Sequential lin;
  lin.add(nn::dense(3, 2));
  const std::vector<double> p{1, 0, -1, 2, 0.5, 0.5, 0.1, 0.2};
  const DenseMatrix W{{1, -1, 0.5}, {0, 2, 0.5}};
  const Vector b{{0.1, 0.2}};
  CounterRng rng(5);
  const DenseMatrix X = random_matrix(3, 40, rng);
  const NormStats in = standardize_fit(X);
  const NormStats out{Vector{{3.0, -1.0}}, Vector{{2.0, 0.5}}};
  const DenseMatrix Xs = standardize_apply(in, X);
  DenseMatrix expect = W * Xs;
  expect.colwise() += b;
  expect.row(0) = expect.row(0) * 2.0 + DenseMatrix::Constant(1, 40, 3.0);
  expect.row(1) = expect.row(1) * 0.5 - DenseMatrix::Constant(1, 40, 1.0);
  CHECK(rel_diff(standardize_invert(out, lin.forward(p.data(), Xs)), expect) < 1e-15);
}

TEST_CASE("loss endpoints in omega") {
  const NetworkSpec spec = small_spec(3, 9, DecoderKind::Dense);
  const NetworkModel model(spec);
  const auto w = init_weights(spec, 3).values;
  CounterRng rng(6);
  const DenseMatrix X = random_matrix(3, 8, rng), Y = random_matrix(9, 8, rng);
  const LossParts one = loss_eval(model, w, X, Y, 1.0);
  const LossParts zero = loss_eval(model, w, X, Y, 0.0);
  const LossParts half = loss_eval(model, w, X, Y, 0.5);
  CHECK(one.total == one.reconstruction);
  CHECK(one.latent == 0.0);
  CHECK(zero.total == zero.latent);
  CHECK(half.total == doctest::Approx(0.5 * half.reconstruction + 0.5 * half.latent));
  CHECK(half.reconstruction == one.reconstruction);

  // hand-evaluated reconstruction term
  const DenseMatrix Rh = model.decoder.forward(w.data() + model.decoder_offset(), model.dfnn.forward(w.data(), X));
  CHECK(one.reconstruction == doctest::Approx(0.5 * (Rh - Y).squaredNorm() / 8.0));
  CHECK_THROWS_AS(loss_eval(model, w, X, Y.leftCols(7), 0.5), InvalidArgument);
}

TEST_CASE("perfect reconstruction on a single sample gives zero loss") {
  // Zero weights: DFNN and encoder output 0 and the decoder outputs 0, so the target 0 is exact.
  const NetworkSpec spec = small_spec(3, 9, DecoderKind::Dense);
  const NetworkModel model(spec);
  const std::vector<double> w(static_cast<std::size_t>(model.param_count()), 0.0);
  const LossParts l = loss_eval(model, w, DenseMatrix::Ones(3, 1), DenseMatrix::Zero(9, 1), 0.5);
  CHECK(l.total == 0.0);
}

TEST_CASE("loss gradient matches finite differences for both decoders") {
  CounterRng rng(7);
  for (auto kind : {DecoderKind::Dense, DecoderKind::Conv}) {
    const NetworkSpec spec = small_spec(4, kind == DecoderKind::Conv ? 60 : 12, kind);
    const NetworkModel model(spec);
    const auto w = init_weights(spec, 8).values;
    const DenseMatrix X = random_matrix(4, 6, rng), Y = random_matrix(spec.output_dim, 6, rng);
    for (double omega : {0.0, 0.5, 1.0}) {
      const double err = relative_fd_error(model, w, X, Y, omega, 9);
      MESSAGE("decoder " << std::string(kind == DecoderKind::Conv ? "conv" : "dense") << " omega " << omega << ": " << err);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("init is seeded and layered") {
  const NetworkSpec spec = small_spec(4, 30, DecoderKind::Conv);
  const auto a = init_weights(spec, 1), b = init_weights(spec, 1), c = init_weights(spec, 2);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
  const NetworkModel m(spec);
  CHECK(a.offsets == std::vector<std::int64_t>{0, m.decoder_offset(), m.encoder_offset()});
}

TEST_CASE("training reduces the loss and is reproducible") {
  CounterRng rng(10);
  const Eigen::Index n = 120;
  DenseMatrix X(3, n), Y(9, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    X.col(j) = Vector{{rng.uniform(-1, 1), rng.uniform(0, 2), static_cast<double>(rng.below(4))}};
    for (int i = 0; i < 9; ++i) Y(i, j) = std::sin(X(0, j) * (i + 1)) + 0.3 * X(1, j) * X(2, j);
  }
  const NetworkSpec spec = small_spec(3, 9, DecoderKind::Dense);
  TrainConfig cfg;
  cfg.Ne = 40;
  cfg.Nb = 16;
  cfg.seed = 5;
  const TrainResult r1 = train(X, Y, spec, cfg);
  const TrainResult r2 = train(X, Y, spec, cfg);
  CHECK(r1.surrogate.weights.values == r2.surrogate.weights.values);
  CHECK(r1.history.epochs.size() == 41);
  CHECK(r1.history.epochs.back().train_loss < r1.history.epochs.front().train_loss);
  CHECK(r1.surrogate.max_newton_index == 3);
  // statistics come from the training split, so they differ from the full-data ones
  CHECK(r1.surrogate.input_stats.mean != standardize_fit(X).mean);

  std::ostringstream os;
  write_history_csv(os, r1.history);
  CHECK(os.str().rfind("epoch,train_loss,val_loss\n0,", 0) == 0);

  cfg.seed = 6;
  CHECK(train(X, Y, spec, cfg).surrogate.weights.values != r1.surrogate.weights.values);
}

TEST_CASE("training argument errors") {
  const NetworkSpec spec = small_spec(3, 9, DecoderKind::Dense);
  TrainConfig cfg;
  CHECK_THROWS_AS(train(DenseMatrix::Ones(3, 5), DenseMatrix::Ones(9, 4), spec, cfg), InvalidArgument);
  CHECK_THROWS_AS(train(DenseMatrix::Ones(2, 5), DenseMatrix::Ones(9, 5), spec, cfg), InvalidArgument);
  CHECK_THROWS_AS(train(DenseMatrix(3, 0), DenseMatrix(9, 0), spec, cfg), InvalidArgument);
  DenseMatrix bad = DenseMatrix::Ones(3, 5);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(train(bad, DenseMatrix::Ones(9, 5), spec, cfg), InvalidArgument);
  for (auto mutate : std::vector<std::function<void(TrainConfig&)>>{
           [](TrainConfig& c) { c.alpha = 1.0; }, [](TrainConfig& c) { c.Nb = 0; },
           [](TrainConfig& c) { c.omega = 1.5; }, [](TrainConfig& c) { c.eta = 0.0; },
           [](TrainConfig& c) { c.patience = 0; }}) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
  }
}

TEST_CASE("teacher-student recovery") {
  // Targets come from a randomly initialised network of the same spec.
  NetworkSpec spec = NetworkSpec::make(3, 9, DecoderKind::Dense);
  spec.dfnn_widths = {30, 30};
  spec.dense_width = 30;
  spec.dense_depth = 2;
  const NetworkModel model(spec);
  const auto teacher = init_weights(spec, 77).values;
  CounterRng rng(12);
  const Eigen::Index n = 2000;
  DenseMatrix X(3, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (int i = 0; i < 3; ++i) X(i, j) = rng.uniform(-1.0, 1.0);
  const DenseMatrix Y =
      model.decoder.forward(teacher.data() + model.decoder_offset(), model.dfnn.forward(teacher.data(), X));

  TrainConfig cfg;
  cfg.omega = 1.0;
  cfg.Ne = 2000;
  cfg.Nb = 32;
  cfg.eta = 2e-3;
  cfg.patience = 2000;  // the full epoch budget, no early stop
  cfg.seed = 1;
  const TrainResult r = train(X, Y, spec, cfg);
  // with omega = 1 the loss is half the squared error on standardized targets (unit variance per row)
  const double val = r.history.epochs[static_cast<std::size_t>(r.history.best_epoch)].val_loss;
  const double rel = 2.0 * val / static_cast<double>(spec.output_dim);
  MESSAGE("teacher-student relative validation mse " << rel << " after " << r.history.epochs.size() - 1 << " epochs");
  CHECK(rel < 1e-4);
}

}  // TEST_SUITE
