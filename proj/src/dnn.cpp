#include "hyrom/dnn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>

#include "hyrom/errors.hpp"

namespace hyrom {

NormStats standardize_fit(const DenseMatrix& X) {
  if (X.cols() < 1) throw InvalidArgument("standardize_fit: no samples");
  NormStats s;
  s.mean = X.rowwise().mean();
  s.sd.resize(X.rows());
  const Eigen::Index n = X.cols();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double ss = n > 1 ? (X.row(i).array() - s.mean[i]).square().sum() / static_cast<double>(n - 1) : 0.0;
    const double sd = std::sqrt(ss);
    s.sd[i] = sd > 0.0 ? sd : 1.0;
  }
  return s;
}

DenseMatrix standardize_apply(const NormStats& s, const DenseMatrix& X) {
  if (X.rows() != s.mean.size()) throw InvalidArgument("standardize: feature count mismatch");
  return ((X.colwise() - s.mean).array().colwise() / s.sd.array()).matrix();
}

DenseMatrix standardize_invert(const NormStats& s, const DenseMatrix& Z) {
  if (Z.rows() != s.mean.size()) throw InvalidArgument("standardize: feature count mismatch");
  return ((Z.array().colwise() * s.sd.array()).matrix()).colwise() + s.mean;
}

int padded_side(Eigen::Index n) {
  if (n < 1) throw InvalidArgument("padded_side: length must be positive");
  auto s = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  while (static_cast<Eigen::Index>(s) * s < n) ++s;
  while (s > 1 && static_cast<Eigen::Index>(s - 1) * (s - 1) >= n) --s;
  return s;
}

DenseMatrix reshape_pad(const Vector& x, int side) {
  if (side < 1 || static_cast<Eigen::Index>(side) * side < x.size())
    throw InvalidArgument("reshape_pad: side " + std::to_string(side) + " too small for length " + std::to_string(x.size()));
  DenseMatrix g = DenseMatrix::Zero(side, side);
  for (Eigen::Index j = 0; j < x.size(); ++j) g(j / side, j % side) = x[j];
  return g;
}

Vector unpad_flatten(const DenseMatrix& grid, Eigen::Index length) {
  const Eigen::Index side = grid.cols();
  if (grid.rows() != side || side * side < length) throw InvalidArgument("unpad_flatten: grid too small");
  Vector x(length);
  for (Eigen::Index j = 0; j < length; ++j) x[j] = grid(j / side, j % side);
  return x;
}

namespace nn {

namespace {

// (C*P x B) sample columns <-> (C x B*P) channel rows.
DenseMatrix to_channel_rows(const DenseMatrix& Y, Eigen::Index C, Eigen::Index P) {
  const Eigen::Index B = Y.cols();
  DenseMatrix Z(C, B * P);
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index pos = 0; pos < P; ++pos)
      for (Eigen::Index c = 0; c < C; ++c) Z(c, b * P + pos) = Y(c * P + pos, b);
  return Z;
}

DenseMatrix from_channel_rows(const DenseMatrix& Z, Eigen::Index C, Eigen::Index P) {
  const Eigen::Index B = Z.cols() / P;
  DenseMatrix Y(C * P, B);
  for (Eigen::Index b = 0; b < B; ++b)
    for (Eigen::Index pos = 0; pos < P; ++pos)
      for (Eigen::Index c = 0; c < C; ++c) Y(c * P + pos, b) = Z(c, b * P + pos);
  return Y;
}

struct PatchGeometry {
  int C, Hi, Wi;  // image
  int Ho, Wo;     // patch grid
  int k, s, p;
};

DenseMatrix im2col(const DenseMatrix& img, const PatchGeometry& g) {
  const Eigen::Index B = img.cols();
  const Eigen::Index P = static_cast<Eigen::Index>(g.Ho) * g.Wo;
  DenseMatrix cols(static_cast<Eigen::Index>(g.C) * g.k * g.k, B * P);
  for (Eigen::Index b = 0; b < B; ++b)
    for (int oy = 0; oy < g.Ho; ++oy)
      for (int ox = 0; ox < g.Wo; ++ox) {
        double* col = cols.col(b * P + oy * g.Wo + ox).data();
        int r = 0;
        for (int c = 0; c < g.C; ++c)
          for (int ky = 0; ky < g.k; ++ky) {
            const int y = oy * g.s - g.p + ky;
            for (int kx = 0; kx < g.k; ++kx, ++r) {
              const int x = ox * g.s - g.p + kx;
              col[r] = (y >= 0 && y < g.Hi && x >= 0 && x < g.Wi) ? img((c * g.Hi + y) * g.Wi + x, b) : 0.0;
            }
          }
      }
  return cols;
}

DenseMatrix col2im(const DenseMatrix& cols, const PatchGeometry& g) {
  const Eigen::Index P = static_cast<Eigen::Index>(g.Ho) * g.Wo;
  const Eigen::Index B = cols.cols() / P;
  DenseMatrix img = DenseMatrix::Zero(static_cast<Eigen::Index>(g.C) * g.Hi * g.Wi, B);
  for (Eigen::Index b = 0; b < B; ++b)
    for (int oy = 0; oy < g.Ho; ++oy)
      for (int ox = 0; ox < g.Wo; ++ox) {
        const double* col = cols.col(b * P + oy * g.Wo + ox).data();
        int r = 0;
        for (int c = 0; c < g.C; ++c)
          for (int ky = 0; ky < g.k; ++ky) {
            const int y = oy * g.s - g.p + ky;
            for (int kx = 0; kx < g.k; ++kx, ++r) {
              const int x = ox * g.s - g.p + kx;
              if (y >= 0 && y < g.Hi && x >= 0 && x < g.Wi) img((c * g.Hi + y) * g.Wi + x, b) += col[r];
            }
          }
      }
  return img;
}

void he_uniform(double* w, Eigen::Index n, double fan_in, CounterRng& rng) {
  const double lim = std::sqrt(6.0 / std::max(1.0, fan_in));
  for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.uniform(-lim, lim);
}

class DenseLayer final : public Layer {
 public:
  DenseLayer(Eigen::Index in, Eigen::Index out) : in_(in), out_(out) {}
  Eigen::Index in_dim() const override { return in_; }
  Eigen::Index out_dim() const override { return out_; }
  Eigen::Index param_count() const override { return out_ * in_ + out_; }
  std::string describe() const override { return "dense " + std::to_string(in_) + "->" + std::to_string(out_); }

  void init(double* p, CounterRng& rng) const override {
    he_uniform(p, out_ * in_, static_cast<double>(in_), rng);
    std::fill(p + out_ * in_, p + param_count(), 0.0);
  }

  // Parameters are copied out of the flat buffer: vectorized kernels on unaligned maps round
  // differently depending on the buffer address, which breaks run-to-run reproducibility.
  DenseMatrix forward(const double* p, const DenseMatrix& X) const override {
    const DenseMatrix W = Eigen::Map<const DenseMatrix>(p, out_, in_);
    const Eigen::Map<const Vector> b(p + out_ * in_, out_);
    DenseMatrix Y = W * X;
    Y.colwise() += b;
    return Y;
  }

  DenseMatrix backward(const double* p, const DenseMatrix& X, const DenseMatrix&, const DenseMatrix& dY,
                       double* g) const override {
    const DenseMatrix W = Eigen::Map<const DenseMatrix>(p, out_, in_);
    Eigen::Map<DenseMatrix> gW(g, out_, in_);
    Eigen::Map<Vector> gb(g + out_ * in_, out_);
    gW += DenseMatrix(dY * X.transpose());
    gb += Vector(dY.rowwise().sum());
    return W.transpose() * dY;
  }

 private:
  Eigen::Index in_, out_;
};

class EluLayer final : public Layer {
 public:
  explicit EluLayer(Eigen::Index d) : d_(d) {}
  Eigen::Index in_dim() const override { return d_; }
  Eigen::Index out_dim() const override { return d_; }
  std::string describe() const override { return "elu"; }

  DenseMatrix forward(const double*, const DenseMatrix& X) const override {
    return X.unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
  }

  DenseMatrix backward(const double*, const DenseMatrix& X, const DenseMatrix& Y, const DenseMatrix& dY,
                       double*) const override {
    return dY.binaryExpr(X.binaryExpr(Y, [](double x, double y) { return x > 0.0 ? 1.0 : y + 1.0; }),
                         std::multiplies<double>());
  }

 private:
  Eigen::Index d_;
};

class ConvLayer final : public Layer {
 public:
  ConvLayer(int cin, int cout, int h, int w, int k, int s, int pad)
      : cin_(cin), cout_(cout), h_(h), w_(w), k_(k), s_(s), p_(pad),
        ho_((h + 2 * pad - k) / s + 1), wo_((w + 2 * pad - k) / s + 1) {
    if (ho_ < 1 || wo_ < 1) throw InvalidArgument("conv2d: empty output");
  }
  Eigen::Index in_dim() const override { return static_cast<Eigen::Index>(cin_) * h_ * w_; }
  Eigen::Index out_dim() const override { return static_cast<Eigen::Index>(cout_) * ho_ * wo_; }
  Eigen::Index param_count() const override { return wrows() * cout_ + cout_; }
  std::string describe() const override {
    std::ostringstream os;
    os << "conv " << cin_ << "x" << h_ << "x" << w_ << "->" << cout_ << "x" << ho_ << "x" << wo_ << " k" << k_ << " s"
       << s_ << " p" << p_;
    return os.str();
  }

  void init(double* p, CounterRng& rng) const override {
    he_uniform(p, wrows() * cout_, static_cast<double>(wrows()), rng);
    std::fill(p + wrows() * cout_, p + param_count(), 0.0);
  }

  DenseMatrix forward(const double* p, const DenseMatrix& X) const override {
    const DenseMatrix W = Eigen::Map<const DenseMatrix>(p, cout_, wrows());
    const Eigen::Map<const Vector> b(p + wrows() * cout_, cout_);
    DenseMatrix Z = W * im2col(X, geom());
    Z.colwise() += b;
    return from_channel_rows(Z, cout_, static_cast<Eigen::Index>(ho_) * wo_);
  }

  DenseMatrix backward(const double* p, const DenseMatrix& X, const DenseMatrix&, const DenseMatrix& dY,
                       double* g) const override {
    const DenseMatrix W = Eigen::Map<const DenseMatrix>(p, cout_, wrows());
    Eigen::Map<DenseMatrix> gW(g, cout_, wrows());
    Eigen::Map<Vector> gb(g + wrows() * cout_, cout_);
    const DenseMatrix dZ = to_channel_rows(dY, cout_, static_cast<Eigen::Index>(ho_) * wo_);
    gW += DenseMatrix(dZ * im2col(X, geom()).transpose());
    gb += Vector(dZ.rowwise().sum());
    return col2im(W.transpose() * dZ, geom());
  }

 private:
  Eigen::Index wrows() const { return static_cast<Eigen::Index>(cin_) * k_ * k_; }
  PatchGeometry geom() const { return {cin_, h_, w_, ho_, wo_, k_, s_, p_}; }
  int cin_, cout_, h_, w_, k_, s_, p_, ho_, wo_;
};

class ConvTransposeLayer final : public Layer {
 public:
  ConvTransposeLayer(int cin, int cout, int h, int w, int k, int s, int pad, int outpad)
      : cin_(cin), cout_(cout), h_(h), w_(w), k_(k), s_(s), p_(pad), op_(outpad),
        ho_((h - 1) * s - 2 * pad + k + outpad), wo_((w - 1) * s - 2 * pad + k + outpad) {
    if (outpad >= s || ho_ < 1 || wo_ < 1) throw InvalidArgument("conv_transpose2d: bad geometry");
  }
  Eigen::Index in_dim() const override { return static_cast<Eigen::Index>(cin_) * h_ * w_; }
  Eigen::Index out_dim() const override { return static_cast<Eigen::Index>(cout_) * ho_ * wo_; }
  Eigen::Index param_count() const override { return wrows() * cin_ + cout_; }
  std::string describe() const override {
    std::ostringstream os;
    os << "conv_transpose " << cin_ << "x" << h_ << "x" << w_ << "->" << cout_ << "x" << ho_ << "x" << wo_ << " k" << k_
       << " s" << s_ << " p" << p_ << " op" << op_;
    return os.str();
  }

  void init(double* p, CounterRng& rng) const override {
    const double fan_in = static_cast<double>(cin_) * k_ * k_ / (static_cast<double>(s_) * s_);
    he_uniform(p, wrows() * cin_, fan_in, rng);
    std::fill(p + wrows() * cin_, p + param_count(), 0.0);
  }

  DenseMatrix forward(const double* p, const DenseMatrix& X) const override {
    const DenseMatrix Wt = Eigen::Map<const DenseMatrix>(p, wrows(), cin_);
    const Eigen::Map<const Vector> b(p + wrows() * cin_, cout_);
    DenseMatrix Y = col2im(Wt * to_channel_rows(X, cin_, static_cast<Eigen::Index>(h_) * w_), geom());
    const Eigen::Index P = static_cast<Eigen::Index>(ho_) * wo_;
    for (int c = 0; c < cout_; ++c) Y.middleRows(c * P, P).array() += b[c];
    return Y;
  }

  DenseMatrix backward(const double* p, const DenseMatrix& X, const DenseMatrix&, const DenseMatrix& dY,
                       double* g) const override {
    const DenseMatrix Wt = Eigen::Map<const DenseMatrix>(p, wrows(), cin_);
    Eigen::Map<DenseMatrix> gW(g, wrows(), cin_);
    Eigen::Map<Vector> gb(g + wrows() * cin_, cout_);
    const Eigen::Index P = static_cast<Eigen::Index>(ho_) * wo_;
    for (int c = 0; c < cout_; ++c) gb[c] += dY.middleRows(c * P, P).sum();
    const DenseMatrix dcols = im2col(dY, geom());
    const Eigen::Index HW = static_cast<Eigen::Index>(h_) * w_;
    gW += DenseMatrix(dcols * to_channel_rows(X, cin_, HW).transpose());
    return from_channel_rows(Wt.transpose() * dcols, cin_, HW);
  }

 private:
  Eigen::Index wrows() const { return static_cast<Eigen::Index>(cout_) * k_ * k_; }
  PatchGeometry geom() const { return {cout_, ho_, wo_, h_, w_, k_, s_, p_}; }
  int cin_, cout_, h_, w_, k_, s_, p_, op_, ho_, wo_;
};

class SelectLayer final : public Layer {
 public:
  // in_ is the size of the larger side: input for select, output for scatter.
  SelectLayer(Eigen::Index in, std::vector<std::int32_t> idx, bool scatter)
      : in_(in), idx_(std::move(idx)), scatter_(scatter) {
    for (auto i : idx_)
      if (i < 0 || i >= in_) throw InvalidArgument("select: index out of range");
  }
  Eigen::Index in_dim() const override { return scatter_ ? static_cast<Eigen::Index>(idx_.size()) : in_; }
  Eigen::Index out_dim() const override { return scatter_ ? in_ : static_cast<Eigen::Index>(idx_.size()); }
  std::string describe() const override {
    return std::string(scatter_ ? "scatter " : "select ") + std::to_string(in_dim()) + "->" + std::to_string(out_dim());
  }

  DenseMatrix forward(const double*, const DenseMatrix& X) const override { return move(X, !scatter_); }
  DenseMatrix backward(const double*, const DenseMatrix&, const DenseMatrix&, const DenseMatrix& dY,
                       double*) const override {
    return move(dY, scatter_);
  }

 private:
  DenseMatrix move(const DenseMatrix& X, bool gather) const {
    const auto m = static_cast<Eigen::Index>(idx_.size());
    if (gather) {
      DenseMatrix Y(m, X.cols());
      for (Eigen::Index i = 0; i < m; ++i) Y.row(i) = X.row(idx_[static_cast<std::size_t>(i)]);
      return Y;
    }
    DenseMatrix Y = DenseMatrix::Zero(in_, X.cols());
    for (Eigen::Index i = 0; i < m; ++i) Y.row(idx_[static_cast<std::size_t>(i)]) += X.row(i);
    return Y;
  }
  Eigen::Index in_;
  std::vector<std::int32_t> idx_;
  bool scatter_;
};

}  // namespace

std::unique_ptr<Layer> dense(Eigen::Index in, Eigen::Index out) { return std::make_unique<DenseLayer>(in, out); }
std::unique_ptr<Layer> elu(Eigen::Index dim) { return std::make_unique<EluLayer>(dim); }
std::unique_ptr<Layer> conv2d(int cin, int cout, int h, int w, int k, int s, int pad) {
  return std::make_unique<ConvLayer>(cin, cout, h, w, k, s, pad);
}
std::unique_ptr<Layer> conv_transpose2d(int cin, int cout, int h, int w, int k, int s, int pad, int outpad) {
  return std::make_unique<ConvTransposeLayer>(cin, cout, h, w, k, s, pad, outpad);
}
std::unique_ptr<Layer> select(Eigen::Index in, std::vector<std::int32_t> idx) {
  return std::make_unique<SelectLayer>(in, std::move(idx), false);
}
std::unique_ptr<Layer> scatter(Eigen::Index out, std::vector<std::int32_t> idx) {
  return std::make_unique<SelectLayer>(out, std::move(idx), true);
}

void Sequential::add(std::unique_ptr<Layer> layer) {
  if (!layers_.empty() && layers_.back()->out_dim() != layer->in_dim())
    throw InvalidArgument("sequential: " + layers_.back()->describe() + " does not feed " + layer->describe());
  offsets_.push_back(total_);
  total_ += layer->param_count();
  layers_.push_back(std::move(layer));
}

void Sequential::init(double* p, std::uint64_t seed, std::uint64_t stream) const {
  const CounterRng base = CounterRng(seed).fork(stream);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    CounterRng rng = base.fork(i);
    layers_[i]->init(p + offsets_[i], rng);
  }
}

DenseMatrix Sequential::forward(const double* p, const DenseMatrix& X, Tape* tape) const {
  if (X.rows() != in_dim())
    throw InvalidArgument("network: input has " + std::to_string(X.rows()) + " features, expected " +
                          std::to_string(in_dim()));
  if (tape) {
    tape->acts.clear();
    tape->acts.reserve(layers_.size() + 1);
    tape->acts.push_back(X);
  }
  DenseMatrix cur = X;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    cur = layers_[i]->forward(p + offsets_[i], cur);
    if (!cur.allFinite())
      throw Divergence("network: non-finite activation after layer " + std::to_string(i) + " (" +
                       layers_[i]->describe() + ")");
    if (tape) tape->acts.push_back(cur);
  }
  return cur;
}

DenseMatrix Sequential::backward(const double* p, const Tape& tape, const DenseMatrix& dY, double* g) const {
  DenseMatrix d = dY;
  for (std::size_t i = layers_.size(); i-- > 0;)
    d = layers_[i]->backward(p + offsets_[i], tape.acts[i], tape.acts[i + 1], d, g + offsets_[i]);
  return d;
}

}  // namespace nn

NetworkSpec NetworkSpec::make(int input_dim, int output_dim, DecoderKind decoder) {
  NetworkSpec s;
  s.input_dim = input_dim;
  s.latent_dim = input_dim;
  s.output_dim = output_dim;
  s.padded_side = hyrom::padded_side(output_dim);
  s.decoder = decoder;
  s.validate();
  return s;
}

DecoderKind NetworkSpec::resolved_decoder() const {
  if (decoder != DecoderKind::Auto) return decoder;
  return padded_side <= 4 ? DecoderKind::Dense : DecoderKind::Conv;
}

int NetworkSpec::coarse_side() const { return (padded_side + 3) / 4; }

void NetworkSpec::validate() const {
  if (input_dim < 1 || latent_dim < 1 || output_dim < 1) throw InvalidArgument("network spec: dimensions must be >= 1");
  if (static_cast<long>(padded_side) * padded_side < output_dim)
    throw InvalidArgument("network spec: padded side too small for output");
  if (activation != "elu") throw InvalidArgument("network spec: unsupported activation '" + activation + "'");
  if (dfnn_widths.empty()) throw InvalidArgument("network spec: DFNN needs at least one hidden layer");
  for (int w : dfnn_widths)
    if (w < 1) throw InvalidArgument("network spec: layer width must be >= 1");
  if (resolved_decoder() == DecoderKind::Conv) {
    if (kernel != 3 || stride != 2) throw InvalidArgument("network spec: conv decoder supports kernel 3, stride 2 only");
    if (conv_channels < 1) throw InvalidArgument("network spec: conv_channels must be >= 1");
  } else if (dense_width < 1 || dense_depth < 1) {
    throw InvalidArgument("network spec: dense decoder width/depth must be >= 1");
  }
}

namespace {

const char* decoder_name(DecoderKind k) {
  switch (k) {
    case DecoderKind::Conv: return "conv";
    case DecoderKind::Dense: return "dense";
    default: return "auto";
  }
}

}  // namespace

std::string NetworkSpec::descriptor() const {
  std::ostringstream os;
  os << "hyromnet/1 input=" << input_dim << " latent=" << latent_dim << " output=" << output_dim
     << " side=" << padded_side << " dfnn=";
  for (std::size_t i = 0; i < dfnn_widths.size(); ++i) os << (i ? "," : "") << dfnn_widths[i];
  os << " activation=" << activation << " decoder=" << decoder_name(decoder) << " channels=" << conv_channels
     << " kernel=" << kernel << " stride=" << stride << " dense_width=" << dense_width
     << " dense_depth=" << dense_depth;
  return os.str();
}

NetworkSpec NetworkSpec::parse(const std::string& descriptor) {
  std::istringstream is(descriptor);
  std::string tok;
  is >> tok;
  if (tok != "hyromnet/1") throw FormatError("network descriptor: unknown header '" + tok + "'");
  NetworkSpec s;
  s.dfnn_widths.clear();
  auto to_int = [](const std::string& v, const std::string& key) {
    try {
      std::size_t used = 0;
      const int x = std::stoi(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return x;
    } catch (const std::exception&) {
      throw FormatError("network descriptor: bad integer for " + key + ": '" + v + "'");
    }
  };
  while (is >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw FormatError("network descriptor: token without '=': " + tok);
    const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
    if (key == "input") s.input_dim = to_int(val, key);
    else if (key == "latent") s.latent_dim = to_int(val, key);
    else if (key == "output") s.output_dim = to_int(val, key);
    else if (key == "side") s.padded_side = to_int(val, key);
    else if (key == "dfnn") {
      std::istringstream ws(val);
      std::string w;
      while (std::getline(ws, w, ',')) s.dfnn_widths.push_back(to_int(w, key));
    } else if (key == "activation") s.activation = val;
    else if (key == "decoder") {
      if (val == "conv") s.decoder = DecoderKind::Conv;
      else if (val == "dense") s.decoder = DecoderKind::Dense;
      else if (val == "auto") s.decoder = DecoderKind::Auto;
      else throw FormatError("network descriptor: unknown decoder '" + val + "'");
    } else if (key == "channels") s.conv_channels = to_int(val, key);
    else if (key == "kernel") s.kernel = to_int(val, key);
    else if (key == "stride") s.stride = to_int(val, key);
    else if (key == "dense_width") s.dense_width = to_int(val, key);
    else if (key == "dense_depth") s.dense_depth = to_int(val, key);
    else throw FormatError("network descriptor: unknown key '" + key + "'");
  }
  try {
    s.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("network descriptor: ") + e.what());
  }
  return s;
}

NetworkModel::NetworkModel(const NetworkSpec& spec) {
  spec.validate();
  const int q = spec.latent_dim;
  const int L = spec.output_dim;
  int prev = spec.input_dim;
  for (int w : spec.dfnn_widths) {
    dfnn.add(nn::dense(prev, w));
    dfnn.add(nn::elu(w));
    prev = w;
  }
  dfnn.add(nn::dense(prev, q));

  if (spec.resolved_decoder() == DecoderKind::Conv) {
    const int b = spec.coarse_side();
    const int C = spec.conv_channels;
    const int G = 4 * b;
    std::vector<std::int32_t> idx(static_cast<std::size_t>(L));
    for (int j = 0; j < L; ++j) idx[static_cast<std::size_t>(j)] = (j / spec.padded_side) * G + j % spec.padded_side;

    decoder.add(nn::dense(q, C * b * b));
    decoder.add(nn::elu(C * b * b));
    decoder.add(nn::conv_transpose2d(C, C, b, b, 3, 2, 1, 1));
    decoder.add(nn::elu(C * 4 * b * b));
    decoder.add(nn::conv_transpose2d(C, 1, 2 * b, 2 * b, 3, 2, 1, 1));
    decoder.add(nn::select(G * G, idx));

    encoder.add(nn::scatter(G * G, idx));
    encoder.add(nn::conv2d(1, C, G, G, 3, 2, 1));
    encoder.add(nn::elu(C * 4 * b * b));
    encoder.add(nn::conv2d(C, C, 2 * b, 2 * b, 3, 2, 1));
    encoder.add(nn::elu(C * b * b));
    encoder.add(nn::dense(C * b * b, q));
  } else {
    const int w = spec.dense_width;
    prev = q;
    for (int i = 0; i < spec.dense_depth; ++i) {
      decoder.add(nn::dense(prev, w));
      decoder.add(nn::elu(w));
      prev = w;
    }
    decoder.add(nn::dense(prev, L));
    prev = L;
    for (int i = 0; i < spec.dense_depth; ++i) {
      encoder.add(nn::dense(prev, w));
      encoder.add(nn::elu(w));
      prev = w;
    }
    encoder.add(nn::dense(prev, q));
  }
}

std::vector<std::string> NetworkModel::describe() const {
  std::vector<std::string> out;
  auto list = [&](const char* name, const nn::Sequential& s) {
    for (const auto& l : s.layers()) out.push_back(std::string(name) + ": " + l->describe());
  };
  list("dfnn", dfnn);
  list("decoder", decoder);
  list("encoder", encoder);
  return out;
}

NetworkWeights init_weights(const NetworkSpec& spec, std::uint64_t seed) {
  const NetworkModel model(spec);
  NetworkWeights w;
  w.seed = seed;
  w.values.assign(static_cast<std::size_t>(model.param_count()), 0.0);
  w.offsets = {0, model.decoder_offset(), model.encoder_offset()};
  model.dfnn.init(w.values.data(), seed, 0);
  model.decoder.init(w.values.data() + model.decoder_offset(), seed, 1);
  model.encoder.init(w.values.data() + model.encoder_offset(), seed, 2);
  return w;
}

LossParts loss_eval(const NetworkModel& model, const std::vector<double>& w, const DenseMatrix& inputs,
                    const DenseMatrix& targets, double omega, std::vector<double>* grad) {
  if (inputs.cols() != targets.cols() || inputs.cols() < 1) throw InvalidArgument("loss: batch size mismatch");
  if (static_cast<Eigen::Index>(w.size()) != model.param_count()) throw InvalidArgument("loss: weight count mismatch");
  const double* p0 = w.data();
  const double* p1 = p0 + model.decoder_offset();
  const double* p2 = p0 + model.encoder_offset();
  const double B = static_cast<double>(inputs.cols());
  const bool latent = omega < 1.0;

  nn::Tape t_dfnn, t_dec, t_enc;
  const DenseMatrix Zq = model.dfnn.forward(p0, inputs, grad ? &t_dfnn : nullptr);
  const DenseMatrix Rh = model.decoder.forward(p1, Zq, grad ? &t_dec : nullptr);
  DenseMatrix Rq;
  if (latent) Rq = model.encoder.forward(p2, targets, grad ? &t_enc : nullptr);

  LossParts out;
  const DenseMatrix dR = Rh - targets;
  out.reconstruction = 0.5 * dR.squaredNorm() / B;
  DenseMatrix dL;
  if (latent) {
    dL = Zq - Rq;
    out.latent = 0.5 * dL.squaredNorm() / B;
  }
  out.total = omega * out.reconstruction + (1.0 - omega) * out.latent;

  if (grad) {
    grad->assign(w.size(), 0.0);
    double* g0 = grad->data();
    DenseMatrix dZ = model.decoder.backward(p1, t_dec, (omega / B) * dR, g0 + model.decoder_offset());
    if (latent) {
      const DenseMatrix dLat = ((1.0 - omega) / B) * dL;
      dZ += dLat;
      model.encoder.backward(p2, t_enc, -dLat, g0 + model.encoder_offset());
    }
    model.dfnn.backward(p0, t_dfnn, dZ, g0);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("train: alpha must lie in (0, 1)");
  if (Nb < 1) throw InvalidArgument("train: batch size must be >= 1");
  if (Ne < 0) throw InvalidArgument("train: epoch count must be >= 0");
  if (!(omega >= 0.0 && omega <= 1.0)) throw InvalidArgument("train: omega must lie in [0, 1]");
  if (!(eta > 0.0)) throw InvalidArgument("train: learning rate must be positive");
  if (patience < 1) throw InvalidArgument("train: patience must be >= 1");
}

const NetworkModel& Surrogate::model() const {
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  if (!model_) model_ = std::make_shared<const NetworkModel>(spec);
  return *model_;
}

DenseMatrix Surrogate::forward(const DenseMatrix& X) const {
  const NetworkModel& m = model();
  if (static_cast<Eigen::Index>(weights.values.size()) != m.param_count())
    throw InvalidArgument("surrogate: weights do not match the network spec");
  const DenseMatrix Xs = standardize_apply(input_stats, X);
  const DenseMatrix Zq = m.dfnn.forward(weights.values.data(), Xs);
  const DenseMatrix R = m.decoder.forward(weights.values.data() + m.decoder_offset(), Zq);
  return standardize_invert(output_stats, R);
}

Vector Surrogate::forward(const Vector& x) const {
  DenseMatrix X(x.size(), 1);
  X.col(0) = x;
  return forward(X).col(0);
}

namespace {

DenseMatrix gather(const DenseMatrix& A, const std::vector<Eigen::Index>& cols, std::size_t begin, std::size_t end) {
  DenseMatrix out(A.rows(), static_cast<Eigen::Index>(end - begin));
  for (std::size_t j = begin; j < end; ++j) out.col(static_cast<Eigen::Index>(j - begin)) = A.col(cols[j]);
  return out;
}

}  // namespace

TrainResult train(const DenseMatrix& inputs, const DenseMatrix& targets, const NetworkSpec& spec,
                  const TrainConfig& config) {
  config.validate();
  spec.validate();
  if (inputs.cols() != targets.cols()) throw InvalidArgument("train: input and target column counts differ");
  if (inputs.cols() < 1) throw InvalidArgument("train: empty training set");
  if (inputs.rows() != spec.input_dim || targets.rows() != spec.output_dim)
    throw InvalidArgument("train: data dimensions do not match the network spec");
  require_finite(inputs, "train inputs");
  require_finite(targets, "train targets");
  const auto t0 = std::chrono::steady_clock::now();

  const Eigen::Index n = inputs.cols();
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng = CounterRng(config.seed).fork(100);
  shuffle(perm, rng);
  Eigen::Index n_train = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::floor(config.alpha * static_cast<double>(n))));
  if (n_train >= n && n > 1) n_train = n - 1;
  const std::vector<Eigen::Index> tr_idx(perm.begin(), perm.begin() + n_train);
  const std::vector<Eigen::Index> va_idx(perm.begin() + n_train, perm.end());

  TrainResult result;
  Surrogate& sur = result.surrogate;
  sur.spec = spec;
  const DenseMatrix Xtr_raw = gather(inputs, tr_idx, 0, tr_idx.size());
  const DenseMatrix Ytr_raw = gather(targets, tr_idx, 0, tr_idx.size());
  sur.input_stats = standardize_fit(Xtr_raw);
  sur.output_stats = standardize_fit(Ytr_raw);
  sur.max_newton_index = static_cast<int>(std::lround(inputs.row(inputs.rows() - 1).maxCoeff()));
  const DenseMatrix Xtr = standardize_apply(sur.input_stats, Xtr_raw);
  const DenseMatrix Ytr = standardize_apply(sur.output_stats, Ytr_raw);
  DenseMatrix Xva, Yva;
  if (va_idx.empty()) {
    Xva = Xtr;
    Yva = Ytr;
  } else {
    Xva = standardize_apply(sur.input_stats, gather(inputs, va_idx, 0, va_idx.size()));
    Yva = standardize_apply(sur.output_stats, gather(targets, va_idx, 0, va_idx.size()));
  }

  const NetworkModel model(spec);
  NetworkWeights w = init_weights(spec, config.seed);
  std::vector<double>& theta = w.values;
  std::vector<double> best = theta, grad, m1(theta.size(), 0.0), m2(theta.size(), 0.0);
  TrainHistory& hist = result.history;

  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << "train: " << what << "; history";
    for (const auto& e : hist.epochs) os << " [" << e.epoch << ' ' << e.train_loss << ' ' << e.val_loss << ']';
    throw Divergence(os.str());
  };

  double best_val;
  try {
    const double l0 = loss_eval(model, theta, Xtr, Ytr, config.omega).total;
    best_val = loss_eval(model, theta, Xva, Yva, config.omega).total;
    hist.epochs.push_back({0, l0, best_val});
  } catch (const Divergence& e) {
    fail(e.what());
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= config.Ne; ++epoch) {
    CounterRng erng = CounterRng(config.seed).fork(1000 + static_cast<std::uint64_t>(epoch));
    shuffle(order, erng);
    double acc = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(config.Nb)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(config.Nb));
      LossParts lp;
      try {
        lp = loss_eval(model, theta, gather(Xtr, order, b0, b1), gather(Ytr, order, b0, b1), config.omega, &grad);
      } catch (const Divergence& e) {
        fail(e.what());
      }
      if (!std::isfinite(lp.total)) fail("non-finite training loss at epoch " + std::to_string(epoch));
      acc += lp.total * static_cast<double>(b1 - b0);
      ++step;
      const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m1[i] = config.beta1 * m1[i] + (1.0 - config.beta1) * grad[i];
        m2[i] = config.beta2 * m2[i] + (1.0 - config.beta2) * grad[i] * grad[i];
        theta[i] -= config.eta * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + config.adam_eps);
      }
    }
    double val = 0.0;
    try {
      val = loss_eval(model, theta, Xva, Yva, config.omega).total;
    } catch (const Divergence& e) {
      fail(e.what());
    }
    if (!std::isfinite(val)) fail("non-finite validation loss at epoch " + std::to_string(epoch));
    hist.epochs.push_back({epoch, acc / static_cast<double>(n_train), val});
    if (val < best_val) {
      best_val = val;
      best = theta;
      hist.best_epoch = epoch;
    } else if (epoch - hist.best_epoch >= config.patience) {
      hist.early_stopped = true;
      break;
    }
    if (config.max_seconds > 0.0 &&
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() > config.max_seconds) {
      hist.time_capped = true;
      break;
    }
  }
  w.values = std::move(best);
  sur.weights = std::move(w);
  hist.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void write_history_csv(std::ostream& os, const TrainHistory& h) {
  os << "epoch,train_loss,val_loss\n";
  os.precision(10);
  for (const auto& e : h.epochs) os << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
}

}  // namespace hyrom
