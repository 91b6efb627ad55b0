#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "hyrom/linalg.hpp"
#include "hyrom/rng.hpp"

namespace hyrom {

struct NormStats {
  Vector mean;
  Vector sd;  // zero spreads are stored as 1
};

/// Per-row mean and sample standard deviation (denominator n-1) of the columns of X.
NormStats standardize_fit(const DenseMatrix& X);
DenseMatrix standardize_apply(const NormStats& s, const DenseMatrix& X);
DenseMatrix standardize_invert(const NormStats& s, const DenseMatrix& Z);

/// Row-major fill of an s x s grid with trailing zeros.
DenseMatrix reshape_pad(const Vector& x, int side);
Vector unpad_flatten(const DenseMatrix& grid, Eigen::Index length);

/// Smallest s with s*s >= n.
int padded_side(Eigen::Index n);

namespace nn {

/// One differentiable map on column batches (features x batch). Layers hold no
/// trainable state; parameters live in an external flat array.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Eigen::Index in_dim() const = 0;
  virtual Eigen::Index out_dim() const = 0;
  virtual Eigen::Index param_count() const { return 0; }
  virtual std::string describe() const = 0;
  virtual void init(double* /*p*/, CounterRng& /*rng*/) const {}
  virtual DenseMatrix forward(const double* p, const DenseMatrix& X) const = 0;
  /// Returns dL/dX and adds dL/dp into g.
  virtual DenseMatrix backward(const double* p, const DenseMatrix& X, const DenseMatrix& Y, const DenseMatrix& dY,
                               double* g) const = 0;
};

struct Tape {
  std::vector<DenseMatrix> acts;  // acts[i] is the input of layer i; acts.back() the output
};

class Sequential {
 public:
  void add(std::unique_ptr<Layer> layer);
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  Eigen::Index param_count() const { return total_; }
  Eigen::Index in_dim() const { return layers_.front()->in_dim(); }
  Eigen::Index out_dim() const { return layers_.back()->out_dim(); }

  void init(double* p, std::uint64_t seed, std::uint64_t stream) const;
  DenseMatrix forward(const double* p, const DenseMatrix& X, Tape* tape = nullptr) const;
  DenseMatrix backward(const double* p, const Tape& tape, const DenseMatrix& dY, double* g) const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index total_ = 0;
};

std::unique_ptr<Layer> dense(Eigen::Index in, Eigen::Index out);
std::unique_ptr<Layer> elu(Eigen::Index dim);
/// Convolution with square kernel k, stride s, zero padding pad on a channels x h x w map.
std::unique_ptr<Layer> conv2d(int cin, int cout, int h, int w, int k, int s, int pad);
/// Transposed convolution; output side (h-1)s - 2pad + k + outpad.
std::unique_ptr<Layer> conv_transpose2d(int cin, int cout, int h, int w, int k, int s, int pad, int outpad);
/// out[i] = in[idx[i]].
std::unique_ptr<Layer> select(Eigen::Index in, std::vector<std::int32_t> idx);
/// out[idx[i]] = in[i], zeros elsewhere.
std::unique_ptr<Layer> scatter(Eigen::Index out, std::vector<std::int32_t> idx);

}  // namespace nn

enum class DecoderKind { Auto, Conv, Dense };

struct NetworkSpec {
  int input_dim = 0;
  int latent_dim = 0;
  int output_dim = 0;
  int padded_side = 0;
  std::vector<int> dfnn_widths{50, 50, 50, 50};
  std::string activation = "elu";
  DecoderKind decoder = DecoderKind::Auto;
  int conv_channels = 8;
  int kernel = 3;
  int stride = 2;
  int dense_width = 100;
  int dense_depth = 3;

  /// Default architecture for the given sizes; latent_dim = input_dim.
  static NetworkSpec make(int input_dim, int output_dim, DecoderKind decoder = DecoderKind::Auto);
  /// Conv unless requested otherwise or the grid is at most 4 x 4.
  DecoderKind resolved_decoder() const;
  /// Side b of the coarse feature map; the conv stack works on a 4b x 4b grid.
  int coarse_side() const;
  void validate() const;

  std::string descriptor() const;
  static NetworkSpec parse(const std::string& descriptor);
};

/// The three sub-networks built from a spec.
struct NetworkModel {
  nn::Sequential dfnn;
  nn::Sequential decoder;
  nn::Sequential encoder;

  explicit NetworkModel(const NetworkSpec& spec);
  Eigen::Index param_count() const { return dfnn.param_count() + decoder.param_count() + encoder.param_count(); }
  Eigen::Index decoder_offset() const { return dfnn.param_count(); }
  Eigen::Index encoder_offset() const { return dfnn.param_count() + decoder.param_count(); }
  std::vector<std::string> describe() const;
};

struct NetworkWeights {
  std::vector<double> values;
  std::vector<std::int64_t> offsets;  // start of dfnn, decoder, encoder
  std::uint64_t seed = 0;
};

NetworkWeights init_weights(const NetworkSpec& spec, std::uint64_t seed);

struct LossParts {
  double total = 0.0;
  double reconstruction = 0.0;
  double latent = 0.0;
};

/// Batch mean of omega/2 |R - R~|^2 + (1-omega)/2 |R~_q - R_q|^2 on standardized data.
/// When grad is non-null it receives dLoss/dweights (overwritten).
LossParts loss_eval(const NetworkModel& model, const std::vector<double>& w, const DenseMatrix& inputs,
                    const DenseMatrix& targets, double omega, std::vector<double>* grad = nullptr);

struct TrainConfig {
  double alpha = 0.9;
  double eta = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int Nb = 64;
  int Ne = 2000;
  double omega = 0.5;
  int patience = 200;
  std::uint64_t seed = 0;
  double max_seconds = 0.0;  // 0: no wall-clock cap

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;  // epoch 0 holds the losses at initialization
  int best_epoch = 0;
  bool early_stopped = false;
  bool time_capped = false;
  double wall_seconds = 0.0;
};

struct Surrogate {
  NetworkSpec spec;
  NetworkWeights weights;
  NormStats input_stats;
  NormStats output_stats;
  int max_newton_index = 0;  // largest k seen in training

  /// Standardize, DFNN, decoder, unpad, de-standardize. Columns of X are (mu, t, k).
  DenseMatrix forward(const DenseMatrix& X) const;
  Vector forward(const Vector& x) const;

 private:
  mutable std::shared_ptr<const NetworkModel> model_;
  const NetworkModel& model() const;
};

struct TrainResult {
  Surrogate surrogate;
  TrainHistory history;
};

/// Shuffle, split, standardize with training statistics, minibatch Adam with early stopping.
TrainResult train(const DenseMatrix& inputs, const DenseMatrix& targets, const NetworkSpec& spec,
                  const TrainConfig& config);

void write_history_csv(std::ostream& os, const TrainHistory& h);

struct SurrogatePair {
  Surrogate rho;   // reduced residual
  Surrogate iota;  // vec of reduced Jacobian
};

}  // namespace hyrom
