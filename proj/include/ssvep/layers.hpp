#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "ssvep/rng.hpp"
#include "ssvep/tensor.hpp"

namespace ssvep {

// Layers own their parameters, cache the forward pass, and on backward()
// accumulate parameter gradients and return the input gradient.

// Valid cross-correlation along the last axis: [B, C_in, L] -> [B, C_out, L_out].
class Conv1d {
 public:
  Conv1d(int in_channels, int out_channels, int kernel, int stride, Rng& init);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

  Tensor weight;  // [C_out, C_in, K]
  Tensor bias;    // [C_out]

  int out_length(int in_length) const { return (in_length - kernel_) / stride_ + 1; }

 private:
  int in_ch_, out_ch_, kernel_, stride_;
  Tensor x_;  // forward cache
};

// Single-direction LSTM over [B, T, D] -> [B, T, H]. With reverse=true the
// sequence is processed back-to-front and outputs stay at their original
// time positions. Gate order in the stacked parameters: input, forget,
// candidate, output; forget bias initialized to +1.
class Lstm {
 public:
  Lstm(int input_dim, int hidden, Rng& init);

  Tensor forward(const Tensor& x, bool reverse);
  Tensor backward(const Tensor& dout);

  Tensor w_ih;  // [4H, D]
  Tensor w_hh;  // [4H, H]
  Tensor bias;  // [4H]

  int hidden() const { return hidden_; }

 private:
  int input_dim_, hidden_;
  bool reverse_ = false;
  Tensor x_;
  // per processing step: gate activations, cell states, tanh(c)
  std::vector<RowMat> i_, f_, g_, o_, c_, tanh_c_, h_prev_, c_prev_;
};

// Forward and backward passes concatenated on the feature axis:
// [B, T, D] -> [B, T, 2H].
class BiLstm {
 public:
  BiLstm(int input_dim, int hidden, Rng& init);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

  Lstm fw, bw;
};

// softmax(Q K^T / sqrt(d_k)) V for one head, no projections. Returns the
// output and the attention weight matrix.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> attention_core(const Eigen::MatrixXd& q,
                                                           const Eigen::MatrixXd& k,
                                                           const Eigen::MatrixXd& v);

// Multi-head self-attention with learned Q/K/V/output projections:
// [B, T, D] -> [B, T, D] where D = n_heads * d_k.
class MultiHeadAttention {
 public:
  MultiHeadAttention(int d_model, int n_heads, Rng& init);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

  Tensor wq, wk, wv, wo;  // [D, D], row-vector convention (y = x W + b)
  Tensor bq, bk, bv, bo;  // [D]

  // Attention weights of the most recent forward: one [T, T] matrix per
  // (batch, head), batch-major.
  const std::vector<Eigen::MatrixXd>& last_weights() const { return attn_; }

 private:
  int d_model_, n_heads_, d_k_;
  Tensor x_;
  std::vector<RowMat> q_, k_, v_;        // per batch: [T, D]
  std::vector<Eigen::MatrixXd> attn_;    // per (batch, head): [T, T]
  Tensor concat_;                        // [B, T, D] pre-output-projection
};

// y = x W + b on the last axis; x is treated as [rows, in].
class Affine {
 public:
  Affine(int in_dim, int out_dim, Rng& init);

  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

  Tensor weight;  // [in, out]
  Tensor bias;    // [out]

 private:
  int in_, out_;
  Tensor x_;
};

class Relu {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

 private:
  std::vector<std::uint8_t> mask_;
};

// Inverted dropout; identity when not training.
class Dropout {
 public:
  explicit Dropout(double p) : p_(p) {}

  Tensor forward(const Tensor& x, bool training, Rng& rng);
  Tensor backward(const Tensor& dout);

 private:
  double p_;
  bool active_ = false;
  std::vector<double> mask_;
};

// Mean over the time axis: [B, T, D] -> [B, D].
class MeanPoolTime {
 public:
  Tensor forward(const Tensor& x);
  Tensor backward(const Tensor& dout);

 private:
  std::size_t t_ = 0;
};

// Row-wise softmax of [B, C].
Tensor softmax_rows(const Tensor& logits);

// Mean cross-entropy over the batch; fills dlogits (same shape as logits)
// with the gradient and optionally exposes the softmax probabilities.
double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                             Tensor* dlogits, RowMat* probs = nullptr);

// Uniform fan-in initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void init_uniform(Tensor& t, int fan_in, Rng& rng);

}  // namespace ssvep
