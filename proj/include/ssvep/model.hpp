#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssvep/features.hpp"
#include "ssvep/layers.hpp"

namespace ssvep {

struct ModelConfig {
  int input_dim = 80;
  int seq_len = 6;
  int conv_channels = 32;
  int conv_kernel = 3;
  int conv_stride = 1;
  int lstm_hidden = 32;  // per direction
  int n_heads = 4;
  int d_k = 16;
  int n_classes = 4;
  double dropout = 0.1;
  // false turns the attention block into an identity (the CNN-BiLSTM
  // ablation); everything else stays the same.
  bool use_attention = true;

  int d_model() const { return 2 * lstm_hidden; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// conv1d + ReLU + dropout -> BiLSTM -> multi-head attention -> temporal
// mean-pool -> affine head.
class MacnnBilstm {
 public:
  MacnnBilstm(const ModelConfig& cfg, std::uint64_t seed);

  // batch [B, T_seq, input_dim] -> logits [B, n_classes]
  Tensor forward(const Tensor& batch, bool training);
  // dlogits -> gradient w.r.t. the input batch; parameter grads accumulate.
  Tensor backward(const Tensor& dlogits);

  std::vector<std::pair<std::string, Tensor*>> parameters();
  void zero_grad();
  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  Conv1d conv_;
  BiLstm lstm_;
  MultiHeadAttention attn_;
  Affine head_;
  Relu relu_;
  Dropout drop_conv_, drop_attn_;
  MeanPoolTime pool_;
  Rng dropout_rng_;
  std::vector<std::size_t> in_shape_, conv_out_shape_;
};

// Assembles [B, T, D] from feature sequences (their labels ride along in
// the returned target vector).
Tensor batch_tensor(const std::vector<FeatureSequence>& items,
                    std::span<const std::size_t> indices, std::vector<int>* targets);

}  // namespace ssvep
