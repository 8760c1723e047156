#include "ssvep/model.hpp"

#include "ssvep/errors.hpp"

namespace ssvep {

void ModelConfig::validate() const {
  if (input_dim < 1 || seq_len < 1 || conv_channels < 1 || lstm_hidden < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (conv_kernel < 1 || conv_kernel > seq_len) {
    throw ConfigError("conv_kernel must be in 1..seq_len");
  }
  if (conv_stride < 1) throw ConfigError("conv_stride must be >= 1");
  if (n_classes != 4) throw ConfigError("n_classes must be 4");
  if (n_heads < 1 || n_heads * d_k != d_model()) {
    throw ConfigError("n_heads * d_k must equal 2 * lstm_hidden");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must be in [0, 1)");
}

namespace {

Rng make_init_rng(std::uint64_t seed) { return Rng(seed).derive(0x6d6f64656c); }

}  // namespace

MacnnBilstm::MacnnBilstm(const ModelConfig& cfg, std::uint64_t seed)
    : cfg_((cfg.validate(), cfg)),
      conv_([&] {
        Rng r = make_init_rng(seed);
        return Conv1d(cfg.input_dim, cfg.conv_channels, cfg.conv_kernel, cfg.conv_stride, r);
      }()),
      lstm_([&] {
        Rng r = make_init_rng(seed).derive(1);
        return BiLstm(cfg.conv_channels, cfg.lstm_hidden, r);
      }()),
      attn_([&] {
        Rng r = make_init_rng(seed).derive(2);
        return MultiHeadAttention(cfg.d_model(), cfg.n_heads, r);
      }()),
      head_([&] {
        Rng r = make_init_rng(seed).derive(3);
        return Affine(cfg.d_model(), cfg.n_classes, r);
      }()),
      drop_conv_(cfg.dropout),
      drop_attn_(cfg.dropout),
      dropout_rng_(Rng(seed).derive(0x64726f70)) {}

Tensor MacnnBilstm::forward(const Tensor& batch, bool training) {
  if (batch.shape.size() != 3 || batch.shape[1] != static_cast<std::size_t>(cfg_.seq_len) ||
      batch.shape[2] != static_cast<std::size_t>(cfg_.input_dim)) {
    throw ShapeError("model input must be [B, seq_len, input_dim]");
  }
  batch.check_finite("model input");
  const std::size_t b_n = batch.shape[0];
  const auto t_n = static_cast<std::size_t>(cfg_.seq_len);
  const auto d_in = static_cast<std::size_t>(cfg_.input_dim);
  in_shape_ = batch.shape;

  // [B, T, D] -> [B, D, T] so features act as conv channels.
  Tensor x({b_n, d_in, t_n});
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t t = 0; t < t_n; ++t) {
      for (std::size_t j = 0; j < d_in; ++j) x.at(b, j, t) = batch.at(b, t, j);
    }
  }

  Tensor h = conv_.forward(x);
  conv_out_shape_ = h.shape;
  h = relu_.forward(h);
  h = drop_conv_.forward(h, training, dropout_rng_);

  // [B, C, L] -> [B, L, C] for the recurrent stack.
  const std::size_t c_n = h.shape[1], l_n = h.shape[2];
  Tensor seq({b_n, l_n, c_n});
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t c = 0; c < c_n; ++c) {
      for (std::size_t l = 0; l < l_n; ++l) seq.at(b, l, c) = h.at(b, c, l);
    }
  }

  Tensor ctx = lstm_.forward(seq);
  if (cfg_.use_attention) {
    ctx = attn_.forward(ctx);
    ctx = drop_attn_.forward(ctx, training, dropout_rng_);
  }
  Tensor pooled = pool_.forward(ctx);
  Tensor logits = head_.forward(pooled);
  logits.check_finite("logits");
  return logits;
}

Tensor MacnnBilstm::backward(const Tensor& dlogits) {
  Tensor d = head_.backward(dlogits);
  d = pool_.backward(d);
  if (cfg_.use_attention) {
    d = drop_attn_.backward(d);
    d = attn_.backward(d);
  }
  d = lstm_.backward(d);

  // [B, L, C] -> [B, C, L]
  const std::size_t b_n = d.shape[0], l_n = d.shape[1], c_n = d.shape[2];
  Tensor dh({b_n, c_n, l_n});
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t l = 0; l < l_n; ++l) {
      for (std::size_t c = 0; c < c_n; ++c) dh.at(b, c, l) = d.at(b, l, c);
    }
  }
  dh = drop_conv_.backward(dh);
  dh = relu_.backward(dh);
  Tensor dx = conv_.backward(dh);

  // [B, D, T] -> [B, T, D]
  Tensor dbatch(in_shape_);
  const std::size_t t_n = in_shape_[1], d_in = in_shape_[2];
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t t = 0; t < t_n; ++t) {
      for (std::size_t j = 0; j < d_in; ++j) dbatch.at(b, t, j) = dx.at(b, j, t);
    }
  }
  return dbatch;
}

std::vector<std::pair<std::string, Tensor*>> MacnnBilstm::parameters() {
  std::vector<std::pair<std::string, Tensor*>> params = {
      {"conv.weight", &conv_.weight},   {"conv.bias", &conv_.bias},
      {"lstm.fw.w_ih", &lstm_.fw.w_ih}, {"lstm.fw.w_hh", &lstm_.fw.w_hh},
      {"lstm.fw.bias", &lstm_.fw.bias}, {"lstm.bw.w_ih", &lstm_.bw.w_ih},
      {"lstm.bw.w_hh", &lstm_.bw.w_hh}, {"lstm.bw.bias", &lstm_.bw.bias},
  };
  if (cfg_.use_attention) {
    params.insert(params.end(), {
                                    {"attn.wq", &attn_.wq},
                                    {"attn.wk", &attn_.wk},
                                    {"attn.wv", &attn_.wv},
                                    {"attn.wo", &attn_.wo},
                                    {"attn.bq", &attn_.bq},
                                    {"attn.bk", &attn_.bk},
                                    {"attn.bv", &attn_.bv},
                                    {"attn.bo", &attn_.bo},
                                });
  }
  params.emplace_back("head.weight", &head_.weight);
  params.emplace_back("head.bias", &head_.bias);
  return params;
}

void MacnnBilstm::zero_grad() {
  for (auto& [name, p] : parameters()) {
    p->ensure_grad();
    p->zero_grad();
  }
}

Tensor batch_tensor(const std::vector<FeatureSequence>& items,
                    std::span<const std::size_t> indices, std::vector<int>* targets) {
  if (indices.empty()) throw ShapeError("empty batch");
  const std::size_t t_n = items[indices[0]].rows.size();
  const std::size_t d = items[indices[0]].rows[0].values.size();
  Tensor batch({indices.size(), t_n, d});
  if (targets) targets->clear();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const FeatureSequence& seq = items[indices[i]];
    if (seq.rows.size() != t_n) throw ShapeError("ragged sequence lengths in batch");
    for (std::size_t t = 0; t < t_n; ++t) {
      if (seq.rows[t].values.size() != d) throw ShapeError("ragged feature dims in batch");
      for (std::size_t j = 0; j < d; ++j) batch.at(i, t, j) = seq.rows[t].values[j];
    }
    if (targets) targets->push_back(seq.label);
  }
  return batch;
}

}  // namespace ssvep
