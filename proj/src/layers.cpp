#include "ssvep/layers.hpp"

#include <cmath>

#include "ssvep/errors.hpp"

namespace ssvep {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require(bool cond, const char* msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace

void init_uniform(Tensor& t, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : t.values) v = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(int in_channels, int out_channels, int kernel, int stride, Rng& init)
    : weight({static_cast<std::size_t>(out_channels), static_cast<std::size_t>(in_channels),
              static_cast<std::size_t>(kernel)},
             true),
      bias({static_cast<std::size_t>(out_channels)}, true),
      in_ch_(in_channels),
      out_ch_(out_channels),
      kernel_(kernel),
      stride_(stride) {
  if (kernel < 1 || stride < 1) throw ParamError("conv kernel and stride must be >= 1");
  init_uniform(weight, in_channels * kernel, init);
  init_uniform(bias, in_channels * kernel, init);
}

Tensor Conv1d::forward(const Tensor& x) {
  require(x.shape.size() == 3 && x.shape[1] == static_cast<std::size_t>(in_ch_),
          "conv1d: expected [B, C_in, L] input");
  const std::size_t b_n = x.shape[0], l = x.shape[2];
  require(l >= static_cast<std::size_t>(kernel_), "conv1d: kernel larger than input");
  const auto l_out = static_cast<std::size_t>(out_length(static_cast<int>(l)));
  x_ = x;

  Tensor out({b_n, static_cast<std::size_t>(out_ch_), l_out});
  const auto w = weight.mat(static_cast<std::size_t>(out_ch_),
                            static_cast<std::size_t>(in_ch_ * kernel_));
  RowMat cols(static_cast<Eigen::Index>(in_ch_ * kernel_), static_cast<Eigen::Index>(l_out));
  for (std::size_t b = 0; b < b_n; ++b) {
    for (int ci = 0; ci < in_ch_; ++ci) {
      for (int kk = 0; kk < kernel_; ++kk) {
        for (std::size_t lo = 0; lo < l_out; ++lo) {
          cols(ci * kernel_ + kk, static_cast<Eigen::Index>(lo)) =
              x.at(b, static_cast<std::size_t>(ci),
                   lo * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(kk));
        }
      }
    }
    MatView out_b(out.values.data() + b * static_cast<std::size_t>(out_ch_) * l_out,
                  out_ch_, static_cast<Eigen::Index>(l_out));
    out_b.noalias() = w * cols;
    for (int co = 0; co < out_ch_; ++co) {
      out_b.row(co).array() += bias.at(static_cast<std::size_t>(co));
    }
  }
  return out;
}

Tensor Conv1d::backward(const Tensor& dout) {
  const std::size_t b_n = x_.shape[0], l = x_.shape[2];
  const std::size_t l_out = dout.shape[2];
  weight.ensure_grad();
  bias.ensure_grad();

  Tensor dx(x_.shape);
  auto w = weight.mat(static_cast<std::size_t>(out_ch_),
                      static_cast<std::size_t>(in_ch_ * kernel_));
  auto dw = weight.grad_mat(static_cast<std::size_t>(out_ch_),
                            static_cast<std::size_t>(in_ch_ * kernel_));
  RowMat cols(static_cast<Eigen::Index>(in_ch_ * kernel_), static_cast<Eigen::Index>(l_out));
  RowMat dcols;
  for (std::size_t b = 0; b < b_n; ++b) {
    for (int ci = 0; ci < in_ch_; ++ci) {
      for (int kk = 0; kk < kernel_; ++kk) {
        for (std::size_t lo = 0; lo < l_out; ++lo) {
          cols(ci * kernel_ + kk, static_cast<Eigen::Index>(lo)) =
              x_.at(b, static_cast<std::size_t>(ci),
                    lo * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(kk));
        }
      }
    }
    ConstMatView dout_b(dout.values.data() + b * static_cast<std::size_t>(out_ch_) * l_out,
                        out_ch_, static_cast<Eigen::Index>(l_out));
    dw.noalias() += dout_b * cols.transpose();
    for (int co = 0; co < out_ch_; ++co) {
      bias.grad[static_cast<std::size_t>(co)] += dout_b.row(co).sum();
    }
    dcols.noalias() = w.transpose() * dout_b;
    for (int ci = 0; ci < in_ch_; ++ci) {
      for (int kk = 0; kk < kernel_; ++kk) {
        for (std::size_t lo = 0; lo < l_out; ++lo) {
          dx.at(b, static_cast<std::size_t>(ci),
                lo * static_cast<std::size_t>(stride_) + static_cast<std::size_t>(kk)) +=
              dcols(ci * kernel_ + kk, static_cast<Eigen::Index>(lo));
        }
      }
    }
  }
  (void)l;
  return dx;
}

// ------------------------------------------------------------------ Lstm

Lstm::Lstm(int input_dim, int hidden, Rng& init)
    : w_ih({static_cast<std::size_t>(4 * hidden), static_cast<std::size_t>(input_dim)}, true),
      w_hh({static_cast<std::size_t>(4 * hidden), static_cast<std::size_t>(hidden)}, true),
      bias({static_cast<std::size_t>(4 * hidden)}, true),
      input_dim_(input_dim),
      hidden_(hidden) {
  init_uniform(w_ih, input_dim, init);
  init_uniform(w_hh, hidden, init);
  init_uniform(bias, hidden, init);
  // forget-gate bias +1 stabilizes early training
  for (int j = 0; j < hidden; ++j) {
    bias.values[static_cast<std::size_t>(hidden + j)] += 1.0;
  }
}

Tensor Lstm::forward(const Tensor& x, bool reverse) {
  require(x.shape.size() == 3 && x.shape[2] == static_cast<std::size_t>(input_dim_),
          "lstm: expected [B, T, D] input");
  const std::size_t b_n = x.shape[0], t_n = x.shape[1];
  const auto h = static_cast<std::size_t>(hidden_);
  x_ = x;
  reverse_ = reverse;

  i_.assign(t_n, RowMat(b_n, h));
  f_.assign(t_n, RowMat(b_n, h));
  g_.assign(t_n, RowMat(b_n, h));
  o_.assign(t_n, RowMat(b_n, h));
  c_.assign(t_n, RowMat(b_n, h));
  tanh_c_.assign(t_n, RowMat(b_n, h));
  h_prev_.assign(t_n, RowMat(b_n, h));
  c_prev_.assign(t_n, RowMat(b_n, h));

  const auto wi = w_ih.mat(4 * h, static_cast<std::size_t>(input_dim_));
  const auto wh = w_hh.mat(4 * h, h);

  Tensor out({b_n, t_n, h});
  RowMat h_state = RowMat::Zero(b_n, h);
  RowMat c_state = RowMat::Zero(b_n, h);
  RowMat xt(b_n, static_cast<std::size_t>(input_dim_));
  RowMat z(b_n, 4 * h);

  for (std::size_t step = 0; step < t_n; ++step) {
    const std::size_t t = reverse ? t_n - 1 - step : step;
    for (std::size_t b = 0; b < b_n; ++b) {
      for (int d = 0; d < input_dim_; ++d) {
        xt(b, d) = x.at(b, t, static_cast<std::size_t>(d));
      }
    }
    h_prev_[step] = h_state;
    c_prev_[step] = c_state;
    z.noalias() = xt * wi.transpose() + h_state * wh.transpose();
    for (std::size_t b = 0; b < b_n; ++b) {
      for (std::size_t j = 0; j < h; ++j) {
        const double zi = z(b, j) + bias.at(j);
        const double zf = z(b, h + j) + bias.at(h + j);
        const double zg = z(b, 2 * h + j) + bias.at(2 * h + j);
        const double zo = z(b, 3 * h + j) + bias.at(3 * h + j);
        const double iv = sigmoid(zi), fv = sigmoid(zf), gv = std::tanh(zg),
                     ov = sigmoid(zo);
        const double cv = fv * c_state(b, j) + iv * gv;
        const double tc = std::tanh(cv);
        i_[step](b, j) = iv;
        f_[step](b, j) = fv;
        g_[step](b, j) = gv;
        o_[step](b, j) = ov;
        c_[step](b, j) = cv;
        tanh_c_[step](b, j) = tc;
        c_state(b, j) = cv;
        h_state(b, j) = ov * tc;
        out.at(b, t, j) = h_state(b, j);
        if (!std::isfinite(h_state(b, j))) {
          throw NumericError("non-finite LSTM activation");
        }
      }
    }
  }
  return out;
}

Tensor Lstm::backward(const Tensor& dout) {
  const std::size_t b_n = x_.shape[0], t_n = x_.shape[1];
  const auto h = static_cast<std::size_t>(hidden_);
  w_ih.ensure_grad();
  w_hh.ensure_grad();
  bias.ensure_grad();

  const auto wi = w_ih.mat(4 * h, static_cast<std::size_t>(input_dim_));
  const auto wh = w_hh.mat(4 * h, h);
  auto dwi = w_ih.grad_mat(4 * h, static_cast<std::size_t>(input_dim_));
  auto dwh = w_hh.grad_mat(4 * h, h);

  Tensor dx(x_.shape);
  RowMat dh_next = RowMat::Zero(b_n, h);
  RowMat dc_next = RowMat::Zero(b_n, h);
  RowMat dz(b_n, 4 * h);
  RowMat xt(b_n, static_cast<std::size_t>(input_dim_));
  RowMat dxt(b_n, static_cast<std::size_t>(input_dim_));

  for (std::size_t step = t_n; step-- > 0;) {
    const std::size_t t = reverse_ ? t_n - 1 - step : step;
    for (std::size_t b = 0; b < b_n; ++b) {
      for (int d = 0; d < input_dim_; ++d) {
        xt(b, d) = x_.at(b, t, static_cast<std::size_t>(d));
      }
    }
    for (std::size_t b = 0; b < b_n; ++b) {
      for (std::size_t j = 0; j < h; ++j) {
        const double dh = dout.at(b, t, j) + dh_next(b, j);
        const double tc = tanh_c_[step](b, j);
        const double ov = o_[step](b, j);
        const double dov = dh * tc;
        const double dc = dh * ov * (1.0 - tc * tc) + dc_next(b, j);
        const double iv = i_[step](b, j), fv = f_[step](b, j), gv = g_[step](b, j);
        const double div = dc * gv;
        const double dgv = dc * iv;
        const double dfv = dc * c_prev_[step](b, j);
        dc_next(b, j) = dc * fv;
        dz(b, j) = div * iv * (1.0 - iv);
        dz(b, h + j) = dfv * fv * (1.0 - fv);
        dz(b, 2 * h + j) = dgv * (1.0 - gv * gv);
        dz(b, 3 * h + j) = dov * ov * (1.0 - ov);
      }
    }
    dwi.noalias() += dz.transpose() * xt;
    dwh.noalias() += dz.transpose() * h_prev_[step];
    for (std::size_t j = 0; j < 4 * h; ++j) bias.grad[j] += dz.col(static_cast<Eigen::Index>(j)).sum();
    dxt.noalias() = dz * wi;
    dh_next.noalias() = dz * wh;
    for (std::size_t b = 0; b < b_n; ++b) {
      for (int d = 0; d < input_dim_; ++d) {
        dx.at(b, t, static_cast<std::size_t>(d)) += dxt(b, d);
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------- BiLstm

BiLstm::BiLstm(int input_dim, int hidden, Rng& init)
    : fw(input_dim, hidden, init), bw(input_dim, hidden, init) {}

Tensor BiLstm::forward(const Tensor& x) {
  const Tensor hf = fw.forward(x, false);
  const Tensor hb = bw.forward(x, true);
  const std::size_t b_n = x.shape[0], t_n = x.shape[1];
  const auto h = static_cast<std::size_t>(fw.hidden());

  Tensor out({b_n, t_n, 2 * h});
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t t = 0; t < t_n; ++t) {
      for (std::size_t j = 0; j < h; ++j) {
        out.at(b, t, j) = hf.at(b, t, j);
        out.at(b, t, h + j) = hb.at(b, t, j);
      }
    }
  }
  return out;
}

Tensor BiLstm::backward(const Tensor& dout) {
  const std::size_t b_n = dout.shape[0], t_n = dout.shape[1];
  const auto h = static_cast<std::size_t>(fw.hidden());
  Tensor dfw({b_n, t_n, h}), dbw({b_n, t_n, h});
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t t = 0; t < t_n; ++t) {
      for (std::size_t j = 0; j < h; ++j) {
        dfw.at(b, t, j) = dout.at(b, t, j);
        dbw.at(b, t, j) = dout.at(b, t, h + j);
      }
    }
  }
  Tensor dx = fw.backward(dfw);
  const Tensor dx2 = bw.backward(dbw);
  for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] += dx2.values[i];
  return dx;
}

// ------------------------------------------------------------- Attention

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> attention_core(const Eigen::MatrixXd& q,
                                                           const Eigen::MatrixXd& k,
                                                           const Eigen::MatrixXd& v) {
  if (q.cols() != k.cols() || k.rows() != v.rows()) {
    throw ShapeError("attention_core: incompatible Q/K/V shapes");
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Eigen::MatrixXd scores = q * k.transpose() * scale;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double m = scores.row(r).maxCoeff();
    scores.row(r) = (scores.row(r).array() - m).exp();
    scores.row(r) /= scores.row(r).sum();
  }
  return {scores * v, scores};
}

MultiHeadAttention::MultiHeadAttention(int d_model, int n_heads, Rng& init)
    : wq({static_cast<std::size_t>(d_model), static_cast<std::size_t>(d_model)}, true),
      wk({static_cast<std::size_t>(d_model), static_cast<std::size_t>(d_model)}, true),
      wv({static_cast<std::size_t>(d_model), static_cast<std::size_t>(d_model)}, true),
      wo({static_cast<std::size_t>(d_model), static_cast<std::size_t>(d_model)}, true),
      bq({static_cast<std::size_t>(d_model)}, true),
      bk({static_cast<std::size_t>(d_model)}, true),
      bv({static_cast<std::size_t>(d_model)}, true),
      bo({static_cast<std::size_t>(d_model)}, true),
      d_model_(d_model),
      n_heads_(n_heads) {
  if (n_heads < 1 || d_model % n_heads != 0) {
    throw ShapeError("d_model must be a positive multiple of n_heads");
  }
  d_k_ = d_model / n_heads;
  init_uniform(wq, d_model, init);
  init_uniform(wk, d_model, init);
  init_uniform(wv, d_model, init);
  init_uniform(wo, d_model, init);
  init_uniform(bq, d_model, init);
  init_uniform(bk, d_model, init);
  init_uniform(bv, d_model, init);
  init_uniform(bo, d_model, init);
}

Tensor MultiHeadAttention::forward(const Tensor& x) {
  require(x.shape.size() == 3 && x.shape[2] == static_cast<std::size_t>(d_model_),
          "attention: expected [B, T, D] input with D = d_model");
  const std::size_t b_n = x.shape[0], t_n = x.shape[1];
  const auto d = static_cast<std::size_t>(d_model_);
  x_ = x;

  const auto wq_m = wq.mat(d, d);
  const auto wk_m = wk.mat(d, d);
  const auto wv_m = wv.mat(d, d);
  const auto wo_m = wo.mat(d, d);

  q_.assign(b_n, RowMat(t_n, d));
  k_.assign(b_n, RowMat(t_n, d));
  v_.assign(b_n, RowMat(t_n, d));
  attn_.assign(b_n * static_cast<std::size_t>(n_heads_), Eigen::MatrixXd(t_n, t_n));
  concat_ = Tensor({b_n, t_n, d});
  Tensor out({b_n, t_n, d});

  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k_));
  for (std::size_t b = 0; b < b_n; ++b) {
    ConstMatView xb(x.values.data() + b * t_n * d, static_cast<Eigen::Index>(t_n),
                    static_cast<Eigen::Index>(d));
    q_[b].noalias() = xb * wq_m;
    k_[b].noalias() = xb * wk_m;
    v_[b].noalias() = xb * wv_m;
    for (std::size_t j = 0; j < d; ++j) {
      q_[b].col(static_cast<Eigen::Index>(j)).array() += bq.at(j);
      k_[b].col(static_cast<Eigen::Index>(j)).array() += bk.at(j);
      v_[b].col(static_cast<Eigen::Index>(j)).array() += bv.at(j);
    }

    MatView concat_b(concat_.values.data() + b * t_n * d, static_cast<Eigen::Index>(t_n),
                     static_cast<Eigen::Index>(d));
    for (int head = 0; head < n_heads_; ++head) {
      const auto off = static_cast<Eigen::Index>(head * d_k_);
      const auto qh = q_[b].middleCols(off, d_k_);
      const auto kh = k_[b].middleCols(off, d_k_);
      const auto vh = v_[b].middleCols(off, d_k_);
      Eigen::MatrixXd scores = qh * kh.transpose() * scale;
      for (Eigen::Index r = 0; r < scores.rows(); ++r) {
        const double m = scores.row(r).maxCoeff();
        scores.row(r) = (scores.row(r).array() - m).exp();
        scores.row(r) /= scores.row(r).sum();
      }
      attn_[b * static_cast<std::size_t>(n_heads_) + static_cast<std::size_t>(head)] = scores;
      concat_b.middleCols(off, d_k_).noalias() = scores * vh;
    }

    MatView out_b(out.values.data() + b * t_n * d, static_cast<Eigen::Index>(t_n),
                  static_cast<Eigen::Index>(d));
    out_b.noalias() = concat_b * wo_m;
    for (std::size_t j = 0; j < d; ++j) {
      out_b.col(static_cast<Eigen::Index>(j)).array() += bo.at(j);
    }
  }
  return out;
}

Tensor MultiHeadAttention::backward(const Tensor& dout) {
  const std::size_t b_n = x_.shape[0], t_n = x_.shape[1];
  const auto d = static_cast<std::size_t>(d_model_);
  for (Tensor* p : {&wq, &wk, &wv, &wo, &bq, &bk, &bv, &bo}) p->ensure_grad();

  const auto wq_m = wq.mat(d, d);
  const auto wk_m = wk.mat(d, d);
  const auto wv_m = wv.mat(d, d);
  const auto wo_m = wo.mat(d, d);
  auto dwq = wq.grad_mat(d, d);
  auto dwk = wk.grad_mat(d, d);
  auto dwv = wv.grad_mat(d, d);
  auto dwo = wo.grad_mat(d, d);

  Tensor dx(x_.shape);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_k_));
  RowMat dq(t_n, d), dk(t_n, d), dv(t_n, d), dconcat(t_n, d);

  for (std::size_t b = 0; b < b_n; ++b) {
    ConstMatView xb(x_.values.data() + b * t_n * d, static_cast<Eigen::Index>(t_n),
                    static_cast<Eigen::Index>(d));
    ConstMatView dout_b(dout.values.data() + b * t_n * d, static_cast<Eigen::Index>(t_n),
                        static_cast<Eigen::Index>(d));
    ConstMatView concat_b(concat_.values.data() + b * t_n * d,
                          static_cast<Eigen::Index>(t_n), static_cast<Eigen::Index>(d));

    dwo.noalias() += concat_b.transpose() * dout_b;
    for (std::size_t j = 0; j < d; ++j) {
      bo.grad[j] += dout_b.col(static_cast<Eigen::Index>(j)).sum();
    }
    dconcat.noalias() = dout_b * wo_m.transpose();

    for (int head = 0; head < n_heads_; ++head) {
      const auto off = static_cast<Eigen::Index>(head * d_k_);
      const auto qh = q_[b].middleCols(off, d_k_);
      const auto kh = k_[b].middleCols(off, d_k_);
      const auto vh = v_[b].middleCols(off, d_k_);
      const Eigen::MatrixXd& a =
          attn_[b * static_cast<std::size_t>(n_heads_) + static_cast<std::size_t>(head)];
      const auto dhead = dconcat.middleCols(off, d_k_);

      Eigen::MatrixXd da = dhead * vh.transpose();
      dv.middleCols(off, d_k_).noalias() = a.transpose() * dhead;
      // softmax backward per row
      Eigen::MatrixXd ds(a.rows(), a.cols());
      for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const double dot = a.row(r).dot(da.row(r));
        ds.row(r) = a.row(r).cwiseProduct((da.row(r).array() - dot).matrix());
      }
      ds *= scale;
      dq.middleCols(off, d_k_).noalias() = ds * kh;
      dk.middleCols(off, d_k_).noalias() = ds.transpose() * qh;
    }

    dwq.noalias() += xb.transpose() * dq;
    dwk.noalias() += xb.transpose() * dk;
    dwv.noalias() += xb.transpose() * dv;
    for (std::size_t j = 0; j < d; ++j) {
      bq.grad[j] += dq.col(static_cast<Eigen::Index>(j)).sum();
      bk.grad[j] += dk.col(static_cast<Eigen::Index>(j)).sum();
      bv.grad[j] += dv.col(static_cast<Eigen::Index>(j)).sum();
    }
    MatView dx_b(dx.values.data() + b * t_n * d, static_cast<Eigen::Index>(t_n),
                 static_cast<Eigen::Index>(d));
    dx_b.noalias() = dq * wq_m.transpose();
    dx_b.noalias() += dk * wk_m.transpose();
    dx_b.noalias() += dv * wv_m.transpose();
  }
  return dx;
}

// ---------------------------------------------------------------- Affine

Affine::Affine(int in_dim, int out_dim, Rng& init)
    : weight({static_cast<std::size_t>(in_dim), static_cast<std::size_t>(out_dim)}, true),
      bias({static_cast<std::size_t>(out_dim)}, true),
      in_(in_dim),
      out_(out_dim) {
  init_uniform(weight, in_dim, init);
  init_uniform(bias, in_dim, init);
}

Tensor Affine::forward(const Tensor& x) {
  require(!x.shape.empty() && x.shape.back() == static_cast<std::size_t>(in_),
          "affine: last axis must equal in_dim");
  const std::size_t rows = x.size() / static_cast<std::size_t>(in_);
  x_ = x;

  std::vector<std::size_t> out_shape = x.shape;
  out_shape.back() = static_cast<std::size_t>(out_);
  Tensor out(out_shape);
  auto y = out.mat(rows, static_cast<std::size_t>(out_));
  y.noalias() = x.mat(rows, static_cast<std::size_t>(in_)) *
                weight.mat(static_cast<std::size_t>(in_), static_cast<std::size_t>(out_));
  for (int j = 0; j < out_; ++j) {
    y.col(j).array() += bias.at(static_cast<std::size_t>(j));
  }
  return out;
}

Tensor Affine::backward(const Tensor& dout) {
  const std::size_t rows = x_.size() / static_cast<std::size_t>(in_);
  weight.ensure_grad();
  bias.ensure_grad();

  const auto x = x_.mat(rows, static_cast<std::size_t>(in_));
  const auto dy = dout.mat(rows, static_cast<std::size_t>(out_));
  weight.grad_mat(static_cast<std::size_t>(in_), static_cast<std::size_t>(out_)).noalias() +=
      x.transpose() * dy;
  for (int j = 0; j < out_; ++j) {
    bias.grad[static_cast<std::size_t>(j)] += dy.col(j).sum();
  }

  Tensor dx(x_.shape);
  dx.mat(rows, static_cast<std::size_t>(in_)).noalias() =
      dy * weight.mat(static_cast<std::size_t>(in_), static_cast<std::size_t>(out_)).transpose();
  return dx;
}

// ------------------------------------------------------------------ misc

Tensor Relu::forward(const Tensor& x) {
  Tensor out = x;
  mask_.assign(x.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.values[i] > 0.0) {
      mask_[i] = 1;
    } else {
      out.values[i] = 0.0;
    }
  }
  return out;
}

Tensor Relu::backward(const Tensor& dout) {
  Tensor dx = dout;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    if (!mask_[i]) dx.values[i] = 0.0;
  }
  return dx;
}

Tensor Dropout::forward(const Tensor& x, bool training, Rng& rng) {
  active_ = training && p_ > 0.0;
  if (!active_) return x;
  Tensor out = x;
  mask_.assign(x.size(), 0.0);
  const double keep = 1.0 - p_;
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask_[i] = rng.uniform() < p_ ? 0.0 : 1.0 / keep;
    out.values[i] *= mask_[i];
  }
  return out;
}

Tensor Dropout::backward(const Tensor& dout) {
  if (!active_) return dout;
  Tensor dx = dout;
  for (std::size_t i = 0; i < dx.size(); ++i) dx.values[i] *= mask_[i];
  return dx;
}

Tensor MeanPoolTime::forward(const Tensor& x) {
  require(x.shape.size() == 3, "mean pool: expected [B, T, D]");
  const std::size_t b_n = x.shape[0], t_n = x.shape[1], d = x.shape[2];
  t_ = t_n;
  Tensor out({b_n, d});
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t t = 0; t < t_n; ++t) {
      for (std::size_t j = 0; j < d; ++j) out.at(b, j) += x.at(b, t, j);
    }
  }
  const double inv = 1.0 / static_cast<double>(t_n);
  for (double& v : out.values) v *= inv;
  return out;
}

Tensor MeanPoolTime::backward(const Tensor& dout) {
  const std::size_t b_n = dout.shape[0], d = dout.shape[1];
  Tensor dx({b_n, t_, d});
  const double inv = 1.0 / static_cast<double>(t_);
  for (std::size_t b = 0; b < b_n; ++b) {
    for (std::size_t t = 0; t < t_; ++t) {
      for (std::size_t j = 0; j < d; ++j) dx.at(b, t, j) = dout.at(b, j) * inv;
    }
  }
  return dx;
}

Tensor softmax_rows(const Tensor& logits) {
  Tensor out = logits;
  const std::size_t b_n = logits.shape[0], c_n = logits.shape[1];
  for (std::size_t b = 0; b < b_n; ++b) {
    double m = out.at(b, 0);
    for (std::size_t c = 1; c < c_n; ++c) m = std::max(m, out.at(b, c));
    double sum = 0.0;
    for (std::size_t c = 0; c < c_n; ++c) {
      out.at(b, c) = std::exp(out.at(b, c) - m);
      sum += out.at(b, c);
    }
    for (std::size_t c = 0; c < c_n; ++c) out.at(b, c) /= sum;
  }
  return out;
}

double softmax_cross_entropy(const Tensor& logits, const std::vector<int>& targets,
                             Tensor* dlogits, RowMat* probs) {
  const std::size_t b_n = logits.shape[0], c_n = logits.shape[1];
  if (targets.size() != b_n) throw ShapeError("cross entropy: target count mismatch");
  const Tensor p = softmax_rows(logits);
  if (probs) {
    *probs = ConstMatView(p.values.data(), static_cast<Eigen::Index>(b_n),
                          static_cast<Eigen::Index>(c_n));
  }
  double loss = 0.0;
  for (std::size_t b = 0; b < b_n; ++b) {
    const auto target = static_cast<std::size_t>(targets[b]);
    loss -= std::log(std::max(p.at(b, target), 1e-300));
  }
  loss /= static_cast<double>(b_n);
  if (dlogits) {
    *dlogits = Tensor(logits.shape);
    const double inv = 1.0 / static_cast<double>(b_n);
    for (std::size_t b = 0; b < b_n; ++b) {
      for (std::size_t c = 0; c < c_n; ++c) {
        dlogits->at(b, c) =
            (p.at(b, c) - (static_cast<std::size_t>(targets[b]) == c ? 1.0 : 0.0)) * inv;
      }
    }
  }
  return loss;
}

}  // namespace ssvep
