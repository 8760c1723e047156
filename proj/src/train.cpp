#include "ssvep/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "ssvep/errors.hpp"

namespace ssvep {

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  if (!(lr_decay > 0.0 && lr_decay < 1.0)) throw ConfigError("lr_decay must be in (0, 1)");
  if (lr_step_epochs < 1) throw ConfigError("lr_step_epochs must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
}

double effective_lr(const TrainConfig& cfg, int epoch) {
  double lr = cfg.learning_rate;
  for (int k = 0; k < epoch / cfg.lr_step_epochs; ++k) lr *= cfg.lr_decay;
  return lr;
}

std::int64_t Confusion::total() const {
  std::int64_t n = 0;
  for (const auto& row : counts) {
    for (std::int64_t v : row) n += v;
  }
  return n;
}

std::int64_t Confusion::correct() const {
  std::int64_t n = 0;
  for (std::size_t i = 0; i < 4; ++i) n += counts[i][i];
  return n;
}

double Confusion::accuracy() const {
  const std::int64_t n = total();
  return n == 0 ? 0.0 : static_cast<double>(correct()) / static_cast<double>(n);
}

FeatureStandardizer FeatureStandardizer::fit(const std::vector<FeatureSequence>& items) {
  if (items.empty() || items[0].rows.empty()) {
    throw ShapeError("cannot fit standardizer on an empty set");
  }
  const std::size_t d = items[0].rows[0].values.size();
  FeatureStandardizer s;
  s.mean.assign(d, 0.0);
  s.std_dev.assign(d, 0.0);
  std::size_t n = 0;
  for (const auto& seq : items) {
    for (const auto& row : seq.rows) {
      for (std::size_t j = 0; j < d; ++j) s.mean[j] += row.values[j];
      ++n;
    }
  }
  for (double& m : s.mean) m /= static_cast<double>(n);
  for (const auto& seq : items) {
    for (const auto& row : seq.rows) {
      for (std::size_t j = 0; j < d; ++j) {
        const double dev = row.values[j] - s.mean[j];
        s.std_dev[j] += dev * dev;
      }
    }
  }
  for (double& v : s.std_dev) {
    v = std::sqrt(v / static_cast<double>(n));
    if (v < 1e-12) v = 1e-12;
  }
  return s;
}

void FeatureStandardizer::apply(std::vector<double>& values) const {
  for (std::size_t j = 0; j < values.size(); ++j) {
    values[j] = (values[j] - mean[j]) / std_dev[j];
  }
}

void FeatureStandardizer::apply(FeatureSequence& seq) const {
  for (auto& row : seq.rows) apply(row.values);
}

void FeatureStandardizer::apply(std::vector<FeatureSequence>& items) const {
  for (auto& seq : items) apply(seq);
}

namespace {

struct AdamState {
  std::vector<double> m, v;
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

std::pair<double, Confusion> evaluate_batched(MacnnBilstm& model,
                                              const std::vector<FeatureSequence>& set,
                                              std::size_t batch_size) {
  Confusion confusion;
  std::vector<std::size_t> indices(set.size());
  std::iota(indices.begin(), indices.end(), 0);
  for (std::size_t off = 0; off < indices.size(); off += batch_size) {
    const std::size_t n = std::min(batch_size, indices.size() - off);
    std::vector<int> targets;
    const Tensor batch =
        batch_tensor(set, std::span(indices).subspan(off, n), &targets);
    const Tensor logits = model.forward(batch, false);
    for (std::size_t b = 0; b < n; ++b) {
      std::size_t pred = 0;
      for (std::size_t c = 1; c < logits.shape[1]; ++c) {
        if (logits.at(b, c) > logits.at(b, pred)) pred = c;
      }
      confusion.counts[static_cast<std::size_t>(targets[b])][pred] += 1;
    }
  }
  return {confusion.accuracy(), confusion};
}

}  // namespace

TrainReport train(MacnnBilstm& model, const std::vector<FeatureSequence>& train_set,
                  const std::vector<FeatureSequence>& test_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty()) throw ShapeError("empty training set");
  const auto start = std::chrono::steady_clock::now();

  auto params = model.parameters();
  std::vector<AdamState> states(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    states[i].m.assign(params[i].second->size(), 0.0);
    states[i].v.assign(params[i].second->size(), 0.0);
  }

  Rng shuffle_rng = Rng(cfg.seed).derive(0x7368756666);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  long step = 0;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = effective_lr(cfg, epoch);
    Rng epoch_rng = shuffle_rng.derive(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);

    double epoch_loss = 0.0;
    std::int64_t epoch_correct = 0;
    for (std::size_t off = 0; off < order.size(); off += batch_size) {
      const std::size_t n = std::min(batch_size, order.size() - off);
      std::vector<int> targets;
      const Tensor batch =
          batch_tensor(train_set, std::span(order).subspan(off, n), &targets);

      model.zero_grad();
      Tensor logits, dlogits;
      double loss = 0.0;
      try {
        logits = model.forward(batch, true);
        loss = softmax_cross_entropy(logits, targets, &dlogits);
      } catch (const NumericError& e) {
        throw TrainingError("training diverged at epoch " + std::to_string(epoch) + ": " +
                            e.what());
      }
      if (!std::isfinite(loss)) {
        throw TrainingError("loss diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += loss * static_cast<double>(n);
      for (std::size_t b = 0; b < n; ++b) {
        std::size_t pred = 0;
        for (std::size_t c = 1; c < logits.shape[1]; ++c) {
          if (logits.at(b, c) > logits.at(b, pred)) pred = c;
        }
        if (pred == static_cast<std::size_t>(targets[b])) ++epoch_correct;
      }
      model.backward(dlogits);

      ++step;
      const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i].second;
        AdamState& st = states[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
          const double g = p.grad[j];
          st.m[j] = kBeta1 * st.m[j] + (1.0 - kBeta1) * g;
          st.v[j] = kBeta2 * st.v[j] + (1.0 - kBeta2) * g * g;
          const double mhat = st.m[j] / bc1;
          const double vhat = st.v[j] / bc2;
          p.values[j] -= lr * (mhat / (std::sqrt(vhat) + kEps) +
                               cfg.weight_decay * p.values[j]);
        }
      }
    }

    report.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    report.train_accuracy.push_back(static_cast<double>(epoch_correct) /
                                    static_cast<double>(order.size()));
    if (!test_set.empty()) {
      report.test_accuracy.push_back(
          evaluate_batched(model, test_set, batch_size).first);
    }
  }

  if (!test_set.empty()) {
    auto [acc, confusion] = evaluate_batched(model, test_set, batch_size);
    (void)acc;
    report.confusion = confusion;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::pair<double, Confusion> evaluate(MacnnBilstm& model,
                                      const std::vector<FeatureSequence>& set) {
  if (set.empty()) throw ShapeError("empty evaluation set");
  return evaluate_batched(model, set, 64);
}

// ----------------------------------------------------------- checkpoints

namespace {

constexpr char kCheckpointMagic[8] = {'M', 'A', 'C', 'B', '0', '0', '0', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Cursor {
  const std::string& buf;
  std::size_t pos = 0;
  const std::string& path;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw DataError("truncated checkpoint: " + path);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
      v = (v << 8) | static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)]);
    }
    pos += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    auto lo = static_cast<std::uint8_t>(buf[pos]);
    auto hi = static_cast<std::uint8_t>(buf[pos + 1]);
    pos += 2;
    return static_cast<std::uint16_t>(lo | (hi << 8));
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) {
      bits = (bits << 8) | static_cast<std::uint8_t>(buf[pos + static_cast<std::size_t>(i)]);
    }
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

void append_blob(std::string& out, const std::string& name, const std::vector<double>& v) {
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.append(name);
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (double x : v) put_f32(out, static_cast<float>(x));
}

}  // namespace

void save_checkpoint(const std::string& path, MacnnBilstm& model,
                     const FeatureStandardizer* standardizer) {
  std::string out;
  out.append(kCheckpointMagic, 8);
  const ModelConfig& c = model.config();
  for (int v : {c.input_dim, c.seq_len, c.conv_channels, c.conv_kernel, c.conv_stride,
                c.lstm_hidden, c.n_heads, c.d_k, c.n_classes}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_f64(out, c.dropout);
  out.push_back(c.use_attention ? 1 : 0);

  auto params = model.parameters();
  std::uint32_t n_blobs = static_cast<std::uint32_t>(params.size());
  if (standardizer) n_blobs += 2;
  put_u32(out, n_blobs);
  for (auto& [name, p] : params) append_blob(out, name, p->values);
  if (standardizer) {
    append_blob(out, "standardizer.mean", standardizer->mean);
    append_blob(out, "standardizer.std", standardizer->std_dev);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Cursor r{buf, 0, path};
  if (std::memcmp(r.str(8).data(), kCheckpointMagic, 8) != 0) {
    throw DataError("bad magic in " + path + " (not a MACB checkpoint)");
  }
  ModelConfig c;
  c.input_dim = static_cast<int>(r.u32());
  c.seq_len = static_cast<int>(r.u32());
  c.conv_channels = static_cast<int>(r.u32());
  c.conv_kernel = static_cast<int>(r.u32());
  c.conv_stride = static_cast<int>(r.u32());
  c.lstm_hidden = static_cast<int>(r.u32());
  c.n_heads = static_cast<int>(r.u32());
  c.d_k = static_cast<int>(r.u32());
  c.n_classes = static_cast<int>(r.u32());
  c.dropout = r.f64();
  c.use_attention = r.u8() != 0;

  Checkpoint ckpt;
  ckpt.config = c;
  ckpt.model = std::make_unique<MacnnBilstm>(c, 0);

  auto params = ckpt.model->parameters();
  const std::uint32_t n_blobs = r.u32();
  for (std::uint32_t i = 0; i < n_blobs; ++i) {
    const std::string name = r.str(r.u16());
    const std::uint32_t count = r.u32();
    std::vector<double> values(count);
    for (auto& v : values) v = r.f32();

    if (name == "standardizer.mean") {
      ckpt.standardizer.mean = std::move(values);
      continue;
    }
    if (name == "standardizer.std") {
      ckpt.standardizer.std_dev = std::move(values);
      continue;
    }
    bool matched = false;
    for (auto& [pname, p] : params) {
      if (pname != name) continue;
      if (p->size() != values.size()) {
        throw DataError("checkpoint blob " + name + " has " + std::to_string(values.size()) +
                        " values, model expects " + std::to_string(p->size()));
      }
      p->values = std::move(values);
      matched = true;
      break;
    }
    if (!matched) throw DataError("unknown checkpoint blob: " + name);
  }
  if (r.pos != buf.size()) throw DataError("trailing bytes in " + path);
  return ckpt;
}

}  // namespace ssvep
