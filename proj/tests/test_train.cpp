#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "ssvep/errors.hpp"
#include "ssvep/rng.hpp"
#include "ssvep/train.hpp"

using namespace ssvep;

namespace {

// Small separable dataset: gaussian features with a class-dependent shift on
// the first dimensions.
std::vector<FeatureSequence> toy_dataset(std::size_t per_class, int seq_len, int dim,
                                         std::uint64_t seed, double shift = 0.6) {
  Rng rng(seed);
  std::vector<FeatureSequence> items;
  for (int label = 0; label < 4; ++label) {
    for (std::size_t i = 0; i < per_class; ++i) {
      FeatureSequence seq;
      seq.label = label;
      seq.segment_s = 0.25;
      for (int t = 0; t < seq_len; ++t) {
        FeatureVector fv;
        fv.label = label;
        fv.values.resize(static_cast<std::size_t>(dim));
        for (int j = 0; j < dim; ++j) {
          double v = rng.normal();
          if (j % 4 == label) v += shift;
          fv.values[static_cast<std::size_t>(j)] = v;
        }
        seq.rows.push_back(std::move(fv));
      }
      items.push_back(std::move(seq));
    }
  }
  return items;
}

ModelConfig small_model_config() {
  ModelConfig cfg;
  cfg.input_dim = 16;
  cfg.seq_len = 4;
  cfg.conv_channels = 8;
  cfg.conv_kernel = 2;
  cfg.lstm_hidden = 8;  // d_model 16
  cfg.n_heads = 2;
  cfg.d_k = 8;
  return cfg;
}

}  // namespace

TEST_CASE("step schedule decays by 0.9 every 100 epochs") {
  TrainConfig cfg;  // lr 0.01, decay 0.9, step 100
  CHECK(effective_lr(cfg, 0) == 0.01);
  CHECK(effective_lr(cfg, 50) == 0.01);
  CHECK(effective_lr(cfg, 99) == 0.01);  // still undecayed, exact
  CHECK(effective_lr(cfg, 100) == 0.01 * 0.9);
  CHECK(effective_lr(cfg, 199) == 0.01 * 0.9);
  CHECK(effective_lr(cfg, 250) == 0.01 * 0.9 * 0.9);
  CHECK(effective_lr(cfg, 300) == 0.01 * 0.9 * 0.9 * 0.9);
  // decimal targets hold to f64 resolution (1 ulp)
  CHECK(effective_lr(cfg, 100) == doctest::Approx(0.009).epsilon(1e-15));
  CHECK(effective_lr(cfg, 250) == doctest::Approx(0.0081).epsilon(1e-15));
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.lr_decay = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = TrainConfig{};
  cfg.validate();
}

TEST_CASE("standardizer removes per-dimension location and scale") {
  auto items = toy_dataset(3, 4, 16, 77);
  const FeatureStandardizer st = FeatureStandardizer::fit(items);
  st.apply(items);
  const std::size_t dim = 16;
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  std::size_t n = 0;
  for (const auto& seq : items) {
    for (const auto& row : seq.rows) {
      for (std::size_t j = 0; j < dim; ++j) mean[j] += row.values[j];
      ++n;
    }
  }
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& seq : items) {
    for (const auto& row : seq.rows) {
      for (std::size_t j = 0; j < dim; ++j) {
        var[j] += (row.values[j] - mean[j]) * (row.values[j] - mean[j]) / static_cast<double>(n);
      }
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    CHECK(std::abs(mean[j]) < 1e-9);
    CHECK(var[j] == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("training is bit-deterministic per seed") {
  const auto train_set = toy_dataset(4, 4, 16, 11);
  const auto test_set = toy_dataset(2, 4, 16, 12);
  TrainConfig tc;
  tc.epochs = 25;
  tc.batch_size = 8;
  tc.seed = 5;

  MacnnBilstm model_a(small_model_config(), 42);
  MacnnBilstm model_b(small_model_config(), 42);
  const TrainReport report_a = train(model_a, train_set, test_set, tc);
  const TrainReport report_b = train(model_b, train_set, test_set, tc);

  auto params_a = model_a.parameters();
  auto params_b = model_b.parameters();
  REQUIRE(params_a.size() == params_b.size());
  for (std::size_t i = 0; i < params_a.size(); ++i) {
    CHECK(params_a[i].second->values == params_b[i].second->values);  // bit-for-bit
  }
  CHECK(report_a.train_loss == report_b.train_loss);
  CHECK(report_a.test_accuracy == report_b.test_accuracy);

  // a different training seed changes the trajectory
  tc.seed = 6;
  MacnnBilstm model_c(small_model_config(), 42);
  train(model_c, train_set, test_set, tc);
  CHECK(params_a[0].second->values != model_c.parameters()[0].second->values);
}

TEST_CASE("the model can memorize eight windows") {
  const auto train_set = toy_dataset(2, 4, 16, 21, 0.3);  // 8 windows
  REQUIRE(train_set.size() == 8);
  TrainConfig tc;
  tc.epochs = 500;
  tc.batch_size = 16;  // full batch
  tc.seed = 9;

  MacnnBilstm model(small_model_config(), 13);
  const TrainReport report = train(model, train_set, {}, tc);
  CHECK(report.train_accuracy.back() == 1.0);

  SUBCASE("loss is non-increasing over the first ten epochs") {
    for (std::size_t e = 1; e < 10; ++e) {
      CHECK(report.train_loss[e] <= report.train_loss[e - 1] + 1e-12);
    }
  }
  SUBCASE("evaluate on the memorized set is perfect with a diagonal confusion") {
    const auto [accuracy, confusion] = evaluate(model, train_set);
    CHECK(accuracy == 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        if (i != j) CHECK(confusion.counts[i][j] == 0);
      }
      CHECK(confusion.counts[i][i] == 2);
    }
  }
}

TEST_CASE("confusion accuracy is trace over total") {
  Confusion c;
  c.counts = {{{5, 1, 0, 0}, {2, 6, 0, 0}, {0, 0, 7, 1}, {1, 0, 0, 9}}};
  CHECK(c.total() == 32);
  CHECK(c.correct() == 27);
  CHECK(c.accuracy() == doctest::Approx(27.0 / 32.0));
}

TEST_CASE("a uniform random predictor sits at chance level") {
  Rng rng(33);
  Confusion c;
  const std::int64_t n = 4000;
  for (std::int64_t i = 0; i < n; ++i) {
    const auto truth = static_cast<std::size_t>(rng.below(4));
    const auto pred = static_cast<std::size_t>(rng.below(4));
    c.counts[truth][pred] += 1;
  }
  // 99.9% binomial interval around 0.25
  const double sd = std::sqrt(0.25 * 0.75 / static_cast<double>(n));
  CHECK(std::abs(c.accuracy() - 0.25) < 3.3 * sd);
}

TEST_CASE("divergent training reports the epoch") {
  const auto train_set = toy_dataset(2, 4, 16, 31);
  TrainConfig tc;
  tc.epochs = 50;
  tc.learning_rate = 1e90;  // guaranteed overflow within a few steps
  tc.seed = 1;
  MacnnBilstm model(small_model_config(), 2);
  CHECK_THROWS_WITH_AS(train(model, train_set, {}, tc), doctest::Contains("epoch"),
                       TrainingError);
}

TEST_CASE("checkpoints round-trip the model and standardizer") {
  const auto train_set = toy_dataset(2, 4, 16, 41);
  TrainConfig tc;
  tc.epochs = 10;
  tc.seed = 3;
  MacnnBilstm model(small_model_config(), 4);
  train(model, train_set, {}, tc);
  FeatureStandardizer st = FeatureStandardizer::fit(train_set);

  const auto path = (std::filesystem::temp_directory_path() / "ckpt_test.macb").string();
  save_checkpoint(path, model, &st);
  Checkpoint ckpt = load_checkpoint(path);

  CHECK(ckpt.config == model.config());
  CHECK(ckpt.standardizer.mean.size() == st.mean.size());
  auto original = model.parameters();
  auto loaded = ckpt.model->parameters();
  REQUIRE(original.size() == loaded.size());
  for (std::size_t i = 0; i < original.size(); ++i) {
    CHECK(original[i].first == loaded[i].first);
    REQUIRE(original[i].second->size() == loaded[i].second->size());
    for (std::size_t j = 0; j < original[i].second->size(); ++j) {
      // stored as f32
      CHECK(loaded[i].second->values[j] ==
            doctest::Approx(original[i].second->values[j]).epsilon(1e-6));
    }
  }

  SUBCASE("loaded model predicts like the original") {
    const auto [acc_orig, conf_orig] = evaluate(model, train_set);
    const auto [acc_loaded, conf_loaded] = evaluate(*ckpt.model, train_set);
    CHECK(acc_orig == acc_loaded);
  }
  SUBCASE("corrupted files are rejected") {
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), {});

    const std::string truncated = path + ".trunc";
    std::ofstream(truncated, std::ios::binary) << bytes.substr(0, bytes.size() - 7);
    CHECK_THROWS_AS(load_checkpoint(truncated), DataError);

    const std::string trailing = path + ".trail";
    std::ofstream(trailing, std::ios::binary) << bytes << "xx";
    CHECK_THROWS_AS(load_checkpoint(trailing), DataError);

    std::string wrong_magic = bytes;
    wrong_magic[0] = 'Z';
    const std::string badmagic = path + ".magic";
    std::ofstream(badmagic, std::ios::binary) << wrong_magic;
    CHECK_THROWS_WITH_AS(load_checkpoint(badmagic), doctest::Contains("magic"), DataError);
  }
}

TEST_CASE("empty sets are rejected") {
  MacnnBilstm model(small_model_config(), 1);
  TrainConfig tc;
  CHECK_THROWS_AS(train(model, {}, {}, tc), ShapeError);
  CHECK_THROWS_AS(evaluate(model, {}), ShapeError);
}
