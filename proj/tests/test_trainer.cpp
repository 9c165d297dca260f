#include <fstream>

#include "doctest.h"
#include "mscnn/checkpoint.hpp"
#include "mscnn/phantom.hpp"
#include "mscnn/trainer.hpp"
#include "support.hpp"

using namespace mscnn;
using mscnn::test::TempDir;

namespace {

std::vector<SliceRecord> tiny_set() {
  Rng rng(77);
  std::vector<SliceRecord> out;
  for (int i = 0; i < 4; ++i) out.push_back(test::toy_slice("k" + std::to_string(i), 24, 24, i % 3 + 1, 0, rng));
  return out;
}

TrainConfig tiny_config() {
  TrainConfig c;
  c.epochs = 3;
  c.n_pos = 6;
  c.n_neg = 6;
  c.batch_size = 10;
  c.decay_every = 2;
  c.seed = 7;
  return c;
}

MultiscaleNet<float> tiny_net(std::uint64_t seed) {
  Rng rng(init_seed(seed));
  return MultiscaleNet<float>(NetworkConfig::reduced(0.125, 17), rng);
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("learning-rate schedule") {
    TrainConfig c;
    CHECK(lr_schedule(c, 0) == 0.005);
    CHECK(lr_schedule(c, 19) == 0.005);
    CHECK(lr_schedule(c, 20) == 0.0025);
    CHECK(lr_schedule(c, 79) == 0.000625);
    c.decay_gamma = 0.1;
    c.decay_every = 1;
    CHECK(lr_schedule(c, 2) == doctest::Approx(0.005 * 0.01).epsilon(1e-14));
    CHECK_THROWS_AS(lr_schedule(c, -1), ParameterError);
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.momentum = 1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.lr0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = c;
    bad.decay_gamma = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }

  TEST_CASE("momentum step by hand") {
    Tensor<double> w({2}, {1.0, -2.0}), g({2}, {0.5, 1.0}), v({2}, {0.2, -0.4});
    sgd_step(w, g, v, 0.1, 0.9);
    // v = 0.9 v + g
    CHECK(v[0] == doctest::Approx(0.68));
    CHECK(v[1] == doctest::Approx(0.64));
    CHECK(w[0] == doctest::Approx(1.0 - 0.068));
    CHECK(w[1] == doctest::Approx(-2.0 - 0.064));
    Tensor<double> other({3});
    CHECK_THROWS_AS(sgd_step(w, other, v, 0.1, 0.9), ShapeError);
  }

  TEST_CASE("two momentum steps with a constant gradient") {
    Tensor<double> w({1}, {3.0}), g({1}, {0.25}), v({1}, {0.0});
    sgd_step(w, g, v, 0.01, 0.9);
    sgd_step(w, g, v, 0.01, 0.9);
    CHECK(w[0] == doctest::Approx(3.0 - 0.01 * 0.25 * 2.9).epsilon(1e-14));
  }

  TEST_CASE("phantom loss goes down over five epochs") {
    auto net = tiny_net(3);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.n_pos = 30;
    cfg.n_neg = 30;
    cfg.batch_size = 32;
    cfg.seed = 3;
    const auto history = train(net, generate_phantoms(6, 96, 21), cfg);
    REQUIRE(history.size() == 5);
    CHECK(history[4].loss < history[0].loss);
  }

  TEST_CASE("training is deterministic and resumable") {
    TempDir dir("train");
    const auto data = tiny_set();
    const auto cfg = tiny_config();

    auto a = tiny_net(cfg.seed);
    TrainOptions oa;
    oa.checkpoint_dir = dir / "a";
    const auto ha = train(a, data, cfg, oa);
    CHECK(ha.size() == 3);
    CHECK(ha[2].lr == 0.0025);
    CHECK(a.epoch == 3);
    REQUIRE(a.stats.has_value());

    auto b = tiny_net(cfg.seed);
    TrainOptions ob;
    ob.checkpoint_dir = dir / "b";
    train(b, data, cfg, ob);
    CHECK(test::read_bytes(dir / "a" / "checkpoint.mscn") == test::read_bytes(dir / "b" / "checkpoint.mscn"));

    auto c = tiny_net(cfg.seed);
    TrainOptions oc;
    oc.checkpoint_dir = dir / "c";
    oc.stop_after = 1;
    CHECK(train(c, data, cfg, oc).size() == 1);
    auto resumed = load_checkpoint<float>(dir / "c" / "checkpoint.mscn");
    CHECK(resumed.epoch == 1);
    oc.stop_after.reset();
    CHECK(train(resumed, data, cfg, oc).size() == 2);
    CHECK(test::read_bytes(dir / "a" / "checkpoint.mscn") == test::read_bytes(dir / "c" / "checkpoint.mscn"));

    std::ifstream hist(dir / "c" / "history.csv");
    std::string line;
    int rows = 0;
    while (std::getline(hist, line)) ++rows;
    CHECK(rows == 4);
  }

  TEST_CASE("a different seed gives a different model") {
    const auto data = tiny_set();
    auto cfg = tiny_config();
    cfg.epochs = 1;
    auto a = tiny_net(cfg.seed);
    train(a, data, cfg);
    cfg.seed = 8;
    auto b = tiny_net(cfg.seed);
    train(b, data, cfg);
    CHECK_FALSE(*a.parameters()[0].value == *b.parameters()[0].value);
  }

  TEST_CASE("empty training set") {
    auto net = tiny_net(1);
    CHECK_THROWS_AS(train(net, {}, tiny_config()), DataError);
  }
}
