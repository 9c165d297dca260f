#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mscnn/cli.hpp"
#include "mscnn/dataset.hpp"
#include "support.hpp"

using namespace mscnn;
using mscnn::test::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("param-count") {
    const auto r = run({"param-count"});
    CHECK(r.code == 0);
    CHECK(r.out == "2856932\n");
    const auto q = run({"param-count", "--width-scale", "1/4", "--window", "33"});
    CHECK(q.code == 0);
    CHECK(q.out != r.out);
  }

  TEST_CASE("usage errors exit 2") {
    CHECK(run({}).code == 2);
    CHECK(run({"bogus"}).code == 2);
    CHECK(run({"param-count", "--no-such-flag"}).code == 2);
    CHECK(run({"param-count", "--width-scale", "a/b"}).code == 2);
    CHECK(run({"train", "--data", "x"}).code == 2);
  }

  TEST_CASE("data errors exit 1") {
    TempDir dir("cli");
    const auto r = run({"evaluate", "--data", (dir / "missing").string(), "--labels", dir.path().string(), "--out",
                        (dir / "o").string()});
    CHECK(r.code == 1);
    CHECK(r.err.find("error:") == 0);
    CHECK(run({"param-count", "--fc-in", "100"}).code == 1);
  }

  TEST_CASE("help lists flags with defaults") {
    const auto r = run({"train", "--help"});
    CHECK(r.code == 0);
    for (const char* flag : {"--epochs", "--lr", "--momentum", "--decay-every", "--n-pos", "--n-neg", "--seed", "--dropout"})
      CHECK(r.out.find(flag) != std::string::npos);
    CHECK(r.out.find("[0.005]") != std::string::npos);
    CHECK(r.out.find("[80]") != std::string::npos);
  }

  TEST_CASE("parse_ratio") {
    CHECK(parse_ratio("0.25") == 0.25);
    CHECK(parse_ratio("1/8") == 0.125);
    CHECK_THROWS(parse_ratio("1/0"));
    CHECK_THROWS(parse_ratio("x"));
  }

  TEST_CASE("grad-check at width 1/8") {
    const auto r = run({"grad-check", "--width-scale", "0.125", "--window", "33", "--f64", "--samples", "8"});
    CHECK(r.code == 0);
    CHECK(r.out.find("max_relative_error") == 0);
  }

  TEST_CASE("config file: values apply and unknown keys are rejected") {
    TempDir dir("cli");
    std::ofstream(dir / "good.ini") << "[param-count]\nwidth-scale = \"1/4\"\nwindow = 33\n";
    const auto a = run({"--config", (dir / "good.ini").string(), "param-count"});
    const auto b = run({"param-count", "--width-scale", "1/4", "--window", "33"});
    CHECK(a.code == 0);
    CHECK(a.out == b.out);
    std::ofstream(dir / "bad.ini") << "[param-count]\nhidden = 3\n";
    CHECK(run({"--config", (dir / "bad.ini").string(), "param-count"}).code == 2);
  }

  TEST_CASE("pipeline: gen, train, segment, classify, evaluate, sweep") {
    TempDir dir("cli");
    const std::string data = (dir / "data").string(), run_dir = (dir / "run").string();
    REQUIRE(run({"gen-synthetic", "--out", data, "--n", "5", "--size", "96", "--seed", "3"}).code == 0);
    CHECK(load_dataset(data).size() == 5);

    const std::vector<std::string> train_args{"train", "--data", data, "--out", run_dir, "--fold", "0",
                                              "--window", "17", "--width-scale", "1/8", "--epochs", "1",
                                              "--n-pos", "4", "--n-neg", "4", "--seed", "7"};
    const auto t = run(train_args);
    INFO(t.err);
    REQUIRE(t.code == 0);
    CHECK(t.out.find("epoch 0") == 0);

    const std::string labels = (dir / "labels").string();
    const auto s = run({"segment", "--model", run_dir + "/checkpoint.mscn", "--data", data, "--out", labels, "--fold",
                        "0", "--stride", "8", "--png"});
    INFO(s.err);
    REQUIRE(s.code == 0);
    CHECK(s.out == "phantom_0\n");
    CHECK(std::filesystem::exists(dir / "labels" / "phantom_0.png"));

    const auto c = run({"classify", "--labels", labels});
    CHECK(c.code == 0);
    CHECK(c.out.find("id,r1,r2,r3,tumor_pixels,l_p\nphantom_0,") == 0);

    const std::string eval = (dir / "eval").string();
    const auto e = run({"evaluate", "--data", data, "--labels", labels, "--out", eval, "--fold", "0"});
    INFO(e.err);
    REQUIRE(e.code == 0);
    CHECK(e.out.find("slices 1\n") == 0);
    CHECK(std::filesystem::exists(dir / "eval" / "histograms.csv"));

    const auto w = run({"sweep-threshold", "--report", eval + "/report.json", "--points", "11"});
    CHECK(w.code == 0);
    CHECK(std::count(w.out.begin(), w.out.end(), '\n') == 12);

    // identical invocation, identical artifact
    auto again = train_args;
    again[4] = (dir / "run2").string();
    REQUIRE(run(again).code == 0);
    CHECK(test::read_bytes(dir / "run" / "checkpoint.mscn") == test::read_bytes(dir / "run2" / "checkpoint.mscn"));
  }
}
