#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mscnn/network.hpp"
#include "mscnn/trainer.hpp"

namespace mscnn {

/// Everything a CLI invocation can configure. Defaults reproduce the
/// published recipe wherever one exists.
struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  std::string data;
  std::string out;
  std::string model;
  std::string labels;
  std::string resume;
  std::string report;
  int fold = 0;
  int stop_after = 0;
  bool f64 = false;
  Index stride = 1;
  Index batch = 256;
  double tau = kDefaultTau;
  Index bins = 10;
  Index tau_points = 101;
  int threads = 0;
};

/// Parses "0.25" or "1/4".
double parse_ratio(const std::string& text);

/// Runs one subcommand. Returns 0 on success, 2 on usage errors and 1 on
/// data or model errors.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mscnn
