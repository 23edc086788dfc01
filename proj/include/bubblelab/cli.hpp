#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bubblelab/concentration.hpp"
#include "bubblelab/fields.hpp"

namespace bubblelab {

/// Settings shared by every subcommand.
struct RunConfig {
  int dimension = 3;
  int radial_points = 64;
  int angular_order = 0;            // 0 selects the per-dimension default
  double truncation_radius = 1e3;   // R_inf: where R^n integrals are cut off
  double sample_radius = 5.0;       // random probes and profiles live in B(0, sample_radius)
  double fd_step = 0.0;             // 0 selects 1e-4 (1 + |x|)
  double epsilon0 = 0.0;            // 0 selects Lambda_0 / (4n)
  double epsilon_regularity = 0.0;  // 0 selects Lambda_0 / 10
  std::string output_dir = "bubble-lab-out";
  std::uint64_t seed = 1;
  int threads = 1;
  bool quiet = false;
  bool json = false;

  void validate() const;
  RuleOptions rule() const;
};

enum ExitCode : int { kPass = 0, kToleranceFailure = 1, kUsageError = 2 };

/// Field from key=value tokens: n=3 delta=1 center=0,0,0 sign=1.
ScalarField parse_bubble_spec(const std::vector<std::string>& tokens, int default_n);

/// Point from "x1,x2,...".
Point parse_point(const std::string& text);

/// Sequence document (JSON): {"n": 3, "domain_radius": 1, "budget": 50,
/// "k_max": 10, "k_large": 10, "epsilon0": 0, "r_small": 0.1,
/// "bubbles": [{"center": [0,0,0], "base": 4, "amplitude": 1, "weight": 1}]}.
struct SequenceSpec {
  ConcentrationSequence sequence;
  QuantizationConfig config;
};
SequenceSpec read_sequence_spec(const std::string& path);

/// Entry point behind the bubble-lab executable. args excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bubblelab
