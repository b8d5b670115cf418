#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "momentlift/moments.hpp"
#include "momentlift/objects.hpp"

namespace momentlift::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitInternal = 1,
  kExitParse = 2,
  kExitModel = 3,
};

struct GenerateObjectOptions {
  int n = 3;
  int components = 3;
  std::uint64_t seed = 0;
  bool centered = false;
  std::string out;
};

struct GenerateEnsembleOptions {
  int n = 3;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double kappa = 0.0;
  std::string out;
};

struct GenerateQueriesOptions {
  int d = 2;
  int n = 3;
  int pairs = 10;
  double radius = 3.0;
  std::uint64_t seed = 0;
  std::string out;
};

struct SliceCheckOptions {
  std::string object;
  int m = 0;  // 0 selects n - 1
  int trials = 100;
  std::uint64_t seed = 0;
  double tolerance = 1e-10;
  std::string out;
};

struct RecoverOptions {
  std::string object;
  std::string queries;
  int m = 0;  // 0 selects n - 1
  std::size_t samples = 100000;
  int nodes = 0;  // 0 selects the per-group default
  std::uint64_t seed = 0;
  std::string reference = "none";
  double tolerance = 1e-4;
  std::string out;
};

struct KamOptions {
  std::string object;
  int pairs = 50;
  std::size_t samples = 1000000;
  int nodes = 48;
  std::uint64_t seed = 0;
  double tolerance = 1e-12;
  std::string out;
};

struct ReweightOptions {
  std::string object;
  std::string queries;
  double kappa = 1.0;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  int m = 0;  // 0 selects n - 1
  int d = 2;
  int pairs = 20;
  std::string out;
};

/// Draws `count` d-tuples of frequencies uniformly from the radius ball in R^dim.
std::vector<MomentQuery> random_queries(int d, int dim, int count, double radius, std::uint64_t seed,
                                        std::uint64_t stream_index);

// Each command writes its machine-readable summary to `out`, diagnostics to
// `err`, and returns a process exit code. Exceptions never escape.
int cmd_generate_object(const GenerateObjectOptions& opts, std::ostream& out, std::ostream& err);
int cmd_generate_ensemble(const GenerateEnsembleOptions& opts, std::ostream& out, std::ostream& err);
int cmd_generate_queries(const GenerateQueriesOptions& opts, std::ostream& out, std::ostream& err);
int cmd_slice_check(const SliceCheckOptions& opts, std::ostream& out, std::ostream& err);
int cmd_recover(const RecoverOptions& opts, std::ostream& out, std::ostream& err);
int cmd_kam_experiment(const KamOptions& opts, std::ostream& out, std::ostream& err);
int cmd_reweight_demo(const ReweightOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace momentlift::cli
