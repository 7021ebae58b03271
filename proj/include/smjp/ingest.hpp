#pragma once

// Event files, ground-truth files, location quantization, run configuration,
// and run manifests.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "smjp/analysis.hpp"
#include "smjp/core.hpp"
#include "smjp/events.hpp"
#include "smjp/foraging.hpp"
#include "smjp/switching_hmm.hpp"

namespace smjp {

inline constexpr std::string_view kEventsHeader = "# smjp-events v1";
inline constexpr std::string_view kEventsColumns = "time,obs,action";

/// Reads an events.csv document:
///
///   # smjp-events v1
///   # id <name>
///   # observations <label> <label> ...
///   # actions <label> ...
///   # meta <key> <value...>        (any number)
///   time,obs,action
///   0.5,loc1,stay
///
/// Errors name the offending line: MalformedLine, UnknownSymbol, NonMonotoneTime.
EventSequence parse_event_file(std::string_view text);
EventSequence load_event_file(const std::filesystem::path& path);

/// Inverse of parse_event_file; times use shortest round-trip formatting.
std::string write_event_file(const EventSequence& seq);

/// Ground truth keyed by event time.
std::string write_agent_truth(const std::vector<AgentTruth>& truth);
std::vector<AgentTruth> parse_agent_truth(std::string_view text);
std::string write_state_truth(const EventSequence& seq, const std::vector<int>& states);

/// Labeled dense matrix: "# smjp-matrix v1", "# name <name>", "# shape R C",
/// then R rows of C space-separated values.
std::string write_matrix_doc(const std::string& name, const Matrix& m);
Matrix parse_matrix_doc(std::string_view text);

struct Quantization {
  std::vector<int> labels;
  Matrix centroids;  // k x d
  double inertia = 0.0;  // summed squared distance to the assigned centroid
  int iterations = 0;
};

/// k-means (squared Euclidean) from k-means++ seeding; Lloyd iterations until the
/// assignment stops changing or 300 iterations. Rows of `points` are samples.
/// Throws KTooLarge when k exceeds the number of distinct points.
Quantization quantize_locations(const Matrix& points, int k, std::uint64_t seed);

/// Parses "x,y" (or wider) numeric rows; '#' lines and blank lines are skipped.
Matrix parse_points(std::string_view text);

/// Every tunable of a CLI run.
struct RunConfig {
  std::uint64_t seed = 0;
  int n_states = 5;
  int range_min = 2;
  int range_max = 8;
  FitConfig fit;
  ToyConfig toy;
  WorldConfig world;
  BeliefGridConfig belief;
  double horizon = 3600.0;  // foraging simulation length, seconds
  SubgraphOptions subgraph;
  OperatorOptions operators;
  int cocluster_restarts = 20;
  int cocluster_rows = 0;  // 0 selects sizes from the loss surface
  int cocluster_cols = 0;
  int cocluster_max = 8;
  double interval_bin_width = 1.0;
  int quantize_k = 2;

  void validate() const;
};

/// JSON object with optional sections "fit", "toy", "world", "belief",
/// "subgraph", "operators" and top-level scalars. Unknown keys are rejected.
RunConfig parse_run_config(std::string_view json_text, RunConfig base = {});

/// Canonical single-line JSON of every field.
std::string run_config_json(const RunConfig& config);

/// FNV-1a 64-bit.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

/// Reproducibility record written next to every CLI output.
class Manifest {
 public:
  Manifest(std::string command, std::uint64_t seed, std::string config_json);

  void add_input(const std::filesystem::path& path, std::string_view contents);
  void add_output(const std::string& name, std::string_view contents);
  void add_argument(const std::string& key, const std::string& value);

  std::string str() const;

 private:
  struct Entry {
    std::string name;
    std::uint64_t digest;
    std::size_t bytes;
  };
  std::string command_;
  std::uint64_t seed_;
  std::string config_json_;
  std::vector<std::pair<std::string, std::string>> arguments_;
  std::vector<Entry> inputs_, outputs_;
};

}  // namespace smjp
