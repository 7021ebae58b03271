#include "smjp/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <type_traits>
#include <sstream>

#include "json.hpp"
#include "smjp/model_io.hpp"

namespace smjp {

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto c = line.find(',', start);
    out.push_back(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail_at(ErrorCode code, std::size_t line, const std::string& what) {
  throw Error(code, "line " + std::to_string(line) + ": " + what);
}

// Text after the first `skip` whitespace-separated tokens.
std::string rest_after(std::string_view line, int skip) {
  std::size_t i = 0;
  for (int t = 0; t < skip; ++t) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
  }
  return std::string(trim(line.substr(std::min(i, line.size()))));
}

}  // namespace

// ---------------------------------------------------------------------------
// Event files

EventSequence parse_event_file(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != kEventsHeader)
    fail_at(ErrorCode::MalformedLine, 1, "expected '" + std::string(kEventsHeader) + "'");

  EventSequence seq;
  std::optional<Alphabet> observations, actions;
  std::size_t i = 1;
  for (; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    const std::size_t no = i + 1;
    if (trim(line).empty()) continue;
    if (line.front() != '#') break;
    const auto toks = split_ws(line.substr(1));
    if (toks.empty()) continue;
    const std::string& key = toks[0];
    try {
      if (key == "id") {
        seq.id = rest_after(line.substr(1), 1);
      } else if (key == "observations") {
        observations = Alphabet(AlphabetKind::Observation, std::vector<std::string>(toks.begin() + 1, toks.end()));
      } else if (key == "actions") {
        actions = Alphabet(AlphabetKind::Action, std::vector<std::string>(toks.begin() + 1, toks.end()));
      } else if (key == "meta") {
        if (toks.size() < 2) fail_at(ErrorCode::MalformedLine, no, "meta needs a key");
        seq.metadata[toks[1]] = rest_after(line.substr(1), 2);
      }
      // Other comment lines are ignored.
    } catch (const Error& e) {
      if (e.code() == ErrorCode::MalformedLine) throw;
      fail_at(ErrorCode::MalformedLine, no, e.what());
    }
  }
  if (!observations) fail_at(ErrorCode::MalformedLine, i + 1, "missing '# observations' declaration");
  if (!actions) fail_at(ErrorCode::MalformedLine, i + 1, "missing '# actions' declaration");
  seq.observations = *observations;
  seq.actions = *actions;
  if (i >= lines.size()) fail_at(ErrorCode::MalformedLine, i + 1, "missing column header '" + std::string(kEventsColumns) + "'");
  if (trim(lines[i]) != kEventsColumns)
    fail_at(ErrorCode::MalformedLine, i + 1, "expected column header '" + std::string(kEventsColumns) + "'");

  for (++i; i < lines.size(); ++i) {
    const std::size_t no = i + 1;
    const std::string_view line = lines[i];
    if (trim(line).empty() || line.front() == '#') continue;
    const auto fields = split_commas(line);
    if (fields.size() != 3) fail_at(ErrorCode::MalformedLine, no, "expected 3 comma-separated fields");
    double t = 0.0;
    try {
      t = parse_real(trim(fields[0]));
    } catch (const Error&) {
      fail_at(ErrorCode::MalformedLine, no, "bad time '" + std::string(fields[0]) + "'");
    }
    if (!std::isfinite(t)) fail_at(ErrorCode::MalformedLine, no, "time must be finite");
    const std::string obs(trim(fields[1])), act(trim(fields[2]));
    if (!seq.observations.contains(obs)) fail_at(ErrorCode::UnknownSymbol, no, "unknown observation '" + obs + "'");
    if (!seq.actions.contains(act)) fail_at(ErrorCode::UnknownSymbol, no, "unknown action '" + act + "'");
    if (!seq.events.empty() && !(t > seq.events.back().time))
      fail_at(ErrorCode::NonMonotoneTime, no, "time does not increase");
    seq.events.push_back({t, static_cast<int>(seq.observations.index_of(obs)), static_cast<int>(seq.actions.index_of(act))});
  }
  return seq;
}

EventSequence load_event_file(const std::filesystem::path& path) { return parse_event_file(read_file(path)); }

std::string write_event_file(const EventSequence& seq) {
  seq.validate();
  std::ostringstream out;
  out << kEventsHeader << '\n';
  if (!seq.id.empty()) out << "# id " << seq.id << '\n';
  out << "# observations";
  for (const auto& l : seq.observations.labels()) out << ' ' << l;
  out << "\n# actions";
  for (const auto& l : seq.actions.labels()) out << ' ' << l;
  out << '\n';
  for (const auto& [k, v] : seq.metadata) out << "# meta " << k << ' ' << v << '\n';
  out << kEventsColumns << '\n';
  for (const Event& e : seq.events)
    out << format_real(e.time) << ',' << seq.observations.label(static_cast<std::size_t>(e.observation)) << ','
        << seq.actions.label(static_cast<std::size_t>(e.action)) << '\n';
  return out.str();
}

std::string write_agent_truth(const std::vector<AgentTruth>& truth) {
  std::ostringstream out;
  out << "# smjp-truth v1\ntime,z,mdp_state,location,rewarded,bin0,bin1\n";
  for (const auto& t : truth)
    out << format_real(t.time) << ',' << t.z << ',' << t.mdp_state << ',' << t.location << ',' << (t.rewarded ? 1 : 0)
        << ',' << t.bins[0] << ',' << t.bins[1] << '\n';
  return out.str();
}

std::vector<AgentTruth> parse_agent_truth(std::string_view text) {
  const auto lines = split_lines(text);
  std::vector<AgentTruth> out;
  bool header = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t no = i + 1;
    if (trim(lines[i]).empty() || lines[i].front() == '#') continue;
    if (!header) {
      if (trim(lines[i]) != "time,z,mdp_state,location,rewarded,bin0,bin1")
        fail_at(ErrorCode::MalformedLine, no, "unexpected truth column header");
      header = true;
      continue;
    }
    const auto f = split_commas(lines[i]);
    if (f.size() != 7) fail_at(ErrorCode::MalformedLine, no, "expected 7 fields");
    AgentTruth t;
    try {
      t.time = parse_real(trim(f[0]));
      auto integer = [&](std::string_view s) {
        const double v = parse_real(trim(s));
        if (v != std::floor(v) || std::abs(v) > 1e9) throw Error(ErrorCode::MalformedLine, "not an integer");
        return static_cast<int>(v);
      };
      t.z = integer(f[1]);
      t.mdp_state = integer(f[2]);
      t.location = integer(f[3]);
      t.rewarded = integer(f[4]) != 0;
      t.bins = {integer(f[5]), integer(f[6])};
    } catch (const Error& e) {
      fail_at(ErrorCode::MalformedLine, no, e.what());
    }
    if (!out.empty() && !(t.time > out.back().time)) fail_at(ErrorCode::NonMonotoneTime, no, "time does not increase");
    out.push_back(t);
  }
  return out;
}

std::string write_state_truth(const EventSequence& seq, const std::vector<int>& states) {
  if (states.size() != seq.size()) throw Error(ErrorCode::InconsistentShapes, "one state per event required");
  std::ostringstream out;
  out << "# smjp-truth v1\ntime,state\n";
  for (std::size_t i = 0; i < states.size(); ++i) out << format_real(seq.events[i].time) << ',' << states[i] << '\n';
  return out.str();
}

std::string write_matrix_doc(const std::string& name, const Matrix& m) {
  std::ostringstream out;
  out << "# smjp-matrix v1\n# name " << name << "\n# shape " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_real(m(i, j));
    out << '\n';
  }
  return out.str();
}

Matrix parse_matrix_doc(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || trim(lines[0]) != "# smjp-matrix v1") fail_at(ErrorCode::MalformedLine, 1, "expected '# smjp-matrix v1'");
  long rows = -1, cols = -1;
  std::vector<double> values;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t no = i + 1;
    const auto toks = split_ws(lines[i]);
    if (toks.empty()) continue;
    if (toks[0].front() == '#') {
      if (toks.size() == 4 && toks[1] == "shape") {
        try {
          rows = static_cast<long>(parse_real(toks[2]));
          cols = static_cast<long>(parse_real(toks[3]));
        } catch (const Error&) {
          fail_at(ErrorCode::MalformedLine, no, "bad shape");
        }
        if (rows < 1 || cols < 1 || rows > 1000000 || cols > 1000000) fail_at(ErrorCode::MalformedLine, no, "bad shape");
      }
      continue;
    }
    if (cols < 0) fail_at(ErrorCode::MalformedLine, no, "values before '# shape'");
    if (static_cast<long>(toks.size()) != cols) fail_at(ErrorCode::MalformedLine, no, "expected " + std::to_string(cols) + " values");
    for (const auto& t : toks) {
      try {
        values.push_back(parse_real(t));
      } catch (const Error&) {
        fail_at(ErrorCode::MalformedLine, no, "bad number '" + t + "'");
      }
    }
  }
  if (rows < 0 || static_cast<long>(values.size()) != rows * cols)
    throw Error(ErrorCode::MalformedLine, "matrix document has the wrong number of rows");
  Matrix m(rows, cols);
  for (long i = 0; i < rows; ++i)
    for (long j = 0; j < cols; ++j) m(i, j) = values[static_cast<std::size_t>(i * cols + j)];
  return m;
}

// ---------------------------------------------------------------------------
// k-means

Matrix parse_points(std::string_view text) {
  std::vector<std::vector<double>> rows;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_commas(line);
    std::vector<double> row;
    for (auto f : fields) {
      try {
        row.push_back(parse_real(trim(f)));
      } catch (const Error&) {
        fail_at(ErrorCode::MalformedLine, i + 1, "bad number '" + std::string(f) + "'");
      }
      if (!std::isfinite(row.back())) fail_at(ErrorCode::MalformedLine, i + 1, "non-finite coordinate");
    }
    if (!rows.empty() && row.size() != rows.front().size()) fail_at(ErrorCode::MalformedLine, i + 1, "inconsistent column count");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::MalformedLine, "no points");
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

Quantization quantize_locations(const Matrix& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  if (n == 0 || points.cols() == 0) throw Error(ErrorCode::InvalidConfig, "no points to quantize");
  if (!points.allFinite()) throw Error(ErrorCode::NonFinite, "points must be finite");
  if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  auto less = [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c)
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  std::size_t distinct = 1;
  for (std::size_t i = 1; i < order.size(); ++i)
    if (less(order[i - 1], order[i])) ++distinct;
  if (static_cast<std::size_t>(k) > distinct)
    throw Error(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(distinct) + " distinct points");

  Rng rng = Rng(seed).derive("kmeans");
  Matrix centroids(k, points.cols());
  centroids.row(0) = points.row(static_cast<Eigen::Index>(rng.uniform_index(static_cast<std::size_t>(n))));
  Vector d2 = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const auto pick = static_cast<Eigen::Index>(rng.categorical(d2));
    centroids.row(c) = points.row(pick);
    d2 = d2.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  Quantization out;
  out.labels.assign(static_cast<std::size_t>(n), -1);
  for (out.iterations = 0; out.iterations < 300; ++out.iterations) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centroids.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (out.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        out.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, points.cols());
    Vector counts = Vector::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(out.labels[static_cast<std::size_t>(i)]) += points.row(i);
      counts(out.labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts(c) > 0.0) {
        centroids.row(c) = sums.row(c) / counts(c);
      } else {
        // Empty cluster: move it to the point farthest from its centroid.
        Eigen::Index far = 0;
        Vector dist(n);
        for (Eigen::Index i = 0; i < n; ++i)
          dist(i) = (points.row(i) - centroids.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
        dist.maxCoeff(&far);
        centroids.row(c) = points.row(far);
      }
    }
  }
  out.centroids = centroids;
  for (Eigen::Index i = 0; i < n; ++i)
    out.inertia += (points.row(i) - centroids.row(out.labels[static_cast<std::size_t>(i)])).squaredNorm();
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  require(n_states >= 1, "n_states must be >= 1");
  require(range_min >= 1 && range_max >= range_min, "state range must satisfy 1 <= min <= max");
  fit.validate();
  toy.validate();
  world.validate();
  belief.validate();
  require(horizon > 0.0, "horizon must be positive");
  require(subgraph.threshold >= 0.0 && subgraph.threshold < 1.0, "subgraph threshold must lie in [0, 1)");
  require(subgraph.persistence_frac > 0.0 && subgraph.persistence_frac <= 1.0, "persistence_frac must lie in (0, 1]");
  require(operators.tau >= 0.0, "operator tau must be non-negative");
  require(cocluster_restarts >= 1, "cocluster_restarts must be >= 1");
  require(cocluster_rows >= 0 && cocluster_cols >= 0 && cocluster_max >= 1, "cocluster sizes must be non-negative");
  require(interval_bin_width > 0.0, "interval_bin_width must be positive");
  require(quantize_k >= 1, "quantize_k must be >= 1");
}

namespace {

using nlohmann::json;
using Setter = std::function<void(const json&)>;

void apply(const json& obj, const std::string& where, const std::map<std::string, Setter>& setters) {
  if (!obj.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw Error(ErrorCode::InvalidConfig, "unknown key '" + where + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, "bad value for '" + where + key + "': " + e.what());
    }
  }
}

template <typename T>
Setter number(T& out) {
  return [&out](const json& v) {
    if (!v.is_number()) throw Error(ErrorCode::InvalidConfig, "expected a number");
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw Error(ErrorCode::InvalidConfig, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned()) throw Error(ErrorCode::InvalidConfig, "expected a non-negative integer");
    }
    out = v.get<T>();
  };
}

Setter boolean(bool& out) {
  return [&out](const json& v) {
    if (!v.is_boolean()) throw Error(ErrorCode::InvalidConfig, "expected true or false");
    out = v.get<bool>();
  };
}

Setter pair(std::array<double, 2>& out) {
  return [&out](const json& v) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
      throw Error(ErrorCode::InvalidConfig, "expected two numbers");
    out = {v[0].get<double>(), v[1].get<double>()};
  };
}

}  // namespace

RunConfig parse_run_config(std::string_view json_text, RunConfig base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig& c = base;
  FitConfig& f = c.fit;
  apply(doc, "",
        {{"seed", number(c.seed)},
         {"n_states", number(c.n_states)},
         {"range_min", number(c.range_min)},
         {"range_max", number(c.range_max)},
         {"horizon", number(c.horizon)},
         {"cocluster_restarts", number(c.cocluster_restarts)},
         {"cocluster_rows", number(c.cocluster_rows)},
         {"cocluster_cols", number(c.cocluster_cols)},
         {"cocluster_max", number(c.cocluster_max)},
         {"interval_bin_width", number(c.interval_bin_width)},
         {"quantize_k", number(c.quantize_k)},
         {"fit",
          [&](const json& v) {
            apply(v, "fit.",
                  {{"inner_iterations", number(f.inner_iterations)},
                   {"inner_tol", number(f.inner_tol)},
                   {"max_outer_iterations", number(f.max_outer_iterations)},
                   {"tol", number(f.tol)},
                   {"patience", number(f.patience)},
                   {"grids_per_iteration", number(f.grids_per_iteration)},
                   {"eval_grids", number(f.eval_grids)},
                   {"heldout_fraction", number(f.heldout_fraction)},
                   {"restarts", number(f.restarts)},
                   {"omega_prior", number(f.omega_prior)},
                   {"omega_floor", number(f.omega_floor)},
                   {"omega_per_event", number(f.omega_per_event)},
                   {"emission_floor", number(f.emission_floor)},
                   {"per_action_emission", boolean(f.per_action_emission)},
                   {"keep_best", boolean(f.keep_best)},
                   {"plateau_eps", number(f.plateau_eps)},
                   {"plateau_abs", number(f.plateau_abs)},
                   {"threads", number(f.threads)}});
          }},
         {"toy",
          [&](const json& v) {
            apply(v, "toy.",
                  {{"n_states", number(c.toy.n_states)},
                   {"n_observations", number(c.toy.n_observations)},
                   {"n_actions", number(c.toy.n_actions)},
                   {"expected_length", number(c.toy.expected_length)},
                   {"event_rate", number(c.toy.event_rate)},
                   {"rate_scale", number(c.toy.rate_scale)}});
          }},
         {"world",
          [&](const json& v) {
            apply(v, "world.",
                  {{"box_means", pair(c.world.box_means)},
                   {"press_cost", number(c.world.press_cost)},
                   {"switch_cost", number(c.world.switch_cost)},
                   {"reward_value", number(c.world.reward_value)},
                   {"travel_time", number(c.world.travel_time)},
                   {"decision_tick", number(c.world.decision_tick)}});
          }},
         {"belief",
          [&](const json& v) {
            apply(v, "belief.",
                  {{"m_bins", number(c.belief.m_bins)},
                   {"diffusion_eps", number(c.belief.diffusion_eps)},
                   {"discount", number(c.belief.discount)},
                   {"mapping", [&](const json& m) {
                      if (m == "linear") c.belief.mapping = BinMapping::Linear;
                      else if (m == "nearest") c.belief.mapping = BinMapping::Nearest;
                      else throw Error(ErrorCode::InvalidConfig, "belief.mapping must be 'linear' or 'nearest'");
                    }}});
          }},
         {"subgraph",
          [&](const json& v) {
            apply(v, "subgraph.",
                  {{"threshold", number(c.subgraph.threshold)},
                   {"persistence_frac", number(c.subgraph.persistence_frac)},
                   {"local_moves", boolean(c.subgraph.local_moves)}});
          }},
         {"operators", [&](const json& v) {
            apply(v, "operators.",
                  {{"use_exponential", boolean(c.operators.use_exponential)}, {"tau", number(c.operators.tau)}});
          }}});
  c.fit.seed = c.seed;
  c.validate();
  return c;
}

std::string run_config_json(const RunConfig& c) {
  const FitConfig& f = c.fit;
  json doc = {
      {"seed", c.seed},
      {"n_states", c.n_states},
      {"range_min", c.range_min},
      {"range_max", c.range_max},
      {"horizon", c.horizon},
      {"cocluster_restarts", c.cocluster_restarts},
      {"cocluster_rows", c.cocluster_rows},
      {"cocluster_cols", c.cocluster_cols},
      {"cocluster_max", c.cocluster_max},
      {"interval_bin_width", c.interval_bin_width},
      {"quantize_k", c.quantize_k},
      {"fit",
       {{"inner_iterations", f.inner_iterations},
        {"inner_tol", f.inner_tol},
        {"max_outer_iterations", f.max_outer_iterations},
        {"tol", f.tol},
        {"patience", f.patience},
        {"grids_per_iteration", f.grids_per_iteration},
        {"eval_grids", f.eval_grids},
        {"heldout_fraction", f.heldout_fraction},
        {"restarts", f.restarts},
        {"omega_prior", f.omega_prior},
        {"omega_floor", f.omega_floor},
        {"omega_per_event", f.omega_per_event},
        {"emission_floor", f.emission_floor},
        {"per_action_emission", f.per_action_emission},
        {"keep_best", f.keep_best},
        {"plateau_eps", f.plateau_eps},
        {"plateau_abs", f.plateau_abs},
        {"threads", f.threads}}},
      {"toy",
       {{"n_states", c.toy.n_states},
        {"n_observations", c.toy.n_observations},
        {"n_actions", c.toy.n_actions},
        {"expected_length", c.toy.expected_length},
        {"event_rate", c.toy.event_rate},
        {"rate_scale", c.toy.rate_scale}}},
      {"world",
       {{"box_means", c.world.box_means},
        {"press_cost", c.world.press_cost},
        {"switch_cost", c.world.switch_cost},
        {"reward_value", c.world.reward_value},
        {"travel_time", c.world.travel_time},
        {"decision_tick", c.world.decision_tick}}},
      {"belief",
       {{"m_bins", c.belief.m_bins},
        {"diffusion_eps", c.belief.diffusion_eps},
        {"discount", c.belief.discount},
        {"mapping", c.belief.mapping == BinMapping::Linear ? "linear" : "nearest"}}},
      {"subgraph",
       {{"threshold", c.subgraph.threshold},
        {"persistence_frac", c.subgraph.persistence_frac},
        {"local_moves", c.subgraph.local_moves}}},
      {"operators", {{"use_exponential", c.operators.use_exponential}, {"tau", c.operators.tau}}}};
  return doc.dump();
}

// ---------------------------------------------------------------------------
// Manifest

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = digits[value & 0xf];
  return out;
}

Manifest::Manifest(std::string command, std::uint64_t seed, std::string config_json)
    : command_(std::move(command)), seed_(seed), config_json_(std::move(config_json)) {}

void Manifest::add_input(const std::filesystem::path& path, std::string_view contents) {
  inputs_.push_back({path.string(), fnv1a64(contents), contents.size()});
}

void Manifest::add_output(const std::string& name, std::string_view contents) {
  outputs_.push_back({name, fnv1a64(contents), contents.size()});
}

void Manifest::add_argument(const std::string& key, const std::string& value) { arguments_.emplace_back(key, value); }

std::string Manifest::str() const {
  std::ostringstream out;
  out << "smjp-manifest 1\n";
  out << "command " << command_ << '\n';
  out << "seed " << seed_ << '\n';
  out << "model_format " << kModelFormatVersion << '\n';
  out << "eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
  for (const auto& [k, v] : arguments_) out << "arg " << k << ' ' << v << '\n';
  out << "config " << config_json_ << '\n';
  auto sorted = [](std::vector<Entry> v) {
    std::sort(v.begin(), v.end(), [](const Entry& a, const Entry& b) { return a.name < b.name; });
    return v;
  };
  for (const auto& e : sorted(inputs_)) out << "input " << hex64(e.digest) << ' ' << e.bytes << ' ' << e.name << '\n';
  for (const auto& e : sorted(outputs_)) out << "output " << hex64(e.digest) << ' ' << e.bytes << ' ' << e.name << '\n';
  return out.str();
}

}  // namespace smjp
