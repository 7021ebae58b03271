// smjp command-line interface. Every subcommand writes its outputs and a
// manifest.txt into --out; data outputs depend only on inputs, config and seed.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "smjp/analysis.hpp"
#include "smjp/foraging.hpp"
#include "smjp/ingest.hpp"
#include "smjp/model_io.hpp"
#include "smjp/switching_hmm.hpp"

namespace fs = std::filesystem;
using namespace smjp;

namespace {

enum Exit : int { kOk = 0, kUnexpected = 1, kUsage = 2, kNumeric = 3, kInput = 4, kConfig = 5, kIo = 6 };

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Numeric: return kNumeric;
    case ErrorClass::Input: return kInput;
    case ErrorClass::Config: return kConfig;
    case ErrorClass::Io: return kIo;
  }
  return kUnexpected;
}

struct Common {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed (overrides the config)");
  cmd->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "Output directory")->required();
}

class Run {
 public:
  Run(const std::string& command, const Common& common) : dir_(common.out) {
    if (!common.config.empty()) {
      const std::string text = read_file(common.config);
      config_ = parse_run_config(text);
      inputs_.emplace_back(common.config, text);
    }
    if (common.seed) config_.seed = *common.seed;
    config_.fit.seed = config_.seed;
    command_ = command;
  }

  RunConfig& config() { return config_; }

  std::string input(const fs::path& path) {
    std::string text = read_file(path);
    inputs_.emplace_back(path, text);
    return text;
  }

  void arg(const std::string& key, const std::string& value) { args_.emplace_back(key, value); }

  void output(const std::string& name, const std::string& contents) {
    write_file(dir_ / name, contents);
    outputs_.emplace_back(name, contents);
  }

  void finish() {
    config_.validate();
    Manifest m(command_, config_.seed, run_config_json(config_));
    for (const auto& [k, v] : args_) m.add_argument(k, v);
    for (const auto& [p, t] : inputs_) m.add_input(p, t);
    for (const auto& [n, t] : outputs_) m.add_output(n, t);
    write_file(dir_ / "manifest.txt", m.str());
  }

 private:
  fs::path dir_;
  std::string command_;
  RunConfig config_;
  std::vector<std::pair<fs::path, std::string>> inputs_;
  std::vector<std::pair<std::string, std::string>> outputs_;
  std::vector<std::pair<std::string, std::string>> args_;
};

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + format_real(xs[i]);
  return out;
}

template <typename T>
std::string join_int(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + std::to_string(xs[i]);
  return out;
}

std::vector<EventSequence> load_sequences(Run& run, const std::vector<std::string>& paths) {
  std::vector<EventSequence> seqs;
  for (const auto& p : paths) {
    try {
      seqs.push_back(parse_event_file(run.input(p)));
    } catch (const Error& e) {
      throw Error(e.code(), p + ": " + std::string(e.what()).substr(to_string(e.code()).size() + 2));
    }
    run.arg("events", p);
  }
  return seqs;
}

std::vector<EventSequence> heldout_part(const std::vector<EventSequence>& seqs, double fraction) {
  std::vector<EventSequence> out;
  for (const auto& s : seqs) out.push_back(s.split_chronological(1.0 - fraction).second);
  return out;
}

std::string fit_report_text(const FitReport& r) {
  std::ostringstream out;
  out << "heldout_ll " << format_real(r.heldout_ll) << '\n';
  out << "iterations " << r.iterations << '\n';
  out << "converged " << (r.converged ? 1 : 0) << '\n';
  out << "omega " << format_real(r.final_model.omega()) << '\n';
  out << "heldout_trace " << join(r.heldout_trace) << '\n';
  out << "train_trace " << join(r.train_ll_trace) << '\n';
  for (std::size_t k = 0; k < r.action_unobserved.size(); ++k)
    if (r.action_unobserved[k]) out << "unobserved_action " << r.final_model.actions().label(k) << '\n';
  return out.str();
}

void annotate(SwitchingSMJP& model, const FitReport& r, const RunConfig& c) {
  model.metadata["heldout_ll"] = format_real(r.heldout_ll);
  model.metadata["seed"] = std::to_string(c.seed);
  model.metadata["iterations"] = std::to_string(r.iterations);
}

// ---------------------------------------------------------------------------

void cmd_simulate_toy(const Common& common, std::optional<double> length) {
  Run run("simulate-toy", common);
  if (length) run.config().toy.expected_length = *length;
  ToyData data = generate_toy(run.config().toy, run.config().seed);
  run.output("events.csv", write_event_file(data.events));
  run.output("truth.csv", write_state_truth(data.events, data.states_at_events));
  run.output("model.smjp", serialize_model(data.model));
  run.finish();
}

void cmd_simulate_foraging(const Common& common, std::optional<double> horizon) {
  Run run("simulate-foraging", common);
  RunConfig& c = run.config();
  if (horizon) c.horizon = *horizon;
  BeliefMDP mdp = build_belief_mdp(c.world, c.belief);
  value_iteration(mdp);
  const PolicySummary summary = summarize_policy(mdp, mdp.policy);
  Rng rng = Rng(c.seed).derive("foraging");
  ForagingRun sim = simulate_agent(mdp, mdp.policy, c.horizon, rng);
  run.output("events.csv", write_event_file(sim.events));
  run.output("truth.csv", write_agent_truth(sim.truth));

  std::ostringstream policy;
  policy << "# sweeps " << mdp.residuals.size() << " final_residual " << format_real(mdp.residuals.back()) << '\n';
  policy << "# stay " << summary.counts[0] << " press " << summary.counts[1] << " move " << summary.counts[2]
         << " nontrivial " << (summary.nontrivial() ? 1 : 0) << '\n';
  policy << "# rewards " << sim.rewards << " presses " << sim.presses << '\n';
  policy << "state,location,bin0,bin1,action,value\n";
  static const char* names[] = {"stay", "press", "move"};
  for (int s = 0; s < mdp.n_states(); ++s) {
    const AgentStateIndex idx = mdp.decode(s);
    policy << s << ',' << idx.location << ',' << idx.bins[0] << ',' << idx.bins[1] << ','
           << names[mdp.policy[static_cast<std::size_t>(s)]] << ',' << format_real(mdp.values(s)) << '\n';
  }
  run.output("policy.csv", policy.str());
  run.finish();
}

void cmd_fit(const Common& common, const std::vector<std::string>& events, std::optional<int> n_states) {
  Run run("fit", common);
  RunConfig& c = run.config();
  if (n_states) c.n_states = *n_states;
  c.validate();
  const auto seqs = load_sequences(run, events);
  const FitReport report = fit_with_restarts(seqs, c.n_states, c.fit);
  SwitchingSMJP model = report.final_model;
  annotate(model, report, c);
  run.output("model.smjp", serialize_model(model));
  run.output("fit_report.txt", fit_report_text(report));
  run.finish();
}

void cmd_select_states(const Common& common, const std::vector<std::string>& events, const std::string& range) {
  Run run("select-states", common);
  RunConfig& c = run.config();
  if (!range.empty()) {
    const auto colon = range.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument(range);
      c.range_min = std::stoi(range.substr(0, colon));
      c.range_max = std::stoi(range.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "--range expects MIN:MAX, got '" + range + "'");
    }
  }
  c.validate();
  run.arg("range", std::to_string(c.range_min) + ":" + std::to_string(c.range_max));
  const auto seqs = load_sequences(run, events);
  std::vector<int> ns;
  for (int n = c.range_min; n <= c.range_max; ++n) ns.push_back(n);
  StateSelection sel = select_num_states(seqs, ns, c.fit);

  std::ostringstream curve;
  curve << "n_states,heldout_ll,ok\n";
  for (const auto& p : sel.curve) curve << p.n_states << ',' << format_real(p.heldout_ll) << ',' << (p.ok ? 1 : 0) << '\n';
  run.output("ll_curve.csv", curve.str());
  run.output("chosen.txt", "n_states " + std::to_string(sel.chosen) + "\n");
  for (auto& p : sel.curve)
    if (p.n_states == sel.chosen && p.report) {
      SwitchingSMJP model = p.report->final_model;
      annotate(model, *p.report, c);
      run.output("model.smjp", serialize_model(model));
    }
  run.finish();
}

void cmd_evaluate(const Common& common, const std::string& model_path, const std::vector<std::string>& events) {
  Run run("evaluate", common);
  const RunConfig& c = run.config();
  run.arg("model", model_path);
  const SwitchingSMJP model = deserialize_model(run.input(model_path));
  const auto seqs = load_sequences(run, events);
  const double ll = held_out_loglik(model, heldout_part(seqs, c.fit.heldout_fraction), c.fit.eval_grids,
                                    heldout_seed(c.fit), c.fit.omega_per_event);
  run.output("evaluation.txt", "heldout_ll " + format_real(ll) + "\n");
  run.finish();
}

void cmd_correspond(const Common& common, const std::string& model_path, const std::string& events,
                    const std::string& truth_path) {
  Run run("correspond", common);
  const RunConfig& c = run.config();
  run.arg("model", model_path);
  run.arg("truth", truth_path);
  const SwitchingSMJP model = deserialize_model(run.input(model_path));
  const auto seqs = load_sequences(run, {events});
  const auto truth = parse_agent_truth(run.input(truth_path));
  const EventSequence& seq = seqs.front();
  if (truth.size() != seq.size())
    throw Error(ErrorCode::GridMisalignment, "truth has " + std::to_string(truth.size()) + " rows for " +
                                                 std::to_string(seq.size()) + " events");
  Rng rng = Rng(c.seed).derive("correspond").split(seq.digest());
  const TimeGrid grid = build_time_grid(seq, model.omega(), rng);
  const Matrix gamma = event_posteriors(forward_backward(model, grid), grid);
  std::vector<int> z;
  for (const auto& t : truth) z.push_back(t.z);
  const CorrespondenceMatrix corr = state_correspondence(gamma, one_hot(z, 4 * c.belief.m_bins * c.belief.m_bins));
  run.output("joint.txt", write_matrix_doc("joint", corr.joint));
  run.output("conditional.txt", write_matrix_doc("conditional", corr.conditional));
  run.finish();
}

void cmd_cocluster(const Common& common, const std::string& joint_path, std::optional<int> rows, std::optional<int> cols) {
  Run run("cocluster", common);
  RunConfig& c = run.config();
  if (rows) c.cocluster_rows = *rows;
  if (cols) c.cocluster_cols = *cols;
  c.validate();
  run.arg("joint", joint_path);
  const Matrix joint = parse_matrix_doc(run.input(joint_path));
  int kr = c.cocluster_rows, kc = c.cocluster_cols;
  if (kr == 0 || kc == 0) {
    std::vector<int> rs, cs;
    for (int k = 1; k <= std::min<long>(c.cocluster_max, joint.rows()); ++k) rs.push_back(k);
    for (int k = 1; k <= std::min<long>(c.cocluster_max, joint.cols()); ++k) cs.push_back(k);
    if (kr != 0) rs = {kr};
    if (kc != 0) cs = {kc};
    const CoclusterSurface surface = select_cocluster_sizes(joint, rs, cs, c.seed, 0.05, c.cocluster_restarts);
    std::ostringstream s;
    s << "k_rows,k_cols,loss\n";
    for (std::size_t a = 0; a < rs.size(); ++a)
      for (std::size_t b = 0; b < cs.size(); ++b)
        s << rs[a] << ',' << cs[b] << ',' << format_real(surface.loss(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b))) << '\n';
    run.output("surface.csv", s.str());
    kr = surface.chosen_rows;
    kc = surface.chosen_cols;
  }
  const CoClustering cc = cocluster(joint, kr, kc, c.seed, c.cocluster_restarts);
  const Matrix lift = cocluster_lift(joint, cc);
  std::ostringstream out;
  out << "k_rows " << kr << "\nk_cols " << kc << '\n';
  out << "loss " << format_real(cc.mutual_information_loss) << '\n';
  out << "mutual_information " << format_real(mutual_information(joint / joint.sum())) << '\n';
  out << "max_lift " << format_real(lift.maxCoeff()) << '\n';
  out << "row_assignment " << join_int(cc.row_assignment) << '\n';
  out << "col_assignment " << join_int(cc.col_assignment) << '\n';
  run.output("cocluster.txt", out.str());
  run.output("lift.txt", write_matrix_doc("lift", lift));
  run.finish();
}

void cmd_operators(const Common& common, const std::string& model_path, bool use_exp, std::optional<double> tau,
                   std::optional<double> threshold) {
  Run run("operators", common);
  RunConfig& c = run.config();
  if (use_exp) c.operators.use_exponential = true;
  if (tau) c.operators.tau = *tau;
  if (threshold) c.subgraph.threshold = *threshold;
  c.validate();
  run.arg("model", model_path);
  const SwitchingSMJP model = deserialize_model(run.input(model_path));
  const auto ops = all_joint_operators(model, c.operators, c.subgraph);
  std::ostringstream out;
  out << "# operator T_i T_j for every ordered action pair\n";
  out << "# graph symmetrized (W + W^T)/2, threshold " << format_real(c.subgraph.threshold) << ", persistence_frac "
      << format_real(c.subgraph.persistence_frac) << ", operator " << (c.operators.use_exponential ? "exp(A tau)" : "B")
      << '\n';
  for (const auto& op : ops) {
    out << "operator " << model.actions().label(static_cast<std::size_t>(op.i)) << ' '
        << model.actions().label(static_cast<std::size_t>(op.j)) << " distinct_pair " << (op.i < op.j ? 1 : 0) << '\n';
    for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
      for (Eigen::Index q = 0; q < op.matrix.cols(); ++q) out << (q ? " " : "") << format_real(op.matrix(r, q));
      out << '\n';
    }
    if (op.subgraphs.partition.empty()) {
      out << "partition none\n";
      continue;
    }
    out << "partition " << join_int(op.subgraphs.partition) << '\n';
    out << "modularity " << format_real(op.subgraphs.modularity) << '\n';
    for (const auto& p : op.subgraphs.persistent) out << "persistent " << join_int(p) << '\n';
  }
  run.output("operators.txt", out.str());
  run.finish();
}

std::vector<int> symbols(const Alphabet& alphabet, const std::vector<std::string>& labels) {
  std::vector<int> out;
  for (const auto& l : labels) out.push_back(static_cast<int>(alphabet.index_of(l)));
  return out;
}

void cmd_intervals(const Common& common, const std::string& events, const std::vector<std::string>& actions,
                   const std::vector<std::string>& observations, std::optional<double> bin_width) {
  Run run("intervals", common);
  RunConfig& c = run.config();
  if (bin_width) c.interval_bin_width = *bin_width;
  c.validate();
  const auto seqs = load_sequences(run, {events});
  IntervalFilter filter{symbols(seqs.front().actions, actions), symbols(seqs.front().observations, observations)};
  for (const auto& a : actions) run.arg("action", a);
  for (const auto& o : observations) run.arg("observation", o);
  const IntervalStats st = interval_stats(seqs.front(), filter, c.interval_bin_width);
  std::ostringstream out;
  out << "n " << st.intervals.size() << '\n';
  out << "rate " << format_real(st.rate) << '\n';
  out << "exp_loglik " << format_real(st.exp_loglik) << '\n';
  out << "ks_statistic " << format_real(st.ks.statistic) << '\n';
  out << "ks_p_value " << format_real(st.ks.p_value) << '\n';
  out << "bin_width " << format_real(st.histogram.bin_width) << '\n';
  out << "histogram " << join_int(st.histogram.counts) << '\n';
  run.output("intervals.txt", out.str());
  run.finish();
}

void cmd_quantize(const Common& common, const std::string& points_path, std::optional<int> k) {
  Run run("quantize", common);
  RunConfig& c = run.config();
  if (k) c.quantize_k = *k;
  c.validate();
  run.arg("points", points_path);
  const Matrix points = parse_points(run.input(points_path));
  const Quantization q = quantize_locations(points, c.quantize_k, c.seed);
  std::ostringstream labels;
  labels << "label\n";
  for (int l : q.labels) labels << "loc" << l << '\n';
  run.output("labels.csv", labels.str());
  run.output("centroids.txt", write_matrix_doc("centroids", q.centroids));
  run.output("quantize.txt", "inertia " + format_real(q.inertia) + "\niterations " + std::to_string(q.iterations) + "\n");
  run.finish();
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("smjp");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("SMJP_LOG")) spdlog::set_level(spdlog::level::from_str(level));
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Switching semi-Markov jump process toolkit"};
  app.require_subcommand(1);

  Common common;
  std::optional<double> length, horizon, tau, threshold, bin_width;
  std::optional<int> n_states, rows, cols, k;
  std::vector<std::string> events, actions, observations;
  std::string single_events, model, truth, joint, points, range;
  bool use_exp = false;

  auto* toy = app.add_subcommand("simulate-toy", "Sample the toy switching model");
  add_common(toy, common);
  toy->add_option("--length", length, "Expected number of events");

  auto* forage = app.add_subcommand("simulate-foraging", "Solve the belief MDP and simulate the agent");
  add_common(forage, common);
  forage->add_option("--horizon", horizon, "Simulated seconds");

  auto* fitc = app.add_subcommand("fit", "Fit a switching model with random restarts");
  add_common(fitc, common);
  fitc->add_option("--events", events, "events.csv files")->required()->check(CLI::ExistingFile);
  fitc->add_option("--n-states", n_states, "Number of latent states");

  auto* sel = app.add_subcommand("select-states", "Held-out log-likelihood over a state-count range");
  add_common(sel, common);
  sel->add_option("--events", events, "events.csv files")->required()->check(CLI::ExistingFile);
  sel->add_option("--range", range, "MIN:MAX");

  auto* eval = app.add_subcommand("evaluate", "Held-out log-likelihood of a saved model");
  add_common(eval, common);
  eval->add_option("--model", model, "model.smjp")->required()->check(CLI::ExistingFile);
  eval->add_option("--events", events, "events.csv files")->required()->check(CLI::ExistingFile);

  auto* corr = app.add_subcommand("correspond", "Joint distribution of model states and agent states");
  add_common(corr, common);
  corr->add_option("--model", model, "model.smjp")->required()->check(CLI::ExistingFile);
  corr->add_option("--events", single_events, "events.csv")->required()->check(CLI::ExistingFile);
  corr->add_option("--truth", truth, "truth.csv from simulate-foraging")->required()->check(CLI::ExistingFile);

  auto* cc = app.add_subcommand("cocluster", "Information-theoretic co-clustering of a joint matrix");
  add_common(cc, common);
  cc->add_option("--joint", joint, "Matrix document")->required()->check(CLI::ExistingFile);
  cc->add_option("--rows", rows, "Row clusters (0 selects)");
  cc->add_option("--cols", cols, "Column clusters (0 selects)");

  auto* ops = app.add_subcommand("operators", "Joint action operators and their communities");
  add_common(ops, common);
  ops->add_option("--model", model, "model.smjp")->required()->check(CLI::ExistingFile);
  ops->add_flag("--exp", use_exp, "Use exp(A tau) instead of B");
  ops->add_option("--tau", tau, "Horizon for --exp");
  ops->add_option("--threshold", threshold, "Edge threshold");

  auto* iv = app.add_subcommand("intervals", "Interval statistics between matching events");
  add_common(iv, common);
  iv->add_option("--events", single_events, "events.csv")->required()->check(CLI::ExistingFile);
  iv->add_option("--actions", actions, "Action labels to match")->delimiter(',');
  iv->add_option("--observations", observations, "Observation labels to match")->delimiter(',');
  iv->add_option("--bin-width", bin_width, "Histogram bin width (seconds)");

  auto* qz = app.add_subcommand("quantize", "k-means location quantization");
  add_common(qz, common);
  qz->add_option("--points", points, "CSV of coordinates")->required()->check(CLI::ExistingFile);
  qz->add_option("--k", k, "Number of clusters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*toy) cmd_simulate_toy(common, length);
    else if (*forage) cmd_simulate_foraging(common, horizon);
    else if (*fitc) cmd_fit(common, events, n_states);
    else if (*sel) cmd_select_states(common, events, range);
    else if (*eval) cmd_evaluate(common, model, events);
    else if (*corr) cmd_correspond(common, model, single_events, truth);
    else if (*cc) cmd_cocluster(common, joint, rows, cols);
    else if (*ops) cmd_operators(common, model, use_exp, tau, threshold);
    else if (*iv) cmd_intervals(common, single_events, actions, observations, bin_width);
    else if (*qz) cmd_quantize(common, points, k);
  } catch (const Error& e) {
    std::cerr << "smjp " << app.get_subcommands().front()->get_name() << ": " << e.what() << '\n';
    return exit_code(classify(e.code()));
  } catch (const fs::filesystem_error& e) {
    std::cerr << "smjp: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "smjp: unexpected error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kOk;
}
