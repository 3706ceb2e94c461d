#pragma once

// Command-line front end. `run` parses argv, executes one subcommand and
// returns the process exit status; failures print a one-line JSON error on
// stderr and map to distinct exit codes (see ErrorCode).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "volseg/aggregation.hpp"
#include "volseg/experiments.hpp"
#include "volseg/forecasting.hpp"
#include "volseg/hmm.hpp"
#include "volseg/io.hpp"
#include "volseg/network.hpp"
#include "volseg/simulation.hpp"

namespace volseg::cli {

namespace fs = std::filesystem;
using io::json;

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

namespace detail {

inline Criterion parse_criterion(const std::string& s) {
  if (s == "aic") return Criterion::aic;
  if (s == "bic") return Criterion::bic;
  throw Error(ErrorCode::invalid_argument, "criterion must be aic or bic, got " + s);
}

inline unsigned resolve_threads(int flag) { return flag > 0 ? static_cast<unsigned>(flag) : default_threads(); }

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, "cannot create directory " + dir, ErrorCode::io);
}

inline std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

template <class Fn>
void write_file(const std::string& path, Fn&& fn) {
  std::ofstream f = io::open_out(path);
  fn(f);
  require(f.good(), "failed writing " + path, ErrorCode::io);
}

inline void write_json(const std::string& path, const json& j) {
  write_file(path, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

inline std::string fmt(double v) { return io::format_double(v); }

}  // namespace detail

struct Common {
  std::uint64_t seed = 7;
  int threads = 0;
  bool verbose = false;
};

// ----------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string kind = "bernoulli_changepoints";
  SimSpec spec;
  std::string out;
};

inline void add_simulate(CLI::App& app, SimulateArgs& a) {
  auto* c = app.add_subcommand("simulate", "Generate a benchmark series with its true state path");
  c->add_option("--kind", a.kind, "bernoulli_changepoints|bernoulli_hmm|gaussian_hmm|gmm_hmm|regime_gaussian|regime_t");
  c->add_option("--n", a.spec.n, "Series length");
  c->add_option("--p1", a.spec.p1, "Emission probability of state 1");
  c->add_option("--p2", a.spec.p2, "Emission probability of state 2");
  c->add_option("--p12", a.spec.p12, "Switching probability");
  c->add_option("--variance", a.spec.variance, "Gaussian HMM variances (two values)")->expected(2);
  c->add_option("--weight-a", a.spec.weight_a, "Mixture weight of component a");
  c->add_option("--variance-a", a.spec.variance_a, "Component a variances per state")->expected(2);
  c->add_option("--variance-b", a.spec.variance_b, "Component b variances per state")->expected(2);
  c->add_option("--sigma", a.spec.sigma, "Regime standard deviations")->expected(3);
  c->add_option("--df", a.spec.df, "Regime t degrees of freedom")->expected(3);
  c->add_option("--replicate", a.spec.replicate, "Replicate id (independent stream)");
  c->add_option("--out", a.out, "Output CSV (default stdout)");
}

inline int run_simulate(SimulateArgs a, const Common& common, Streams s) {
  a.spec.kind = parse_sim_kind(a.kind);
  a.spec.seed = common.seed;
  a.spec.weight_b = 1.0 - a.spec.weight_a;
  const SimResult sim = generate(a.spec);
  if (a.out.empty()) {
    io::write_series(s.out, sim.values, sim.truth);
  } else {
    detail::write_file(a.out, [&](std::ostream& o) { io::write_series(o, sim.values, sim.truth); });
  }
  return 0;
}

// ------------------------------------------------------------------- encode

struct EncodeArgs {
  std::string in, out, gaps_out;
  std::optional<double> lower, upper, threshold;
  std::vector<double> band_quantiles;
};

inline void add_encode(CLI::App& app, EncodeArgs& a) {
  auto* c = app.add_subcommand("encode", "Turn a return series into a 0-1 excursion process");
  c->add_option("--in", a.in, "Input CSV (timestamp,price or t,value)")->required();
  c->add_option("--lower", a.lower, "Lower band edge (two-sided)");
  c->add_option("--upper", a.upper, "Upper band edge (two-sided)");
  c->add_option("--band-quantiles", a.band_quantiles, "Two-sided band at these quantile levels")->expected(2)->delimiter(',');
  c->add_option("--threshold", a.threshold, "Signed one-sided threshold");
  c->add_option("--out", a.out, "Bits CSV (default stdout)");
  c->add_option("--gaps-out", a.gaps_out, "Recurrence times CSV");
}

inline ExcursionProcess encode_from_args(std::span<const double> values, std::optional<double> lower,
                                         std::optional<double> upper, std::optional<double> threshold,
                                         const std::vector<double>& band_quantiles) {
  if (threshold) return encode_one_sided(values, *threshold);
  if (!band_quantiles.empty()) {
    const std::vector<double> band = quantiles(values, band_quantiles);
    return encode_excursion(values, band[0], band[1]);
  }
  require(lower && upper, "give --lower and --upper, --band-quantiles, or --threshold");
  return encode_excursion(values, *lower, *upper);
}

inline int run_encode(const EncodeArgs& a, Streams s) {
  const io::SeriesInput input = io::read_series(a.in);
  const ExcursionProcess x = encode_from_args(input.returns.values, a.lower, a.upper, a.threshold, a.band_quantiles);
  if (a.out.empty()) {
    io::write_bits(s.out, x.bits);
  } else {
    detail::write_file(a.out, [&](std::ostream& o) { io::write_bits(o, x.bits); });
  }
  if (!a.gaps_out.empty()) {
    const RecurrenceSequence r = recurrence_times(x);
    detail::write_file(a.gaps_out, [&](std::ostream& o) {
      io::CsvWriter w(o);
      w.row({"index", "gap"});
      for (std::size_t i = 0; i < r.gaps.size(); ++i) w.row({std::to_string(i), std::to_string(r.gaps[i])});
    });
  }
  return 0;
}

// ------------------------------------------------------------------- decode

struct DecodeArgs {
  std::string in, out_dir = ".";
  std::vector<double> ladder = default_ladder_levels();
  std::vector<double> band_quantiles;  // single two-sided decode instead of the ladder
  int m = 2;
  std::string criterion = "aic";
  std::optional<int> clusters;
  std::size_t budget = 2000;
  bool emit_plot_data = false;
};

inline void add_decode(CLI::App& app, DecodeArgs& a) {
  auto* c = app.add_subcommand("decode", "Decode states from a return series");
  c->add_option("--in", a.in, "Input CSV")->required();
  c->add_option("--out-dir", a.out_dir, "Directory for outputs");
  c->add_option("--ladder", a.ladder, "Quantile levels of the threshold ladder")->delimiter(',');
  c->add_option("--band-quantiles", a.band_quantiles, "Decode one two-sided band instead of the ladder")
      ->expected(2)
      ->delimiter(',');
  c->add_option("--m", a.m, "States per decoded process");
  c->add_option("--criterion", a.criterion, "aic or bic");
  c->add_option("--clusters", a.clusters, "Cluster count (silhouette choice when omitted)");
  c->add_option("--budget", a.budget, "Maximum parameter combinations per search");
  c->add_flag("--emit-plot-data", a.emit_plot_data, "Write tidy CSVs for plotting");
}

inline void write_cluster_outputs(const std::string& dir, const EmissionMatrix& em, const ClusterResult& cr,
                                  bool plot_data) {
  detail::write_file(detail::join(dir, "clusters.csv"), [&](std::ostream& o) { io::write_labels(o, cr.labels, "cluster"); });
  detail::write_json(detail::join(dir, "clusters.json"), io::to_json(cr));
  if (!plot_data) return;
  detail::write_file(detail::join(dir, "plot_trajectory.csv"), [&](std::ostream& o) {
    io::CsvWriter w(o);
    w.row({"t", "cluster"});
    for (std::size_t t = 0; t < cr.labels.size(); ++t) w.row({std::to_string(t), std::to_string(cr.labels[t])});
  });
  detail::write_file(detail::join(dir, "plot_cdf.csv"), [&](std::ostream& o) {
    io::CsvWriter w(o);
    w.row({"cluster", "threshold", "cdf", "raw_cdf"});
    for (std::size_t c = 0; c < cr.cdf.size(); ++c)
      for (std::size_t i = 0; i < cr.sorted_thresholds.size(); ++i)
        w.row({std::to_string(c + 1), detail::fmt(cr.sorted_thresholds[i]), detail::fmt(cr.cdf[c][i]),
               detail::fmt(cr.raw_cdf[c][i])});
  });
  detail::write_file(detail::join(dir, "plot_emissions.csv"), [&](std::ostream& o) {
    io::CsvWriter w(o);
    w.row({"t", "threshold", "emission"});
    for (std::size_t i = 0; i < em.rows.size(); ++i)
      for (std::size_t t = 0; t < em.length(); ++t)
        w.row({std::to_string(t), detail::fmt(em.ladder.thresholds[i]), detail::fmt(em.rows[i][t])});
  });
}

inline int run_decode(const DecodeArgs& a, const Common& common, Streams s) {
  const io::SeriesInput input = io::read_series(a.in);
  const std::vector<double>& values = input.returns.values;
  LossConfig cfg;
  cfg.m = a.m;
  cfg.k = penalty_coefficient(detail::parse_criterion(a.criterion), values.size());
  cfg.budget = a.budget;
  cfg.seed = common.seed;
  cfg.keep_trace = common.verbose;
  const unsigned threads = detail::resolve_threads(common.threads);
  detail::ensure_dir(a.out_dir);
  json summary;

  if (!a.band_quantiles.empty()) {
    cfg.threads = threads;
    const ExcursionProcess x = encode_from_args(values, std::nullopt, std::nullopt, std::nullopt, a.band_quantiles);
    const DecodeResult res = optimize_theta(x, cfg);
    detail::write_file(detail::join(a.out_dir, "labels.csv"),
                       [&](std::ostream& o) { io::write_labels(o, res.best_assignment.labels); });
    json j = io::to_json(res, common.verbose);
    detail::write_json(detail::join(a.out_dir, "decode.json"), j);
    summary = {{"mode", "band"}, {"loss", res.best_loss}, {"states", res.best_assignment.num_states},
               {"alternations", res.best_assignment.num_alternations}};
    if (input.truth) summary["error"] = decoding_error_rate(*input.truth, res.best_assignment.labels);
  } else {
    const ThresholdLadder ladder = ladder_from_quantiles(values, a.ladder);
    const EmissionMatrix em = encode_decode(values, ladder, cfg, threads);
    const ClusterResult cr = cluster_states(em, a.clusters);
    detail::write_file(detail::join(a.out_dir, "emission_matrix.csv"),
                       [&](std::ostream& o) { io::write_emission_matrix(o, em); });
    write_cluster_outputs(a.out_dir, em, cr, a.emit_plot_data);
    summary = {{"mode", "ladder"}, {"k", cr.k}, {"distinct_vectors", cr.distinct.size()}};
    if (input.truth) summary["error"] = decoding_error_rate(*input.truth, cr.labels);
  }
  s.out << summary.dump() << '\n';
  return 0;
}

// ------------------------------------------------------------------ cluster

struct ClusterArgs {
  std::string in, out_dir = ".";
  std::optional<int> clusters;
  bool emit_plot_data = false;
};

inline void add_cluster(CLI::App& app, ClusterArgs& a) {
  auto* c = app.add_subcommand("cluster", "Cluster a saved emission matrix");
  c->add_option("--in", a.in, "emission_matrix.csv")->required();
  c->add_option("--out-dir", a.out_dir, "Directory for outputs");
  c->add_option("--clusters", a.clusters, "Cluster count (silhouette choice when omitted)");
  c->add_flag("--emit-plot-data", a.emit_plot_data, "Write tidy CSVs for plotting");
}

inline int run_cluster(const ClusterArgs& a, Streams s) {
  const EmissionMatrix em = io::read_emission_matrix(io::read_csv(a.in));
  const ClusterResult cr = cluster_states(em, a.clusters);
  detail::ensure_dir(a.out_dir);
  write_cluster_outputs(a.out_dir, em, cr, a.emit_plot_data);
  s.out << json{{"k", cr.k}, {"distinct_vectors", cr.distinct.size()}}.dump() << '\n';
  return 0;
}

// ---------------------------------------------------------------------- hmm

struct HmmArgs {
  std::string in, out_dir = ".";
  std::string family = "gaussian";
  std::size_t states = 2;
  int restarts = 10;
  int max_iters = 500;
  double tol = 1e-6;
};

inline void add_hmm(CLI::App& app, HmmArgs& a) {
  auto* c = app.add_subcommand("hmm", "Fit an HMM baseline by Baum-Welch and decode it with Viterbi");
  c->add_option("--in", a.in, "Input CSV (t,value)")->required();
  c->add_option("--out-dir", a.out_dir, "Directory for outputs");
  c->add_option("--family", a.family, "bernoulli or gaussian");
  c->add_option("--states", a.states, "Hidden state count");
  c->add_option("--restarts", a.restarts, "Random restarts");
  c->add_option("--max-iters", a.max_iters, "Iteration cap per restart");
  c->add_option("--tol", a.tol, "Log-likelihood tolerance");
}

inline int run_hmm(const HmmArgs& a, const Common& common, Streams s) {
  const io::SeriesInput input = io::read_series(a.in);
  const std::vector<double>& obs = input.returns.values;
  const unsigned threads = detail::resolve_threads(common.threads);
  const RandomRestarts rr{a.restarts, common.seed};
  detail::ensure_dir(a.out_dir);
  std::vector<int> path;
  json params;
  double ll = 0.0;
  bool floored = false;
  if (a.family == "bernoulli") {
    const auto fit = fit_hmm<BernoulliEmission>(obs, a.states, rr, a.max_iters, a.tol, threads);
    path = viterbi(obs, fit.params);
    params = io::to_json(fit.params);
    ll = fit.log_likelihood();
  } else if (a.family == "gaussian") {
    const auto fit = fit_hmm<GaussianEmission>(obs, a.states, rr, a.max_iters, a.tol, threads);
    path = viterbi(obs, fit.params);
    params = io::to_json(fit.params);
    ll = fit.log_likelihood();
    floored = fit.variance_floored;
  } else {
    throw Error(ErrorCode::invalid_argument, "family must be bernoulli or gaussian");
  }
  for (int& v : path) ++v;
  detail::write_json(detail::join(a.out_dir, "hmm.json"), params);
  detail::write_file(detail::join(a.out_dir, "viterbi.csv"), [&](std::ostream& o) { io::write_labels(o, path, "state"); });
  json summary{{"log_likelihood", ll}, {"variance_floored", floored}};
  if (input.truth) summary["error"] = decoding_error_rate(*input.truth, path);
  s.out << summary.dump() << '\n';
  return 0;
}

// ----------------------------------------------------------------- forecast

struct ForecastArgs {
  std::string in, out;
  std::size_t window = 100;
  std::string engine = "nonparametric";
  std::vector<double> ladder = default_ladder_levels();
  std::optional<int> clusters;
  std::size_t hmm_states = 4;
  std::optional<std::size_t> first;
  bool emit_plot_data = false;
};

inline void add_forecast(CLI::App& app, ForecastArgs& a) {
  auto* c = app.add_subcommand("forecast", "Rolling one-step-ahead forecasts by window matching");
  c->add_option("--in", a.in, "Input CSV")->required();
  c->add_option("--out", a.out, "Output CSV t,actual,predicted (default stdout)");
  c->add_option("--window", a.window, "Training window length D");
  c->add_option("--engine", a.engine, "nonparametric or gaussian_hmm");
  c->add_option("--ladder", a.ladder, "Quantile levels of the threshold ladder")->delimiter(',');
  c->add_option("--clusters", a.clusters, "Cluster count of the nonparametric engine");
  c->add_option("--hmm-states", a.hmm_states, "States of the Gaussian HMM engine");
  c->add_option("--first", a.first, "First forecast target index (default 2D)");
  c->add_flag("--emit-plot-data", a.emit_plot_data, "Also write <out>.plot.csv (tidy overlay)");
}

inline int run_forecast(const ForecastArgs& a, const Common& common, Streams s) {
  const io::SeriesInput input = io::read_series(a.in);
  const std::vector<double>& y = input.returns.values;
  ForecastConfig cfg;
  cfg.window = a.window;
  cfg.engine = parse_forecast_engine(a.engine);
  cfg.ladder_levels = a.ladder;
  cfg.clusters = a.clusters;
  cfg.hmm_states = a.hmm_states;
  cfg.decode.seed = common.seed;
  cfg.restarts.seed = common.seed;
  cfg.threads = detail::resolve_threads(common.threads);
  const RollingForecast rf = rolling_forecast(y, a.first.value_or(2 * a.window), cfg);
  const ForecastErrors e = forecast_errors(rf.predicted, rf.actual);
  auto write = [&](std::ostream& o) {
    io::CsvWriter w(o);
    w.row({"t", "actual", "predicted"});
    for (std::size_t i = 0; i < rf.origins.size(); ++i)
      w.row({std::to_string(rf.origins[i]), detail::fmt(rf.actual[i]), detail::fmt(rf.predicted[i])});
  };
  if (a.out.empty()) {
    write(s.out);
  } else {
    detail::write_file(a.out, write);
    if (a.emit_plot_data)
      detail::write_file(a.out + ".plot.csv", [&](std::ostream& o) {
        io::CsvWriter w(o);
        w.row({"t", "series", "value"});
        for (std::size_t i = 0; i < rf.origins.size(); ++i) {
          w.row({std::to_string(rf.origins[i]), "actual", detail::fmt(rf.actual[i])});
          w.row({std::to_string(rf.origins[i]), "predicted", detail::fmt(rf.predicted[i])});
        }
      });
  }
  s.err << json{{"rmse", e.rmse}, {"mae", e.mae}, {"mape", e.mape}, {"mape_excluded", e.mape_excluded}}.dump()
        << '\n';
  return 0;
}

// ------------------------------------------------------------------ network

struct NetworkArgs {
  std::vector<std::string> inputs;
  std::vector<std::string> names;
  std::string out_dir = ".";
  std::string mode = "lag_lead";  // lag_lead on decoded states, classic on binned returns
  double unit = 1.0;
  std::size_t block = 5;
  std::size_t lags = 1;
  int bins = 5;
  std::optional<int> target;
  std::optional<std::size_t> top_k;
  std::optional<double> min_weight;
  bool emit_plot_data = false;
};

inline void add_network(CLI::App& app, NetworkArgs& a) {
  auto* c = app.add_subcommand("network", "Pairwise transfer entropy network");
  c->add_option("--in", a.inputs,
                "Per-instrument CSV: timestamp,state (lag_lead) or t,value (classic); repeat the flag")
      ->required();
  c->add_option("--names", a.names, "Node names (default: file stems)")->delimiter(',');
  c->add_option("--out-dir", a.out_dir, "Directory for outputs");
  c->add_option("--mode", a.mode, "lag_lead or classic");
  c->add_option("--unit", a.unit, "Clock unit for lag_lead");
  c->add_option("--block", a.block, "Block-max width (odd) for lag_lead");
  c->add_option("--target", a.target, "Target state for lag_lead (default: highest seen)");
  c->add_option("--lags", a.lags, "History length for classic");
  c->add_option("--bins", a.bins, "Quantile bins for classic");
  c->add_option("--top-k", a.top_k, "Keep the k strongest edges");
  c->add_option("--min-weight", a.min_weight, "Keep edges at or above this weight");
  c->add_flag("--emit-plot-data", a.emit_plot_data, "Write the reordered heatmap as tidy CSV");
}

inline int run_network(const NetworkArgs& a, const Common& common, Streams s) {
  require(a.inputs.size() >= 2, "network needs at least two instruments", ErrorCode::insufficient_data);
  require(a.names.empty() || a.names.size() == a.inputs.size(), "one name per input file");
  std::vector<std::string> names = a.names;
  if (names.empty())
    for (const auto& p : a.inputs) names.push_back(fs::path(p).stem().string());
  std::vector<std::vector<int>> symbols;
  TEMatrix m;
  const unsigned threads = detail::resolve_threads(common.threads);
  if (a.mode == "lag_lead") {
    std::vector<std::vector<double>> stamps;
    std::vector<std::vector<int>> states;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& path : a.inputs) {
      const io::CsvTable t = io::read_csv(path);
      const auto ts = t.find({"timestamp", "t"});
      const auto st = t.find({"state", "label", "cluster"});
      require(ts && st, path + ": needs timestamp and state columns", ErrorCode::malformed_input);
      stamps.push_back(t.numeric(*ts));
      std::vector<int> v;
      for (double x : t.numeric(*st)) v.push_back(static_cast<int>(x));
      states.push_back(std::move(v));
      if (!stamps.back().empty()) {
        lo = std::min(lo, stamps.back().front());
        hi = std::max(hi, stamps.back().back());
      }
    }
    require(lo <= hi, "no transactions in the inputs", ErrorCode::insufficient_data);
    const auto cells = static_cast<std::size_t>(std::floor((hi - lo) / a.unit)) + 1;
    for (std::size_t i = 0; i < states.size(); ++i)
      symbols.push_back(block_max_summarize(to_clock_symbols(states[i], stamps[i], a.unit, lo, cells), a.block).symbols);
    const std::optional<int> target = a.target;
    m = te_matrix(names, symbols, [&](std::span<const int> x, std::span<const int> y) {
      return target ? te_lag_lead(x, y, *target) : te_lag_lead(x, y);
    }, threads);
  } else if (a.mode == "classic") {
    std::size_t len = std::numeric_limits<std::size_t>::max();
    for (const auto& path : a.inputs) {
      const io::SeriesInput in = io::read_series(path);
      symbols.push_back(simple_binning(in.returns.values, a.bins).symbols);
      len = std::min(len, symbols.back().size());
    }
    for (auto& v : symbols) v.resize(len);
    m = te_matrix(names, symbols, [&](std::span<const int> x, std::span<const int> y) {
      return te_classic(x, y, a.lags);
    }, threads);
  } else {
    throw Error(ErrorCode::invalid_argument, "mode must be lag_lead or classic");
  }

  detail::ensure_dir(a.out_dir);
  detail::write_file(detail::join(a.out_dir, "te_matrix.csv"), [&](std::ostream& o) { io::write_matrix(o, m); });
  const NodeStrengths ns = node_strengths(m);
  detail::write_file(detail::join(a.out_dir, "strengths.csv"), [&](std::ostream& o) {
    io::CsvWriter w(o);
    w.row({"node", "in", "out"});
    for (std::size_t i = 0; i < m.size(); ++i) w.row({m.nodes[i], detail::fmt(ns.in[i]), detail::fmt(ns.out[i])});
  });
  const Reordering r = reorder_matrix(m);
  json heat{{"rows", r.rows}, {"cols", r.cols}};
  bool dissimilarity_ok = true;
  try {
    const auto dis = dissimilarity(m);
    const DissimilarityClustering dc = cluster_dissimilarity(dis);
    heat["dissimilarity_order"] = dc.order;
    heat["dissimilarity_tree"] = io::to_json(dc.tree);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::numerical) throw;
    dissimilarity_ok = false;
  }
  detail::write_json(detail::join(a.out_dir, "heatmap.json"), heat);
  json summary{{"nodes", m.size()}, {"dissimilarity", dissimilarity_ok}};
  if (a.top_k || a.min_weight) {
    const Network net = build_network(m, {a.top_k, a.min_weight});
    detail::write_file(detail::join(a.out_dir, "edges.csv"), [&](std::ostream& o) { io::write_edges(o, m, net); });
    detail::write_file(detail::join(a.out_dir, "network.dot"), [&](std::ostream& o) { io::write_dot(o, m, net); });
    summary["edges"] = net.edges.size();
    if (net.empty_warning) s.err << "warning: the edge filter removed every edge\n";
  }
  if (a.emit_plot_data) {
    const auto reordered = apply_reordering(m, r);
    detail::write_file(detail::join(a.out_dir, "plot_heatmap.csv"), [&](std::ostream& o) {
      io::CsvWriter w(o);
      w.row({"row", "col", "src", "dst", "value"});
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
          w.row({std::to_string(i), std::to_string(j), m.nodes[r.rows[i]], m.nodes[r.cols[j]],
                 detail::fmt(reordered[i][j])});
    });
  }
  s.out << summary.dump() << '\n';
  return 0;
}

// ----------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string design = "changepoint";
  std::size_t reps = 100;
  std::string out;
};

inline void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* c = app.add_subcommand("evaluate", "Run a replicated simulation study and print its table");
  c->add_option("--design", a.design, "changepoint|bernoulli_hmm|emission_distance|gaussian_hmm|mixture_hmm|regime_emission|clustering");
  c->add_option("--reps", a.reps, "Replicates per cell");
  c->add_option("--out", a.out, "Also write the table as CSV");
}

inline int run_evaluate(const EvaluateArgs& a, const Common& common, Streams s) {
  const unsigned threads = detail::resolve_threads(common.threads);
  std::vector<std::vector<std::string>> rows;
  auto ms = [](std::span<const double> v) { return std::pair{detail::fmt(mean(v)), detail::fmt(stddev(v))}; };
  if (a.design == "changepoint") {
    ChangepointOptions o;
    o.reps = a.reps;
    o.seed = common.seed;
    o.threads = threads;
    rows.push_back({"p1", "p2", "n", "criterion", "mean_error", "sd_error", "mean_alternations"});
    for (const auto& c : run_changepoint_study(o))
      rows.push_back({detail::fmt(o.p1), detail::fmt(c.p2), std::to_string(c.n), c.criterion == Criterion::aic ? "aic" : "bic",
                      detail::fmt(c.error.mean), detail::fmt(c.error.sd), detail::fmt(c.mean_alternations)});
  } else if (a.design == "bernoulli_hmm" || a.design == "emission_distance") {
    BernoulliHmmOptions o;
    o.reps = a.reps;
    o.seed = common.seed;
    o.threads = threads;
    if (a.design == "emission_distance") {
      o.p12s = {0.1, 0.01};
      o.p2s = {0.5};
    }
    rows.push_back({"p12", "p2", "truth", "hmm", "ours", "ours_distance", "ours_distance_sd", "hmm_distance",
                    "hmm_distance_sd"});
    for (const auto& c : run_bernoulli_hmm_study(o)) {
      const auto [od, ods] = ms(c.ours_distance);
      const auto [hd, hds] = ms(c.hmm_distance);
      rows.push_back({detail::fmt(c.p12), detail::fmt(c.p2), detail::fmt(mean(c.truth_error)),
                      detail::fmt(mean(c.hmm_error)), detail::fmt(mean(c.ours_error)), od, ods, hd, hds});
    }
  } else if (a.design == "gaussian_hmm") {
    ContinuousOptions o;
    o.reps = a.reps;
    o.seed = common.seed;
    o.threads = threads;
    rows.push_back({"p12", "var1", "var2", "hmm", "ours"});
    for (auto [v1, v2] : {std::pair{0.4, 1.0}, std::pair{1.0, 2.0}, std::pair{1.0, 3.0}})
      for (double p12 : {0.1, 0.05, 0.01, 0.005}) {
        const ContinuousCell c = run_continuous_cell(o, gaussian_hmm_design(p12, v1, v2));
        rows.push_back({detail::fmt(p12), detail::fmt(v1), detail::fmt(v2), detail::fmt(mean(c.hmm_error)),
                        detail::fmt(mean(c.ours_error))});
      }
  } else if (a.design == "mixture_hmm") {
    ContinuousOptions o;
    o.reps = a.reps;
    o.seed = common.seed;
    o.threads = threads;
    rows.push_back({"p12", "variance_set", "weight_a", "ours"});
    for (int vs : {0, 1})
      for (double wa : {0.5, 0.3})
        for (double p12 : {0.1, 0.05, 0.01, 0.005}) {
          const ContinuousCell c = run_continuous_cell(o, gmm_hmm_design(p12, vs, wa));
          rows.push_back({detail::fmt(p12), std::to_string(vs + 1), detail::fmt(wa), detail::fmt(mean(c.ours_error))});
        }
  } else if (a.design == "regime_emission") {
    RegimeEmissionOptions o;
    o.reps = a.reps;
    o.seed = common.seed;
    o.threads = threads;
    rows.push_back({"kind", "band", "state", "mean_emission", "theory", "three_state_reps", "mean_error"});
    for (auto [kind, band] : {std::pair{SimKind::regime_gaussian, 2.0}, std::pair{SimKind::regime_t, 3.0}}) {
      const RegimeEmissionResult r = run_regime_emission(o, kind, band);
      auto theory = regime_tail_probabilities(kind, band);
      std::sort(theory.begin(), theory.end());
      for (std::size_t i = 0; i < 3; ++i)
        rows.push_back({to_string(kind), detail::fmt(band), std::to_string(i + 1), detail::fmt(r.mean_emission[i]),
                        detail::fmt(theory[i]), std::to_string(r.three_state_reps), detail::fmt(mean(r.error))});
    }
  } else if (a.design == "clustering") {
    ClusteringOptions o;
    o.reps = a.reps;
    o.seed = common.seed;
    o.threads = threads;
    rows.push_back({"row_states", "mean_error", "mean_interior_error"});
    for (int m : {2, 3, 4}) {
      o.row_states = m;
      const ClusteringResult r = run_clustering_recovery(o);
      rows.push_back({std::to_string(m), detail::fmt(mean(r.error)), detail::fmt(mean(r.interior_error))});
    }
  } else {
    throw Error(ErrorCode::invalid_argument, "unknown design: " + a.design);
  }
  auto write = [&](std::ostream& o) {
    io::CsvWriter w(o);
    for (const auto& r : rows) w.row(r);
  };
  write(s.out);
  if (!a.out.empty()) detail::write_file(a.out, write);
  return 0;
}

// ---------------------------------------------------------------------- run

inline int report(const Error& e, Streams s) {
  s.err << json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
  return static_cast<int>(e.code());
}

inline int run(int argc, const char* const* argv, Streams s = {}) {
  CLI::App app{"Regime detection by quantile encoding and recurrence-time decoding", "volseg"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Configuration file (TOML or INI); flags override it");
  Common common;
  app.add_option("--seed", common.seed, "Random seed");
  app.add_option("--threads", common.threads, "Worker threads (default: VOLSEG_THREADS or all cores)");
  app.add_flag("-v,--verbose", common.verbose, "Include search traces in JSON outputs");

  SimulateArgs sim;
  EncodeArgs enc;
  DecodeArgs dec;
  ClusterArgs clu;
  HmmArgs hmm;
  ForecastArgs fc;
  NetworkArgs net;
  EvaluateArgs ev;
  add_simulate(app, sim);
  add_encode(app, enc);
  add_decode(app, dec);
  add_cluster(app, clu);
  add_hmm(app, hmm);
  add_forecast(app, fc);
  add_network(app, net);
  add_evaluate(app, ev);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    s.out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    s.out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report(Error(ErrorCode::invalid_argument, e.what()), s);
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "simulate") return run_simulate(sim, common, s);
    if (name == "encode") return run_encode(enc, s);
    if (name == "decode") return run_decode(dec, common, s);
    if (name == "cluster") return run_cluster(clu, s);
    if (name == "hmm") return run_hmm(hmm, common, s);
    if (name == "forecast") return run_forecast(fc, common, s);
    if (name == "network") return run_network(net, common, s);
    if (name == "evaluate") return run_evaluate(ev, common, s);
    throw Error(ErrorCode::invalid_argument, "unknown subcommand " + name);
  } catch (const Error& e) {
    return report(e, s);
  } catch (const nlohmann::json::exception& e) {
    return report(Error(ErrorCode::malformed_input, e.what()), s);
  } catch (const std::bad_alloc&) {
    return report(Error(ErrorCode::numerical, "out of memory"), s);
  }
}

}  // namespace volseg::cli
