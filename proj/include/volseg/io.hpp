#pragma once

// CSV ingestion and export, JSON views of results and a DOT writer for
// networks. Numbers are written in shortest round-trip form so reading an
// output file back gives the same doubles.

#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volseg/aggregation.hpp"
#include "volseg/common.hpp"
#include "volseg/encoding.hpp"
#include "volseg/hmm.hpp"
#include "volseg/model_selection.hpp"
#include "volseg/network.hpp"

namespace volseg::io {

using json = nlohmann::json;

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  require(res.ec == std::errc() && res.ptr == last && first != last, "not a number: '" + s + "' (" + where + ")",
          ErrorCode::malformed_input);
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> find(std::initializer_list<const char*> names) const {
    for (const char* name : names)
      for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return std::nullopt;
  }

  std::vector<double> numeric(std::size_t col) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      out.push_back(parse_double(rows[r][col], "row " + std::to_string(r + 2) + ", column " + header[col]));
    return out;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace detail

/// Comma-separated text with a header row. Blank lines are skipped; every
/// row must have as many cells as the header.
inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells = detail::split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    require(cells.size() == t.header.size(),
            "line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) + " cells, expected " +
                std::to_string(t.header.size()),
            ErrorCode::malformed_input);
    t.rows.push_back(std::move(cells));
  }
  require(!t.header.empty(), "CSV input is empty", ErrorCode::malformed_input);
  return t;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), "cannot open " + path + " for reading", ErrorCode::io);
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  require(out.good(), "cannot open " + path + " for writing", ErrorCode::io);
  return out;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  return read_csv(in);
}

struct SeriesInput {
  ReturnSeries returns;
  std::optional<std::vector<int>> truth;  // from a true_state column
};

/// Accepts `timestamp,price` (converted to log returns) or `t,value`
/// (already returns; an optional `true_state` column is kept).
inline SeriesInput read_series(const CsvTable& t) {
  SeriesInput out;
  if (auto price = t.find({"price"})) {
    const auto ts = t.find({"timestamp", "t"});
    const std::vector<double> prices = t.numeric(*price);
    std::vector<double> stamps = ts ? t.numeric(*ts) : std::vector<double>{};
    out.returns = log_returns(prices, stamps);
    return out;
  }
  const auto value = t.find({"value", "return"});
  require(value.has_value(), "CSV needs a 'price' or 'value' column", ErrorCode::malformed_input);
  out.returns.values = t.numeric(*value);
  if (const auto ts = t.find({"t", "timestamp"})) {
    out.returns.timestamps = t.numeric(*ts);
  } else {
    for (std::size_t i = 0; i < out.returns.values.size(); ++i)
      out.returns.timestamps.push_back(static_cast<double>(i));
  }
  if (const auto st = t.find({"true_state"})) {
    std::vector<int> truth;
    for (double v : t.numeric(*st)) truth.push_back(static_cast<int>(v));
    out.truth = std::move(truth);
  }
  validate(out.returns);
  return out;
}

inline SeriesInput read_series(const std::string& path) { return read_series(read_csv(path)); }

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ostream& out_;
};

inline void write_series(std::ostream& out, std::span<const double> values, std::span<const int> truth = {}) {
  CsvWriter w(out);
  w.row(truth.empty() ? std::vector<std::string>{"t", "value"} : std::vector<std::string>{"t", "value", "true_state"});
  for (std::size_t t = 0; t < values.size(); ++t) {
    std::vector<std::string> r{std::to_string(t), format_double(values[t])};
    if (!truth.empty()) r.push_back(std::to_string(truth[t]));
    w.row(r);
  }
}

inline void write_bits(std::ostream& out, std::span<const std::uint8_t> bits) {
  CsvWriter w(out);
  w.row({"t", "bit"});
  for (std::size_t t = 0; t < bits.size(); ++t) w.row({std::to_string(t), std::to_string(bits[t])});
}

inline void write_labels(std::ostream& out, std::span<const int> labels, const char* name = "label") {
  CsvWriter w(out);
  w.row({"t", name});
  for (std::size_t t = 0; t < labels.size(); ++t) w.row({std::to_string(t), std::to_string(labels[t])});
}

inline std::vector<int> read_labels(const CsvTable& t) {
  const auto col = t.find({"label", "cluster", "state"});
  require(col.has_value(), "CSV needs a 'label', 'cluster' or 'state' column", ErrorCode::malformed_input);
  std::vector<int> out;
  for (double v : t.numeric(*col)) out.push_back(static_cast<int>(v));
  return out;
}

/// Rows are thresholds, columns are time points.
inline void write_emission_matrix(std::ostream& out, const EmissionMatrix& em) {
  CsvWriter w(out);
  std::vector<std::string> header{"threshold"};
  for (std::size_t t = 0; t < em.length(); ++t) header.push_back(std::to_string(t));
  w.row(header);
  for (std::size_t i = 0; i < em.rows.size(); ++i) {
    std::vector<std::string> r{format_double(em.ladder.thresholds[i])};
    for (double v : em.rows[i]) r.push_back(format_double(v));
    w.row(r);
  }
}

inline EmissionMatrix read_emission_matrix(const CsvTable& t) {
  require(!t.header.empty() && t.header[0] == "threshold", "emission matrix CSV must start with 'threshold'",
          ErrorCode::malformed_input);
  EmissionMatrix em;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    em.ladder.thresholds.push_back(parse_double(t.rows[r][0], "threshold"));
    std::vector<double> row;
    for (std::size_t c = 1; c < t.header.size(); ++c) row.push_back(parse_double(t.rows[r][c], "emission"));
    em.rows.push_back(std::move(row));
  }
  em.decodes.resize(em.rows.size());
  return em;
}

inline void write_matrix(std::ostream& out, const TEMatrix& m) {
  CsvWriter w(out);
  std::vector<std::string> header{"node"};
  header.insert(header.end(), m.nodes.begin(), m.nodes.end());
  w.row(header);
  for (std::size_t i = 0; i < m.size(); ++i) {
    std::vector<std::string> r{m.nodes[i]};
    for (double v : m.values[i]) r.push_back(format_double(v));
    w.row(r);
  }
}

inline TEMatrix read_matrix(const CsvTable& t) {
  require(t.header.size() >= 2 && t.header[0] == "node", "matrix CSV must start with 'node'",
          ErrorCode::malformed_input);
  TEMatrix m;
  m.nodes.assign(t.header.begin() + 1, t.header.end());
  for (const auto& row : t.rows) {
    std::vector<double> values;
    for (std::size_t c = 1; c < row.size(); ++c) values.push_back(parse_double(row[c], "matrix entry"));
    m.values.push_back(std::move(values));
  }
  validate(m);
  return m;
}

inline void write_edges(std::ostream& out, const TEMatrix& m, const Network& net) {
  CsvWriter w(out);
  w.row({"src", "dst", "weight"});
  for (const Edge& e : net.edges) w.row({m.nodes[e.src], m.nodes[e.dst], format_double(e.weight)});
}

inline void write_dot(std::ostream& out, const TEMatrix& m, const Network& net) {
  out << "digraph te {\n";
  for (std::size_t i : net.nodes) out << "  \"" << m.nodes[i] << "\";\n";
  for (const Edge& e : net.edges)
    out << "  \"" << m.nodes[e.src] << "\" -> \"" << m.nodes[e.dst] << "\" [weight=" << format_double(e.weight)
        << "];\n";
  out << "}\n";
}

inline json to_json(const SearchParams& p) { return {{"thresholds", p.thresholds}, {"t_star", p.t_star}}; }

inline json nan_to_null(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return out;
}

inline json to_json(const DecodeResult& r, bool with_trace) {
  json j{{"params", to_json(r.best_params)},
         {"loss", r.best_loss},
         {"alternations", r.best_assignment.num_alternations},
         {"emissions", nan_to_null(r.best_assignment.emissions)},
         {"labels", r.best_assignment.labels},
         {"evaluated", r.evaluated}};
  if (with_trace) {
    json trace = json::array();
    for (const Candidate& c : r.trace)
      trace.push_back({{"params", to_json(c.params)}, {"loss", c.loss}, {"alternations", c.alternations}});
    j["trace"] = std::move(trace);
  }
  return j;
}

inline json to_json(const Dendrogram& d) {
  json merges = json::array();
  for (const Merge& m : d.merges)
    merges.push_back({{"left", m.left}, {"right", m.right}, {"height", m.height}, {"size", m.size}});
  return {{"leaves", d.leaves}, {"merges", std::move(merges)}};
}

inline json to_json(const ClusterResult& c) {
  return {{"k", c.k},
          {"degenerate", c.degenerate},
          {"tree", to_json(c.tree)},
          {"multiplicity", c.multiplicity},
          {"silhouettes", c.silhouettes},
          {"thresholds", c.sorted_thresholds},
          {"cdf", c.cdf},
          {"cdf_repaired", c.cdf_repaired}};
}

inline json to_json(const HmmParams<BernoulliEmission>& p) {
  json em = json::array();
  for (const auto& e : p.emissions) em.push_back({{"p", e.p}});
  return {{"init", p.init}, {"trans", p.trans}, {"emissions", em}};
}

inline json to_json(const HmmParams<GaussianEmission>& p) {
  json em = json::array();
  for (const auto& e : p.emissions) em.push_back({{"mean", e.mean}, {"var", e.var}});
  return {{"init", p.init}, {"trans", p.trans}, {"emissions", em}};
}

template <class Emission>
HmmParams<Emission> hmm_from_json(const json& j) {
  HmmParams<Emission> p;
  p.init = j.at("init").get<std::vector<double>>();
  p.trans = j.at("trans").get<std::vector<std::vector<double>>>();
  for (const auto& e : j.at("emissions")) {
    if constexpr (std::is_same_v<Emission, BernoulliEmission>)
      p.emissions.push_back({e.at("p").get<double>()});
    else
      p.emissions.push_back({e.at("mean").get<double>(), e.at("var").get<double>()});
  }
  p.validate();
  return p;
}

}  // namespace volseg::io
