#include "sbgnn/report.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace sbgnn::report {

double round3(double x) {
  if (!std::isfinite(x)) return x;
  return std::round(x * 1000.0) / 1000.0;
}

json stats_json(const DatasetStats& s) {
  return {{"n_u", s.n_u},
          {"n_v", s.n_v},
          {"n_edges", s.n_edges},
          {"n_positive", s.n_positive},
          {"n_negative", s.n_negative},
          {"pos_fraction", s.pos_fraction},
          {"neg_fraction", s.neg_fraction}};
}

namespace {

template <typename Class, std::size_t N, std::size_t M>
json census_impl(const balance::Census<Class, N>& c, const std::array<Class, M>& classes) {
  json per_class = json::object();
  for (Class k : classes) {
    per_class[std::string(balance::label(k))] = {
        {"count", c.count(k)},
        {"fraction", round3(c.fraction(k))},
        {"expectation", round3(c.expectation(k))},
        {"fraction_full", c.fraction(k)},
        {"expectation_full", c.expectation(k)},
        {"balanced", balance::is_balanced(k)}};
  }
  return {{"classes", per_class},
          {"total", c.total},
          {"positive_ratio", c.positive_ratio},
          {"balanced_fraction", round3(c.balanced_fraction)},
          {"balanced_expectation", round3(c.balanced_expectation)},
          {"unbalanced_fraction", round3(c.unbalanced_fraction())},
          {"unbalanced_expectation", round3(c.unbalanced_expectation())},
          {"balanced_fraction_full", c.balanced_fraction},
          {"balanced_expectation_full", c.balanced_expectation}};
}

template <typename Class, std::size_t N, std::size_t M>
void csv_impl(std::ostream& out, const std::string& perspective, const balance::Census<Class, N>& c,
              const std::array<Class, M>& classes) {
  for (Class k : classes) {
    out << perspective << ',' << balance::label(k) << ',' << c.count(k) << ','
        << json(round3(c.fraction(k))).dump() << ',' << json(round3(c.expectation(k))).dump() << '\n';
  }
}

}  // namespace

json census_json(const balance::ButterflyCensus& c) { return census_impl(c, balance::kAllButterflyClasses); }
json census_json(const balance::TriangleCensus& c) { return census_impl(c, balance::kAllTriangleClasses); }

void write_census_csv_header(std::ostream& out) { out << "perspective,class,count,fraction,expectation\n"; }

void write_census_csv(std::ostream& out, const std::string& perspective, const balance::ButterflyCensus& c) {
  csv_impl(out, perspective, c, balance::kAllButterflyClasses);
}

void write_census_csv(std::ostream& out, const std::string& perspective, const balance::TriangleCensus& c) {
  csv_impl(out, perspective, c, balance::kAllTriangleClasses);
}

json split_json(const EdgeSplit& s) {
  return {{"train", s.train},
          {"validation", s.validation},
          {"test", s.test},
          {"seed", s.seed},
          {"fractions", {s.fractions.train, s.fractions.validation, s.fractions.test}}};
}

EdgeSplit split_from_json(const json& j, const SignedBipartiteGraph& g) {
  EdgeSplit s;
  try {
    s.train = j.at("train").get<std::vector<std::size_t>>();
    s.validation = j.at("validation").get<std::vector<std::size_t>>();
    s.test = j.at("test").get<std::vector<std::size_t>>();
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("fractions")) {
      const auto f = j.at("fractions").get<std::vector<double>>();
      if (f.size() != 3) throw FormatError("split: fractions must have three entries");
      s.fractions = {f[0], f[1], f[2]};
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("split: ") + e.what());
  }
  try {
    validate_split(g, s);
  } catch (const GraphError& e) {
    throw FormatError(std::string("split does not match graph: ") + e.what());
  }
  return s;
}

json epoch_json(const train::EpochLog& e) {
  return {{"epoch", e.epoch},
          {"loss", e.loss},
          {"val_auc", e.val_auc ? json(*e.val_auc) : json(nullptr)}};
}

json metrics_json(const metrics::MetricsReport& m) {
  return {{"auc", m.auc},
          {"binary_f1", m.binary_f1},
          {"macro_f1", m.macro_f1},
          {"micro_f1", m.micro_f1},
          {"n_edges_evaluated", m.n_edges_evaluated}};
}

json aggregate_json(std::span<const metrics::MetricsReport> runs) {
  if (runs.empty()) throw FormatError("aggregate: no runs");
  json per_run = json::array();
  for (const auto& r : runs) per_run.push_back(metrics_json(r));

  json mean = json::object();
  json stddev = json::object();
  const auto summarize = [&](const char* key, double metrics::MetricsReport::*field) {
    const double n = static_cast<double>(runs.size());
    double sum = 0.0;
    for (const auto& r : runs) sum += r.*field;
    const double mu = sum / n;
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.*field - mu) * (r.*field - mu);
    mean[key] = mu;
    stddev[key] = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  };
  summarize("auc", &metrics::MetricsReport::auc);
  summarize("binary_f1", &metrics::MetricsReport::binary_f1);
  summarize("macro_f1", &metrics::MetricsReport::macro_f1);
  summarize("micro_f1", &metrics::MetricsReport::micro_f1);
  return {{"runs", per_run}, {"n_runs", runs.size()}, {"mean", mean}, {"std", stddev}};
}

json checkpoint_json(const model::SbgnnModel& m) {
  const auto& c = m.config();
  json header = {{"d", c.dim},
                 {"L", c.layers},
                 {"aggregator", std::string(model::to_string(c.aggregator))},
                 {"predictor", std::string(model::to_string(c.predictor))},
                 {"n_u", c.n_u},
                 {"n_v", c.n_v},
                 {"seed", m.seed()},
                 {"dropout", c.dropout},
                 {"use_set1", c.use_set1},
                 {"use_set2", c.use_set2}};
  return {{"header", header}, {"parameters", diff::to_json(m.params())}};
}

model::SbgnnModel model_from_checkpoint(const json& j, Index n_u, Index n_v) {
  model::ModelConfig c;
  std::uint64_t seed = 0;
  try {
    const auto& h = j.at("header");
    c.dim = h.at("d").get<int>();
    c.layers = h.at("L").get<int>();
    c.aggregator = model::parse_aggregator(h.at("aggregator").get<std::string>());
    c.predictor = model::parse_predictor(h.at("predictor").get<std::string>());
    c.n_u = h.at("n_u").get<Index>();
    c.n_v = h.at("n_v").get<Index>();
    seed = h.at("seed").get<std::uint64_t>();
    c.dropout = h.value("dropout", c.dropout);
    c.use_set1 = h.value("use_set1", true);
    c.use_set2 = h.value("use_set2", true);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (c.n_u != n_u || c.n_v != n_v)
    throw FormatError("checkpoint was trained on a graph with " + std::to_string(c.n_u) + "+" +
                      std::to_string(c.n_v) + " nodes, input has " + std::to_string(n_u) + "+" +
                      std::to_string(n_v));
  try {
    model::SbgnnModel m(c, seed);
    diff::load_json(m.params(), j.at("parameters"));
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint parameters: ") + e.what());
  } catch (const diff::DiffError& e) {
    throw FormatError(std::string("checkpoint parameters: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw FormatError("failed writing '" + path + "'");
}

}  // namespace sbgnn::report
