#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "sbgnn/balance.hpp"
#include "sbgnn/diff.hpp"
#include "sbgnn/graph.hpp"
#include "sbgnn/report.hpp"
#include "sbgnn/train.hpp"

namespace sbgnn::cli {
namespace {

namespace fs = std::filesystem;
using report::json;

/// Input or configuration problem: exit 2.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InputOptions {
  std::string path;
  bool numeric_ids = false;
};

void add_input(CLI::App* cmd, InputOptions& in) {
  cmd->add_option("--input", in.path, "Edge list: <u> <v> <sign> per line")->required();
  cmd->add_flag("--numeric-ids", in.numeric_ids, "Order node ids numerically instead of lexicographically");
}

LoadedGraph load(const InputOptions& in) {
  return load_edge_list(in.path, in.numeric_ids ? IdMode::Numeric : IdMode::Named);
}

SplitFractions parse_fractions(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw InputError("bad fraction '" + item + "'");
    values.push_back(x);
  }
  if (values.size() != 3) throw InputError("--fractions needs three comma-separated values");
  SplitFractions f{values[0], values[1], values[2]};
  try {
    check_fractions(f);
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  return f;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

json manifest(const std::string& command, const std::vector<std::string>& args, json inputs,
              json config, json outputs) {
  return {{"command", command},
          {"arguments", args},
          {"inputs", std::move(inputs)},
          {"config", std::move(config)},
          {"outputs", std::move(outputs)},
          {"tool_version", kVersion},
          {"created", timestamp()}};
}

// ---------------------------------------------------------------- analyze

struct AnalyzeOptions {
  InputOptions input;
  std::string out;
  std::string csv;
  std::string side = "U";
  std::string perspective = "both";
};

int cmd_analyze(const AnalyzeOptions& o, std::ostream& out) {
  const auto loaded = load(o.input);
  const auto& g = loaded.graph;
  const Side side = o.side == "U" ? Side::U : Side::V;
  const bool do_butterfly = o.perspective != "triangle";
  const bool do_triangle = o.perspective != "butterfly";

  json result = {{"input", o.input.path}, {"stats", report::stats_json(compute_stats(g))}};
  std::optional<balance::ButterflyCensus> butterflies;
  std::optional<balance::TriangleCensus> triangles;
  if (do_butterfly) {
    butterflies = balance::count_butterflies(g);
    result["butterfly"] = report::census_json(*butterflies);
  }
  if (do_triangle) {
    const auto projected = balance::project_same_set(g, side);
    triangles = balance::count_signed_triangles(projected);
    auto t = report::census_json(*triangles);
    t["side"] = o.side;
    t["projected_edges"] = projected.edges.size();
    t["projected_positive"] = projected.n_positive();
    result["triangle"] = std::move(t);
  }
  report::write_json_file(o.out, result);

  if (!o.csv.empty()) {
    std::ofstream csv(o.csv);
    if (!csv) throw InputError("cannot write '" + o.csv + "'");
    report::write_census_csv_header(csv);
    if (butterflies) report::write_census_csv(csv, "butterfly", *butterflies);
    if (triangles) report::write_census_csv(csv, "triangle_" + o.side, *triangles);
  }
  if (butterflies)
    out << "butterflies " << butterflies->total << ", balanced " << report::round3(butterflies->balanced_fraction)
        << '\n';
  if (triangles)
    out << "triangles (" << o.side << ") " << triangles->total << ", balanced "
        << report::round3(triangles->balanced_fraction) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- stats

struct StatsOptions {
  InputOptions input;
  std::string out;
  std::string canonical;
};

int cmd_stats(const StatsOptions& o, std::ostream& out) {
  const auto loaded = load(o.input);
  const auto stats = compute_stats(loaded.graph);
  auto j = report::stats_json(stats);
  j["duplicates_collapsed"] = loaded.duplicates_collapsed;
  if (o.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    report::write_json_file(o.out, j);
  }
  if (!o.canonical.empty()) {
    std::ofstream f(o.canonical);
    if (!f) throw InputError("cannot write '" + o.canonical + "'");
    write_edge_list(f, loaded.graph, loaded.names);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- split

struct SplitOptions {
  InputOptions input;
  std::string out;
  std::string fractions = "0.85,0.05,0.10";
  std::uint64_t seed = 0;
};

int cmd_split(const SplitOptions& o, std::ostream& out) {
  const auto fractions = parse_fractions(o.fractions);
  const auto loaded = load(o.input);
  const auto split = split_edges(loaded.graph, fractions, o.seed);
  report::write_json_file(o.out, report::split_json(split));
  out << "split " << split.train.size() << '/' << split.validation.size() << '/' << split.test.size() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct TrainOptions {
  InputOptions input;
  std::string split;
  std::string out_dir;
  std::string aggregator = "mean";
  std::string predictor = "product";
  std::string fractions = "0.85,0.05,0.10";
  std::optional<int> layers;
  int runs = 5;
  bool no_set1 = false;
  bool no_set2 = false;
  train::TrainConfig config;
};

json config_json(const train::TrainConfig& c) {
  return {{"lr", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"epochs", c.epochs},
          {"d", c.dim},
          {"layers", c.layers},
          {"aggregator", std::string(model::to_string(c.aggregator))},
          {"predictor", std::string(model::to_string(c.predictor))},
          {"dropout", c.dropout},
          {"seed", c.seed},
          {"validation_every", c.validation_every},
          {"use_set1", c.use_set1},
          {"use_set2", c.use_set2}};
}

int cmd_train(TrainOptions o, const std::vector<std::string>& args, std::ostream& out) {
  auto& config = o.config;
  try {
    config.aggregator = model::parse_aggregator(o.aggregator);
    config.predictor = model::parse_predictor(o.predictor);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  config.layers = o.layers.value_or(train::TrainConfig::default_layers(config.aggregator));
  config.use_set1 = !o.no_set1;
  config.use_set2 = !o.no_set2;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  if (o.runs < 1) throw InputError("--runs must be at least 1");
  const auto fractions = parse_fractions(o.fractions);

  const auto loaded = load(o.input);
  const auto& g = loaded.graph;
  std::optional<EdgeSplit> fixed_split;
  if (!o.split.empty()) fixed_split = report::split_from_json(report::read_json_file(o.split), g);

  const fs::path root(o.out_dir);
  ensure_dir(root);
  std::vector<std::uint64_t> seeds;
  json outputs = json::array();
  for (int r = 0; r < o.runs; ++r) {
    seeds.push_back(train::run_seed(config.seed, r));
    outputs.push_back("run_" + std::to_string(r));
  }
  outputs.push_back("report.json");
  json inputs = {{"graph", o.input.path}};
  if (fixed_split) inputs["split"] = o.split;
  auto cfg = config_json(config);
  cfg["runs"] = o.runs;
  cfg["run_seeds"] = seeds;
  cfg["fractions"] = {fractions.train, fractions.validation, fractions.test};
  report::write_json_file((root / "manifest.json").string(), manifest("train", args, inputs, cfg, outputs));

  std::vector<metrics::MetricsReport> test_metrics;
  json run_entries = json::array();
  for (int r = 0; r < o.runs; ++r) {
    const fs::path dir = root / ("run_" + std::to_string(r));
    ensure_dir(dir);
    train::TrainConfig rc = config;
    rc.seed = seeds[r];
    const EdgeSplit split = fixed_split ? *fixed_split : split_edges(g, fractions, rc.seed);
    if (split.test.empty()) throw InputError("test set is empty");
    report::write_json_file((dir / "split.json").string(), report::split_json(split));

    std::ofstream log((dir / "log.jsonl").string());
    if (!log) throw InputError("cannot write '" + (dir / "log.jsonl").string() + "'");
    const auto result = train::train(g, split, rc, [&log](const train::EpochLog& e) {
      log << report::epoch_json(e).dump() << '\n';
    });
    log.close();

    report::write_json_file((dir / "checkpoint.json").string(), report::checkpoint_json(result.model));
    const auto m = train::evaluate(result.model, result.index, g, split.test);
    report::write_json_file((dir / "metrics.json").string(), report::metrics_json(m));
    test_metrics.push_back(m);
    run_entries.push_back({{"run", r},
                           {"seed", rc.seed},
                           {"best_epoch", result.best_epoch},
                           {"best_val_auc", result.best_val_auc ? json(*result.best_val_auc) : json(nullptr)},
                           {"final_loss", result.log.back().loss},
                           {"test", report::metrics_json(m)}});
    out << "run " << r << ": test auc " << std::setprecision(4) << m.auc << ", macro f1 " << m.macro_f1 << '\n';
  }

  json rep = report::aggregate_json(test_metrics);
  rep["config"] = config_json(config);
  rep["details"] = run_entries;
  report::write_json_file((root / "report.json").string(), rep);
  out << "mean test auc " << std::setprecision(4) << rep["mean"]["auc"].get<double>() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOptions {
  InputOptions input;
  std::string split;
  std::string checkpoint;
  std::string out;
  double threshold = 0.5;
};

int cmd_eval(const EvalOptions& o, std::ostream& out) {
  const auto loaded = load(o.input);
  const auto& g = loaded.graph;
  const auto split = report::split_from_json(report::read_json_file(o.split), g);
  if (split.test.empty()) throw InputError("test set is empty");
  const auto m = report::model_from_checkpoint(report::read_json_file(o.checkpoint), g.n_u(), g.n_v());
  const auto index = model::build_neighborhoods(g, split);
  const auto metrics = train::evaluate(m, index, g, split.test, o.threshold);
  report::write_json_file(o.out, report::metrics_json(metrics));
  out << "test auc " << std::setprecision(4) << metrics.auc << ", macro f1 " << metrics.macro_f1 << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Signed bipartite network analysis and link sign prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  AnalyzeOptions analyze;
  auto* a = app.add_subcommand("analyze", "Butterfly and projected-triangle balance census");
  add_input(a, analyze.input);
  a->add_option("--out", analyze.out, "Census JSON")->required();
  a->add_option("--csv", analyze.csv, "Optional CSV table, one row per class");
  a->add_option("--side", analyze.side, "Side projected for triangles")->check(CLI::IsMember({"U", "V"}));
  a->add_option("--perspective", analyze.perspective)->check(CLI::IsMember({"butterfly", "triangle", "both"}));

  StatsOptions stats;
  auto* s = app.add_subcommand("stats", "Dataset statistics");
  add_input(s, stats.input);
  s->add_option("--out", stats.out, "Stats JSON (stdout if omitted)");
  s->add_option("--canonical", stats.canonical, "Also write the canonical sorted edge list");

  SplitOptions split;
  auto* sp = app.add_subcommand("split", "Random train/validation/test edge split");
  add_input(sp, split.input);
  sp->add_option("--out", split.out, "Split JSON")->required();
  sp->add_option("--fractions", split.fractions, "train,validation,test");
  sp->add_option("--seed", split.seed);

  TrainOptions tr;
  auto* t = app.add_subcommand("train", "Train and evaluate the model over several runs");
  add_input(t, tr.input);
  t->add_option("--split", tr.split, "Fixed split JSON; a fresh split per run if omitted");
  t->add_option("--out-dir", tr.out_dir)->required();
  t->add_option("--aggregator", tr.aggregator)->check(CLI::IsMember({"mean", "gat"}));
  t->add_option("--predictor", tr.predictor)->check(CLI::IsMember({"product", "mlp"}));
  t->add_option("--d", tr.config.dim, "Embedding width");
  t->add_option("--layers", tr.layers, "Message-passing layers (default 1 for mean, 2 for gat)");
  t->add_option("--lr", tr.config.learning_rate);
  t->add_option("--weight-decay", tr.config.weight_decay);
  t->add_option("--epochs", tr.config.epochs);
  t->add_option("--dropout", tr.config.dropout);
  t->add_option("--seed", tr.config.seed);
  t->add_option("--runs", tr.runs);
  t->add_option("--fractions", tr.fractions, "train,validation,test when splitting per run");
  t->add_option("--validation-every", tr.config.validation_every);
  t->add_flag("--no-set1", tr.no_set1, "Drop opposite-set neighborhoods");
  t->add_flag("--no-set2", tr.no_set2, "Drop same-set neighborhoods");

  EvalOptions ev;
  auto* e = app.add_subcommand("eval", "Test-set metrics of a checkpoint");
  add_input(e, ev.input);
  e->add_option("--split", ev.split)->required();
  e->add_option("--checkpoint", ev.checkpoint)->required();
  e->add_option("--out", ev.out)->required();
  e->add_option("--threshold", ev.threshold);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*a) return cmd_analyze(analyze, out);
    if (*s) return cmd_stats(stats, out);
    if (*sp) return cmd_split(split, out);
    if (*t) return cmd_train(tr, args, out);
    if (*e) return cmd_eval(ev, out);
  } catch (const train::DivergenceError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const diff::DiffError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitNumeric;
  } catch (const GraphError& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace sbgnn::cli
