#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sbgnn/balance.hpp"
#include "sbgnn/graph.hpp"
#include "sbgnn/metrics.hpp"
#include "sbgnn/model.hpp"
#include "sbgnn/train.hpp"

namespace sbgnn::report {

using nlohmann::json;

/// Raised when a JSON document does not have the expected shape.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Display rounding used for every table value.
double round3(double x);

json stats_json(const DatasetStats& s);

/// Per-class {count, fraction, expectation} (3 decimals) plus the full
/// precision values and the balanced/unbalanced summaries.
json census_json(const balance::ButterflyCensus& c);
json census_json(const balance::TriangleCensus& c);

/// One row per class: perspective,class,count,fraction,expectation.
void write_census_csv_header(std::ostream& out);
void write_census_csv(std::ostream& out, const std::string& perspective, const balance::ButterflyCensus& c);
void write_census_csv(std::ostream& out, const std::string& perspective, const balance::TriangleCensus& c);

json split_json(const EdgeSplit& s);
/// Parses and validates a split against g.
EdgeSplit split_from_json(const json& j, const SignedBipartiteGraph& g);

json epoch_json(const train::EpochLog& e);
json metrics_json(const metrics::MetricsReport& m);

/// Per-run metrics with their mean and sample standard deviation (0 for a
/// single run).
json aggregate_json(std::span<const metrics::MetricsReport> runs);

json checkpoint_json(const model::SbgnnModel& m);
/// Rebuilds a model from a checkpoint; throws FormatError if the header
/// disagrees with the graph sizes or the parameters do not match it.
model::SbgnnModel model_from_checkpoint(const json& j, Index n_u, Index n_v);

/// Reads a JSON file; FormatError names the path on failure.
json read_json_file(const std::string& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::string& path, const json& j);

}  // namespace sbgnn::report
