#pragma once

// WorkflowGen: the car-dealership and Arctic-stations workflow families,
// their synthetic data, and a benchmark runner that writes CSV rows.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lipstick/pigparse.hpp"
#include "lipstick/workflow.hpp"

namespace lipstick::gen {

/// A generated workflow together with its initial state and input sequence.
struct GeneratedRun {
  WorkflowDef def;
  StateData state;
  std::vector<WorkflowInput> inputs;
};

// --- car dealerships ----------------------------------------------------------------

struct DealershipParams {
  std::size_t num_cars = 2000;  // split evenly over the four dealers
  std::size_t num_exec = 10;
  std::uint64_t seed = 1;
  // Reserve price as a multiple of the desired model's base price.
  double reserve_lo = 1.0;
  double reserve_hi = 3.0;
  // Per-run probability that the buyer accepts a bid at or under the reserve.
  double accept_lo = 0.05;
  double accept_hi = 0.25;
};

inline constexpr int kDealers = 4;

/// The 12 models cars are drawn from, plus Civic and Accord for hand fixtures.
const std::vector<std::string>& german_models();
std::int64_t base_price(const std::string& model);

/// Bid amount for one request; nullopt when no car of the model is available.
std::optional<std::int64_t> calc_bid_amount(const std::string& model, std::int64_t num_avail,
                                            std::int64_t num_sold,
                                            std::optional<std::int64_t> previous);

/// CalcBid and PickCar.
pig::BBRegistry dealership_black_boxes();

/// Workflow and module definitions only (no data).
WorkflowDef dealership_workflow();

GeneratedRun gen_dealerships(const DealershipParams& p);

// --- Arctic stations ---------------------------------------------------------------------

enum class Topology { Parallel, Serial, Dense };
enum class Selectivity { All, Season, Month, Year };

std::string to_string(Topology t);
std::string to_string(Selectivity s);
Topology topology_from_string(const std::string& s);
Selectivity selectivity_from_string(const std::string& s);

struct ArcticParams {
  Topology topology = Topology::Parallel;
  std::size_t num_stations = 2;
  std::size_t fanout = 2;  // dense only
  Selectivity selectivity = Selectivity::Month;
  std::size_t num_exec = 1;
  std::uint64_t seed = 1;
};

inline constexpr int kFirstYear = 1961;
inline constexpr int kLastYear = 2000;

/// Station k's upstream stations (empty for stations fed by the input node).
std::vector<std::vector<std::size_t>> arctic_layers(const ArcticParams& p);

WorkflowDef arctic_workflow(const ArcticParams& p);
GeneratedRun gen_arctic(const ArcticParams& p);

/// Season number used by the station programs: winter 0 (Dec-Feb) to autumn 3.
inline int season_of(int month) { return (month % 12) / 3; }

/// (year, month) queried by execution `exec`.
std::pair<int, int> arctic_query_date(std::size_t exec);

// --- benchmark -------------------------------------------------------------------------------

struct BenchmarkSpec {
  std::string family;  // "dealerships" | "arctic"
  std::string topology;
  std::size_t modules = 0;
  std::size_t fanout = 0;
  std::string selectivity;
  std::size_t num_cars = 0;
  std::size_t num_exec = 0;
  GeneratedRun run;
  pig::BBRegistry bbs;
};

BenchmarkSpec dealership_benchmark(const DealershipParams& p);
BenchmarkSpec arctic_benchmark(const ArcticParams& p);

struct BenchmarkRow {
  std::string family;
  std::string topology;
  std::size_t modules = 0;
  std::size_t fanout = 0;
  std::string selectivity;
  std::size_t num_cars = 0;
  std::size_t num_exec = 0;
  std::size_t repetition = 0;
  bool prov = false;
  double exec_time_ms = 0;
  std::size_t graph_nodes = 0;
  std::size_t graph_edges = 0;
  double build_time_ms = 0;  // deserializing the written graph (prov on only)
  double mean_dependency_fraction = 0;  // over Out-node tuples (prov on only)
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;  // one per repetition and prov setting
  /// Per-setting averages, in the same row format (repetition = 0).
  std::vector<BenchmarkRow> means() const;
};

BenchmarkReport run_benchmark(const BenchmarkSpec& spec, std::size_t repetitions);

/// Fraction of state tokens each Out-node tuple of `runner`'s last run
/// depends on.
std::vector<double> output_dependency_fractions(const WorkflowRunner& runner);

void write_csv_header(std::ostream& out);
void write_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);

}  // namespace lipstick::gen
