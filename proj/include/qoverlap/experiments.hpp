// Copyright 2026 The qoverlap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qoverlap/circuits.hpp"
#include "qoverlap/dense.hpp"
#include "qoverlap/estimator.hpp"
#include "qoverlap/tensornet.hpp"

namespace qoverlap {

inline constexpr const char* kToolkitVersion = "0.1.0";

enum class ExperimentKind { scaling, circuit_compare, randmeas_compare, povm_search, single_estimate };
enum class CircuitChoice { automatic, swap_test, bell };
/// automatic: dense when the circuit is at most 10 qubits wide, tensor network otherwise.
enum class SimulatorChoice { automatic, dense, tensor_network };

std::string to_string(ExperimentKind k);
std::string to_string(StateFamily f);
std::string to_string(EntryDistribution e);
std::string to_string(CircuitChoice c);
std::string to_string(SimulatorChoice s);

/// Invalid experiment configuration. The message names the offending key.
struct ConfigError : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::single_estimate;
    std::string id;  ///< experiment_id column; defaults to the kind name
    std::uint64_t seed = 1;
    std::filesystem::path out = "results.csv";
    int threads = 1;
    bool timing = false;  ///< fill wall_ms; off keeps CSV output byte-reproducible

    // [states]
    int n_min = 1;
    int n_max = 4;
    std::vector<StateFamily> families = {StateFamily::product, StateFamily::entangled};
    EntryDistribution entries = EntryDistribution::uniform_real;
    int bond_dim = 2;

    // [estimator]
    std::size_t shots = 10000;
    Pairing pairing = Pairing::pooled;
    std::size_t pairs = 10;  ///< single-estimate and circuit-compare pair count

    // [scaling]
    double threshold = 0.05;
    std::size_t batches = 10;
    std::size_t pairs_per_batch = 5;
    std::size_t start_shots = 64;
    std::size_t max_shots = std::size_t{1} << 22;

    // [circuit]
    CircuitChoice circuit = CircuitChoice::automatic;
    LayoutKind layout = LayoutKind::stacked;
    SimulatorChoice simulator = SimulatorChoice::automatic;
    std::size_t circuit_shots = 0;  ///< 0: 500 at n = 2, 1500 at n = 3, `shots` otherwise
    NoiseModel noise{};
    Caps caps{};

    // [randmeas]
    std::size_t instances = 50;
    std::size_t n_u = 100;
    std::size_t n_m = 100;

    // [povm_search]
    std::vector<int> outcomes = {4, 6, 8};
    double resolution_deg = 15.0;
    double refine_deg = 5.0;
    int mcmc_steps = 10000;
    double temperature = 0.05;
    double proposal_scale = 0.05;

    /// Desk-scale defaults for each experiment kind.
    static ExperimentConfig defaults(ExperimentKind kind);
    void validate() const;
    [[nodiscard]] std::string experiment_id() const;
    /// INI rendering that parse_config reads back to an equal config.
    [[nodiscard]] std::string to_ini() const;
};

ExperimentKind parse_experiment_kind(const std::string& s);
StateFamily parse_family(const std::string& s);
EntryDistribution parse_entries(const std::string& s);
CircuitChoice parse_circuit_choice(const std::string& s);
SimulatorChoice parse_simulator(const std::string& s);
LayoutKind parse_layout(const std::string& s);
Pairing parse_pairing(const std::string& s);

/// INI text with sections [experiment], [states], [estimator], [scaling],
/// [circuit], [randmeas], [povm_search]. Missing keys keep the defaults of
/// the experiment kind; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// (section, key) of every config entry, in file order.
std::vector<std::pair<std::string, std::string>> config_keys();
/// Sets one entry from its text form; no cross-field validation.
void set_config_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value);

struct ResultRow {
    std::string experiment_id;
    int n = 0;
    std::string method;
    std::int64_t pair_id = 0;
    std::optional<double> true_overlap;
    double estimate = 0.0;
    std::optional<double> abs_error;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    bool operator==(const ResultRow&) const = default;
};

inline constexpr const char* kCsvHeader =
    "experiment_id,n,method,pair_id,true_overlap,estimate,abs_error,shots,seed,wall_ms";

void write_results(const std::vector<ResultRow>& rows, std::ostream& out);
void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path);
std::vector<ResultRow> read_results(std::istream& in);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

struct MethodSummary {
    std::string method;
    int n = 0;
    std::size_t count = 0;
    double mae = 0.0;
    double mae_stderr = 0.0;
    double mean_true_overlap = 0.0;
};

/// MAE per (method, n) over rows with a truth value, sorted by method then n.
std::vector<MethodSummary> summarize_rows(const std::vector<ResultRow>& rows);

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<MethodSummary> summary;
    /// Scalar findings (fitted exponents, best nu, ...), keyed by name.
    std::map<std::string, double> metrics;
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
};
/// Ordinary least squares y = slope x + intercept; needs two distinct x.
FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Smallest shot count whose batch-average absolute error falls below the
/// threshold: doubling from `start`, then one bisection step.
/// `batch_error(N)` must be deterministic in N.
template <class ErrorFn>
std::size_t find_crossing(ErrorFn&& batch_error, double threshold, std::size_t start, std::size_t max_shots);

ExperimentResult run_scaling(const ExperimentConfig& cfg);
ExperimentResult run_circuit_compare(const ExperimentConfig& cfg);
ExperimentResult run_randmeas_compare(const ExperimentConfig& cfg);
ExperimentResult run_povm_search(const ExperimentConfig& cfg);
ExperimentResult run_single_estimate(const ExperimentConfig& cfg);
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// JSON manifest: config echo, toolkit version, master seed and metrics.
std::string manifest_json(const ExperimentConfig& cfg, const ExperimentResult& result);
/// Writes the CSV to cfg.out and the manifest next to it (`<out>.manifest.json`).
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

template <class ErrorFn>
std::size_t find_crossing(ErrorFn&& batch_error, double threshold, std::size_t start, std::size_t max_shots) {
    std::size_t hi = start;
    while (!(batch_error(hi) < threshold)) {
        if (hi >= max_shots) {
            return max_shots;
        }
        hi = std::min(hi * 2, max_shots);
    }
    if (hi == start) {
        return hi;
    }
    const std::size_t mid = (hi / 2 + hi) / 2;
    return batch_error(mid) < threshold ? mid : hi;
}

}  // namespace qoverlap
