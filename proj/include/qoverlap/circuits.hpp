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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qoverlap/dense.hpp"
#include "qoverlap/estimator.hpp"
#include "qoverlap/tensornet.hpp"
#include "qoverlap/types.hpp"

namespace qoverlap {

enum class GateKind { h, x, y, z, s, sdg, t, tdg, rx, ry, rz, cnot };

struct Gate {
    GateKind kind = GateKind::h;
    int q0 = 0;
    int q1 = -1;  ///< CNOT target
    double param = 0.0;

    static Gate one(GateKind k, int q, double param = 0.0) { return {k, q, -1, param}; }
    static Gate cx(int control, int target) { return {GateKind::cnot, control, target, 0.0}; }
    [[nodiscard]] bool two_qubit() const { return kind == GateKind::cnot; }
    bool operator==(const Gate&) const = default;
};

std::string gate_name(GateKind kind);
std::optional<GateKind> parse_gate_name(std::string_view name);
bool gate_has_param(GateKind kind);
/// Unitary of a single-qubit gate.
Mat2 gate_matrix(const Gate& g);

enum class CircuitRole { none, swap_test, bell };
enum class LayoutKind { stacked, interleaved };

/// Positions of the two registers and the optional ancilla on the line.
struct Layout {
    std::vector<int> reg_a;
    std::vector<int> reg_b;
    std::optional<int> ancilla;

    /// Ancilla (if any) at 0, then register A, then register B.
    static Layout stacked(int n, bool with_ancilla);
    /// Ancilla (if any) at 0, then A_0 B_0 A_1 B_1 ...
    static Layout interleaved(int n, bool with_ancilla);
    static Layout make(LayoutKind kind, int n, bool with_ancilla);

    [[nodiscard]] int n() const { return static_cast<int>(reg_a.size()); }
    [[nodiscard]] int width() const { return 2 * n() + (ancilla ? 1 : 0); }
    /// Throws unless the positions are a bijection onto 0..width-1.
    void validate() const;
    bool operator==(const Layout&) const = default;
};

class Circuit {
public:
    explicit Circuit(int width = 0);

    /// Places the gate in the earliest layer after every gate touching its qubits.
    void add(const Gate& g);
    void add(const std::vector<Gate>& gates);
    /// Appends one explicit layer; its gates must act on disjoint qubits.
    void add_layer(const std::vector<Gate>& gates);

    [[nodiscard]] int width() const { return width_; }
    [[nodiscard]] const std::vector<std::vector<Gate>>& layers() const { return layers_; }
    [[nodiscard]] std::size_t gate_count() const;
    [[nodiscard]] std::size_t cnot_count() const;
    /// True when every CNOT acts on neighbouring qubits.
    [[nodiscard]] bool nearest_neighbour() const;

    CircuitRole role = CircuitRole::none;
    std::optional<Layout> layout;

    bool operator==(const Circuit& o) const {
        return width_ == o.width_ && layers_ == o.layers_ && role == o.role && layout == o.layout;
    }

private:
    void check_gate(const Gate& g) const;
    int width_;
    std::vector<std::vector<Gate>> layers_;
    std::vector<int> frontier_;  ///< per qubit, index of the next free layer
};

struct ResourceCount {
    std::size_t cnots = 0;
    std::size_t layers = 0;
};

ResourceCount count_resources(const Circuit& c);

/// Nearest-neighbour CNOT sequence of length 4(d-1)+1 implementing
/// CNOT(control -> target) at distance d on a line of `width` qubits.
std::vector<Gate> route_long_range_cnot(int control, int target, int width);

/// Per pair (A_i, B_i): routed CNOT A_i -> B_i then H on A_i; all qubits measured.
Circuit build_bell_circuit(int n, LayoutKind layout = LayoutKind::stacked);
/// H on the ancilla, one controlled SWAP per pair, H on the ancilla; CNOTs routed.
Circuit build_standard_swap_test(int n, LayoutKind layout = LayoutKind::stacked);
/// 18 n^2 - 6 n.
std::uint64_t improved_swap_cnot_count(int n);

/// Thrown for malformed circuit text, with 1-based position.
struct CircuitParseError : ParseError {
    CircuitParseError(int line, int column, const std::string& what);
    int line;
    int column;
};

Circuit parse_circuit(std::istream& in);
Circuit parse_circuit(const std::string& text);
void write_circuit(const Circuit& c, std::ostream& out);
std::string circuit_to_text(const Circuit& c);
Circuit load_circuit(const std::filesystem::path& path);
void save_circuit(const Circuit& c, const std::filesystem::path& path);

struct NoiseModel {
    double cnot_lambda = 0.005;
    double readout_flip = 0.01;
    NoiseTarget noise_on = NoiseTarget::both;

    static NoiseModel noiseless() { return {0.0, 0.0, NoiseTarget::both}; }
    void validate() const;
};

/// Evolves a joint input through the circuit on the tensor-network simulator.
/// Long-range CNOTs are routed on the fly.
TnState run_circuit(const Circuit& c, TnState input, const NoiseModel& noise, TruncationLog& log,
                    const Caps& caps = Caps{});
/// Dense evolution (readout noise excluded).
DenseState run_circuit_dense(const Circuit& c, const DenseState& input, const NoiseModel& noise);
/// Dense unitary of a circuit; width <= 10.
CMatrix circuit_unitary(const Circuit& c);

/// Joint input |0>_anc (x) rho (x) sigma arranged by the circuit's layout.
TnState joint_input(const Circuit& c, const Mps& rho, const Mps& sigma);
DenseState joint_input_dense(const Circuit& c, const DenseState& rho, const DenseState& sigma);

/// Overlap from computational-basis shots of a role-tagged circuit.
EstimateResult postprocess_overlap(const Circuit& c, const SampleRecord& bits);

struct CircuitEstimate {
    EstimateResult result;
    double fidelity_bound = 1.0;  ///< from the simulator's truncation log
};

CircuitEstimate estimate_overlap_via_circuit(const Circuit& c, const Mps& rho, const Mps& sigma,
                                             const NoiseModel& noise, std::size_t shots, std::uint64_t seed,
                                             const Caps& caps = Caps{});

/// Same estimator on the dense simulator (width <= 12); no truncation, so the
/// fidelity bound is 1.
CircuitEstimate estimate_overlap_via_circuit_dense(const Circuit& c, const DenseState& rho, const DenseState& sigma,
                                                   const NoiseModel& noise, std::size_t shots, std::uint64_t seed);

/// Infinite-shot value of the circuit estimator, by dense simulation with
/// readout flips applied to the exact output distribution.
double circuit_expectation_dense(const Circuit& c, const DenseState& rho, const DenseState& sigma,
                                 const NoiseModel& noise);

}  // namespace qoverlap
