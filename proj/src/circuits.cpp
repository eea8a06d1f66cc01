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

#include "qoverlap/circuits.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "qoverlap/rng.hpp"

namespace qoverlap {

namespace {

struct GateInfo {
    GateKind kind;
    const char* name;
    bool param;
};

constexpr std::array<GateInfo, 12> kGates = {{
    {GateKind::h, "H", false},
    {GateKind::x, "X", false},
    {GateKind::y, "Y", false},
    {GateKind::z, "Z", false},
    {GateKind::s, "S", false},
    {GateKind::sdg, "SDG", false},
    {GateKind::t, "T", false},
    {GateKind::tdg, "TDG", false},
    {GateKind::rx, "RX", true},
    {GateKind::ry, "RY", true},
    {GateKind::rz, "RZ", true},
    {GateKind::cnot, "CNOT", false},
}};

std::uint64_t bit_of(int q, int width) { return std::uint64_t{1} << (width - 1 - q); }

void add_cx(Circuit& c, int control, int target) { c.add(route_long_range_cnot(control, target, c.width())); }

void add_toffoli(Circuit& c, int c1, int c2, int t) {
    using K = GateKind;
    c.add(Gate::one(K::h, t));
    add_cx(c, c2, t);
    c.add(Gate::one(K::tdg, t));
    add_cx(c, c1, t);
    c.add(Gate::one(K::t, t));
    add_cx(c, c2, t);
    c.add(Gate::one(K::tdg, t));
    add_cx(c, c1, t);
    c.add(Gate::one(K::t, c2));
    c.add(Gate::one(K::t, t));
    c.add(Gate::one(K::h, t));
    add_cx(c, c1, c2);
    c.add(Gate::one(K::t, c1));
    c.add(Gate::one(K::tdg, c2));
    add_cx(c, c1, c2);
}

void add_fredkin(Circuit& c, int a, int t1, int t2) {
    add_cx(c, t2, t1);
    add_toffoli(c, a, t1, t2);
    add_cx(c, t2, t1);
}

// Amplitude vector with qubit i of `v` moved to position dest[i].
CVector permute_qubits(const CVector& v, int n, const std::vector<int>& dest) {
    CVector out(v.size());
    for (std::uint64_t x = 0; x < static_cast<std::uint64_t>(v.size()); ++x) {
        std::uint64_t y = 0;
        for (int q = 0; q < n; ++q) {
            if (x & bit_of(q, n)) {
                y |= bit_of(dest[static_cast<std::size_t>(q)], n);
            }
        }
        out(static_cast<Eigen::Index>(y)) = v(static_cast<Eigen::Index>(x));
    }
    return out;
}

CMatrix permute_qubits(const CMatrix& m, int n, const std::vector<int>& dest) {
    std::vector<Eigen::Index> map(static_cast<std::size_t>(m.rows()));
    for (std::uint64_t x = 0; x < map.size(); ++x) {
        std::uint64_t y = 0;
        for (int q = 0; q < n; ++q) {
            if (x & bit_of(q, n)) {
                y |= bit_of(dest[static_cast<std::size_t>(q)], n);
            }
        }
        map[x] = static_cast<Eigen::Index>(y);
    }
    CMatrix out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            out(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]) = m(i, j);
        }
    }
    return out;
}

const Layout& require_layout(const Circuit& c) {
    if (!c.layout) {
        throw PreconditionError("circuit has no register layout");
    }
    if (c.layout->width() != c.width()) {
        throw DimensionError("layout width does not match circuit width");
    }
    return *c.layout;
}

void require_role(const Circuit& c) {
    if (c.role == CircuitRole::none) {
        throw PreconditionError("circuit is not tagged as a SWAP test or Bell measurement");
    }
    const Layout& l = require_layout(c);
    if (c.role == CircuitRole::swap_test && !l.ancilla) {
        throw PreconditionError("SWAP test circuit needs an ancilla");
    }
}

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (char& ch : out) {
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    }
    return out;
}

}  // namespace

std::string gate_name(GateKind kind) {
    for (const auto& g : kGates) {
        if (g.kind == kind) {
            return g.name;
        }
    }
    return "?";
}

std::optional<GateKind> parse_gate_name(std::string_view name) {
    const std::string up = to_upper(name);
    if (up == "CX") {
        return GateKind::cnot;
    }
    for (const auto& g : kGates) {
        if (up == g.name) {
            return g.kind;
        }
    }
    return std::nullopt;
}

bool gate_has_param(GateKind kind) {
    for (const auto& g : kGates) {
        if (g.kind == kind) {
            return g.param;
        }
    }
    return false;
}

Mat2 gate_matrix(const Gate& g) {
    const cplx i(0.0, 1.0);
    const double h = g.param / 2.0;
    Mat2 m;
    switch (g.kind) {
        case GateKind::h: m << 1, 1, 1, -1; return m / std::sqrt(2.0);
        case GateKind::x: return pauli::x();
        case GateKind::y: return pauli::y();
        case GateKind::z: return pauli::z();
        case GateKind::s: m << 1, 0, 0, i; return m;
        case GateKind::sdg: m << 1, 0, 0, -i; return m;
        case GateKind::t: m << 1, 0, 0, std::polar(1.0, M_PI / 4); return m;
        case GateKind::tdg: m << 1, 0, 0, std::polar(1.0, -M_PI / 4); return m;
        case GateKind::rx: m << std::cos(h), -i * std::sin(h), -i * std::sin(h), std::cos(h); return m;
        case GateKind::ry: m << std::cos(h), -std::sin(h), std::sin(h), std::cos(h); return m;
        case GateKind::rz: m << std::polar(1.0, -h), 0, 0, std::polar(1.0, h); return m;
        case GateKind::cnot: break;
    }
    throw PreconditionError("CNOT has no single-qubit matrix");
}

Layout Layout::stacked(int n, bool with_ancilla) {
    if (n < 1) {
        throw PreconditionError("registers need at least one qubit");
    }
    Layout l;
    const int off = with_ancilla ? 1 : 0;
    if (with_ancilla) {
        l.ancilla = 0;
    }
    for (int i = 0; i < n; ++i) {
        l.reg_a.push_back(off + i);
        l.reg_b.push_back(off + n + i);
    }
    return l;
}

Layout Layout::interleaved(int n, bool with_ancilla) {
    if (n < 1) {
        throw PreconditionError("registers need at least one qubit");
    }
    Layout l;
    const int off = with_ancilla ? 1 : 0;
    if (with_ancilla) {
        l.ancilla = 0;
    }
    for (int i = 0; i < n; ++i) {
        l.reg_a.push_back(off + 2 * i);
        l.reg_b.push_back(off + 2 * i + 1);
    }
    return l;
}

Layout Layout::make(LayoutKind kind, int n, bool with_ancilla) {
    return kind == LayoutKind::stacked ? stacked(n, with_ancilla) : interleaved(n, with_ancilla);
}

void Layout::validate() const {
    if (reg_a.empty() || reg_a.size() != reg_b.size()) {
        throw DimensionError("registers must be non-empty and of equal size");
    }
    std::vector<int> seen(static_cast<std::size_t>(width()), 0);
    auto mark = [&](int p) {
        if (p < 0 || p >= width() || seen[static_cast<std::size_t>(p)]++) {
            throw DimensionError("layout is not a bijection onto the line");
        }
    };
    for (int p : reg_a) {
        mark(p);
    }
    for (int p : reg_b) {
        mark(p);
    }
    if (ancilla) {
        mark(*ancilla);
    }
}

Circuit::Circuit(int width) : width_(width), frontier_(static_cast<std::size_t>(std::max(width, 0)), 0) {
    if (width < 0) {
        throw DimensionError("negative circuit width");
    }
}

void Circuit::check_gate(const Gate& g) const {
    if (g.q0 < 0 || g.q0 >= width_) {
        throw DimensionError("gate qubit " + std::to_string(g.q0) + " outside circuit of width " +
                             std::to_string(width_));
    }
    if (g.two_qubit()) {
        if (g.q1 < 0 || g.q1 >= width_) {
            throw DimensionError("gate qubit " + std::to_string(g.q1) + " outside circuit of width " +
                                 std::to_string(width_));
        }
        if (g.q1 == g.q0) {
            throw PreconditionError("CNOT control and target coincide");
        }
    } else if (g.q1 != -1) {
        throw PreconditionError("single-qubit gate with a second operand");
    }
}

void Circuit::add(const Gate& g) {
    check_gate(g);
    int layer = frontier_[static_cast<std::size_t>(g.q0)];
    if (g.two_qubit()) {
        layer = std::max(layer, frontier_[static_cast<std::size_t>(g.q1)]);
    }
    if (static_cast<std::size_t>(layer) == layers_.size()) {
        layers_.emplace_back();
    }
    layers_[static_cast<std::size_t>(layer)].push_back(g);
    frontier_[static_cast<std::size_t>(g.q0)] = layer + 1;
    if (g.two_qubit()) {
        frontier_[static_cast<std::size_t>(g.q1)] = layer + 1;
    }
}

void Circuit::add(const std::vector<Gate>& gates) {
    for (const Gate& g : gates) {
        add(g);
    }
}

void Circuit::add_layer(const std::vector<Gate>& gates) {
    if (gates.empty()) {
        return;
    }
    std::vector<char> used(static_cast<std::size_t>(width_), 0);
    for (const Gate& g : gates) {
        check_gate(g);
        for (int q : {g.q0, g.q1}) {
            if (q < 0) {
                continue;
            }
            if (used[static_cast<std::size_t>(q)]++) {
                throw PreconditionError("overlapping gates on qubit " + std::to_string(q) + " in one layer");
            }
        }
    }
    layers_.push_back(gates);
    std::fill(frontier_.begin(), frontier_.end(), static_cast<int>(layers_.size()));
}

std::size_t Circuit::gate_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
        n += l.size();
    }
    return n;
}

std::size_t Circuit::cnot_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
        n += static_cast<std::size_t>(std::count_if(l.begin(), l.end(), [](const Gate& g) { return g.two_qubit(); }));
    }
    return n;
}

bool Circuit::nearest_neighbour() const {
    for (const auto& l : layers_) {
        for (const Gate& g : l) {
            if (g.two_qubit() && std::abs(g.q0 - g.q1) != 1) {
                return false;
            }
        }
    }
    return true;
}

ResourceCount count_resources(const Circuit& c) { return {c.cnot_count(), c.layers().size()}; }

std::vector<Gate> route_long_range_cnot(int control, int target, int width) {
    if (control < 0 || control >= width || target < 0 || target >= width) {
        throw DimensionError("CNOT position outside the line");
    }
    if (control == target) {
        throw PreconditionError("CNOT control and target coincide");
    }
    const int dir = target > control ? 1 : -1;
    std::vector<Gate> move;
    // Carry the control value one step toward the target per pair of CNOTs.
    for (int k = control; k != target - dir; k += dir) {
        move.push_back(Gate::cx(k + dir, k));
        move.push_back(Gate::cx(k, k + dir));
    }
    std::vector<Gate> out = move;
    out.push_back(Gate::cx(target - dir, target));
    out.insert(out.end(), move.rbegin(), move.rend());
    return out;
}

Circuit build_bell_circuit(int n, LayoutKind kind) {
    const Layout l = Layout::make(kind, n, false);
    Circuit c(l.width());
    for (int i = 0; i < n; ++i) {
        add_cx(c, l.reg_a[static_cast<std::size_t>(i)], l.reg_b[static_cast<std::size_t>(i)]);
        c.add(Gate::one(GateKind::h, l.reg_a[static_cast<std::size_t>(i)]));
    }
    c.role = CircuitRole::bell;
    c.layout = l;
    return c;
}

Circuit build_standard_swap_test(int n, LayoutKind kind) {
    const Layout l = Layout::make(kind, n, true);
    Circuit c(l.width());
    const int a = *l.ancilla;
    c.add(Gate::one(GateKind::h, a));
    for (int i = 0; i < n; ++i) {
        add_fredkin(c, a, l.reg_a[static_cast<std::size_t>(i)], l.reg_b[static_cast<std::size_t>(i)]);
    }
    c.add(Gate::one(GateKind::h, a));
    c.role = CircuitRole::swap_test;
    c.layout = l;
    return c;
}

std::uint64_t improved_swap_cnot_count(int n) {
    if (n < 1) {
        throw PreconditionError("register size must be at least 1");
    }
    const auto m = static_cast<std::uint64_t>(n);
    return 18 * m * m - 6 * m;
}

CircuitParseError::CircuitParseError(int line_no, int col, const std::string& what)
    : ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(col) + ": " + what),
      line(line_no),
      column(col) {}

namespace {

struct Token {
    std::string text;
    int column;
};

std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t end = std::min(line.find('#'), line.size());
    while (i < end) {
        while (i < end && std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        if (i >= end) {
            break;
        }
        const std::size_t start = i;
        while (i < end && !std::isspace(static_cast<unsigned char>(line[i]))) {
            ++i;
        }
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

int parse_int(const Token& t, int line) {
    int v = 0;
    const auto* b = t.text.data();
    const auto [ptr, ec] = std::from_chars(b, b + t.text.size(), v);
    if (ec != std::errc() || ptr != b + t.text.size()) {
        throw CircuitParseError(line, t.column, "expected an integer, got '" + t.text + "'");
    }
    return v;
}

double parse_double(const Token& t, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(t.text, &used);
        if (used != t.text.size() || !std::isfinite(v)) {
            throw std::invalid_argument("trailing");
        }
        return v;
    } catch (const std::logic_error&) {
        throw CircuitParseError(line, t.column, "expected a number, got '" + t.text + "'");
    }
}

struct ParsedGate {
    Gate gate;
    int line;
    int column;
    int layer;  ///< explicit layer index, -1 before any LAYER marker
};

std::vector<int> parse_positions(const std::vector<Token>& tok, int line) {
    std::vector<int> out;
    for (std::size_t k = 1; k < tok.size(); ++k) {
        out.push_back(parse_int(tok[k], line));
    }
    return out;
}

}  // namespace

Circuit parse_circuit(std::istream& in) {
    std::optional<int> width;
    CircuitRole role = CircuitRole::none;
    std::optional<std::vector<int>> reg_a, reg_b;
    std::optional<int> ancilla;
    std::vector<ParsedGate> gates;
    int layer = -1;
    bool explicit_layers = false;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tok = tokenize(line);
        if (tok.empty()) {
            continue;
        }
        const std::string head = to_upper(tok[0].text);
        if (head == "WIDTH") {
            if (width) {
                throw CircuitParseError(line_no, tok[0].column, "duplicate WIDTH");
            }
            if (tok.size() != 2) {
                throw CircuitParseError(line_no, tok[0].column, "WIDTH takes one integer");
            }
            width = parse_int(tok[1], line_no);
            if (*width < 0) {
                throw CircuitParseError(line_no, tok[1].column, "negative width");
            }
        } else if (head == "ROLE") {
            if (tok.size() != 2) {
                throw CircuitParseError(line_no, tok[0].column, "ROLE takes one word");
            }
            const std::string r = to_upper(tok[1].text);
            if (r == "NONE") {
                role = CircuitRole::none;
            } else if (r == "SWAP_TEST") {
                role = CircuitRole::swap_test;
            } else if (r == "BELL") {
                role = CircuitRole::bell;
            } else {
                throw CircuitParseError(line_no, tok[1].column, "unknown role '" + tok[1].text + "'");
            }
        } else if (head == "REGISTER_A") {
            reg_a = parse_positions(tok, line_no);
        } else if (head == "REGISTER_B") {
            reg_b = parse_positions(tok, line_no);
        } else if (head == "ANCILLA") {
            if (tok.size() != 2) {
                throw CircuitParseError(line_no, tok[0].column, "ANCILLA takes one position");
            }
            ancilla = parse_int(tok[1], line_no);
        } else if (head == "LAYER") {
            if (tok.size() != 1) {
                throw CircuitParseError(line_no, tok[1].column, "LAYER takes no operands");
            }
            explicit_layers = true;
            ++layer;
        } else {
            const auto kind = parse_gate_name(tok[0].text);
            if (!kind) {
                throw CircuitParseError(line_no, tok[0].column, "unknown gate '" + tok[0].text + "'");
            }
            if (!width) {
                throw CircuitParseError(line_no, tok[0].column, "gate before WIDTH");
            }
            const std::size_t want = 2 + (*kind == GateKind::cnot ? 1 : 0) + (gate_has_param(*kind) ? 1 : 0);
            if (tok.size() != want) {
                const int col = tok.size() > want ? tok[want].column : tok.back().column;
                throw CircuitParseError(line_no, col,
                                        gate_name(*kind) + " expects " + std::to_string(want - 1) + " operands");
            }
            Gate g;
            g.kind = *kind;
            g.q0 = parse_int(tok[1], line_no);
            std::size_t next = 2;
            if (*kind == GateKind::cnot) {
                g.q1 = parse_int(tok[2], line_no);
                next = 3;
            }
            if (gate_has_param(*kind)) {
                g.param = parse_double(tok[next], line_no);
            }
            for (std::size_t k = 1; k < (g.two_qubit() ? 3u : 2u); ++k) {
                const int q = k == 1 ? g.q0 : g.q1;
                if (q < 0 || q >= *width) {
                    throw CircuitParseError(line_no, tok[k].column, "qubit " + std::to_string(q) + " out of range");
                }
            }
            if (g.two_qubit() && g.q0 == g.q1) {
                throw CircuitParseError(line_no, tok[2].column, "CNOT control and target coincide");
            }
            gates.push_back({g, line_no, tok[0].column, layer});
        }
    }
    if (!width) {
        throw CircuitParseError(line_no + 1, 1, "missing WIDTH");
    }
    Circuit c(*width);
    if (explicit_layers) {
        std::vector<Gate> current;
        std::vector<int> owner(static_cast<std::size_t>(*width), 0);
        int current_layer = gates.empty() ? -1 : gates.front().layer;
        for (const ParsedGate& pg : gates) {
            if (pg.layer != current_layer) {
                c.add_layer(current);
                current.clear();
                current_layer = pg.layer;
                std::fill(owner.begin(), owner.end(), 0);
            }
            for (int q : {pg.gate.q0, pg.gate.q1}) {
                if (q >= 0 && owner[static_cast<std::size_t>(q)]++) {
                    throw CircuitParseError(pg.line, pg.column,
                                            "qubit " + std::to_string(q) + " already used in this layer");
                }
            }
            current.push_back(pg.gate);
        }
        c.add_layer(current);
    } else {
        for (const ParsedGate& pg : gates) {
            c.add(pg.gate);
        }
    }
    c.role = role;
    if (reg_a || reg_b || ancilla) {
        if (!reg_a || !reg_b) {
            throw CircuitParseError(line_no + 1, 1, "layout needs both REGISTER_A and REGISTER_B");
        }
        Layout l{*reg_a, *reg_b, ancilla};
        try {
            l.validate();
        } catch (const DimensionError& e) {
            throw CircuitParseError(line_no + 1, 1, e.what());
        }
        if (l.width() != *width) {
            throw CircuitParseError(line_no + 1, 1, "layout does not cover the circuit width");
        }
        c.layout = l;
    }
    return c;
}

Circuit parse_circuit(const std::string& text) {
    std::istringstream in(text);
    return parse_circuit(in);
}

void write_circuit(const Circuit& c, std::ostream& out) {
    out << "# qoverlap circuit\n";
    out << "WIDTH " << c.width() << '\n';
    out << "ROLE " << (c.role == CircuitRole::bell ? "bell" : c.role == CircuitRole::swap_test ? "swap_test" : "none")
        << '\n';
    if (c.layout) {
        if (c.layout->ancilla) {
            out << "ANCILLA " << *c.layout->ancilla << '\n';
        }
        out << "REGISTER_A";
        for (int p : c.layout->reg_a) {
            out << ' ' << p;
        }
        out << "\nREGISTER_B";
        for (int p : c.layout->reg_b) {
            out << ' ' << p;
        }
        out << '\n';
    }
    for (const auto& layer : c.layers()) {
        out << "LAYER\n";
        for (const Gate& g : layer) {
            out << gate_name(g.kind) << ' ' << g.q0;
            if (g.two_qubit()) {
                out << ' ' << g.q1;
            }
            if (gate_has_param(g.kind)) {
                out << ' ' << std::setprecision(17) << g.param;
            }
            out << '\n';
        }
    }
}

std::string circuit_to_text(const Circuit& c) {
    std::ostringstream out;
    write_circuit(c, out);
    return out.str();
}

Circuit load_circuit(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return parse_circuit(in);
}

void save_circuit(const Circuit& c, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_circuit(c, out);
}

void NoiseModel::validate() const {
    if (!(cnot_lambda >= 0.0 && cnot_lambda <= 1.0) || !(readout_flip >= 0.0 && readout_flip <= 1.0)) {
        throw PreconditionError("noise parameters must lie in [0, 1]");
    }
}

TnState run_circuit(const Circuit& c, TnState state, const NoiseModel& noise, TruncationLog& log, const Caps& caps) {
    noise.validate();
    const int n = std::visit([](const auto& s) { return s.n(); }, state);
    if (n != c.width()) {
        throw DimensionError("input state width does not match the circuit");
    }
    for (const auto& layer : c.layers()) {
        for (const Gate& g : layer) {
            if (!g.two_qubit()) {
                state = apply_single_qubit_gate(std::move(state), gate_matrix(g), g.q0);
                continue;
            }
            for (const Gate& r : route_long_range_cnot(g.q0, g.q1, c.width())) {
                state = apply_cnot(std::move(state), r.q0, r.q1, noise.cnot_lambda, log, caps, noise.noise_on);
            }
        }
    }
    return state;
}

DenseState run_circuit_dense(const Circuit& c, const DenseState& input, const NoiseModel& noise) {
    noise.validate();
    if (input.n() != c.width()) {
        throw DimensionError("input state width does not match the circuit");
    }
    DenseState s = input;
    const Eigen::Matrix4cd cx = cnot_matrix(true);
    const KrausSet ch = KrausSet::depolarizing(noise.cnot_lambda);
    for (const auto& layer : c.layers()) {
        for (const Gate& g : layer) {
            if (!g.two_qubit()) {
                s = apply_single_qubit_dense(s, gate_matrix(g), g.q0);
                continue;
            }
            s = apply_two_qubit_dense(s, cx, g.q0, g.q1);
            if (noise.cnot_lambda > 0.0) {
                if (noise.noise_on == NoiseTarget::both) {
                    s = apply_channel_dense(s, ch, g.q0);
                }
                s = apply_channel_dense(s, ch, g.q1);
            }
        }
    }
    return s;
}

CMatrix circuit_unitary(const Circuit& c) {
    if (c.width() > 10) {
        throw DimensionError("circuit unitary limited to 10 qubits");
    }
    const auto dim = static_cast<Eigen::Index>(pow2(c.width()));
    CMatrix u(dim, dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
        CVector e = CVector::Zero(dim);
        e(j) = 1.0;
        u.col(j) = run_circuit_dense(c, DenseState::pure(e), NoiseModel::noiseless()).vector();
    }
    return u;
}

DenseState joint_input_dense(const Circuit& c, const DenseState& rho, const DenseState& sigma) {
    const Layout& l = require_layout(c);
    if (rho.n() != l.n() || sigma.n() != l.n()) {
        throw DimensionError("register size does not match the input states");
    }
    DenseState joint = tensor_product(rho, sigma);
    std::vector<int> dest(l.reg_a);
    dest.insert(dest.end(), l.reg_b.begin(), l.reg_b.end());
    if (l.ancilla) {
        joint = tensor_product(DenseState::zero(1), joint);
        dest.insert(dest.begin(), *l.ancilla);
    }
    const int w = l.width();
    if (joint.is_pure()) {
        return DenseState::pure(permute_qubits(joint.vector(), w, dest));
    }
    return DenseState::mixed(permute_qubits(joint.density(), w, dest));
}

TnState joint_input(const Circuit& c, const Mps& rho, const Mps& sigma) {
    const Layout& l = require_layout(c);
    if (rho.n() != l.n() || sigma.n() != l.n()) {
        throw DimensionError("register size does not match the input states");
    }
    if (l == Layout::stacked(l.n(), l.ancilla.has_value())) {
        Mps joint = Mps::concatenate(rho, sigma);
        if (l.ancilla) {
            joint = Mps::concatenate(Mps::zero(1), joint);
        }
        return joint;
    }
    return Mps::from_dense(joint_input_dense(c, to_dense(rho), to_dense(sigma)));
}

EstimateResult postprocess_overlap(const Circuit& c, const SampleRecord& bits) {
    require_role(c);
    const Layout& l = *c.layout;
    if (bits.n != c.width() || bits.outcomes_per_qubit != 2) {
        throw DimensionError("bit record does not match the circuit");
    }
    const std::size_t shots = bits.shots();
    if (shots == 0) {
        throw PreconditionError("no shots to post-process");
    }
    EstimateResult r;
    r.shots = shots;
    r.pairing = Pairing::paired;
    if (c.role == CircuitRole::swap_test) {
        std::size_t zeros = 0;
        for (std::size_t i = 0; i < shots; ++i) {
            zeros += bits.shot(i)[static_cast<std::size_t>(*l.ancilla)] == 0 ? 1 : 0;
        }
        const double p0 = static_cast<double>(zeros) / static_cast<double>(shots);
        r.mean = 2.0 * p0 - 1.0;
        r.std_error = 2.0 * std::sqrt(p0 * (1.0 - p0) / static_cast<double>(shots));
        return r;
    }
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t i = 0; i < shots; ++i) {
        const auto s = bits.shot(i);
        int parity = 0;
        for (int k = 0; k < l.n(); ++k) {
            parity ^= s[static_cast<std::size_t>(l.reg_a[static_cast<std::size_t>(k)])] &
                      s[static_cast<std::size_t>(l.reg_b[static_cast<std::size_t>(k)])];
        }
        const double v = parity ? -1.0 : 1.0;
        sum += v;
        sum2 += v * v;
    }
    const double n = static_cast<double>(shots);
    r.mean = sum / n;
    const double var = shots > 1 ? std::max(0.0, (sum2 - n * r.mean * r.mean) / (n - 1.0)) : 0.0;
    r.std_error = std::sqrt(var / n);
    return r;
}

namespace {

void apply_readout_flips(SampleRecord& bits, double flip, std::uint64_t seed) {
    if (flip <= 0.0) {
        return;
    }
    Rng flips(seed);
    for (std::uint8_t& b : bits.outcomes) {
        if (flips.uniform() < flip) {
            b ^= 1u;
        }
    }
}

}  // namespace

CircuitEstimate estimate_overlap_via_circuit(const Circuit& c, const Mps& rho, const Mps& sigma,
                                             const NoiseModel& noise, std::size_t shots, std::uint64_t seed,
                                             const Caps& caps) {
    require_role(c);
    noise.validate();
    if (shots == 0) {
        throw PreconditionError("at least one shot is required");
    }
    TruncationLog log;
    const TnState out = run_circuit(c, joint_input(c, rho, sigma), noise, log, caps);
    SampleRecord bits = sample_from_tn(out, computational_basis(), shots, derive_seed(seed, 1));
    apply_readout_flips(bits, noise.readout_flip, derive_seed(seed, 2));
    return {postprocess_overlap(c, bits), fidelity_lower_bound(log)};
}

CircuitEstimate estimate_overlap_via_circuit_dense(const Circuit& c, const DenseState& rho, const DenseState& sigma,
                                                   const NoiseModel& noise, std::size_t shots, std::uint64_t seed) {
    require_role(c);
    noise.validate();
    if (shots == 0) {
        throw PreconditionError("at least one shot is required");
    }
    if (c.width() > 12) {
        throw PreconditionError("dense circuit simulation supports at most 12 qubits");
    }
    const DenseState out = run_circuit_dense(c, joint_input_dense(c, rho, sigma), noise);
    const ProductPOVM readout(computational_basis(), c.width());
    SampleRecord bits = sample_from_distribution(born_probabilities(out, readout), shots, derive_seed(seed, 1));
    apply_readout_flips(bits, noise.readout_flip, derive_seed(seed, 2));
    return {postprocess_overlap(c, bits), 1.0};
}

double circuit_expectation_dense(const Circuit& c, const DenseState& rho, const DenseState& sigma,
                                 const NoiseModel& noise) {
    require_role(c);
    const DenseState out = run_circuit_dense(c, joint_input_dense(c, rho, sigma), noise);
    const int w = c.width();
    std::vector<double> p(static_cast<std::size_t>(out.dim()));
    if (out.is_pure()) {
        for (std::size_t x = 0; x < p.size(); ++x) {
            p[x] = std::norm(out.vector()(static_cast<Eigen::Index>(x)));
        }
    } else {
        for (std::size_t x = 0; x < p.size(); ++x) {
            p[x] = out.density()(static_cast<Eigen::Index>(x), static_cast<Eigen::Index>(x)).real();
        }
    }
    const double f = noise.readout_flip;
    if (f > 0.0) {
        for (int q = 0; q < w; ++q) {
            const std::uint64_t b = bit_of(q, w);
            for (std::uint64_t x = 0; x < p.size(); ++x) {
                if (!(x & b)) {
                    const double p0 = p[x];
                    const double p1 = p[x | b];
                    p[x] = (1.0 - f) * p0 + f * p1;
                    p[x | b] = f * p0 + (1.0 - f) * p1;
                }
            }
        }
    }
    const Layout& l = *c.layout;
    double value = 0.0;
    for (std::uint64_t x = 0; x < p.size(); ++x) {
        if (c.role == CircuitRole::swap_test) {
            value += (x & bit_of(*l.ancilla, w)) ? -p[x] : p[x];
        } else {
            int parity = 0;
            for (int k = 0; k < l.n(); ++k) {
                const bool a = (x & bit_of(l.reg_a[static_cast<std::size_t>(k)], w)) != 0;
                const bool bb = (x & bit_of(l.reg_b[static_cast<std::size_t>(k)], w)) != 0;
                parity ^= static_cast<int>(a && bb);
            }
            value += parity ? -p[x] : p[x];
        }
    }
    return value;
}

}  // namespace qoverlap
