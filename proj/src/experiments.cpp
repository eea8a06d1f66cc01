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

#include "qoverlap/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <mutex>
#include <thread>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "qoverlap/povm.hpp"
#include "qoverlap/randmeas.hpp"
#include "qoverlap/rng.hpp"

namespace qoverlap {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        out.push_back(trim(item));
    }
    if (!s.empty() && s.back() == sep) {
        out.emplace_back();
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double_value(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) {
            throw std::invalid_argument(v);
        }
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long long parse_int_value(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) {
            throw std::invalid_argument(v);
        }
        return x;
    } catch (const std::logic_error&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

std::size_t parse_count(const std::string& key, const std::string& v) {
    const long long x = parse_int_value(key, v);
    if (x < 0) {
        throw ConfigError(key + ": must not be negative");
    }
    return static_cast<std::size_t>(x);
}

bool parse_bool_value(const std::string& key, const std::string& v) {
    const std::string l = lower(v);
    if (l == "true" || l == "1" || l == "yes" || l == "on") {
        return true;
    }
    if (l == "false" || l == "0" || l == "no" || l == "off") {
        return false;
    }
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct Field {
    const char* section;
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define QO_COUNT_FIELD(sec, name, member)                                                   \
    Field {                                                                                 \
        sec, name, [](const ExperimentConfig& c) { return std::to_string(c.member); },      \
            [](ExperimentConfig& c, const std::string& v) { c.member = parse_count(name, v); } \
    }
#define QO_INT_FIELD(sec, name, member)                                                                      \
    Field {                                                                                                  \
        sec, name, [](const ExperimentConfig& c) { return std::to_string(c.member); },                       \
            [](ExperimentConfig& c, const std::string& v) { c.member = static_cast<int>(parse_int_value(name, v)); } \
    }
#define QO_DOUBLE_FIELD(sec, name, member)                                                        \
    Field {                                                                                       \
        sec, name, [](const ExperimentConfig& c) { return fmt_double(c.member); },                \
            [](ExperimentConfig& c, const std::string& v) { c.member = parse_double_value(name, v); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        {"experiment", "kind", [](const ExperimentConfig& c) { return to_string(c.kind); },
         [](ExperimentConfig& c, const std::string& v) { c.kind = parse_experiment_kind(v); }},
        {"experiment", "id", [](const ExperimentConfig& c) { return c.id; },
         [](ExperimentConfig& c, const std::string& v) { c.id = v; }},
        {"experiment", "seed", [](const ExperimentConfig& c) { return std::to_string(c.seed); },
         [](ExperimentConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(parse_count("seed", v)); }},
        {"experiment", "out", [](const ExperimentConfig& c) { return c.out.string(); },
         [](ExperimentConfig& c, const std::string& v) { c.out = v; }},
        QO_INT_FIELD("experiment", "threads", threads),
        {"experiment", "timing", [](const ExperimentConfig& c) { return std::string(c.timing ? "true" : "false"); },
         [](ExperimentConfig& c, const std::string& v) { c.timing = parse_bool_value("timing", v); }},
        QO_INT_FIELD("states", "n_min", n_min),
        QO_INT_FIELD("states", "n_max", n_max),
        {"states", "families",
         [](const ExperimentConfig& c) {
             std::string s;
             for (std::size_t i = 0; i < c.families.size(); ++i) {
                 s += (i ? "," : "") + to_string(c.families[i]);
             }
             return s;
         },
         [](ExperimentConfig& c, const std::string& v) {
             c.families.clear();
             for (const auto& f : split(v, ',')) {
                 c.families.push_back(parse_family(f));
             }
         }},
        {"states", "entries", [](const ExperimentConfig& c) { return to_string(c.entries); },
         [](ExperimentConfig& c, const std::string& v) { c.entries = parse_entries(v); }},
        QO_INT_FIELD("states", "bond_dim", bond_dim),
        QO_COUNT_FIELD("estimator", "shots", shots),
        {"estimator", "pairing",
         [](const ExperimentConfig& c) { return std::string(c.pairing == Pairing::pooled ? "pooled" : "paired"); },
         [](ExperimentConfig& c, const std::string& v) { c.pairing = parse_pairing(v); }},
        QO_COUNT_FIELD("estimator", "pairs", pairs),
        QO_DOUBLE_FIELD("scaling", "threshold", threshold),
        QO_COUNT_FIELD("scaling", "batches", batches),
        QO_COUNT_FIELD("scaling", "pairs_per_batch", pairs_per_batch),
        QO_COUNT_FIELD("scaling", "start_shots", start_shots),
        QO_COUNT_FIELD("scaling", "max_shots", max_shots),
        {"circuit", "circuit", [](const ExperimentConfig& c) { return to_string(c.circuit); },
         [](ExperimentConfig& c, const std::string& v) { c.circuit = parse_circuit_choice(v); }},
        {"circuit", "layout",
         [](const ExperimentConfig& c) {
             return std::string(c.layout == LayoutKind::stacked ? "stacked" : "interleaved");
         },
         [](ExperimentConfig& c, const std::string& v) { c.layout = parse_layout(v); }},
        {"circuit", "simulator", [](const ExperimentConfig& c) { return to_string(c.simulator); },
         [](ExperimentConfig& c, const std::string& v) { c.simulator = parse_simulator(v); }},
        QO_COUNT_FIELD("circuit", "shots", circuit_shots),
        QO_DOUBLE_FIELD("circuit", "lambda", noise.cnot_lambda),
        QO_DOUBLE_FIELD("circuit", "readout", noise.readout_flip),
        {"circuit", "noise_on",
         [](const ExperimentConfig& c) {
             return std::string(c.noise.noise_on == NoiseTarget::both ? "both" : "target_only");
         },
         [](ExperimentConfig& c, const std::string& v) {
             const std::string l = lower(v);
             if (l == "both") {
                 c.noise.noise_on = NoiseTarget::both;
             } else if (l == "target_only" || l == "target") {
                 c.noise.noise_on = NoiseTarget::target_only;
             } else {
                 throw ConfigError("noise_on: expected both or target_only, got '" + v + "'");
             }
         }},
        QO_INT_FIELD("circuit", "max_bond", caps.max_bond),
        QO_INT_FIELD("circuit", "max_kraus", caps.max_kraus),
        QO_COUNT_FIELD("randmeas", "instances", instances),
        QO_COUNT_FIELD("randmeas", "n_u", n_u),
        QO_COUNT_FIELD("randmeas", "n_m", n_m),
        {"povm_search", "outcomes",
         [](const ExperimentConfig& c) {
             std::string s;
             for (std::size_t i = 0; i < c.outcomes.size(); ++i) {
                 s += (i ? "," : "") + std::to_string(c.outcomes[i]);
             }
             return s;
         },
         [](ExperimentConfig& c, const std::string& v) {
             c.outcomes.clear();
             for (const auto& f : split(v, ',')) {
                 c.outcomes.push_back(static_cast<int>(parse_int_value("outcomes", f)));
             }
         }},
        QO_DOUBLE_FIELD("povm_search", "resolution_deg", resolution_deg),
        QO_DOUBLE_FIELD("povm_search", "refine_deg", refine_deg),
        QO_INT_FIELD("povm_search", "mcmc_steps", mcmc_steps),
        QO_DOUBLE_FIELD("povm_search", "temperature", temperature),
        QO_DOUBLE_FIELD("povm_search", "proposal_scale", proposal_scale),
    };
    return table;
}

#undef QO_COUNT_FIELD
#undef QO_INT_FIELD
#undef QO_DOUBLE_FIELD

// Runs fn(i) for i in [0, count) on up to `threads` workers.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

class Stopwatch {
public:
    explicit Stopwatch(bool on) : on_(on), start_(std::chrono::steady_clock::now()) {}
    [[nodiscard]] double ms() const {
        if (!on_) {
            return 0.0;
        }
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    bool on_;
    std::chrono::steady_clock::time_point start_;
};

constexpr int kDenseTruthLimit = 12;
// Largest n for which the full Pauli-6 outcome distribution is cached.
constexpr int kDistributionLimit = 8;

struct StatePair {
    Mps a;
    Mps b;
    std::optional<DenseState> da;
    std::optional<DenseState> db;
    std::optional<double> truth;
};

StatePair make_pair(const ExperimentConfig& cfg, StateFamily family, int n, std::uint64_t seed) {
    RandomStateSpec spec;
    spec.n = n;
    spec.family = family;
    spec.bond_dim = family == StateFamily::product ? 1 : cfg.bond_dim;
    spec.entries = cfg.entries;
    spec.seed = derive_seed(seed, 1);
    RandomStateSpec spec_b = spec;
    spec_b.seed = derive_seed(seed, 2);
    StatePair p{Mps::random(spec), Mps::random(spec_b), std::nullopt, std::nullopt, std::nullopt};
    if (n <= kDenseTruthLimit) {
        p.da = to_dense(p.a);
        p.db = to_dense(p.b);
        p.truth = exact_overlap(*p.da, *p.db);
    }
    return p;
}

/// Pauli-6 estimator with cached outcome distributions for small n.
class QprSampler {
public:
    QprSampler(const StatePair& pair, int n, Pairing pairing)
        : pair_(pair), povm_(pauli6(), n), pairing_(pairing) {
        const TMatrix t = compute_t_matrix(pauli6());
        const GeneralizedInverse tp = pseudoinverse(t);
        tau_hat_ = estimator_tensor(tp, tp, t);
        if (n <= kDistributionLimit && pair.da && pair.db) {
            pa_ = born_probabilities(*pair.da, povm_);
            pb_ = born_probabilities(*pair.db, povm_);
        }
    }

    [[nodiscard]] EstimateResult estimate(std::size_t shots, std::uint64_t seed) const {
        const SampleRecord a = draw(true, shots, derive_seed(seed, 1));
        const SampleRecord b = draw(false, shots, derive_seed(seed, 2));
        return estimate_overlap(a, b, tau_hat_, {pairing_});
    }

private:
    [[nodiscard]] SampleRecord draw(bool first, std::size_t shots, std::uint64_t seed) const {
        const auto& dist = first ? pa_ : pb_;
        if (dist) {
            SampleRecord r = sample_from_distribution(*dist, shots, seed);
            r.povm_id = povm_.factor().name();
            return r;
        }
        return sample_outcomes(first ? pair_.a : pair_.b, povm_, shots, seed);
    }

    const StatePair& pair_;
    ProductPOVM povm_;
    Pairing pairing_;
    EstimatorTensor tau_hat_;
    std::optional<OutcomeDistribution> pa_;
    std::optional<OutcomeDistribution> pb_;
};

ResultRow make_row(const ExperimentConfig& cfg, int n, std::string method, std::int64_t pair_id,
                   std::optional<double> truth, double estimate, std::uint64_t shots, std::uint64_t seed,
                   double wall_ms) {
    ResultRow r;
    r.experiment_id = cfg.experiment_id();
    r.n = n;
    r.method = std::move(method);
    r.pair_id = pair_id;
    r.true_overlap = truth;
    r.estimate = estimate;
    if (truth) {
        r.abs_error = std::abs(estimate - *truth);
    }
    r.shots = shots;
    r.seed = seed;
    r.wall_ms = wall_ms;
    return r;
}

std::uint64_t family_index(StateFamily f) { return f == StateFamily::product ? 0 : 1; }

// Seed for one work item, independent of scheduling order.
std::uint64_t item_seed(const ExperimentConfig& cfg, std::uint64_t tag, int n, StateFamily f, std::uint64_t item) {
    std::uint64_t s = derive_seed(cfg.seed, tag);
    s = derive_seed(s, static_cast<std::uint64_t>(n));
    s = derive_seed(s, family_index(f));
    return derive_seed(s, item);
}

void sort_rows(std::vector<ResultRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& x, const ResultRow& y) {
        if (x.n != y.n) {
            return x.n < y.n;
        }
        if (x.method != y.method) {
            return x.method < y.method;
        }
        return x.pair_id < y.pair_id;
    });
}

const MethodSummary* find_summary(const std::vector<MethodSummary>& s, const std::string& method, int n) {
    for (const auto& m : s) {
        if (m.method == method && m.n == n) {
            return &m;
        }
    }
    return nullptr;
}

std::optional<double> parse_optional(const std::string& v, const std::string& col) {
    if (v.empty()) {
        return std::nullopt;
    }
    try {
        return parse_double_value(col, v);
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
}

}  // namespace

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::scaling: return "scaling";
        case ExperimentKind::circuit_compare: return "circuit-compare";
        case ExperimentKind::randmeas_compare: return "randmeas-compare";
        case ExperimentKind::povm_search: return "povm-search";
        case ExperimentKind::single_estimate: return "single-estimate";
    }
    return "?";
}

std::string to_string(StateFamily f) { return f == StateFamily::product ? "product" : "entangled"; }

std::string to_string(EntryDistribution e) { return e == EntryDistribution::gaussian ? "gaussian" : "uniform_real"; }

std::string to_string(CircuitChoice c) {
    switch (c) {
        case CircuitChoice::automatic: return "auto";
        case CircuitChoice::swap_test: return "swap_test";
        case CircuitChoice::bell: return "bell";
    }
    return "?";
}

std::string to_string(SimulatorChoice s) {
    switch (s) {
        case SimulatorChoice::automatic: return "auto";
        case SimulatorChoice::dense: return "dense";
        case SimulatorChoice::tensor_network: return "tn";
    }
    return "?";
}

SimulatorChoice parse_simulator(const std::string& s) {
    const std::string l = lower(trim(s));
    if (l == "auto") {
        return SimulatorChoice::automatic;
    }
    if (l == "dense") {
        return SimulatorChoice::dense;
    }
    if (l == "tn" || l == "tensor_network") {
        return SimulatorChoice::tensor_network;
    }
    throw ConfigError("simulator: expected auto, dense or tn, got '" + s + "'");
}

ExperimentKind parse_experiment_kind(const std::string& s) {
    const std::string l = lower(trim(s));
    for (auto k : {ExperimentKind::scaling, ExperimentKind::circuit_compare, ExperimentKind::randmeas_compare,
                   ExperimentKind::povm_search, ExperimentKind::single_estimate}) {
        std::string name = to_string(k);
        std::string alt = name;
        std::replace(alt.begin(), alt.end(), '-', '_');
        if (l == name || l == alt) {
            return k;
        }
    }
    if (l == "estimate") {
        return ExperimentKind::single_estimate;
    }
    throw ConfigError("kind: unknown experiment '" + s + "'");
}

StateFamily parse_family(const std::string& s) {
    const std::string l = lower(trim(s));
    if (l == "product") {
        return StateFamily::product;
    }
    if (l == "entangled") {
        return StateFamily::entangled;
    }
    throw ConfigError("families: unknown state family '" + s + "'");
}

EntryDistribution parse_entries(const std::string& s) {
    const std::string l = lower(trim(s));
    if (l == "gaussian") {
        return EntryDistribution::gaussian;
    }
    if (l == "uniform_real" || l == "uniform") {
        return EntryDistribution::uniform_real;
    }
    throw ConfigError("entries: expected gaussian or uniform_real, got '" + s + "'");
}

CircuitChoice parse_circuit_choice(const std::string& s) {
    const std::string l = lower(trim(s));
    if (l == "auto") {
        return CircuitChoice::automatic;
    }
    if (l == "swap_test" || l == "swap") {
        return CircuitChoice::swap_test;
    }
    if (l == "bell") {
        return CircuitChoice::bell;
    }
    throw ConfigError("circuit: expected auto, swap_test or bell, got '" + s + "'");
}

LayoutKind parse_layout(const std::string& s) {
    const std::string l = lower(trim(s));
    if (l == "stacked") {
        return LayoutKind::stacked;
    }
    if (l == "interleaved") {
        return LayoutKind::interleaved;
    }
    throw ConfigError("layout: expected stacked or interleaved, got '" + s + "'");
}

Pairing parse_pairing(const std::string& s) {
    const std::string l = lower(trim(s));
    if (l == "pooled") {
        return Pairing::pooled;
    }
    if (l == "paired") {
        return Pairing::paired;
    }
    throw ConfigError("pairing: expected pooled or paired, got '" + s + "'");
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
        case ExperimentKind::scaling:
            c.n_min = 1;
            c.n_max = 6;
            break;
        case ExperimentKind::circuit_compare:
            c.n_min = 2;
            c.n_max = 3;
            c.families = {StateFamily::entangled};
            c.pairs = 60;
            break;
        case ExperimentKind::randmeas_compare:
            c.n_min = 2;
            c.n_max = 4;
            break;
        case ExperimentKind::povm_search:
            c.n_min = 1;
            c.n_max = 1;
            break;
        case ExperimentKind::single_estimate:
            c.n_min = 2;
            c.n_max = 2;
            c.families = {StateFamily::entangled};
            break;
    }
    return c;
}

std::string ExperimentConfig::experiment_id() const { return id.empty() ? to_string(kind) : id; }

void ExperimentConfig::validate() const {
    auto require = [](bool ok, const std::string& msg) {
        if (!ok) {
            throw ConfigError(msg);
        }
    };
    require(n_min >= 1, "n_min: must be at least 1");
    require(n_max >= n_min, "n_max: must be at least n_min");
    require(n_max <= 40, "n_max: at most 40 qubits are supported");
    require(!families.empty(), "families: at least one state family is required");
    require(bond_dim >= 1, "bond_dim: must be at least 1");
    require(threads >= 1, "threads: must be at least 1");
    require(shots >= 1, "shots: must be at least 1");
    require(pairs >= 1, "pairs: must be at least 1");
    require(threshold > 0.0 && threshold < 1.0, "threshold: must lie in (0, 1)");
    require(batches >= 1, "batches: must be at least 1");
    require(pairs_per_batch >= 1, "pairs_per_batch: must be at least 1");
    require(start_shots >= 1, "start_shots: must be at least 1");
    require(max_shots >= start_shots, "max_shots: must be at least start_shots");
    require(noise.cnot_lambda >= 0.0 && noise.cnot_lambda <= 1.0, "lambda: must lie in [0, 1]");
    require(noise.readout_flip >= 0.0 && noise.readout_flip <= 1.0, "readout: must lie in [0, 1]");
    require(caps.max_bond >= 1, "max_bond: must be at least 1");
    require(caps.max_kraus >= 1, "max_kraus: must be at least 1");
    require(instances >= 1, "instances: must be at least 1");
    require(n_u >= 1, "n_u: must be at least 1");
    require(n_m >= 1, "n_m: must be at least 1");
    require(!outcomes.empty(), "outcomes: at least one outcome count is required");
    for (int m : outcomes) {
        require(m == 4 || m == 6 || m == 8, "outcomes: each entry must be 4, 6 or 8");
    }
    require(resolution_deg > 0.0 && resolution_deg <= 90.0, "resolution_deg: must lie in (0, 90]");
    require(refine_deg < resolution_deg, "refine_deg: must be below resolution_deg");
    require(mcmc_steps >= 1, "mcmc_steps: must be at least 1");
    require(temperature > 0.0, "temperature: must be positive");
    require(proposal_scale > 0.0, "proposal_scale: must be positive");
    if (kind == ExperimentKind::randmeas_compare) {
        require(n_u * n_m == shots, "n_u * n_m must equal shots so both methods use the same budget");
    }
    if (kind == ExperimentKind::circuit_compare) {
        require(n_max <= 6, "n_max: circuit comparisons support at most 6 qubits per register");
        require(simulator != SimulatorChoice::dense || n_max <= 5, "simulator: dense needs n_max <= 5");
    }
}

std::string ExperimentConfig::to_ini() const {
    std::ostringstream out;
    std::string section;
    for (const Field& f : fields()) {
        if (section != f.section) {
            section = f.section;
            out << (out.tellp() > 0 ? "\n" : "") << '[' << section << "]\n";
        }
        out << f.key << " = " << f.get(*this) << '\n';
    }
    return out.str();
}

ExperimentConfig parse_config(const std::string& text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
    }
    ExperimentKind kind = ExperimentKind::single_estimate;
    if (const auto k = tree.get_optional<std::string>("experiment.kind")) {
        kind = parse_experiment_kind(*k);
    }
    ExperimentConfig cfg = ExperimentConfig::defaults(kind);
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("key '" + section + "' must be inside a section");
        }
        for (const auto& [key, value] : body) {
            const auto it = std::find_if(fields().begin(), fields().end(), [&](const Field& f) {
                return section == f.section && key == f.key;
            });
            if (it == fields().end()) {
                throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
            }
            it->set(cfg, trim(value.data()));
        }
    }
    cfg.validate();
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_keys() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Field& f : fields()) {
        out.emplace_back(f.section, f.key);
    }
    return out;
}

void set_config_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value) {
    for (const Field& f : fields()) {
        if (section == f.section && key == f.key) {
            f.set(cfg, trim(value));
            return;
        }
    }
    throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

void write_results(const std::vector<ResultRow>& rows, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const ResultRow& r : rows) {
        if (r.experiment_id.find_first_of(",\n\"") != std::string::npos ||
            r.method.find_first_of(",\n\"") != std::string::npos) {
            throw PreconditionError("identifiers must not contain commas, quotes or newlines");
        }
        out << r.experiment_id << ',' << r.n << ',' << r.method << ',' << r.pair_id << ','
            << (r.true_overlap ? fmt_double(*r.true_overlap) : "") << ',' << fmt_double(r.estimate) << ','
            << (r.abs_error ? fmt_double(*r.abs_error) : "") << ',' << r.shots << ',' << r.seed << ','
            << fmt_double(r.wall_ms) << '\n';
    }
}

void write_results(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    write_results(rows, out);
    if (!out) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

std::vector<ResultRow> read_results(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kCsvHeader) {
        throw ParseError("results CSV must start with the header: " + std::string(kCsvHeader));
    }
    std::vector<ResultRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 10) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 10 columns");
        }
        try {
            ResultRow r;
            r.experiment_id = cols[0];
            r.n = static_cast<int>(parse_int_value("n", cols[1]));
            r.method = cols[2];
            r.pair_id = parse_int_value("pair_id", cols[3]);
            r.true_overlap = parse_optional(cols[4], "true_overlap");
            r.estimate = parse_double_value("estimate", cols[5]);
            r.abs_error = parse_optional(cols[6], "abs_error");
            r.shots = static_cast<std::uint64_t>(parse_count("shots", cols[7]));
            r.seed = std::stoull(cols[8]);
            r.wall_ms = parse_double_value("wall_ms", cols[9]);
            rows.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return read_results(in);
}

std::vector<MethodSummary> summarize_rows(const std::vector<ResultRow>& rows) {
    std::map<std::pair<std::string, int>, std::vector<const ResultRow*>> groups;
    for (const ResultRow& r : rows) {
        if (r.abs_error) {
            groups[{r.method, r.n}].push_back(&r);
        }
    }
    std::vector<MethodSummary> out;
    for (const auto& [key, members] : groups) {
        MethodSummary s;
        s.method = key.first;
        s.n = key.second;
        s.count = members.size();
        double sum = 0.0, sum2 = 0.0, truth = 0.0;
        for (const ResultRow* r : members) {
            sum += *r->abs_error;
            sum2 += *r->abs_error * *r->abs_error;
            truth += *r->true_overlap;
        }
        const auto k = static_cast<double>(s.count);
        s.mae = sum / k;
        s.mean_true_overlap = truth / k;
        if (s.count > 1) {
            const double var = std::max(0.0, (sum2 - k * s.mae * s.mae) / (k - 1.0));
            s.mae_stderr = std::sqrt(var / k);
        }
        out.push_back(s);
    }
    return out;
}

FitResult fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw PreconditionError("line fit needs at least two points");
    }
    const auto k = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw PreconditionError("line fit needs two distinct x values");
    }
    FitResult f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    return f;
}

ExperimentResult run_single_estimate(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
        for (StateFamily fam : cfg.families) {
            std::vector<ResultRow> rows(cfg.pairs);
            parallel_for(cfg.pairs, cfg.threads, [&](std::size_t i) {
                const std::uint64_t seed = item_seed(cfg, 1, n, fam, i);
                const Stopwatch sw(cfg.timing);
                const StatePair pair = make_pair(cfg, fam, n, seed);
                const QprSampler qpr(pair, n, cfg.pairing);
                const EstimateResult e = qpr.estimate(cfg.shots, derive_seed(seed, 3));
                rows[i] = make_row(cfg, n, "qpr_" + to_string(fam), static_cast<std::int64_t>(i), pair.truth, e.mean,
                                   cfg.shots, seed, sw.ms());
            });
            res.rows.insert(res.rows.end(), rows.begin(), rows.end());
        }
    }
    sort_rows(res.rows);
    res.summary = summarize_rows(res.rows);
    for (const auto& s : res.summary) {
        res.metrics["mae_" + s.method + "_n" + std::to_string(s.n)] = s.mae;
    }
    return res;
}

ExperimentResult run_scaling(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    std::size_t capped = 0;
    std::vector<double> all_x, all_y;
    for (StateFamily fam : cfg.families) {
        std::vector<double> xs, ys;
        for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
            std::vector<std::size_t> crossing(cfg.batches);
            std::vector<ResultRow> rows(cfg.batches * cfg.pairs_per_batch);
            parallel_for(cfg.batches, cfg.threads, [&](std::size_t b) {
                const Stopwatch sw(cfg.timing);
                std::vector<StatePair> pairs;
                std::vector<std::uint64_t> seeds;
                for (std::size_t i = 0; i < cfg.pairs_per_batch; ++i) {
                    seeds.push_back(item_seed(cfg, 2, n, fam, b * cfg.pairs_per_batch + i));
                    pairs.push_back(make_pair(cfg, fam, n, seeds.back()));
                    if (!pairs.back().truth) {
                        throw ConfigError("scaling experiments need n <= 12 for exact truth values");
                    }
                }
                std::vector<QprSampler> samplers;
                for (const StatePair& p : pairs) {
                    samplers.emplace_back(p, n, cfg.pairing);
                }
                auto estimate = [&](std::size_t i, std::size_t shots) {
                    return samplers[i].estimate(shots, derive_seed(seeds[i], 1000 + shots)).mean;
                };
                auto batch_error = [&](std::size_t shots) {
                    double err = 0.0;
                    for (std::size_t i = 0; i < pairs.size(); ++i) {
                        err += std::abs(estimate(i, shots) - *pairs[i].truth);
                    }
                    return err / static_cast<double>(pairs.size());
                };
                const std::size_t nstar = find_crossing(batch_error, cfg.threshold, cfg.start_shots, cfg.max_shots);
                crossing[b] = nstar;
                const double ms = sw.ms() / static_cast<double>(pairs.size());
                for (std::size_t i = 0; i < pairs.size(); ++i) {
                    rows[b * cfg.pairs_per_batch + i] =
                        make_row(cfg, n, "qpr_" + to_string(fam), static_cast<std::int64_t>(b * cfg.pairs_per_batch + i),
                                 pairs[i].truth, estimate(i, nstar), nstar, seeds[i], ms);
                }
            });
            double mean_n = 0.0;
            for (std::size_t c : crossing) {
                mean_n += static_cast<double>(c);
                capped += c >= cfg.max_shots ? 1 : 0;
            }
            mean_n /= static_cast<double>(cfg.batches);
            res.metrics["mean_shots_" + to_string(fam) + "_n" + std::to_string(n)] = mean_n;
            xs.push_back(n);
            ys.push_back(std::log2(mean_n));
            res.rows.insert(res.rows.end(), rows.begin(), rows.end());
        }
        if (xs.size() >= 2) {
            res.metrics["exponent_" + to_string(fam)] = fit_line(xs, ys).slope;
        }
        all_x.insert(all_x.end(), xs.begin(), xs.end());
        all_y.insert(all_y.end(), ys.begin(), ys.end());
    }
    if (cfg.n_max > cfg.n_min) {
        res.metrics["exponent"] = fit_line(all_x, all_y).slope;
    }
    res.metrics["capped_batches"] = static_cast<double>(capped);
    sort_rows(res.rows);
    res.summary = summarize_rows(res.rows);
    return res;
}

ExperimentResult run_circuit_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
        const bool use_swap = cfg.circuit == CircuitChoice::swap_test ||
                              (cfg.circuit == CircuitChoice::automatic && n <= 2);
        const Circuit circ = use_swap ? build_standard_swap_test(n, cfg.layout) : build_bell_circuit(n, cfg.layout);
        const std::string circ_name = use_swap ? "swap_test" : "bell";
        const bool dense = cfg.simulator == SimulatorChoice::dense ||
                           (cfg.simulator == SimulatorChoice::automatic && circ.width() <= 10);
        std::size_t shots = cfg.circuit_shots;
        if (shots == 0) {
            shots = n == 2 ? 500 : n == 3 ? 1500 : cfg.shots;
        }
        for (StateFamily fam : cfg.families) {
            std::vector<ResultRow> qrows(cfg.pairs), crows(cfg.pairs);
            std::vector<double> bounds(cfg.pairs, 1.0);
            parallel_for(cfg.pairs, cfg.threads, [&](std::size_t i) {
                const std::uint64_t seed = item_seed(cfg, 3, n, fam, i);
                const StatePair pair = make_pair(cfg, fam, n, seed);
                const Stopwatch sq(cfg.timing);
                const QprSampler qpr(pair, n, cfg.pairing);
                const EstimateResult q = qpr.estimate(shots, derive_seed(seed, 3));
                qrows[i] = make_row(cfg, n, "qpr", static_cast<std::int64_t>(i), pair.truth, q.mean, shots, seed,
                                    sq.ms());
                const Stopwatch sc(cfg.timing);
                const CircuitEstimate c =
                    dense ? estimate_overlap_via_circuit_dense(circ, *pair.da, *pair.db, cfg.noise, shots,
                                                               derive_seed(seed, 4))
                          : estimate_overlap_via_circuit(circ, pair.a, pair.b, cfg.noise, shots, derive_seed(seed, 4),
                                                         cfg.caps);
                crows[i] = make_row(cfg, n, circ_name, static_cast<std::int64_t>(i), pair.truth, c.result.mean, shots,
                                    seed, sc.ms());
                bounds[i] = c.fidelity_bound;
            });
            res.rows.insert(res.rows.end(), qrows.begin(), qrows.end());
            res.rows.insert(res.rows.end(), crows.begin(), crows.end());
            const std::string suffix = "_n" + std::to_string(n);
            res.metrics["min_fidelity_bound" + suffix] = *std::min_element(bounds.begin(), bounds.end());
            res.metrics["cnots" + suffix] = static_cast<double>(circ.cnot_count());
            res.metrics["layers" + suffix] = static_cast<double>(circ.layers().size());
            res.metrics["shots" + suffix] = static_cast<double>(shots);
            res.metrics["dense_simulator" + suffix] = dense ? 1.0 : 0.0;
        }
        const auto summary = summarize_rows(res.rows);
        const MethodSummary* q = find_summary(summary, "qpr", n);
        const MethodSummary* c = find_summary(summary, circ_name, n);
        if (q && c) {
            const std::string suffix = "_n" + std::to_string(n);
            res.metrics["mae_qpr" + suffix] = q->mae;
            res.metrics["mae_circuit" + suffix] = c->mae;
            const double se = std::hypot(q->mae_stderr, c->mae_stderr);
            res.metrics["gap_sigma" + suffix] = se > 0.0 ? (c->mae - q->mae) / se : 0.0;
            res.metrics["mean_true_overlap" + suffix] = q->mean_true_overlap;
        }
    }
    sort_rows(res.rows);
    res.summary = summarize_rows(res.rows);
    return res;
}

ExperimentResult run_randmeas_compare(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    for (int n = cfg.n_min; n <= cfg.n_max; ++n) {
        for (StateFamily fam : cfg.families) {
            std::vector<ResultRow> qrows(cfg.instances), rrows(cfg.instances);
            parallel_for(cfg.instances, cfg.threads, [&](std::size_t i) {
                const std::uint64_t seed = item_seed(cfg, 4, n, fam, i);
                const StatePair pair = make_pair(cfg, fam, n, seed);
                const Stopwatch sq(cfg.timing);
                const QprSampler qpr(pair, n, cfg.pairing);
                const EstimateResult q = qpr.estimate(cfg.shots, derive_seed(seed, 3));
                qrows[i] = make_row(cfg, n, "qpr_" + to_string(fam), static_cast<std::int64_t>(i), pair.truth, q.mean,
                                    cfg.shots, seed, sq.ms());
                const Stopwatch sr(cfg.timing);
                const RandomMeasSettings settings = generate_settings(n, cfg.n_u, derive_seed(seed, 4), cfg.n_m);
                const EstimateResult r = pair.da ? estimate_overlap_rm(*pair.da, *pair.db, settings)
                                                 : estimate_overlap_rm(pair.a, pair.b, settings);
                rrows[i] = make_row(cfg, n, "rm_" + to_string(fam), static_cast<std::int64_t>(i), pair.truth, r.mean,
                                    cfg.n_u * cfg.n_m, seed, sr.ms());
            });
            res.rows.insert(res.rows.end(), qrows.begin(), qrows.end());
            res.rows.insert(res.rows.end(), rrows.begin(), rrows.end());
        }
    }
    sort_rows(res.rows);
    res.summary = summarize_rows(res.rows);
    for (const auto& s : res.summary) {
        res.metrics["mae_" + s.method + "_n" + std::to_string(s.n)] = s.mae;
        res.metrics["mean_true_overlap_" + s.method + "_n" + std::to_string(s.n)] = s.mean_true_overlap;
    }
    return res;
}

ExperimentResult run_povm_search(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult res;
    const double pauli6_nu = *pseudoinverse_negativity(pauli6());
    double best = std::numeric_limits<double>::infinity();
    std::int64_t id = 0;
    for (int m : cfg.outcomes) {
        const Stopwatch sw(cfg.timing);
        GridSearchOptions opt;
        opt.outcomes = m;
        opt.resolution_deg = cfg.resolution_deg;
        opt.refine_deg = cfg.refine_deg;
        const GridSearchResult g = grid_search_povm(opt);
        res.rows.push_back(make_row(cfg, 1, "grid" + std::to_string(m), id++, std::nullopt, g.nu, g.evaluated,
                                    cfg.seed, sw.ms()));
        res.metrics["nu_grid" + std::to_string(m)] = g.nu;
        best = std::min(best, g.nu);
    }
    {
        const Stopwatch sw(cfg.timing);
        McmcOptions opt;
        opt.steps = cfg.mcmc_steps;
        opt.temperature = cfg.temperature;
        opt.proposal_scale = cfg.proposal_scale;
        opt.seed = derive_seed(cfg.seed, 5);
        const McmcResult r = mcmc_tau_search(compute_t_matrix(pauli6()), opt);
        res.rows.push_back(make_row(cfg, 1, "mcmc", id++, std::nullopt, r.nu_best,
                                    static_cast<std::uint64_t>(cfg.mcmc_steps), opt.seed, sw.ms()));
        res.metrics["nu_mcmc"] = r.nu_best;
        res.metrics["mcmc_accepted"] = r.accepted;
        best = std::min(best, r.nu_best);
    }
    res.metrics["nu_pauli6"] = pauli6_nu;
    res.metrics["nu_best"] = best;
    res.metrics["beats_pauli6"] = best < pauli6_nu - 1e-9 ? 1.0 : 0.0;
    return res;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    switch (cfg.kind) {
        case ExperimentKind::scaling: return run_scaling(cfg);
        case ExperimentKind::circuit_compare: return run_circuit_compare(cfg);
        case ExperimentKind::randmeas_compare: return run_randmeas_compare(cfg);
        case ExperimentKind::povm_search: return run_povm_search(cfg);
        case ExperimentKind::single_estimate: return run_single_estimate(cfg);
    }
    throw ConfigError("unknown experiment kind");
}

std::string manifest_json(const ExperimentConfig& cfg, const ExperimentResult& result) {
    nlohmann::ordered_json j;
    j["toolkit"] = "qoverlap";
    j["version"] = kToolkitVersion;
    j["experiment_id"] = cfg.experiment_id();
    j["kind"] = to_string(cfg.kind);
    j["master_seed"] = cfg.seed;
    nlohmann::ordered_json conf;
    for (const Field& f : fields()) {
        conf[f.section][f.key] = f.get(cfg);
    }
    j["config"] = conf;
    j["rows"] = result.rows.size();
    nlohmann::ordered_json metrics = nlohmann::ordered_json::object();
    for (const auto& [k, v] : result.metrics) {
        metrics[k] = v;
    }
    j["metrics"] = metrics;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (const auto& s : result.summary) {
        summary.push_back({{"method", s.method},
                           {"n", s.n},
                           {"count", s.count},
                           {"mae", s.mae},
                           {"mae_stderr", s.mae_stderr},
                           {"mean_true_overlap", s.mean_true_overlap}});
    }
    j["summary"] = summary;
    return j.dump(2) + "\n";
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    write_results(result.rows, cfg.out);
    std::filesystem::path manifest = cfg.out;
    manifest += ".manifest.json";
    std::ofstream out(manifest, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + manifest.string());
    }
    out << manifest_json(cfg, result);
}

}  // namespace qoverlap
