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

#include "cli.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qoverlap/experiments.hpp"
#include "qoverlap/povm.hpp"
#include "qoverlap/samples.hpp"

namespace qoverlap::cli {

namespace {

struct Command {
    ExperimentKind kind;
    const char* name;
    const char* help;
    std::set<std::string> sections;
};

const std::vector<Command>& commands() {
    static const std::vector<Command> list = {
        {ExperimentKind::single_estimate, "estimate", "Estimate overlaps of random pairs, or of two sample files",
         {"experiment", "states", "estimator"}},
        {ExperimentKind::scaling, "scaling", "Shots needed to reach an error threshold versus n",
         {"experiment", "states", "estimator", "scaling"}},
        {ExperimentKind::circuit_compare, "circuit-compare", "Sampling estimator versus a noisy overlap circuit",
         {"experiment", "states", "estimator", "circuit"}},
        {ExperimentKind::randmeas_compare, "randmeas-compare", "Sampling estimator versus randomized measurements",
         {"experiment", "states", "estimator", "randmeas"}},
        {ExperimentKind::povm_search, "povm-search", "Search POVMs and generalized inverses for a smaller range",
         {"experiment", "povm_search"}},
    };
    return list;
}

std::string flag_for(const std::string& section, const std::string& key) {
    std::string name = key;
    if (section == "circuit" && key == "shots") {
        name = "circuit_shots";
    }
    std::replace(name.begin(), name.end(), '_', '-');
    return "--" + name;
}

struct Invocation {
    std::string config_path;
    std::map<std::pair<std::string, std::string>, std::string> overrides;
    bool timing = false;
    std::string rho_samples;
    std::string sigma_samples;
    std::string povm_path;
};

ExperimentConfig build_config(const Command& cmd, const Invocation& inv) {
    ExperimentConfig cfg = ExperimentConfig::defaults(cmd.kind);
    if (!inv.config_path.empty()) {
        cfg = load_config(inv.config_path);
        if (cfg.kind != cmd.kind) {
            throw ConfigError("kind: config file describes '" + to_string(cfg.kind) + "' but the subcommand is '" +
                              cmd.name + "'");
        }
    }
    for (const auto& [key, value] : inv.overrides) {
        set_config_value(cfg, key.first, key.second, value);
    }
    if (inv.timing) {
        cfg.timing = true;
    }
    cfg.validate();
    return cfg;
}

int estimate_from_files(const Invocation& inv, std::ostream& out) {
    if (inv.rho_samples.empty() || inv.sigma_samples.empty()) {
        throw ConfigError("--rho-samples and --sigma-samples must be given together");
    }
    const SampleRecord a = load_samples(inv.rho_samples);
    const SampleRecord b = load_samples(inv.sigma_samples);
    const QubitPOVM povm = inv.povm_path.empty() ? pauli6() : load_povm(inv.povm_path);
    if (a.outcomes_per_qubit != povm.size() || b.outcomes_per_qubit != povm.size()) {
        throw DimensionError("sample files do not match the POVM outcome count");
    }
    const TMatrix t = compute_t_matrix(povm);
    const GeneralizedInverse tp = pseudoinverse(t);
    const EstimateResult r = estimate_overlap(a, b, estimator_tensor(tp, tp, t));
    nlohmann::ordered_json j;
    j["n"] = a.n;
    j["estimate"] = r.mean;
    j["std_error"] = r.std_error;
    j["shots"] = r.shots;
    out << j.dump(2) << '\n';
    return 0;
}

void print_report(const ExperimentConfig& cfg, const ExperimentResult& res, std::ostream& out) {
    out << "experiment " << cfg.experiment_id() << ": " << res.rows.size() << " rows -> " << cfg.out.string()
        << '\n';
    const auto flags = out.flags();
    out << std::setprecision(6);
    for (const auto& s : res.summary) {
        out << "  " << s.method << " n=" << s.n << " mae=" << s.mae << " +- " << s.mae_stderr
            << " mean_overlap=" << s.mean_true_overlap << " (" << s.count << ")\n";
    }
    for (const auto& [k, v] : res.metrics) {
        out << "  " << k << " = " << v << '\n';
    }
    out.flags(flags);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"qoverlap experiment runner"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolkitVersion));

    Invocation inv;
    std::map<const CLI::App*, const Command*> by_app;
    struct Bound {
        const CLI::App* app;
        CLI::Option* opt;
        std::pair<std::string, std::string> key;
    };
    std::vector<Bound> options;
    std::map<std::pair<std::string, std::string>, std::string> values;

    for (const Command& cmd : commands()) {
        CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
        by_app[sub] = &cmd;
        sub->add_option("--config", inv.config_path, "INI config file")->check(CLI::ExistingFile);
        sub->add_flag("--timing", inv.timing, "Record wall-clock time per row");
        for (const auto& [section, key] : config_keys()) {
            if (!cmd.sections.count(section) || key == "kind" || key == "timing") {
                continue;
            }
            std::string& slot = values[{section, key}];
            std::string desc = "[" + section + "] " + key;
            if (key == "seed") {
                desc += " (default 1)";
            } else if (key == "out") {
                desc += " (default results.csv)";
            }
            options.push_back({sub, sub->add_option(flag_for(section, key), slot, desc), {section, key}});
        }
        if (cmd.kind == ExperimentKind::single_estimate) {
            sub->add_option("--rho-samples", inv.rho_samples, "Sample file for the first state");
            sub->add_option("--sigma-samples", inv.sigma_samples, "Sample file for the second state");
            sub->add_option("--povm", inv.povm_path, "POVM file for the sample files (default Pauli-6)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        const CLI::App* chosen = app.get_subcommands().front();
        const Command& cmd = *by_app.at(chosen);
        for (const auto& [owner, opt, key] : options) {
            if (owner == chosen && opt->count() > 0) {
                inv.overrides[key] = values[key];
            }
        }
        if (!inv.rho_samples.empty() || !inv.sigma_samples.empty()) {
            return estimate_from_files(inv, out);
        }
        const ExperimentConfig cfg = build_config(cmd, inv);
        const ExperimentResult res = run_experiment(cfg);
        write_outputs(cfg, res);
        print_report(cfg, res, out);
        return 0;
    } catch (const PreconditionError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const DimensionError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace qoverlap::cli
