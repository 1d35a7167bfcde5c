// polypol command-line front end.
//
//   polypol solve       MODEL [--pi PAIRS|@FILE] [--decimal] [--verify]
//   polypol inverse     MODEL --pi0 PAIRS|@FILE [--raw]
//   polypol check       CONSTRAINT --pi PAIRS|@FILE
//   polypol instantiate CONSTRAINT --pi PAIRS|@FILE
//   polypol simplify    CONSTRAINT
//
// Every subcommand accepts --output FILE. CONSTRAINT may be "-" for stdin.
// Exit status: 0 success / satisfied, 1 not satisfied, 2 error.

#include "polypol/polypol.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <variant>

namespace {

using namespace polypol;

constexpr int exit_ok = 0;
constexpr int exit_unsatisfied = 1;
constexpr int exit_error = 2;

std::string read_file(const std::string& path) {
    if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Inline "a=1,b=2" or "@file".
std::string instantiation_text(const std::string& arg) {
    if (!arg.empty() && arg.front() == '@') return read_file(arg.substr(1));
    return arg;
}

std::size_t oracle_cap(std::size_t fallback) {
    if (const char* env = std::getenv("POLYPOL_ORACLE_CAP")) {
        try {
            return static_cast<std::size_t>(std::stoull(env));
        } catch (const std::exception&) {
            throw Error("POLYPOL_ORACLE_CAP must be a positive integer");
        }
    }
    return fallback;
}

std::string describe_missing(const MissingParameter& e, const ParameterSet& params) {
    return "missing value for parameter '" + (e.id() < params.size() ? params.name(e.id()) : "?") + "'";
}

struct Output {
    std::string path;
    std::ostringstream buffer;

    void flush() const {
        if (path.empty() || path == "-") {
            std::cout << buffer.str();
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write '" + path + "'");
        out << buffer.str();
    }
};

std::string number(const Rational& r, bool decimal) {
    std::string s = to_string(r);
    if (decimal && r.get_den() != 1) s += " (" + to_decimal_string(r) + ")";
    return s;
}

Instantiation model_instantiation(const std::string& arg, ParameterSet& params, bool required) {
    Instantiation pi;
    if (!arg.empty()) pi = parse_instantiation(instantiation_text(arg), params, UnknownParameters::Reject);
    if (required || !arg.empty()) {
        auto missing = unassigned(params, pi);
        if (!missing.empty()) {
            std::string names;
            for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
            throw Error("instantiation must assign every parameter; missing: " + names);
        }
    }
    return pi;
}

std::string policy_text(const ConstantMdp& m, const MdpPolicy& mu) {
    std::string out;
    for (StateId s = 0; s < m.state_count(); ++s) {
        if (s == m.absorbing) continue;
        out += (out.empty() ? "" : ", ") + m.states[s] + " -> " + m.actions[mu.action[s]];
    }
    return out;
}

std::string policy_text(const std::vector<std::string>& states, const MaxPolicy& mu) {
    std::string out;
    for (std::size_t i = 0; i < mu.successor.size(); ++i)
        out += (i == 0 ? "" : ", ") + states[i] + " -> " + states[mu.successor[i]];
    return out;
}

std::string circuit_text(const std::vector<std::string>& states, const std::vector<std::size_t>& c) {
    std::string out;
    for (auto s : c) out += states[s] + " -> ";
    return out + states[c.front()];
}

int solve_pmdp(PmdpDocument& doc, const std::string& pi_arg, bool decimal, bool verify, Output& out) {
    Instantiation pi = model_instantiation(pi_arg, doc.parameters, !doc.parameters.empty());
    ConstantMdp m = instantiate(doc.model, pi);
    MdpSolution sol = mdp_pi(m);

    out.buffer << "policy: " << policy_text(m, sol.policy) << "\n";
    out.buffer << "value:";
    for (StateId s = 0; s < m.state_count(); ++s)
        out.buffer << (s == 0 ? " " : ", ") << m.states[s] << " = " << number(sol.values[s], decimal);
    out.buffer << "\niterations: " << sol.iterations << "\n";

    if (verify) {
        BruteForceMdpResult oracle = brute_force_optimal(m, oracle_cap(default_policy_cap));
        bool ok = oracle.minimum == sol.values &&
                  std::find(oracle.optimal.begin(), oracle.optimal.end(), sol.policy) != oracle.optimal.end();
        out.buffer << "verified: " << (ok ? "yes" : "NO") << " (" << oracle.optimal.size()
                   << " optimal policies by enumeration)\n";
        if (!ok) throw Error("policy iteration disagrees with exhaustive enumeration");
    }
    return exit_ok;
}

int solve_pdwg(PdwgDocument& doc, const std::string& pi_arg, bool decimal, bool verify, Output& out) {
    Instantiation pi = model_instantiation(pi_arg, doc.parameters, !doc.parameters.empty());
    NumericMatrix m = instantiate(doc.matrix, pi);
    MaxPiResult res = max_pi(m);

    Rational rho = *std::max_element(res.eigenmode.eta.begin(), res.eigenmode.eta.end());
    out.buffer << "rho: " << number(rho, decimal) << "\n";
    out.buffer << "policy: " << policy_text(doc.states, res.policy) << "\n";
    out.buffer << "eta:";
    for (std::size_t i = 0; i < m.size(); ++i)
        out.buffer << (i == 0 ? " " : ", ") << doc.states[i] << " = " << number(res.eigenmode.eta[i], decimal);
    out.buffer << "\nx:";
    for (std::size_t i = 0; i < m.size(); ++i)
        out.buffer << (i == 0 ? " " : ", ") << doc.states[i] << " = " << number(res.eigenmode.x[i], decimal);
    out.buffer << "\n";
    for (const auto& c : policy_circuits(res.policy))
        out.buffer << "circuit: " << circuit_text(doc.states, c) << " (mean " << number(circuit_mean(m, c), decimal)
                   << ")\n";
    out.buffer << "iterations: " << res.trace.size() << "\n";

    if (verify) {
        McmResult oracle = brute_force_mcm(m, oracle_cap(default_circuit_cap));
        bool ok = oracle.rho == rho;
        out.buffer << "verified: " << (ok ? "yes" : "NO") << " (rho " << to_string(oracle.rho)
                   << " by circuit enumeration)\n";
        if (!ok) throw Error("policy iteration disagrees with circuit enumeration");
    }
    return exit_ok;
}

int cmd_solve(const std::string& model_path, const std::string& pi_arg, bool decimal, bool verify, Output& out) {
    ModelDocument doc = parse_model(read_file(model_path));
    if (auto* p = std::get_if<PmdpDocument>(&doc)) return solve_pmdp(*p, pi_arg, decimal, verify, out);
    return solve_pdwg(std::get<PdwgDocument>(doc), pi_arg, decimal, verify, out);
}

int cmd_inverse(const std::string& model_path, const std::string& pi_arg, bool raw, Output& out) {
    ModelDocument doc = parse_model(read_file(model_path));
    if (auto* p = std::get_if<PmdpDocument>(&doc)) {
        Instantiation pi0 = model_instantiation(pi_arg, p->parameters, true);
        MdpInverseResult res = p_mdp_pi(p->model, pi0);
        ConstantMdp reference = instantiate(p->model, pi0);
        out.buffer << "# reference policy: " << policy_text(reference, res.policy) << "\n";
        for (StateId s = 0; s < p->model.state_count(); ++s)
            out.buffer << "# V[" << p->model.states[s] << "] = " << to_string(res.values[s], p->parameters) << "\n";
        if (raw) {
            out.buffer << "# raw inequalities: " << res.raw.size() << "\n";
            for (const auto& iq : res.raw) out.buffer << "#   " << to_string(iq, p->parameters) << "\n";
        }
        out.buffer << render_constraint(res.constraint, p->parameters);
        return exit_ok;
    }

    auto& g = std::get<PdwgDocument>(doc);
    Instantiation pi0 = model_instantiation(pi_arg, g.parameters, true);
    MaxPlusInverseResult res = p_max_pi(g.matrix, pi0);
    out.buffer << "# reference policy: " << policy_text(g.states, res.policy) << "\n";
    for (std::size_t i = 0; i < g.matrix.size(); ++i)
        out.buffer << "# H[" << g.states[i] << "] = " << to_string(res.parametric.eta[i], g.parameters) << ", X["
                   << g.states[i] << "] = " << to_string(res.parametric.x[i], g.parameters) << "\n";
    if (raw) {
        out.buffer << "# raw inequalities: " << res.raw.size() << "\n";
        for (const auto& row : res.raw)
            out.buffer << "#   " << g.states[row.from] << " -> " << g.states[row.to] << ": "
                       << to_string(row.inequality, g.parameters) << "\n";
    }
    out.buffer << render_constraint(res.constraint, g.parameters);
    return exit_ok;
}

int cmd_check(const std::string& path, const std::string& pi_arg, Output& out) {
    ParameterSet params;
    Constraint k = parse_constraint(read_file(path), params);
    Instantiation pi = parse_instantiation(instantiation_text(pi_arg), params);
    try {
        for (const auto& iq : k.inequalities()) {
            if (!holds(iq, pi)) {
                out.buffer << "not satisfied: " << to_string(iq, params) << "\n";
                return exit_unsatisfied;
            }
        }
    } catch (const MissingParameter& e) {
        throw Error(describe_missing(e, params));
    }
    out.buffer << "satisfied\n";
    return exit_ok;
}

int cmd_instantiate(const std::string& path, const std::string& pi_arg, Output& out) {
    ParameterSet params;
    Constraint k = parse_constraint(read_file(path), params);
    Instantiation pi = parse_instantiation(instantiation_text(pi_arg), params);
    try {
        out.buffer << render_constraint(partial_instantiate(k, pi), params);
    } catch (const Contradiction&) {
        out.buffer << "# unsatisfiable under " << render_instantiation(pi, params) << "\n"
                   << render_constraint(Constraint::falsity(), params);
        return exit_unsatisfied;
    }
    return exit_ok;
}

int cmd_simplify(const std::string& path, Output& out) {
    ParameterSet params;
    Constraint k = parse_constraint(read_file(path), params);
    out.buffer << render_constraint(simplify(k), params);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal policies and robustness constraints for parametric MDPs and max-plus matrices"};
    app.require_subcommand(1);

    std::string input, pi_arg, output_path;
    bool decimal = false, verify = false, raw = false;

    auto* solve = app.add_subcommand("solve", "Optimal policy and values of a model at an instantiation");
    solve->add_option("model", input, "Model file (.json)")->required();
    solve->add_option("--pi", pi_arg, "Instantiation: name=value,... or @file");
    solve->add_flag("--decimal", decimal, "Also show decimal approximations");
    solve->add_flag("--verify", verify, "Cross-check against exhaustive enumeration");
    solve->add_option("--output,-o", output_path, "Write to FILE instead of stdout");

    auto* inverse = app.add_subcommand("inverse", "Constraint keeping the reference-optimal policy optimal");
    inverse->add_option("model", input, "Model file (.json)")->required();
    inverse->add_option("--pi0", pi_arg, "Reference instantiation: name=value,... or @file")->required();
    inverse->add_flag("--raw", raw, "Also list the unsimplified inequalities as comments");
    inverse->add_option("--output,-o", output_path, "Write to FILE instead of stdout");

    auto* check = app.add_subcommand("check", "Exit 0 if the instantiation satisfies the constraint, 1 if not");
    check->add_option("constraint", input, "Constraint file, or - for stdin")->required();
    check->add_option("--pi", pi_arg, "Instantiation: name=value,... or @file")->required();
    check->add_option("--output,-o", output_path, "Write to FILE instead of stdout");

    auto* inst = app.add_subcommand("instantiate", "Substitute some parameters and simplify");
    inst->add_option("constraint", input, "Constraint file, or - for stdin")->required();
    inst->add_option("--pi", pi_arg, "Partial instantiation: name=value,... or @file")->required();
    inst->add_option("--output,-o", output_path, "Write to FILE instead of stdout");

    auto* simp = app.add_subcommand("simplify", "Normalize, deduplicate and drop tautologies");
    simp->add_option("constraint", input, "Constraint file, or - for stdin")->required();
    simp->add_option("--output,-o", output_path, "Write to FILE instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_error;
    }

    Output out;
    out.path = output_path;
    try {
        int status = exit_ok;
        if (solve->parsed())
            status = cmd_solve(input, pi_arg, decimal, verify, out);
        else if (inverse->parsed())
            status = cmd_inverse(input, pi_arg, raw, out);
        else if (check->parsed())
            status = cmd_check(input, pi_arg, out);
        else if (inst->parsed())
            status = cmd_instantiate(input, pi_arg, out);
        else
            status = cmd_simplify(input, out);
        out.flush();
        return status;
    } catch (const std::exception& e) {
        std::cerr << "polypol: " << e.what() << "\n";
        return exit_error;
    }
}
