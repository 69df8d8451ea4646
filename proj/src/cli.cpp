#include "freqctl/cli.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <fstream>
#include <optional>
#include <ostream>

#include "freqctl/case_io.hpp"
#include "freqctl/dispatch.hpp"
#include "freqctl/dynamics.hpp"
#include "freqctl/experiment.hpp"
#include "freqctl/scenario.hpp"

namespace freqctl {

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> dt;
    std::optional<double> horizon;
    std::string out_dir;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--seed", o.seed, "Override the scenario RNG seed");
    cmd->add_option("--dt", o.dt, "Override the integrator step [s]")->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", o.horizon, "Override the simulated horizon [s]")->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out_dir, "Directory for the CSV and summary outputs");
}

Scenario prepare(const std::string& path, const Overrides& o) {
    Scenario s = load_scenario(path);
    if (o.seed) s.seed = *o.seed;
    if (o.dt) s.integrator.dt = *o.dt;
    if (o.horizon) {
        s.horizon = *o.horizon;
        for (const Disturbance& d : s.disturbances) {
            if (d.t > s.horizon) throw ValidationError("disturbance at t = " + format_double(d.t) + " lies past the horizon");
        }
    }
    if (!o.out_dir.empty()) {
        s.csv = std::filesystem::path(o.out_dir) / (s.id + ".csv");
        s.summary = std::filesystem::path(o.out_dir) / (s.id + ".summary");
    }
    return s;
}

void print_vector(std::ostream& out, const NetworkModel& net, const char* prefix, const Vector& v) {
    for (std::size_t i = 0; i < net.size(); ++i) {
        out << prefix << net.bus(i).id << "=" << format_double(v[static_cast<Eigen::Index>(i)]) << "\n";
    }
}

int cmd_dispatch(const std::string& path, bool dual, double alpha, double tol, const std::string& history,
                 std::ostream& out) {
    const CaseData data = load_case(path);
    const DispatchProblem prob(data.cost, data.net.injections());
    const FeasibilityReport f = check_feasibility(prob);
    out << "feasible=" << (f.feasible ? "true" : "false") << "\n";
    const DispatchSolution root = solve_market_clearing(prob, tol);
    if (!dual) {
        out << "method=market_clearing\n";
        out << "lambda=" << format_double(root.lambda) << "\n";
        print_vector(out, data.net, "u_", root.u);
        out << "iterations=" << root.iterations << "\n";
        out << "residual=" << format_double(root.residual) << "\n";
        return 0;
    }
    DualOptions opt;
    opt.alpha = alpha;
    opt.tol = tol;
    opt.total_damping = data.net.total_damping();
    const DualResult r = dual_decomposition(prob, opt);
    out << "method=dual_decomposition\n";
    out << "alpha=" << format_double(alpha > 0.0 ? alpha : default_step_size(prob)) << "\n";
    out << "lambda=" << format_double(r.solution.lambda) << "\n";
    print_vector(out, data.net, "u_", r.solution.u);
    out << "iterations=" << r.solution.iterations << "\n";
    out << "residual=" << format_double(r.solution.residual) << "\n";
    out << "market_clearing_lambda=" << format_double(root.lambda) << "\n";
    out << "lambda_difference=" << format_double(std::abs(r.solution.lambda - root.lambda)) << "\n";
    if (!history.empty()) {
        std::ofstream os(history);
        if (!os) throw ParseError(history + ": cannot write history");
        os << "k,lambda,residual,omega\n";
        for (const DualIterate& it : r.history) {
            os << fmt::format("{},{:.17g},{:.17g},{:.17g}\n", it.k, it.lambda, it.residual, it.omega);
        }
    }
    return 0;
}

int cmd_equilibrium(const std::string& path, double k, std::ostream& out) {
    const CaseData data = load_case(path);
    const ControllerSpec spec = make_gather_broadcast(data.net, k, data.cost);
    const Equilibrium eq = find_equilibrium(data.net, spec);
    out << "lambda=" << format_double(eq.lambda) << "\n";
    out << "residual=" << format_double(eq.residual) << "\n";
    out << "secure=" << (eq.secure ? "true" : "false") << "\n";
    if (!eq.warning.empty()) out << "warning=" << eq.warning << "\n";
    print_vector(out, data.net, "theta_", eq.theta);
    print_vector(out, data.net, "u_", eq.u);
    return 0;
}

int cmd_validate(const std::string& path, std::ostream& out) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw ParseError(path + ": cannot open file");
    } catch (const YAML::ParserException& e) {
        throw ParseError(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    const std::string schema = root.IsMap() && root["schema"] ? root["schema"].as<std::string>("") : "";
    if (schema == kCaseSchema) {
        const CaseData data = load_case(path);
        out << "ok: case '" << data.name << "' with " << data.net.size() << " buses ("
            << data.net.generators().size() << " generators, " << data.net.frequency_responsive().size()
            << " responsive, " << data.net.passive().size() << " passive) and " << data.net.branches().size()
            << " branches\n";
        return 0;
    }
    if (schema == kScenarioSchema) {
        const Scenario s = load_scenario(path);
        const ControllerSpec spec = build_controller(s.controller, s.data, s.seed);
        validate_controller(spec, s.data.net.size());
        for (const Variant& v : s.variants) {
            validate_controller(build_controller(v.controller, s.data, s.seed), s.data.net.size());
        }
        const Vector p = s.data.net.injections() + disturbance_total(s);
        const FeasibilityReport f = check_feasibility(DispatchProblem(controller_cost(s.controller, s.data), p));
        out << "ok: scenario '" << s.id << "' on case '" << s.data.name << "' with " << s.variants.size()
            << " variants; feasible after disturbances: " << (f.feasible ? "yes" : "no") << "\n";
        return f.feasible ? 0 : 1;
    }
    throw ParseError(path + ": no recognised schema field");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Frequency control and economic dispatch simulator", "freqctl"};
    app.require_subcommand(1);

    Overrides sim_o, cmp_o;
    std::string sim_path, cmp_path, disp_path, eq_path, val_path, controllers;
    bool dual = false;
    double alpha = 0.0, tol = 1e-10, eq_k = 60.0;
    std::string history;

    auto* sim = app.add_subcommand("simulate", "Run a scenario and write its trajectory and summary");
    sim->add_option("scenario", sim_path, "Scenario file")->required();
    add_overrides(sim, sim_o);

    auto* cmp = app.add_subcommand("compare", "Run the controller variants of a scenario side by side");
    cmp->add_option("scenario", cmp_path, "Scenario file")->required();
    cmp->add_option("--controllers", controllers, "Comma-separated variant names (default: all)");
    add_overrides(cmp, cmp_o);

    auto* disp = app.add_subcommand("dispatch", "Solve the economic dispatch of a case");
    disp->add_option("case", disp_path, "Case file")->required();
    disp->add_flag("--dual", dual, "Use dual decomposition instead of market clearing");
    disp->add_option("--alpha", alpha, "Dual step size (default: 0.5 / sum of response slopes)")
        ->check(CLI::PositiveNumber);
    disp->add_option("--tol", tol, "Residual tolerance")->check(CLI::PositiveNumber);
    disp->add_option("--history", history, "CSV file for the dual iterates");

    auto* eq = app.add_subcommand("equilibrium", "Closed-loop equilibrium under gather-and-broadcast control");
    eq->add_option("case", eq_path, "Case file")->required();
    eq->add_option("--k", eq_k, "Integral gain")->check(CLI::PositiveNumber);

    auto* val = app.add_subcommand("validate", "Check a case or scenario file");
    val->add_option("file", val_path, "Case or scenario file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (*sim) {
            const Scenario s = prepare(sim_path, sim_o);
            out << run_scenario(s).summary.to_text();
        } else if (*cmp) {
            const Scenario s = prepare(cmp_path, cmp_o);
            std::vector<std::string> names;
            if (!controllers.empty()) names = CLI::detail::split(controllers, ',');
            const auto rows = compare_controllers(s, names);
            out << format_comparison(rows);
            for (const auto& r : rows) {
                if (!r.ok) return 1;
            }
        } else if (*disp) {
            return cmd_dispatch(disp_path, dual, alpha, tol, history, out);
        } else if (*eq) {
            return cmd_equilibrium(eq_path, eq_k, out);
        } else if (*val) {
            return cmd_validate(val_path, out);
        }
    } catch (const NonConvergenceError& e) {
        err << "error: " << e.what() << " (last residual " << format_double(e.last_residual()) << ")\n";
        return 1;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"freqctl"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace freqctl
