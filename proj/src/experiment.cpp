#include "freqctl/experiment.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

namespace freqctl {

namespace {

Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) { return format_double(x); }

// The decentralized loop has no unique equilibrium; start it from the one that
// splits the demand evenly over the integrators.
Equilibrium initial_equilibrium(const NetworkModel& net, const ControllerSpec& spec) {
    const auto* dec = std::get_if<DecentralizedIntegral>(&spec);
    if (dec == nullptr) return find_equilibrium(net, spec);
    Equilibrium eq;
    eq.ctrl = Vector::Zero(idx(net.size()));
    const double share = -net.injections().sum() / static_cast<double>(dec->buses.size());
    for (std::size_t i : dec->buses) eq.ctrl[idx(i)] = share;
    eq.u = controller_output(spec, eq.ctrl);
    eq.theta = solve_power_flow(net, eq.u, 1e-12, 100, &eq.residual);
    eq.secure = check_security(net, eq.theta).secure;
    return eq;
}

double price_estimate(const ControllerSpec& spec, const CostModel& cost, const Vector& ctrl, const Vector& u) {
    if (std::holds_alternative<GatherBroadcast>(spec) || std::holds_alternative<Agc>(spec)) return ctrl[0];
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < cost.size(); ++i) {
        if (!cost.interior(i, u[idx(i)])) continue;
        sum += cost.marginal(i, u[idx(i)]);
        ++count;
    }
    return count ? sum / count : 0.0;
}

void ensure_parent(const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

std::filesystem::path with_suffix(const std::filesystem::path& p, const std::string& name) {
    if (p.empty()) return p;
    return p.parent_path() / (p.stem().string() + "_" + name + p.extension().string());
}

}  // namespace

std::string RunSummary::to_text() const {
    std::ostringstream os;
    os << "scenario=" << scenario << "\n";
    if (!variant.empty()) os << "variant=" << variant << "\n";
    os << "controller=" << controller << "\n";
    os << "nadir=" << num(metrics.nadir) << "\n";
    os << "settling_time=" << (metrics.settling_time ? num(*metrics.settling_time) : std::string("none")) << "\n";
    os << "steady_state_error=" << num(metrics.steady_state_error) << "\n";
    os << "max_marginal_cost_spread=" << num(max_spread) << "\n";
    os << "final_marginal_cost_spread=" << num(final_spread) << "\n";
    os << "kkt_stationarity=" << num(kkt.stationarity) << "\n";
    os << "kkt_primal=" << num(kkt.primal) << "\n";
    os << "kkt_bound_violation=" << num(kkt.bound_violation) << "\n";
    os << "kkt_pass=" << (kkt.pass ? "true" : "false") << "\n";
    os << "lambda_star=" << num(lambda_star) << "\n";
    os << "dispatch_error=" << num(u_error) << "\n";
    os << "dispatch_cost=" << num(dispatch_cost) << "\n";
    os << "optimal_cost=" << num(optimal_cost) << "\n";
    os << "cost_gap=" << num(cost_gap) << "\n";
    os << "feasible_after_disturbances=" << (feasible ? "true" : "false") << "\n";
    os << "total_disturbance_mw=" << num(total_disturbance_mw) << "\n";
    os << "steps=" << steps << "\n";
    os << "samples=" << samples << "\n";
    return os.str();
}

void write_csv(const TrajectoryRecord& traj, const NetworkModel& net, std::ostream& os) {
    const std::size_t n = net.size();
    const std::size_t nc = traj.samples.empty() ? 0 : static_cast<std::size_t>(traj.samples.front().ctrl.size());
    std::string header = "t";
    for (std::size_t i = 0; i < n; ++i) header += fmt::format(",theta_{}", net.bus(i).id);
    for (std::size_t i = 0; i < n; ++i) header += fmt::format(",omega_{}", net.bus(i).id);
    if (nc == 1) {
        header += ",lambda";
    } else {
        for (std::size_t i = 0; i < nc; ++i) header += fmt::format(",lambda_{}", net.bus(i).id);
    }
    for (std::size_t i = 0; i < n; ++i) header += fmt::format(",u_{}", net.bus(i).id);
    header += ",H\n";
    os << header;

    fmt::memory_buffer buf;
    for (const Sample& s : traj.samples) {
        buf.clear();
        auto out = std::back_inserter(buf);
        fmt::format_to(out, "{:.17g}", s.t);
        for (const Vector* v : {&s.theta, &s.omega, &s.ctrl, &s.u}) {
            for (Eigen::Index i = 0; i < v->size(); ++i) fmt::format_to(out, ",{:.17g}", (*v)[i]);
        }
        fmt::format_to(out, ",{:.17g}\n", s.hamiltonian);
        os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

RunResult run_scenario(const Scenario& sc, const RunOptions& opt) {
    const CaseData& data = sc.data;
    const IntegratorConfig& cfg = sc.integrator;
    cfg.validate();
    const ControllerSpec spec = build_controller(sc.controller, data, sc.seed);
    validate_controller(spec, data.net.size());
    const CostModel cost = controller_cost(sc.controller, data);

    RunResult res;
    RunSummary& sum = res.summary;
    sum.scenario = sc.id;
    sum.variant = opt.variant_name;
    sum.controller = std::string(controller_tag(spec));

    const Vector p0 = data.net.injections();
    const Vector dp = disturbance_total(sc);
    const NetworkModel net_final = data.net.with_injections(p0 + dp);
    for (const Disturbance& d : sc.disturbances) sum.total_disturbance_mw += d.delta_mw;

    const DispatchProblem final_problem(cost, net_final.injections());
    sum.feasible = check_feasibility(final_problem).feasible;
    const DispatchSolution optimum = solve_market_clearing(final_problem, 1e-12);  // throws when infeasible
    res.u_star = optimum.u;
    sum.lambda_star = optimum.lambda;
    sum.optimal_cost = cost.total_cost(optimum.u);

    bool with_h = false;
    if (const auto* gb = std::get_if<GatherBroadcast>(&spec); gb != nullptr && gb->cost.scaled_view()) {
        res.final_equilibrium = find_equilibrium(net_final, spec);
        with_h = true;
    }

    SystemState state;
    const AlgebraicOptions alg{cfg.newton_tol, cfg.newton_max_iter};
    if (sc.initial == "equilibrium") {
        state = initial_equilibrium(data.net, spec).state(data.net.size());
    } else {
        state.theta = Vector::Zero(idx(data.net.size()));
        state.omega = Vector::Zero(idx(data.net.size()));
        state.ctrl = Vector::Zero(idx(state_size(spec, data.net.size())));
    }

    const auto steps = static_cast<std::size_t>(std::llround(sc.horizon / cfg.dt));
    std::vector<std::size_t> at_step;
    for (const Disturbance& d : sc.disturbances) at_step.push_back(static_cast<std::size_t>(std::llround(d.t / cfg.dt)));

    NetworkModel net = data.net;
    Vector p = p0;
    make_consistent(net, spec, state, alg);

    res.trajectory.scenario_id = sc.id;
    res.trajectory.controller = sum.controller;
    auto record = [&](const SystemState& s) {
        Sample smp{s.t, s.theta, s.omega, s.ctrl, controller_output(spec, s.ctrl), nan_value};
        if (with_h) smp.hamiltonian = hamiltonian(net_final, spec, s, *res.final_equilibrium);
        sum.max_spread = std::max(sum.max_spread, marginal_cost_spread(cost, smp.u));
        res.trajectory.samples.push_back(std::move(smp));
    };

    for (std::size_t k = 0; k <= steps; ++k) {
        bool changed = false;
        for (std::size_t d = 0; d < sc.disturbances.size(); ++d) {
            if (at_step[d] != k) continue;
            p[idx(net.index_of(sc.disturbances[d].bus))] += sc.disturbances[d].delta_mw / net.base_mva();
            changed = true;
        }
        if (changed) {
            net = data.net.with_injections(p);
            make_consistent(net, spec, state, alg);
        }
        if (k % static_cast<std::size_t>(cfg.record_every) == 0 || k == steps) record(state);
        if (k == steps) break;
        try {
            state = step(net, spec, state, cfg);
        } catch (const NumericalError& e) {
            throw NumericalError(fmt::format("integration failed at t = {:.6f} s: {}", state.t, e.what()));
        }
        state.t = static_cast<double>(k + 1) * cfg.dt;
    }
    sum.steps = steps;
    sum.samples = res.trajectory.samples.size();

    const Sample& last = res.trajectory.samples.back();
    sum.metrics = frequency_metrics(res.trajectory, opt.settling_threshold);
    sum.final_spread = marginal_cost_spread(cost, last.u);
    sum.kkt = verify_kkt(final_problem, last.u, price_estimate(spec, cost, last.ctrl, last.u), 1e-5);
    sum.u_error = (last.u - optimum.u).cwiseAbs().maxCoeff();
    try {
        sum.dispatch_cost = cost.total_cost(last.u);
        sum.cost_gap = sum.dispatch_cost - sum.optimal_cost;
    } catch (const DomainError&) {
        sum.dispatch_cost = sum.cost_gap = nan_value;
    }

    if (opt.write_files) {
        if (!sc.csv.empty()) {
            ensure_parent(sc.csv);
            std::ofstream os(sc.csv, std::ios::binary);
            if (!os) throw ParseError(sc.csv.string() + ": cannot write trajectory");
            write_csv(res.trajectory, data.net, os);
        }
        if (!sc.summary.empty()) {
            ensure_parent(sc.summary);
            std::ofstream os(sc.summary, std::ios::binary);
            if (!os) throw ParseError(sc.summary.string() + ": cannot write summary");
            os << sum.to_text();
        }
    }
    return res;
}

std::vector<ComparisonRow> compare_controllers(const Scenario& sc, const std::vector<std::string>& names,
                                               const RunOptions& options) {
    std::vector<const Variant*> chosen;
    for (const std::string& name : names) {
        auto it = std::find_if(sc.variants.begin(), sc.variants.end(), [&](const Variant& v) { return v.name == name; });
        if (it == sc.variants.end()) throw ValidationError("scenario " + sc.id + " has no variant '" + name + "'");
        chosen.push_back(&*it);
    }
    if (names.empty()) {
        for (const Variant& v : sc.variants) chosen.push_back(&v);
    }
    if (chosen.empty()) throw ValidationError("scenario " + sc.id + " lists no variants to compare");

    std::vector<std::future<ComparisonRow>> jobs;
    for (const Variant* v : chosen) {
        jobs.push_back(std::async(std::launch::async, [&sc, v, options] {
            ComparisonRow row;
            row.variant = v->name;
            row.controller = v->controller.type;
            try {
                Scenario run = sc;
                run.controller = v->controller;
                run.csv = with_suffix(sc.csv, v->name);
                run.summary = with_suffix(sc.summary, v->name);
                RunOptions o = options;
                o.variant_name = v->name;
                row.summary = run_scenario(run, o).summary;
                row.ok = true;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            return row;
        }));
    }
    std::vector<ComparisonRow> rows;
    for (auto& j : jobs) rows.push_back(j.get());
    return rows;
}

std::string format_comparison(const std::vector<ComparisonRow>& rows) {
    std::string out = "variant,controller,status,nadir,settling_time,steady_state_error,final_spread,cost_gap\n";
    for (const ComparisonRow& r : rows) {
        if (!r.ok) {
            std::string err = r.error;
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            out += fmt::format("{},{},error: {},,,,,\n", r.variant, r.controller, err);
            continue;
        }
        const FrequencyMetrics& m = r.summary.metrics;
        out += fmt::format("{},{},ok,{},{},{},{},{}\n", r.variant, r.controller, num(m.nadir),
                           m.settling_time ? num(*m.settling_time) : std::string("none"), num(m.steady_state_error),
                           num(r.summary.final_spread), num(r.summary.cost_gap));
    }
    return out;
}

}  // namespace freqctl
