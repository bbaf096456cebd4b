#include "triphase/cli.hpp"

#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "triphase/errors.hpp"
#include "triphase/io.hpp"
#include "triphase/perphase.hpp"
#include "triphase/solver.hpp"

namespace triphase {

namespace {

constexpr int kExitDiffers = 1;
constexpr int kExitSingular = 2;
constexpr int kExitInvalid = 3;
constexpr int kExitUsage = 64;

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

void print_issues(const BalanceReport& report, std::ostream& os) {
    for (const BalanceIssue& issue : report.issues) {
        os << "  " << issue.element << ": " << issue.component << " (" << format_double(issue.magnitude) << ")\n";
    }
}

Solution solve_per_phase_path(const BalanceReport& report) {
    const BalancedSpec& spec = *report.spec;
    const PerPhaseModel model = build_per_phase(spec);
    const PerPhaseSolution pp = solve_per_phase(model, spec);
    return lift(pp, spec, true);
}

struct SolveArgs {
    std::string net;
    std::string out;
    std::string mode = "full";
    double tol = kDefaultBalanceTolerance;
};

int cmd_solve(const SolveArgs& args, std::ostream& out, std::ostream& err) {
    const Network network = io::load_network(args.net);

    io::SolutionMetadata meta;
    meta.requested_mode = args.mode;
    meta.balance_tolerance = args.tol;

    Solution solution;
    if (args.mode == "full") {
        meta.mode = "full";
        solution = solve(network);
    } else {
        BalanceReport report = check_balanced(network, args.tol);
        if (report.balanced() && !report.spec->zero_reference()) {
            report.issues.push_back({"network", "nonzero zero-sequence reference", 0.0});
            report.spec.reset();
        }
        meta.balanced = report.balanced();
        meta.balance_issues = report.issues;
        if (report.balanced()) {
            if (partition(network).voltage.empty()) {
                throw Error(ErrorCode::NoVoltageSource, "network has no voltage source to fix the reference");
            }
            meta.mode = "per-phase";
            solution = solve_per_phase_path(report);
        } else if (args.mode == "per-phase") {
            err << args.net << ": per-phase mode needs a balanced network with zero neutral references\n";
            print_issues(report, err);
            return kExitInvalid;
        } else {
            meta.mode = "full";
            solution = solve(network);
        }
    }

    for (const DeltaSourceResidual& r : solution.diagnostics.delta_source_kcl) {
        if (r.warning) {
            err << "warning: delta source at bus '" << r.bus << "' carries net current " << format_double(r.residual)
                << "\n";
        }
    }

    if (args.out.empty()) {
        out << io::solution_to_json(solution, meta);
    } else {
        io::save_solution(solution, meta, args.out);
    }
    return 0;
}

int cmd_check_balanced(const std::string& net, double tol, std::ostream& out) {
    const Network network = io::load_network(net);
    const BalanceReport report = check_balanced(network, tol);
    if (report.balanced()) {
        out << "balanced (tolerance " << format_double(tol) << ")";
        if (!report.spec->zero_reference()) out << "; nonzero zero-sequence reference";
        out << "\n";
        return 0;
    }
    out << "not balanced (tolerance " << format_double(tol) << "):\n";
    print_issues(report, out);
    return kExitDiffers;
}

int cmd_compare(const std::string& a, const std::string& b, double tol, std::ostream& out, std::ostream& err) {
    const io::SolutionFile fa = io::load_solution(a);
    const io::SolutionFile fb = io::load_solution(b);
    double diff = 0.0;
    try {
        diff = io::max_relative_difference(fa.solution, fb.solution);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return kExitDiffers;
    }
    out << "max relative difference " << format_double(diff) << " (tolerance " << format_double(tol) << ")\n";
    return diff <= tol ? 0 : kExitDiffers;
}

int cmd_delta2y(const std::string& net, const std::string& out_path, std::ostream& out) {
    const Network network = io::load_network(net);
    std::vector<Bus> buses = network.buses();
    std::size_t rewritten = 0;
    for (Bus& bus : buses) {
        if (configuration_of(bus.device) == Configuration::Delta && class_of(bus.device) != DeviceClass::Impedance) {
            bus.device = delta_to_y(bus.device);
            ++rewritten;
        }
    }
    io::save_network(Network(std::move(buses), network.lines()), out_path);
    out << "rewrote " << rewritten << " delta source(s)\n";
    return 0;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::SingularSystem:
        case ErrorCode::SingularReducedSystem:
        case ErrorCode::SingularImpedance: return kExitSingular;
        default: return kExitInvalid;
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Three-phase network analysis", "triphase"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    auto* solve_cmd = app.add_subcommand("solve", "Solve a network and write its solution");
    solve_cmd->add_option("net", solve_args.net, "network file")->required();
    solve_cmd->add_option("--out", solve_args.out, "solution file (default: stdout)");
    solve_cmd->add_option("--mode", solve_args.mode, "full, per-phase or auto")
        ->check(CLI::IsMember({"full", "per-phase", "auto"}));
    solve_cmd->add_option("--tol", solve_args.tol, "balance tolerance")->check(CLI::PositiveNumber);

    std::string balance_net;
    double balance_tol = kDefaultBalanceTolerance;
    auto* balance_cmd = app.add_subcommand("check-balanced", "Report whether a network is balanced");
    balance_cmd->add_option("net", balance_net, "network file")->required();
    balance_cmd->add_option("--tol", balance_tol, "relative tolerance")->check(CLI::PositiveNumber);

    std::string sol_a;
    std::string sol_b;
    double compare_tol = 1e-8;
    auto* compare_cmd = app.add_subcommand("compare", "Compare two solution files");
    compare_cmd->add_option("a", sol_a, "first solution")->required();
    compare_cmd->add_option("b", sol_b, "second solution")->required();
    compare_cmd->add_option("--tol", compare_tol, "relative tolerance")->check(CLI::NonNegativeNumber);

    std::string d2y_net;
    std::string d2y_out;
    auto* d2y_cmd = app.add_subcommand("delta2y", "Rewrite delta sources as wye equivalents");
    d2y_cmd->add_option("net", d2y_net, "network file")->required();
    d2y_cmd->add_option("--out", d2y_out, "output network file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << "run with --help for usage\n";
        return kExitUsage;
    }

    try {
        if (*solve_cmd) return cmd_solve(solve_args, out, err);
        if (*balance_cmd) return cmd_check_balanced(balance_net, balance_tol, out);
        if (*compare_cmd) return cmd_compare(sol_a, sol_b, compare_tol, out, err);
        return cmd_delta2y(d2y_net, d2y_out, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    }
}

}  // namespace triphase
