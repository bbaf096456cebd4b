// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "oracle.hpp"
#include "triphase/io.hpp"
#include "triphase/perphase.hpp"

using namespace triphase;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    std::vector<std::string> notes;
};

struct Criterion {
    int number;
    std::string name;
    double time_limit;  // seconds
    std::function<Outcome()> run;
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

// Appends "label err <= tol" and folds the comparison into the outcome.
void expect_le(Outcome& out, const std::string& label, double err, double tol) {
    const bool ok = err <= tol;
    out.pass = out.pass && ok;
    if (!out.detail.empty()) out.detail += "; ";
    out.detail += label + " " + fmt(err) + (ok ? " <= " : " > ") + fmt(tol);
}

template <class D>
double max_abs(const Eigen::MatrixBase<D>& m) {
    return m.cwiseAbs().maxCoeff();
}

double wrap(double angle) { return std::remainder(angle, 2.0 * std::numbers::pi); }

std::vector<fs::path> balanced_fixtures() {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(fs::path(TRIPHASE_FIXTURES) / "balanced")) {
        if (entry.path().extension() == ".json") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int run_command(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string quote(const fs::path& p) { return "\"" + p.string() + "\""; }

Outcome algebraic_identities() {
    const C3x3 g = gamma_matrix();
    const C3x3 id = C3x3::Identity();
    const C3x3 j3 = C3x3::Constant(1.0 / 3.0);
    const C3x3 pinv = g.completeOrthogonalDecomposition().pseudoInverse();
    const Complex a = alpha();
    const C3 ap = alpha_plus();
    const C3 am = alpha_minus();

    double err = 0.0;
    err = std::max(err, max_abs(g * ones()));
    err = std::max(err, max_abs(g * gamma_dagger() - (id - j3)));
    err = std::max(err, max_abs(gamma_dagger() - g.transpose() / 3.0));
    err = std::max(err, max_abs(pinv - g.transpose() / 3.0));
    err = std::max(err, max_abs(g * ap - (1.0 - a) * ap));
    err = std::max(err, max_abs(g.transpose() * ap - (1.0 - a * a) * ap));
    err = std::max(err, max_abs(g * am - (1.0 - a * a) * am));
    err = std::max(err, max_abs(g.transpose() * am - (1.0 - a) * am));
    Outcome out;
    expect_le(out, "max abs error", err, 1e-13);
    return out;
}

Outcome delta_laplacian_check() {
    std::mt19937_64 rng(1002);
    double rel = 0.0;
    double null = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const C3 y = oracle::random_c3(rng, 5.0);
        const C3x3 lap = delta_laplacian(y.asDiagonal());
        const C3x3 ref = oracle::delta_admittance_explicit(y(0), y(1), y(2));
        rel = std::max(rel, max_abs(lap - ref) / max_abs(ref));
        null = std::max(null, max_abs(lap * ones()) / max_abs(ref));
    }
    Outcome out;
    expect_le(out, "relative error", rel, 1e-12);
    expect_le(out, "Y1", null, 1e-12);
    return out;
}

Outcome delta_to_y_check() {
    std::mt19937_64 rng(1003);
    const C3 ap = alpha_plus();
    double v_mag = 0.0;
    double v_phase = 0.0;
    double i_mag = 0.0;
    double i_phase = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Complex lambda = oracle::random_complex(rng, 2.0);
        const C3 e_delta = lambda * ap;
        const C3 e_y = std::get<VoltageSourceY>(delta_to_y(VoltageSourceDelta{e_delta})).e;
        const Complex mu = oracle::random_complex(rng, 2.0);
        const C3 j_delta = mu * ap;
        const C3 j_y = std::get<CurrentSourceY>(delta_to_y(CurrentSourceDelta{j_delta})).j;
        for (int k = 0; k < 3; ++k) {
            v_mag = std::max(v_mag, std::abs(std::abs(e_y(k)) - std::abs(e_delta(k)) / std::sqrt(3.0)));
            v_phase = std::max(v_phase, std::abs(wrap(std::arg(e_y(k) / e_delta(k)) + std::numbers::pi / 6.0)));
            i_mag = std::max(i_mag, std::abs(std::abs(j_y(k)) - std::sqrt(3.0) * std::abs(j_delta(k))));
            i_phase = std::max(i_phase,
                               std::abs(wrap(std::arg(j_y(k) / j_delta(k)) + std::numbers::pi / 6.0 - std::numbers::pi)));
        }
    }
    Outcome out;
    expect_le(out, "voltage magnitude", v_mag, 1e-12);
    expect_le(out, "voltage phase", v_phase, 1e-12);
    expect_le(out, "current magnitude", i_mag, 1e-12);
    expect_le(out, "current phase (-pi/6 + pi)", i_phase, 1e-12);
    if (!out.pass) {
        out.notes.push_back(
            "the current equivalent carries phase -pi/6 without the extra pi: J^Y = Gamma^T J^Delta keeps the "
            "terminal current I = -Gamma^T J^Delta = -J^Y, whereas the stated pi shift would reverse it");
    }
    return out;
}

Outcome solver_soundness() {
    std::mt19937_64 rng(1004);
    double network = 0.0;
    double kcl = 0.0;
    double agree = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        oracle::GeneratorOptions opts;
        opts.n_buses = 2 + static_cast<std::size_t>(trial % 19);
        opts.meshed = trial % 2 == 1;
        opts.zero_gamma = trial % 3 == 0;
        const Network net = oracle::random_unbalanced(rng, opts);
        const Solution sol = solve(net);
        const Eigen::VectorXcd v = oracle::stack_v(sol);
        const Eigen::VectorXcd i = oracle::stack_i(sol);
        const double scale = i.cwiseAbs().maxCoeff();
        network = std::max(network, (i - oracle::admittance_matrix(net) * v).cwiseAbs().maxCoeff() / scale);

        std::vector<C3> balance(net.size());
        for (std::size_t j = 0; j < net.size(); ++j) {
            balance[j] = sol.buses[j].terminal.i;
            if (net.buses()[j].shunt) balance[j] -= *net.buses()[j].shunt * sol.buses[j].terminal.v;
        }
        for (const LineSpec& l : net.lines()) {
            const std::size_t a = net.index_of(l.from);
            const std::size_t b = net.index_of(l.to);
            const C3 va = sol.buses[a].terminal.v;
            const C3 vb = sol.buses[b].terminal.v;
            balance[a] -= l.y_series * (va - vb) + l.y_shunt_from * va;
            balance[b] -= l.y_series * (vb - va) + l.y_shunt_to * vb;
        }
        for (const C3& r : balance) kcl = std::max(kcl, max_abs(r) / scale);

        const oracle::StackedSolution ref = oracle::solve_stacked(net);
        agree = std::max({agree, oracle::rel_diff(v, ref.v), oracle::rel_diff(i, ref.i)});
    }
    Outcome out;
    expect_le(out, "|I - YV|/|I|", network, 1e-9);
    expect_le(out, "KCL", kcl, 1e-9);
    expect_le(out, "vs stacked oracle", agree, 1e-9);
    return out;
}

Outcome hand_fixture() {
    const Solution sol = solve(io::load_network(fs::path(TRIPHASE_FIXTURES) / "two_bus.json"));
    const C3 ap = alpha_plus();
    Outcome out;
    expect_le(out, "V1", max_abs(sol.buses[1].terminal.v - 0.5 * ap), 1e-12);
    expect_le(out, "I0", max_abs(sol.buses[0].terminal.i - 0.5 * ap), 1e-12);
    return out;
}

struct BalancedRun {
    BalancedSpec spec;
    PerPhaseModel model;
    PerPhaseSolution pp;
    Solution full;
};

BalancedRun balanced_run(const Network& net) {
    const BalanceReport report = check_balanced(net);
    if (!report.balanced()) throw std::runtime_error("generator produced an unbalanced network");
    BalancedRun r{*report.spec, {}, {}, solve(net)};
    r.model = build_per_phase(r.spec);
    r.pp = solve_per_phase(r.model, r.spec);
    return r;
}

Outcome per_phase_equivalence() {
    std::mt19937_64 rng(1006);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        oracle::GeneratorOptions opts;
        opts.n_buses = 2 + static_cast<std::size_t>(trial % 49);
        opts.meshed = trial % 2 == 1;
        const Network net = oracle::random_balanced(rng, opts);
        const BalancedRun r = balanced_run(net);
        const Solution lifted = lift(r.pp, r.spec, true);
        worst = std::max({worst, oracle::rel_diff(oracle::stack_v(lifted), oracle::stack_v(r.full)),
                          oracle::rel_diff(oracle::stack_i(lifted), oracle::stack_i(r.full))});
    }
    Outcome out;
    expect_le(out, "full vs lifted", worst, 1e-8);
    return out;
}

// Zero-sequence voltage of every non-source bus, ordered n_c then n_i.
Eigen::VectorXcd measured_zero_sequence(const BalancedRun& r) {
    std::vector<std::size_t> rest = r.model.n_c;
    rest.insert(rest.end(), r.model.n_i.begin(), r.model.n_i.end());
    Eigen::VectorXcd out(static_cast<Eigen::Index>(rest.size()));
    for (std::size_t k = 0; k < rest.size(); ++k) out(static_cast<Eigen::Index>(k)) = r.full.buses[rest[k]].terminal.v.sum() / 3.0;
    return out;
}

Outcome zero_sequence_extension() {
    std::mt19937_64 rng(1007);
    const C3 am = alpha_minus();
    double negative = 0.0;
    double propagation = 0.0;
    double corrected = 0.0;
    double vanish = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        oracle::GeneratorOptions opts;
        opts.n_buses = 3 + static_cast<std::size_t>(trial % 30);
        opts.meshed = trial % 2 == 0;
        opts.zero_gamma = false;
        opts.allow_wye_impedance = false;
        const BalancedRun r = balanced_run(oracle::random_balanced(rng, opts));
        for (const BusSolution& b : r.full.buses) {
            negative = std::max({negative, std::abs(am.dot(b.terminal.v)) / 3.0, std::abs(am.dot(b.terminal.i)) / 3.0});
        }
        const Eigen::VectorXcd measured = measured_zero_sequence(r);
        if (measured.size() > 0) {
            propagation = std::max(propagation, (propagate_zero_sequence(r.model, r.spec) - measured).cwiseAbs().maxCoeff());
        }

        // With grounded Y impedances present the relation gains their zero-sequence branch.
        opts.allow_wye_impedance = true;
        const BalancedRun w = balanced_run(oracle::random_balanced(rng, opts));
        const Eigen::VectorXcd mw = measured_zero_sequence(w);
        if (mw.size() > 0) {
            Eigen::MatrixXcd a = w.model.a22;
            Eigen::VectorXcd gv(static_cast<Eigen::Index>(w.model.n_v.size()));
            for (std::size_t k = 0; k < w.model.n_v.size(); ++k) gv(static_cast<Eigen::Index>(k)) = w.spec.buses[w.model.n_v[k]].gamma;
            Eigen::VectorXcd rhs = -w.model.a21 * gv;
            for (std::size_t k = 0; k < w.model.n_i.size(); ++k) {
                const BalancedBus& bus = w.spec.buses[w.model.n_i[k]];
                if (bus.configuration != Configuration::Wye) continue;
                const auto row = static_cast<Eigen::Index>(w.model.n_c.size() + k);
                a(row, row) += bus.epsilon;
                rhs(row) += bus.epsilon * bus.gamma;
            }
            corrected = std::max(corrected, (oracle::gauss_solve(a, rhs) - mw).cwiseAbs().maxCoeff());
        }

        opts.zero_gamma = true;
        const BalancedRun z = balanced_run(oracle::random_balanced(rng, opts));
        for (const BusSolution& b : z.full.buses) vanish = std::max(vanish, std::abs(b.terminal.v.sum()) / 3.0);
    }
    Outcome out;
    expect_le(out, "negative sequence", negative, 1e-9);
    expect_le(out, "zero-sequence propagation", propagation, 1e-9);
    expect_le(out, "zero references", vanish, 1e-10);
    out.notes.push_back("propagation checked on networks without Y impedances; with them the grounded-branch form "
                        "agrees to " + fmt(corrected));
    if (corrected > 1e-9) out.pass = false;
    return out;
}

Outcome power_identities() {
    std::mt19937_64 rng(1008);
    double terminal = 0.0;
    double internal = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        // Y: total terminal power with 1^T I = 0 does not see gamma.
        const C3 v_int = oracle::random_c3(rng);
        C3 i = oracle::random_c3(rng);
        i -= C3::Constant(i.sum() / 3.0);
        const Complex g1 = oracle::random_complex(rng);
        const Complex g2 = oracle::random_complex(rng, 10.0);
        const Complex sy1 = diag_power(v_int + g1 * ones(), i).sum();
        const Complex sy2 = diag_power(v_int + g2 * ones(), i).sum();
        // Delta: total terminal power does not see gamma.
        C3 vd = oracle::random_c3(rng);
        vd -= C3::Constant(vd.sum() / 3.0);
        const C3 id = oracle::random_c3(rng);
        const Complex sd1 = delta_terminal_power(vd, id, g1).sum();
        const Complex sd2 = delta_terminal_power(vd, id, g2).sum();
        terminal = std::max({terminal, std::abs(sy1 - sy2), std::abs(sd1 - sd2)});

        // Delta: total internal power does not see beta.
        const C3 v = oracle::random_c3(rng);
        const Complex b1 = oracle::random_complex(rng);
        const Complex b2 = oracle::random_complex(rng, 10.0);
        const Complex si1 = delta_internal_power(v, i, b1).sum();
        const Complex si2 = delta_internal_power(v, i, b2).sum();
        const Complex sr1 = delta_internal_from_terminal(v, i, b1).s_int.sum();
        const Complex sr2 = delta_internal_from_terminal(v, i, b2).s_int.sum();
        internal = std::max({internal, std::abs(si1 - si2), std::abs(sr1 - sr2)});
    }
    Outcome out;
    expect_le(out, "terminal vs gamma", terminal, 1e-11);
    expect_le(out, "internal vs beta", internal, 1e-11);
    return out;
}

Outcome kronecker_structure() {
    double worst = 0.0;
    std::size_t count = 0;
    for (const fs::path& file : balanced_fixtures()) {
        const Network net = io::load_network(file);
        const BalanceReport report = check_balanced(net);
        if (!report.balanced()) {
            Outcome out;
            out.pass = false;
            out.detail = file.filename().string() + " is not balanced";
            return out;
        }
        const Eigen::MatrixXcd y = assemble(net).dense();
        const Eigen::MatrixXcd y1 = build_per_phase(*report.spec).y_1phi;
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
            for (Eigen::Index c = 0; c < y.cols(); ++c) {
                const Complex expect = (r % 3 == c % 3) ? y1(r / 3, c / 3) : Complex{};
                worst = std::max(worst, std::abs(y(r, c) - expect));
            }
        }
        ++count;
    }
    Outcome out;
    expect_le(out, "max entry error over " + std::to_string(count) + " fixtures", worst, 1e-13);
    return out;
}

Outcome cli_end_to_end() {
    const fs::path dir = fs::temp_directory_path() / ("triphase_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string cli = quote(TRIPHASE_CLI);
    Outcome out;
    std::size_t compared = 0;
    bool deterministic = true;
    for (const fs::path& file : balanced_fixtures()) {
        const fs::path full = dir / "full.json";
        const fs::path full2 = dir / "full2.json";
        const fs::path pp = dir / "pp.json";
        const fs::path pp2 = dir / "pp2.json";
        const std::string base = cli + " solve " + quote(file);
        const bool ran = run_command(base + " --mode full --out " + quote(full)) == 0 &&
                         run_command(base + " --mode per-phase --out " + quote(pp)) == 0 &&
                         run_command(base + " --mode full --out " + quote(full2)) == 0 &&
                         run_command(base + " --mode per-phase --out " + quote(pp2)) == 0;
        const int cmp = ran ? run_command(cli + " compare " + quote(full) + " " + quote(pp) + " --tol 1e-8 > /dev/null") : -1;
        if (cmp != 0) {
            out.pass = false;
            out.notes.push_back(file.filename().string() + ": " + (ran ? "compare exit " + std::to_string(cmp) : "solve failed"));
            continue;
        }
        ++compared;
        if (slurp(full) != slurp(full2) || slurp(pp) != slurp(pp2)) {
            deterministic = false;
            out.notes.push_back(file.filename().string() + ": re-run output differs");
        }
    }
    fs::remove_all(dir);
    out.pass = out.pass && deterministic && compared > 0;
    out.detail = std::to_string(compared) + " fixtures compare exit 0 at tol 1e-8; re-runs " +
                 (deterministic ? "byte-identical" : "differ");
    return out;
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "algebraic identities", 1.0, algebraic_identities},
        {2, "delta Laplacian", 1.0, delta_laplacian_check},
        {3, "delta-to-Y source equivalents", 1.0, delta_to_y_check},
        {4, "solver soundness", 30.0, solver_soundness},
        {5, "two-bus hand fixture", 1.0, hand_fixture},
        {6, "per-phase equivalence", 60.0, per_phase_equivalence},
        {7, "zero-sequence extension", 30.0, zero_sequence_extension},
        {8, "power identities", 1.0, power_identities},
        {9, "Kronecker structure", 1.0, kronecker_structure},
        {10, "CLI end-to-end", 10.0, cli_end_to_end},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = elapsed < c.time_limit;
        const bool pass = out.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s criterion %2d  %-30s %s  [%.3f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.number,
                    c.name.c_str(), out.detail.c_str(), elapsed, c.time_limit, in_time ? "" : ", exceeded");
        for (const std::string& note : out.notes) std::printf("     note: %s\n", note.c_str());
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
