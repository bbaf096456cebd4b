#include "triphase/solver.hpp"

#include <sstream>

#include "triphase/errors.hpp"

namespace triphase {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr double kSingularRcond = 1e-10;

// Delta recovery without the KCL precondition; a Delta voltage source may see
// sum(I) != 0 at the solution and is reported through the diagnostics instead.
InternalState delta_internal_unchecked(const C3& v, const C3& i, Complex beta) {
    InternalState out;
    out.v_int = gamma_matrix() * v;
    out.i_int = -gamma_t_dagger() * i + beta * ones();
    out.s_int = diag_power(out.v_int, out.i_int);
    out.gamma = v.sum() / 3.0;
    out.beta = beta;
    return out;
}

double inf_norm(const Eigen::VectorXcd& x) { return x.size() == 0 ? 0.0 : x.cwiseAbs().maxCoeff(); }

}  // namespace

BusPartition partition(const Network& network) {
    BusPartition p;
    for (std::size_t j = 0; j < network.size(); ++j) {
        switch (class_of(network.buses()[j].device)) {
            case DeviceClass::VoltageSource: p.voltage.push_back(j); break;
            case DeviceClass::CurrentSource: p.current.push_back(j); break;
            case DeviceClass::Impedance: p.impedance.push_back(j); break;
        }
    }
    return p;
}

InternalState recover_internal(const DeviceSpec& device, const C3& v, const C3& i) {
    return std::visit(overloaded{
                          [&](const VoltageSourceY& d) { return y_internal_from_terminal(v, i, d.gamma); },
                          [&](const CurrentSourceY& d) { return y_internal_from_terminal(v, i, d.gamma); },
                          [&](const ImpedanceY& d) { return y_internal_from_terminal(v, i, d.gamma); },
                          [&](const VoltageSourceDelta& d) {
                              InternalState out = delta_internal_unchecked(v, i, d.beta);
                              out.gamma = d.gamma;
                              return out;
                          },
                          [&](const CurrentSourceDelta& d) {
                              InternalState out;
                              out.v_int = gamma_matrix() * v;
                              out.i_int = d.j;
                              out.s_int = diag_power(out.v_int, out.i_int);
                              out.gamma = v.sum() / 3.0;
                              out.beta = d.j.sum() / 3.0;
                              return out;
                          },
                          [&](const ImpedanceDelta& d) { return delta_internal_unchecked(v, i, d.beta); },
                      },
                      device);
}

void compute_line_flows(const Network& network, Solution& solution) {
    solution.lines.clear();
    const auto& lines = network.lines();
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto [j, k] = network.line_endpoints()[l];
        const C3& vj = solution.buses[j].terminal.v;
        const C3& vk = solution.buses[k].terminal.v;
        const auto [ijk, ikj] = line_flow(lines[l], vj, vk);
        solution.lines.push_back(LineSolution{lines[l].from, lines[l].to, ijk, ikj, line_power_matrix(vj, ijk),
                                              line_power_matrix(vk, ikj)});
    }
}

Solution solve(const Network& network) {
    const std::size_t n = network.size();
    const BusPartition part = partition(network);
    if (part.voltage.empty()) {
        throw Error(ErrorCode::NoVoltageSource, "network has no voltage source to fix the reference");
    }

    std::vector<ExternalRelation> relations;
    relations.reserve(n);
    for (const Bus& bus : network.buses()) relations.push_back(external_model(bus.device));

    const BlockAdmittance y = assemble(network);

    // Unknown voltages: current-source buses first, then impedance buses.
    std::vector<std::size_t> unknown = part.current;
    unknown.insert(unknown.end(), part.impedance.begin(), part.impedance.end());
    const auto m = static_cast<Eigen::Index>(unknown.size());
    std::vector<Eigen::Index> slot(n, -1);
    for (Eigen::Index r = 0; r < m; ++r) slot[unknown[r]] = r;

    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(3 * n);
    for (std::size_t j : part.voltage) v.segment<3>(3 * j) = std::get<FixedVoltage>(relations[j]).v;

    if (m > 0) {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(3 * m, 3 * m);
        Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(3 * m);
        for (const auto& [key, block] : y.blocks) {
            const Eigen::Index row = slot[key.first];
            if (row < 0) continue;
            const Eigen::Index col = slot[key.second];
            if (col >= 0) {
                a.block<3, 3>(3 * row, 3 * col) += block;
            } else {
                rhs.segment<3>(3 * row) -= block * v.segment<3>(3 * key.second);
            }
        }
        for (Eigen::Index r = 0; r < m; ++r) {
            const ExternalRelation& rel = relations[unknown[r]];
            if (const auto* fc = std::get_if<FixedCurrent>(&rel)) {
                rhs.segment<3>(3 * r) += fc->i;
            } else {
                const auto& adm = std::get<Admittance>(rel);
                a.block<3, 3>(3 * r, 3 * r) += adm.y_eff;
                rhs.segment<3>(3 * r) += adm.i_offset;
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
        const double rcond = lu.rcond();
        if (!(rcond >= kSingularRcond)) {
            std::ostringstream msg;
            msg << "reduced network matrix is singular (reciprocal condition " << rcond
                << "); check for floating islands of impedances";
            throw Error(ErrorCode::SingularSystem, msg.str());
        }
        const Eigen::VectorXcd x = lu.solve(rhs);
        for (Eigen::Index r = 0; r < m; ++r) v.segment<3>(3 * unknown[r]) = x.segment<3>(3 * r);
    }

    Eigen::VectorXcd current = y.apply(v);
    for (std::size_t j : part.current) current.segment<3>(3 * j) = std::get<FixedCurrent>(relations[j]).i;

    Solution sol;
    sol.buses.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Bus& bus = network.buses()[j];
        BusSolution bs;
        bs.id = bus.id;
        bs.terminal.v = v.segment<3>(3 * j);
        bs.terminal.i = current.segment<3>(3 * j);
        bs.terminal.s = diag_power(bs.terminal.v, bs.terminal.i);
        bs.internal = recover_internal(bus.device, bs.terminal.v, bs.terminal.i);
        sol.buses.push_back(std::move(bs));
    }
    compute_line_flows(network, sol);
    sol.diagnostics = residuals(network, sol);
    return sol;
}

DiagnosticReport residuals(const Network& network, const Solution& solution) {
    const std::size_t n = network.size();
    if (solution.buses.size() != n || solution.lines.size() != network.lines().size()) {
        std::ostringstream msg;
        msg << "solution has " << solution.buses.size() << " buses and " << solution.lines.size()
            << " lines, network has " << n << " and " << network.lines().size();
        throw Error(ErrorCode::ShapeMismatch, msg.str());
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (solution.buses[j].id != network.buses()[j].id) {
            throw Error(ErrorCode::ShapeMismatch, "bus order differs at position " + std::to_string(j));
        }
    }

    Eigen::VectorXcd v(3 * n);
    Eigen::VectorXcd i(3 * n);
    for (std::size_t j = 0; j < n; ++j) {
        v.segment<3>(3 * j) = solution.buses[j].terminal.v;
        i.segment<3>(3 * j) = solution.buses[j].terminal.i;
    }

    DiagnosticReport report;
    const BlockAdmittance y = assemble(network);
    report.network_residual = inf_norm(i - y.apply(v));
    report.current_scale = inf_norm(i);
    report.voltage_scale = inf_norm(v);

    // KCL from line flows recomputed off the stored voltages.
    std::vector<C3> outflow(n, C3::Zero());
    const auto& lines = network.lines();
    Complex losses{};
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto [j, k] = network.line_endpoints()[l];
        const auto [ijk, ikj] = line_flow(lines[l], v.segment<3>(3 * j), v.segment<3>(3 * k));
        outflow[j] += ijk;
        outflow[k] += ikj;
        losses += diag_power(v.segment<3>(3 * j), ijk).sum() + diag_power(v.segment<3>(3 * k), ikj).sum();
    }
    report.kcl_residuals.resize(n);
    Complex injection{};
    for (std::size_t j = 0; j < n; ++j) {
        const Bus& bus = network.buses()[j];
        const C3 vj = v.segment<3>(3 * j);
        const C3 ij = i.segment<3>(3 * j);
        C3 net = ij - outflow[j];
        if (bus.shunt) {
            const C3 shunt_current = *bus.shunt * vj;
            net -= shunt_current;
            losses += diag_power(vj, shunt_current).sum();
        }
        report.kcl_residuals[j] = net.cwiseAbs().maxCoeff();
        report.max_kcl_residual = std::max(report.max_kcl_residual, report.kcl_residuals[j]);
        injection += diag_power(vj, ij).sum();

        if (std::holds_alternative<VoltageSourceDelta>(bus.device)) {
            const double r = std::abs(ij.sum());
            report.delta_source_kcl.push_back({bus.id, r, r > 1e-9 * std::max(1.0, report.current_scale)});
        }
    }
    report.total_injection = injection;
    report.total_losses = losses;
    report.power_mismatch = std::abs(injection - losses);
    return report;
}

}  // namespace triphase
