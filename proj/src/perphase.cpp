#include "triphase/perphase.hpp"

#include <cmath>
#include <sstream>

#include "triphase/errors.hpp"

namespace triphase {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr double kSingularRcond = 1e-10;

// Relative distance of a 3x3 block from the nearest scalar multiple of the identity.
double scalar_deviation(const C3x3& block, Complex& scalar) {
    scalar = block.trace() / 3.0;
    const double scale = std::max(std::abs(scalar), block.norm() / std::sqrt(3.0));
    if (scale == 0.0) return 0.0;
    return (block - scalar * C3x3::Identity()).norm() / scale;
}

struct SourceBalance {
    Complex positive;
    double negative_content = 0.0;
    double zero_content = 0.0;
};

SourceBalance source_balance(const C3& x) {
    const SequenceComponents seq = sequence_components(x);
    const double scale = std::max({std::abs(seq.zero), std::abs(seq.positive), std::abs(seq.negative)});
    SourceBalance out{seq.positive};
    if (scale > 0.0) {
        out.negative_content = std::abs(seq.negative) / scale;
        out.zero_content = std::abs(seq.zero) / scale;
    }
    return out;
}

Eigen::MatrixXcd submatrix(const Eigen::MatrixXcd& m, const std::vector<std::size_t>& rows,
                           const std::vector<std::size_t>& cols) {
    Eigen::MatrixXcd out(rows.size(), cols.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                m(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
        }
    }
    return out;
}

std::vector<std::size_t> concat(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

}  // namespace

bool BalancedSpec::zero_reference() const {
    for (const BalancedBus& bus : buses) {
        const bool needs_zero = bus.configuration == Configuration::Wye ||
                                bus.device_class == DeviceClass::VoltageSource;
        if (needs_zero && bus.gamma != Complex{}) return false;
    }
    return true;
}

Complex hat_alpha(DeviceClass device_class, Configuration configuration) {
    if (configuration == Configuration::Wye) return 1.0;
    const Complex a = alpha();
    switch (device_class) {
        case DeviceClass::VoltageSource: return (1.0 - a * a) / 3.0;
        case DeviceClass::CurrentSource: return 1.0 - a * a;
        case DeviceClass::Impedance: return 3.0;
    }
    return 1.0;
}

BalanceReport check_balanced(const Network& network, double tol) {
    BalanceReport report;
    report.tolerance = tol;
    BalancedSpec spec;

    auto flag = [&](const std::string& element, const std::string& component, double magnitude) {
        if (magnitude > tol) report.issues.push_back({element, component, magnitude});
    };

    for (const Bus& bus : network.buses()) {
        const std::string element = "bus '" + bus.id + "'";
        BalancedBus b;
        b.id = bus.id;
        b.device_class = class_of(bus.device);
        b.configuration = configuration_of(bus.device);
        b.hat_alpha = hat_alpha(b.device_class, b.configuration);

        auto check_source = [&](const C3& x, const char* what) {
            const SourceBalance sb = source_balance(x);
            flag(element, std::string(what) + " negative-sequence content", sb.negative_content);
            flag(element, std::string(what) + " zero-sequence content", sb.zero_content);
            return sb.positive;
        };
        auto check_impedance = [&](const C3x3& z) {
            Complex zeta;
            flag(element, "impedance off-scalar part", scalar_deviation(z, zeta));
            return zeta == Complex{} ? Complex{} : 1.0 / zeta;
        };

        std::visit(overloaded{
                       [&](const VoltageSourceY& d) {
                           b.lambda = check_source(d.e, "source voltage");
                           b.gamma = d.gamma;
                       },
                       [&](const VoltageSourceDelta& d) {
                           b.lambda = check_source(d.e, "source voltage");
                           b.gamma = d.gamma;
                           b.beta = d.beta;
                       },
                       [&](const CurrentSourceY& d) {
                           b.mu = check_source(d.j, "source current");
                           b.gamma = d.gamma;
                       },
                       [&](const CurrentSourceDelta& d) {
                           b.mu = check_source(d.j, "source current");
                           b.beta = d.j.sum() / 3.0;
                       },
                       [&](const ImpedanceY& d) {
                           b.epsilon = check_impedance(d.z);
                           b.gamma = d.gamma;
                       },
                       [&](const ImpedanceDelta& d) {
                           b.epsilon = check_impedance(d.z);
                           b.beta = d.beta;
                       },
                   },
                   bus.device);
        if (bus.shunt) {
            flag(element, "shunt off-scalar part", scalar_deviation(*bus.shunt, b.shunt));
        }
        spec.buses.push_back(std::move(b));
    }

    const auto& lines = network.lines();
    for (std::size_t l = 0; l < lines.size(); ++l) {
        const LineSpec& line = lines[l];
        const std::string element = "line " + line.from + "-" + line.to;
        BalancedLine bl;
        std::tie(bl.from, bl.to) = network.line_endpoints()[l];
        flag(element, "series block off-scalar part", scalar_deviation(line.y_series, bl.eta_series));
        flag(element, "from-end shunt off-scalar part", scalar_deviation(line.y_shunt_from, bl.eta_shunt_from));
        flag(element, "to-end shunt off-scalar part", scalar_deviation(line.y_shunt_to, bl.eta_shunt_to));
        spec.lines.push_back(bl);
    }

    if (report.issues.empty()) {
        spec.network = std::make_shared<const Network>(network);
        report.spec = std::move(spec);
    }
    return report;
}

PerPhaseModel build_per_phase(const BalancedSpec& spec) {
    const auto n = static_cast<Eigen::Index>(spec.buses.size());
    PerPhaseModel model;
    model.y_1phi = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) model.y_1phi(j, j) = spec.buses[j].shunt;
    for (const BalancedLine& line : spec.lines) {
        const auto j = static_cast<Eigen::Index>(line.from);
        const auto k = static_cast<Eigen::Index>(line.to);
        model.y_1phi(j, j) += line.eta_series + line.eta_shunt_from;
        model.y_1phi(k, k) += line.eta_series + line.eta_shunt_to;
        model.y_1phi(j, k) -= line.eta_series;
        model.y_1phi(k, j) -= line.eta_series;
    }

    for (std::size_t j = 0; j < spec.buses.size(); ++j) {
        switch (spec.buses[j].device_class) {
            case DeviceClass::VoltageSource: model.n_v.push_back(j); break;
            case DeviceClass::CurrentSource: model.n_c.push_back(j); break;
            case DeviceClass::Impedance: model.n_i.push_back(j); break;
        }
    }
    const std::vector<std::size_t> rest = concat(model.n_c, model.n_i);
    model.order = concat(model.n_v, rest);

    model.a11 = submatrix(model.y_1phi, model.n_v, model.n_v);
    model.a21 = submatrix(model.y_1phi, rest, model.n_v);
    model.a22 = submatrix(model.y_1phi, rest, rest);

    model.y_i_diag.resize(static_cast<Eigen::Index>(model.n_i.size()));
    for (std::size_t r = 0; r < model.n_i.size(); ++r) {
        const BalancedBus& bus = spec.buses[model.n_i[r]];
        model.y_i_diag(static_cast<Eigen::Index>(r)) = bus.hat_alpha * bus.epsilon;
    }
    model.a22_prime = model.a22;
    const auto offset = static_cast<Eigen::Index>(model.n_c.size());
    for (Eigen::Index r = 0; r < model.y_i_diag.size(); ++r) {
        model.a22_prime(offset + r, offset + r) += model.y_i_diag(r);
    }

    model.y_minus_c = submatrix(model.y_1phi, concat(model.n_v, model.n_i), model.order);
    return model;
}

PerPhaseSolution solve_per_phase(const PerPhaseModel& model, const BalancedSpec& spec) {
    const auto n = static_cast<Eigen::Index>(spec.buses.size());
    const auto nv = static_cast<Eigen::Index>(model.n_v.size());
    const auto nc = static_cast<Eigen::Index>(model.n_c.size());
    const Eigen::Index rest = n - nv;

    Eigen::VectorXcd v_v(nv);
    for (Eigen::Index r = 0; r < nv; ++r) {
        const BalancedBus& bus = spec.buses[model.n_v[r]];
        v_v(r) = bus.hat_alpha * bus.lambda;
    }
    Eigen::VectorXcd i_c(nc);
    for (Eigen::Index r = 0; r < nc; ++r) {
        const BalancedBus& bus = spec.buses[model.n_c[r]];
        i_c(r) = -bus.hat_alpha * bus.mu;
    }

    // Ordered voltage vector (n_v, n_c, n_i).
    Eigen::VectorXcd v_ordered(n);
    v_ordered.head(nv) = v_v;
    if (rest > 0) {
        Eigen::VectorXcd b = Eigen::VectorXcd::Zero(rest);
        b.head(nc) = i_c;
        b -= model.a21 * v_v;
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu(model.a22_prime);
        const double rcond = lu.rcond();
        if (!(rcond >= kSingularRcond)) {
            std::ostringstream msg;
            msg << "per-phase reduced matrix A22' is singular (reciprocal condition " << rcond << ")";
            throw Error(ErrorCode::SingularReducedSystem, msg.str());
        }
        v_ordered.tail(rest) = lu.solve(b);
    }
    const Eigen::VectorXcd i_minus_c = model.y_minus_c * v_ordered;

    PerPhaseSolution out;
    out.v.resize(n);
    out.i.resize(n);
    for (Eigen::Index r = 0; r < n; ++r) out.v(static_cast<Eigen::Index>(model.order[r])) = v_ordered(r);
    for (Eigen::Index r = 0; r < nc; ++r) out.i(static_cast<Eigen::Index>(model.n_c[r])) = i_c(r);
    for (Eigen::Index r = 0; r < nv; ++r) out.i(static_cast<Eigen::Index>(model.n_v[r])) = i_minus_c(r);
    for (std::size_t r = 0; r < model.n_i.size(); ++r) {
        out.i(static_cast<Eigen::Index>(model.n_i[r])) = i_minus_c(nv + static_cast<Eigen::Index>(r));
    }
    out.residual = n == 0 ? 0.0 : (out.i - model.y_1phi * out.v).cwiseAbs().maxCoeff();
    return out;
}

Solution lift(const PerPhaseSolution& pp, const BalancedSpec& spec, bool assume_zero_reference) {
    const std::size_t n = spec.buses.size();
    if (!assume_zero_reference && !pp.zero_seq) {
        throw Error(ErrorCode::MissingZeroSequence,
                    "lift without the zero-reference assumption needs the zero-sequence components");
    }
    if (pp.zero_seq && (pp.zero_seq->gamma_tilde.size() != n || pp.zero_seq->beta_tilde.size() != n)) {
        throw Error(ErrorCode::ShapeMismatch, "zero-sequence vectors do not match the bus count");
    }
    const Complex a = alpha();
    const C3 ap = alpha_plus();
    const C3 am = alpha_minus();
    const C3 one = ones();

    Solution sol;
    sol.buses.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const BalancedBus& bus = spec.buses[j];
        const Complex v = pp.v(static_cast<Eigen::Index>(j));
        const Complex i = pp.i(static_cast<Eigen::Index>(j));
        Complex g{};  // zero-sequence voltage
        Complex b{};  // zero-sequence current
        if (!assume_zero_reference) {
            g = pp.zero_seq->gamma_tilde[j];
            b = pp.zero_seq->beta_tilde[j];
        }

        BusSolution bs;
        bs.id = bus.id;
        bs.terminal.v = v * ap + g * one;
        bs.terminal.i = i * ap + b * one;
        bs.terminal.s = diag_power(bs.terminal.v, bs.terminal.i);

        InternalState& in = bs.internal;
        if (bus.configuration == Configuration::Wye) {
            const Complex d = bus.gamma - g;
            in.v_int = v * ap - d * one;
            in.i_int = -i * ap - b * one;
            in.s_int = -(v * std::conj(i) - d * std::conj(b)) * one - v * std::conj(b) * ap + d * std::conj(i) * am;
            in.gamma = bus.gamma;
        } else {
            const Complex beta = bus.beta.value_or(Complex{});
            in.v_int = (1.0 - a) * v * ap;
            in.i_int = -(1.0 - a) * i / 3.0 * ap + beta * one;
            in.s_int = -v * std::conj(i) * one + (1.0 - a) * v * std::conj(beta) * ap;
            in.gamma = bus.device_class == DeviceClass::VoltageSource ? bus.gamma : g;
            in.beta = beta;
        }
        sol.buses.push_back(std::move(bs));
    }

    for (const BalancedLine& line : spec.lines) {
        const C3& vj = sol.buses[line.from].terminal.v;
        const C3& vk = sol.buses[line.to].terminal.v;
        LineSolution ls;
        ls.from = spec.buses[line.from].id;
        ls.to = spec.buses[line.to].id;
        ls.i_from_to = line.eta_series * (vj - vk) + line.eta_shunt_from * vj;
        ls.i_to_from = line.eta_series * (vk - vj) + line.eta_shunt_to * vk;
        ls.s_from_to = line_power_matrix(vj, ls.i_from_to);
        ls.s_to_from = line_power_matrix(vk, ls.i_to_from);
        sol.lines.push_back(std::move(ls));
    }
    if (spec.network) {
        // Orientation follows the merged network lines, so from/to ids already agree.
        sol.diagnostics = residuals(*spec.network, sol);
    }
    return sol;
}

ExtendedDecomposition decompose_extended(const Solution& full, const PerPhaseSolution& pp) {
    const std::size_t n = full.buses.size();
    if (static_cast<std::size_t>(pp.v.size()) != n || static_cast<std::size_t>(pp.i.size()) != n) {
        throw Error(ErrorCode::ShapeMismatch, "per-phase solution does not match the full solution");
    }
    ExtendedDecomposition out;
    out.gamma_tilde.resize(n);
    out.beta_tilde.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const SequenceComponents sv = sequence_components(full.buses[j].terminal.v);
        const SequenceComponents si = sequence_components(full.buses[j].terminal.i);
        out.gamma_tilde[j] = sv.zero;
        out.beta_tilde[j] = si.zero;
        out.max_negative = std::max({out.max_negative, std::abs(sv.negative), std::abs(si.negative)});
        out.max_positive_mismatch =
            std::max({out.max_positive_mismatch, std::abs(sv.positive - pp.v(static_cast<Eigen::Index>(j))),
                      std::abs(si.positive - pp.i(static_cast<Eigen::Index>(j)))});
    }
    out.residual = std::max(out.max_negative, out.max_positive_mismatch);
    return out;
}

Eigen::VectorXcd propagate_zero_sequence(const PerPhaseModel& model, const BalancedSpec& spec) {
    Eigen::VectorXcd gamma_v(static_cast<Eigen::Index>(model.n_v.size()));
    for (std::size_t r = 0; r < model.n_v.size(); ++r) {
        gamma_v(static_cast<Eigen::Index>(r)) = spec.buses[model.n_v[r]].gamma;
    }
    if (model.a22.size() == 0) return Eigen::VectorXcd();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(model.a22);
    if (!(lu.rcond() >= kSingularRcond)) {
        throw Error(ErrorCode::SingularReducedSystem, "per-phase reduced matrix A22 is singular");
    }
    return -lu.solve(model.a21 * gamma_v);
}

}  // namespace triphase
