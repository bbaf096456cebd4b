#include "triphase/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "triphase/errors.hpp"

namespace triphase::io {

using Json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- writing

void write_number(const Json& j, std::string& out) {
    if (j.is_number_integer() || j.is_number_unsigned()) {
        out += j.dump();
        return;
    }
    const double x = j.get<double>();
    if (!std::isfinite(x)) {
        out += "null";
        return;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out += buf;
}

bool is_flat(const Json& j) {
    if (j.is_object()) return false;
    if (j.is_array()) {
        for (const auto& e : j) {
            if (!is_flat(e)) return false;
        }
    }
    return true;
}

void write_json(const Json& j, std::string& out, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
    if (j.is_object()) {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += inner + Json(it.key()).dump() + ": ";
            write_json(it.value(), out, indent + 1);
        }
        out += "\n" + pad + "}";
    } else if (j.is_array()) {
        if (j.empty()) {
            out += "[]";
            return;
        }
        if (is_flat(j)) {
            out += "[";
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += ", ";
                first = false;
                write_json(e, out, indent + 1);
            }
            out += "]";
            return;
        }
        out += "[\n";
        bool first = true;
        for (const auto& e : j) {
            if (!first) out += ",\n";
            first = false;
            out += inner;
            write_json(e, out, indent + 1);
        }
        out += "\n" + pad + "]";
    } else if (j.is_number()) {
        write_number(j, out);
    } else {
        out += j.dump();
    }
}

std::string render(const Json& j) {
    std::string out;
    write_json(j, out, 0);
    out += "\n";
    return out;
}

Json to_json(Complex z) { return Json::array({z.real(), z.imag()}); }

Json to_json(const C3& x) {
    Json a = Json::array();
    for (int k = 0; k < 3; ++k) a.push_back(to_json(x(k)));
    return a;
}

Json to_json(const C3x3& m) {
    Json a = Json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) a.push_back(to_json(m(r, c)));
    }
    return a;
}

Json device_to_json(const DeviceSpec& spec) {
    Json d;
    std::visit(
        [&](const auto& dev) {
            using T = std::decay_t<decltype(dev)>;
            if constexpr (std::is_same_v<T, VoltageSourceY>) {
                d = {{"kind", "voltage_source"}, {"config", "Y"}, {"e", to_json(dev.e)}, {"gamma", to_json(dev.gamma)}};
            } else if constexpr (std::is_same_v<T, VoltageSourceDelta>) {
                d = {{"kind", "voltage_source"}, {"config", "delta"}, {"e", to_json(dev.e)},
                     {"gamma", to_json(dev.gamma)}, {"beta", to_json(dev.beta)}};
            } else if constexpr (std::is_same_v<T, CurrentSourceY>) {
                d = {{"kind", "current_source"}, {"config", "Y"}, {"j", to_json(dev.j)}, {"gamma", to_json(dev.gamma)}};
            } else if constexpr (std::is_same_v<T, CurrentSourceDelta>) {
                d = {{"kind", "current_source"}, {"config", "delta"}, {"j", to_json(dev.j)}};
            } else if constexpr (std::is_same_v<T, ImpedanceY>) {
                d = {{"kind", "impedance"}, {"config", "Y"}, {"z", to_json(dev.z)}, {"gamma", to_json(dev.gamma)}};
            } else {
                d = {{"kind", "impedance"}, {"config", "delta"}, {"z", to_json(dev.z)}, {"beta", to_json(dev.beta)}};
            }
        },
        spec);
    return d;
}

// ---------------------------------------------------------------- reading

class Reader {
  public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& what) const {
        throw Error(ErrorCode::ParseError, source_ + ": field '" + path + "': " + what);
    }

    const Json& field(const Json& obj, const std::string& key, const std::string& path) const {
        if (!obj.is_object()) fail(path, "expected an object");
        const auto it = obj.find(key);
        if (it == obj.end()) fail(join(path, key), "missing");
        return *it;
    }

    const Json* optional_field(const Json& obj, const std::string& key) const {
        const auto it = obj.find(key);
        return (it == obj.end() || it->is_null()) ? nullptr : &*it;
    }

    std::string string(const Json& j, const std::string& path) const {
        if (!j.is_string()) fail(path, "expected a string");
        return j.get<std::string>();
    }

    double number(const Json& j, const std::string& path) const {
        if (!j.is_number()) fail(path, "expected a number");
        return j.get<double>();
    }

    Complex complex(const Json& j, const std::string& path) const {
        if (!j.is_array() || j.size() != 2) fail(path, "expected a [re, im] pair");
        return {number(j[0], path + "[0]"), number(j[1], path + "[1]")};
    }

    C3 vector3(const Json& j, const std::string& path) const {
        if (!j.is_array() || j.size() != 3) fail(path, "expected 3 [re, im] pairs");
        C3 x;
        for (int k = 0; k < 3; ++k) x(k) = complex(j[static_cast<std::size_t>(k)], index(path, k));
        return x;
    }

    C3x3 matrix3(const Json& j, const std::string& path) const {
        if (!j.is_array() || j.size() != 9) fail(path, "expected 9 [re, im] pairs in row-major order");
        C3x3 m;
        for (int k = 0; k < 9; ++k) m(k / 3, k % 3) = complex(j[static_cast<std::size_t>(k)], index(path, k));
        return m;
    }

    Complex complex_or_zero(const Json& obj, const std::string& key, const std::string& path) const {
        const Json* j = optional_field(obj, key);
        return j ? complex(*j, join(path, key)) : Complex{};
    }

    static std::string join(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }
    static std::string index(const std::string& path, std::size_t k) { return path + "[" + std::to_string(k) + "]"; }
    static std::string index(const std::string& path, int k) { return index(path, static_cast<std::size_t>(k)); }

    const std::string& source() const { return source_; }

  private:
    std::string source_;
};

Json parse_text(const std::string& text, const std::string& source) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        std::size_t column = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::ostringstream msg;
        msg << source << ":" << line << ":" << column << ": invalid JSON";
        throw Error(ErrorCode::ParseError, msg.str());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file for writing");
    out << text;
    if (!out) throw Error(ErrorCode::ParseError, path.string() + ": write failed");
}

void check_version(const Reader& rd, const Json& root) {
    const Json& version = rd.field(root, "version", "");
    if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
        rd.fail("version", "expected " + std::to_string(kFormatVersion));
    }
}

DeviceSpec parse_device(const Reader& rd, const Json& j, const std::string& path) {
    const std::string kind = rd.string(rd.field(j, "kind", path), Reader::join(path, "kind"));
    const std::string config = rd.string(rd.field(j, "config", path), Reader::join(path, "config"));
    const bool delta = config == "delta" || config == "D";
    if (!delta && config != "Y") rd.fail(Reader::join(path, "config"), "expected \"Y\" or \"delta\"");

    auto vec = [&](const char* key) { return rd.vector3(rd.field(j, key, path), Reader::join(path, key)); };
    auto mat = [&](const char* key) { return rd.matrix3(rd.field(j, key, path), Reader::join(path, key)); };
    auto opt = [&](const char* key) { return rd.complex_or_zero(j, key, path); };

    if (kind == "voltage_source") {
        if (delta) return VoltageSourceDelta{vec("e"), opt("gamma"), opt("beta")};
        return VoltageSourceY{vec("e"), opt("gamma")};
    }
    if (kind == "current_source") {
        if (delta) return CurrentSourceDelta{vec("j")};
        return CurrentSourceY{vec("j"), opt("gamma")};
    }
    if (kind == "impedance") {
        if (delta) return ImpedanceDelta{mat("z"), opt("beta")};
        return ImpedanceY{mat("z"), opt("gamma")};
    }
    rd.fail(Reader::join(path, "kind"), "expected voltage_source, current_source or impedance");
}

Json state_diag(const DiagnosticReport& d) {
    Json kcl = Json::array();
    for (double r : d.kcl_residuals) kcl.push_back(r);
    Json delta = Json::array();
    for (const auto& r : d.delta_source_kcl) {
        delta.push_back({{"bus", r.bus}, {"residual", r.residual}, {"warning", r.warning}});
    }
    return {{"network_residual", d.network_residual},
            {"current_scale", d.current_scale},
            {"voltage_scale", d.voltage_scale},
            {"max_kcl_residual", d.max_kcl_residual},
            {"kcl_residuals", kcl},
            {"delta_source_kcl", delta},
            {"total_injection", to_json(d.total_injection)},
            {"total_losses", to_json(d.total_losses)},
            {"power_mismatch", d.power_mismatch}};
}

}  // namespace

// ---------------------------------------------------------------- networks

Network parse_network(const std::string& text, const std::string& source) {
    const Reader rd(source);
    const Json root = parse_text(text, source);
    if (!root.is_object()) rd.fail("", "top level must be an object");
    check_version(rd, root);

    std::vector<Bus> buses;
    const Json& jb = rd.field(root, "buses", "");
    if (!jb.is_array()) rd.fail("buses", "expected an array");
    for (std::size_t k = 0; k < jb.size(); ++k) {
        const std::string path = Reader::index("buses", k);
        Bus bus{rd.string(rd.field(jb[k], "id", path), path + ".id"),
                parse_device(rd, rd.field(jb[k], "device", path), path + ".device"), std::nullopt};
        if (const Json* shunt = rd.optional_field(jb[k], "shunt")) bus.shunt = rd.matrix3(*shunt, path + ".shunt");
        buses.push_back(std::move(bus));
    }

    std::vector<LineSpec> lines;
    if (const Json* jl = rd.optional_field(root, "lines")) {
        if (!jl->is_array()) rd.fail("lines", "expected an array");
        for (std::size_t k = 0; k < jl->size(); ++k) {
            const Json& l = (*jl)[k];
            const std::string path = Reader::index("lines", k);
            LineSpec line;
            line.from = rd.string(rd.field(l, "from", path), path + ".from");
            line.to = rd.string(rd.field(l, "to", path), path + ".to");
            line.y_series = rd.matrix3(rd.field(l, "y_series", path), path + ".y_series");
            if (const Json* s = rd.optional_field(l, "y_shunt_from")) line.y_shunt_from = rd.matrix3(*s, path + ".y_shunt_from");
            if (const Json* s = rd.optional_field(l, "y_shunt_to")) line.y_shunt_to = rd.matrix3(*s, path + ".y_shunt_to");
            lines.push_back(std::move(line));
        }
    }

    try {
        return Network(std::move(buses), std::move(lines));
    } catch (const Error& e) {
        throw Error(ErrorCode::ValidationError, source + ": " + e.what());
    }
}

Network load_network(const std::filesystem::path& path) { return parse_network(read_file(path), path.string()); }

std::string network_to_json(const Network& network) {
    Json root;
    root["version"] = kFormatVersion;
    Json buses = Json::array();
    for (const Bus& bus : network.buses()) {
        Json b = {{"id", bus.id}, {"device", device_to_json(bus.device)}};
        if (bus.shunt) b["shunt"] = to_json(*bus.shunt);
        buses.push_back(std::move(b));
    }
    root["buses"] = std::move(buses);
    Json lines = Json::array();
    for (const LineSpec& line : network.lines()) {
        lines.push_back({{"from", line.from},
                         {"to", line.to},
                         {"y_series", to_json(line.y_series)},
                         {"y_shunt_from", to_json(line.y_shunt_from)},
                         {"y_shunt_to", to_json(line.y_shunt_to)}});
    }
    root["lines"] = std::move(lines);
    return render(root);
}

void save_network(const Network& network, const std::filesystem::path& path) {
    write_file(path, network_to_json(network));
}

// ---------------------------------------------------------------- solutions

std::string solution_to_json(const Solution& solution, const SolutionMetadata& metadata) {
    Json root;
    root["version"] = kFormatVersion;

    Json meta = {{"mode", metadata.mode},
                 {"requested_mode", metadata.requested_mode},
                 {"balance_tolerance", metadata.balance_tolerance}};
    if (metadata.balanced) meta["balanced"] = *metadata.balanced;
    root["metadata"] = std::move(meta);

    Json buses = Json::array();
    for (const BusSolution& b : solution.buses) {
        buses.push_back({{"id", b.id},
                         {"v", to_json(b.terminal.v)},
                         {"i", to_json(b.terminal.i)},
                         {"s", to_json(b.terminal.s)},
                         {"v_internal", to_json(b.internal.v_int)},
                         {"i_internal", to_json(b.internal.i_int)},
                         {"s_internal", to_json(b.internal.s_int)},
                         {"gamma", to_json(b.internal.gamma)},
                         {"beta", b.internal.beta ? to_json(*b.internal.beta) : Json(nullptr)}});
    }
    root["buses"] = std::move(buses);

    Json lines = Json::array();
    for (const LineSolution& l : solution.lines) {
        lines.push_back({{"from", l.from},
                         {"to", l.to},
                         {"i_from_to", to_json(l.i_from_to)},
                         {"i_to_from", to_json(l.i_to_from)},
                         {"s_from_to", to_json(l.s_from_to)},
                         {"s_to_from", to_json(l.s_to_from)}});
    }
    root["lines"] = std::move(lines);

    Json diag = state_diag(solution.diagnostics);
    Json balance = Json::array();
    for (const BalanceIssue& issue : metadata.balance_issues) {
        balance.push_back({{"element", issue.element}, {"component", issue.component}, {"magnitude", issue.magnitude}});
    }
    diag["balance_report"] = std::move(balance);
    root["diagnostics"] = std::move(diag);
    return render(root);
}

void save_solution(const Solution& solution, const SolutionMetadata& metadata, const std::filesystem::path& path) {
    write_file(path, solution_to_json(solution, metadata));
}

SolutionFile parse_solution(const std::string& text, const std::string& source) {
    const Reader rd(source);
    const Json root = parse_text(text, source);
    if (!root.is_object()) rd.fail("", "top level must be an object");
    check_version(rd, root);

    SolutionFile file;
    const Json& meta = rd.field(root, "metadata", "");
    file.metadata.mode = rd.string(rd.field(meta, "mode", "metadata"), "metadata.mode");
    file.metadata.requested_mode = rd.string(rd.field(meta, "requested_mode", "metadata"), "metadata.requested_mode");
    file.metadata.balance_tolerance =
        rd.number(rd.field(meta, "balance_tolerance", "metadata"), "metadata.balance_tolerance");
    if (const Json* b = rd.optional_field(meta, "balanced")) file.metadata.balanced = b->get<bool>();

    const Json& buses = rd.field(root, "buses", "");
    if (!buses.is_array()) rd.fail("buses", "expected an array");
    for (std::size_t k = 0; k < buses.size(); ++k) {
        const Json& b = buses[k];
        const std::string p = Reader::index("buses", k);
        BusSolution bs;
        bs.id = rd.string(rd.field(b, "id", p), p + ".id");
        bs.terminal.v = rd.vector3(rd.field(b, "v", p), p + ".v");
        bs.terminal.i = rd.vector3(rd.field(b, "i", p), p + ".i");
        bs.terminal.s = rd.vector3(rd.field(b, "s", p), p + ".s");
        bs.internal.v_int = rd.vector3(rd.field(b, "v_internal", p), p + ".v_internal");
        bs.internal.i_int = rd.vector3(rd.field(b, "i_internal", p), p + ".i_internal");
        bs.internal.s_int = rd.vector3(rd.field(b, "s_internal", p), p + ".s_internal");
        bs.internal.gamma = rd.complex(rd.field(b, "gamma", p), p + ".gamma");
        if (const Json* beta = rd.optional_field(b, "beta")) bs.internal.beta = rd.complex(*beta, p + ".beta");
        file.solution.buses.push_back(std::move(bs));
    }

    if (const Json* lines = rd.optional_field(root, "lines")) {
        for (std::size_t k = 0; k < lines->size(); ++k) {
            const Json& l = (*lines)[k];
            const std::string p = Reader::index("lines", k);
            LineSolution ls;
            ls.from = rd.string(rd.field(l, "from", p), p + ".from");
            ls.to = rd.string(rd.field(l, "to", p), p + ".to");
            ls.i_from_to = rd.vector3(rd.field(l, "i_from_to", p), p + ".i_from_to");
            ls.i_to_from = rd.vector3(rd.field(l, "i_to_from", p), p + ".i_to_from");
            ls.s_from_to = rd.matrix3(rd.field(l, "s_from_to", p), p + ".s_from_to");
            ls.s_to_from = rd.matrix3(rd.field(l, "s_to_from", p), p + ".s_to_from");
            file.solution.lines.push_back(std::move(ls));
        }
    }

    if (const Json* d = rd.optional_field(root, "diagnostics")) {
        DiagnosticReport& r = file.solution.diagnostics;
        r.network_residual = rd.number(rd.field(*d, "network_residual", "diagnostics"), "diagnostics.network_residual");
        r.current_scale = rd.number(rd.field(*d, "current_scale", "diagnostics"), "diagnostics.current_scale");
        r.voltage_scale = rd.number(rd.field(*d, "voltage_scale", "diagnostics"), "diagnostics.voltage_scale");
        r.max_kcl_residual = rd.number(rd.field(*d, "max_kcl_residual", "diagnostics"), "diagnostics.max_kcl_residual");
        for (const Json& x : rd.field(*d, "kcl_residuals", "diagnostics")) r.kcl_residuals.push_back(x.get<double>());
        for (const Json& x : rd.field(*d, "delta_source_kcl", "diagnostics")) {
            r.delta_source_kcl.push_back(
                {x.at("bus").get<std::string>(), x.at("residual").get<double>(), x.at("warning").get<bool>()});
        }
        r.total_injection = rd.complex(rd.field(*d, "total_injection", "diagnostics"), "diagnostics.total_injection");
        r.total_losses = rd.complex(rd.field(*d, "total_losses", "diagnostics"), "diagnostics.total_losses");
        r.power_mismatch = rd.number(rd.field(*d, "power_mismatch", "diagnostics"), "diagnostics.power_mismatch");
        if (const Json* br = rd.optional_field(*d, "balance_report")) {
            for (const Json& x : *br) {
                file.metadata.balance_issues.push_back({x.at("element").get<std::string>(),
                                                        x.at("component").get<std::string>(),
                                                        x.at("magnitude").get<double>()});
            }
        }
    }
    return file;
}

SolutionFile load_solution(const std::filesystem::path& path) { return parse_solution(read_file(path), path.string()); }

double max_relative_difference(const Solution& a, const Solution& b) {
    if (a.buses.size() != b.buses.size()) {
        throw Error(ErrorCode::ShapeMismatch, "solutions have different bus counts");
    }
    double worst = 0.0;
    auto family = [&](auto get) {
        double diff = 0.0;
        double scale = 0.0;
        for (std::size_t j = 0; j < a.buses.size(); ++j) {
            const C3& x = get(a.buses[j]);
            const C3& y = get(b.buses[j]);
            diff = std::max(diff, (x - y).cwiseAbs().maxCoeff());
            scale = std::max({scale, x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff()});
        }
        if (diff > 0.0) worst = std::max(worst, scale > 0.0 ? diff / scale : diff);
    };
    for (std::size_t j = 0; j < a.buses.size(); ++j) {
        if (a.buses[j].id != b.buses[j].id) {
            throw Error(ErrorCode::ShapeMismatch,
                        "bus " + std::to_string(j) + " is '" + a.buses[j].id + "' in one file and '" + b.buses[j].id + "' in the other");
        }
    }
    family([](const BusSolution& s) -> const C3& { return s.terminal.v; });
    family([](const BusSolution& s) -> const C3& { return s.terminal.i; });
    family([](const BusSolution& s) -> const C3& { return s.terminal.s; });
    return worst;
}

}  // namespace triphase::io
