#include "sedqm/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sedqm/ensemble.hpp"

namespace sedqm {

using nlohmann::json;

const std::vector<ExperimentInfo>& experiments() {
    static const std::vector<ExperimentInfo> list{
        {"sed-relax", "driven ensemble relaxes to the ground-state energy; beta fitted from its phase-space moments"},
        {"balance", "absorbed and radiated power in the stationary window; field-free decay control"},
        {"equivalence", "Madelung pair against the Schrodinger propagator over one period"},
        {"wigner-contrast", "ensemble density reconstruction against the Wigner function of the same grids"},
        {"ground-state", "variational ground state against a dense eigensolve"},
        {"qpot", "quantum potential maps, single- and two-particle"},
    };
    return list;
}

Potential PotentialSpec::build(double mass) const {
    if (kind == "harmonic") return Potential::harmonic(omega, mass);
    if (kind == "quartic") return Potential::quartic(a, b);
    if (kind == "free" || kind == "box") return Potential::free();
    throw Error(ErrorCode::Config, "potential.kind: unknown kind '" + kind + "'");
}

double RunConfig::relaxation_time() const {
    const double w0 = potential.kind == "harmonic" ? potential.omega : params.reference_frequency;
    return 1.0 / (params.damping_time * w0 * w0);
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw Error(ErrorCode::Config, field + ": " + what);
}

// Reads the keys of one JSON object, rejecting unknown ones.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(where(), "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    template <class T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            if constexpr (std::is_same_v<T, bool>) {
                if (!it->is_boolean()) fail(field(key), "expected true or false");
            } else if constexpr (std::is_same_v<T, std::string>) {
                if (!it->is_string()) fail(field(key), "expected a string");
            } else if constexpr (std::is_unsigned_v<T>) {
                if (!it->is_number_integer() || it->get<std::int64_t>() < 0) fail(field(key), "expected a non-negative integer");
            } else if constexpr (std::is_floating_point_v<T>) {
                if (!it->is_number()) fail(field(key), "expected a number");
            }
            out = it->get<T>();
        } catch (const json::exception& e) {
            fail(field(key), e.what());
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class F>
    void object(const std::string& key, F&& body) {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end()) return;
        Reader r(*it, field(key));
        body(r);
        r.finish();
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) fail(field(key), "unknown key");
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_grid(Reader& r, const std::string& key, GridSpec& g) {
    r.object(key, [&](Reader& s) {
        s.get("min", g.min);
        s.get("max", g.max);
        s.get("n", g.n);
    });
}

void check_grid(const std::string& field, const GridSpec& g) {
    if (!(std::isfinite(g.min) && std::isfinite(g.max) && g.max > g.min)) fail(field, "needs min < max");
    if (g.n < 3) fail(field + ".n", "needs at least 3 points");
}

bool is_relaxation(const std::string& e) { return e == "sed-relax" || e == "balance"; }

}  // namespace

RunConfig default_config(std::string_view experiment) {
    const auto& list = experiments();
    if (std::none_of(list.begin(), list.end(), [&](const auto& e) { return e.name == experiment; }))
        fail("experiment", "unknown experiment '" + std::string(experiment) + "'");
    RunConfig c;
    c.experiment = std::string(experiment);
    c.params = default_params(c.preset);
    if (experiment == "balance") c.members = 500;
    if (experiment == "equivalence") c.x = {-10.0, 10.0, 512};
    if (experiment == "wigner-contrast") {
        c.x = {-8.0, 8.0, 257};
        c.members = 20000;
        c.state = {"eigenstate", 0.0, 0.0, 1};
    }
    if (experiment == "ground-state") c.x = {-8.0, 8.0, 641};
    if (experiment == "qpot") c.x = {-6.0, 6.0, 241};
    return c;
}

RunConfig parse_config(const json& j, std::string_view experiment) {
    Reader root(j, "");
    std::string name;
    root.get("experiment", name);
    if (!experiment.empty()) name = std::string(experiment);
    if (name.empty()) fail("experiment", "no experiment given");
    RunConfig c = default_config(name);

    root.get("seed", c.seed);
    root.get("threads", c.threads);
    root.get("output_dir", c.output_dir);

    root.object("params", [&](Reader& r) {
        r.get("preset", c.preset);
        try {
            c.params = default_params(c.preset);
        } catch (const Error& e) {
            fail(r.field("preset"), e.what());
        }
        r.get("mass", c.params.mass);
        r.get("hbar", c.params.hbar);
        r.get("beta", c.params.beta);
        r.get("damping_time", c.params.damping_time);
        r.get("light_speed", c.params.light_speed);
        r.get("reference_frequency", c.params.reference_frequency);
        r.get("quantum_calibrated", c.params.quantum_calibrated);
        c.coupling_given = r.has("coupling");
        r.get("coupling", c.params.coupling);
    });
    root.object("potential", [&](Reader& r) {
        r.get("kind", c.potential.kind);
        r.get("omega", c.potential.omega);
        r.get("a", c.potential.a);
        r.get("b", c.potential.b);
        r.get("length", c.potential.length);
    });
    root.object("field", [&](Reader& r) {
        r.get("enabled", c.field_enabled);
        r.get("omega_min", c.field.omega_min);
        r.get("omega_max", c.field.omega_max);
        r.get("n_modes", c.field.n_modes);
        r.get("jitter", c.field.jitter);
    });
    root.object("grids", [&](Reader& r) {
        read_grid(r, "x", c.x);
        read_grid(r, "p", c.p);
        r.object("z", [&](Reader& s) {
            s.get("step", c.z_step);
            s.get("half", c.z_half);
        });
    });
    root.object("ensemble", [&](Reader& r) {
        r.get("members", c.members);
        r.get("control_members", c.control_members);
    });
    root.object("times", [&](Reader& r) {
        r.get("t_final", c.t_final);
        r.get("dt", c.dt);
        r.get("window_start", c.window_start);
        r.get("snapshot_interval", c.snapshot_interval);
        r.get("control_span", c.control_span);
    });
    root.object("state", [&](Reader& r) {
        r.get("kind", c.state.kind);
        r.get("x0", c.state.x0);
        r.get("p0", c.state.p0);
        r.get("n", c.state.n);
    });
    root.get("refinement", c.refinement);
    root.object("variational", [&](Reader& r) {
        r.get("tol", c.tol);
        r.get("trials", c.trials);
    });
    root.finish();
    validate_config(c);
    return c;
}

void validate_config(RunConfig& c) {
    if (!c.coupling_given) c.params.coupling = calibrated_coupling(c.params);
    try {
        c.params.validate();
    } catch (const Error& e) {
        fail("params", e.what());
    }
    const auto& k = c.potential.kind;
    if (k != "harmonic" && k != "quartic" && k != "free" && k != "box") fail("potential.kind", "unknown kind '" + k + "'");
    if (k == "harmonic" && !(c.potential.omega > 0)) fail("potential.omega", "must be positive");
    if (k == "box" && !(c.potential.length > 0)) fail("potential.length", "must be positive");
    if (k == "box" && c.experiment != "ground-state") fail("potential.kind", "box is only used by ground-state");
    if (k == "quartic" && c.potential.b < 0) fail("potential.b", "quartic coefficient must be non-negative");
    check_grid("grids.x", c.x);
    check_grid("grids.p", c.p);
    if (!(c.z_step > 0)) fail("grids.z.step", "must be positive");
    if (c.z_half < 1) fail("grids.z.half", "must be at least 1");
    if (c.output_dir.empty()) fail("output_dir", "must not be empty");

    if (is_relaxation(c.experiment)) {
        if (!(c.params.damping_time > 0)) fail("params.damping_time", "relaxation requires τ > 0");
        if (k != "harmonic") fail("potential.kind", c.experiment + " uses the harmonic potential");
        try {
            c.field.validate();
        } catch (const Error& e) {
            fail("field", e.what());
        }
        if (c.members < 2) fail("ensemble.members", "needs at least 2 members");
        if (c.control_members < 1) fail("ensemble.control_members", "needs at least 1 member");
        const double tr = c.relaxation_time();
        if (c.t_final == 0.0) c.t_final = 20.0 * tr;
        if (c.window_start == 0.0) c.window_start = 0.75 * c.t_final;
        if (c.snapshot_interval == 0.0) c.snapshot_interval = 0.1 * tr;
        if (c.control_span == 0.0) c.control_span = 3.0 * tr;
        if (c.dt == 0.0) c.dt = desk_time_step(c.field.omega_max);
        if (!(c.t_final > 0)) fail("times.t_final", "must be positive");
        if (!(c.window_start > 0 && c.window_start < c.t_final)) fail("times.window_start", "must lie in (0, t_final)");
        if (!(c.snapshot_interval > 0)) fail("times.snapshot_interval", "must be positive");
        if ((c.t_final - c.window_start) / c.snapshot_interval < 2.0)
            fail("times.snapshot_interval", "the stationary window needs at least 3 snapshots");
        if (!(c.control_span > 0)) fail("times.control_span", "must be positive");
        if (!(c.dt > 0 && c.dt <= max_time_step(c.field.omega_max)))
            fail("times.dt", "must lie in (0, (2 pi / omega_max) / 20]");
    }
    if (c.experiment == "equivalence") {
        if (k != "harmonic") fail("potential.kind", "equivalence uses the harmonic potential");
        if (c.t_final == 0.0) c.t_final = 2.0 * pi / c.potential.omega;
        if (!(c.t_final > 0)) fail("times.t_final", "must be positive");
        if (c.state.kind != "coherent") fail("state.kind", "equivalence evolves a coherent state");
        if (c.refinement.size() < 2) fail("refinement", "needs at least two grid sizes");
        for (std::size_t i = 0; i < c.refinement.size(); ++i) {
            if (c.refinement[i] < 16) fail("refinement", "grid sizes must be at least 16");
            if (i && c.refinement[i] <= c.refinement[i - 1]) fail("refinement", "grid sizes must increase");
        }
    }
    if (c.experiment == "wigner-contrast") {
        if (k != "harmonic") fail("potential.kind", "wigner-contrast uses harmonic eigenstates");
        if (c.state.kind != "eigenstate") fail("state.kind", "wigner-contrast uses an eigenstate");
        if (c.members < 100) fail("ensemble.members", "needs at least 100 samples");
        if (c.z_half * c.z_step * (c.p.max - c.p.min) / static_cast<double>(c.p.n - 1) > pi / 4 + 1e-12)
            fail("grids.z", "max|z| * dp must not exceed pi/4");
        const double ratio = c.params.beta * c.z_step * static_cast<double>(c.x.n - 1) / (c.x.max - c.x.min);
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || std::round(ratio) < 1)
            fail("grids.z.step", "beta * step must be a whole number of x-steps");
    }
    if (c.experiment == "ground-state") {
        if (!(c.tol > 0)) fail("variational.tol", "must be positive");
    }
    if (c.experiment == "qpot" && k != "harmonic") fail("potential.kind", "qpot uses the harmonic ground state");
}

json RunConfig::to_json() const {
    const auto grid = [](const GridSpec& g) { return json{{"min", g.min}, {"max", g.max}, {"n", g.n}}; };
    return json{
        {"experiment", experiment},
        {"seed", seed},
        {"threads", threads},
        {"output_dir", output_dir},
        {"params",
         {{"preset", preset},
          {"mass", params.mass},
          {"hbar", params.hbar},
          {"beta", params.beta},
          {"damping_time", params.damping_time},
          {"coupling", params.coupling},
          {"light_speed", params.light_speed},
          {"reference_frequency", params.reference_frequency},
          {"quantum_calibrated", params.quantum_calibrated}}},
        {"potential",
         {{"kind", potential.kind},
          {"omega", potential.omega},
          {"a", potential.a},
          {"b", potential.b},
          {"length", potential.length}}},
        {"field",
         {{"enabled", field_enabled},
          {"omega_min", field.omega_min},
          {"omega_max", field.omega_max},
          {"n_modes", field.n_modes},
          {"jitter", field.jitter}}},
        {"grids", {{"x", grid(x)}, {"p", grid(p)}, {"z", {{"step", z_step}, {"half", z_half}}}}},
        {"ensemble", {{"members", members}, {"control_members", control_members}}},
        {"times",
         {{"t_final", t_final},
          {"dt", dt},
          {"window_start", window_start},
          {"snapshot_interval", snapshot_interval},
          {"control_span", control_span}}},
        {"state", {{"kind", state.kind}, {"x0", state.x0}, {"p0", state.p0}, {"n", state.n}}},
        {"refinement", refinement},
        {"variational", {{"tol", tol}, {"trials", trials}}},
    };
}

}  // namespace sedqm
