#include "rbcert/config.hpp"

#include <set>

#include "rbcert/errors.hpp"

namespace rbcert {

namespace {

/// View of one JSON object that remembers its path and which keys were read.
class Section {
public:
    Section(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            fail(path_, "must be an object");
        }
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& message) {
        throw InvalidInput("config: " + path + " " + message);
    }

    [[nodiscard]] std::string field(const std::string& key) const { return path_ + "." + key; }

    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

    [[nodiscard]] const Json* raw(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    [[nodiscard]] Section sub(const std::string& key) {
        const Json* v = raw(key);
        if (v == nullptr) {
            fail(field(key), "is required");
        }
        return Section(*v, field(key));
    }

    [[nodiscard]] std::string text(const std::string& key, std::optional<std::string> fallback = {}) {
        const Json* v = raw(key);
        if (v == nullptr) {
            if (!fallback) {
                fail(field(key), "is required");
            }
            return *fallback;
        }
        if (!v->is_string()) {
            fail(field(key), "must be a string");
        }
        return v->get<std::string>();
    }

    Scalar real(const std::string& key, Scalar fallback) {
        const Json* v = raw(key);
        if (v == nullptr) {
            return fallback;
        }
        if (!v->is_number()) {
            fail(field(key), "must be a number");
        }
        return v->get<Scalar>();
    }

    Scalar positive(const std::string& key, Scalar fallback) {
        const Scalar v = real(key, fallback);
        if (!(v > 0.0)) {
            fail(field(key), "must be > 0");
        }
        return v;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min) {
        const Json* v = raw(key);
        std::int64_t out = fallback;
        if (v != nullptr) {
            if (!v->is_number_integer()) {
                fail(field(key), "must be an integer");
            }
            out = v->get<std::int64_t>();
        }
        if (out < min) {
            fail(field(key), "must be >= " + std::to_string(min));
        }
        return out;
    }

    std::optional<std::vector<Scalar>> reals(const std::string& key) {
        const Json* v = raw(key);
        if (v == nullptr || v->is_null()) {
            return std::nullopt;
        }
        if (!v->is_array() || v->empty()) {
            fail(field(key), "must be a non-empty array of numbers");
        }
        std::vector<Scalar> out;
        for (const auto& e : *v) {
            if (!e.is_number()) {
                fail(field(key), "must be a non-empty array of numbers");
            }
            out.push_back(e.get<Scalar>());
        }
        return out;
    }

    /// Rejects every key that no accessor asked for.
    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) {
                fail(field(key), "is not a recognized key");
            }
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

int as_int(std::int64_t v) {
    return static_cast<int>(v);
}

SamplingStrategy parse_sampling(Section& s, bool allow_training, bool* use_training) {
    const std::string kind = s.text("strategy");
    if (kind == "grid") {
        return UniformGrid{static_cast<std::size_t>(s.integer("points_per_axis", 5, 2))};
    }
    if (kind == "random") {
        const auto size = static_cast<std::size_t>(s.integer("size", 100, 1));
        const auto seed = static_cast<std::uint64_t>(s.integer("seed", 0, 0));
        return RandomSampling{size, seed};
    }
    if (allow_training && kind == "training") {
        *use_training = true;
        return UniformGrid{2};
    }
    Section::fail(s.field("strategy"), allow_training ? "must be one of grid, random, training"
                                                      : "must be one of grid, random");
}

ContrastConfig parse_contrast(Section s) {
    ContrastConfig c;
    c.blocks_x = as_int(s.integer("blocks_x", c.blocks_x, 1));
    c.blocks_y = as_int(s.integer("blocks_y", c.blocks_y, 1));
    c.cells_per_axis = as_int(s.integer("cells_per_axis", c.cells_per_axis, 2));
    c.mu_min = s.positive("mu_min", c.mu_min);
    c.mu_max = s.positive("mu_max", c.mu_max);
    c.snapshots = static_cast<std::size_t>(s.integer("snapshots", static_cast<std::int64_t>(c.snapshots), 1));
    c.seed = static_cast<std::uint64_t>(s.integer("seed", static_cast<std::int64_t>(c.seed), 0));
    c.n_max = as_int(s.integer("n_max", c.n_max, 1));
    if (c.mu_min >= c.mu_max) {
        Section::fail(s.field("mu_min"), "must be < mu_max");
    }
    if (c.cells_per_axis % c.blocks_x != 0 || c.cells_per_axis % c.blocks_y != 0) {
        Section::fail(s.field("cells_per_axis"), "must be divisible by blocks_x and blocks_y");
    }
    s.finish();
    return c;
}

ProblemConfig parse_problem(Section s) {
    ProblemConfig p;
    const std::string type = s.text("type");
    if (type == "thermal_block") {
        p.type = ProblemType::ThermalBlock;
    } else if (type == "parabolic_thermal") {
        p.type = ProblemType::ParabolicThermal;
    } else if (type == "advection_demo") {
        p.type = ProblemType::AdvectionDemo;
    } else {
        Section::fail(s.field("type"), "must be one of thermal_block, parabolic_thermal, advection_demo");
    }

    if (p.type == ProblemType::AdvectionDemo) {
        p.grid_n = as_int(s.integer("grid_n", p.grid_n, 2));
        p.time_samples = as_int(s.integer("time_samples", p.time_samples, 2));
        p.n_max = as_int(s.integer("n_max", p.n_max, 1));
        if (p.grid_n < 2 * p.n_max) {
            Section::fail(s.field("grid_n"), "must be >= 2 * n_max");
        }
        if (p.time_samples < p.grid_n) {
            Section::fail(s.field("time_samples"), "must be >= grid_n");
        }
        if (s.has("contrast")) {
            p.contrast = parse_contrast(s.sub("contrast"));
        }
        s.finish();
        return p;
    }

    p.blocks_x = as_int(s.integer("blocks_x", p.blocks_x, 1));
    p.blocks_y = as_int(s.integer("blocks_y", p.blocks_y, 1));
    p.cells_per_axis = as_int(s.integer("cells_per_axis", p.cells_per_axis, 2));
    p.mu_min = s.positive("mu_min", p.mu_min);
    p.mu_max = s.positive("mu_max", p.mu_max);
    if (p.mu_min >= p.mu_max) {
        Section::fail(s.field("mu_min"), "must be < mu_max");
    }
    if (p.cells_per_axis % p.blocks_x != 0 || p.cells_per_axis % p.blocks_y != 0) {
        Section::fail(s.field("cells_per_axis"), "must be divisible by blocks_x and blocks_y");
    }
    if (p.type == ProblemType::ParabolicThermal) {
        p.dt = s.positive("dt", p.dt);
        p.t_final = s.positive("t_final", p.t_final);
        p.initial = s.real("initial", p.initial);
        p.source = s.real("source", p.source);
        try {
            (void)time_steps(p.dt, p.t_final);
        } catch (const InvalidInput&) {
            Section::fail(s.field("t_final"), "must be a positive multiple of dt");
        }
    }
    s.finish();
    return p;
}

GreedySection parse_greedy(Section s, const ProblemConfig& problem) {
    GreedySection g;
    if (s.has("training")) {
        Section t = s.sub("training");
        g.training = parse_sampling(t, false, nullptr);
        t.finish();
    }
    g.max_basis_size = static_cast<std::size_t>(s.integer("max_basis_size", 40, 1));
    g.target_error = s.positive("target_error", g.target_error);
    g.pod_modes_per_iter = static_cast<std::size_t>(s.integer("pod_modes_per_iter", 1, 1));
    g.seed_parameter = s.reals("seed_parameter");
    if (g.seed_parameter) {
        const auto dim = static_cast<std::size_t>(problem.blocks_x * problem.blocks_y);
        if (g.seed_parameter->size() != dim) {
            Section::fail(s.field("seed_parameter"), "must have " + std::to_string(dim) + " entries");
        }
        for (Scalar v : *g.seed_parameter) {
            if (v < problem.mu_min || v > problem.mu_max) {
                Section::fail(s.field("seed_parameter"), "must lie inside [mu_min, mu_max]");
            }
        }
    }
    s.finish();
    return g;
}

OutputSection parse_output(Section s) {
    OutputSection o;
    o.directory = s.text("directory", "out");
    o.precision = as_int(s.integer("precision", 17, 1));
    if (o.precision != 17) {
        Section::fail(s.field("precision"), "must be 17 (round-trip exact export)");
    }
    s.finish();
    return o;
}

ValidationSection parse_validation(Section s) {
    ValidationSection v;
    v.strategy = parse_sampling(s, true, &v.use_training);
    s.finish();
    return v;
}

}  // namespace

const char* to_string(ProblemType type) noexcept {
    switch (type) {
        case ProblemType::ThermalBlock: return "thermal_block";
        case ProblemType::ParabolicThermal: return "parabolic_thermal";
        case ProblemType::AdvectionDemo: return "advection_demo";
    }
    return "unknown";
}

RunConfig parse_config(const Json& j) {
    Section root(j, "$");
    RunConfig c;
    c.problem = parse_problem(root.sub("problem"));
    const bool needs_greedy = c.problem.type != ProblemType::AdvectionDemo;
    if (root.has("greedy") || needs_greedy) {
        c.greedy = parse_greedy(root.sub("greedy"), c.problem);
    }
    if (root.has("output")) {
        c.output = parse_output(root.sub("output"));
    }
    if (root.has("validation")) {
        c.validation = parse_validation(root.sub("validation"));
    }
    root.finish();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    return parse_config(read_json_file(path));
}

}  // namespace rbcert
