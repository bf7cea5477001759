#include "rbcert/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>

#include "rbcert/errors.hpp"
#include "rbcert/greedy.hpp"
#include "rbcert/nwidth.hpp"
#include "rbcert/parallel.hpp"
#include "rbcert/reduced.hpp"
#include "rbcert/serialize.hpp"

namespace rbcert {

namespace fs = std::filesystem;

namespace {

constexpr Scalar kRigorSlack = 1e-9;

std::string real(Scalar v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    return fmt::format("{:.17g}", v);
}

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const InvalidInput& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitConfig;
    } catch (const NumericalFailure& e) {
        fmt::print(err, "numerical failure: {}\n", e.what());
        return kExitNumerical;
    } catch (const fs::filesystem_error& e) {
        fmt::print(err, "error: {}\n", e.what());
        return kExitConfig;
    }
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    body(out);
    if (!out) {
        throw InvalidInput("write failed for " + path.string());
    }
}

fs::path output_directory(const RunConfig& config, const CommandOptions& options) {
    fs::path dir = options.out ? *options.out : config.output.directory;
    fs::create_directories(dir);
    return dir;
}

void require_type(const RunConfig& config, ProblemType type, const char* command) {
    if (config.problem.type != type) {
        throw InvalidInput(fmt::format("config: $.problem.type is {}, but {} needs {}",
                                       to_string(config.problem.type), command, to_string(type)));
    }
}

GreedyConfig greedy_config(const RunConfig& config, const TruthProblem& problem, unsigned threads) {
    GreedyConfig g;
    g.training_set = training_parameters(config, problem.domain());
    g.max_basis_size = config.greedy.max_basis_size;
    g.target_error = config.greedy.target_error;
    g.pod_modes_per_iter = config.greedy.pod_modes_per_iter;
    if (config.greedy.seed_parameter) {
        g.seed_parameter = problem.domain().make(*config.greedy.seed_parameter);
    }
    g.threads = threads;
    return g;
}

void write_traces(const fs::path& dir, const GreedyTrace& trace, const GreedyConfig& g, std::size_t dim) {
    write_file(dir / "greedy_trace.csv", [&](std::ostream& os) { write_trace_csv(os, trace, dim); });
    write_file(dir / "error_table.csv",
               [&](std::ostream& os) { write_error_table_csv(os, trace, g.training_set); });
}

/// Shared tail of offline and pod-greedy: artifacts or explicit rejection.
int finish_training(const fs::path& dir, const GreedyResult& result, const GreedyConfig& g, std::size_t dim,
                    std::ostream& out) {
    write_traces(dir, result.trace, g, dim);
    fs::remove(dir / "INCOMPLETE");
    if (result.basis.size() == 0) {
        throw InvalidInput(fmt::format(
            "target_error {} is not below the initial bound {}; the resulting N = 0 model is unusable online "
            "and was not written",
            real(g.target_error), real(result.trace.final_max_error())));
    }
    write_json_file(dir / "model.json", model_to_json(result.model));
    write_json_file(dir / "basis.json", basis_to_json(result.basis));
    fmt::print(out, "N = {}\nmax certified training error = {}\nstop reason = {}\n", result.basis.size(),
               real(result.trace.final_max_error()), to_string(result.trace.stop_reason));
    return kExitOk;
}

int write_aborted(const fs::path& dir, const GreedyAborted& e, const GreedyConfig& g, std::size_t dim,
                  std::ostream& err) {
    write_traces(dir, e.partial_trace(), g, dim);
    write_json_file(dir / "basis.json", basis_to_json(e.partial_basis()));
    write_file(dir / "INCOMPLETE", [&](std::ostream& os) { os << e.what() << '\n'; });
    fmt::print(err, "greedy aborted after {} iterations: {}\npartial artifacts in {} are flagged INCOMPLETE\n",
               e.partial_trace().iterations.size(), e.what(), dir.string());
    return kExitNumerical;
}

fs::path default_basis_path(const fs::path& model_path, const CommandOptions& options) {
    return options.basis ? *options.basis : model_path.parent_path() / "basis.json";
}

ReducedModel load_model(const fs::path& path) {
    ReducedModel model = model_from_json(read_json_file(path));
    if (model.basis_size() == 0) {
        throw InvalidInput(path.string() + " holds an empty (N = 0) model");
    }
    return model;
}

Parameter checked_parameter(const ReducedModel& model, const std::vector<Scalar>& values) {
    if (values.size() != model.domain.dim()) {
        throw InvalidInput(fmt::format("mu has {} components but the model expects {}", values.size(),
                                       model.domain.dim()));
    }
    return model.domain.make(values);
}

Scalar median(std::vector<Scalar> v) {
    if (v.empty()) {
        return std::numeric_limits<Scalar>::quiet_NaN();
    }
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct ValidationRow {
    Parameter mu;
    Scalar true_error = 0.0;
    Scalar error_bound = 0.0;
    Scalar effectivity = 0.0;
    Scalar ratio = 0.0;  // continuity UB / coercivity LB
    Vector output_error;
    Vector output_bound;
    bool violation = false;
};

}  // namespace

TruthProblem build_problem(const ProblemConfig& p) {
    if (p.type == ProblemType::AdvectionDemo) {
        throw InvalidInput("advection_demo has no truth problem");
    }
    TruthProblem truth = build_thermal_block(p.blocks_x, p.blocks_y, p.cells_per_axis, p.mu_min, p.mu_max);
    if (p.type == ProblemType::ParabolicThermal && p.source != 1.0) {
        return truth.with_load(truth.load() * p.source);
    }
    return truth;
}

Vector initial_condition(const ProblemConfig& p, const TruthProblem& truth) {
    return Vector::Constant(truth.size(), p.initial);
}

std::vector<Parameter> training_parameters(const RunConfig& config, const ParameterDomain& domain) {
    return sample_training_set(domain, config.greedy.training);
}

std::vector<Parameter> validation_parameters(const RunConfig& config, const ParameterDomain& domain) {
    if (config.validation.use_training) {
        return training_parameters(config, domain);
    }
    return sample_training_set(domain, config.validation.strategy);
}

int cmd_offline(const fs::path& config_path, const CommandOptions& options, Streams io) {
    return guarded(io.err, [&]() -> int {
        const RunConfig config = load_config(config_path);
        require_type(config, ProblemType::ThermalBlock, "offline");
        const TruthProblem problem = build_problem(config.problem);
        const GreedyConfig g = greedy_config(config, problem, options.threads);
        const fs::path dir = output_directory(config, options);
        const std::size_t dim = problem.domain().dim();
        try {
            return finish_training(dir, run_greedy(problem, g), g, dim, io.out);
        } catch (const GreedyAborted& e) {
            return write_aborted(dir, e, g, dim, io.err);
        }
    });
}

int cmd_pod_greedy(const fs::path& config_path, const CommandOptions& options, Streams io) {
    return guarded(io.err, [&]() -> int {
        const RunConfig config = load_config(config_path);
        require_type(config, ProblemType::ParabolicThermal, "pod-greedy");
        const TruthProblem problem = build_problem(config.problem);
        const Vector initial = initial_condition(config.problem, problem);
        const GreedyConfig g = greedy_config(config, problem, options.threads);
        const fs::path dir = output_directory(config, options);
        const std::size_t dim = problem.domain().dim();
        const bool trivial = config.problem.initial == 0.0 && config.problem.source == 0.0;
        try {
            const GreedyResult result = run_pod_greedy(problem, g, config.problem.dt, config.problem.t_final, initial);
            if (trivial && result.basis.size() == 0) {
                write_traces(dir, result.trace, g, dim);
                fs::remove(dir / "INCOMPLETE");
                fmt::print(io.out, "trivial dynamics: zero initial condition and zero source make every trajectory "
                                   "vanish; terminated with zero error and no model\n");
                return kExitOk;
            }
            return finish_training(dir, result, g, dim, io.out);
        } catch (const GreedyAborted& e) {
            return write_aborted(dir, e, g, dim, io.err);
        }
    });
}

int cmd_online(const fs::path& model_path, const std::vector<std::vector<Scalar>>& mus,
               const CommandOptions& options, Streams io) {
    return guarded(io.err, [&]() -> int {
        const ReducedModel model = load_model(model_path);
        if (mus.empty()) {
            throw InvalidInput("online needs at least one --mu");
        }
        std::vector<Parameter> params;
        for (const auto& values : mus) {
            params.push_back(checked_parameter(model, values));
        }
        std::optional<ReducedBasis> basis;
        if (options.lift) {
            basis = basis_from_json(read_json_file(default_basis_path(model_path, options)));
            if (basis->size() != model.basis_size()) {
                throw InvalidInput("basis size does not match the model");
            }
        }
        std::optional<fs::path> dir;
        if (options.out || options.lift) {
            dir = options.out ? *options.out : fs::path(".");
            fs::create_directories(*dir);
        }
        Json records = Json::array();
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto start = std::chrono::steady_clock::now();
            const ReducedSolution sol = solve_reduced(model, params[i]);
            const Certificate cert = certify(model, params[i], sol);
            const Vector outputs = evaluate_outputs(model, sol);
            const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
            Json record = certificate_to_json(params[i], outputs, cert);
            record["wall_time_seconds"] = wall.count();
            if (basis) {
                const fs::path file = *dir / fmt::format("lifted_{}.csv", i);
                const Vector state = lift(*basis, sol);
                write_file(file, [&](std::ostream& os) {
                    os << "dof,value\n";
                    for (Eigen::Index k = 0; k < state.size(); ++k) {
                        os << k << ',' << real(state[k]) << '\n';
                    }
                });
                record["lifted_state"] = file.string();
            }
            fmt::print(io.out, "{}\n", record.dump());
            records.push_back(std::move(record));
        }
        if (options.out) {
            write_json_file(*dir / "certificates.json", {{"format", "rbcert.certificates"},
                                                         {"format_version", kFormatVersion},
                                                         {"records", records}});
        }
        return kExitOk;
    });
}

int cmd_validate(const fs::path& model_path, const fs::path& config_path, const CommandOptions& options,
                 Streams io) {
    return guarded(io.err, [&]() -> int {
        const RunConfig config = load_config(config_path);
        if (config.problem.type != ProblemType::ThermalBlock) {
            throw InvalidInput("validate supports thermal_block configs");
        }
        const ReducedModel model = load_model(model_path);
        const ReducedBasis basis = basis_from_json(read_json_file(default_basis_path(model_path, options)));
        const TruthProblem problem = build_problem(config.problem);
        if (basis.truth_size() != problem.size() || basis.size() != model.basis_size()) {
            throw InvalidInput("model and basis do not match the configured truth problem");
        }
        if (!(model.domain == problem.domain())) {
            throw InvalidInput("model parameter domain differs from the configured problem");
        }
        const std::vector<Parameter> test = validation_parameters(config, problem.domain());
        const SparseMatrix& x = problem.inner_product();
        std::vector<ValidationRow> rows(test.size());
        parallel_for(test.size(), options.threads, [&](std::size_t i) {
            ValidationRow& row = rows[i];
            row.mu = test[i];
            const Vector truth = solve_truth(problem, test[i]).coefficients;
            const ReducedSolution sol = solve_reduced(model, test[i]);
            const Certificate cert = certify(model, test[i], sol);
            row.true_error = x_norm(x, truth - lift(basis, sol));
            row.error_bound = cert.error_bound;
            row.effectivity = row.true_error > 0.0 ? row.error_bound / row.true_error
                                                   : std::numeric_limits<Scalar>::infinity();
            row.ratio = continuity_upper_bound(model, test[i]) / cert.coercivity_lb;
            row.output_error = (problem.outputs() * truth - evaluate_outputs(model, sol)).cwiseAbs();
            row.output_bound = cert.output_bound;
            row.violation = row.true_error > row.error_bound + kRigorSlack ||
                            (row.output_error.array() > row.output_bound.array() + kRigorSlack).any();
        });

        std::vector<Scalar> eff;
        std::size_t violations = 0;
        Scalar max_ratio = 0.0;
        for (const auto& row : rows) {
            if (std::isfinite(row.effectivity)) {
                eff.push_back(row.effectivity);
            }
            violations += row.violation ? 1 : 0;
            max_ratio = std::max(max_ratio, row.ratio);
        }
        const Scalar eff_min = eff.empty() ? NAN : *std::min_element(eff.begin(), eff.end());
        const Scalar eff_max = eff.empty() ? NAN : *std::max_element(eff.begin(), eff.end());
        const Scalar eff_median = median(eff);

        const std::size_t dim = problem.domain().dim();
        const Eigen::Index s = model.num_outputs();
        const fs::path dir = output_directory(config, options);
        write_file(dir / "validation_report.csv", [&](std::ostream& os) {
            os << "index";
            for (std::size_t d = 0; d < dim; ++d) {
                os << ",mu_" << d;
            }
            os << ",true_error,error_bound,effectivity,ub_lb_ratio";
            for (Eigen::Index k = 0; k < s; ++k) {
                os << ",output_error_" << k << ",output_bound_" << k;
            }
            os << ",rigor_violation,min_effectivity,median_effectivity,max_effectivity,rigor_violations\n";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& row = rows[i];
                os << i;
                for (std::size_t d = 0; d < dim; ++d) {
                    os << ',' << real(row.mu[d]);
                }
                os << ',' << real(row.true_error) << ',' << real(row.error_bound) << ',' << real(row.effectivity)
                   << ',' << real(row.ratio);
                for (Eigen::Index k = 0; k < s; ++k) {
                    os << ',' << real(row.output_error[k]) << ',' << real(row.output_bound[k]);
                }
                os << ',' << (row.violation ? 1 : 0) << ",,,,\n";
            }
            os << "summary";
            for (std::size_t d = 0; d < dim; ++d) {
                os << ',';
            }
            os << ",,,," << real(max_ratio);
            for (Eigen::Index k = 0; k < s; ++k) {
                os << ",,";
            }
            os << ",," << real(eff_min) << ',' << real(eff_median) << ',' << real(eff_max) << ',' << violations
               << '\n';
        });
        fmt::print(io.out,
                   "test parameters = {}\neffectivity min / median / max = {} / {} / {}\n"
                   "max continuity/coercivity ratio = {}\nrigor violations = {}\n",
                   rows.size(), real(eff_min), real(eff_median), real(eff_max), real(max_ratio), violations);
        if (violations > 0) {
            fmt::print(io.err, "rigor violated at {} test parameters\n", violations);
            return kExitNumerical;
        }
        return kExitOk;
    });
}

int cmd_nwidth_demo(const fs::path& config_path, const CommandOptions& options, Streams io) {
    return guarded(io.err, [&]() -> int {
        const RunConfig config = load_config(config_path);
        require_type(config, ProblemType::AdvectionDemo, "nwidth-demo");
        const ProblemConfig& p = config.problem;
        const fs::path dir = output_directory(config, options);

        const NWidthReport report = advection_nwidth_demo(p.grid_n, p.time_samples, p.n_max);
        write_file(dir / "nwidth_report.csv", [&](std::ostream& os) { write_nwidth_csv(os, report); });
        const Scalar allowance = std::sqrt(1.0 / p.grid_n);
        std::vector<int> below;
        for (std::size_t i = 0; i < report.n_values.size(); ++i) {
            if (report.pod_upper[i] < (*report.analytic_lower)[i] - allowance) {
                below.push_back(report.n_values[i]);
            }
        }
        fmt::print(io.out, "advection: N = 1..{}, rows below lower bound - allowance = {}\n", p.n_max, below.size());
        if (!below.empty()) {
            fmt::print(io.err, "warning: pod_upper < 0.5 N^(-1/2) - sqrt(1/grid_n) at N = {}\n",
                       fmt::join(below, ", "));
        }
        if (report.n_values.size() >= 2) {
            fmt::print(io.out, "advection: log-log slope of pod_upper = {}\n", real(loglog_slope(report)));
        }

        const ContrastConfig c = p.contrast.value_or(ContrastConfig{});
        const TruthProblem thermal = build_thermal_block(c.blocks_x, c.blocks_y, c.cells_per_axis, c.mu_min, c.mu_max);
        const auto params = sample_training_set(thermal.domain(), RandomSampling{c.snapshots, c.seed});
        std::vector<Vector> snaps(params.size());
        parallel_for(params.size(), options.threads,
                     [&](std::size_t i) { snaps[i] = solve_truth(thermal, params[i]).coefficients; });
        const std::vector<Scalar> thermal_sigma = pod(snaps, thermal.inner_product(), 1).singular_values;
        const std::vector<Scalar>& advection_sigma = report.singular_values;

        const auto sigma_at = [](const std::vector<Scalar>& s, int n) {
            return static_cast<std::size_t>(n) <= s.size() ? s[static_cast<std::size_t>(n - 1)] : 0.0;
        };
        write_file(dir / "nwidth_contrast.csv", [&](std::ostream& os) {
            os << "N,sigma_thermal,sigma_advection,ratio_thermal,ratio_advection\n";
            for (int n = 1; n <= c.n_max; ++n) {
                const Scalar st = sigma_at(thermal_sigma, n);
                const Scalar sa = sigma_at(advection_sigma, n);
                os << n << ',' << real(st) << ',' << real(sa) << ',' << real(st / thermal_sigma.front()) << ','
                   << real(sa / advection_sigma.front()) << '\n';
            }
        });
        fmt::print(io.out, "contrast at N = {}: sigma_N/sigma_1 thermal = {}, advection = {}\n", c.n_max,
                   real(sigma_at(thermal_sigma, c.n_max) / thermal_sigma.front()),
                   real(sigma_at(advection_sigma, c.n_max) / advection_sigma.front()));
        return kExitOk;
    });
}

}  // namespace rbcert
