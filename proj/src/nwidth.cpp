#include "rbcert/nwidth.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include <fmt/format.h>

#include "rbcert/errors.hpp"
#include "rbcert/greedy.hpp"

namespace rbcert {

namespace {

std::string real(Scalar v) {
    return fmt::format("{:.17g}", v);
}

}  // namespace

SparseMatrix cell_average_metric(int grid_n) {
    if (grid_n < 1) {
        throw InvalidInput("grid needs at least one cell");
    }
    SparseMatrix x(grid_n, grid_n);
    x.reserve(Eigen::VectorXi::Constant(grid_n, 1));
    const Scalar h = 1.0 / grid_n;
    for (int i = 0; i < grid_n; ++i) {
        x.insert(i, i) = h;
    }
    x.makeCompressed();
    return x;
}

Vector psi_function(int big_n, int n, int grid_n) {
    if (big_n < 1 || n < 1 || n > big_n) {
        throw InvalidInput("psi needs 1 <= n <= N");
    }
    if (grid_n < big_n || grid_n % big_n != 0) {
        throw InvalidInput("psi needs grid_n to be a positive multiple of N (aligned supports)");
    }
    const int width = grid_n / big_n;
    Vector psi = Vector::Zero(grid_n);
    psi.segment((n - 1) * width, width).setOnes();
    return psi;
}

bool psi_in_manifold_check(int big_n, int n, int grid_n) {
    const Vector psi = psi_function(big_n, n, grid_n);
    const std::vector<Scalar> times{static_cast<Scalar>(n - 1) / big_n, static_cast<Scalar>(n) / big_n};
    const auto u = advection_snapshots(1.0, grid_n, times);
    return (u[1] - u[0] - psi).cwiseAbs().maxCoeff() <= 1e-14;
}

NWidthReport measure_widths(const SnapshotSet& set, int n_max) {
    if (set.vectors.empty()) {
        throw InvalidInput("snapshot set is empty");
    }
    const Eigen::Index dim = set.vectors.front().size();
    for (const auto& v : set.vectors) {
        if (v.size() != dim) {
            throw InvalidInput("snapshot set vectors differ in length");
        }
    }
    if (n_max < 1) {
        throw InvalidInput("n_max must be >= 1");
    }
    const PODResult p = pod(set.vectors, set.metric, static_cast<std::size_t>(n_max));
    if (p.modes.cols() < n_max) {
        throw InvalidInput("n_max = " + std::to_string(n_max) + " exceeds the numerical rank " +
                           std::to_string(p.modes.cols()) + " of the snapshot set");
    }
    NWidthReport report;
    report.label = set.label;
    report.singular_values = p.singular_values;
    report.n_values.resize(static_cast<std::size_t>(n_max));
    report.pod_upper.assign(static_cast<std::size_t>(n_max), 0.0);
    for (int k = 0; k < n_max; ++k) {
        report.n_values[static_cast<std::size_t>(k)] = k + 1;
    }
    const Matrix xmodes = set.metric * p.modes;
    for (const auto& s : set.vectors) {
        const Vector coeffs = xmodes.transpose() * s;
        Vector defect = s;
        for (int k = 0; k < n_max; ++k) {
            defect -= coeffs[k] * p.modes.col(k);
            auto& worst = report.pod_upper[static_cast<std::size_t>(k)];
            worst = std::max(worst, x_norm(set.metric, defect));
        }
    }
    return report;
}

Scalar advection_lower_bound(int n) {
    return 0.5 / std::sqrt(static_cast<Scalar>(n));
}

NWidthReport advection_nwidth_demo(int grid_n, int m_time_samples, int n_max) {
    if (n_max < 1 || grid_n < 2 * n_max) {
        throw InvalidInput("advection demo needs grid_n >= 2*n_max and n_max >= 1");
    }
    if (m_time_samples < grid_n) {
        throw InvalidInput("advection demo needs time_samples >= grid_n");
    }
    std::vector<Scalar> times(static_cast<std::size_t>(m_time_samples));
    for (int i = 0; i < m_time_samples; ++i) {
        times[static_cast<std::size_t>(i)] = static_cast<Scalar>(i) / (m_time_samples - 1);
    }
    SnapshotSet set{advection_snapshots(1.0, grid_n, times), cell_average_metric(grid_n), "advection"};
    NWidthReport report = measure_widths(set, n_max);
    std::vector<Scalar> lower;
    for (int n : report.n_values) {
        lower.push_back(advection_lower_bound(n));
    }
    report.analytic_lower = std::move(lower);
    return report;
}

NWidthReport thermal_block_widths(const TruthProblem& problem, std::span<const Parameter> parameters,
                                  int n_max) {
    SnapshotSet set{{}, problem.inner_product(), "thermal_block"};
    set.vectors.reserve(parameters.size());
    for (const auto& mu : parameters) {
        set.vectors.push_back(solve_truth(problem, mu).coefficients);
    }
    return measure_widths(set, n_max);
}

Scalar loglog_slope(const NWidthReport& report) {
    const std::size_t count = report.n_values.size();
    if (count < 2) {
        throw InvalidInput("slope needs at least two points");
    }
    Scalar sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const Scalar lx = std::log(static_cast<Scalar>(report.n_values[i]));
        const Scalar ly = std::log(report.pod_upper[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const auto m = static_cast<Scalar>(count);
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void write_nwidth_csv(std::ostream& os, const NWidthReport& report) {
    os << "N,pod_upper,analytic_lower,sigma_N\n";
    for (std::size_t i = 0; i < report.n_values.size(); ++i) {
        const int n = report.n_values[i];
        os << n << ',' << real(report.pod_upper[i]) << ',';
        if (report.analytic_lower) {
            os << real((*report.analytic_lower)[i]);
        }
        os << ',';
        if (static_cast<std::size_t>(n) <= report.singular_values.size()) {
            os << real(report.singular_values[static_cast<std::size_t>(n - 1)]);
        }
        os << '\n';
    }
}

}  // namespace rbcert
