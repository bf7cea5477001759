#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbcert/linalg.hpp"
#include "rbcert/truth.hpp"

namespace rbcert {

struct SnapshotSet {
    std::vector<Vector> vectors;
    SparseMatrix metric;
    std::string label;
};

struct NWidthReport {
    std::string label;
    std::vector<int> n_values;
    std::vector<Scalar> pod_upper;
    std::optional<std::vector<Scalar>> analytic_lower;
    std::vector<Scalar> singular_values;
};

/// L² inner product on cell averages of a uniform grid of [0, 1]: h·I.
[[nodiscard]] SparseMatrix cell_average_metric(int grid_n);

/// Cell averages of the indicator of [(n−1)/N, n/N]. grid_n must be a
/// multiple of big_n so the support aligns with cells.
[[nodiscard]] Vector psi_function(int big_n, int n, int grid_n);

/// Whether u_1(n/N) − u_1((n−1)/N) equals ψ_{N,n} to 1e-14 (max norm).
[[nodiscard]] bool psi_in_manifold_check(int big_n, int n, int grid_n);

/// Worst-case X-norm projection defect onto the first N POD modes, N = 1..n_max.
/// Requires n_max ≤ numerical rank of the set.
[[nodiscard]] NWidthReport measure_widths(const SnapshotSet& set, int n_max);

/// Front samples u_1(t_i), t_i = i/(m−1), compared against ½·N^{−1/2}.
[[nodiscard]] NWidthReport advection_nwidth_demo(int grid_n, int m_time_samples, int n_max);

/// Same machinery on thermal-block truth solutions at the given parameters.
[[nodiscard]] NWidthReport thermal_block_widths(const TruthProblem& problem,
                                                std::span<const Parameter> parameters, int n_max);

/// ½·N^{−1/2}
[[nodiscard]] Scalar advection_lower_bound(int n);

/// Least-squares slope of log(pod_upper) against log(N).
[[nodiscard]] Scalar loglog_slope(const NWidthReport& report);

/// Columns N, pod_upper, analytic_lower, sigma_N (empty cells when absent).
void write_nwidth_csv(std::ostream& os, const NWidthReport& report);

}  // namespace rbcert
