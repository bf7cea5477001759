#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rbcert/affine.hpp"
#include "rbcert/serialize.hpp"

namespace rbcert {

enum class ProblemType { ThermalBlock, ParabolicThermal, AdvectionDemo };

[[nodiscard]] const char* to_string(ProblemType type) noexcept;

/// Thermal-block snapshots used as the smooth-manifold contrast of the
/// advection N-width demo.
struct ContrastConfig {
    int blocks_x = 2;
    int blocks_y = 2;
    int cells_per_axis = 40;
    Scalar mu_min = 0.1;
    Scalar mu_max = 10.0;
    std::size_t snapshots = 200;
    std::uint64_t seed = 1;
    int n_max = 30;
};

struct ProblemConfig {
    ProblemType type = ProblemType::ThermalBlock;
    int blocks_x = 2;
    int blocks_y = 2;
    int cells_per_axis = 100;
    Scalar mu_min = 0.1;
    Scalar mu_max = 10.0;
    // parabolic_thermal
    Scalar dt = 0.02;
    Scalar t_final = 1.0;
    Scalar initial = 0.0;  // u⁰ = initial at every free node
    Scalar source = 1.0;   // f scaled by source
    // advection_demo
    int grid_n = 256;
    int time_samples = 512;
    int n_max = 32;
    std::optional<ContrastConfig> contrast;
};

struct GreedySection {
    SamplingStrategy training = UniformGrid{5};
    std::size_t max_basis_size = 40;
    Scalar target_error = 1e-6;
    std::size_t pod_modes_per_iter = 1;
    std::optional<std::vector<Scalar>> seed_parameter;
};

struct OutputSection {
    std::filesystem::path directory = "out";
    int precision = 17;
};

/// Test set for cmd_validate; `use_training` reuses the greedy training set.
struct ValidationSection {
    SamplingStrategy strategy = RandomSampling{100, 7};
    bool use_training = false;
};

struct RunConfig {
    ProblemConfig problem;
    GreedySection greedy;
    OutputSection output;
    ValidationSection validation;
};

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// InvalidInput naming the offending field path.
[[nodiscard]] RunConfig parse_config(const Json& j);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

}  // namespace rbcert
