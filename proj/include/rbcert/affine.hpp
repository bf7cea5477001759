#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "rbcert/linalg.hpp"

namespace rbcert {

/// A point μ in a parameter box. Plain value type; admissibility is checked by
/// the owning ParameterDomain.
class Parameter {
public:
    Parameter() = default;
    explicit Parameter(std::vector<Scalar> values) : values_(std::move(values)) {}

    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] Scalar operator[](std::size_t i) const { return values_.at(i); }
    [[nodiscard]] const std::vector<Scalar>& values() const noexcept { return values_; }

    [[nodiscard]] Parameter scaled(Scalar factor) const;

    bool operator==(const Parameter&) const = default;

private:
    std::vector<Scalar> values_;
};

/// Axis-aligned box [lower, upper] ⊂ R^P.
class ParameterDomain {
public:
    ParameterDomain() = default;
    ParameterDomain(std::vector<Scalar> lower, std::vector<Scalar> upper);

    /// Box [lo, hi]^dim.
    static ParameterDomain cube(std::size_t dim, Scalar lo, Scalar hi);

    [[nodiscard]] std::size_t dim() const noexcept { return lower_.size(); }
    [[nodiscard]] const std::vector<Scalar>& lower() const noexcept { return lower_; }
    [[nodiscard]] const std::vector<Scalar>& upper() const noexcept { return upper_; }

    [[nodiscard]] bool contains(const Parameter& mu) const noexcept;

    /// Throws InvalidInput on dimension mismatch or when mu leaves the box.
    void check(const Parameter& mu) const;

    /// Validated construction of a parameter inside this domain.
    [[nodiscard]] Parameter make(std::vector<Scalar> values) const;

    bool operator==(const ParameterDomain&) const = default;

private:
    std::vector<Scalar> lower_;
    std::vector<Scalar> upper_;
};

/// θ(μ) = μ_i
struct ComponentCoefficient {
    std::size_t index = 0;
    bool operator==(const ComponentCoefficient&) const = default;
};

/// θ(μ) = c
struct ConstantCoefficient {
    Scalar value = 1.0;
    bool operator==(const ConstantCoefficient&) const = default;
};

/// θ(μ) = offset + Σ_j weights[j]·μ_{indices[j]}
struct AffineCombinationCoefficient {
    Scalar offset = 0.0;
    std::vector<std::size_t> indices;
    std::vector<Scalar> weights;
    bool operator==(const AffineCombinationCoefficient&) const = default;
};

/// θ(μ) = scale·Π_j μ_{indices[j]}
struct ProductCoefficient {
    Scalar scale = 1.0;
    std::vector<std::size_t> indices;
    bool operator==(const ProductCoefficient&) const = default;
};

/// Closed family of parameter functions θ_q. Being a closed enumeration keeps
/// every model exactly serializable.
class CoefficientFunction {
public:
    using Kind = std::variant<ComponentCoefficient, ConstantCoefficient,
                              AffineCombinationCoefficient, ProductCoefficient>;

    CoefficientFunction() = default;
    CoefficientFunction(Kind kind);  // NOLINT(google-explicit-constructor)
    template <class K>
        requires std::is_constructible_v<Kind, K>
    CoefficientFunction(K kind) : CoefficientFunction(Kind(std::move(kind))) {}  // NOLINT

    static CoefficientFunction component(std::size_t index) { return ComponentCoefficient{index}; }
    static CoefficientFunction constant(Scalar c) { return ConstantCoefficient{c}; }

    [[nodiscard]] Scalar operator()(const Parameter& mu) const;

    /// Conservative check that θ > 0 on the whole box (exact for component,
    /// constant and affine kinds, sufficient for products).
    [[nodiscard]] bool positive_on(const ParameterDomain& domain) const;

    /// Largest component index referenced + 1 (0 for constants).
    [[nodiscard]] std::size_t required_dim() const;

    [[nodiscard]] const Kind& kind() const noexcept { return kind_; }

    bool operator==(const CoefficientFunction&) const = default;

private:
    Kind kind_ = ConstantCoefficient{1.0};
};

struct AffineTerm {
    CoefficientFunction coefficient;
    SparseMatrix matrix;
};

/// A(μ) = Σ_q θ_q(μ) A_q with fixed, significant term order.
class AffineOperator {
public:
    AffineOperator() = default;
    AffineOperator(std::vector<AffineTerm> terms, std::size_t parameter_dim);

    [[nodiscard]] std::size_t num_terms() const noexcept { return terms_.size(); }
    [[nodiscard]] Eigen::Index size() const noexcept;
    [[nodiscard]] std::size_t parameter_dim() const noexcept { return parameter_dim_; }
    [[nodiscard]] const std::vector<AffineTerm>& terms() const noexcept { return terms_; }
    [[nodiscard]] const SparseMatrix& matrix(std::size_t q) const { return terms_.at(q).matrix; }
    [[nodiscard]] std::vector<CoefficientFunction> coefficients() const;

private:
    std::vector<AffineTerm> terms_;
    std::size_t parameter_dim_ = 0;
};

/// (θ_1(μ), …, θ_Q(μ)) for an arbitrary coefficient list.
[[nodiscard]] Vector evaluate_coefficients(std::span<const CoefficientFunction> coefficients,
                                           const Parameter& mu);
[[nodiscard]] Vector evaluate_coefficients(const AffineOperator& op, const Parameter& mu);

/// Σ_q θ_q(μ) A_q.
[[nodiscard]] SparseMatrix assemble(const AffineOperator& op, const Parameter& mu);

struct UniformGrid {
    std::size_t points_per_axis = 2;
};

struct RandomSampling {
    std::size_t count = 1;
    std::uint64_t seed = 0;
};

using SamplingStrategy = std::variant<UniformGrid, RandomSampling>;

/// Grid samples are ordered with the first component varying fastest.
/// Random samples are uniform in the box and bit-reproducible from the seed.
[[nodiscard]] std::vector<Parameter> sample_training_set(const ParameterDomain& domain,
                                                         const SamplingStrategy& strategy);

}  // namespace rbcert
