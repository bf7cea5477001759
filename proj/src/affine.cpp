#include "rbcert/affine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "rbcert/errors.hpp"

namespace rbcert {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Scalar component_of(const Parameter& mu, std::size_t i) {
    if (i >= mu.size()) {
        throw InvalidInput("coefficient references parameter component " + std::to_string(i) +
                           " but parameter has dimension " + std::to_string(mu.size()));
    }
    return mu[i];
}

// Uniform double in [0, 1) from the top 53 bits, independent of the standard
// library's distribution implementation.
Scalar unit_uniform(std::mt19937_64& rng) {
    return static_cast<Scalar>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

Parameter Parameter::scaled(Scalar factor) const {
    std::vector<Scalar> v = values_;
    for (auto& x : v) {
        x *= factor;
    }
    return Parameter(std::move(v));
}

ParameterDomain::ParameterDomain(std::vector<Scalar> lower, std::vector<Scalar> upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty()) {
        throw InvalidInput("parameter domain must have dimension >= 1");
    }
    if (lower_.size() != upper_.size()) {
        throw InvalidInput("parameter domain bounds have different lengths");
    }
    for (std::size_t i = 0; i < lower_.size(); ++i) {
        if (!std::isfinite(lower_[i]) || !std::isfinite(upper_[i]) || lower_[i] > upper_[i]) {
            throw InvalidInput("parameter domain bound " + std::to_string(i) +
                               " is not a finite interval lower <= upper");
        }
    }
}

ParameterDomain ParameterDomain::cube(std::size_t dim, Scalar lo, Scalar hi) {
    return ParameterDomain(std::vector<Scalar>(dim, lo), std::vector<Scalar>(dim, hi));
}

bool ParameterDomain::contains(const Parameter& mu) const noexcept {
    if (mu.size() != dim()) {
        return false;
    }
    for (std::size_t i = 0; i < dim(); ++i) {
        const Scalar v = mu.values()[i];
        if (!(v >= lower_[i] && v <= upper_[i])) {
            return false;
        }
    }
    return true;
}

void ParameterDomain::check(const Parameter& mu) const {
    if (mu.size() != dim()) {
        throw InvalidInput("parameter has dimension " + std::to_string(mu.size()) +
                           ", domain expects " + std::to_string(dim()));
    }
    for (std::size_t i = 0; i < dim(); ++i) {
        const Scalar v = mu.values()[i];
        if (!(v >= lower_[i] && v <= upper_[i])) {
            throw InvalidInput("parameter component " + std::to_string(i) + " = " +
                               std::to_string(v) + " outside [" + std::to_string(lower_[i]) +
                               ", " + std::to_string(upper_[i]) + "]");
        }
    }
}

Parameter ParameterDomain::make(std::vector<Scalar> values) const {
    Parameter mu(std::move(values));
    check(mu);
    return mu;
}

CoefficientFunction::CoefficientFunction(Kind kind) : kind_(std::move(kind)) {
    if (const auto* a = std::get_if<AffineCombinationCoefficient>(&kind_)) {
        if (a->indices.size() != a->weights.size()) {
            throw InvalidInput("affine coefficient: indices and weights differ in length");
        }
    }
}

Scalar CoefficientFunction::operator()(const Parameter& mu) const {
    return std::visit(
        overloaded{
            [&](const ComponentCoefficient& c) { return component_of(mu, c.index); },
            [&](const ConstantCoefficient& c) { return c.value; },
            [&](const AffineCombinationCoefficient& c) {
                Scalar v = c.offset;
                for (std::size_t j = 0; j < c.indices.size(); ++j) {
                    v += c.weights[j] * component_of(mu, c.indices[j]);
                }
                return v;
            },
            [&](const ProductCoefficient& c) {
                Scalar v = c.scale;
                for (auto i : c.indices) {
                    v *= component_of(mu, i);
                }
                return v;
            },
        },
        kind_);
}

bool CoefficientFunction::positive_on(const ParameterDomain& domain) const {
    if (required_dim() > domain.dim()) {
        return false;
    }
    const auto& lo = domain.lower();
    const auto& hi = domain.upper();
    return std::visit(
        overloaded{
            [&](const ComponentCoefficient& c) { return lo[c.index] > 0.0; },
            [&](const ConstantCoefficient& c) { return c.value > 0.0; },
            [&](const AffineCombinationCoefficient& c) {
                // The minimum of an affine function over a box sits at a corner.
                Scalar v = c.offset;
                for (std::size_t j = 0; j < c.indices.size(); ++j) {
                    const Scalar w = c.weights[j];
                    v += std::min(w * lo[c.indices[j]], w * hi[c.indices[j]]);
                }
                return v > 0.0;
            },
            [&](const ProductCoefficient& c) {
                return c.scale > 0.0 && std::all_of(c.indices.begin(), c.indices.end(),
                                                    [&](std::size_t i) { return lo[i] > 0.0; });
            },
        },
        kind_);
}

std::size_t CoefficientFunction::required_dim() const {
    auto max_plus_one = [](const std::vector<std::size_t>& idx) {
        std::size_t m = 0;
        for (auto i : idx) {
            m = std::max(m, i + 1);
        }
        return m;
    };
    return std::visit(overloaded{
                          [](const ComponentCoefficient& c) { return c.index + 1; },
                          [](const ConstantCoefficient&) { return std::size_t{0}; },
                          [&](const AffineCombinationCoefficient& c) { return max_plus_one(c.indices); },
                          [&](const ProductCoefficient& c) { return max_plus_one(c.indices); },
                      },
                      kind_);
}

AffineOperator::AffineOperator(std::vector<AffineTerm> terms, std::size_t parameter_dim)
    : terms_(std::move(terms)), parameter_dim_(parameter_dim) {
    if (terms_.empty()) {
        throw InvalidInput("affine operator needs at least one term");
    }
    const auto n = terms_.front().matrix.rows();
    for (std::size_t q = 0; q < terms_.size(); ++q) {
        const auto& a = terms_[q].matrix;
        if (a.rows() != n || a.cols() != n) {
            throw InvalidInput("affine term " + std::to_string(q) + " has shape " +
                               std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                               ", expected " + std::to_string(n) + "x" + std::to_string(n));
        }
        if (terms_[q].coefficient.required_dim() > parameter_dim_) {
            throw InvalidInput("affine term " + std::to_string(q) +
                               " references a parameter component beyond the parameter dimension");
        }
    }
}

Eigen::Index AffineOperator::size() const noexcept {
    return terms_.empty() ? 0 : terms_.front().matrix.rows();
}

std::vector<CoefficientFunction> AffineOperator::coefficients() const {
    std::vector<CoefficientFunction> out;
    out.reserve(terms_.size());
    for (const auto& t : terms_) {
        out.push_back(t.coefficient);
    }
    return out;
}

Vector evaluate_coefficients(std::span<const CoefficientFunction> coefficients,
                             const Parameter& mu) {
    Vector theta(static_cast<Eigen::Index>(coefficients.size()));
    for (std::size_t q = 0; q < coefficients.size(); ++q) {
        theta[static_cast<Eigen::Index>(q)] = coefficients[q](mu);
    }
    return theta;
}

Vector evaluate_coefficients(const AffineOperator& op, const Parameter& mu) {
    if (mu.size() != op.parameter_dim()) {
        throw InvalidInput("parameter has dimension " + std::to_string(mu.size()) +
                           ", operator expects " + std::to_string(op.parameter_dim()));
    }
    const auto coeffs = op.coefficients();
    return evaluate_coefficients(coeffs, mu);
}

SparseMatrix assemble(const AffineOperator& op, const Parameter& mu) {
    const Vector theta = evaluate_coefficients(op, mu);
    SparseMatrix result(op.size(), op.size());
    for (std::size_t q = 0; q < op.num_terms(); ++q) {
        result += theta[static_cast<Eigen::Index>(q)] * op.matrix(q);
    }
    result.makeCompressed();
    return result;
}

std::vector<Parameter> sample_training_set(const ParameterDomain& domain,
                                           const SamplingStrategy& strategy) {
    const std::size_t dim = domain.dim();
    if (dim == 0) {
        throw InvalidInput("cannot sample an empty parameter domain");
    }
    std::vector<Parameter> out;
    if (const auto* grid = std::get_if<UniformGrid>(&strategy)) {
        const std::size_t k = grid->points_per_axis;
        if (k < 2) {
            throw InvalidInput("uniform grid needs at least 2 points per axis");
        }
        std::size_t total = 1;
        for (std::size_t d = 0; d < dim; ++d) {
            total *= k;
        }
        out.reserve(total);
        std::vector<std::size_t> idx(dim, 0);
        for (std::size_t s = 0; s < total; ++s) {
            std::vector<Scalar> v(dim);
            for (std::size_t d = 0; d < dim; ++d) {
                const Scalar lo = domain.lower()[d];
                const Scalar hi = domain.upper()[d];
                v[d] = idx[d] + 1 == k ? hi
                                       : lo + (hi - lo) * static_cast<Scalar>(idx[d]) /
                                                  static_cast<Scalar>(k - 1);
            }
            out.emplace_back(std::move(v));
            for (std::size_t d = 0; d < dim; ++d) {
                if (++idx[d] < k) {
                    break;
                }
                idx[d] = 0;
            }
        }
        return out;
    }
    const auto& random = std::get<RandomSampling>(strategy);
    if (random.count == 0) {
        throw InvalidInput("random sampling needs at least one sample");
    }
    std::mt19937_64 rng(random.seed);
    out.reserve(random.count);
    for (std::size_t s = 0; s < random.count; ++s) {
        std::vector<Scalar> v(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            const Scalar lo = domain.lower()[d];
            const Scalar hi = domain.upper()[d];
            v[d] = lo + (hi - lo) * unit_uniform(rng);
        }
        out.emplace_back(std::move(v));
    }
    return out;
}

}  // namespace rbcert
