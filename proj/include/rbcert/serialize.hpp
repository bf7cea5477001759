#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rbcert/affine.hpp"
#include "rbcert/reduced.hpp"

namespace rbcert {

inline constexpr int kFormatVersion = 1;

using Json = nlohmann::json;

// Dense matrices are written as {"rows", "cols", "data"} with row-major data.
[[nodiscard]] Json matrix_to_json(const Matrix& m);
[[nodiscard]] Matrix matrix_from_json(const Json& j, const std::string& what);

[[nodiscard]] Json coefficient_to_json(const CoefficientFunction& c);
[[nodiscard]] CoefficientFunction coefficient_from_json(const Json& j);

/// Sparse triplets per term plus coefficient-kind tags.
[[nodiscard]] Json operator_to_json(const AffineOperator& op);
[[nodiscard]] AffineOperator operator_from_json(const Json& j);

[[nodiscard]] Json model_to_json(const ReducedModel& model);
/// Validates format version and every declared shape.
[[nodiscard]] ReducedModel model_from_json(const Json& j);

[[nodiscard]] Json basis_to_json(const ReducedBasis& basis);
[[nodiscard]] ReducedBasis basis_from_json(const Json& j);

[[nodiscard]] Json certificate_to_json(const Parameter& mu, const Vector& outputs, const Certificate& cert);

[[nodiscard]] Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);

}  // namespace rbcert
