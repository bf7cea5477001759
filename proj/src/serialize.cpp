#include "rbcert/serialize.hpp"

#include <fstream>
#include <sstream>

#include "rbcert/errors.hpp"

namespace rbcert {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const Json& field(const Json& j, const std::string& key, const std::string& what) {
    if (!j.is_object() || !j.contains(key)) {
        throw InvalidInput(what + ": missing field '" + key + "'");
    }
    return j.at(key);
}

Json vector_to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
    }
    return out;
}

Vector vector_from_json(const Json& j, const std::string& what, Eigen::Index expected = -1) {
    if (!j.is_array()) {
        throw InvalidInput(what + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            throw InvalidInput(what + ": non-numeric entry");
        }
        v[static_cast<Eigen::Index>(i)] = j[i].get<Scalar>();
    }
    if (expected >= 0 && v.size() != expected) {
        throw InvalidInput(what + ": expected length " + std::to_string(expected) + ", got " +
                           std::to_string(v.size()));
    }
    return v;
}

std::vector<Scalar> reals_from_json(const Json& j, const std::string& what) {
    const Vector v = vector_from_json(j, what);
    return {v.data(), v.data() + v.size()};
}

void expect_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw InvalidInput(what + ": expected shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                           ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
}

void check_header(const Json& j, const std::string& format) {
    if (field(j, "format", format).get<std::string>() != format) {
        throw InvalidInput("expected a '" + format + "' document");
    }
    const int version = field(j, "format_version", format).get<int>();
    if (version != kFormatVersion) {
        throw InvalidInput(format + ": unsupported format_version " + std::to_string(version));
    }
}

Json sparse_to_json(const SparseMatrix& a) {
    Json rows = Json::array();
    Json cols = Json::array();
    Json vals = Json::array();
    for (int k = 0; k < a.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(a, k); it; ++it) {
            rows.push_back(it.row());
            cols.push_back(it.col());
            vals.push_back(it.value());
        }
    }
    return {{"rows", a.rows()}, {"cols", a.cols()}, {"i", rows}, {"j", cols}, {"v", vals}};
}

SparseMatrix sparse_from_json(const Json& j, const std::string& what) {
    const auto rows = field(j, "rows", what).get<Eigen::Index>();
    const auto cols = field(j, "cols", what).get<Eigen::Index>();
    const Json& is = field(j, "i", what);
    const Json& js = field(j, "j", what);
    const Json& vs = field(j, "v", what);
    if (is.size() != js.size() || is.size() != vs.size()) {
        throw InvalidInput(what + ": triplet arrays differ in length");
    }
    std::vector<Triplet> t;
    t.reserve(is.size());
    for (std::size_t k = 0; k < is.size(); ++k) {
        const auto r = is[k].get<Eigen::Index>();
        const auto c = js[k].get<Eigen::Index>();
        if (r < 0 || r >= rows || c < 0 || c >= cols) {
            throw InvalidInput(what + ": triplet index out of range");
        }
        t.emplace_back(r, c, vs[k].get<Scalar>());
    }
    SparseMatrix a(rows, cols);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    return a;
}

}  // namespace

Json matrix_to_json(const Matrix& m) {
    Json data = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            data.push_back(m(r, c));
        }
    }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

static Matrix matrix_from_json_impl(const Json& j, const std::string& what) {
    const auto rows = field(j, "rows", what).get<Eigen::Index>();
    const auto cols = field(j, "cols", what).get<Eigen::Index>();
    if (rows < 0 || cols < 0) {
        throw InvalidInput(what + ": negative shape");
    }
    const Vector data = vector_from_json(field(j, "data", what), what + ".data", rows * cols);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = data[r * cols + c];
        }
    }
    return m;
}

Json coefficient_to_json(const CoefficientFunction& c) {
    return std::visit(
        overloaded{
            [](const ComponentCoefficient& k) { return Json{{"kind", "component"}, {"index", k.index}}; },
            [](const ConstantCoefficient& k) { return Json{{"kind", "constant"}, {"value", k.value}}; },
            [](const AffineCombinationCoefficient& k) {
                return Json{{"kind", "affine"}, {"offset", k.offset}, {"indices", k.indices}, {"weights", k.weights}};
            },
            [](const ProductCoefficient& k) {
                return Json{{"kind", "product"}, {"scale", k.scale}, {"indices", k.indices}};
            },
        },
        c.kind());
}

static CoefficientFunction coefficient_from_json_impl(const Json& j) {
    const std::string what = "coefficient";
    const auto kind = field(j, "kind", what).get<std::string>();
    if (kind == "component") {
        return ComponentCoefficient{field(j, "index", what).get<std::size_t>()};
    }
    if (kind == "constant") {
        return ConstantCoefficient{field(j, "value", what).get<Scalar>()};
    }
    if (kind == "affine") {
        return AffineCombinationCoefficient{field(j, "offset", what).get<Scalar>(),
                                            field(j, "indices", what).get<std::vector<std::size_t>>(),
                                            field(j, "weights", what).get<std::vector<Scalar>>()};
    }
    if (kind == "product") {
        return ProductCoefficient{field(j, "scale", what).get<Scalar>(),
                                  field(j, "indices", what).get<std::vector<std::size_t>>()};
    }
    throw InvalidInput("unknown coefficient kind '" + kind + "'");
}

Json operator_to_json(const AffineOperator& op) {
    Json terms = Json::array();
    for (std::size_t q = 0; q < op.num_terms(); ++q) {
        terms.push_back({{"index", q},
                         {"coefficient", coefficient_to_json(op.terms()[q].coefficient)},
                         {"matrix", sparse_to_json(op.matrix(q))}});
    }
    return {{"format", "rbcert.affine_operator"},
            {"format_version", kFormatVersion},
            {"parameter_dim", op.parameter_dim()},
            {"size", op.size()},
            {"terms", terms}};
}

static AffineOperator operator_from_json_impl(const Json& j) {
    check_header(j, "rbcert.affine_operator");
    std::vector<AffineTerm> terms;
    for (const auto& t : field(j, "terms", "operator")) {
        terms.push_back({coefficient_from_json(field(t, "coefficient", "operator term")),
                         sparse_from_json(field(t, "matrix", "operator term"), "operator term matrix")});
    }
    return AffineOperator(std::move(terms), field(j, "parameter_dim", "operator").get<std::size_t>());
}

Json model_to_json(const ReducedModel& model) {
    const auto n = model.basis_size();
    const auto q_terms = model.num_terms();
    Json terms = Json::array();
    for (std::size_t q = 0; q < q_terms; ++q) {
        terms.push_back({{"index", q},
                         {"coefficient", coefficient_to_json(model.coefficients[q])},
                         {"reduced_matrix", matrix_to_json(model.reduced_terms[q])}});
    }
    Json c_fa = Json::array();
    Json c_aa = Json::array();
    for (std::size_t q = 0; q < q_terms; ++q) {
        c_fa.push_back(vector_to_json(model.residual_gram.c_fA[q]));
        Json row = Json::array();
        for (std::size_t p = 0; p < q_terms; ++p) {
            row.push_back(matrix_to_json(model.residual_gram.c_AA[q][p]));
        }
        c_aa.push_back(std::move(row));
    }
    Json positive = Json::array();
    for (bool b : model.coercivity.positive) {
        positive.push_back(b);
    }
    Json j = {
        {"format", "rbcert.reduced_model"},
        {"format_version", kFormatVersion},
        {"shape",
         {{"basis_size", n},
          {"num_terms", q_terms},
          {"num_outputs", model.num_outputs()},
          {"parameter_dim", model.domain.dim()}}},
        {"domain", {{"lower", model.domain.lower()}, {"upper", model.domain.upper()}}},
        {"terms", terms},
        {"reduced_load", vector_to_json(model.reduced_load)},
        {"reduced_outputs", matrix_to_json(model.reduced_outputs)},
        {"residual_gram", {{"c_ff", model.residual_gram.c_ff}, {"c_fA", c_fa}, {"c_AA", c_aa}}},
        {"residual_factor", matrix_to_json(model.residual_factor)},
        {"residual_factor_low", matrix_to_json(model.residual_factor_low)},
        {"output_dual_norms", vector_to_json(model.output_dual_norms)},
        {"coercivity",
         {{"method", "min_theta"},
          {"mu_bar", model.coercivity.mu_bar.values()},
          {"c_ref", model.coercivity.c_ref},
          {"positive", positive}}},
        {"continuity", model.continuity},
    };
    if (model.parabolic) {
        const auto& pd = *model.parabolic;
        j["parabolic"] = {{"reduced_mass", matrix_to_json(pd.reduced_mass)},
                          {"initial_coordinates", vector_to_json(pd.initial_coordinates)},
                          {"initial_defect_mass", pd.initial_defect_mass}};
    } else {
        j["parabolic"] = nullptr;
    }
    return j;
}

static ReducedModel model_from_json_impl(const Json& j) {
    check_header(j, "rbcert.reduced_model");
    const Json& shape = field(j, "shape", "model");
    const auto n = field(shape, "basis_size", "model.shape").get<Eigen::Index>();
    const auto q_terms = field(shape, "num_terms", "model.shape").get<std::size_t>();
    const auto s = field(shape, "num_outputs", "model.shape").get<Eigen::Index>();
    const auto p = field(shape, "parameter_dim", "model.shape").get<std::size_t>();

    ReducedModel m;
    const Json& dom = field(j, "domain", "model");
    m.domain = ParameterDomain(reals_from_json(field(dom, "lower", "model.domain"), "model.domain.lower"),
                               reals_from_json(field(dom, "upper", "model.domain"), "model.domain.upper"));
    if (m.domain.dim() != p) {
        throw InvalidInput("model: domain dimension disagrees with shape.parameter_dim");
    }
    const Json& terms = field(j, "terms", "model");
    if (terms.size() != q_terms) {
        throw InvalidInput("model: term count disagrees with shape.num_terms");
    }
    for (std::size_t q = 0; q < q_terms; ++q) {
        const Json& t = terms[q];
        if (field(t, "index", "model.terms").get<std::size_t>() != q) {
            throw InvalidInput("model: terms are not stored in term order");
        }
        m.coefficients.push_back(coefficient_from_json(field(t, "coefficient", "model.terms")));
        m.reduced_terms.push_back(matrix_from_json(field(t, "reduced_matrix", "model.terms"), "reduced_matrix"));
        expect_shape(m.reduced_terms.back(), n, n, "reduced_matrix");
    }
    m.reduced_load = vector_from_json(field(j, "reduced_load", "model"), "reduced_load", n);
    m.reduced_outputs = matrix_from_json(field(j, "reduced_outputs", "model"), "reduced_outputs");
    expect_shape(m.reduced_outputs, s, n, "reduced_outputs");

    const Json& rg = field(j, "residual_gram", "model");
    m.residual_gram.c_ff = field(rg, "c_ff", "residual_gram").get<Scalar>();
    const Json& c_fa = field(rg, "c_fA", "residual_gram");
    const Json& c_aa = field(rg, "c_AA", "residual_gram");
    if (c_fa.size() != q_terms || c_aa.size() != q_terms) {
        throw InvalidInput("residual_gram: block count disagrees with shape.num_terms");
    }
    m.residual_gram.c_AA.resize(q_terms);
    for (std::size_t q = 0; q < q_terms; ++q) {
        m.residual_gram.c_fA.push_back(vector_from_json(c_fa[q], "c_fA", n));
        if (c_aa[q].size() != q_terms) {
            throw InvalidInput("residual_gram: c_AA row has wrong block count");
        }
        for (std::size_t r = 0; r < q_terms; ++r) {
            m.residual_gram.c_AA[q].push_back(matrix_from_json(c_aa[q][r], "c_AA"));
            expect_shape(m.residual_gram.c_AA[q].back(), n, n, "c_AA");
        }
    }

    const Json& par = field(j, "parabolic", "model");
    const Eigen::Index operands = 1 + static_cast<Eigen::Index>(q_terms) * n + (par.is_null() ? 0 : n);
    m.residual_factor = matrix_from_json(field(j, "residual_factor", "model"), "residual_factor");
    if (m.residual_factor.cols() != operands || m.residual_factor.rows() > operands) {
        throw InvalidInput("residual_factor: shape inconsistent with basis size and term count");
    }
    m.residual_factor_low = matrix_from_json(field(j, "residual_factor_low", "model"), "residual_factor_low");
    expect_shape(m.residual_factor_low, m.residual_factor.rows(), m.residual_factor.cols(), "residual_factor_low");
    m.output_dual_norms = vector_from_json(field(j, "output_dual_norms", "model"), "output_dual_norms", s);

    const Json& co = field(j, "coercivity", "model");
    if (field(co, "method", "coercivity").get<std::string>() != "min_theta") {
        throw InvalidInput("coercivity: only the min_theta method is supported");
    }
    m.coercivity.mu_bar = Parameter(reals_from_json(field(co, "mu_bar", "coercivity"), "mu_bar"));
    m.coercivity.c_ref = field(co, "c_ref", "coercivity").get<Scalar>();
    m.coercivity.positive = field(co, "positive", "coercivity").get<std::vector<bool>>();
    if (m.coercivity.positive.size() != q_terms || m.coercivity.mu_bar.size() != p) {
        throw InvalidInput("coercivity: sizes disagree with shape");
    }
    m.continuity = field(j, "continuity", "model").get<std::vector<Scalar>>();
    if (m.continuity.size() != q_terms) {
        throw InvalidInput("continuity: size disagrees with shape.num_terms");
    }
    if (!par.is_null()) {
        ParabolicData pd;
        pd.reduced_mass = matrix_from_json(field(par, "reduced_mass", "parabolic"), "reduced_mass");
        expect_shape(pd.reduced_mass, n, n, "reduced_mass");
        pd.initial_coordinates = vector_from_json(field(par, "initial_coordinates", "parabolic"),
                                                  "initial_coordinates", n);
        pd.initial_defect_mass = field(par, "initial_defect_mass", "parabolic").get<Scalar>();
        m.parabolic = std::move(pd);
    }
    return m;
}

Json basis_to_json(const ReducedBasis& basis) {
    Json params = Json::array();
    for (const auto& mu : basis.snapshot_parameters) {
        params.push_back(mu.values());
    }
    return {{"format", "rbcert.reduced_basis"},
            {"format_version", kFormatVersion},
            {"matrix", matrix_to_json(basis.matrix)},
            {"snapshot_parameters", params}};
}

static ReducedBasis basis_from_json_impl(const Json& j) {
    check_header(j, "rbcert.reduced_basis");
    ReducedBasis b;
    b.matrix = matrix_from_json(field(j, "matrix", "basis"), "basis.matrix");
    for (const auto& mu : field(j, "snapshot_parameters", "basis")) {
        b.snapshot_parameters.emplace_back(reals_from_json(mu, "snapshot_parameters"));
    }
    return b;
}

Json certificate_to_json(const Parameter& mu, const Vector& outputs, const Certificate& cert) {
    return {{"mu", mu.values()},
            {"outputs", vector_to_json(outputs)},
            {"error_bound", cert.error_bound},
            {"output_bounds", vector_to_json(cert.output_bound)},
            {"coercivity_lb", cert.coercivity_lb},
            {"residual_norm", cert.residual_dual_norm}};
}

ReducedModel model_from_json(const Json& j) {
    try {
        return model_from_json_impl(j);
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed document: ") + e.what());
    }
}

ReducedBasis basis_from_json(const Json& j) {
    try {
        return basis_from_json_impl(j);
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed document: ") + e.what());
    }
}

AffineOperator operator_from_json(const Json& j) {
    try {
        return operator_from_json_impl(j);
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed document: ") + e.what());
    }
}

CoefficientFunction coefficient_from_json(const Json& j) {
    try {
        return coefficient_from_json_impl(j);
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed document: ") + e.what());
    }
}

Matrix matrix_from_json(const Json& j, const std::string& what) {
    try {
        return matrix_from_json_impl(j, what);
    } catch (const Json::exception& e) {
        throw InvalidInput(std::string("malformed document: ") + e.what());
    }
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidInput("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw InvalidInput(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) {
        throw InvalidInput("cannot write " + path.string());
    }
    out << j.dump(1) << '\n';
}

}  // namespace rbcert
