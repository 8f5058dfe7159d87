#pragma once

// JSON encodings of the library types.
//
//   matrix        [[row], [row], ...]; a bare number is a 1x1 matrix
//   vector        [x, y, ...]; a bare number is a 1-vector
//   distribution  {"dim"?: n, "atoms": [[...], ...], "weights"?: [...]}
//   cost          {"kind": "quadratic", "W": matrix}
//                 {"kind": "squared_euclidean", "dim": n}
//                 {"kind": "power", "p": p, "scale"?: s}
//                 {"kind": "composed", "base": cost, "map": {"matrix": m, "offset"?: v}}
//   set           {"center": distribution, "radius": eps, "cost": cost, "exact"?: bool}
//   system        {"A": m, "B": m, "D"?: m, "prestabilize"?: "lqr"}
//   target        {"box": {"lo": v, "hi": v}} or {"A": m, "b": v}

#include <string>
#include <vector>

#include <json.hpp>

#include "otprop/ambiguity.hpp"
#include "otprop/drcvar.hpp"
#include "otprop/error.hpp"
#include "otprop/measures.hpp"
#include "otprop/systems.hpp"
#include "otprop/transport.hpp"

namespace otprop {

using Json = nlohmann::json;

/// Input does not follow the expected JSON layout.
class SchemaError : public Error {
 public:
  using Error::Error;
};

namespace json_io {

inline const Json& field(const Json& j, const char* key, const std::string& ctx) {
  if (!j.is_object()) throw SchemaError(ctx + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw SchemaError(ctx + ": missing field '" + key + "'");
  return *it;
}

inline bool has(const Json& j, const char* key) { return j.is_object() && j.contains(key); }

inline double number(const Json& j, const std::string& ctx) {
  if (!j.is_number()) throw SchemaError(ctx + ": expected a number");
  return j.get<double>();
}

inline int integer(const Json& j, const std::string& ctx) {
  if (!j.is_number_integer()) throw SchemaError(ctx + ": expected an integer");
  return j.get<int>();
}

inline std::string text(const Json& j, const std::string& ctx) {
  if (!j.is_string()) throw SchemaError(ctx + ": expected a string");
  return j.get<std::string>();
}

inline Vector vector_from(const Json& j, const std::string& ctx) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) throw SchemaError(ctx + ": expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], ctx);
  return v;
}

inline Matrix matrix_from(const Json& j, const std::string& ctx) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw SchemaError(ctx + ": expected a non-empty array of rows");
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = vector_from(j[r], ctx + " row " + std::to_string(r));
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(j.size()), row.size());
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      throw SchemaError(ctx + ": ragged matrix");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

inline Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.push_back(to_json(Vector(m.row(r).transpose())));
  return out;
}

/// Chronological sequence of vectors; each entry is a vector.
inline std::vector<Vector> sequence_from(const Json& j, const std::string& ctx) {
  if (!j.is_array()) throw SchemaError(ctx + ": expected an array");
  std::vector<Vector> out;
  for (std::size_t t = 0; t < j.size(); ++t) out.push_back(vector_from(j[t], ctx + "[" + std::to_string(t) + "]"));
  return out;
}

inline EmpiricalDistribution distribution_from(const Json& j, const std::string& ctx) {
  const Matrix points = matrix_from(field(j, "atoms", ctx), ctx + ".atoms");
  if (has(j, "dim") && integer(j["dim"], ctx + ".dim") != points.cols()) {
    throw SchemaError(ctx + ": atoms do not match dim");
  }
  Matrix atoms = points.transpose();
  if (!has(j, "weights")) return EmpiricalDistribution::uniform(std::move(atoms));
  const Vector w = vector_from(j["weights"], ctx + ".weights");
  if (w.size() != atoms.cols()) throw SchemaError(ctx + ": weights and atoms differ in count");
  return EmpiricalDistribution(std::move(atoms), w);
}

inline Json to_json(const EmpiricalDistribution& p) {
  return Json{{"dim", p.dim()}, {"atoms", to_json(Matrix(p.atoms().transpose()))}, {"weights", to_json(p.weights())}};
}

inline TransportCost cost_from(const Json& j, const std::string& ctx) {
  const auto kind = text(field(j, "kind", ctx), ctx + ".kind");
  if (kind == "quadratic") return TransportCost::quadratic(matrix_from(field(j, "W", ctx), ctx + ".W"));
  if (kind == "squared_euclidean") return TransportCost::squared_euclidean(integer(field(j, "dim", ctx), ctx + ".dim"));
  if (kind == "power") {
    const double scale = has(j, "scale") ? number(j["scale"], ctx + ".scale") : 1.0;
    return TransportCost::power(number(field(j, "p", ctx), ctx + ".p"), scale);
  }
  if (kind == "composed") {
    const auto base = cost_from(field(j, "base", ctx), ctx + ".base");
    const auto& map = field(j, "map", ctx);
    const Matrix m = matrix_from(field(map, "matrix", ctx + ".map"), ctx + ".map.matrix");
    const Vector b = has(map, "offset") ? vector_from(map["offset"], ctx + ".map.offset") : Vector(Vector::Zero(m.rows()));
    return TransportCost::composed(base, PointMap::affine(m, b));
  }
  throw SchemaError(ctx + ": unknown cost kind '" + kind + "'");
}

inline Json to_json(const TransportCost& c) {
  if (c.is_quadratic()) return Json{{"kind", "quadratic"}, {"W", to_json(c.as_quadratic().W)}};
  if (c.is_power()) return Json{{"kind", "power"}, {"p", c.as_power().p}, {"scale", c.as_power().scale}};
  const auto& mc = c.as_composed();
  Json out{{"kind", "composed"}, {"base", to_json(*mc.base)}};
  if (mc.pre_map.is_affine()) {
    out["map"] = Json{{"matrix", to_json(*mc.pre_map.matrix())}, {"offset", to_json(*mc.pre_map.offset())}};
  } else {
    out["map"] = Json{{"name", mc.pre_map.name()}};
  }
  return out;
}

inline OTAmbiguitySet set_from(const Json& j, const std::string& ctx) {
  auto center = distribution_from(field(j, "center", ctx), ctx + ".center");
  const double radius = number(field(j, "radius", ctx), ctx + ".radius");
  TransportCost cost = has(j, "cost") ? cost_from(j["cost"], ctx + ".cost") : TransportCost::squared_euclidean(center.dim());
  const bool exact = has(j, "exact") ? j["exact"].get<bool>() : true;
  return OTAmbiguitySet(std::move(center), radius, std::move(cost), exact);
}

inline Json to_json(const OTAmbiguitySet& s) {
  return Json{{"center", to_json(s.center)}, {"radius", s.radius}, {"cost", to_json(s.cost)}, {"exact", s.exact}};
}

inline LTISystem system_from(const Json& j, const std::string& ctx) {
  const Matrix a = matrix_from(field(j, "A", ctx), ctx + ".A");
  const Matrix b = matrix_from(field(j, "B", ctx), ctx + ".B");
  const Matrix d = has(j, "D") ? matrix_from(j["D"], ctx + ".D") : Matrix();
  LTISystem sys(a, b, d);
  if (has(j, "prestabilize")) {
    const auto how = text(j["prestabilize"], ctx + ".prestabilize");
    if (how == "lqr") return prestabilize_lqr(sys);
    if (how != "none") throw SchemaError(ctx + ".prestabilize: expected \"lqr\" or \"none\"");
  }
  return sys;
}

inline Json to_json(const LTISystem& s) { return Json{{"A", to_json(s.A)}, {"B", to_json(s.B)}, {"D", to_json(s.D)}}; }

inline PolyhedralTarget target_from(const Json& j, const std::string& ctx) {
  if (has(j, "box")) {
    const auto& box = j["box"];
    return PolyhedralTarget::box(vector_from(field(box, "lo", ctx + ".box"), ctx + ".box.lo"),
                                 vector_from(field(box, "hi", ctx + ".box"), ctx + ".box.hi"));
  }
  return PolyhedralTarget(matrix_from(field(j, "A", ctx), ctx + ".A"), vector_from(field(j, "b", ctx), ctx + ".b"));
}

inline Json to_json(const PolyhedralTarget& t) { return Json{{"A", to_json(t.a)}, {"b", to_json(t.b)}}; }

}  // namespace json_io
}  // namespace otprop
