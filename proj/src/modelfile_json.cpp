#include "iiswb/modelfile.hpp"

#include <nlohmann/json.hpp>

namespace iiswb {

namespace {

using nlohmann::ordered_json;

struct SchemaError {
  std::string message;
};

SourceSpan span_at(std::string_view text, std::size_t byte) {
  SourceSpan span{1, 1, 1};
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') { ++span.line; span.column = 1; }
    else { ++span.column; }
  }
  return span;
}

const ordered_json& field(const ordered_json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw SchemaError{where + ": missing \"" + key + "\""};
  return obj.at(key);
}

std::string text_field(const ordered_json& obj, const char* key, const std::string& where, bool required = true) {
  if (!required && (!obj.contains(key) || obj.at(key).is_null())) return {};
  const auto& v = field(obj, key, where);
  if (!v.is_string()) throw SchemaError{where + ": \"" + key + "\" must be a string"};
  return v.get<std::string>();
}

Rational number_field(const ordered_json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (!v.is_string()) throw SchemaError{where + ": numbers must be strings such as \"7/2\""};
  auto value = parse_rational(v.get<std::string>());
  if (!value) throw SchemaError{where + ": malformed number \"" + v.get<std::string>() + "\""};
  return *value;
}

Coefficient read_coefficient(const ordered_json& v, const std::string& where) {
  if (!v.is_object()) throw SchemaError{where + ": coefficient must be an object"};
  if (v.contains("literal")) return Literal{number_field(v.at("literal"), where)};
  const std::string param = text_field(v, "param", where);
  if (v.contains("factor")) return ScaledParam{number_field(v.at("factor"), where), param};
  return ParamRef{param};
}

ordered_json write_coefficient(const Coefficient& coef) {
  if (const auto* lit = std::get_if<Literal>(&coef)) return {{"literal", to_string(lit->value)}};
  if (const auto* ref = std::get_if<ParamRef>(&coef)) return {{"param", ref->name}};
  const auto& scaled = std::get<ScaledParam>(coef);
  return {{"param", scaled.name}, {"factor", to_string(scaled.factor)}};
}

std::vector<Term> read_terms(const ordered_json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError{where + ": \"terms\" must be an array"};
  std::vector<Term> terms;
  for (const auto& t : v) {
    terms.push_back({text_field(t, "var", where), read_coefficient(field(t, "coef", where), where)});
  }
  return terms;
}

ordered_json write_terms(const std::vector<Term>& terms) {
  ordered_json out = ordered_json::array();
  for (const auto& t : terms) out.push_back({{"var", t.var}, {"coef", write_coefficient(t.coef)}});
  return out;
}

Sense read_sense(const std::string& s, const std::string& where) {
  if (s == "<=") return Sense::Le;
  if (s == ">=") return Sense::Ge;
  if (s == "=") return Sense::Eq;
  throw SchemaError{where + ": sense must be \"<=\", \">=\" or \"=\""};
}

const char* sense_text(Sense s) { return s == Sense::Le ? "<=" : s == Sense::Ge ? ">=" : "="; }

Model read_model(const ordered_json& doc) {
  if (!doc.is_object()) throw SchemaError{"document must be an object"};
  Model m;
  m.name = doc.contains("name") ? text_field(doc, "name", "model") : std::string("model");
  const auto& params = field(doc, "params", "model");
  const auto& vars = field(doc, "vars", "model");
  const auto& constraints = field(doc, "constraints", "model");
  if (!params.is_array() || !vars.is_array() || !constraints.is_array())
    throw SchemaError{"model: \"params\", \"vars\" and \"constraints\" must be arrays"};

  for (const auto& p : params) {
    const std::string name = text_field(p, "name", "param");
    const std::string where = "param " + name;
    bool is_mutable = false;
    if (p.contains("mutable")) {
      if (!p.at("mutable").is_boolean()) throw SchemaError{where + ": \"mutable\" must be a boolean"};
      is_mutable = p.at("mutable").get<bool>();
    }
    m.params.push_back({name, number_field(field(p, "value", where), where), is_mutable,
                        text_field(p, "description", where, false)});
  }
  for (const auto& v : vars) {
    VarDef def;
    def.name = text_field(v, "name", "var");
    const std::string where = "var " + def.name;
    const std::string kind = v.contains("kind") ? text_field(v, "kind", where) : std::string("continuous");
    if (kind == "integer") def.kind = VarKind::Integer;
    else if (kind != "continuous") throw SchemaError{where + ": kind must be \"continuous\" or \"integer\""};
    if (v.contains("lower") && !v.at("lower").is_null()) def.lower = number_field(v.at("lower"), where);
    if (v.contains("upper") && !v.at("upper").is_null()) def.upper = number_field(v.at("upper"), where);
    def.description = text_field(v, "description", where, false);
    m.vars.push_back(std::move(def));
  }
  for (const auto& c : constraints) {
    Constraint con;
    con.name = text_field(c, "name", "constraint");
    const std::string where = "constraint " + con.name;
    con.terms = read_terms(field(c, "terms", where), where);
    con.sense = read_sense(text_field(c, "sense", where), where);
    con.rhs = c.contains("rhs") ? read_coefficient(c.at("rhs"), where) : Coefficient{Literal{0}};
    con.description = text_field(c, "description", where, false);
    m.constraints.push_back(std::move(con));
  }
  if (doc.contains("objective") && !doc.at("objective").is_null()) {
    const auto& o = doc.at("objective");
    const std::string sense = text_field(o, "sense", "objective");
    if (sense != "min" && sense != "max") throw SchemaError{"objective: sense must be \"min\" or \"max\""};
    m.objective = Objective{sense == "max" ? ObjectiveSense::Maximize : ObjectiveSense::Minimize,
                            read_terms(field(o, "terms", "objective"), "objective")};
  }
  return m;
}

}  // namespace

ParseResult parse_structured(std::string_view document) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(document);
  } catch (const ordered_json::parse_error& e) {
    return std::vector<ParseError>{{span_at(document, e.byte == 0 ? 0 : e.byte - 1), ParseError::Kind::Syntax, e.what()}};
  }
  Model model;
  try {
    model = read_model(doc);
  } catch (const SchemaError& e) {
    return std::vector<ParseError>{{{1, 1, 0}, ParseError::Kind::Resolve, e.message}};
  }
  std::vector<ParseError> errors;
  for (const auto& v : validate(model)) {
    errors.push_back({{1, 1, 0},
                      v.rule == Violation::Rule::DuplicateName ? ParseError::Kind::DuplicateName : ParseError::Kind::Resolve,
                      v.message});
  }
  if (!errors.empty()) return errors;
  return model;
}

namespace detail {

std::string serialize_structured(const Model& model) {
  ordered_json doc;
  doc["name"] = model.name;
  doc["params"] = ordered_json::array();
  for (const auto& p : model.params) {
    ordered_json j{{"name", p.name}, {"value", to_string(p.value)}, {"mutable", p.is_mutable}};
    if (!p.description.empty()) j["description"] = p.description;
    doc["params"].push_back(std::move(j));
  }
  doc["vars"] = ordered_json::array();
  for (const auto& v : model.vars) {
    ordered_json j{{"name", v.name}, {"kind", v.kind == VarKind::Integer ? "integer" : "continuous"}};
    j["lower"] = v.lower ? ordered_json(to_string(*v.lower)) : ordered_json(nullptr);
    j["upper"] = v.upper ? ordered_json(to_string(*v.upper)) : ordered_json(nullptr);
    if (!v.description.empty()) j["description"] = v.description;
    doc["vars"].push_back(std::move(j));
  }
  doc["constraints"] = ordered_json::array();
  for (const auto& c : model.constraints) {
    ordered_json j{{"name", c.name}, {"terms", write_terms(c.terms)}, {"sense", sense_text(c.sense)},
                   {"rhs", write_coefficient(c.rhs)}};
    if (!c.description.empty()) j["description"] = c.description;
    doc["constraints"].push_back(std::move(j));
  }
  if (model.objective) {
    doc["objective"] = {{"sense", model.objective->sense == ObjectiveSense::Maximize ? "max" : "min"},
                        {"terms", write_terms(model.objective->terms)}};
  } else {
    doc["objective"] = nullptr;
  }
  return doc.dump(2) + "\n";
}

}  // namespace detail

}  // namespace iiswb
