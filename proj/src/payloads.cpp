#include "iiswb/payloads.hpp"

#include "iiswb/branch_bound.hpp"
#include "iiswb/prompts.hpp"
#include "iiswb/simplex.hpp"

namespace iiswb {

namespace {

json point_json(const NormalizedSystem& sys, const RVector& x) {
  json out = json::object();
  for (Eigen::Index j = 0; j < x.size(); ++j) out[sys.var_names[static_cast<std::size_t>(j)]] = rational_json(x(j));
  return out;
}

json rational_map(const std::map<std::string, Rational>& values) {
  json out = json::object();
  for (const auto& [k, v] : values) out[k] = rational_json(v);
  return out;
}

std::map<std::string, Rational> rational_map_from(const json& payload) {
  std::map<std::string, Rational> out;
  if (payload.is_object())
    for (const auto& [k, v] : payload.items()) out[k] = rational_from_json(v);
  return out;
}

template <typename E>
E enum_from(const std::string& text, std::initializer_list<E> values) {
  for (E v : values)
    if (to_string(v) == text) return v;
  throw Error(ErrorCode::InvalidModel, "unknown value '" + text + "'");
}

}  // namespace

json rational_json(const Rational& value) { return to_string(value); }

Rational rational_from_json(const json& value) {
  if (value.is_number_integer()) return Rational(value.get<long long>());
  if (value.is_string()) {
    if (auto r = parse_rational(value.get<std::string>())) return *r;
  }
  throw Error(ErrorCode::InvalidModel, "expected an exact number, got " + value.dump());
}

json feasibility_payload(const Model& model) {
  const auto sys = normalize(model);
  json out;
  if (sys.has_integers()) {
    auto outcome = check_feasible_milp(sys, all_rows(sys.num_rows()));
    if (auto* f = std::get_if<milp::Feasible>(&outcome)) {
      out["feasible"] = true;
      out["point"] = point_json(sys, f->point);
    } else {
      out["feasible"] = false;
    }
    return out;
  }
  auto outcome = check_feasible(sys);
  if (auto* f = std::get_if<lp::Feasible<Rational>>(&outcome)) {
    out["feasible"] = true;
    out["point"] = point_json(sys, f->point);
  } else {
    const auto& cert = std::get<lp::Infeasible<Rational>>(outcome).certificate;
    out["feasible"] = false;
    json rows = json::array();
    for (const auto& [row, y] : cert.y)
      rows.push_back({{"row", row}, {"member", sys.rows[static_cast<std::size_t>(row)].member_id()}, {"multiplier", rational_json(y)}});
    out["certificate"] = rows;
  }
  return out;
}

json iis_payload(const Model& model, const IisResult& iis) {
  json expressions = json::object(), numeric = json::object();
  for (const auto& m : iis.members) {
    expressions[m] = symbolic_member(model, m).substr(m.size() + 2);
    numeric[m] = numeric_member(model, m).substr(m.size() + 2);
  }
  return {{"members", iis.members},
          {"rows", iis.rows},
          {"method", to_string(iis.method)},
          {"solver_calls", iis.solver_calls},
          {"expressions", expressions},
          {"numeric", numeric}};
}

IisResult iis_from_json(const json& payload) {
  IisResult out;
  out.members = payload.at("members").get<std::vector<std::string>>();
  out.rows = payload.at("rows").get<RowSet>();
  out.method = enum_from(payload.at("method").get<std::string>(),
                         {IisMethod::Deletion, IisMethod::Additive, IisMethod::Enumeration, IisMethod::Oracle});
  out.solver_calls = payload.value("solver_calls", std::size_t{0});
  return out;
}

json diagnosis_payload(const Model& model, const IisResult& iis) {
  json out = iis_payload(model, iis);
  const json all = params_payload(model);
  json params = json::array();
  for (const auto& p : iis_parameters(model, iis))
    for (const auto& entry : all)
      if (entry["name"] == p) params.push_back(entry);
  out["params"] = params;
  return out;
}

json plan_payload(const Model& model, const RepairPlan& plan) {
  const auto sys = normalize(model);
  json slacks = json::array();
  for (const auto& [row, s] : plan.entry_slacks)
    slacks.push_back({{"row", row}, {"member", sys.rows[static_cast<std::size_t>(row)].member_id()}, {"slack", rational_json(s)}});
  json recs = json::array();
  for (const auto& r : explain_deltas(model, plan)) {
    json rec = {{"param", r.param},
                {"old_value", rational_json(r.old_value)},
                {"new_value", rational_json(r.new_value)},
                {"direction", r.direction},
                {"text", r.phrase()}};
    if (!r.member.empty()) rec["member"] = r.member;
    recs.push_back(rec);
  }
  return {{"status", to_string(plan.status)},
          {"mode", to_string(plan.mode)},
          {"total", rational_json(plan.total)},
          {"param_deltas", rational_map(plan.param_deltas)},
          {"entry_slacks", slacks},
          {"repaired_point", rational_map(plan.repaired_point)},
          {"recommendations", recs}};
}

RepairPlan plan_from_json(const json& payload) {
  RepairPlan plan;
  plan.status = enum_from(payload.at("status").get<std::string>(),
                          {RepairStatus::Repaired, RepairStatus::AlreadyFeasible, RepairStatus::Rejected});
  plan.mode = enum_from(payload.at("mode").get<std::string>(), {RepairMode::Entry, RepairMode::Tied});
  plan.total = rational_from_json(payload.at("total"));
  plan.param_deltas = rational_map_from(payload.value("param_deltas", json::object()));
  plan.repaired_point = rational_map_from(payload.value("repaired_point", json::object()));
  for (const auto& s : payload.value("entry_slacks", json::array()))
    plan.entry_slacks[s.at("row").get<Eigen::Index>()] = rational_from_json(s.at("slack"));
  return plan;
}

json keys_payload(const KeyInventory& keys) {
  json params = json::array(), constraints = json::array(), vars = json::array();
  for (const auto& p : keys.params)
    params.push_back({{"name", p.name}, {"description", p.description}, {"value", rational_json(p.value)}, {"mutable", p.is_mutable}});
  for (const auto& c : keys.constraints) constraints.push_back({{"name", c.name}, {"description", c.description}});
  for (const auto& v : keys.vars) vars.push_back({{"name", v.name}, {"description", v.description}});
  return {{"params", params}, {"constraints", constraints}, {"vars", vars}};
}

json params_payload(const Model& model) {
  json out = json::array();
  for (const auto& p : model.params) {
    const auto usage = param_usage(model, p.name);
    out.push_back({{"name", p.name},
                   {"value", rational_json(p.value)},
                   {"mutable", p.is_mutable},
                   {"in_rhs", usage.in_rhs},
                   {"in_lhs", usage.in_lhs},
                   {"description", p.description}});
  }
  return out;
}

json parse_errors_payload(const std::vector<ParseError>& errors) {
  json out = json::array();
  for (const auto& e : errors)
    out.push_back({{"line", e.span.line},
                   {"column", e.span.column},
                   {"length", e.span.length},
                   {"kind", std::string(to_string(e.kind))},
                   {"message", e.message}});
  return out;
}

json error_payload(std::string_view code, const std::string& message, const json& details) {
  return {{"code", std::string(code)}, {"message", message}, {"details", details}};
}

json message_json(const Message& message) {
  json out = {{"role", to_string(message.role)}, {"content", message.content}};
  if (message.call) out["call"] = {{"name", message.call->name}, {"args", message.call->args}};
  if (!message.tool.empty()) out["tool"] = message.tool;
  return out;
}

Message message_from_json(const json& payload) {
  Message m;
  m.role = enum_from(payload.at("role").get<std::string>(), {Role::System, Role::User, Role::Assistant, Role::Tool});
  m.content = payload.value("content", "");
  if (payload.contains("call"))
    m.call = ToolCall{payload["call"].at("name").get<std::string>(), payload["call"].value("args", json::object())};
  m.tool = payload.value("tool", "");
  return m;
}

json gate_json(const GateDecision& decision) {
  if (std::holds_alternative<Allow>(decision)) return {{"decision", "allow"}};
  const auto& w = std::get<WarnConfirm>(decision);
  return {{"decision", "warn_confirm"}, {"reason", to_string(w.reason)}, {"params", w.params}, {"consequence", w.consequence}};
}

json pending_json(const PendingRequest& pending) {
  json gate = gate_json(pending.warning);
  return {{"call", {{"name", pending.call.name}, {"args", pending.call.args}}},
          {"reason", gate["reason"]},
          {"params", gate["params"]},
          {"consequence", gate["consequence"]}};
}

PendingRequest pending_from_json(const json& payload) {
  PendingRequest p;
  p.call = ToolCall{payload.at("call").at("name").get<std::string>(), payload.at("call").value("args", json::object())};
  p.warning.reason = enum_from(payload.at("reason").get<std::string>(), {GateReason::ImmutableParam, GateReason::LhsParam});
  p.warning.params = payload.at("params").get<std::vector<std::string>>();
  p.warning.consequence = payload.value("consequence", "");
  return p;
}

}  // namespace iiswb
