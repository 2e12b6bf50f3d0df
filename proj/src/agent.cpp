#include "iiswb/agent.hpp"

#include "iiswb/error.hpp"
#include "iiswb/modelfile.hpp"
#include "iiswb/payloads.hpp"
#include "iiswb/simplex.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <set>

namespace iiswb {

namespace {

constexpr std::string_view kWarningPrefix = "Warning:";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

bool contains(std::string_view haystack, std::string_view needle) { return haystack.find(needle) != std::string_view::npos; }

std::vector<std::string> words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      cur += c;
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

// ---- gate ----

std::string to_string(GateReason reason) {
  return reason == GateReason::LhsParam ? "lhs_param" : "immutable_param";
}

GateDecision gate_request(const Model& model, const std::vector<std::string>& params) {
  std::vector<std::string> lhs, fixed;
  for (const auto& name : params) {
    const ParamDef* p = model.find_param(name);
    if (!p) throw Error(ErrorCode::UnknownParam, "unknown parameter '" + name + "'");
    if (param_usage(model, name).in_lhs) lhs.push_back(name);
    else if (!p->is_mutable) fixed.push_back(name);
  }
  if (!lhs.empty()) {
    return WarnConfirm{GateReason::LhsParam, lhs,
                       join(lhs) + (lhs.size() == 1 ? " multiplies" : " multiply") +
                           " a decision variable. Treating it as a repair target turns the repair into a nonconvex "
                           "mixed-integer quadratically constrained program (MIQCP), which this workbench does not "
                           "solve; the repair will be refused with an advisory."};
  }
  if (!fixed.empty()) {
    return WarnConfirm{GateReason::ImmutableParam, fixed,
                       join(fixed) + (fixed.size() == 1 ? " is" : " are") +
                           " marked as fixed in the real world. A plan that changes " +
                           (fixed.size() == 1 ? "it" : "them") + " may not be possible to carry out."};
  }
  return Allow{};
}

bool is_affirmative(std::string_view message) {
  if (contains(message, "[CONFIRM]")) return true;
  std::string text = lower(message);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return false;
  text = text.substr(first);
  for (std::string_view opener : {"yes", "y", "yeah", "yep", "confirm", "confirmed", "go ahead", "proceed", "do it",
                                  "ok", "okay", "sure", "apply it"}) {
    if (text.compare(0, opener.size(), opener) != 0) continue;
    if (text.size() == opener.size() || !std::isalnum(static_cast<unsigned char>(text[opener.size()]))) return true;
  }
  return false;
}

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "user";
}

// ---- tools ----

const std::vector<ToolSpec>& tool_specs() {
  static const std::vector<ToolSpec> specs = {
      {"describe_model", "Parameters, variables, and constraints of the current model.",
       {{"type", "object"}, {"properties", json::object()}, {"additionalProperties", false}}},
      {"get_iis", "Find an irreducible infeasible subset of the constraints and bounds.",
       {{"type", "object"},
        {"properties", {{"method", {{"type", "string"}, {"enum", {"deletion", "additive"}}}}}},
        {"additionalProperties", false}}},
      {"list_mutable_params", "Parameters that may be changed, and the ones that should not be.",
       {{"type", "object"}, {"properties", json::object()}, {"additionalProperties", false}}},
      {"solve_repair", "Smallest weighted change of the given parameters that makes the model feasible.",
       {{"type", "object"},
        {"properties",
         {{"params", {{"type", "array"}, {"items", {{"type", "string"}}}, {"minItems", 1}}},
          {"mode", {{"type", "string"}, {"enum", {"tied", "entry"}}}}}},
        {"required", {"params"}},
        {"additionalProperties", false}}},
      {"apply_repair", "Apply the last computed repair plan to the model.",
       {{"type", "object"}, {"properties", json::object()}, {"additionalProperties", false}}},
      {"resolve_with_params", "Re-check feasibility, optionally with some parameter values overridden.",
       {{"type", "object"},
        {"properties", {{"values", {{"type", "object"}, {"additionalProperties", {{"type", "string"}}}}}}},
        {"additionalProperties", false}}},
  };
  return specs;
}

namespace {

const ToolSpec* find_tool(std::string_view name) {
  for (const auto& spec : tool_specs())
    if (spec.name == name) return &spec;
  return nullptr;
}

bool is_gated(std::string_view name) { return name == "solve_repair" || name == "apply_repair"; }

void check_against(const json& value, const json& schema, const std::string& where) {
  const std::string type = schema.value("type", "");
  auto fail = [&](const std::string& why) { throw Error(ErrorCode::InvalidModel, where + ": " + why); };
  if (type == "object") {
    if (!value.is_object()) fail("expected an object");
    const json props = schema.value("properties", json::object());
    for (const auto& key : schema.value("required", json::array()))
      if (!value.contains(key.get<std::string>())) fail("missing '" + key.get<std::string>() + "'");
    for (const auto& [key, item] : value.items()) {
      if (props.contains(key)) {
        check_against(item, props[key], where + "." + key);
      } else if (schema.contains("additionalProperties")) {
        const json& extra = schema["additionalProperties"];
        if (extra.is_boolean() && !extra.get<bool>()) fail("unexpected field '" + key + "'");
        if (extra.is_object()) check_against(item, extra, where + "." + key);
      }
    }
  } else if (type == "array") {
    if (!value.is_array()) fail("expected an array");
    if (value.size() < schema.value("minItems", std::size_t{0})) fail("too few items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < value.size(); ++i) check_against(value[i], schema["items"], where + "[" + std::to_string(i) + "]");
  } else if (type == "string") {
    if (!value.is_string()) fail("expected a string");
    if (schema.contains("enum")) {
      const auto& options = schema["enum"];
      if (std::find(options.begin(), options.end(), value) == options.end()) fail("unexpected value " + value.dump());
    }
  }
}

std::vector<std::string> rhs_params(const Constraint& c) {
  std::vector<std::string> out;
  if (auto p = param_of(c.rhs)) out.emplace_back(*p);
  return out;
}

json describe_result(const Model& model) {
  json constraints = json::array(), vars = json::array();
  for (const auto& c : model.constraints) {
    std::vector<std::string> params;
    for (const auto& t : c.terms)
      if (auto p = param_of(t.coef)) params.emplace_back(*p);
    constraints.push_back({{"name", c.name},
                           {"expression", format_constraint(c)},
                           {"description", c.description},
                           {"lhs_params", params},
                           {"rhs_params", rhs_params(c)}});
  }
  for (const auto& v : model.vars) {
    json entry = {{"name", v.name}, {"integer", v.kind == VarKind::Integer}, {"description", v.description}};
    if (v.lower) entry["lower"] = rational_json(*v.lower);
    if (v.upper) entry["upper"] = rational_json(*v.upper);
    vars.push_back(entry);
  }
  return {{"name", model.name}, {"params", params_payload(model)}, {"vars", vars}, {"constraints", constraints}};
}

json error_result(const Error& e) { return {{"error", error_payload(to_string(e.code()), e.what())}}; }

std::string warning_text(const WarnConfirm& w) {
  return std::string(kWarningPrefix) + " " + w.consequence + " Reply yes to go ahead, or anything else to cancel.";
}

}  // namespace

void validate_tool_args(const ToolCall& call) {
  const ToolSpec* spec = find_tool(call.name);
  if (!spec) throw Error(ErrorCode::InvalidModel, "unknown tool '" + call.name + "'");
  check_against(call.args, spec->parameters, call.name);
}

json execute_tool(ChatSession& session, const ToolCall& call) {
  validate_tool_args(call);
  const Model& model = session.model;
  if (call.name == "describe_model") return describe_result(model);

  if (call.name == "list_mutable_params") {
    json adjustable = json::array(), discouraged = json::array();
    for (const auto& p : params_payload(model)) {
      if (p["mutable"].get<bool>() && !p["in_lhs"].get<bool>()) adjustable.push_back(p);
      else discouraged.push_back(p);
    }
    return {{"adjustable", adjustable}, {"discouraged", discouraged}};
  }

  if (call.name == "get_iis") {
    const auto sys = normalize(model);
    const OracleKind oracle = default_oracle(sys);
    try {
      IisResult iis = call.args.value("method", "deletion") == "additive" ? additive_method(sys, oracle)
                                                                          : deletion_filter(sys, oracle);
      session.cached_iis = iis;
      return iis_payload(model, iis);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::NotInfeasible) return {{"feasible", true}};
      throw;
    }
  }

  if (call.name == "solve_repair") {
    RepairSpec spec;
    spec.targets = call.args.at("params").get<std::vector<std::string>>();
    spec.mode = call.args.value("mode", "tied") == "entry" ? RepairMode::Entry : RepairMode::Tied;
    RepairPlan plan = solve_repair(model, spec);
    session.cached_plan = plan;
    return plan_payload(model, plan);
  }

  if (call.name == "apply_repair") {
    if (!session.cached_plan) throw Error(ErrorCode::NotApplicable, "no repair plan has been computed yet");
    const RepairPlan plan = *session.cached_plan;
    json recs = plan_payload(model, plan)["recommendations"];
    Model repaired = apply_repair(model, plan);
    const bool changed = !(repaired == model);
    session.model = std::move(repaired);
    session.cached_plan.reset();
    if (changed) session.cached_iis.reset();
    return {{"applied", recs}, {"changed", changed}};
  }

  if (call.name == "resolve_with_params") {
    std::map<std::string, Rational> overrides;
    for (const auto& [k, v] : call.args.value("values", json::object()).items()) overrides[k] = rational_from_json(v);
    json out = feasibility_payload(with_param_values(model, overrides));
    json values = json::object();
    for (const auto& [k, v] : overrides) values[k] = rational_json(v);
    out["values"] = values;
    return out;
  }
  throw Error(ErrorCode::InvalidModel, "unknown tool '" + call.name + "'");
}

namespace {

std::vector<std::string> gated_params(const ChatSession& session, const ToolCall& call) {
  if (call.name == "solve_repair") return call.args.at("params").get<std::vector<std::string>>();
  std::vector<std::string> out;
  if (session.cached_plan) {
    if (session.cached_plan->mode == RepairMode::Tied) {
      for (const auto& [p, d] : session.cached_plan->param_deltas) out.push_back(p);
    }
  }
  return out;
}

// Runs a call and records it; errors become tool results the client can read.
json run_and_record(ChatSession& s, const ToolCall& call, TurnResult& result) {
  const Model before = s.model;
  json out;
  try {
    out = execute_tool(s, call);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SolveBudgetExceeded) throw;
    out = error_result(e);
  }
  s.history.push_back({Role::Tool, out.dump(), std::nullopt, call.name});
  result.tools_run.push_back(call.name);
  if (!(s.model == before)) result.model_changed = true;
  return out;
}

std::vector<Message> request_messages(const ChatSession& s) {
  std::vector<Message> out;
  const AgentContext ctx{s.cached_iis, s.cached_plan};
  out.push_back({Role::System, build_prompt(Task::Conversation, s.model, ctx).render(), std::nullopt, ""});
  out.insert(out.end(), s.history.begin(), s.history.end());
  return out;
}

}  // namespace

TurnResult chat_turn(ChatSession& session, ChatClient& client, const std::string& user_message) {
  ChatSession s = session;
  TurnResult result;
  s.history.push_back({Role::User, user_message, std::nullopt, ""});

  if (s.pending) {
    const PendingRequest pending = *s.pending;
    s.pending.reset();
    if (is_affirmative(user_message)) {
      s.history.push_back({Role::Assistant, "", pending.call, ""});
      run_and_record(s, pending.call, result);
    } else if (pending.call.name == "solve_repair") {
      RepairPlan rejected;
      rejected.status = RepairStatus::Rejected;
      s.cached_plan = rejected;
    }
  }

  for (int round = 0;; ++round) {
    Reply reply = client.complete(request_messages(s), tool_specs());
    if (auto* text = std::get_if<std::string>(&reply)) {
      s.history.push_back({Role::Assistant, *text, std::nullopt, ""});
      result.reply = *text;
      break;
    }
    if (round >= kMaxToolRounds)
      throw Error(ErrorCode::ToolLoopExceeded, "the assistant kept calling tools after " + std::to_string(kMaxToolRounds) + " rounds");
    const ToolCall call = std::get<ToolCall>(reply);
    s.history.push_back({Role::Assistant, "", call, ""});
    try {
      validate_tool_args(call);
    } catch (const Error& e) {
      s.history.push_back({Role::Tool, error_result(e).dump(), std::nullopt, call.name});
      continue;
    }
    if (is_gated(call.name)) {
      GateDecision gate;
      try {
        gate = gate_request(s.model, gated_params(s, call));
      } catch (const Error& e) {
        s.history.push_back({Role::Tool, error_result(e).dump(), std::nullopt, call.name});
        continue;
      }
      if (auto* warn = std::get_if<WarnConfirm>(&gate)) {
        s.pending = PendingRequest{call, *warn};
        result.reply = warning_text(*warn);
        result.pending_confirmation = true;
        s.history.push_back({Role::Assistant, result.reply, std::nullopt, ""});
        break;
      }
    }
    run_and_record(s, call, result);
  }
  session = std::move(s);
  return result;
}

// ---- mock client ----

namespace {

struct TurnView {
  std::string user;
  std::string previous_assistant;  // last assistant text before the user message
  std::vector<std::pair<std::string, json>> results;  // tool results after it
  bool unapplied_plan = false;
};

TurnView view_of(const std::vector<Message>& messages) {
  TurnView v;
  std::size_t last_user = messages.size();
  for (std::size_t i = messages.size(); i-- > 0;) {
    if (messages[i].role == Role::User) {
      last_user = i;
      break;
    }
  }
  if (last_user == messages.size()) return v;
  v.user = messages[last_user].content;
  for (std::size_t i = last_user; i-- > 0;) {
    if (messages[i].role == Role::Assistant && !messages[i].call) {
      v.previous_assistant = messages[i].content;
      break;
    }
  }
  for (std::size_t i = last_user + 1; i < messages.size(); ++i)
    if (messages[i].role == Role::Tool) v.results.emplace_back(messages[i].tool, json::parse(messages[i].content, nullptr, false));
  for (std::size_t i = 0; i < last_user; ++i) {
    if (messages[i].role != Role::Tool) continue;
    json r = json::parse(messages[i].content, nullptr, false);
    if (messages[i].tool == "solve_repair") v.unapplied_plan = r.is_object() && r.value("status", "") == "repaired";
    if (messages[i].tool == "apply_repair") v.unapplied_plan = false;
  }
  return v;
}

// "[CALL:name]" or "[CALL:name {json}]"; the JSON may itself contain brackets.
std::vector<ToolCall> marker_calls(const std::string& text) {
  std::vector<ToolCall> out;
  const std::string open = "[CALL:";
  for (auto pos = text.find(open); pos != std::string::npos; pos = text.find(open, pos + 1)) {
    std::size_t i = pos + open.size();
    std::size_t name_end = i;
    while (name_end < text.size() && (std::isalnum(static_cast<unsigned char>(text[name_end])) || text[name_end] == '_')) ++name_end;
    if (name_end == i) continue;
    ToolCall call{text.substr(i, name_end - i), json::object()};
    i = name_end;
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i < text.size() && text[i] == '{') {
      int depth = 0;
      bool in_string = false;
      std::size_t j = i;
      for (; j < text.size(); ++j) {
        const char c = text[j];
        if (in_string) {
          if (c == '\\') ++j;
          else if (c == '"') in_string = false;
        } else if (c == '"') {
          in_string = true;
        } else if (c == '{') {
          ++depth;
        } else if (c == '}' && --depth == 0) {
          break;
        }
      }
      if (j >= text.size()) continue;
      const std::string raw = text.substr(i, j - i + 1);
      json parsed = json::parse(raw, nullptr, false);
      call.args = parsed.is_discarded() ? json(raw) : parsed;
      i = j + 1;
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    }
    if (i < text.size() && text[i] == ']') out.push_back(std::move(call));
  }
  return out;
}

bool has_result(const TurnView& v, std::string_view tool) {
  return std::any_of(v.results.begin(), v.results.end(), [&](const auto& r) { return r.first == tool; });
}

const json* result_of(const TurnView& v, std::string_view tool) {
  for (const auto& r : v.results)
    if (r.first == tool) return &r.second;
  return nullptr;
}

bool any_of_words(const std::string& text, std::initializer_list<std::string_view> keys) {
  return std::any_of(keys.begin(), keys.end(), [&](std::string_view k) { return contains(text, k); });
}

// Parameter names the user mentioned, directly or through a constraint name.
std::vector<std::string> mentioned_params(const std::string& message, const json& description) {
  std::vector<std::string> out;
  auto add = [&](const std::string& p) {
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  };
  for (const auto& w : words(message)) {
    for (const auto& p : description["params"])
      if (p["name"] == w) add(w);
    for (const auto& c : description["constraints"])
      if (c["name"] == w)
        for (const auto& p : c["rhs_params"]) add(p.get<std::string>());
  }
  return out;
}

std::optional<ToolCall> next_call(const TurnView& v) {
  const auto markers = marker_calls(v.user);
  if (!markers.empty()) {
    if (v.results.size() < markers.size()) return markers[v.results.size()];
    return std::nullopt;
  }
  const std::string text = lower(v.user);
  if (is_affirmative(v.user)) {
    if (v.previous_assistant.rfind(kWarningPrefix, 0) == 0) {
      if (has_result(v, "apply_repair") && !has_result(v, "resolve_with_params"))
        return ToolCall{"resolve_with_params", json::object()};
      return std::nullopt;
    }
    if (v.unapplied_plan) {
      if (!has_result(v, "apply_repair")) return ToolCall{"apply_repair", json::object()};
      const json* applied = result_of(v, "apply_repair");
      if (!applied->contains("error") && !has_result(v, "resolve_with_params"))
        return ToolCall{"resolve_with_params", json::object()};
      return std::nullopt;
    }
  }
  if (any_of_words(text, {"relax", "chang", "adjust", "increase", "decrease", "raise", "lower", "repair",
                          "make it feasible"})) {
    if (!has_result(v, "describe_model")) return ToolCall{"describe_model", json::object()};
    if (has_result(v, "solve_repair") || has_result(v, "list_mutable_params")) return std::nullopt;
    auto params = mentioned_params(v.user, *result_of(v, "describe_model"));
    if (params.empty()) return ToolCall{"list_mutable_params", json::object()};
    json args = {{"params", params}};
    if (contains(text, "entry")) args["mode"] = "entry";
    return ToolCall{"solve_repair", args};
  }
  if (any_of_words(text, {"why", "infeasib", "conflict", "diagnos"})) {
    if (!has_result(v, "get_iis")) return ToolCall{"get_iis", json::object()};
    return std::nullopt;
  }
  if (any_of_words(text, {"mutable", "which param", "what can i change", "adjustable"})) {
    if (!has_result(v, "list_mutable_params")) return ToolCall{"list_mutable_params", json::object()};
    return std::nullopt;
  }
  if (any_of_words(text, {"describe", "what does", "overview", "explain the model"})) {
    if (!has_result(v, "describe_model")) return ToolCall{"describe_model", json::object()};
    return std::nullopt;
  }
  if (any_of_words(text, {"check", "feasible", "re-solve", "resolve"})) {
    if (!has_result(v, "resolve_with_params")) return ToolCall{"resolve_with_params", json::object()};
    return std::nullopt;
  }
  return std::nullopt;
}

std::vector<std::string> names_of(const json& items) {
  std::vector<std::string> out;
  for (const auto& i : items) out.push_back(i.at("name").get<std::string>());
  return out;
}

std::string summarize(const std::string& tool, const json& r) {
  if (!r.is_object()) return tool + " returned an unreadable result.";
  if (r.contains("error")) return "The " + tool + " step failed (" + r["error"].value("code", "") + "): " + r["error"].value("message", "");
  if (tool == "get_iis") {
    if (r.value("feasible", false)) return "The model is feasible, so there is no conflict to explain.";
    std::string out = "These constraints cannot all hold together:";
    for (const auto& m : r["members"]) out += "\n- " + m.get<std::string>() + ": " + r["expressions"].value(m.get<std::string>(), "");
    out += "\nDropping any one of them removes the conflict.";
    return out;
  }
  if (tool == "describe_model") {
    return "Model " + r.value("name", "") + " has parameters " + join(names_of(r["params"])) + ", variables " +
           join(names_of(r["vars"])) + ", and constraints " + join(names_of(r["constraints"])) + ".";
  }
  if (tool == "list_mutable_params") {
    std::string out = "Parameters you can adjust: " + (r["adjustable"].empty() ? std::string("none") : join(names_of(r["adjustable"]))) + ".";
    if (!r["discouraged"].empty()) out += " Better left alone: " + join(names_of(r["discouraged"])) + ".";
    return out;
  }
  if (tool == "solve_repair") {
    if (r.value("status", "") == "already_feasible") return "The model is already feasible; nothing needs to change.";
    std::string out = "Smallest repair (total change " + r.value("total", "") + "):";
    for (const auto& rec : r["recommendations"]) out += "\n- " + rec.value("text", "");
    if (r.value("mode", "") == "tied") out += "\nReply yes to apply it.";
    return out;
  }
  if (tool == "apply_repair") {
    std::string out = "Applied the repair:";
    for (const auto& rec : r["applied"]) out += "\n- " + rec.value("text", "");
    return out;
  }
  if (tool == "resolve_with_params")
    return r.value("feasible", false) ? "The model is now feasible." : "The model is still infeasible.";
  return tool + " finished.";
}

}  // namespace

Reply MockClient::complete(const std::vector<Message>& messages, const std::vector<ToolSpec>&) {
  const TurnView v = view_of(messages);
  if (auto call = next_call(v)) return *call;
  if (v.results.empty()) {
    return std::string(
        "I can describe the model, explain why it is infeasible, list the parameters you can change, and compute "
        "and apply the smallest change that restores feasibility. Try asking \"why is this infeasible?\".");
  }
  std::vector<std::string> parts;
  for (const auto& [tool, r] : v.results) parts.push_back(summarize(tool, r));
  return join(parts, "\n");
}

// ---- live client ----

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(ErrorCode::ClientError, "protocol: bad endpoint url '" + url + "'");
  return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

json wire_message(const Message& m) {
  json out = {{"role", to_string(m.role)}, {"content", m.content}};
  if (m.call) out["tool_call"] = {{"name", m.call->name}, {"arguments", m.call->args}};
  if (!m.tool.empty()) out["name"] = m.tool;
  return out;
}

// {content} | {tool_call:{name, arguments}} | {choices:[{message:{content, tool_calls:[{function}]}}]}
Reply parse_reply(const json& body) {
  json msg = body;
  if (body.contains("choices") && body["choices"].is_array() && !body["choices"].empty())
    msg = body["choices"][0].value("message", json::object());
  json call;
  if (msg.contains("tool_call") && msg["tool_call"].is_object()) call = msg["tool_call"];
  else if (msg.contains("tool_calls") && msg["tool_calls"].is_array() && !msg["tool_calls"].empty())
    call = msg["tool_calls"][0].value("function", msg["tool_calls"][0]);
  if (call.is_object()) {
    if (!call.contains("name") || !call["name"].is_string()) throw Error(ErrorCode::ClientError, "protocol: tool call without a name");
    json args = call.value("arguments", json::object());
    if (args.is_string()) {
      json parsed = json::parse(args.get<std::string>(), nullptr, false);
      if (!parsed.is_discarded()) args = parsed;
    }
    return ToolCall{call["name"].get<std::string>(), args};
  }
  if (msg.contains("content") && msg["content"].is_string()) return msg["content"].get<std::string>();
  throw Error(ErrorCode::ClientError, "protocol: reply has neither content nor a tool call");
}

}  // namespace

HttpChatClient::HttpChatClient(LiveConfig config) : config_(std::move(config)) {}

json HttpChatClient::post(const json& body) {
  const Endpoint ep = split_url(config_.url);
  httplib::Client cli(ep.origin);
  const auto secs = static_cast<time_t>(config_.timeout.count());
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!config_.key.empty()) headers.emplace("Authorization", "Bearer " + config_.key);
  auto res = cli.Post(ep.path, headers, body.dump(), "application/json");
  if (!res) throw Error(ErrorCode::ClientError, "timeout: no reply from " + config_.url + " (" + httplib::to_string(res.error()) + ")");
  if (res->status == 401 || res->status == 403) throw Error(ErrorCode::ClientError, "auth: endpoint answered " + std::to_string(res->status));
  if (res->status < 200 || res->status >= 300) throw Error(ErrorCode::ClientError, "http: endpoint answered " + std::to_string(res->status));
  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) throw Error(ErrorCode::ClientError, "protocol: reply is not JSON");
  return parsed;
}

Reply HttpChatClient::complete(const std::vector<Message>& messages, const std::vector<ToolSpec>& tools) {
  json tool_list = json::array();
  for (const auto& t : tools) tool_list.push_back({{"name", t.name}, {"description", t.description}, {"parameters", t.parameters}});
  json wire = json::array();
  for (const auto& m : messages) wire.push_back(wire_message(m));

  int unknown_retries = 0, arg_retries = 0;
  while (true) {
    Reply reply = parse_reply(post({{"model", config_.model}, {"messages", wire}, {"tools", tool_list}}));
    auto* call = std::get_if<ToolCall>(&reply);
    if (!call) return reply;
    const bool known = std::any_of(tools.begin(), tools.end(), [&](const ToolSpec& t) { return t.name == call->name; });
    if (!known) {
      if (unknown_retries++ >= 1) throw Error(ErrorCode::ClientError, "protocol: unknown tool '" + call->name + "'");
      std::vector<std::string> names;
      for (const auto& t : tools) names.push_back(t.name);
      wire.push_back({{"role", "user"},
                      {"content", "There is no tool named '" + call->name + "'. Available tools: " + join(names) + "."}});
      continue;
    }
    try {
      validate_tool_args(*call);
    } catch (const Error& e) {
      if (arg_retries++ >= 2) throw Error(ErrorCode::ClientError, std::string("protocol: malformed tool arguments: ") + e.what());
      wire.push_back({{"role", "user"}, {"content", std::string("Those tool arguments are invalid (") + e.what() + "). Please call the tool again with valid arguments."}});
      continue;
    }
    return reply;
  }
}

std::optional<LiveConfig> live_config_from_env() {
  const char* url = std::getenv("WORKBENCH_LLM_URL");
  if (!url || !*url) return std::nullopt;
  LiveConfig cfg;
  cfg.url = url;
  if (const char* key = std::getenv("WORKBENCH_LLM_KEY")) cfg.key = key;
  const char* model = std::getenv("WORKBENCH_LLM_MODEL");
  cfg.model = model && *model ? model : "default";
  return cfg;
}

std::unique_ptr<ChatClient> client_from_env() {
  if (auto cfg = live_config_from_env()) return std::make_unique<HttpChatClient>(*cfg);
  return std::make_unique<MockClient>();
}

}  // namespace iiswb
