#pragma once

// JSON shapes shared by the CLI (--json), the HTTP service, and the agent's
// tool results. Rationals travel as strings ("7/2").

#include "iiswb/agent.hpp"
#include "iiswb/error.hpp"
#include "iiswb/iis.hpp"
#include "iiswb/modelfile.hpp"
#include "iiswb/repair.hpp"

#include <nlohmann/json.hpp>

namespace iiswb {

using json = nlohmann::json;

json rational_json(const Rational& value);
/// Accepts "7/2", "3.5", or a JSON integer. Throws InvalidModel.
Rational rational_from_json(const json& value);

/// {feasible, point?{var: value}, certificate?[{row, member, multiplier}]}
json feasibility_payload(const Model& model);

/// {members, rows, method, solver_calls, expressions{member: symbolic}, numeric{member: numeric}}
json iis_payload(const Model& model, const IisResult& iis);
IisResult iis_from_json(const json& payload);
/// iis_payload plus params[] for the parameters the members read.
json diagnosis_payload(const Model& model, const IisResult& iis);

/// {status, mode, total, param_deltas, entry_slacks[{row, member, slack}], repaired_point, recommendations}
json plan_payload(const Model& model, const RepairPlan& plan);
RepairPlan plan_from_json(const json& payload);

json keys_payload(const KeyInventory& keys);

/// [{name, value, mutable, in_rhs, in_lhs, description}]
json params_payload(const Model& model);

json parse_errors_payload(const std::vector<ParseError>& errors);

/// {code, message, details}
json error_payload(std::string_view code, const std::string& message, const json& details = json::object());

json message_json(const Message& message);
Message message_from_json(const json& payload);
json gate_json(const GateDecision& decision);
json pending_json(const PendingRequest& pending);
PendingRequest pending_from_json(const json& payload);

}  // namespace iiswb
