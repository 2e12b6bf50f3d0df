#pragma once

// Conversational layer: a tool-dispatch loop over a chat-completion client,
// with a deterministic gate in front of the repair tools.

#include "iiswb/iis.hpp"
#include "iiswb/model.hpp"
#include "iiswb/prompts.hpp"
#include "iiswb/repair.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace iiswb {

using json = nlohmann::json;

// ---- gate ----

enum class GateReason { ImmutableParam, LhsParam };
std::string to_string(GateReason reason);

struct Allow {};
struct WarnConfirm {
  GateReason reason = GateReason::ImmutableParam;
  std::vector<std::string> params;  // the offending ones
  std::string consequence;
};
using GateDecision = std::variant<Allow, WarnConfirm>;

/// Allow iff every parameter is mutable and appears only on right-hand sides.
/// A left-hand-side occurrence outranks immutability. Throws UnknownParam.
GateDecision gate_request(const Model& model, const std::vector<std::string>& params);

/// "[CONFIRM]" anywhere, or a reply opening with yes / confirm / go ahead /
/// proceed / do it.
bool is_affirmative(std::string_view message);

// ---- messages and clients ----

enum class Role { System, User, Assistant, Tool };
std::string to_string(Role role);

struct ToolCall {
  std::string name;
  json args = json::object();
  bool operator==(const ToolCall&) const = default;
};

struct Message {
  Role role = Role::User;
  std::string content;
  /// Assistant turns that request a tool.
  std::optional<ToolCall> call;
  /// Tool turns: which tool produced `content`.
  std::string tool;
  bool operator==(const Message&) const = default;
};

struct ToolSpec {
  std::string name;
  std::string description;
  json parameters;  // JSON schema
};

using Reply = std::variant<std::string, ToolCall>;

class ChatClient {
 public:
  virtual ~ChatClient() = default;
  /// Throws Error(ClientError).
  virtual Reply complete(const std::vector<Message>& messages, const std::vector<ToolSpec>& tools) = 0;
  virtual bool is_live() const { return false; }
};

/// Scripted stand-in. Calls come from "[CALL:name]" / "[CALL:name {json}]"
/// markers in the latest user message, else from a small keyword table; after
/// the calls are answered it summarizes the tool results.
class MockClient : public ChatClient {
 public:
  Reply complete(const std::vector<Message>& messages, const std::vector<ToolSpec>& tools) override;
};

struct LiveConfig {
  std::string url;  // full endpoint, http(s)://host[:port]/path
  std::string key;
  std::string model;
  std::chrono::seconds timeout{60};
};

/// POSTs {model, messages, tools}; accepts {content} / {tool_call} replies and
/// the common choices[0].message shape. Unknown tool names get one corrective
/// retry, malformed arguments two.
class HttpChatClient : public ChatClient {
 public:
  explicit HttpChatClient(LiveConfig config);
  Reply complete(const std::vector<Message>& messages, const std::vector<ToolSpec>& tools) override;
  bool is_live() const override { return true; }

 private:
  json post(const json& body);
  LiveConfig config_;
};

/// WORKBENCH_LLM_URL / _KEY / _MODEL; nullopt when the URL is unset.
std::optional<LiveConfig> live_config_from_env();
/// Live client when configured, else the mock.
std::unique_ptr<ChatClient> client_from_env();

// ---- session and turns ----

struct PendingRequest {
  ToolCall call;
  WarnConfirm warning;
};

struct ChatSession {
  Model model;
  std::vector<Message> history;
  std::optional<IisResult> cached_iis;
  std::optional<RepairPlan> cached_plan;
  std::optional<PendingRequest> pending;
};

struct TurnResult {
  std::string reply;
  std::vector<std::string> tools_run;
  bool pending_confirmation = false;
  /// apply_repair changed the model during this turn.
  bool model_changed = false;
};

constexpr int kMaxToolRounds = 8;

/// The tool list offered to the client.
const std::vector<ToolSpec>& tool_specs();

/// Throws InvalidModel with the reason when args do not fit the tool schema.
void validate_tool_args(const ToolCall& call);

/// Runs one tool against the session; the JSON result is also what the client sees.
json execute_tool(ChatSession& session, const ToolCall& call);

/// One user turn. The session is only updated when the turn completes; on
/// ToolLoopExceeded or ClientError it is left as it was.
TurnResult chat_turn(ChatSession& session, ChatClient& client, const std::string& user_message);

}  // namespace iiswb
