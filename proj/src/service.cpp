#include "iiswb/service.hpp"

#include "iiswb/budget.hpp"
#include "iiswb/error.hpp"
#include "iiswb/modelfile.hpp"
#include "iiswb/payloads.hpp"
#include "iiswb/prompts.hpp"

#include <httplib.h>
#include <openssl/evp.h>
#include <openssl/rand.h>

#include <atomic>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace iiswb {

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Loaded: return "loaded";
    case Phase::Described: return "described";
    case Phase::Diagnosed: return "diagnosed";
    case Phase::Chatting: return "chatting";
  }
  return "loaded";
}

std::optional<Phase> parse_phase(std::string_view text) {
  for (Phase p : {Phase::Loaded, Phase::Described, Phase::Diagnosed, Phase::Chatting})
    if (to_string(p) == text) return p;
  return std::nullopt;
}

ServiceConfig service_config_from_env() {
  ServiceConfig cfg;
  if (const char* dir = std::getenv("WORKBENCH_DATA_DIR"); dir && *dir) cfg.data_dir = dir;
  if (const char* secs = std::getenv("WORKBENCH_SOLVE_BUDGET_SECS"); secs && *secs) {
    char* end = nullptr;
    const double value = std::strtod(secs, &end);
    if (end != secs && value >= 0) cfg.solve_budget = std::chrono::milliseconds(static_cast<long long>(value * 1000));
  }
  return cfg;
}

int service_port_from_env() {
  if (const char* port = std::getenv("WORKBENCH_PORT"); port && *port) return std::atoi(port);
  return 8080;
}

namespace {

struct HttpError {
  int status;
  std::string code;
  std::string message;
  json details = json::object();
};

// 128 random bits, base64url without padding.
std::string new_id() {
  unsigned char bytes[16];
  if (RAND_bytes(bytes, sizeof bytes) != 1) throw std::runtime_error("no randomness available");
  unsigned char encoded[32];
  const int n = EVP_EncodeBlock(encoded, bytes, sizeof bytes);
  std::string id(reinterpret_cast<char*>(encoded), static_cast<std::size_t>(n));
  while (!id.empty() && id.back() == '=') id.pop_back();
  for (char& c : id) {
    if (c == '+') c = '-';
    else if (c == '/') c = '_';
  }
  return id;
}

bool valid_id(const std::string& id) {
  if (id.size() != 22) return false;
  return std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'; });
}

std::string now_iso() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%S") << '.' << std::setw(3) << std::setfill('0') << ms << 'Z';
  return out.str();
}

bool is_feasible(const Model& model) { return feasibility_payload(model)["feasible"].get<bool>(); }

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInfeasible:
    case ErrorCode::MissingContext: return 409;
    case ErrorCode::SolveBudgetExceeded:
    case ErrorCode::NodeBudgetExceeded: return 504;
    case ErrorCode::ClientError:
    case ErrorCode::ToolLoopExceeded: return 502;
    default: return 422;
  }
}

struct Record {
  std::string id;
  ChatSession session;
  Phase phase = Phase::Loaded;
  bool feasible = false;
  bool pending_apply = false;
  std::string created;
  std::string updated;
  std::mutex mu;
  std::atomic<bool> chat_in_flight{false};
};

void advance(Record& r, Phase p) {
  if (p > r.phase) r.phase = p;
}

json snapshot(const Record& r) {
  json history = json::array();
  for (const auto& m : r.session.history) history.push_back(message_json(m));
  const Model& model = r.session.model;
  return {{"id", r.id},
          {"phase", to_string(r.phase)},
          {"feasible", r.feasible},
          {"created", r.created},
          {"updated", r.updated},
          {"model_name", model.name},
          {"history", history},
          {"pending", r.session.pending ? pending_json(*r.session.pending) : json(nullptr)},
          {"pending_apply", r.pending_apply},
          {"cached_iis", r.session.cached_iis ? iis_payload(model, *r.session.cached_iis) : json(nullptr)},
          {"cached_plan", r.session.cached_plan ? plan_payload(model, *r.session.cached_plan) : json(nullptr)}};
}

Model parse_or_422(const std::string& source, ModelFormat format) {
  auto parsed = parse_model(source, format);
  if (auto* errors = std::get_if<std::vector<ParseError>>(&parsed))
    throw HttpError{422, "ParseError", "the model source has " + std::to_string(errors->size()) + " error(s)",
                    {{"errors", parse_errors_payload(*errors)}}};
  return std::get<Model>(std::move(parsed));
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  httplib::Server server;
  std::thread thread;
  std::mutex map_mu;
  std::map<std::string, std::shared_ptr<Record>> sessions;
  std::mutex log_mu;

  explicit Impl(ServiceConfig cfg) : config(std::move(cfg)) {
    if (!config.make_client) config.make_client = [] { return client_from_env(); };
    std::filesystem::create_directories(config.data_dir);
    server.set_payload_max_length(config.max_source_bytes * 4 + 65536);
    routes();
  }

  std::filesystem::path log_path(const std::string& id) const { return config.data_dir / (id + ".jsonl"); }

  void append_event(const std::string& id, const json& event) {
    std::lock_guard lock(log_mu);
    std::ofstream out(log_path(id), std::ios::app);
    out << event.dump() << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write the session log for " + id);
  }

  // Records the effect of a request: state after it, plus appended messages.
  void commit(Record& r, const std::string& kind, std::size_t history_before, bool model_changed) {
    r.updated = now_iso();
    json appended = json::array();
    for (std::size_t i = history_before; i < r.session.history.size(); ++i) appended.push_back(message_json(r.session.history[i]));
    const Model& model = r.session.model;
    json event = {{"event", kind},
                  {"at", r.updated},
                  {"phase", to_string(r.phase)},
                  {"feasible", r.feasible},
                  {"append", appended},
                  {"iis", r.session.cached_iis ? iis_payload(model, *r.session.cached_iis) : json(nullptr)},
                  {"plan", r.session.cached_plan ? plan_payload(model, *r.session.cached_plan) : json(nullptr)},
                  {"pending", r.session.pending ? pending_json(*r.session.pending) : json(nullptr)},
                  {"pending_apply", r.pending_apply}};
    if (model_changed) event["model"] = serialize(model, ModelFormat::Text);
    append_event(r.id, event);
  }

  std::shared_ptr<Record> replay(const std::string& id) {
    std::ifstream in(log_path(id));
    if (!in) return nullptr;
    auto r = std::make_shared<Record>();
    r->id = id;
    std::string line;
    bool created = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const json e = json::parse(line);
      if (e.at("event") == "created") {
        const auto format = e.value("format", "text") == "structured" ? ModelFormat::Structured : ModelFormat::Text;
        r->session.model = parse_or_422(e.at("source").get<std::string>(), format);
        r->created = r->updated = e.at("at").get<std::string>();
        r->feasible = e.at("feasible").get<bool>();
        created = true;
        continue;
      }
      if (!created) throw std::runtime_error("session log " + id + " does not start with a creation event");
      r->updated = e.at("at").get<std::string>();
      r->phase = parse_phase(e.at("phase").get<std::string>()).value_or(r->phase);
      r->feasible = e.at("feasible").get<bool>();
      for (const auto& m : e.at("append")) r->session.history.push_back(message_from_json(m));
      if (e.contains("model")) r->session.model = parse_or_422(e["model"].get<std::string>(), ModelFormat::Text);
      r->session.cached_iis = e["iis"].is_null() ? std::nullopt : std::optional(iis_from_json(e["iis"]));
      r->session.cached_plan = e["plan"].is_null() ? std::nullopt : std::optional(plan_from_json(e["plan"]));
      r->session.pending = e["pending"].is_null() ? std::nullopt : std::optional(pending_from_json(e["pending"]));
      r->pending_apply = e.value("pending_apply", false);
    }
    return created ? r : nullptr;
  }

  std::shared_ptr<Record> lookup(const std::string& id) {
    std::lock_guard lock(map_mu);
    if (auto it = sessions.find(id); it != sessions.end()) return it->second;
    if (valid_id(id)) {
      if (auto r = replay(id)) {
        sessions.emplace(id, r);
        return r;
      }
    }
    throw HttpError{404, "NotFound", "no session '" + id + "'"};
  }

  template <typename Fn>
  auto within_budget(Fn&& fn) {
    ScopedDeadline deadline(Clock::now() + config.solve_budget);
    return fn();
  }

  // Live text when a client is configured; the offline renderer otherwise or on failure.
  std::pair<std::string, json> agent_text(Task task, const Model& model, const AgentContext& ctx) {
    auto client = config.make_client();
    std::string fallback_note;
    if (client->is_live()) {
      try {
        const auto bundle = build_prompt(task, model, ctx);
        auto reply = client->complete({{Role::System, bundle.render(), std::nullopt, ""},
                                       {Role::User, "Carry out the task for this model.", std::nullopt, ""}},
                                      {});
        if (auto* text = std::get_if<std::string>(&reply)) return {*text, {{"source", "live"}}};
        fallback_note = "the live model answered with a tool call";
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ClientError) throw;
        fallback_note = e.what();
      }
    }
    json meta = {{"source", "fallback"}};
    if (!fallback_note.empty()) meta["live_error"] = fallback_note;
    return {render_fallback(task, model, ctx), meta};
  }

  void ensure_iis(Record& r) {
    if (r.session.cached_iis) return;
    const auto sys = normalize(r.session.model);
    r.session.cached_iis = deletion_filter(sys, default_oracle(sys));
  }

  void require_infeasible(const Record& r) {
    if (r.feasible) throw HttpError{409, "AlreadyFeasible", "the model is feasible; there is nothing to diagnose"};
  }

  // solve_repair (and apply_repair when asked) on a working copy of the session.
  json run_repair(ChatSession& work, const ToolCall& call, bool apply) {
    json plan = execute_tool(work, call);
    work.history.push_back({Role::Assistant, "", call, ""});
    work.history.push_back({Role::Tool, plan.dump(), std::nullopt, call.name});
    json out = {{"plan", plan}, {"applied", false}};
    if (apply && plan["status"] == "repaired" && plan["mode"] == "tied") {
      const ToolCall ap{"apply_repair", json::object()};
      json applied = execute_tool(work, ap);
      work.history.push_back({Role::Assistant, "", ap, ""});
      work.history.push_back({Role::Tool, applied.dump(), std::nullopt, ap.name});
      out["applied"] = true;
    }
    return out;
  }

  static json body_json(const httplib::Request& req) {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw HttpError{400, "BadRequest", "the request body must be a JSON object"};
    return body;
  }

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename Fn>
  void guarded(httplib::Response& res, const std::string& stage, Fn&& fn) {
    try {
      fn();
    } catch (const HttpError& e) {
      reply(res, e.status, error_payload(e.code, e.message, e.details));
    } catch (const Error& e) {
      json details = json::object();
      const int status = status_for(e.code());
      if (status == 504) details = {{"stage", stage}, {"completed", false}};
      reply(res, status, error_payload(to_string(e.code()), e.what(), details));
    } catch (const json::exception& e) {
      reply(res, 400, error_payload("BadRequest", e.what()));
    }
  }

  void routes() {
    const std::string id = R"(/sessions/([A-Za-z0-9_-]+))";

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "create", [&] {
        const json body = body_json(req);
        if (!body.contains("source") || !body["source"].is_string())
          throw HttpError{400, "BadRequest", "missing 'source'"};
        const std::string source = body["source"];
        if (source.size() > config.max_source_bytes)
          throw HttpError{413, "TooLarge", "model source exceeds " + std::to_string(config.max_source_bytes) + " bytes"};
        const std::string format_name = body.value("format", "text");
        if (format_name != "text" && format_name != "structured")
          throw HttpError{400, "BadRequest", "format must be 'text' or 'structured'"};
        const auto format = format_name == "structured" ? ModelFormat::Structured : ModelFormat::Text;
        Model model = parse_or_422(source, format);
        const bool feasible = within_budget([&] { return is_feasible(model); });

        auto r = std::make_shared<Record>();
        r->id = new_id();
        r->session.model = std::move(model);
        r->feasible = feasible;
        r->created = r->updated = now_iso();
        append_event(r->id, {{"event", "created"}, {"at", r->created}, {"source", source}, {"format", format_name}, {"feasible", feasible}});
        {
          std::lock_guard lock(map_mu);
          sessions.emplace(r->id, r);
        }
        json out = {{"id", r->id}, {"phase", to_string(r->phase)}, {"feasible", feasible}};
        if (feasible) out["notice"] = "The model is already feasible; diagnosis and recommendation do not apply.";
        reply(res, 201, out);
      });
    });

    server.Get(id, [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "read", [&] {
        auto r = lookup(req.matches[1]);
        std::lock_guard lock(r->mu);
        reply(res, 200, snapshot(*r));
      });
    });

    server.Get(id + "/model", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "model", [&] {
        auto r = lookup(req.matches[1]);
        std::lock_guard lock(r->mu);
        res.status = 200;
        res.set_content(serialize(r->session.model, ModelFormat::Text), "text/plain");
      });
    });

    server.Get(id + "/description", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "description", [&] {
        auto r = lookup(req.matches[1]);
        std::lock_guard lock(r->mu);
        auto [text, meta] = within_budget([&] { return agent_text(Task::Analysis, r->session.model, {}); });
        advance(*r, Phase::Described);
        commit(*r, "describe", r->session.history.size(), false);
        reply(res, 200, {{"text", text},
                         {"meta", meta},
                         {"phase", to_string(r->phase)},
                         {"payload", {{"keys", keys_payload(list_keys(r->session.model))}, {"params", params_payload(r->session.model)}}}});
      });
    });

    server.Get(id + "/diagnosis", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "diagnosis", [&] {
        auto r = lookup(req.matches[1]);
        std::lock_guard lock(r->mu);
        require_infeasible(*r);
        auto [text, meta] = within_budget([&] {
          ensure_iis(*r);
          return agent_text(Task::Diagnosis, r->session.model, {r->session.cached_iis, std::nullopt});
        });
        advance(*r, Phase::Diagnosed);
        commit(*r, "diagnose", r->session.history.size(), false);
        const json payload = diagnosis_payload(r->session.model, *r->session.cached_iis);
        reply(res, 200, {{"text", text}, {"meta", meta}, {"phase", to_string(r->phase)}, {"payload", payload}});
      });
    });

    server.Get(id + "/recommendation", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "recommendation", [&] {
        auto r = lookup(req.matches[1]);
        std::lock_guard lock(r->mu);
        require_infeasible(*r);
        std::optional<RepairPlan> plan;
        if (r->session.cached_plan && r->session.cached_plan->status == RepairStatus::Repaired) plan = r->session.cached_plan;
        auto [text, meta] = within_budget([&] {
          ensure_iis(*r);
          return agent_text(Task::Recommendation, r->session.model, {r->session.cached_iis, plan});
        });
        advance(*r, Phase::Diagnosed);
        commit(*r, "recommend", r->session.history.size(), false);
        const Model& model = r->session.model;
        json adjustable = json::array(), discouraged = json::array();
        for (const auto& p : iis_parameters(model, *r->session.cached_iis)) {
          const bool lhs = param_usage(model, p).in_lhs;
          if (model.find_param(p)->is_mutable && !lhs) adjustable.push_back(p);
          else discouraged.push_back({{"name", p}, {"reason", lhs ? "lhs_param" : "immutable_param"}});
        }
        json payload = {{"members", r->session.cached_iis->members},
                        {"candidates", {{"adjustable", adjustable}, {"discouraged", discouraged}}}};
        if (plan) payload["plan"] = plan_payload(model, *plan);
        reply(res, 200, {{"text", text}, {"meta", meta}, {"phase", to_string(r->phase)}, {"payload", payload}});
      });
    });

    server.Post(id + "/chat", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "chat", [&] {
        auto r = lookup(req.matches[1]);
        const json body = body_json(req);
        if (!body.contains("message") || !body["message"].is_string()) throw HttpError{400, "BadRequest", "missing 'message'"};
        if (r->chat_in_flight.exchange(true)) throw HttpError{429, "TurnInFlight", "a chat turn is already running for this session"};
        struct Release {
          std::atomic<bool>& flag;
          ~Release() { flag = false; }
        } release{r->chat_in_flight};
        std::lock_guard lock(r->mu);
        auto client = config.make_client();
        const std::size_t before = r->session.history.size();
        const TurnResult turn = within_budget([&] { return chat_turn(r->session, *client, body["message"].get<std::string>()); });
        if (turn.model_changed) r->feasible = within_budget([&] { return is_feasible(r->session.model); });
        advance(*r, Phase::Chatting);
        commit(*r, "chat", before, turn.model_changed);
        reply(res, 200, {{"reply", turn.reply},
                         {"tools_run", turn.tools_run},
                         {"pending_confirmation", turn.pending_confirmation},
                         {"model_changed", turn.model_changed},
                         {"feasible", r->feasible},
                         {"phase", to_string(r->phase)}});
      });
    });

    server.Post(id + "/repair", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "repair", [&] {
        auto r = lookup(req.matches[1]);
        const json body = body_json(req);
        json args = {{"params", body.value("params", json::array())}};
        if (body.contains("mode")) args["mode"] = body["mode"];
        const bool apply = body.value("apply", false);
        const ToolCall call{"solve_repair", args};
        validate_tool_args(call);
        std::lock_guard lock(r->mu);
        const auto params = args["params"].get<std::vector<std::string>>();
        const GateDecision gate = gate_request(r->session.model, params);
        const std::size_t before = r->session.history.size();
        if (auto* warn = std::get_if<WarnConfirm>(&gate)) {
          r->session.pending = PendingRequest{call, *warn};
          r->pending_apply = apply;
          r->session.history.push_back(
              {Role::Assistant, "Warning: " + warn->consequence + " Confirm to go ahead.", std::nullopt, ""});
          commit(*r, "repair_gated", before, false);
          reply(res, 202, {{"pending_confirmation", true}, {"warning", gate_json(gate)}, {"phase", to_string(r->phase)}});
          return;
        }
        ChatSession work = r->session;
        work.pending.reset();
        json out = within_budget([&] { return run_repair(work, call, apply); });
        const bool changed = !(work.model == r->session.model);
        r->session = std::move(work);
        r->pending_apply = false;
        if (changed) r->feasible = within_budget([&] { return is_feasible(r->session.model); });
        commit(*r, "repair", before, changed);
        out["feasible"] = r->feasible;
        out["phase"] = to_string(r->phase);
        reply(res, 200, out);
      });
    });

    server.Post(id + "/repair/confirm", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, "confirm", [&] {
        auto r = lookup(req.matches[1]);
        std::lock_guard lock(r->mu);
        if (!r->session.pending) throw HttpError{409, "NothingPending", "there is no request waiting for confirmation"};
        const PendingRequest pending = *r->session.pending;
        const std::size_t before = r->session.history.size();
        ChatSession work = r->session;
        work.pending.reset();
        work.history.push_back({Role::User, "[CONFIRM]", std::nullopt, ""});
        json out;
        try {
          out = within_budget([&] { return run_repair(work, pending.call, r->pending_apply); });
        } catch (const Error& e) {
          if (e.code() == ErrorCode::SolveBudgetExceeded || e.code() == ErrorCode::NodeBudgetExceeded) throw;
          // The confirmation is used up even when the solve is refused.
          work.history.push_back({Role::Assistant, "", pending.call, ""});
          work.history.push_back({Role::Tool, json{{"error", error_payload(to_string(e.code()), e.what())}}.dump(), std::nullopt, pending.call.name});
          r->session = std::move(work);
          r->pending_apply = false;
          commit(*r, "confirm", before, false);
          throw;
        }
        const bool changed = !(work.model == r->session.model);
        r->session = std::move(work);
        r->pending_apply = false;
        if (changed) r->feasible = within_budget([&] { return is_feasible(r->session.model); });
        commit(*r, "confirm", before, changed);
        out["feasible"] = r->feasible;
        out["phase"] = to_string(r->phase);
        reply(res, 200, out);
      });
    });

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (res.body.empty()) {
        const std::string code = res.status == 404 ? "NotFound" : res.status == 413 ? "TooLarge" : "HttpError";
        res.set_content(error_payload(code, "HTTP " + std::to_string(res.status)).dump(), "application/json");
      }
    });
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Service::~Service() { stop(); }

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port < 0) throw std::runtime_error("cannot bind " + host);
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace iiswb
