#include "iiswb/cli.hpp"

#include "iiswb/agent.hpp"
#include "iiswb/budget.hpp"
#include "iiswb/error.hpp"
#include "iiswb/modelfile.hpp"
#include "iiswb/payloads.hpp"
#include "iiswb/service.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace iiswb {

namespace {

struct ParseFailure {
  std::vector<ParseError> errors;
};

Model load(const std::string& path) {
  auto parsed = load_model_file(path);
  if (auto* errors = std::get_if<std::vector<ParseError>>(&parsed)) throw ParseFailure{*errors};
  return std::get<Model>(std::move(parsed));
}

int exit_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::SolveBudgetExceeded:
    case ErrorCode::NodeBudgetExceeded:
    case ErrorCode::EnumerationBudgetExceeded:
    case ErrorCode::TooLarge: return kExitBudget;
    case ErrorCode::InvalidModel: return kExitParse;
    case ErrorCode::NotInfeasible: return kExitOk;
    default: return kExitUsage;
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Live answer for a single task, or the offline renderer.
std::string task_text(Task task, const Model& model, const AgentContext& ctx, bool live) {
  if (!live) return render_fallback(task, model, ctx);
  auto cfg = live_config_from_env();
  if (!cfg) throw Error(ErrorCode::ClientError, "--live needs WORKBENCH_LLM_URL");
  HttpChatClient client(*cfg);
  const auto bundle = build_prompt(task, model, ctx);
  auto reply = client.complete({{Role::System, bundle.render(), std::nullopt, ""},
                                {Role::User, "Carry out the task for this model.", std::nullopt, ""}},
                               {});
  if (auto* text = std::get_if<std::string>(&reply)) return *text;
  throw Error(ErrorCode::ClientError, "protocol: the live model answered with a tool call");
}

std::optional<IisResult> diagnose(const Model& model) {
  const auto sys = normalize(model);
  try {
    return deletion_filter(sys, default_oracle(sys));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NotInfeasible) return std::nullopt;
    throw;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diagnose and repair infeasible linear and mixed-integer models."};
  app.require_subcommand(1);
  std::string file;
  bool as_json = false;

  auto* check = app.add_subcommand("check", "Report whether the model is feasible");
  check->add_option("file", file, "Model file (.om or .json)")->required()->check(CLI::ExistingFile);
  check->add_flag("--json", as_json, "Print the structured payload");

  std::string method = "deletion";
  auto* iis = app.add_subcommand("iis", "Find irreducible infeasible subsets");
  iis->add_option("file", file)->required()->check(CLI::ExistingFile);
  iis->add_option("--method", method, "deletion, additive, enumerate, or all")
      ->check(CLI::IsMember({"deletion", "additive", "enumerate", "all"}));
  iis->add_flag("--json", as_json);

  std::string params, mode = "tied", apply_out;
  auto* repair = app.add_subcommand("repair", "Smallest parameter change that restores feasibility");
  repair->add_option("file", file)->required()->check(CLI::ExistingFile);
  repair->add_option("--params", params, "Comma-separated parameter names")->required();
  repair->add_option("--mode", mode)->check(CLI::IsMember({"tied", "entry"}));
  repair->add_option("--apply", apply_out, "Write the repaired model here");
  repair->add_flag("--json", as_json);

  bool live = false;
  auto* describe = app.add_subcommand("describe", "Explain the model in plain language");
  describe->add_option("file", file)->required()->check(CLI::ExistingFile);
  describe->add_flag("--live", live, "Ask the configured chat endpoint");
  describe->add_flag("--json", as_json);

  auto* diag = app.add_subcommand("diagnose", "Explain why the model is infeasible");
  diag->add_option("file", file)->required()->check(CLI::ExistingFile);
  diag->add_flag("--live", live);
  diag->add_flag("--json", as_json);

  auto* chat = app.add_subcommand("chat", "Talk to the assistant about a model");
  chat->add_option("file", file)->required()->check(CLI::ExistingFile);

  int port = service_port_from_env();
  std::string host = "0.0.0.0";
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port);
  serve->add_option("--host", host);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << "Run with --help for usage.\n";
    return kExitUsage;
  }

  const auto budget = service_config_from_env().solve_budget;
  try {
    if (serve->parsed()) {
      Service service(service_config_from_env());
      err << "listening on " << host << ":" << port << "\n";
      return service.listen(host, port) ? kExitOk : kExitUsage;
    }

    Model model = load(file);
    ScopedDeadline deadline(Clock::now() + budget);

    if (check->parsed()) {
      const json payload = feasibility_payload(model);
      const bool feasible = payload["feasible"];
      if (as_json) out << payload.dump(2) << "\n";
      else out << (feasible ? "feasible" : "infeasible") << "\n";
      return feasible ? kExitOk : kExitInfeasible;
    }

    if (iis->parsed()) {
      const auto sys = normalize(model);
      if (method == "deletion" || method == "additive") {
        const OracleKind oracle = default_oracle(sys);
        IisResult result = method == "deletion" ? deletion_filter(sys, oracle) : additive_method(sys, oracle);
        if (as_json) {
          out << iis_payload(model, result).dump(2) << "\n";
        } else {
          for (const auto& m : result.members) out << symbolic_member(model, m) << "\n";
          err << result.members.size() << " member(s), " << result.solver_calls << " solver call(s)\n";
        }
        return kExitOk;
      }
      std::vector<IisResult> all;
      if (method == "enumerate") {
        all = enumerate_iis_lp(sys);
      } else {
        for (const auto& rows : oracle_iis_all(sys, default_oracle(sys)))
          all.push_back({member_ids(sys, rows), rows, IisMethod::Oracle, 0});
      }
      if (all.empty()) throw Error(ErrorCode::NotInfeasible, "the model is feasible; it has no IIS");
      if (as_json) {
        json arr = json::array();
        for (const auto& r : all) arr.push_back(iis_payload(model, r));
        out << arr.dump(2) << "\n";
      } else {
        for (std::size_t i = 0; i < all.size(); ++i) {
          out << "IIS " << i + 1 << ":\n";
          for (const auto& m : all[i].members) out << "  " << symbolic_member(model, m) << "\n";
        }
      }
      return kExitOk;
    }

    if (repair->parsed()) {
      RepairSpec spec{split_list(params), mode == "entry" ? RepairMode::Entry : RepairMode::Tied, {}};
      const GateDecision gate = gate_request(model, spec.targets);
      if (auto* warn = std::get_if<WarnConfirm>(&gate)) err << "warning: " << warn->consequence << "\n";
      RepairPlan plan = solve_repair(model, spec);
      bool applied = false;
      if (!apply_out.empty()) {
        Model fixed = apply_repair(model, plan);
        std::ofstream file_out(apply_out);
        file_out << serialize(fixed, ModelFormat::Text);
        if (!file_out) {
          err << "cannot write " << apply_out << "\n";
          return kExitUsage;
        }
        applied = true;
      }
      if (as_json) {
        out << json{{"plan", plan_payload(model, plan)}, {"applied", applied}}.dump(2) << "\n";
      } else if (plan.status == RepairStatus::AlreadyFeasible) {
        out << "already feasible; nothing to change\n";
      } else {
        out << "total change " << to_string(plan.total) << "\n";
        for (const auto& r : explain_deltas(model, plan)) out << r.phrase() << (r.member.empty() ? "" : " (via " + r.member + ")") << "\n";
        if (applied) err << "wrote " << apply_out << "\n";
      }
      return kExitOk;
    }

    if (describe->parsed()) {
      if (as_json) out << json{{"text", task_text(Task::Analysis, model, {}, live)}, {"payload", {{"keys", keys_payload(list_keys(model))}, {"params", params_payload(model)}}}}.dump(2) << "\n";
      else out << task_text(Task::Analysis, model, {}, live);
      return kExitOk;
    }

    if (diag->parsed()) {
      auto found = diagnose(model);
      if (!found) {
        err << "the model is feasible; there is nothing to diagnose\n";
        return kExitOk;
      }
      const std::string text = task_text(Task::Diagnosis, model, {found, std::nullopt}, live);
      if (as_json) out << json{{"text", text}, {"payload", diagnosis_payload(model, *found)}}.dump(2) << "\n";
      else out << text;
      return kExitOk;
    }

    if (chat->parsed()) {
      ChatSession session{model, {}, std::nullopt, std::nullopt, std::nullopt};
      auto client = client_from_env();
      err << (client->is_live() ? "live" : "offline") << " assistant; type 'quit' to leave\n";
      std::string line;
      while (true) {
        err << "> " << std::flush;
        if (!std::getline(in, line) || line == "quit" || line == "exit") break;
        if (line.empty()) continue;
        try {
          ScopedDeadline turn_deadline(Clock::now() + budget);
          TurnResult turn = chat_turn(session, *client, line);
          out << turn.reply << "\n";
          if (!turn.tools_run.empty()) {
            err << "[tools:";
            for (const auto& t : turn.tools_run) err << " " << t;
            err << "]\n";
          }
        } catch (const Error& e) {
          err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
        }
      }
      return kExitOk;
    }
  } catch (const ParseFailure& f) {
    for (const auto& e : f.errors)
      err << file << ":" << e.span.line << ":" << e.span.column << ": " << to_string(e.kind) << ": " << e.message << "\n";
    return kExitParse;
  } catch (const Error& e) {
    err << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_for(e.code());
  }
  return kExitUsage;
}

}  // namespace iiswb
