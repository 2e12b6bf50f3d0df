#include "iiswb/prompts.hpp"

#include "iiswb/error.hpp"
#include "iiswb/modelfile.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace iiswb {

namespace detail {
const std::map<std::string, std::string_view>& embedded_prompts();
}

namespace {

std::string file_prefix(Task task) {
  switch (task) {
    case Task::Analysis: return "analysis_";
    case Task::Diagnosis: return "diagnosis_";
    case Task::Recommendation: return "recommendation_";
    case Task::Conversation: return "conversation_";
  }
  return "";
}

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string value_text(const Rational& v) { return to_string(v); }

std::string bound_text(const VarDef& v) {
  std::string kind = v.kind == VarKind::Integer ? "integer" : "continuous";
  if (v.lower && v.upper) return kind + ", " + to_string(*v.lower) + " to " + to_string(*v.upper);
  if (v.lower) return kind + ", >= " + to_string(*v.lower);
  if (v.upper) return kind + ", <= " + to_string(*v.upper);
  return kind + ", free";
}

// "x.lb" -> variable and side.
std::optional<std::pair<const VarDef*, bool>> bound_member(const Model& model, const std::string& member) {
  for (const char* suffix : {".lb", ".ub"}) {
    const std::string sfx = suffix;
    if (member.size() > sfx.size() && member.compare(member.size() - sfx.size(), sfx.size(), sfx) == 0) {
      if (const VarDef* v = model.find_var(member.substr(0, member.size() - sfx.size())))
        return std::make_pair(v, sfx == ".lb");
    }
  }
  return std::nullopt;
}

Constraint numeric_copy(const Constraint& c, const Model& model) {
  Constraint out = c;
  for (auto& t : out.terms) t.coef = Literal{evaluate(t.coef, model)};
  out.rhs = Literal{evaluate(c.rhs, model)};
  return out;
}

std::string side_note(const Model& model, const std::string& param) {
  const ParamDef* p = model.find_param(param);
  const auto usage = param_usage(model, param);
  if (usage.in_lhs) return "multiplies a decision variable; changing it makes the repair a nonconvex MIQCP";
  if (!p->is_mutable) return "fixed in the real world (marked immutable)";
  return "adjustable right-hand-side value";
}

const char* kAnalysisSystem =
    "You explain optimization models to people who do not write them. Use the exact parameter, constraint, and "
    "variable names from the key list, and never invent names that are not in it.";
const char* kDiagnosisSystem =
    "You explain why an optimization model has no feasible solution. The solver has already isolated an "
    "irreducible infeasible subset: a group of constraints that cannot all hold, although any smaller group can. "
    "Refer to constraints and parameters only by the names given.";
const char* kRecommendationSystem =
    "You advise which input parameters to change so that an infeasible model becomes feasible. Prefer values that "
    "are cheap to change in practice, and avoid parameters that multiply decision variables.";
const char* kConversationSystem =
    "You are an assistant for an infeasible optimization model. You can describe the model, find conflicting "
    "constraints, list adjustable parameters, compute a minimal parameter change, apply it, and re-check "
    "feasibility by calling the tools provided.";
const char* kSentiment =
    "Watch the user's attitude toward the suggestions. If they insist on changing a parameter that is fixed in the "
    "real world or that multiplies a variable, do not refuse: state the consequence plainly and ask them to "
    "confirm before anything runs. Stay calm if they are frustrated and keep answers short.";

std::vector<CotStep> steps_for(Task task) {
  switch (task) {
    case Task::Analysis:
      return {{"overview", "Give a one-paragraph overview of what the model decides and what it optimizes."},
              {"parameters", "Summarize the input parameters: what each one means and its current value."},
              {"decisions", "Describe the decisions to be made, one line per variable."},
              {"constraints", "Explain each constraint in plain language, using its name."}};
    case Task::Diagnosis:
      return {{"conflict", "List the conflicting constraints by name and restate each in symbolic form."},
              {"parameters", "Name the parameters those constraints read, with their current values."},
              {"explanation", "Explain in plain language why the constraints cannot hold together."}};
    case Task::Recommendation:
      return {{"collect", "Collect the parameters that appear in the conflicting constraints."},
              {"classify", "Sort them into cheap to change in practice, fixed, and left-hand-side multipliers."},
              {"recommend", "Recommend the cheap right-hand-side ones and say which way each should move."}};
    case Task::Conversation: return {};
  }
  return {};
}

std::string model_listing(const Model& model) {
  std::string out = "Model source:\n";
  out += serialize(model, ModelFormat::Text);
  return out;
}

std::string iis_listing(const Model& model, const IisResult& iis) {
  std::string out = "Irreducible infeasible subset (" + to_string(iis.method) + "):\n";
  for (const auto& m : iis.members)
    out += "- " + symbolic_member(model, m) + "   [numeric: " + numeric_member(model, m) + "]\n";
  return out;
}

std::string candidates_listing(const Model& model, const IisResult& iis) {
  std::string out = "Parameters in the conflict:\n";
  for (const auto& p : iis_parameters(model, iis))
    out += "- " + p + " = " + value_text(model.find_param(p)->value) + ": " + side_note(model, p) + "\n";
  return out;
}

std::string plan_summary(const Model& model, const RepairPlan& plan) {
  if (plan.status == RepairStatus::AlreadyFeasible) return "The model is already feasible.\n";
  std::string out = "Last computed repair (total change " + to_string(plan.total) + "):\n";
  for (const auto& r : explain_deltas(model, plan)) out += "- " + r.phrase() + "\n";
  return out;
}

}  // namespace

std::string to_string(Task task) {
  switch (task) {
    case Task::Analysis: return "analysis";
    case Task::Diagnosis: return "diagnosis";
    case Task::Recommendation: return "recommendation";
    case Task::Conversation: return "conversation";
  }
  return "unknown";
}

std::string to_string(Technique technique) {
  switch (technique) {
    case Technique::ExpertCoT: return "expert_cot";
    case Technique::FewShot: return "few_shot";
    case Technique::KeyRetrieve: return "key_retrieve";
    case Technique::Sentiment: return "sentiment";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view text) {
  for (Task t : {Task::Analysis, Task::Diagnosis, Task::Recommendation, Task::Conversation}) {
    const std::string code = "T" + std::to_string(static_cast<int>(t) + 1);
    if (text == code || text == to_string(t)) return t;
  }
  return std::nullopt;
}

std::set<Technique> techniques_for(Task task) {
  switch (task) {
    case Task::Analysis:
    case Task::Diagnosis: return {Technique::ExpertCoT, Technique::FewShot, Technique::KeyRetrieve};
    case Task::Recommendation: return {Technique::ExpertCoT, Technique::FewShot};
    case Task::Conversation: return {Technique::Sentiment};
  }
  return {};
}

Exemplar parse_exemplar(std::string_view text) {
  Exemplar ex;
  std::string* section = nullptr;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (starts_with(line, "title:")) {
      ex.title = trim(std::string_view(line).substr(6));
    } else if (starts_with(line, "--- question")) {
      section = &ex.question;
    } else if (starts_with(line, "--- answer")) {
      section = &ex.answer;
    } else if (section) {
      *section += line + "\n";
    }
  }
  ex.question = trim(ex.question);
  ex.answer = trim(ex.answer);
  return ex;
}

std::vector<Exemplar> load_exemplars(Task task) {
  const std::string prefix = file_prefix(task);
  std::vector<std::pair<std::string, std::string>> files;
  if (const char* dir = std::getenv("WORKBENCH_PROMPTS_DIR"); dir && *dir) {
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
      const std::string name = entry.path().filename().string();
      if (!starts_with(name, prefix) || entry.path().extension() != ".txt") continue;
      std::ifstream in(entry.path());
      std::stringstream buf;
      buf << in.rdbuf();
      files.emplace_back(name, buf.str());
    }
  } else {
    for (const auto& [name, content] : detail::embedded_prompts())
      if (starts_with(name, prefix)) files.emplace_back(name, std::string(content));
  }
  std::sort(files.begin(), files.end());
  std::vector<Exemplar> out;
  for (const auto& [name, content] : files) out.push_back(parse_exemplar(content));
  return out;
}

std::set<Technique> PromptBundle::techniques() const {
  std::set<Technique> out;
  if (!steps.empty()) out.insert(Technique::ExpertCoT);
  if (!exemplars.empty()) out.insert(Technique::FewShot);
  if (keys) out.insert(Technique::KeyRetrieve);
  if (!sentiment_text.empty()) out.insert(Technique::Sentiment);
  return out;
}

std::vector<std::string> PromptBundle::step_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : steps) ids.push_back(s.id);
  return ids;
}

std::string render_keys(const KeyInventory& keys) {
  std::string out;
  auto line = [&](const char* label, const std::vector<std::string>& names) {
    out += label;
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : " ") + names[i];
    out += "\n";
  };
  std::vector<std::string> params, constraints, vars;
  for (const auto& p : keys.params) params.push_back(p.name);
  for (const auto& c : keys.constraints) constraints.push_back(c.name);
  for (const auto& v : keys.vars) vars.push_back(v.name);
  line("parameters:", params);
  line("constraints:", constraints);
  line("variables:", vars);
  return out;
}

std::string PromptBundle::render() const {
  std::string out = system_text + "\n";
  if (keys) out += "\nKeys (use these names exactly):\n" + render_keys(*keys);
  if (!steps.empty()) {
    out += "\nWork through these steps in order:\n";
    for (std::size_t i = 0; i < steps.size(); ++i)
      out += std::to_string(i + 1) + ". " + steps[i].id + ": " + steps[i].instruction + "\n";
  }
  if (!exemplars.empty()) {
    out += "\nWorked examples:\n";
    for (const auto& ex : exemplars) out += "\n### " + ex.title + "\nInput:\n" + ex.question + "\nAnswer:\n" + ex.answer + "\n";
  }
  if (!sentiment_text.empty()) out += "\n" + sentiment_text + "\n";
  if (!context_text.empty()) out += "\n" + context_text;
  return out;
}

std::string symbolic_member(const Model& model, const std::string& member) {
  if (const Constraint* c = model.find_constraint(member)) return member + ": " + format_constraint(*c);
  if (auto b = bound_member(model, member)) {
    const auto& [v, lower] = *b;
    return member + ": " + v->name + (lower ? " >= " + to_string(*v->lower) : " <= " + to_string(*v->upper));
  }
  return member;
}

std::string numeric_member(const Model& model, const std::string& member) {
  if (const Constraint* c = model.find_constraint(member))
    return member + ": " + format_constraint(numeric_copy(*c, model));
  return symbolic_member(model, member);
}

std::vector<std::string> iis_parameters(const Model& model, const IisResult& iis) {
  std::set<std::string> used;
  for (const auto& m : iis.members) {
    const Constraint* c = model.find_constraint(m);
    if (!c) continue;
    for (const auto& t : c->terms)
      if (auto p = param_of(t.coef)) used.insert(std::string(*p));
    if (auto p = param_of(c->rhs)) used.insert(std::string(*p));
  }
  std::vector<std::string> out;
  for (const auto& p : model.params)
    if (used.count(p.name)) out.push_back(p.name);
  return out;
}

PromptBundle build_prompt(Task task, const Model& model, const AgentContext& context) {
  if ((task == Task::Diagnosis || task == Task::Recommendation) && !context.iis)
    throw Error(ErrorCode::MissingContext, to_string(task) + " needs an IIS; run the diagnosis first");
  PromptBundle bundle;
  bundle.task = task;
  bundle.steps = steps_for(task);
  const auto techniques = techniques_for(task);
  if (techniques.count(Technique::FewShot)) bundle.exemplars = load_exemplars(task);
  if (techniques.count(Technique::KeyRetrieve)) bundle.keys = list_keys(model);
  if (techniques.count(Technique::Sentiment)) bundle.sentiment_text = kSentiment;
  switch (task) {
    case Task::Analysis:
      bundle.system_text = kAnalysisSystem;
      bundle.context_text = model_listing(model);
      break;
    case Task::Diagnosis:
      bundle.system_text = kDiagnosisSystem;
      bundle.context_text = iis_listing(model, *context.iis);
      break;
    case Task::Recommendation:
      bundle.system_text = kRecommendationSystem;
      bundle.context_text = iis_listing(model, *context.iis) + candidates_listing(model, *context.iis);
      if (context.plan) bundle.context_text += plan_summary(model, *context.plan);
      break;
    case Task::Conversation:
      bundle.system_text = kConversationSystem;
      if (context.iis) bundle.context_text += iis_listing(model, *context.iis);
      if (context.plan) bundle.context_text += plan_summary(model, *context.plan);
      break;
  }
  return bundle;
}

std::string render_fallback(Task task, const Model& model, const AgentContext& context) {
  if ((task == Task::Diagnosis || task == Task::Recommendation) && !context.iis)
    throw Error(ErrorCode::MissingContext, to_string(task) + " needs an IIS; run the diagnosis first");
  std::string out;
  switch (task) {
    case Task::Analysis: {
      std::size_t integers = 0;
      for (const auto& v : model.vars) integers += v.kind == VarKind::Integer;
      out += "Overview: model " + model.name + " has " + std::to_string(model.vars.size()) + " decision variable(s)";
      if (integers) out += " (" + std::to_string(integers) + " integer)";
      out += ", " + std::to_string(model.constraints.size()) + " constraint(s) and " +
             std::to_string(model.params.size()) + " parameter(s). ";
      if (model.objective)
        out += std::string(model.objective->sense == ObjectiveSense::Maximize ? "It maximizes " : "It minimizes ") +
               format_terms(model.objective->terms) + ".\n";
      else
        out += "It has no objective; it only asks for a feasible plan.\n";
      out += "\nParameters:\n";
      for (const auto& p : model.params) {
        out += "- " + p.name + " = " + value_text(p.value) + (p.is_mutable ? " (adjustable)" : " (fixed)");
        if (!p.description.empty()) out += ": " + p.description;
        out += "\n";
      }
      if (model.params.empty()) out += "- none\n";
      out += "\nDecisions:\n";
      for (const auto& v : model.vars) {
        out += "- " + v.name + " (" + bound_text(v) + ")";
        if (!v.description.empty()) out += ": " + v.description;
        out += "\n";
      }
      out += "\nConstraints:\n";
      for (const auto& c : model.constraints) {
        out += "- " + c.name + ": " + format_constraint(c);
        if (!c.description.empty()) out += " (" + c.description + ")";
        out += "\n";
      }
      if (model.constraints.empty()) out += "- none\n";
      break;
    }
    case Task::Diagnosis: {
      const auto& iis = *context.iis;
      out += "The model is infeasible. These " + std::to_string(iis.members.size()) +
             " item(s) cannot all hold, while dropping any one of them leaves the rest satisfiable:\n";
      for (const auto& m : iis.members) {
        out += "- " + symbolic_member(model, m);
        const std::string numeric = numeric_member(model, m);
        if (numeric != symbolic_member(model, m)) out += "   (with current values: " + numeric.substr(m.size() + 2) + ")";
        if (const Constraint* c = model.find_constraint(m); c && !c->description.empty())
          out += "; " + c->description;
        out += "\n";
      }
      const auto params = iis_parameters(model, iis);
      if (!params.empty()) {
        out += "\nParameters involved:";
        for (std::size_t i = 0; i < params.size(); ++i)
          out += (i ? ", " : " ") + params[i] + " = " + value_text(model.find_param(params[i])->value);
        out += ".\n";
      }
      out += "\nIn plain terms: the requirements above contradict each other at the current data, so at least one of "
             "them, or a parameter it reads, has to change.\n";
      break;
    }
    case Task::Recommendation: {
      const auto params = iis_parameters(model, *context.iis);
      std::vector<std::string> good, discouraged;
      for (const auto& p : params) {
        const auto usage = param_usage(model, p);
        if (model.find_param(p)->is_mutable && !usage.in_lhs) good.push_back(p);
        else discouraged.push_back(p);
      }
      out += "Recommended to adjust:\n";
      for (const auto& p : good) {
        const ParamDef* def = model.find_param(p);
        out += "- " + p + " (currently " + value_text(def->value) + ")";
        if (!def->description.empty()) out += ": " + def->description;
        out += "\n";
      }
      if (good.empty()) out += "- none of the parameters in the conflict is cheap to change\n";
      if (!discouraged.empty()) {
        out += "\nDiscouraged:\n";
        for (const auto& p : discouraged) out += "- " + p + ": " + side_note(model, p) + "\n";
      }
      if (context.plan) out += "\n" + plan_summary(model, *context.plan);
      break;
    }
    case Task::Conversation:
      out += "I can describe the model, find the constraints that conflict, list the parameters you can change, "
             "compute the smallest change that restores feasibility, and apply it.\n";
      if (context.iis) {
        out += "Known conflict:";
        for (std::size_t i = 0; i < context.iis->members.size(); ++i) out += (i ? ", " : " ") + context.iis->members[i];
        out += ".\n";
      }
      if (context.plan) out += plan_summary(model, *context.plan);
      break;
  }
  return out;
}

}  // namespace iiswb
