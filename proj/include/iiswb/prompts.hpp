#pragma once

// Prompt assembly for the four assistant tasks and a template renderer that
// answers them offline.
//
//   task             CoT  few-shot  keys  sentiment
//   Analysis (T1)     x      x       x
//   Diagnosis (T2)    x      x       x
//   Recommend (T3)    x      x
//   Conversation (T4)                        x

#include "iiswb/iis.hpp"
#include "iiswb/model.hpp"
#include "iiswb/repair.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace iiswb {

enum class Task { Analysis, Diagnosis, Recommendation, Conversation };
enum class Technique { ExpertCoT, FewShot, KeyRetrieve, Sentiment };

std::string to_string(Task task);
std::string to_string(Technique technique);
/// "T1".."T4" or the lower-case names.
std::optional<Task> parse_task(std::string_view text);

/// The fixed technique table above.
std::set<Technique> techniques_for(Task task);

struct Exemplar {
  std::string title;
  std::string question;
  std::string answer;
};

/// Exemplars for a task: files named <task>_*.txt from $WORKBENCH_PROMPTS_DIR
/// when set, otherwise the copies compiled in from data/prompts.
std::vector<Exemplar> load_exemplars(Task task);
/// "title: ...", "--- question", "--- answer" sections.
Exemplar parse_exemplar(std::string_view text);

struct AgentContext {
  std::optional<IisResult> iis;
  std::optional<RepairPlan> plan;
};

struct CotStep {
  std::string id;  // "overview", "parameters", ...
  std::string instruction;
};

struct PromptBundle {
  Task task = Task::Analysis;
  std::string system_text;
  std::vector<CotStep> steps;
  std::vector<Exemplar> exemplars;
  /// Key-retrieve block: list_keys output, verbatim.
  std::optional<KeyInventory> keys;
  std::string sentiment_text;
  /// Task material (model listing, IIS expressions, candidate parameters).
  std::string context_text;

  /// Techniques actually present in this bundle.
  std::set<Technique> techniques() const;
  std::vector<std::string> step_ids() const;
  /// Single system message for a chat-completion request.
  std::string render() const;
};

/// Throws MissingContext (Diagnosis and Recommendation need an IIS).
PromptBundle build_prompt(Task task, const Model& model, const AgentContext& context = {});

/// Deterministic offline answer following the same steps.
std::string render_fallback(Task task, const Model& model, const AgentContext& context = {});

/// "demand: x >= dmin" for constraints, "x.lb: x >= 0" for bounds.
std::string symbolic_member(const Model& model, const std::string& member);
/// Same with parameter values substituted: "demand: x >= 1".
std::string numeric_member(const Model& model, const std::string& member);

/// Parameters read by the given IIS members, in model declaration order.
std::vector<std::string> iis_parameters(const Model& model, const IisResult& iis);

std::string render_keys(const KeyInventory& keys);

}  // namespace iiswb
