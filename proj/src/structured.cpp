// SPDX-License-Identifier: Apache-2.0
#include "concord/structured.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <fmt/core.h>
#include <yaml-cpp/yaml.h>

#include "concord/errors.hpp"

namespace concord {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string_view clip(std::string_view s, std::size_t n = 400) {
  return s.size() <= n ? s : s.substr(0, n);
}

struct Block {
  std::string key;
  std::string yaml;  // dedented
};

int indent_of(std::string_view line) {
  int n = 0;
  while (n < static_cast<int>(line.size()) && line[n] == ' ') ++n;
  return n;
}

bool starts_with_key(std::string_view content, std::string_view key) {
  if (content.substr(0, key.size()) != key) return false;
  if (content.size() == key.size() || content[key.size()] != ':') return false;
  return content.size() == key.size() + 1 || content[key.size() + 1] == ' ';
}

// Finds every block rooted at one of `keys`. A block is the root line plus all
// following lines that are blank, more indented, or sequence items at the
// root's indentation.
std::vector<Block> find_blocks(std::string_view text, std::initializer_list<std::string_view> keys) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }

  std::vector<Block> blocks;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const int root_indent = indent_of(lines[i]);
    auto content = lines[i].substr(root_indent);
    std::string_view matched;
    for (auto key : keys)
      if (starts_with_key(content, key)) matched = key;
    if (matched.empty()) continue;

    std::vector<std::string> body{std::string(content)};
    std::size_t j = i + 1;
    for (; j < lines.size(); ++j) {
      auto line = lines[j];
      auto stripped = trim(line);
      if (stripped.rfind("```", 0) == 0) break;
      if (stripped.empty()) {
        body.emplace_back();
        continue;
      }
      const int ind = indent_of(line);
      auto c = line.substr(ind);
      const bool seq_item = ind == root_indent && (c == "-" || c.rfind("- ", 0) == 0);
      if (ind <= root_indent && !seq_item) break;
      body.emplace_back(line.substr(static_cast<std::size_t>(root_indent)));
    }
    while (!body.empty() && body.back().empty()) body.pop_back();
    std::string yaml;
    for (const auto& l : body) yaml += l + "\n";
    blocks.push_back(Block{std::string(matched), std::move(yaml)});
    i = j - 1;
  }
  return blocks;
}

// yaml-cpp accepts a quoted scalar that runs into the end of input, which
// is exactly what a cut-off response looks like. Reject those.
bool closed_quote(const std::string& yaml, std::size_t pos) {
  const char q = yaml[pos];
  for (std::size_t k = pos + 1; k < yaml.size(); ++k) {
    if (q == '"' && yaml[k] == '\\') {
      ++k;
    } else if (yaml[k] == q) {
      if (q == '\'' && k + 1 < yaml.size() && yaml[k + 1] == '\'') {
        ++k;
        continue;
      }
      return true;
    }
  }
  return false;
}

void check_quotes(const YAML::Node& node, const std::string& yaml) {
  if (node.IsScalar()) {
    const auto pos = static_cast<std::size_t>(node.Mark().pos);
    if (node.Tag() == "!" && pos < yaml.size() && (yaml[pos] == '"' || yaml[pos] == '\'') &&
        !closed_quote(yaml, pos))
      throw ParseFailure("unterminated quoted scalar", yaml.substr(pos));
  } else if (node.IsSequence()) {
    for (const auto& item : node) check_quotes(item, yaml);
  } else if (node.IsMap()) {
    for (const auto& kv : node) {
      check_quotes(kv.first, yaml);
      check_quotes(kv.second, yaml);
    }
  }
}

YAML::Node load_block(const Block& block) {
  try {
    auto doc = YAML::Load(block.yaml);
    if (!doc.IsMap() || !doc[block.key])
      throw ParseFailure(fmt::format("block '{}' is not a mapping", block.key), block.yaml);
    check_quotes(doc, block.yaml);
    return doc[block.key];
  } catch (const YAML::Exception& e) {
    throw ParseFailure(fmt::format("malformed '{}' block: {}", block.key, e.what()), block.yaml);
  }
}

[[noreturn]] void fail(const std::string& why, std::string_view span) {
  throw ParseFailure(why, std::string(clip(span)));
}

std::string scalar(const YAML::Node& node, std::string_view what, std::string_view span,
                   bool allow_empty = false) {
  if (!node || !node.IsScalar()) fail(fmt::format("missing or non-scalar '{}'", what), span);
  auto value = trim(node.as<std::string>());
  if (value.empty() && !allow_empty) fail(fmt::format("empty '{}'", what), span);
  return value;
}

int integer(const YAML::Node& node, std::string_view what, std::string_view span) {
  auto s = scalar(node, what, span);
  try {
    std::size_t used = 0;
    int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(fmt::format("'{}' is not an integer: {}", what, s), span);
  }
}

std::vector<std::string> string_list(const YAML::Node& node, std::string_view what,
                                     std::string_view span) {
  std::vector<std::string> out;
  if (!node || node.IsNull()) return out;
  if (!node.IsSequence()) fail(fmt::format("'{}' is not a list", what), span);
  for (const auto& item : node) {
    if (item.IsMap()) {
      auto d = item["description"] ? item["description"] : item["task"];
      out.push_back(scalar(d, what, span));
    } else {
      out.push_back(scalar(item, what, span));
    }
  }
  return out;
}

AgentIndex claim_key(const std::string& key, std::string_view span) {
  static const std::regex pattern(R"((?:agent_?)?(\d+))", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(key, m, pattern)) fail(fmt::format("bad claims key '{}'", key), span);
  return std::stoi(m[1]);
}

std::vector<AgentIndex> agent_list(const YAML::Node& node, std::string_view span) {
  if (!node) fail("missing 'agents'", span);
  std::vector<AgentIndex> out;
  if (node.IsSequence()) {
    for (const auto& a : node) out.push_back(integer(a, "agents", span));
  } else {
    out.push_back(integer(node, "agents", span));
  }
  return out;
}

std::map<AgentIndex, std::string> claims_map(const YAML::Node& node, std::string_view span) {
  if (!node || !node.IsMap()) fail("missing 'claims' mapping", span);
  std::map<AgentIndex, std::string> out;
  for (const auto& kv : node)
    out[claim_key(kv.first.as<std::string>(), span)] = scalar(kv.second, "claim", span);
  return out;
}

template <typename T, typename Check>
T checked(T value, Check&& check, std::string_view span) {
  try {
    check(value);
  } catch (const Error& e) {
    fail(e.what(), span);
  }
  return value;
}

Conflict conflict_from(const YAML::Node& node, std::string_view span) {
  if (!node.IsMap()) fail("conflict entry is not a mapping", span);
  if (node["conflict"]) return conflict_from(node["conflict"], span);
  Conflict c;
  c.agents = agent_list(node["agents"], span);
  c.description = scalar(node["description"], "description", span);
  c.claims = claims_map(node["claims"], span);
  return checked(std::move(c), [](const Conflict& v) { validate_conflict(v); }, span);
}

Resolution resolution_from(const YAML::Node& node, std::string_view span) {
  if (!node.IsMap()) fail("resolution entry is not a mapping", span);
  if (node["resolution"]) return resolution_from(node["resolution"], span);
  Resolution r;
  r.agents = agent_list(node["agents"], span);
  r.description = scalar(node["description"], "description", span);
  r.claims = claims_map(node["claims"], span);
  r.correct_claim = scalar(node["correct_claim"], "correct_claim", span);
  if (node["justification"])
    r.justification = scalar(node["justification"], "justification", span, true);
  else if (node["reason"])
    r.justification = scalar(node["reason"], "reason", span, true);
  return checked(std::move(r), [](const Resolution& v) { validate_resolution(v); }, span);
}

Directive directive_from(const YAML::Node& node, std::string_view span) {
  if (!node.IsMap()) fail("directive entry is not a mapping", span);
  if (node["directive"]) return directive_from(node["directive"], span);
  Directive d;
  d.target_agent_index = integer(node["target_agent_index"], "target_agent_index", span);
  d.modification_instruction =
      scalar(node["modification_instruction"], "modification_instruction", span);
  if (d.target_agent_index < 0) fail("negative target_agent_index", span);
  return d;
}

// Plural root key holding a list, or one-or-more singular blocks.
template <typename T, typename Convert>
std::vector<T> collect(std::string_view text, std::string_view plural, std::string_view singular,
                       Convert&& convert) {
  auto blocks = find_blocks(text, {plural, singular});
  if (blocks.empty()) fail(fmt::format("no '{}' block found", plural), text);

  std::optional<ParseFailure> first_failure;
  for (const auto& b : blocks) {
    if (b.key != plural) continue;
    try {
      auto node = load_block(b);
      std::vector<T> out;
      if (node.IsNull()) return out;
      if (!node.IsSequence()) fail(fmt::format("'{}' is not a list", plural), b.yaml);
      for (const auto& item : node) out.push_back(convert(item, b.yaml));
      return out;
    } catch (const ParseFailure& e) {
      if (!first_failure) first_failure = e;
    }
  }
  if (first_failure) throw *first_failure;

  std::vector<T> out;
  for (const auto& b : blocks) out.push_back(convert(load_block(b), b.yaml));
  return out;
}

YAML::Node single(std::string_view text, std::string_view key) {
  auto blocks = find_blocks(text, {key});
  if (blocks.empty()) fail(fmt::format("no '{}' block found", key), text);
  std::optional<ParseFailure> first_failure;
  for (const auto& b : blocks) {
    try {
      return load_block(b);
    } catch (const ParseFailure& e) {
      if (!first_failure) first_failure = e;
    }
  }
  throw *first_failure;
}

std::string_view tag_body(std::string_view text, std::string_view tag, bool required) {
  const std::string open = fmt::format("<{}>", tag);
  const std::string close = fmt::format("</{}>", tag);
  auto b = text.find(open);
  if (b == std::string_view::npos) {
    if (required) fail(fmt::format("no <{}> element", tag), text);
    return {};
  }
  auto e = text.find(close, b);
  if (e == std::string_view::npos) fail(fmt::format("unterminated <{}> element", tag), text.substr(b));
  return text.substr(b + open.size(), e - b - open.size());
}

std::optional<int> step_number(std::string_view raw, bool allow_na, std::string_view span) {
  auto s = trim(raw);
  std::string lowered = s;
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (allow_na && (lowered == "n/a" || lowered == "na" || lowered == "none" || lowered.empty()))
    return std::nullopt;
  static const std::regex digits(R"(^(?:step[ _]?)?(\d+)$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(s, m, digits)) fail(fmt::format("bad step number '{}'", s), span);
  return std::stoi(m[1]);
}

}  // namespace

std::string_view to_string(Schema s) {
  switch (s) {
    case Schema::conflict_report: return "conflict_report";
    case Schema::resolution_set: return "resolution_set";
    case Schema::directive_set: return "directive_set";
    case Schema::final_answer: return "final_answer";
    case Schema::critic_report: return "critic_report";
    case Schema::plan: return "plan";
    case Schema::task_selection: return "task_selection";
    case Schema::findings: return "findings";
    case Schema::replan_decision: return "replan_decision";
    case Schema::revision: return "revision";
    case Schema::error_type: return "error_type";
  }
  return "?";
}

std::vector<Conflict> parse_conflict_report(std::string_view text) {
  return collect<Conflict>(text, "conflicts", "conflict", conflict_from);
}

std::vector<Resolution> parse_resolution_set(std::string_view text) {
  return collect<Resolution>(text, "resolutions", "resolution", resolution_from);
}

std::vector<Directive> parse_directive_set(std::string_view text) {
  return collect<Directive>(text, "directives", "directive", directive_from);
}

std::string parse_final_answer(std::string_view text) {
  return scalar(single(text, "final_answer"), "final_answer", text);
}

std::vector<std::string> parse_plan(std::string_view text) {
  auto tasks = string_list(single(text, "plan"), "plan", text);
  if (tasks.empty()) fail("plan has no tasks", text);
  return tasks;
}

std::string parse_task_selection(std::string_view text) {
  return scalar(single(text, "selected_task"), "selected_task", text);
}

std::vector<std::string> parse_findings(std::string_view text) {
  return string_list(single(text, "findings"), "findings", text);
}

ReplanDecision parse_replan_decision(std::string_view text) {
  auto node = single(text, "replan");
  if (!node.IsMap()) fail("'replan' is not a mapping", text);
  ReplanDecision d;
  auto status = scalar(node["status"], "status", text);
  if (status == "done")
    d.executed_status = TaskStatus::done;
  else if (status == "abandoned")
    d.executed_status = TaskStatus::abandoned;
  else if (status == "retry")
    d.executed_status = TaskStatus::pending;
  else
    fail(fmt::format("unknown replan status '{}'", status), text);
  if (node["new_tasks"]) d.new_tasks = string_list(node["new_tasks"], "new_tasks", text);
  return d;
}

Revision parse_revision(std::string_view text) {
  auto node = single(text, "revision");
  if (!node.IsMap()) fail("'revision' is not a mapping", text);
  Revision r;
  r.findings = string_list(node["findings"], "findings", text);
  if (node["new_tasks"]) r.new_tasks = string_list(node["new_tasks"], "new_tasks", text);
  return r;
}

std::vector<CriticFinding> parse_critic_report(std::string_view text) {
  auto body = tag_body(text, "error_recovery_analysis", true);
  std::vector<CriticFinding> out;
  std::size_t pos = 0;
  while (true) {
    auto b = body.find("<error>", pos);
    if (b == std::string_view::npos) break;
    auto e = body.find("</error>", b);
    if (e == std::string_view::npos) fail("unterminated <error> element", body.substr(b));
    auto item = body.substr(b + 7, e - b - 7);
    CriticFinding f;
    f.description = trim(tag_body(item, "description", true));
    f.occurrence_step = *step_number(tag_body(item, "occurrence_step", true), false, item);
    f.recovered_step = step_number(tag_body(item, "recovered_step", false), true, item);
    out.push_back(std::move(f));
    pos = e + 8;
  }
  return out;
}

int parse_error_category(std::string_view text) {
  auto body = tag_body(text, "conflict_detectability_analysis", true);
  auto raw = trim(tag_body(body, "category", true));
  static const std::regex digit(R"(^(?:category\s*)?([1-5])$)", std::regex::icase);
  std::smatch m;
  if (!std::regex_match(raw, m, digit)) fail(fmt::format("bad category '{}'", raw), body);
  return std::stoi(m[1]);
}

ParsedBlock parse_structured_block(std::string_view text, Schema schema) {
  switch (schema) {
    case Schema::conflict_report: return parse_conflict_report(text);
    case Schema::resolution_set: return parse_resolution_set(text);
    case Schema::directive_set: return parse_directive_set(text);
    case Schema::final_answer: return parse_final_answer(text);
    case Schema::critic_report: return parse_critic_report(text);
    case Schema::plan: return parse_plan(text);
    case Schema::task_selection: return parse_task_selection(text);
    case Schema::findings: return parse_findings(text);
    case Schema::replan_decision: return parse_replan_decision(text);
    case Schema::revision: return parse_revision(text);
    case Schema::error_type: return parse_error_category(text);
  }
  fail("unknown schema", "");
}

std::string_view format_hint(Schema schema) {
  switch (schema) {
    case Schema::conflict_report:
      return "conflicts:\n"
             "  - agents: [<index>, <index>]\n"
             "    description: |\n"
             "      <brief description of the conflict>\n"
             "    claims:\n"
             "      agent_<index>: \"<claim>\"\n"
             "Write `conflicts: []` when there are none.";
    case Schema::resolution_set:
      return "resolutions:\n"
             "  - agents: [<index>, <index>]\n"
             "    description: |\n"
             "      <description copied from the conflict>\n"
             "    claims:\n"
             "      agent_<index>: \"<claim>\"\n"
             "    correct_claim: \"<claim verified by you>\"\n"
             "    justification: |\n"
             "      <how the claim was verified>\n"
             "Omit conflicts you could not adjudicate.";
    case Schema::directive_set:
      return "directives:\n"
             "  - target_agent_index: <index>\n"
             "    modification_instruction: |\n"
             "      <how to orthogonally shift this agent's plan>\n"
             "At most one directive per agent. Write `directives: []` when plans are diverse.";
    case Schema::final_answer:
      return "final_answer: \"<answer only>\"";
    case Schema::critic_report:
      return "<error_recovery_analysis>\n"
             "  <error>\n"
             "    <description>...</description>\n"
             "    <occurrence_step>...</occurrence_step>\n"
             "    <recovered_step>...</recovered_step>\n"
             "  </error>\n"
             "</error_recovery_analysis>";
    case Schema::plan:
      return "plan:\n  - <first task>\n  - <second task>";
    case Schema::task_selection:
      return "selected_task: <task id>";
    case Schema::findings:
      return "findings:\n  - <new factual finding>\nWrite `findings: []` when nothing new was "
             "established.";
    case Schema::replan_decision:
      return "replan:\n"
             "  status: done | abandoned | retry\n"
             "  new_tasks:            # optional; replaces all remaining pending tasks\n"
             "    - <task>";
    case Schema::revision:
      return "revision:\n"
             "  findings:\n"
             "    - <corrected or confirmed fact>\n"
             "  new_tasks:            # optional; replaces all remaining pending tasks\n"
             "    - <task>";
    case Schema::error_type:
      return "<conflict_detectability_analysis>\n"
             "<reasoning>...</reasoning>\n"
             "<category>N</category>\n"
             "</conflict_detectability_analysis>";
  }
  return "";
}

}  // namespace concord
