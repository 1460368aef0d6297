// SPDX-License-Identifier: Apache-2.0
#include "concord/vote.hpp"

#include <cctype>
#include <regex>

#include "concord/core_model.hpp"

namespace concord {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool strip_pair(std::string& s, std::string_view open, std::string_view close) {
  if (s.size() >= open.size() + close.size() && s.compare(0, open.size(), open) == 0 &&
      s.compare(s.size() - close.size(), close.size(), close) == 0) {
    s = trim(s.substr(open.size(), s.size() - open.size() - close.size()));
    return true;
  }
  return false;
}

std::string canonical_number(const std::string& s) {
  static const std::regex number(R"(^([+-]?)(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d+))?$)");
  std::smatch m;
  if (!std::regex_match(s, m, number)) return s;
  std::string integer;
  for (char c : m[2].str())
    if (c != ',') integer += c;
  auto nz = integer.find_first_not_of('0');
  integer = nz == std::string::npos ? "0" : integer.substr(nz);
  std::string fraction = m[3].matched ? m[3].str() : "";
  while (!fraction.empty() && fraction.back() == '0') fraction.pop_back();
  std::string out = integer;
  if (!fraction.empty()) out += "." + fraction;
  if (m[1] == "-" && out != "0") out = "-" + out;
  return out;
}

}  // namespace

std::string normalize_answer(std::string_view answer) {
  std::string s = trim(answer);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  bool changed = true;
  while (changed && !s.empty()) {
    changed = false;
    if (s.back() == '.') {
      s.pop_back();
      s = trim(s);
      changed = true;
    }
    changed |= strip_pair(s, "$$", "$$") || strip_pair(s, "$", "$") ||
               strip_pair(s, "\\boxed{", "}") || strip_pair(s, "\\(", "\\)") ||
               strip_pair(s, "\\[", "\\]") || strip_pair(s, "\"", "\"") ||
               strip_pair(s, "'", "'") || strip_pair(s, "`", "`");
  }
  return canonical_number(s);
}

VoteResult majority_vote(const std::vector<std::string>& answers) {
  VoteResult out;
  std::map<std::string, std::map<std::string, int>> originals;
  for (const auto& a : answers) {
    const auto raw = trim(a);
    if (raw == kUnanswered) continue;
    auto key = normalize_answer(raw);
    if (key.empty()) continue;
    ++out.counts[key];
    ++originals[key][raw];
  }
  if (out.counts.empty()) {
    out.answer = out.display = std::string(kUnanswered);
    return out;
  }
  // std::map iterates in ascending key order, so the first maximum is the
  // lexicographically smallest among tied answers.
  int best = 0;
  for (const auto& [key, count] : out.counts)
    if (count > best) {
      best = count;
      out.answer = key;
    }
  int best_raw = 0;
  for (const auto& [raw, count] : originals[out.answer])
    if (count > best_raw) {
      best_raw = count;
      out.display = raw;
    }
  return out;
}

}  // namespace concord
