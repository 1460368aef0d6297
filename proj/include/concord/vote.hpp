// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace concord {

/// Canonical answer form used for voting and accuracy: trimmed, case-folded,
/// math wrappers ($..$, \boxed{..}, \(..\), \[..\]) and quotes stripped,
/// trailing period dropped, and numerals canonicalized ("096" -> "96",
/// "96.0" -> "96", "1,000" -> "1000").
std::string normalize_answer(std::string_view answer);

struct VoteResult {
  std::string answer;   // normalized winner, or UNANSWERED
  std::string display;  // most frequent trimmed original within the winning class
  std::map<std::string, int> counts;
};

/// Mode of the normalized answers; ties go to the lexicographically smallest
/// normalized answer. The UNANSWERED sentinel and empty answers do not vote.
VoteResult majority_vote(const std::vector<std::string>& answers);

}  // namespace concord
