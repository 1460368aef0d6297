// SPDX-License-Identifier: Apache-2.0
//
// Self-BLEU kernels. Variant: 4-gram BLEU with uniform weights, brevity
// penalty against the closest reference length (ties go to the shorter),
// add-one smoothing on the 2..4-gram precisions, unigram precision
// unsmoothed. Tokens are the case-folded whitespace-separated words.
//
// The serial kernel is the reference; the OpenMP kernel must agree with it
// bit for bit. Per-text scores are summed in sorted order, which makes the
// result exactly invariant under input permutation.
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace concord {

inline constexpr int kBleuMaxOrder = 4;

std::vector<std::string> bleu_tokenize(std::string_view text);

/// BLEU of one tokenized hypothesis against tokenized references, in [0, 1].
double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<std::vector<std::string>>& references);

/// Mean over texts of BLEU(text_i, all other texts). Empty texts are
/// ignored. Throws DegenerateInput with fewer than two non-empty texts.
double self_bleu_serial(const std::vector<std::string>& texts);
double self_bleu_parallel(const std::vector<std::string>& texts);

/// 100 - 100 * Self-BLEU.
double diversity_score(const std::vector<std::string>& texts, bool parallel = true);

}  // namespace concord
