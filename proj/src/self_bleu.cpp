// SPDX-License-Identifier: Apache-2.0
#include "concord/self_bleu.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>

#include <fmt/core.h>

#include "concord/errors.hpp"

namespace concord {

namespace {

using NgramCounts = std::map<std::vector<std::string>, int>;

struct Prepared {
  std::vector<std::string> tokens;
  std::array<NgramCounts, kBleuMaxOrder> counts;
};

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts out;
  if (tokens.size() < static_cast<std::size_t>(n)) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  return out;
}

Prepared prepare(const std::string& text) {
  Prepared p;
  p.tokens = bleu_tokenize(text);
  for (int n = 1; n <= kBleuMaxOrder; ++n) p.counts[n - 1] = count_ngrams(p.tokens, n);
  return p;
}

double bleu_prepared(const Prepared& hyp, const std::vector<const Prepared*>& refs) {
  const auto c = static_cast<long>(hyp.tokens.size());
  if (c == 0 || refs.empty()) return 0.0;
  double log_sum = 0.0;
  for (int n = 1; n <= kBleuMaxOrder; ++n) {
    long clipped = 0;
    long total = 0;
    for (const auto& [gram, count] : hyp.counts[n - 1]) {
      int max_ref = 0;
      for (const auto* r : refs) {
        auto it = r->counts[n - 1].find(gram);
        if (it != r->counts[n - 1].end()) max_ref = std::max(max_ref, it->second);
      }
      clipped += std::min(count, max_ref);
      total += count;
    }
    double p;
    if (n == 1) {
      if (clipped == 0) return 0.0;
      p = static_cast<double>(clipped) / static_cast<double>(total);
    } else {
      p = static_cast<double>(clipped + 1) / static_cast<double>(total + 1);
    }
    log_sum += std::log(p);
  }
  long best = -1;
  for (const auto* ref : refs) {
    const auto len = static_cast<long>(ref->tokens.size());
    if (best < 0 || std::labs(len - c) < std::labs(best - c) ||
        (std::labs(len - c) == std::labs(best - c) && len < best))
      best = len;
  }
  const double bp = c > best ? 1.0 : std::exp(1.0 - static_cast<double>(best) / static_cast<double>(c));
  return bp * std::exp(log_sum / kBleuMaxOrder);
}

std::vector<Prepared> prepare_all(const std::vector<std::string>& texts) {
  std::vector<Prepared> out;
  for (const auto& t : texts) {
    auto p = prepare(t);
    if (!p.tokens.empty()) out.push_back(std::move(p));
  }
  if (out.size() < 2)
    throw Error(ErrorCode::degenerate_input,
                fmt::format("Self-BLEU needs at least two non-empty texts, got {}", out.size()));
  return out;
}

double score_of(const std::vector<Prepared>& prepared, std::size_t i) {
  std::vector<const Prepared*> refs;
  for (std::size_t j = 0; j < prepared.size(); ++j)
    if (j != i) refs.push_back(&prepared[j]);
  return bleu_prepared(prepared[i], refs);
}

double sorted_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<std::vector<std::string>>& references) {
  Prepared hyp;
  hyp.tokens = hypothesis;
  for (int n = 1; n <= kBleuMaxOrder; ++n) hyp.counts[n - 1] = count_ngrams(hypothesis, n);
  std::vector<Prepared> refs(references.size());
  std::vector<const Prepared*> ptrs;
  for (std::size_t i = 0; i < references.size(); ++i) {
    refs[i].tokens = references[i];
    for (int n = 1; n <= kBleuMaxOrder; ++n) refs[i].counts[n - 1] = count_ngrams(references[i], n);
    ptrs.push_back(&refs[i]);
  }
  return bleu_prepared(hyp, ptrs);
}

double self_bleu_serial(const std::vector<std::string>& texts) {
  const auto prepared = prepare_all(texts);
  std::vector<double> scores(prepared.size());
  for (std::size_t i = 0; i < prepared.size(); ++i) scores[i] = score_of(prepared, i);
  return sorted_mean(std::move(scores));
}

double self_bleu_parallel(const std::vector<std::string>& texts) {
  std::vector<Prepared> all(texts.size());
  const long n_texts = static_cast<long>(texts.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n_texts; ++i) all[i] = prepare(texts[i]);
  std::vector<Prepared> prepared;
  for (auto& p : all)
    if (!p.tokens.empty()) prepared.push_back(std::move(p));
  if (prepared.size() < 2)
    throw Error(ErrorCode::degenerate_input,
                fmt::format("Self-BLEU needs at least two non-empty texts, got {}", prepared.size()));

  std::vector<double> scores(prepared.size());
  const long n = static_cast<long>(prepared.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) scores[i] = score_of(prepared, static_cast<std::size_t>(i));
  return sorted_mean(std::move(scores));
}

double diversity_score(const std::vector<std::string>& texts, bool parallel) {
  const double sb = parallel ? self_bleu_parallel(texts) : self_bleu_serial(texts);
  return 100.0 - 100.0 * sb;
}

}  // namespace concord
