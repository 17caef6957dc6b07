#pragma once

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "arbiter/digest.hpp"
#include "arbiter/domain.hpp"

namespace arbiter::pairs {

struct Candidate {
  std::string response;
  std::vector<double> scores;  // one entry per scorer / ensemble member
  std::optional<bool> verifier_pass;
  std::string origin_model;
};

struct ScoredCandidates {
  std::string prompt;
  std::string context;
  std::vector<Candidate> candidates;
};

inline void from_json(const json& j, Candidate& c) {
  j.at("response").get_to(c.response);
  c.scores = j.value("scores", std::vector<double>{});
  c.verifier_pass.reset();
  if (j.contains("verifier_pass") && !j.at("verifier_pass").is_null())
    c.verifier_pass = j.at("verifier_pass").get<bool>();
  c.origin_model = j.value("origin_model", std::string{});
}

inline void to_json(json& j, const Candidate& c) {
  j = json{{"response", c.response},
           {"scores", c.scores},
           {"verifier_pass",
            c.verifier_pass ? json(*c.verifier_pass) : json(nullptr)},
           {"origin_model", c.origin_model}};
}

inline void from_json(const json& j, ScoredCandidates& sc) {
  j.at("prompt").get_to(sc.prompt);
  sc.context = j.value("context", std::string{});
  j.at("candidates").get_to(sc.candidates);
}

inline void to_json(json& j, const ScoredCandidates& sc) {
  j = json{{"prompt", sc.prompt},
           {"context", sc.context},
           {"candidates", sc.candidates}};
}

namespace detail {

inline std::string join_numbers(const std::vector<double>& xs) {
  std::ostringstream out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ',';
    out << json(xs[i]).dump();
  }
  return out.str();
}

inline std::string pair_id_for(const std::string& prompt,
                               const std::string& chosen,
                               const std::string& rejected,
                               std::string_view strategy) {
  std::string key;
  key.reserve(prompt.size() + chosen.size() + rejected.size() + 24);
  key.append(strategy).push_back('\x1f');
  key.append(prompt).push_back('\x1f');
  key.append(chosen).push_back('\x1f');
  key.append(rejected);
  return short_id(key);
}

inline PreferencePair base_pair(const ScoredCandidates& sc, size_t chosen_idx,
                                size_t rejected_idx, PairSource source,
                                std::string_view strategy) {
  const auto& chosen = sc.candidates[chosen_idx];
  const auto& rejected = sc.candidates[rejected_idx];
  if (chosen.response == rejected.response)
    throw DegeneratePairError("chosen and rejected texts are identical");
  PreferencePair p;
  p.prompt = sc.prompt;
  p.context = sc.context;
  p.chosen = chosen.response;
  p.rejected = rejected.response;
  p.source = source;
  p.id = pair_id_for(sc.prompt, p.chosen, p.rejected, strategy);
  p.meta["chosen_index"] = std::to_string(chosen_idx);
  p.meta["rejected_index"] = std::to_string(rejected_idx);
  if (!chosen.origin_model.empty())
    p.meta["chosen_model"] = chosen.origin_model;
  if (!rejected.origin_model.empty())
    p.meta["rejected_model"] = rejected.origin_model;
  return p;
}

// Fractional ranks (1 = best); tied scores share the mean of their positional
// ranks, which keeps the aggregation invariant under monotone rescaling.
inline std::vector<double> fractional_ranks(const std::vector<double>& scores) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scores[a] > scores[b];
  });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

}  // namespace detail

/// Chosen = highest mean score, rejected = lowest; ties break to the lowest
/// candidate index.
inline PreferencePair pair_from_scores(const ScoredCandidates& sc) {
  if (sc.candidates.size() < 2)
    throw std::invalid_argument("need at least two candidates");
  std::vector<double> means;
  means.reserve(sc.candidates.size());
  for (const auto& c : sc.candidates) {
    if (c.scores.empty())
      throw std::invalid_argument("candidate without scores");
    means.push_back(std::accumulate(c.scores.begin(), c.scores.end(), 0.0) /
                    static_cast<double>(c.scores.size()));
  }
  size_t best = 0, worst = 0;
  for (size_t i = 1; i < means.size(); ++i) {
    if (means[i] > means[best]) best = i;
    if (means[i] < means[worst]) worst = i;
  }
  if (best == worst)
    throw DegeneratePairError("all candidates share the same score");
  auto p = detail::base_pair(sc, best, worst, PairSource::ScoreRanked, "scores");
  p.meta["scores"] = detail::join_numbers(means);
  return p;
}

/// Chosen from candidates passing all verifiers, rejected from the failing
/// side; no pair when the split is one-sided.
inline std::optional<PreferencePair> pair_from_verifiers(
    const ScoredCandidates& sc) {
  if (sc.candidates.size() < 2)
    throw std::invalid_argument("need at least two candidates");
  std::optional<size_t> pass, fail;
  std::string mask;
  for (size_t i = 0; i < sc.candidates.size(); ++i) {
    if (!sc.candidates[i].verifier_pass)
      throw std::invalid_argument("candidate without verifier_pass");
    bool ok = *sc.candidates[i].verifier_pass;
    mask.push_back(ok ? '1' : '0');
    if (ok && !pass) pass = i;
    if (!ok && !fail) fail = i;
  }
  if (!pass || !fail) return std::nullopt;
  auto p = detail::base_pair(sc, *pass, *fail, PairSource::VerifierLabeled,
                             "verifiers");
  p.meta["verifier_passes"] = mask;
  return p;
}

/// Each ensemble member ranks the candidates; chosen/rejected are the best
/// and worst mean rank.
inline PreferencePair pair_from_ensemble(const ScoredCandidates& sc) {
  if (sc.candidates.size() < 2)
    throw std::invalid_argument("need at least two candidates");
  const size_t members = sc.candidates.front().scores.size();
  if (members < 2)
    throw std::invalid_argument("need at least two ensemble members");
  for (const auto& c : sc.candidates) {
    if (c.scores.size() != members)
      throw std::invalid_argument("candidates disagree on member count");
  }

  std::vector<std::vector<double>> member_ranks(members);
  for (size_t m = 0; m < members; ++m) {
    std::vector<double> scores;
    scores.reserve(sc.candidates.size());
    for (const auto& c : sc.candidates) scores.push_back(c.scores[m]);
    member_ranks[m] = detail::fractional_ranks(scores);
  }
  std::vector<double> mean_rank(sc.candidates.size(), 0.0);
  for (size_t i = 0; i < sc.candidates.size(); ++i) {
    for (size_t m = 0; m < members; ++m) mean_rank[i] += member_ranks[m][i];
    mean_rank[i] /= static_cast<double>(members);
  }
  size_t best = 0, worst = 0;
  for (size_t i = 1; i < mean_rank.size(); ++i) {
    if (mean_rank[i] < mean_rank[best]) best = i;
    if (mean_rank[i] > mean_rank[worst]) worst = i;
  }
  if (mean_rank[best] == mean_rank[worst])
    throw DegeneratePairError("complete mean-rank tie between extremes");

  auto p = detail::base_pair(sc, best, worst, PairSource::EnsembleRanked,
                             "ensemble");
  std::ostringstream ranks;
  for (size_t m = 0; m < members; ++m) {
    if (m) ranks << ';';
    ranks << detail::join_numbers(member_ranks[m]);
  }
  p.meta["member_ranks"] = ranks.str();
  p.meta["mean_ranks"] = detail::join_numbers(mean_rank);
  return p;
}

/// One response satisfies every stated constraint, the other violates some.
inline PreferencePair pair_from_constraint_contrast(const std::string& prompt,
                                                    const std::string& compliant,
                                                    const std::string& violating) {
  if (compliant == violating)
    throw DegeneratePairError("compliant and violating texts are identical");
  PreferencePair p;
  p.prompt = prompt;
  p.chosen = compliant;
  p.rejected = violating;
  p.source = PairSource::ConstraintContrast;
  p.id = detail::pair_id_for(prompt, compliant, violating, "contrast");
  return p;
}

}  // namespace arbiter::pairs
