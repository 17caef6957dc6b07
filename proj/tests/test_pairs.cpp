#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "arbiter/pairs.hpp"

using namespace arbiter;
using namespace arbiter::pairs;

namespace {

ScoredCandidates make_scored(const std::vector<double>& means) {
  ScoredCandidates sc;
  sc.prompt = "rank these";
  for (size_t i = 0; i < means.size(); ++i)
    sc.candidates.push_back(
        {"response " + std::to_string(i), {means[i]}, std::nullopt, "m"});
  return sc;
}

ScoredCandidates make_verified(const std::vector<bool>& passes) {
  ScoredCandidates sc;
  sc.prompt = "verify these";
  for (size_t i = 0; i < passes.size(); ++i)
    sc.candidates.push_back(
        {"response " + std::to_string(i), {}, passes[i], "m"});
  return sc;
}

// Independent oracle: exhaustive max/min scan over mean scores.
std::pair<size_t, size_t> brute_best_worst(const std::vector<double>& means) {
  size_t best = 0, worst = 0;
  for (size_t i = 0; i < means.size(); ++i) {
    if (means[i] > means[best]) best = i;
    if (means[i] < means[worst]) worst = i;
  }
  return {best, worst};
}

}  // namespace

TEST_CASE("pair_from_scores picks extremes by mean score", "[pairs]") {
  auto p = pair_from_scores(make_scored({4.0, 1.5, 3.0}));
  CHECK(p.chosen == "response 0");
  CHECK(p.rejected == "response 1");
  CHECK(p.source == PairSource::ScoreRanked);
  CHECK(p.meta.at("scores") == "4.0,1.5,3.0");
  CHECK(validate_pair(p).empty());
}

TEST_CASE("pair_from_scores ties degenerate", "[pairs]") {
  CHECK_THROWS_AS(pair_from_scores(make_scored({2.0, 2.0})),
                  DegeneratePairError);
}

TEST_CASE("pair_from_scores matches an exhaustive scan", "[pairs]") {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> means(5);
    for (auto& m : means) m = score(rng);
    auto [best, worst] = brute_best_worst(means);
    auto p = pair_from_scores(make_scored(means));
    CHECK(p.chosen == "response " + std::to_string(best));
    CHECK(p.rejected == "response " + std::to_string(worst));
  }
}

TEST_CASE("scalar score is the mean of the per-candidate score list",
          "[pairs]") {
  ScoredCandidates sc;
  sc.prompt = "q";
  sc.candidates.push_back({"a", {1.0, 5.0}, std::nullopt, ""});  // mean 3.0
  sc.candidates.push_back({"b", {3.5, 3.5}, std::nullopt, ""});  // mean 3.5
  auto p = pair_from_scores(sc);
  CHECK(p.chosen == "b");
}

TEST_CASE("pair_from_scores chosen/rejected invariant under permutation",
          "[pairs]") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> means(4);
    for (auto& m : means) m = score(rng);
    // distinct values so tie-breaks never apply
    std::sort(means.begin(), means.end());
    if (std::adjacent_find(means.begin(), means.end()) != means.end()) continue;

    auto base = make_scored(means);
    auto reference = pair_from_scores(base);
    std::vector<size_t> order(means.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    ScoredCandidates shuffled;
    shuffled.prompt = base.prompt;
    for (size_t idx : order) shuffled.candidates.push_back(base.candidates[idx]);
    auto permuted = pair_from_scores(shuffled);
    CHECK(permuted.chosen == reference.chosen);
    CHECK(permuted.rejected == reference.rejected);
  }
}

TEST_CASE("pair_from_verifiers basic contrast", "[pairs]") {
  auto p = pair_from_verifiers(make_verified({true, false}));
  REQUIRE(p.has_value());
  CHECK(p->chosen == "response 0");
  CHECK(p->rejected == "response 1");
  CHECK(p->source == PairSource::VerifierLabeled);
  CHECK(p->meta.at("verifier_passes") == "10");
  CHECK(validate_pair(*p).empty());
}

TEST_CASE("pair_from_verifiers skips one-sided splits", "[pairs]") {
  CHECK_FALSE(pair_from_verifiers(make_verified({true, true})).has_value());
  CHECK_FALSE(pair_from_verifiers(make_verified({false, false})).has_value());
}

TEST_CASE("pair_from_verifiers first-qualifying tie-break over all masks",
          "[pairs]") {
  // enumerate every pass/fail mask of length 4 and check against the rule
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::vector<bool> passes;
    for (int b = 0; b < 4; ++b) passes.push_back((mask >> b) & 1u);
    auto p = pair_from_verifiers(make_verified(passes));
    bool any_pass = std::count(passes.begin(), passes.end(), true) > 0;
    bool any_fail = std::count(passes.begin(), passes.end(), false) > 0;
    if (!any_pass || !any_fail) {
      CHECK_FALSE(p.has_value());
      continue;
    }
    REQUIRE(p.has_value());
    size_t first_pass =
        std::find(passes.begin(), passes.end(), true) - passes.begin();
    size_t first_fail =
        std::find(passes.begin(), passes.end(), false) - passes.begin();
    CHECK(p->chosen == "response " + std::to_string(first_pass));
    CHECK(p->rejected == "response " + std::to_string(first_fail));
  }
  auto p = pair_from_verifiers(make_verified({false, true, true, false}));
  REQUIRE(p.has_value());
  CHECK(p->chosen == "response 1");
  CHECK(p->rejected == "response 0");
}

TEST_CASE("pair_from_ensemble aggregates mean ranks", "[pairs]") {
  // member scores inducing ranks [(1,2),(2,1),(3,3)] -> means [1.5, 1.5, 3.0]
  ScoredCandidates sc;
  sc.prompt = "q";
  sc.candidates.push_back({"response 0", {9.0, 5.0}, std::nullopt, ""});
  sc.candidates.push_back({"response 1", {7.0, 6.0}, std::nullopt, ""});
  sc.candidates.push_back({"response 2", {1.0, 1.0}, std::nullopt, ""});
  auto p = pair_from_ensemble(sc);
  CHECK(p.chosen == "response 0");  // 1.5 tie broken to first index
  CHECK(p.rejected == "response 2");
  CHECK(p.source == PairSource::EnsembleRanked);
  CHECK(p.meta.at("mean_ranks") == "1.5,1.5,3.0");
  CHECK(validate_pair(p).empty());
}

TEST_CASE("pair_from_ensemble two candidates", "[pairs]") {
  ScoredCandidates sc;
  sc.prompt = "q";
  sc.candidates.push_back({"response 0", {9.0, 9.0}, std::nullopt, ""});
  sc.candidates.push_back({"response 1", {1.0, 1.0}, std::nullopt, ""});
  auto p = pair_from_ensemble(sc);
  CHECK(p.chosen == "response 0");
  CHECK(p.rejected == "response 1");
}

TEST_CASE("pair_from_ensemble complete tie degenerates", "[pairs]") {
  ScoredCandidates sc;
  sc.prompt = "q";
  sc.candidates.push_back({"response 0", {5.0, 5.0}, std::nullopt, ""});
  sc.candidates.push_back({"response 1", {5.0, 5.0}, std::nullopt, ""});
  CHECK_THROWS_AS(pair_from_ensemble(sc), DegeneratePairError);
}

TEST_CASE("ensemble ranks are invariant to monotone member rescaling",
          "[pairs]") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> score(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    ScoredCandidates sc;
    sc.prompt = "q";
    for (int i = 0; i < 4; ++i) {
      sc.candidates.push_back({"response " + std::to_string(i),
                               {score(rng), score(rng)},
                               std::nullopt,
                               ""});
    }
    PreferencePair reference;
    try {
      reference = pair_from_ensemble(sc);
    } catch (const DegeneratePairError&) {
      continue;
    }
    // strictly monotone rescale of member 0 only
    ScoredCandidates rescaled = sc;
    for (auto& c : rescaled.candidates)
      c.scores[0] = 3.0 * c.scores[0] * c.scores[0] / 10.0 + 1.0;
    auto p = pair_from_ensemble(rescaled);
    CHECK(p.chosen == reference.chosen);
    CHECK(p.rejected == reference.rejected);
  }
}

TEST_CASE("pair_from_ensemble matches brute-force rank computation",
          "[pairs]") {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> score(0, 6);
  for (int trial = 0; trial < 100; ++trial) {
    ScoredCandidates sc;
    sc.prompt = "q";
    const int n = 5, members = 3;
    std::vector<std::vector<double>> s(n, std::vector<double>(members));
    for (int i = 0; i < n; ++i) {
      for (int m = 0; m < members; ++m) s[i][m] = score(rng);
      sc.candidates.push_back(
          {"response " + std::to_string(i), s[i], std::nullopt, ""});
    }
    // brute-force mean fractional rank
    std::vector<double> mean_rank(n, 0.0);
    for (int m = 0; m < members; ++m) {
      for (int i = 0; i < n; ++i) {
        double higher = 0, equal = 0;
        for (int j = 0; j < n; ++j) {
          if (s[j][m] > s[i][m]) ++higher;
          if (s[j][m] == s[i][m]) ++equal;
        }
        mean_rank[i] += higher + (equal + 1.0) / 2.0;
      }
    }
    for (auto& r : mean_rank) r /= members;
    size_t best = 0, worst = 0;
    for (int i = 0; i < n; ++i) {
      if (mean_rank[i] < mean_rank[best]) best = i;
      if (mean_rank[i] > mean_rank[worst]) worst = i;
    }
    if (mean_rank[best] == mean_rank[worst]) {
      CHECK_THROWS_AS(pair_from_ensemble(sc), DegeneratePairError);
      continue;
    }
    auto p = pair_from_ensemble(sc);
    CHECK(p.chosen == "response " + std::to_string(best));
    CHECK(p.rejected == "response " + std::to_string(worst));
  }
}

TEST_CASE("pair_from_constraint_contrast", "[pairs]") {
  auto p = pair_from_constraint_contrast("P", "yes-compliant", "no-violating");
  CHECK(p.chosen == "yes-compliant");
  CHECK(p.rejected == "no-violating");
  CHECK(p.source == PairSource::ConstraintContrast);
  CHECK(validate_pair(p).empty());
  CHECK_THROWS_AS(pair_from_constraint_contrast("P", "same", "same"),
                  DegeneratePairError);
}

TEST_CASE("constraint batch yields one pair per input", "[pairs]") {
  int made = 0;
  for (int i = 0; i < 10; ++i) {
    auto p = pair_from_constraint_contrast(
        "prompt " + std::to_string(i), "ok " + std::to_string(i),
        "bad " + std::to_string(i));
    CHECK(p.source == PairSource::ConstraintContrast);
    ++made;
  }
  CHECK(made == 10);
}

TEST_CASE("identical texts with different scores degenerate", "[pairs]") {
  ScoredCandidates sc;
  sc.prompt = "q";
  sc.candidates.push_back({"same text", {5.0}, std::nullopt, ""});
  sc.candidates.push_back({"same text", {1.0}, std::nullopt, ""});
  CHECK_THROWS_AS(pair_from_scores(sc), DegeneratePairError);
}

TEST_CASE("scored candidates decode from jsonl schema", "[pairs]") {
  auto j = json::parse(R"({"prompt":"q","candidates":[
    {"response":"a","scores":[1.0,2.0],"verifier_pass":true,"origin_model":"m1"},
    {"response":"b","scores":[0.5,0.25],"verifier_pass":null,"origin_model":"m2"}]})");
  auto sc = j.get<ScoredCandidates>();
  REQUIRE(sc.candidates.size() == 2);
  CHECK(sc.candidates[0].verifier_pass == true);
  CHECK_FALSE(sc.candidates[1].verifier_pass.has_value());
}
