#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>

#include "arbiter/domain.hpp"
#include "support/fixtures.hpp"

using namespace arbiter;

namespace {

std::mt19937& rng() {
  static std::mt19937 gen(20314);
  return gen;
}

std::string random_text(size_t max_len = 40) {
  static const char alphabet[] =
      "abcdefghijklmnopqrstuvwxyz ABCDEFGH {}[]:\",\\\n\t.";
  std::uniform_int_distribution<size_t> len(0, max_len);
  std::uniform_int_distribution<size_t> pick(0, sizeof(alphabet) - 2);
  std::string out;
  size_t n = len(rng());
  out.reserve(n);
  for (size_t i = 0; i < n; ++i) out.push_back(alphabet[pick(rng())]);
  return out;
}

PreferencePair random_pair() {
  PreferencePair p;
  p.id = random_text(12);
  p.prompt = "p:" + random_text();
  p.context = random_text(10);
  p.chosen = "c:" + random_text();
  p.rejected = "r:" + random_text();
  p.source = static_cast<PairSource>(
      std::uniform_int_distribution<int>(0, 4)(rng()));
  p.meta = {{"k1", random_text(8)}, {"k2", random_text(8)}};
  return p;
}

Rubric random_rubric() {
  Rubric r;
  r.pair_id = random_text(12);
  std::uniform_int_distribution<int> k(1, 9);
  int n = k(rng());
  for (int i = 1; i <= n; ++i) {
    r.criteria.push_back({i, "The response " + random_text(20),
                          i % 2 ? CriterionKind::HardRule
                                : CriterionKind::Principle});
  }
  r.raw_text = random_text(60);
  r.generator = "model-x";
  r.params_digest = random_text(16);
  return r;
}

JudgeVerdict random_verdict() {
  JudgeVerdict v;
  v.pair_id = random_text(12);
  v.gatekeeper = "The response " + random_text(20);
  v.analyses = {{ResponseSlot::A, 1, random_text(20)},
                {ResponseSlot::B, 2, random_text(20)}};
  v.justification = random_text(30);
  v.winner = std::uniform_int_distribution<int>(0, 1)(rng()) ? ResponseSlot::A
                                                             : ResponseSlot::B;
  v.raw_text = random_text(60);
  return v;
}

SamplingParams random_params() {
  SamplingParams s;
  s.max_tokens = std::uniform_int_distribution<int>(1, 8192)(rng());
  s.temperature = std::uniform_real_distribution<double>(0.0, 2.0)(rng());
  if (std::uniform_int_distribution<int>(0, 1)(rng()))
    s.top_p = std::uniform_real_distribution<double>(0.01, 1.0)(rng());
  if (std::uniform_int_distribution<int>(0, 1)(rng()))
    s.top_k = std::uniform_int_distribution<int>(-1, 100)(rng());
  s.thinking_enabled = std::uniform_int_distribution<int>(0, 1)(rng());
  return s;
}

template <typename T>
void check_roundtrip(const T& value) {
  json encoded = value;
  T decoded = encoded.get<T>();
  CHECK(json(decoded) == encoded);
}

}  // namespace

TEST_CASE("validate_pair flags invariant violations", "[domain]") {
  PreferencePair p;
  p.id = "x";
  p.prompt = "write a poem";
  p.chosen = "a";
  p.rejected = "a";
  auto v = validate_pair(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "chosen equals rejected");

  p.chosen = "b";
  p.prompt = "";
  v = validate_pair(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0] == "prompt is empty");
}

TEST_CASE("validate_pair accepts the character case-study pair", "[domain]") {
  PreferencePair p;
  p.id = "case1";
  p.prompt = fixtures::kCharacterPrompt;
  p.chosen = fixtures::kCharacterResponseA;
  p.rejected = fixtures::kCharacterResponseB;
  CHECK(validate_pair(p).empty());
}

TEST_CASE("validate_pair demands provenance for ranked sources", "[domain]") {
  PreferencePair p;
  p.id = "x";
  p.prompt = "q";
  p.chosen = "a";
  p.rejected = "b";
  p.source = PairSource::ScoreRanked;
  auto v = validate_pair(p);
  REQUIRE(v.size() == 1);
  CHECK(v[0].find("scores") != std::string::npos);
  p.meta["scores"] = "[1.0,2.0]";
  CHECK(validate_pair(p).empty());
}

TEST_CASE("serialization round-trips structurally", "[domain]") {
  for (int i = 0; i < 50; ++i) {
    check_roundtrip(random_pair());
    check_roundtrip(random_rubric());
    check_roundtrip(random_verdict());
    check_roundtrip(random_params());
  }
}

TEST_CASE("sampling params serialize optionals as nulls", "[domain]") {
  SamplingParams s;
  s.max_tokens = 768;
  s.temperature = 0.0;
  json j = s;
  CHECK(j["top_p"].is_null());
  CHECK(j["top_k"].is_null());
  auto back = j.get<SamplingParams>();
  CHECK_FALSE(back.top_p.has_value());
  CHECK_FALSE(back.top_k.has_value());
}

TEST_CASE("swapping slots and flipping the label preserves the pair",
          "[domain]") {
  for (int i = 0; i < 100; ++i) {
    PreferencePair p = random_pair();
    for (auto label :
         {PreferenceLabel::ChosenIsFirst, PreferenceLabel::ChosenIsSecond}) {
      auto pres = present(p, label);
      CHECK(preferred_of(pres) == p.chosen);
      CHECK(equivalent_presentations(pres, flip(pres)));
      CHECK(flip(flip(pres)).label == pres.label);
    }
  }
}

TEST_CASE("jsonl files round-trip record streams", "[domain]") {
  auto path = std::filesystem::temp_directory_path() / "arbiter_pairs_test.jsonl";
  auto pairs = fixtures::synthetic_pairs(25);
  write_jsonl(path.string(), pairs);
  auto back = read_jsonl<PreferencePair>(path.string());
  REQUIRE(back.size() == pairs.size());
  for (size_t i = 0; i < pairs.size(); ++i)
    CHECK(json(back[i]) == json(pairs[i]));
  std::filesystem::remove(path);
}

TEST_CASE("normalize_whitespace collapses runs", "[domain]") {
  CHECK(normalize_whitespace("  The   response\t\nis  neat ") ==
        "The response is neat");
  CHECK(normalize_whitespace("") == "");
  CHECK(normalize_whitespace("   ") == "");
}
