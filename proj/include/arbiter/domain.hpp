#pragma once

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace arbiter {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Core enums
// ---------------------------------------------------------------------------

/// Which slot holds the preferred response when a pair is presented as (A, B).
enum class PreferenceLabel { ChosenIsFirst, ChosenIsSecond };

enum class PairSource {
  Direct,
  ScoreRanked,
  VerifierLabeled,
  EnsembleRanked,
  ConstraintContrast,
};

enum class CriterionKind { HardRule, Principle };

enum class ResponseSlot { A, B };

NLOHMANN_JSON_SERIALIZE_ENUM(PreferenceLabel,
                             {{PreferenceLabel::ChosenIsFirst, "chosen_is_first"},
                              {PreferenceLabel::ChosenIsSecond, "chosen_is_second"}})

NLOHMANN_JSON_SERIALIZE_ENUM(PairSource,
                             {{PairSource::Direct, "direct"},
                              {PairSource::ScoreRanked, "score_ranked"},
                              {PairSource::VerifierLabeled, "verifier_labeled"},
                              {PairSource::EnsembleRanked, "ensemble_ranked"},
                              {PairSource::ConstraintContrast, "constraint_contrast"}})

NLOHMANN_JSON_SERIALIZE_ENUM(CriterionKind,
                             {{CriterionKind::HardRule, "hard_rule"},
                              {CriterionKind::Principle, "principle"}})

NLOHMANN_JSON_SERIALIZE_ENUM(ResponseSlot, {{ResponseSlot::A, "A"},
                                            {ResponseSlot::B, "B"}})

inline ResponseSlot other_slot(ResponseSlot s) {
  return s == ResponseSlot::A ? ResponseSlot::B : ResponseSlot::A;
}

/// Raised by pair-construction strategies and DPO labeling when the input
/// admits no usable chosen/rejected contrast. Callers skip the record.
struct DegeneratePairError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct PreferencePair {
  std::string id;
  std::string prompt;
  std::string context;  // CRG <context> slot; empty unless the source has one
  std::string chosen;
  std::string rejected;
  PairSource source = PairSource::Direct;
  std::map<std::string, std::string> meta;
};

struct RubricCriterion {
  int index = 0;  // 1-based
  std::string text;
  CriterionKind kind = CriterionKind::Principle;
};

struct Rubric {
  std::string pair_id;
  std::vector<RubricCriterion> criteria;
  std::string raw_text;   // verbatim upstream completion
  std::string generator;  // model id
  std::string params_digest;
};

struct VerdictAnalysis {
  ResponseSlot response_slot = ResponseSlot::A;
  int criterion_index = 0;
  std::string justification;
};

struct JudgeVerdict {
  std::string pair_id;
  std::string gatekeeper;
  std::vector<VerdictAnalysis> analyses;
  std::string justification;
  ResponseSlot winner = ResponseSlot::A;
  std::string raw_text;
};

struct SamplingParams {
  int max_tokens = 0;
  double temperature = 0.0;
  std::optional<double> top_p;
  std::optional<int> top_k;
  bool thinking_enabled = false;
};

// ---------------------------------------------------------------------------
// JSON (JSONL schemas: one record per line, field names lower_snake_case)
// ---------------------------------------------------------------------------

inline void to_json(json& j, const PreferencePair& p) {
  j = json{{"id", p.id},           {"prompt", p.prompt},
           {"context", p.context}, {"chosen", p.chosen},
           {"rejected", p.rejected}, {"source", p.source},
           {"meta", p.meta}};
}

inline void from_json(const json& j, PreferencePair& p) {
  j.at("id").get_to(p.id);
  j.at("prompt").get_to(p.prompt);
  p.context = j.value("context", std::string{});
  j.at("chosen").get_to(p.chosen);
  j.at("rejected").get_to(p.rejected);
  j.at("source").get_to(p.source);
  p.meta = j.value("meta", std::map<std::string, std::string>{});
}

inline void to_json(json& j, const RubricCriterion& c) {
  j = json{{"index", c.index}, {"text", c.text}, {"kind", c.kind}};
}

inline void from_json(const json& j, RubricCriterion& c) {
  j.at("index").get_to(c.index);
  j.at("text").get_to(c.text);
  j.at("kind").get_to(c.kind);
}

inline void to_json(json& j, const Rubric& r) {
  j = json{{"pair_id", r.pair_id},
           {"criteria", r.criteria},
           {"raw_text", r.raw_text},
           {"generator", r.generator},
           {"params_digest", r.params_digest}};
}

inline void from_json(const json& j, Rubric& r) {
  j.at("pair_id").get_to(r.pair_id);
  j.at("criteria").get_to(r.criteria);
  j.at("raw_text").get_to(r.raw_text);
  j.at("generator").get_to(r.generator);
  j.at("params_digest").get_to(r.params_digest);
}

inline void to_json(json& j, const VerdictAnalysis& a) {
  j = json{{"response_slot", a.response_slot},
           {"criterion_index", a.criterion_index},
           {"justification", a.justification}};
}

inline void from_json(const json& j, VerdictAnalysis& a) {
  j.at("response_slot").get_to(a.response_slot);
  j.at("criterion_index").get_to(a.criterion_index);
  j.at("justification").get_to(a.justification);
}

inline void to_json(json& j, const JudgeVerdict& v) {
  j = json{{"pair_id", v.pair_id},       {"gatekeeper", v.gatekeeper},
           {"analyses", v.analyses},     {"justification", v.justification},
           {"winner", v.winner},         {"raw_text", v.raw_text}};
}

inline void from_json(const json& j, JudgeVerdict& v) {
  j.at("pair_id").get_to(v.pair_id);
  j.at("gatekeeper").get_to(v.gatekeeper);
  v.analyses = j.value("analyses", std::vector<VerdictAnalysis>{});
  v.justification = j.value("justification", std::string{});
  j.at("winner").get_to(v.winner);
  j.at("raw_text").get_to(v.raw_text);
}

inline void to_json(json& j, const SamplingParams& p) {
  j = json{{"max_tokens", p.max_tokens},
           {"temperature", p.temperature},
           {"top_p", p.top_p ? json(*p.top_p) : json(nullptr)},
           {"top_k", p.top_k ? json(*p.top_k) : json(nullptr)},
           {"thinking_enabled", p.thinking_enabled}};
}

inline void from_json(const json& j, SamplingParams& p) {
  j.at("max_tokens").get_to(p.max_tokens);
  j.at("temperature").get_to(p.temperature);
  p.top_p.reset();
  p.top_k.reset();
  if (j.contains("top_p") && !j.at("top_p").is_null())
    p.top_p = j.at("top_p").get<double>();
  if (j.contains("top_k") && !j.at("top_k").is_null())
    p.top_k = j.at("top_k").get<int>();
  p.thinking_enabled = j.value("thinking_enabled", false);
}

// ---------------------------------------------------------------------------
// Text normalization
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

/// Trim and collapse internal whitespace runs to single spaces.
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // drops leading whitespace
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out.push_back(' ');
      in_space = false;
      out.push_back(c);
    }
  }
  return out;
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  return std::equal(prefix.begin(), prefix.end(), s.begin(), [](char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) ==
           std::tolower(static_cast<unsigned char>(b));
  });
}

// ---------------------------------------------------------------------------
// Pair validation and equivalence
// ---------------------------------------------------------------------------

/// Reports every invariant violation; empty list means the pair is valid.
inline std::vector<std::string> validate_pair(const PreferencePair& p) {
  std::vector<std::string> violations;
  if (p.prompt.empty()) violations.push_back("prompt is empty");
  if (p.chosen == p.rejected) violations.push_back("chosen equals rejected");
  switch (p.source) {
    case PairSource::ScoreRanked:
      if (!p.meta.count("scores"))
        violations.push_back("meta missing 'scores' provenance for score_ranked");
      break;
    case PairSource::EnsembleRanked:
      if (!p.meta.count("member_ranks"))
        violations.push_back(
            "meta missing 'member_ranks' provenance for ensemble_ranked");
      break;
    case PairSource::VerifierLabeled:
      if (!p.meta.count("verifier_passes"))
        violations.push_back(
            "meta missing 'verifier_passes' provenance for verifier_labeled");
      break;
    default:
      break;
  }
  return violations;
}

/// A pair rendered into ordered (first, second) slots plus the label saying
/// which slot is preferred.
struct PairPresentation {
  std::string prompt;
  std::string context;
  std::string first;
  std::string second;
  PreferenceLabel label = PreferenceLabel::ChosenIsFirst;
};

inline PairPresentation present(const PreferencePair& p, PreferenceLabel label) {
  if (label == PreferenceLabel::ChosenIsFirst)
    return {p.prompt, p.context, p.chosen, p.rejected, label};
  return {p.prompt, p.context, p.rejected, p.chosen, label};
}

/// Swap the two slots and flip the label; the underlying preference is
/// unchanged.
inline PairPresentation flip(const PairPresentation& pr) {
  return {pr.prompt, pr.context, pr.second, pr.first,
          pr.label == PreferenceLabel::ChosenIsFirst
              ? PreferenceLabel::ChosenIsSecond
              : PreferenceLabel::ChosenIsFirst};
}

inline std::string preferred_of(const PairPresentation& pr) {
  return pr.label == PreferenceLabel::ChosenIsFirst ? pr.first : pr.second;
}

inline std::string unpreferred_of(const PairPresentation& pr) {
  return pr.label == PreferenceLabel::ChosenIsFirst ? pr.second : pr.first;
}

/// Equivalence over the preference content (prompt, context, which text is
/// preferred); id/meta/source are presentation-independent bookkeeping.
inline bool equivalent_presentations(const PairPresentation& a,
                                     const PairPresentation& b) {
  return a.prompt == b.prompt && a.context == b.context &&
         preferred_of(a) == preferred_of(b) &&
         unpreferred_of(a) == unpreferred_of(b);
}

// ---------------------------------------------------------------------------
// JSONL I/O
// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for read: " + path);
  std::vector<T> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::string& path, const std::vector<T>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for write: " + path);
  for (const T& r : records) out << json(r).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

class JsonlWriter {
 public:
  explicit JsonlWriter(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open for write: " + path);
    path_ = path;
  }

  template <typename T>
  void write(const T& record) {
    out_ << json(record).dump() << '\n';
    if (!out_) throw std::runtime_error("write failed: " + path_);
    ++count_;
  }

  size_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::string path_;
  size_t count_ = 0;
};

}  // namespace arbiter
