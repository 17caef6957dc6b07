#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "arbiter/domain.hpp"
#include "arbiter/gateway.hpp"
#include "arbiter/parser.hpp"
#include "arbiter/templates.hpp"

namespace arbiter::synthesis {

// Curation-side sampling defaults.
inline SamplingParams curation_rubric_params() {
  SamplingParams p;
  p.max_tokens = 768;
  p.temperature = 0.0;
  return p;
}

inline SamplingParams curation_judge_params() {
  SamplingParams p;
  p.max_tokens = 2048;
  p.temperature = 0.0;
  return p;
}

enum class SlotAssignment { ChosenAsA, ChosenAsB };

NLOHMANN_JSON_SERIALIZE_ENUM(SlotAssignment,
                             {{SlotAssignment::ChosenAsA, "chosen_as_a"},
                              {SlotAssignment::ChosenAsB, "chosen_as_b"}})

/// kept = true iff the verdict winner maps (via the slot assignment) to the
/// pair's chosen response.
inline bool winner_maps_to_chosen(ResponseSlot winner, SlotAssignment slot) {
  return (winner == ResponseSlot::A) == (slot == SlotAssignment::ChosenAsA);
}

struct FilteredRecord {
  PreferencePair pair;
  Rubric rubric;
  std::optional<JudgeVerdict> verdict;  // absent when the verdict was unreadable
  bool kept = false;
  SlotAssignment slot_assignment = SlotAssignment::ChosenAsA;
};

inline void to_json(json& j, const FilteredRecord& r) {
  j = json{{"pair", r.pair},
           {"rubric", r.rubric},
           {"verdict", r.verdict ? json(*r.verdict) : json(nullptr)},
           {"kept", r.kept},
           {"slot_assignment", r.slot_assignment}};
}

inline void from_json(const json& j, FilteredRecord& r) {
  j.at("pair").get_to(r.pair);
  j.at("rubric").get_to(r.rubric);
  r.verdict.reset();
  if (!j.at("verdict").is_null()) r.verdict = j.at("verdict").get<JudgeVerdict>();
  j.at("kept").get_to(r.kept);
  j.at("slot_assignment").get_to(r.slot_assignment);
}

struct QuarantineRecord {
  PreferencePair pair;
  std::string stage;    // rubric_generation | rubric_upstream | verdict_upstream
  std::string failure;  // parse-failure kind or transport detail
  std::string raw_text; // offending completion, when there was one
};

inline void to_json(json& j, const QuarantineRecord& r) {
  j = json{{"pair", r.pair},
           {"stage", r.stage},
           {"failure", r.failure},
           {"raw_text", r.raw_text}};
}

inline void from_json(const json& j, QuarantineRecord& r) {
  j.at("pair").get_to(r.pair);
  j.at("stage").get_to(r.stage);
  j.at("failure").get_to(r.failure);
  r.raw_text = j.value("raw_text", std::string{});
}

struct CurationReport {
  size_t generated = 0;  // pairs that entered rubric generation
  size_t parse_failed = 0;  // quarantined (unreadable rubric or upstream error)
  size_t kept = 0;
  size_t dropped = 0;
};

inline void to_json(json& j, const CurationReport& r) {
  j = json{{"generated", r.generated},
           {"parse_failed", r.parse_failed},
           {"kept", r.kept},
           {"dropped", r.dropped}};
}

struct CurateOptions {
  std::string gen_endpoint;
  std::string judge_endpoint;
  int retries = 0;  // rubric regeneration attempts at temperature 0.7
  int max_in_flight = 8;
  // Optional slice filter: key "source" matches the pair source, other keys
  // match pair.meta entries.
  std::map<std::string, std::string> filter;
};

struct RubricGeneration {
  std::optional<Rubric> rubric;
  std::optional<parser::ParseFailure> failure;
  std::string raw_text;
  bool ok() const { return rubric.has_value(); }
};

inline bool pair_matches_filter(const PreferencePair& pair,
                                const std::map<std::string, std::string>& filter) {
  for (const auto& [key, want] : filter) {
    if (key == "source") {
      if (json(pair.source).get<std::string>() != want) return false;
      continue;
    }
    auto it = pair.meta.find(key);
    if (it == pair.meta.end() || it->second != want) return false;
  }
  return true;
}

class Curator {
 public:
  Curator(gateway::Gateway& gw, TemplateSet templates, CurateOptions options)
      : gw_(gw), templates_(std::move(templates)), options_(std::move(options)) {}

  gateway::UpstreamRequest build_rubric_request(const PreferencePair& pair,
                                                double temperature = 0.0) const {
    // The preference label travels structurally: the chosen response fills
    // the <chosen> slot, never an extra label string.
    std::string rendered = render_template(templates_.crg,
                                           {{"request", pair.prompt},
                                            {"context", pair.context},
                                            {"chosen", pair.chosen},
                                            {"rejected", pair.rejected}});
    gateway::UpstreamRequest req;
    req.endpoint_id = options_.gen_endpoint;
    req.messages = {{gateway::Role::User, std::move(rendered)}};
    req.params = curation_rubric_params();
    req.params.temperature = temperature;
    return req;
  }

  gateway::UpstreamRequest build_filter_request(const PreferencePair& pair,
                                                const Rubric& rubric,
                                                SlotAssignment slot) const {
    const std::string canonical = parser::reserialize_rubric(rubric.criteria);
    const bool chosen_first = slot == SlotAssignment::ChosenAsA;
    std::string rendered = render_template(
        templates_.judge_curation,
        {{"instruction", pair.prompt},
         {"rubric", canonical},
         {"response_a", chosen_first ? pair.chosen : pair.rejected},
         {"response_b", chosen_first ? pair.rejected : pair.chosen}});
    gateway::UpstreamRequest req;
    req.endpoint_id = options_.judge_endpoint;
    req.messages = {{gateway::Role::User, std::move(rendered)}};
    req.params = curation_judge_params();
    return req;
  }

  Rubric rubric_from_reply(const PreferencePair& pair,
                           const gateway::UpstreamRequest& req,
                           const std::string& completion,
                           const std::vector<RubricCriterion>& criteria) const {
    Rubric r;
    r.pair_id = pair.id;
    r.criteria = criteria;
    r.raw_text = completion;
    r.generator = gw_.with_endpoint_model(req).model;
    r.params_digest = sha256_hex(json(req.params).dump());
    return r;
  }

  /// Single-record rubric synthesis. Upstream errors propagate; grammar
  /// violations come back as a failure with the raw completion attached.
  RubricGeneration generate_rubric(const PreferencePair& pair,
                                   double temperature = 0.0) {
    auto req = build_rubric_request(pair, temperature);
    auto reply = gw_.complete(req);
    RubricGeneration out;
    out.raw_text = reply.text;
    auto parsed = parser::parse_rubric(reply.text);
    if (!parsed.ok()) {
      out.failure = parsed.failure();
      return out;
    }
    out.rubric = rubric_from_reply(pair, req, reply.text, parsed.value());
    return out;
  }

  /// Single-record consistency filter. An unreadable verdict yields
  /// kept = false with the failure noted in the pair's meta.
  FilteredRecord consistency_filter(const PreferencePair& pair,
                                    const Rubric& rubric, SlotAssignment slot) {
    auto reply = gw_.complete(build_filter_request(pair, rubric, slot));
    return filter_from_completion(pair, rubric, slot, reply.text);
  }

  FilteredRecord filter_from_completion(const PreferencePair& pair,
                                        const Rubric& rubric,
                                        SlotAssignment slot,
                                        const std::string& completion) const {
    FilteredRecord rec;
    rec.pair = pair;
    rec.rubric = rubric;
    rec.slot_assignment = slot;
    auto parsed = parser::parse_verdict(completion);
    if (!parsed.ok()) {
      rec.kept = false;
      rec.pair.meta["filter_error"] = parser::to_string(parsed.failure().kind);
      return rec;
    }
    JudgeVerdict v;
    v.pair_id = pair.id;
    v.gatekeeper = parsed.value().gatekeeper;
    v.analyses = parsed.value().analyses;
    v.justification = parsed.value().justification;
    v.winner = parsed.value().winner;
    v.raw_text = completion;
    rec.verdict = std::move(v);
    rec.kept = winner_maps_to_chosen(rec.verdict->winner, slot);
    return rec;
  }

  /// Full curation pass: rubric synthesis, consistency filtering, and the
  /// output files (rubrics / verdicts / filtered / dropped / quarantine).
  CurationReport curate(const std::string& pairs_path,
                        const std::filesystem::path& out_dir) {
    auto all_pairs = read_jsonl<PreferencePair>(pairs_path);
    std::vector<PreferencePair> pairs;
    for (auto& p : all_pairs)
      if (pair_matches_filter(p, options_.filter)) pairs.push_back(std::move(p));

    std::filesystem::create_directories(out_dir);

    const size_t n = pairs.size();
    std::vector<std::optional<Rubric>> rubrics(n);
    std::vector<std::optional<QuarantineRecord>> quarantined(n);

    // Rubric stage, first attempt at the deterministic default.
    {
      std::vector<gateway::UpstreamRequest> reqs;
      reqs.reserve(n);
      for (const auto& p : pairs) reqs.push_back(build_rubric_request(p));
      auto items = gw_.run_batch(reqs, options_.max_in_flight);
      std::vector<std::optional<parser::ParseFailure>> last_failure(n);
      std::vector<std::string> last_raw(n);
      std::vector<size_t> pending;
      for (size_t i = 0; i < n; ++i) {
        if (!items[i].ok()) {
          quarantined[i] = QuarantineRecord{pairs[i], "rubric_upstream",
                                            items[i].error->message, ""};
          continue;
        }
        auto parsed = parser::parse_rubric(items[i].reply->text);
        if (parsed.ok()) {
          rubrics[i] = rubric_from_reply(pairs[i], reqs[i],
                                         items[i].reply->text, parsed.value());
        } else {
          last_failure[i] = parsed.failure();
          last_raw[i] = items[i].reply->text;
          pending.push_back(i);
        }
      }

      // Optional regeneration passes at temperature 0.7.
      for (int attempt = 0; attempt < options_.retries && !pending.empty();
           ++attempt) {
        std::vector<gateway::UpstreamRequest> retry_reqs;
        retry_reqs.reserve(pending.size());
        for (size_t i : pending)
          retry_reqs.push_back(build_rubric_request(pairs[i], 0.7));
        auto retry_items = gw_.run_batch(retry_reqs, options_.max_in_flight);
        std::vector<size_t> still;
        for (size_t k = 0; k < pending.size(); ++k) {
          size_t i = pending[k];
          if (!retry_items[k].ok()) {
            last_failure[i].reset();
            last_raw[i] = retry_items[k].error->message;
            quarantined[i] = QuarantineRecord{
                pairs[i], "rubric_upstream", retry_items[k].error->message, ""};
            continue;
          }
          auto parsed = parser::parse_rubric(retry_items[k].reply->text);
          if (parsed.ok()) {
            rubrics[i] = rubric_from_reply(pairs[i], retry_reqs[k],
                                           retry_items[k].reply->text,
                                           parsed.value());
          } else {
            last_failure[i] = parsed.failure();
            last_raw[i] = retry_items[k].reply->text;
            still.push_back(i);
          }
        }
        pending = std::move(still);
      }
      for (size_t i : pending) {
        quarantined[i] = QuarantineRecord{
            pairs[i], "rubric_generation",
            parser::to_string(last_failure[i]->kind), last_raw[i]};
      }
    }

    // Filter stage over successfully parsed rubrics; slot alternates by
    // record index parity to neutralize position bias in aggregate.
    std::vector<std::optional<FilteredRecord>> filtered(n);
    {
      std::vector<size_t> live;
      std::vector<gateway::UpstreamRequest> reqs;
      for (size_t i = 0; i < n; ++i) {
        if (!rubrics[i]) continue;
        live.push_back(i);
        reqs.push_back(build_filter_request(pairs[i], *rubrics[i],
                                            slot_for_index(i)));
      }
      auto items = gw_.run_batch(reqs, options_.max_in_flight);
      for (size_t k = 0; k < live.size(); ++k) {
        size_t i = live[k];
        if (!items[k].ok()) {
          quarantined[i] = QuarantineRecord{pairs[i], "verdict_upstream",
                                            items[k].error->message, ""};
          continue;
        }
        filtered[i] = filter_from_completion(pairs[i], *rubrics[i],
                                             slot_for_index(i),
                                             items[k].reply->text);
      }
    }

    // Single writer, input order.
    JsonlWriter rubrics_out((out_dir / "rubrics.jsonl").string());
    JsonlWriter verdicts_out((out_dir / "verdicts.jsonl").string());
    JsonlWriter filtered_out((out_dir / "filtered.jsonl").string());
    JsonlWriter dropped_out((out_dir / "dropped.jsonl").string());
    JsonlWriter quarantine_out((out_dir / "quarantine.jsonl").string());

    CurationReport report;
    report.generated = n;
    for (size_t i = 0; i < n; ++i) {
      if (rubrics[i]) rubrics_out.write(*rubrics[i]);
      if (filtered[i] && filtered[i]->verdict)
        verdicts_out.write(*filtered[i]->verdict);
      if (quarantined[i]) {
        ++report.parse_failed;
        quarantine_out.write(*quarantined[i]);
        continue;
      }
      if (filtered[i]->kept) {
        ++report.kept;
        filtered_out.write(*filtered[i]);
      } else {
        ++report.dropped;
        dropped_out.write(*filtered[i]);
      }
    }
    return report;
  }

  static SlotAssignment slot_for_index(size_t index) {
    return index % 2 == 0 ? SlotAssignment::ChosenAsA : SlotAssignment::ChosenAsB;
  }

 private:
  gateway::Gateway& gw_;
  TemplateSet templates_;
  CurateOptions options_;
};

// ---------------------------------------------------------------------------
// Rubric statistics
// ---------------------------------------------------------------------------

struct StatsReport {
  size_t rubric_count = 0;
  size_t hard_rule_count = 0;
  size_t principle_count = 0;
  std::map<int, int> criteria_histogram;  // criteria-per-rubric -> rubrics
  std::vector<int> rubric_word_lengths;   // words across criterion texts
  std::vector<int> prompt_word_lengths;   // present when a pairs file is given
};

inline void to_json(json& j, const StatsReport& s) {
  j = json{{"rubric_count", s.rubric_count},
           {"hard_rule_count", s.hard_rule_count},
           {"principle_count", s.principle_count},
           {"criteria_histogram", s.criteria_histogram},
           {"rubric_word_lengths", s.rubric_word_lengths},
           {"prompt_word_lengths", s.prompt_word_lengths}};
}

inline int count_words(std::string_view text) {
  int words = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

inline StatsReport rubric_stats(const std::string& rubrics_path,
                                const std::optional<std::string>& pairs_path =
                                    std::nullopt) {
  StatsReport report;
  auto rubrics = read_jsonl<Rubric>(rubrics_path);
  report.rubric_count = rubrics.size();
  for (const auto& r : rubrics) {
    int words = 0;
    for (const auto& c : r.criteria) {
      if (c.kind == CriterionKind::HardRule)
        ++report.hard_rule_count;
      else
        ++report.principle_count;
      words += count_words(c.text);
    }
    ++report.criteria_histogram[static_cast<int>(r.criteria.size())];
    report.rubric_word_lengths.push_back(words);
  }
  if (pairs_path) {
    for (const auto& p : read_jsonl<PreferencePair>(*pairs_path))
      report.prompt_word_lengths.push_back(count_words(p.prompt));
  }
  return report;
}

}  // namespace arbiter::synthesis
