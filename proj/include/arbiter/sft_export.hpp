#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "arbiter/domain.hpp"
#include "arbiter/parser.hpp"
#include "arbiter/synthesis.hpp"
#include "arbiter/templates.hpp"

namespace arbiter::sft {

enum class SftKind { RubricGen, Judge };

NLOHMANN_JSON_SERIALIZE_ENUM(SftKind, {{SftKind::RubricGen, "rubric_gen"},
                                       {SftKind::Judge, "judge"}})

struct SftTurn {
  std::string role;
  std::string content;
};

inline void to_json(json& j, const SftTurn& t) {
  j = json{{"role", t.role}, {"content", t.content}};
}

inline void from_json(const json& j, SftTurn& t) {
  j.at("role").get_to(t.role);
  j.at("content").get_to(t.content);
}

struct SftRecord {
  SftKind kind = SftKind::RubricGen;
  std::vector<SftTurn> turns;
  std::string source_pair_id;
};

inline void to_json(json& j, const SftRecord& r) {
  j = json{{"kind", r.kind},
           {"turns", r.turns},
           {"source_pair_id", r.source_pair_id}};
}

inline void from_json(const json& j, SftRecord& r) {
  j.at("kind").get_to(r.kind);
  j.at("turns").get_to(r.turns);
  j.at("source_pair_id").get_to(r.source_pair_id);
}

enum class SftFormat { Chat, Alpaca };

struct ExportResult {
  size_t count = 0;
  size_t cutoff_warnings = 0;  // records whose word count exceeds the cutoff
};

// Word-count cutoffs mirroring the documented training context limits; these
// only trigger warnings, the records ship untruncated.
inline constexpr int kRubricGenCutoffWords = 3072;
inline constexpr int kJudgeCutoffWords = 6144;

namespace detail {

inline SftRecord rubric_gen_record(const synthesis::FilteredRecord& rec,
                                   const TemplateSet& templates) {
  SftRecord out;
  out.kind = SftKind::RubricGen;
  out.source_pair_id = rec.pair.id;
  out.turns.push_back(
      {"user", render_template(templates.rubric_gen,
                               {{"prompt", rec.pair.prompt}})});
  out.turns.push_back(
      {"assistant", parser::reserialize_rubric(rec.rubric.criteria)});
  return out;
}

inline SftRecord judge_record(const synthesis::FilteredRecord& rec,
                              const TemplateSet& templates) {
  if (!rec.verdict)
    throw std::runtime_error("filtered record " + rec.pair.id +
                             " lacks a verdict; cannot export judge targets");
  const bool chosen_first =
      rec.slot_assignment == synthesis::SlotAssignment::ChosenAsA;
  SftRecord out;
  out.kind = SftKind::Judge;
  out.source_pair_id = rec.pair.id;
  out.turns.push_back(
      {"user",
       render_template(
           templates.judge_inference,
           {{"instruction", rec.pair.prompt},
            {"rubric", parser::reserialize_rubric(rec.rubric.criteria)},
            {"response_a", chosen_first ? rec.pair.chosen : rec.pair.rejected},
            {"response_b", chosen_first ? rec.pair.rejected : rec.pair.chosen}})});
  out.turns.push_back({"assistant", rec.verdict->raw_text});
  return out;
}

inline int record_words(const SftRecord& rec) {
  int words = 0;
  for (const auto& t : rec.turns) words += synthesis::count_words(t.content);
  return words;
}

inline void write_record(JsonlWriter& out, const SftRecord& rec,
                         SftFormat format) {
  if (format == SftFormat::Chat) {
    out.write(rec);
    return;
  }
  json alpaca{{"instruction", rec.turns.front().content},
              {"input", ""},
              {"output", rec.turns.back().content}};
  out.write(alpaca);
}

template <typename MakeRecord>
ExportResult export_records(const std::string& filtered_path,
                            const std::string& out_path, SftFormat format,
                            int cutoff_words, MakeRecord make) {
  auto records = read_jsonl<synthesis::FilteredRecord>(filtered_path);
  JsonlWriter out(out_path);
  ExportResult result;
  for (const auto& rec : records) {
    if (!rec.kept) continue;  // filtered.jsonl is kept-only; tolerate strays
    SftRecord sft = make(rec);
    if (record_words(sft) > cutoff_words) ++result.cutoff_warnings;
    write_record(out, sft, format);
    ++result.count;
  }
  return result;
}

}  // namespace detail

/// One rubric-generation training record per kept record: the stage-1 prompt
/// conditioned only on the request, targeting the canonical rubric.
inline ExportResult export_rubric_sft(const std::string& filtered_path,
                                      const std::string& out_path,
                                      const TemplateSet& templates,
                                      SftFormat format = SftFormat::Chat) {
  return detail::export_records(
      filtered_path, out_path, format, kRubricGenCutoffWords,
      [&](const synthesis::FilteredRecord& rec) {
        return detail::rubric_gen_record(rec, templates);
      });
}

/// One judge training record per kept record: prompt, both responses in their
/// stored slot order, and the canonical rubric, targeting the full verdict.
inline ExportResult export_judge_sft(const std::string& filtered_path,
                                     const std::string& out_path,
                                     const TemplateSet& templates,
                                     SftFormat format = SftFormat::Chat) {
  return detail::export_records(
      filtered_path, out_path, format, kJudgeCutoffWords,
      [&](const synthesis::FilteredRecord& rec) {
        return detail::judge_record(rec, templates);
      });
}

/// Reference hyper-parameters for trainers consuming the exported datasets;
/// documentation only, nothing here is executed.
inline void write_training_reference(const std::filesystem::path& out_dir) {
  std::ofstream out(out_dir / "TRAINING.md", std::ios::trunc);
  out << R"(# Training reference

Suggested fine-tuning settings for the exported datasets. The toolkit only
produces the data; run the training in your SFT/DPO framework of choice.

## Rubric-generator SFT (rubric_gen records)

| Parameter     | Value   |
|---------------|---------|
| Epochs        | 1       |
| Cutoff length | 3072    |
| Batch size    | 128     |
| Optimizer     | AdamW   |
| Learning rate | 8e-6    |
| LR schedule   | Cosine  |
| Warmup ratio  | 0.05    |

## Judge SFT (judge records)

| Parameter     | Value   |
|---------------|---------|
| Epochs        | 2       |
| Cutoff length | 6144    |
| Batch size    | 64      |
| Optimizer     | AdamW   |
| Learning rate | 5e-6    |
| LR schedule   | none    |
| Warmup ratio  | none    |

## Policy DPO (pairs produced by dpo-label)

| Parameter        | Value   |
|------------------|---------|
| Epochs           | 1       |
| Cutoff length    | 2048    |
| Batch size       | 64      |
| Optimizer        | AdamW   |
| Learning rate    | 3e-7    |
| SFT mixing weight| 0.1     |
| beta             | 0.1     |

Cutoff lengths are token budgets; the exporter reports word-count overruns as
warnings and never truncates records.
)";
}

}  // namespace arbiter::sft
