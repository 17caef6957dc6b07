#pragma once

#include <random>
#include <string>
#include <vector>

#include "arbiter/domain.hpp"

// Case-study transcripts used as parser fixtures: a 7-item character-writing
// rubric with its judge transcript, and a 9-item citation-integrity rubric
// with its judge transcript.
namespace fixtures {

inline const char* kCharacterPrompt =
    "Describe a vivid and unique character using strong imagery, in fewer "
    "than two paragraphs.";

inline const char* kCharacterResponseA =
    "She was a woman of great power and influence, with a deep voice and "
    "piercing eyes that seemed to see straight through you.";

inline const char* kCharacterResponseB =
    "She was a fierce and determined young woman.\n\nWhich of the following "
    "is an example of a character...\n\nA character named Lily who is not "
    "only a leader but also a survivor, a fighter, and a free spirit.";

inline const char* kCharacterRubric =
    "1. The response uses strong imagery and creative language to create a "
    "vivid and unique character description. [Hard Rule]\n"
    "2. The response is written in fewer than two paragraphs. [Hard Rule]\n"
    "3. The response presents a character with distinctive and memorable "
    "traits that contribute to a clear and engaging portrayal. [Principle]\n"
    "4. The response employs sensory details and evocative descriptions to "
    "enhance the reader's mental image. [Principle]\n"
    "5. The response demonstrates originality and creativity in language and "
    "characterization to avoid cliches and generic portrayals. [Principle]\n"
    "6. The response maintains coherence and focus, ensuring all elements "
    "contribute to a unified and compelling character depiction. [Principle]\n"
    "7. The response balances detail and conciseness, providing enough "
    "information to be vivid without unnecessary elaboration. [Principle]";

inline const char* kCharacterJudgeTranscript =
    "--- Compliance Check ---\n"
    "\n"
    "Identified Gatekeeper Criterion: The response is written in fewer than "
    "two paragraphs.\n"
    "\n"
    "--- Analysis ---\n"
    "\n"
    "**Response A:**\n"
    "\n"
    "- Criterion 1 [Hard Rule]: Justification: Strong imagery throughout.\n"
    "- Criterion 2 [Hard Rule]: Justification: A single paragraph, within "
    "the limit.\n"
    "\n"
    "**Response B:**\n"
    "\n"
    "- Criterion 1 [Hard Rule]: Justification: Vivid and creative language.\n"
    "- Criterion 2 [Hard Rule]: Justification: Spans multiple paragraphs, "
    "violating the limit.\n"
    "\n"
    "--- Final Judgment ---\n"
    "\n"
    "Justification: Response A successfully adheres to all criteria. "
    "Response B fails the paragraph count rule. While Response B offers more "
    "vivid and creative language, the paragraph limit is a gatekeeper. "
    "(Choose A)";

inline const char* kCarbonPrompt =
    "Would you consider direct air carbon capture as a significant financial "
    "venture? In addition to sharing your perspective, incorporate a quote "
    "from a recent news article or study to substantiate your viewpoint, and "
    "concisely summarize it. Also, ensure to mention the publication date of "
    "the referenced source. Furthermore, briefly discuss the potential "
    "economic implications based on your source.";

inline const char* kCarbonRubric =
    "1. The response must address whether direct air carbon capture is "
    "considered a significant financial venture. [Principle]\n"
    "2. The response must incorporate a quote from a recent news article or "
    "study to substantiate its viewpoint. [Hard Rule]\n"
    "3. The response must concisely summarize the quoted source. [Hard Rule]\n"
    "4. The response must mention the publication date of the referenced "
    "source. [Hard Rule]\n"
    "5. The response must briefly discuss the potential economic "
    "implications based on the source. [Hard Rule]\n"
    "6. The response must be written in a clear and understandable manner. "
    "[Principle]\n"
    "7. The response must be well-organized and easy to follow. [Principle]\n"
    "8. The response must be free of factual errors. [Principle]\n"
    "9. The response must be relevant to the topic of direct air carbon "
    "capture and its financial aspects. [Principle]";

inline const char* kCarbonJudgeTranscript =
    "--- Compliance Check ---\n"
    "\n"
    "Identified Gatekeeper Criterion: The response must incorporate a quote "
    "from a recent news article or study to substantiate its viewpoint.\n"
    "\n"
    "--- Analysis ---\n"
    "\n"
    "**Response A:**\n"
    "\n"
    "- Criterion 2 [Hard Rule]: Justification: Quotes a study but with a "
    "vague date.\n"
    "\n"
    "**Response B:**\n"
    "\n"
    "- Criterion 2 [Hard Rule]: Justification: Quotes a report published on "
    "May 16, 2024 with concrete figures.\n"
    "\n"
    "--- Final Judgment ---\n"
    "\n"
    "Justification: Response B is slightly better organized, gives concrete "
    "figures for the economic implications, and also provided a more recent "
    "source. (Choose B)";

// A wellformed verdict in the mandated output grammar, for scripted mocks.
inline std::string make_verdict_text(char winner,
                                     const std::string& gatekeeper =
                                         "The response follows the required "
                                         "format.") {
  std::string w(1, winner);
  return "--- Compliance Check ---\n\nIdentified Gatekeeper Criterion: " +
         gatekeeper +
         "\n\n--- Analysis ---\n\n**Response A:**\n\n- Criterion 1 [Hard "
         "Rule]: Justification: Checked against the rubric.\n\n**Response "
         "B:**\n\n- Criterion 1 [Hard Rule]: Justification: Checked against "
         "the rubric.\n\n--- Final Judgment ---\n\nJustification: One "
         "response satisfies the gatekeeper more fully.\n\nWinner: Response " +
         w + "\n";
}

// A minimal wellformed rubric completion for scripted mocks.
inline std::string make_rubric_text(int n_hard, int n_principle) {
  std::string out;
  int idx = 1;
  for (int i = 0; i < n_hard; ++i, ++idx) {
    out += std::to_string(idx) + ". The response satisfies explicit constraint " +
           std::to_string(i + 1) + ". [Hard Rule]\n";
  }
  for (int i = 0; i < n_principle; ++i, ++idx) {
    out += std::to_string(idx) + ". The response demonstrates quality aspect " +
           std::to_string(i + 1) + ". [Principle]\n";
  }
  return out;
}

inline std::vector<arbiter::PreferencePair> synthetic_pairs(int n,
                                                            unsigned seed = 7) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> len(3, 12);
  std::vector<arbiter::PreferencePair> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    arbiter::PreferencePair p;
    p.id = "pair-" + std::to_string(i);
    p.prompt = "synthetic task " + std::to_string(i) + " with " +
               std::to_string(len(rng)) + " details";
    p.chosen = "chosen answer " + std::to_string(i);
    p.rejected = "rejected answer " + std::to_string(i);
    p.source = arbiter::PairSource::Direct;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace fixtures
