#pragma once

#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "arbiter/domain.hpp"

namespace arbiter::parser {

// ---------------------------------------------------------------------------
// Failures
// ---------------------------------------------------------------------------

enum class ParseFailureKind {
  NoCriteriaFound,
  MissingKindTag,
  DuplicateIndex,
  NoWinnerLine,
  AmbiguousWinner,
  NoGatekeeper,
};

inline const char* to_string(ParseFailureKind k) {
  switch (k) {
    case ParseFailureKind::NoCriteriaFound: return "no_criteria_found";
    case ParseFailureKind::MissingKindTag: return "missing_kind_tag";
    case ParseFailureKind::DuplicateIndex: return "duplicate_index";
    case ParseFailureKind::NoWinnerLine: return "no_winner_line";
    case ParseFailureKind::AmbiguousWinner: return "ambiguous_winner";
    case ParseFailureKind::NoGatekeeper: return "no_gatekeeper";
  }
  return "unknown";
}

struct ParseFailure {
  ParseFailureKind kind = ParseFailureKind::NoCriteriaFound;
  std::optional<int> location;  // 1-based line number in the raw text
  std::string snippet;
};

template <typename T>
class ParseResult {
 public:
  ParseResult(T value) : state_(std::move(value)) {}          // NOLINT
  ParseResult(ParseFailure failure) : state_(std::move(failure)) {}  // NOLINT

  bool ok() const { return std::holds_alternative<T>(state_); }
  explicit operator bool() const { return ok(); }

  const T& value() const { return std::get<T>(state_); }
  T& value() { return std::get<T>(state_); }
  const ParseFailure& failure() const { return std::get<ParseFailure>(state_); }

 private:
  std::variant<T, ParseFailure> state_;
};

// ---------------------------------------------------------------------------
// Line cleanup
// ---------------------------------------------------------------------------

namespace detail {

// Chat models decorate list items with bullets, bold markers, and quotes;
// strip that noise from both ends before grammar matching.
inline std::string strip_markup(std::string_view line) {
  std::string s = trim(line);
  auto is_lead_noise = [](char c) {
    return c == '-' || c == '*' || c == '>' || c == '#';
  };
  size_t b = 0;
  while (b < s.size() &&
         (is_lead_noise(s[b]) || std::isspace(static_cast<unsigned char>(s[b]))))
    ++b;
  size_t e = s.size();
  while (e > b) {
    char c = s[e - 1];
    if (c == '*' || c == '"' || c == '\'' ||
        std::isspace(static_cast<unsigned char>(c))) {
      --e;
    } else {
      break;
    }
  }
  std::string out = s.substr(b, e - b);
  while (!out.empty() && (out.front() == '"' || out.front() == '\''))
    out.erase(out.begin());
  return trim(out);
}

inline std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();
  return lines;
}

// Matches a trailing [Hard Rule] / [Principle] tag, tolerating case and
// internal spacing drift from fine-tuned generators.
inline std::optional<CriterionKind> match_kind_tag(std::string_view tag_body) {
  std::string folded;
  for (char c : tag_body) {
    if (std::isspace(static_cast<unsigned char>(c)) || c == '_' || c == '-')
      continue;
    folded.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (folded == "hardrule") return CriterionKind::HardRule;
  if (folded == "principle") return CriterionKind::Principle;
  return std::nullopt;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Rubric grammar:  N. The response ... [Hard Rule|Principle]
// ---------------------------------------------------------------------------

inline std::string kind_label(CriterionKind k) {
  return k == CriterionKind::HardRule ? "Hard Rule" : "Principle";
}

/// Canonical printed form, one `N. <text> [<Kind>]` line per criterion.
inline std::string reserialize_rubric(const std::vector<RubricCriterion>& criteria) {
  std::ostringstream out;
  for (size_t i = 0; i < criteria.size(); ++i) {
    if (i) out << '\n';
    out << criteria[i].index << ". " << criteria[i].text << " ["
        << kind_label(criteria[i].kind) << ']';
  }
  return out.str();
}

inline ParseResult<std::vector<RubricCriterion>> parse_rubric(
    std::string_view raw) {
  static const std::regex numbered(R"(^(\d{1,4})[.)]\s*(.+)$)");

  struct Item {
    int printed_index;
    RubricCriterion criterion;
  };
  std::vector<Item> items;
  std::set<int> seen;

  const auto lines = detail::split_lines(raw);
  for (size_t i = 0; i < lines.size(); ++i) {
    const int lineno = static_cast<int>(i) + 1;
    std::string s = detail::strip_markup(lines[i]);
    std::smatch m;
    if (!std::regex_match(s, m, numbered)) continue;
    std::string body = normalize_whitespace(m[2].str());
    if (!starts_with_ci(body, "The response")) continue;

    // Trailing bracket tag carries the kind.
    size_t close = body.rfind(']');
    size_t open = close == std::string::npos ? std::string::npos
                                             : body.rfind('[', close);
    std::optional<CriterionKind> kind;
    if (open != std::string::npos && close != std::string::npos &&
        trim(body.substr(close + 1)).empty()) {
      kind = detail::match_kind_tag(body.substr(open + 1, close - open - 1));
    }
    if (!kind) {
      return ParseFailure{ParseFailureKind::MissingKindTag, lineno, lines[i]};
    }

    int printed = std::stoi(m[1].str());
    if (!seen.insert(printed).second) {
      return ParseFailure{ParseFailureKind::DuplicateIndex, lineno, lines[i]};
    }
    RubricCriterion c;
    c.text = trim(body.substr(0, open));
    c.kind = *kind;
    items.push_back({printed, std::move(c)});
  }

  if (items.empty()) {
    return ParseFailure{ParseFailureKind::NoCriteriaFound, std::nullopt,
                        std::string(raw.substr(0, 80))};
  }

  std::stable_sort(items.begin(), items.end(),
                   [](const Item& a, const Item& b) {
                     return a.printed_index < b.printed_index;
                   });
  std::vector<RubricCriterion> criteria;
  criteria.reserve(items.size());
  for (size_t i = 0; i < items.size(); ++i) {
    items[i].criterion.index = static_cast<int>(i) + 1;
    criteria.push_back(std::move(items[i].criterion));
  }
  return criteria;
}

// ---------------------------------------------------------------------------
// Verdict grammar (gatekeeper / analyses / justification / winner)
// ---------------------------------------------------------------------------

/// parse_verdict output before pair_id / raw_text attribution.
struct VerdictContent {
  std::string gatekeeper;
  std::vector<VerdictAnalysis> analyses;
  std::string justification;
  ResponseSlot winner = ResponseSlot::A;
};

namespace detail {

inline std::optional<ResponseSlot> slot_from_token(const std::string& rest) {
  // Full "Response X" form is unambiguous in any case; a bare letter counts
  // only in uppercase, otherwise the article "a" would read as a slot.
  static const std::regex full_re(R"([Rr]esponse\s+([AaBb])\b)");
  static const std::regex bare_re(R"(\b([AB])\b)");
  std::smatch m;
  if (std::regex_search(rest, m, full_re)) {
    char c = static_cast<char>(std::toupper(m[1].str()[0]));
    return c == 'A' ? ResponseSlot::A : ResponseSlot::B;
  }
  if (std::regex_search(rest, m, bare_re)) {
    return m[1].str() == "A" ? ResponseSlot::A : ResponseSlot::B;
  }
  return std::nullopt;
}

}  // namespace detail

inline ParseResult<VerdictContent> parse_verdict(std::string_view raw) {
  static const std::regex winner_re(R"(^[Ww]inner\s*:\s*(.*)$)");
  static const std::regex choose_re(
      R"(\(\s*[Cc]hoose\s+(?:[Rr]esponse\s+)?([AB])\s*\))");
  static const std::regex gatekeeper_re(
      R"([Ii]dentified\s+[Gg]atekeeper\s+[Cc]riterion\s*:?\s*(.*)$)");
  static const std::regex block_re(R"(^[Rr]esponse\s+([AB])\s*:?\s*$)");
  static const std::regex analysis_re(
      R"(^[Cc]riterion\s+(\d+)[^:]*:\s*[Jj]ustification\s*:\s*(.*)$)");
  static const std::regex justification_re(R"(^[Jj]ustification\s*:\s*(.*)$)");

  const auto lines = detail::split_lines(raw);

  VerdictContent out;

  // Winner: every explicit declaration must agree; the "(Choose X)" form is a
  // fallback used only when no Winner marker exists at all.
  std::vector<ResponseSlot> declared;
  std::vector<size_t> winner_line_indices;
  for (size_t i = 0; i < lines.size(); ++i) {
    std::string s = detail::strip_markup(lines[i]);
    std::smatch m;
    if (std::regex_match(s, m, winner_re)) {
      if (auto slot = detail::slot_from_token(m[1].str())) {
        declared.push_back(*slot);
        winner_line_indices.push_back(i);
      }
    }
  }
  if (declared.empty()) {
    std::string text(raw);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), choose_re);
         it != std::sregex_iterator(); ++it) {
      declared.push_back((*it)[1].str() == "A" ? ResponseSlot::A
                                               : ResponseSlot::B);
    }
  }
  if (declared.empty()) {
    return ParseFailure{ParseFailureKind::NoWinnerLine, std::nullopt,
                        std::string(raw.substr(0, 80))};
  }
  for (ResponseSlot s : declared) {
    if (s != declared.front()) {
      return ParseFailure{ParseFailureKind::AmbiguousWinner, std::nullopt,
                          std::string(raw.substr(0, 80))};
    }
  }
  out.winner = declared.front();

  // Gatekeeper line.
  bool gatekeeper_found = false;
  for (size_t i = 0; i < lines.size() && !gatekeeper_found; ++i) {
    std::string s = detail::strip_markup(lines[i]);
    std::smatch m;
    if (std::regex_search(s, m, gatekeeper_re)) {
      std::string text = normalize_whitespace(m[1].str());
      if (!text.empty()) {
        out.gatekeeper = text;
        gatekeeper_found = true;
      }
    }
  }
  if (!gatekeeper_found) {
    return ParseFailure{ParseFailureKind::NoGatekeeper, std::nullopt,
                        std::string(raw.substr(0, 80))};
  }

  // Per-criterion analyses, best effort: the filter consumes only the label,
  // so missing or malformed analysis lines never fail the parse.
  std::optional<ResponseSlot> current;
  for (const auto& line : lines) {
    std::string s = detail::strip_markup(line);
    std::smatch m;
    if (std::regex_match(s, m, block_re)) {
      current = m[1].str() == "A" ? ResponseSlot::A : ResponseSlot::B;
      continue;
    }
    if (current && std::regex_match(s, m, analysis_re)) {
      out.analyses.push_back(
          {*current, std::stoi(m[1].str()), trim(m[2].str())});
    }
  }

  // Final-judgment justification: the Justification block between the Final
  // Judgment marker and the winner declaration.
  size_t just_start = 0;
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find("Final Judgment") != std::string::npos) just_start = i + 1;
  }
  size_t stop = winner_line_indices.empty() ? lines.size()
                                            : winner_line_indices.front();
  std::optional<size_t> just_line;
  for (size_t i = just_start; i < std::min(stop, lines.size()); ++i) {
    std::smatch m;
    std::string s = detail::strip_markup(lines[i]);
    if (std::regex_match(s, m, justification_re)) just_line = i;
  }
  if (just_line) {
    std::smatch m;
    std::string s = detail::strip_markup(lines[*just_line]);
    std::regex_match(s, m, justification_re);
    std::string text = m[1].str();
    for (size_t i = *just_line + 1; i < stop; ++i) {
      std::string cont = trim(lines[i]);
      if (cont.empty() || cont.rfind("---", 0) == 0) break;
      text += "\n" + cont;
    }
    out.justification = trim(text);
  }

  return out;
}

}  // namespace arbiter::parser
