#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace arbiter {

struct MissingBindingError : std::runtime_error {
  std::string key;
  explicit MissingBindingError(std::string k)
      : std::runtime_error("unbound template placeholder: {" + k + "}"),
        key(std::move(k)) {}
};

/// Placeholder names the shipped templates use. `{...}` spans with any other
/// identifier (or none) are literal text and pass through untouched.
inline const std::set<std::string>& known_template_slots() {
  static const std::set<std::string> slots = {
      "request",  "context", "chosen",     "rejected",  "instruction",
      "rubric",   "prompt",  "response_a", "response_b"};
  return slots;
}

/// Substitute `{key}` placeholders in a single left-to-right pass. Bound
/// values are inserted verbatim and never rescanned, so braces inside a
/// binding cannot trigger further substitution.
inline std::string render_template(
    std::string_view tpl, const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(tpl.size());
  size_t i = 0;
  while (i < tpl.size()) {
    char c = tpl[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    size_t j = i + 1;
    if (j < tpl.size() &&
        (std::isalpha(static_cast<unsigned char>(tpl[j])) || tpl[j] == '_')) {
      size_t k = j + 1;
      while (k < tpl.size() && (std::isalnum(static_cast<unsigned char>(tpl[k])) ||
                                tpl[k] == '_'))
        ++k;
      if (k < tpl.size() && tpl[k] == '}') {
        std::string name(tpl.substr(j, k - j));
        auto it = bindings.find(name);
        if (it != bindings.end()) {
          out.append(it->second);
          i = k + 1;
          continue;
        }
        if (known_template_slots().count(name)) throw MissingBindingError(name);
      }
    }
    out.push_back(c);
    ++i;
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open template: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// The four prompt templates, loaded from a directory of plain-text files.
struct TemplateSet {
  std::string crg;              // rubric synthesis from (request, chosen, rejected)
  std::string judge_curation;   // consistency-filter judge
  std::string rubric_gen;       // inference stage-1 rubric generation
  std::string judge_inference;  // inference stage-2 judge

  static TemplateSet load_from_dir(const std::filesystem::path& dir) {
    TemplateSet t;
    t.crg = read_text_file(dir / "crg.txt");
    t.judge_curation = read_text_file(dir / "judge_curation.txt");
    t.rubric_gen = read_text_file(dir / "rubric_gen.txt");
    t.judge_inference = read_text_file(dir / "judge_inference.txt");
    return t;
  }
};

}  // namespace arbiter
