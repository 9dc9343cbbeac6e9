#include "mindmap/textprep.hpp"

#include <algorithm>
#include <unordered_set>

#include "mindmap/error.hpp"
#include "mindmap/util.hpp"

#ifndef MINDMAP_DEFAULT_DATA_DIR
#define MINDMAP_DEFAULT_DATA_DIR "data"
#endif

namespace mindmap {

namespace fs = std::filesystem;

StopwordList::StopwordList(std::set<std::string, std::less<>> words, std::string source_name)
    : source_name_(std::move(source_name)) {
  for (const auto& w : words) {
    auto lw = ascii_lower(trim(w));
    if (!lw.empty()) words_.insert(std::move(lw));
  }
}

StopwordList StopwordList::from_file(const fs::path& path) {
  std::set<std::string, std::less<>> words;
  for (const auto& line : split(read_file(path), '\n')) {
    auto w = trim(line);
    if (!w.empty()) words.insert(std::move(w));
  }
  return StopwordList(std::move(words), path.filename().string());
}

LemmaTable::LemmaTable(std::vector<std::pair<std::string, std::string>> pairs) {
  const auto alpha = [](const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= 'a' && c <= 'z'; });
  };
  std::unordered_map<std::string, std::string> raw;
  for (auto& [k, v] : pairs) {
    // Cleaned tokens are [a-z]+ and must stay that way after lookup.
    if (alpha(k) && alpha(v) && k != v) raw[std::move(k)] = std::move(v);
  }
  for (const auto& [key, first] : raw) {
    std::unordered_set<std::string_view> seen{key};
    const std::string* cur = &first;
    bool cyclic = false;
    for (auto it = raw.find(*cur); it != raw.end(); it = raw.find(*cur)) {
      if (!seen.insert(*cur).second) {
        cyclic = true;
        break;
      }
      cur = &it->second;
    }
    if (!cyclic && *cur != key) table_.emplace(key, *cur);
  }
}

LemmaTable LemmaTable::from_file(const fs::path& path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t line_no = 0;
  for (const auto& raw : split(read_file(path), '\n')) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string_view::npos)
      throw Error(ErrorKind::MalformedLine,
                  path.filename().string() + " line " + std::to_string(line_no));
    pairs.emplace_back(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
  }
  return LemmaTable(std::move(pairs));
}

const std::string* LemmaTable::find(std::string_view token) const {
  auto it = table_.find(std::string(token));
  return it == table_.end() ? nullptr : &it->second;
}

fs::path default_data_dir() { return fs::path(MINDMAP_DEFAULT_DATA_DIR); }
fs::path default_stopword_path() { return default_data_dir() / "stopwords_en.txt"; }
fs::path default_lemma_path() { return default_data_dir() / "lemmas_en.tsv"; }

std::string lemmatize(std::string_view token, const LemmaTable& lemmas) {
  if (const auto* lemma = lemmas.find(token)) return *lemma;
  return std::string(token);
}

bool is_meta_token(std::string_view token) {
  return token.size() >= 2 && token.front() == '<' && token.back() == '>';
}

std::vector<std::string> clean_tokens(std::string_view raw_text, const StopwordList& stopwords,
                                      const LemmaTable& lemmas, CleanOptions options) {
  const auto keep = [&](const std::string& t) {
    return t.size() >= options.min_length && !stopwords.contains(t);
  };
  std::vector<std::string> out;
  for (const auto& word : split_whitespace(raw_text)) {
    if (is_meta_token(word)) continue;
    std::string token;
    token.reserve(word.size());
    for (char c : word) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      if (c >= 'a' && c <= 'z') token.push_back(c);
    }
    if (token.empty() || !keep(token)) continue;
    token = lemmatize(token, lemmas);
    if (keep(token)) out.push_back(std::move(token));
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace mindmap
