#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mindmap {

class StopwordList {
 public:
  StopwordList() = default;
  StopwordList(std::set<std::string, std::less<>> words, std::string source_name);

  /// One word per line; blank lines ignored. Entries are lowercased.
  static StopwordList from_file(const std::filesystem::path& path);

  bool contains(std::string_view word) const { return words_.find(word) != words_.end(); }
  const std::set<std::string, std::less<>>& words() const { return words_; }
  const std::string& source_name() const { return source_name_; }

 private:
  std::set<std::string, std::less<>> words_;
  std::string source_name_;
};

/// Inflection -> lemma lookup. Chains are collapsed on construction so that
/// lemmatizing a lemma is the identity.
class LemmaTable {
 public:
  LemmaTable() = default;
  explicit LemmaTable(std::vector<std::pair<std::string, std::string>> pairs);

  /// `inflected<TAB>lemma` per line.
  static LemmaTable from_file(const std::filesystem::path& path);

  const std::string* find(std::string_view token) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
};

struct CleanDocument {
  std::string recording_id;
  std::vector<std::string> tokens;

  bool operator==(const CleanDocument&) const = default;
};

struct CleanOptions {
  std::size_t min_length = 3;
};

/// Data files shipped in the repository's data/ directory.
std::filesystem::path default_data_dir();
std::filesystem::path default_stopword_path();
std::filesystem::path default_lemma_path();

std::string lemmatize(std::string_view token, const LemmaTable& lemmas);

/// True for "<unk>", "<NA>", "<sil>" and any other "<...>" token.
bool is_meta_token(std::string_view token);

/// Fixed order: drop meta tokens, lowercase, strip non-letters, drop short
/// words, drop stopwords, lemmatize, then re-check length and stopwords.
std::vector<std::string> clean_tokens(std::string_view raw_text, const StopwordList& stopwords,
                                      const LemmaTable& lemmas, CleanOptions options = {});

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace mindmap
