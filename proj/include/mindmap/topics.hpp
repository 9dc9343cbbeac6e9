#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "mindmap/corpus.hpp"
#include "mindmap/vectorizer.hpp"

namespace mindmap {

enum class TopicSource { Llm, TfidfFallback };

std::string_view to_string(TopicSource source);

struct TopicAssignment {
  std::string recording_id;
  std::string topic;
  TopicSource provider = TopicSource::TfidfFallback;
  std::optional<std::string> raw_response;

  bool operator==(const TopicAssignment&) const = default;
};

inline constexpr std::size_t kMaxTopicChars = 40;
inline constexpr std::size_t kMaxTopicWords = 3;
inline constexpr std::size_t kDefaultTranscriptBudget = 12000;
inline constexpr std::string_view kTopicPromptPrefix =
    "Identify the primary topic of the text in one word, similar to how 'technology' might "
    "summarize a discussion on smartphones, or 'environment' could describe a passage on "
    "climate change: ";

/// A text-completion backend. complete() throws Error{ProviderError} on
/// transport or protocol failure. Implementations must be safe to call from
/// several threads.
class TopicProvider {
 public:
  virtual ~TopicProvider() = default;
  virtual std::string name() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct ChatCompletionConfig {
  /// Full URL of a chat-completions endpoint, e.g.
  /// https://api.openai.com/v1/chat/completions
  std::string endpoint;
  std::string model = "gpt-3.5-turbo";
  std::string api_key;
  std::chrono::seconds timeout{60};
};

/// Sends one user message at temperature 0 and returns
/// choices[0].message.content.
class ChatCompletionProvider final : public TopicProvider {
 public:
  explicit ChatCompletionProvider(ChatCompletionConfig config);
  std::string name() const override { return "chat:" + config_.model; }
  std::string complete(const std::string& prompt) override;

  static nlohmann::json request_body(std::string_view model, const std::string& prompt);

 private:
  ChatCompletionConfig config_;
};

/// Answers from a recorded map of sha256(prompt) -> response. Unknown prompts
/// fail like a transport error.
class ReplayTopicProvider final : public TopicProvider {
 public:
  explicit ReplayTopicProvider(std::map<std::string, std::string> responses);
  static ReplayTopicProvider from_file(const std::filesystem::path& path);
  std::string name() const override { return "replay"; }
  std::string complete(const std::string& prompt) override;

 private:
  std::map<std::string, std::string> responses_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_delay{1000};
  double backoff = 2.0;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct TopicOptions {
  std::size_t transcript_budget = kDefaultTranscriptBudget;
  RetryPolicy retry;
};

/// Error{EmptyTranscript} when the transcript is blank. Transcripts longer than
/// the budget are cut back to the last whole word.
std::string build_topic_prompt(std::string_view transcript,
                               std::size_t budget = kDefaultTranscriptBudget);

/// Trims whitespace, quotes and trailing periods, collapses inner whitespace
/// and title-cases. nullopt when the result is empty, longer than
/// kMaxTopicWords words or kMaxTopicChars characters.
std::optional<std::string> normalize_topic(std::string_view response);

std::string title_case(std::string_view text);

/// Highest-weighted vocabulary term of the row (ties lexicographic),
/// title-cased; "Untitled" for a zero row.
std::string fallback_topic(const SparseVector& doc_vector, const Vocabulary& vocab);

/// Runs the provider with retries; any failure ends in the fallback topic.
/// A null provider means offline mode and goes straight to the fallback.
TopicAssignment extract_topic(const Recording& recording, const SparseVector* doc_vector,
                              const Vocabulary& vocab, TopicProvider* provider,
                              const TopicOptions& options = {});

nlohmann::json topics_to_json(const std::vector<TopicAssignment>& topics);
std::vector<TopicAssignment> topics_from_json(const nlohmann::json& j);

}  // namespace mindmap
