#include "mindmap/topics.hpp"

#include <httplib.h>

#include <cctype>
#include <thread>

#include "mindmap/error.hpp"
#include "mindmap/util.hpp"

namespace mindmap {

using nlohmann::json;

std::string_view to_string(TopicSource source) {
  return source == TopicSource::Llm ? "llm" : "tfidf_fallback";
}

ChatCompletionProvider::ChatCompletionProvider(ChatCompletionConfig config)
    : config_(std::move(config)) {
  split_url(config_.endpoint);  // validates
}

json ChatCompletionProvider::request_body(std::string_view model, const std::string& prompt) {
  return json{{"model", model},
              {"temperature", 0},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
}

std::string ChatCompletionProvider::complete(const std::string& prompt) {
  const auto url = split_url(config_.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(url.path, headers, request_body(config_.model, prompt).dump(),
                         "application/json");
  if (!res) throw Error(ErrorKind::ProviderError, "chat request failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorKind::ProviderError, "chat endpoint returned HTTP " + std::to_string(res->status));
  try {
    auto body = json::parse(res->body);
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ProviderError, std::string("unexpected chat response: ") + e.what());
  }
}

ReplayTopicProvider::ReplayTopicProvider(std::map<std::string, std::string> responses)
    : responses_(std::move(responses)) {}

ReplayTopicProvider ReplayTopicProvider::from_file(const std::filesystem::path& path) {
  return ReplayTopicProvider(json::parse(read_file(path)).get<std::map<std::string, std::string>>());
}

std::string ReplayTopicProvider::complete(const std::string& prompt) {
  auto it = responses_.find(sha256_hex(prompt));
  if (it == responses_.end()) throw Error(ErrorKind::ProviderError, "no recorded response");
  return it->second;
}

std::string build_topic_prompt(std::string_view transcript, std::size_t budget) {
  std::string text = trim(transcript);
  if (text.empty()) throw Error(ErrorKind::EmptyTranscript, "nothing to summarize");
  if (text.size() > budget) {
    const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    std::size_t cut = budget;
    if (!is_space(text[cut])) {
      const auto last = text.find_last_of(" \t\r\n", cut);
      cut = last == std::string::npos ? budget : last;
    }
    text = trim(std::string_view(text).substr(0, cut));
  }
  return std::string(kTopicPromptPrefix) + text;
}

std::string title_case(std::string_view text) {
  std::string out(text);
  bool start = true;
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isspace(u)) {
      start = true;
      continue;
    }
    c = static_cast<char>(start ? std::toupper(u) : std::tolower(u));
    start = false;
  }
  return out;
}

namespace {

bool strip_quote_prefix(std::string& s) {
  for (std::string_view q : {"\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99"}) {
    if (s.starts_with(q)) {
      s.erase(0, q.size());
      return true;
    }
  }
  return false;
}

bool strip_quote_or_period_suffix(std::string& s) {
  for (std::string_view q : {"\"", "'", "`", ".", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99"}) {
    if (s.ends_with(q)) {
      s.erase(s.size() - q.size());
      return true;
    }
  }
  return false;
}

}  // namespace

std::optional<std::string> normalize_topic(std::string_view response) {
  std::string s = trim(response);
  for (bool changed = true; changed;) {
    changed = strip_quote_prefix(s) || strip_quote_or_period_suffix(s);
    if (changed) s = trim(s);
  }
  const auto words = split_whitespace(s);
  if (words.empty() || words.size() > kMaxTopicWords) return std::nullopt;
  std::string joined;
  for (const auto& w : words) {
    if (!joined.empty()) joined.push_back(' ');
    joined += w;
  }
  if (joined.size() > kMaxTopicChars) return std::nullopt;
  return title_case(joined);
}

std::string fallback_topic(const SparseVector& doc_vector, const Vocabulary& vocab) {
  const std::string* best = nullptr;
  double best_w = 0.0;
  for (const auto& [col, w] : doc_vector.entries) {
    if (col >= vocab.size() || w <= 0.0) continue;
    const auto& term = vocab.terms[col];
    if (!best || w > best_w || (w == best_w && term < *best)) {
      best = &term;
      best_w = w;
    }
  }
  return best ? title_case(*best) : std::string("Untitled");
}

TopicAssignment extract_topic(const Recording& recording, const SparseVector* doc_vector,
                              const Vocabulary& vocab, TopicProvider* provider,
                              const TopicOptions& options) {
  TopicAssignment out;
  out.recording_id = recording.id;
  const auto fallback = [&](std::optional<std::string> why) {
    out.topic = doc_vector ? fallback_topic(*doc_vector, vocab) : std::string("Untitled");
    out.provider = TopicSource::TfidfFallback;
    out.raw_response = std::move(why);
    return out;
  };
  if (!provider) return fallback(std::nullopt);

  std::string prompt;
  try {
    prompt = build_topic_prompt(recording.raw_transcript, options.transcript_budget);
  } catch (const Error& e) {
    return fallback(std::string(e.what()));
  }

  const auto sleep = options.retry.sleep
                         ? options.retry.sleep
                         : [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  auto delay = options.retry.initial_delay;
  std::string last_error;
  for (int attempt = 1; attempt <= options.retry.attempts; ++attempt) {
    try {
      const auto response = provider->complete(prompt);
      if (auto topic = normalize_topic(response)) {
        out.topic = std::move(*topic);
        out.provider = TopicSource::Llm;
        out.raw_response = response;
        return out;
      }
      last_error = "unusable response: \"" + response + "\"";
    } catch (const Error& e) {
      last_error = e.what();
    }
    if (attempt < options.retry.attempts) {
      sleep(delay);
      delay = std::chrono::milliseconds(
          static_cast<std::chrono::milliseconds::rep>(delay.count() * options.retry.backoff));
    }
  }
  return fallback(last_error);
}

json topics_to_json(const std::vector<TopicAssignment>& topics) {
  json out = json::array();
  for (const auto& t : topics) {
    json item{{"recording_id", t.recording_id}, {"topic", t.topic}, {"provider", to_string(t.provider)}};
    if (t.raw_response) item["raw_response"] = *t.raw_response;
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<TopicAssignment> topics_from_json(const json& j) {
  std::vector<TopicAssignment> out;
  for (const auto& item : j) {
    TopicAssignment t;
    t.recording_id = item.at("recording_id").get<std::string>();
    t.topic = item.at("topic").get<std::string>();
    t.provider = item.at("provider").get<std::string>() == "llm" ? TopicSource::Llm
                                                                 : TopicSource::TfidfFallback;
    if (item.contains("raw_response")) t.raw_response = item["raw_response"].get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace mindmap
