// Chat-completion client for candidate generation and teacher annotation.
// Speaks the de-facto open chat schema (messages array + model field), with
// bounded per-endpoint concurrency, full-jitter exponential backoff, and a
// credential-scrubbed audit log.

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include <rrt/pipeline.hpp>
#include <rrt/prompts.hpp>
#include <rrt/rubric.hpp>

namespace rrt {

struct EndpointConfig {
  std::string name;
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env;  // name of the env var holding the credential
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{200};
  std::chrono::milliseconds backoff_cap{5000};
  int max_concurrency = 4;
  std::chrono::milliseconds timeout{30000};
  double temperature = 0.7;
  double top_p = 0.9;
  int max_tokens = 1024;
};

enum class ReplyMode { Strict, Lenient };

enum class ClientError {
  Timeout,
  HttpError,
  ReplyNotJson,
  FencedReply,
  Exhausted,
};

inline std::string_view to_string(ClientError e) {
  switch (e) {
    case ClientError::Timeout: return "timeout";
    case ClientError::HttpError: return "http_error";
    case ClientError::ReplyNotJson: return "reply_not_json";
    case ClientError::FencedReply: return "fenced_reply";
    case ClientError::Exhausted: return "retries_exhausted";
  }
  return "?";
}

namespace detail {

class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}
  void acquire() {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }
  void release() {
    {
      std::lock_guard lock(mu_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  int count_;
};

struct SemaphoreGuard {
  Semaphore& sem;
  explicit SemaphoreGuard(Semaphore& s) : sem(s) { sem.acquire(); }
  ~SemaphoreGuard() { sem.release(); }
};

inline std::string scrub(std::string text, const std::string& secret) {
  if (secret.empty()) return text;
  size_t pos = 0;
  while ((pos = text.find(secret, pos)) != std::string::npos) {
    text.replace(pos, secret.size(), "***");
    pos += 3;
  }
  return text;
}

inline bool looks_fenced(std::string_view reply) {
  const std::string t = normalize_ws(reply);
  return t.rfind("```", 0) == 0;
}

// Longest balanced top-level {...} span, for lenient extraction.
inline std::optional<std::string> balanced_object(std::string_view s) {
  std::optional<std::string> best;
  for (size_t start = 0; start < s.size(); ++start) {
    if (s[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < s.size(); ++i) {
      const char c = s[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          const size_t len = i - start + 1;
          if (!best || len > best->size())
            best = std::string(s.substr(start, len));
          break;
        }
      }
    }
  }
  return best;
}

}  // namespace detail

// Extracts the JSON object payload from a raw model reply. Strict mode never
// mutates the reply; lenient mode may strip one surrounding code fence and
// falls back to the longest balanced object.
inline std::optional<std::string> extract_reply_json(std::string_view reply,
                                                     ReplyMode mode,
                                                     ClientError& error) {
  if (mode == ReplyMode::Strict) {
    if (detail::looks_fenced(reply)) {
      error = ClientError::FencedReply;
      return std::nullopt;
    }
    json doc = json::parse(reply, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
      error = ClientError::ReplyNotJson;
      return std::nullopt;
    }
    return std::string(reply);
  }
  std::string body(reply);
  if (detail::looks_fenced(body)) {
    const size_t open = body.find("```");
    size_t content = body.find('\n', open);
    const size_t close = body.rfind("```");
    if (content != std::string::npos && close > content)
      body = body.substr(content + 1, close - content - 1);
  }
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    auto span = detail::balanced_object(body);
    if (!span) {
      error = ClientError::ReplyNotJson;
      return std::nullopt;
    }
    body = *span;
  }
  return body;
}

struct ChatResult {
  bool ok = false;
  std::optional<ClientError> error;
  int http_status = 0;
  std::string reply;  // assistant message content on success
  int attempts = 0;
};

// Sink for the request/response audit trail; lines are pre-scrubbed.
using AuditSink = std::function<void(const json& line)>;

class ChatClient {
 public:
  explicit ChatClient(EndpointConfig cfg, uint64_t seed = 0,
                      AuditSink audit = nullptr)
      : cfg_(std::move(cfg)),
        semaphore_(std::max(1, cfg_.max_concurrency)),
        rng_(detail::fork_seed(seed, "client:" + cfg_.name)),
        audit_(std::move(audit)) {
    if (const char* v =
            cfg_.api_key_env.empty() ? nullptr : std::getenv(cfg_.api_key_env.c_str()))
      credential_ = v;
  }

  const EndpointConfig& config() const { return cfg_; }

  // Test hook: replaces the real backoff sleep.
  void set_sleep_fn(std::function<void(std::chrono::milliseconds)> fn) {
    sleep_fn_ = std::move(fn);
  }

  // One chat completion with retries. `media_path` is attached as a content
  // part for non-text modalities.
  ChatResult chat(const std::string& prompt, Modality modality,
                  const std::string& media_path) {
    detail::SemaphoreGuard guard(semaphore_);
    const std::string body = request_body(prompt, modality, media_path);

    ChatResult res;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
      if (attempt > 0) sleep_fn_(backoff_delay(attempt - 1));
      ++res.attempts;

      httplib::Client http(cfg_.base_url);
      http.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout));
      http.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout));
      httplib::Headers headers;
      if (!credential_.empty())
        headers.emplace("Authorization", "Bearer " + credential_);

      auto http_res = http.Post(cfg_.path, headers, body, "application/json");
      res.http_status = http_res ? http_res->status : 0;
      audit(attempt, res.http_status, body, http_res ? http_res->body : "");

      if (!http_res) {
        res.error = ClientError::Timeout;
        continue;  // transport failure: retry
      }
      if (http_res->status == 429 || http_res->status >= 500) {
        res.error = ClientError::HttpError;
        continue;  // transient server failure: retry
      }
      if (http_res->status != 200) {
        res.error = ClientError::HttpError;
        return res;  // non-retryable
      }
      json doc = json::parse(http_res->body, nullptr, false);
      if (doc.is_discarded()) {
        res.error = ClientError::ReplyNotJson;
        return res;
      }
      try {
        res.reply = doc.at("choices").at(0).at("message").at("content")
                        .get<std::string>();
      } catch (const json::exception&) {
        res.error = ClientError::ReplyNotJson;
        return res;
      }
      res.ok = true;
      res.error.reset();
      return res;
    }
    if (!res.error) res.error = ClientError::Exhausted;
    return res;
  }

 private:
  std::string request_body(const std::string& prompt, Modality modality,
                           const std::string& media_path) const {
    json content;
    if (modality == Modality::Text || media_path.empty()) {
      content = prompt;
    } else {
      const std::string part_type = std::string(to_string(modality)) + "_url";
      content = json::array({
          json{{"type", "text"}, {"text", prompt}},
          json{{"type", part_type}, {part_type, {{"url", media_path}}}},
      });
    }
    json body = {
        {"model", cfg_.model},
        {"messages", json::array({json{{"role", "user"}, {"content", content}}})},
        {"temperature", cfg_.temperature},
        {"top_p", cfg_.top_p},
        {"max_tokens", cfg_.max_tokens},
    };
    return body.dump();
  }

  std::chrono::milliseconds backoff_delay(int n) {
    const auto ceiling = std::min<int64_t>(
        cfg_.backoff_cap.count(), cfg_.backoff_base.count() * (int64_t{1} << n));
    std::lock_guard lock(rng_mu_);
    std::uniform_int_distribution<int64_t> jitter(0, ceiling);
    return std::chrono::milliseconds(jitter(rng_));
  }

  void audit(int attempt, int status, const std::string& request,
             const std::string& response) {
    if (!audit_) return;
    json line = {
        {"endpoint", cfg_.name},
        {"model", cfg_.model},
        {"attempt", attempt},
        {"status", status},
        {"request", detail::scrub(request, credential_)},
        {"response", detail::scrub(response, credential_)},
    };
    audit_(line);
  }

  EndpointConfig cfg_;
  std::string credential_;
  detail::Semaphore semaphore_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
  AuditSink audit_;
  std::function<void(std::chrono::milliseconds)> sleep_fn_ =
      [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

struct AnnotateResult {
  TeacherAnnotation annotation;
  std::optional<ClientError> error;
  int attempts = 0;
};

// Queries one teacher for a rubric judgment of the pair. Failures return an
// annotation with no record and the raw reply preserved for the audit trail.
inline AnnotateResult annotate_pair(const CandidatePair& pair,
                                    ChatClient& teacher,
                                    ReplyMode mode = ReplyMode::Strict) {
  const auto prompt = render_prompt(
      get_template(TemplateId::StrongAnnotation),
      {{"modality", std::string(to_string(pair.modality))},
       {"modality_path", pair.media_path},
       {"question", pair.question},
       {"answer_a", pair.response_a},
       {"answer_b", pair.response_b}});

  ChatResult chat = teacher.chat(prompt, pair.modality, pair.media_path);

  AnnotateResult out;
  out.attempts = chat.attempts;
  if (!chat.ok) {
    out.error = chat.error;
    out.annotation = make_annotation(teacher.config().name, pair.pair_id, chat.reply);
    return out;
  }
  ClientError extract_err{};
  auto payload = extract_reply_json(chat.reply, mode, extract_err);
  if (!payload) {
    out.error = extract_err;
    out.annotation = make_annotation(teacher.config().name, pair.pair_id, chat.reply);
    return out;
  }
  out.annotation = make_annotation(teacher.config().name, pair.pair_id, *payload);
  return out;
}

struct GenerationResult {
  std::optional<CandidatePair> pair;
  std::optional<ClientError> error;  // from whichever endpoint failed
};

// Issues the same query to the strong and weak generators and assembles a
// candidate pair (strong reply as response_a).
inline GenerationResult generate_candidates(const std::string& pair_id,
                                            Modality modality,
                                            const std::string& media_path,
                                            const std::string& question,
                                            ChatClient& strong,
                                            ChatClient& weak) {
  ChatResult a = strong.chat(question, modality, media_path);
  if (!a.ok) return {std::nullopt, a.error};
  ChatResult b = weak.chat(question, modality, media_path);
  if (!b.ok) return {std::nullopt, b.error};

  CandidatePair pair;
  pair.pair_id = pair_id;
  pair.modality = modality;
  pair.media_path = media_path;
  pair.question = question;
  pair.response_a = a.reply;
  pair.response_b = b.reply;
  pair.generator_a = strong.config().model;
  pair.generator_b = weak.config().model;
  return {pair, std::nullopt};
}

}  // namespace rrt
