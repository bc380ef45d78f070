#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace vlselect {

struct ProviderConfig {
  // Full URL of the chat-completion (or embeddings) route, e.g.
  // http://localhost:8000/v1/chat/completions
  std::string endpoint;
  std::string model_name;
  unsigned max_concurrency = 4;
  unsigned max_retries = 3;
  std::chrono::milliseconds timeout{60000};
  // First retry waits this long; each further retry doubles it.
  std::chrono::milliseconds retry_backoff{500};
  double temperature = 0.0;
  std::string api_key;
  std::size_t batch_size = 64;  // texts per embeddings request
};

// Throws PreconditionError for max_concurrency == 0 or batch_size == 0.
void validate(const ProviderConfig& config);

// Produces a completion for one prompt. Implementations must be safe to call
// from several threads at once.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string id() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;
};

// Maps a batch of texts to equal-length vectors, order-aligned.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) = 0;
};

// POSTs {model, temperature, messages:[{role:"user", content}]} and returns
// choices[0].message.content. Transport failures, non-2xx statuses and
// malformed bodies throw ProviderError. One attempt per call; retries are
// the caller's job.
class HttpChatProvider final : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderConfig config);
  std::string id() const override;
  std::string complete(const std::string& prompt) override;

 private:
  ProviderConfig config_;
};

// POSTs {model, input:[...]} and reads data[i].embedding (sorted by the
// optional data[i].index).
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HttpEmbeddingProvider(ProviderConfig config);
  std::string id() const override;
  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;

 private:
  ProviderConfig config_;
};

// Offline stand-in for a chat model. Without a responder it picks a skill
// phrase from keywords in the prompt's questions, falling back to a canned
// phrase chosen by prompt hash.
class MockChatProvider final : public ChatProvider {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;

  MockChatProvider() = default;
  explicit MockChatProvider(Responder responder) : responder_(std::move(responder)) {}

  std::string id() const override { return "mock"; }
  std::string complete(const std::string& prompt) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  Responder responder_;
  std::atomic<std::size_t> calls_{0};
};

// Pseudo-random unit vector seeded by a hash of the text.
class MockEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit MockEmbeddingProvider(std::size_t dim = 384) : dim_(dim) {}
  std::string id() const override { return "mock-embed-" + std::to_string(dim_); }
  std::vector<std::vector<float>> embed(const std::vector<std::string>& texts) override;
  std::size_t calls() const noexcept { return calls_.load(); }

 private:
  std::size_t dim_;
  std::atomic<std::size_t> calls_{0};
};

// Default skill phrase the keyword mock produces for a prompt.
std::string mock_skill_phrase(const std::string& prompt);

// Credentials are read from this environment variable when the config has no key.
inline constexpr const char* kApiKeyEnv = "VLSELECT_API_KEY";

}  // namespace vlselect
