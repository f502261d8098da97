#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace xlie {

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  std::string tag;  // pipeline stage label, used for cost attribution
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct ChatResponse {
  std::string content;
  TokenUsage usage;
  double latency_ms = 0.0;
  std::string model;
};

struct ClientPolicy {
  int max_retries = 2;  // additional attempts after the first
  int backoff_initial_ms = 100;
  double backoff_factor = 2.0;
  int backoff_max_ms = 5000;
  int concurrency = 4;
  std::string primary_model;
  std::string fallback_model;
};

class LlmError : public std::runtime_error {
 public:
  enum class Kind { kExhaustedRetries, kAuth, kMalformedResponse, kTransport };
  LlmError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Single-attempt failure raised by transports.
class TransportError : public std::runtime_error {
 public:
  enum class Kind { kConnection, kStatus, kAuth, kMalformed };
  TransportError(Kind kind, bool transient, const std::string& what)
      : std::runtime_error(what), kind_(kind), transient_(transient) {}
  Kind kind() const { return kind_; }
  bool transient() const { return transient_; }

 private:
  Kind kind_;
  bool transient_;
};

// One network/scripted attempt. Implementations may be called from multiple
// worker threads concurrently.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatResponse send(const ChatRequest& request) = 0;
};

struct AttemptRecord {
  std::string tag;
  std::string model;
  int attempt = 0;  // 0-based within one complete() call
  std::string outcome;  // "ok" or the error text
};

struct UsageRow {
  std::string tag;
  std::string model;
  long prompt_tokens = 0;
  long completion_tokens = 0;
  std::size_t calls = 0;
};

// Blocking chat client: bounded concurrency, retries with exponential
// backoff on transient failures, attempt log, per-stage token accounting,
// optional raw request/response audit trail.
class LlmClient {
 public:
  LlmClient(std::shared_ptr<ChatTransport> transport, ClientPolicy policy);
  ~LlmClient();

  LlmClient(const LlmClient&) = delete;
  LlmClient& operator=(const LlmClient&) = delete;

  // At most 1 + policy.max_retries attempts. Non-transient errors surface
  // immediately as LlmError; transient exhaustion raises kExhaustedRetries.
  ChatResponse complete(ChatRequest request);

  const ClientPolicy& policy() const { return policy_; }

  std::vector<AttemptRecord> attempts() const;
  std::vector<UsageRow> usage() const;

  // Appends one JSONL row per attempt (raw request and response) to `path`.
  void set_audit_path(const std::string& path);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  ClientPolicy policy_;
};

// Replays a scripted transcript in order and records every request.
class MockTransport : public ChatTransport {
 public:
  struct Scripted {
    std::string content;
    bool transient_failure = false;
    bool fatal_failure = false;
    long prompt_tokens = 0;
    long completion_tokens = 0;
  };

  explicit MockTransport(std::vector<Scripted> transcript);
  ~MockTransport() override;

  ChatResponse send(const ChatRequest& request) override;

  std::vector<ChatRequest> requests() const;
  std::size_t calls() const;
  // High-water mark of concurrent send() calls, for throttle assertions.
  int max_in_flight() const;
  void set_delay_ms(int delay_ms);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

// Computes each response from the request; deterministic under concurrency
// when the handler is a pure function.
class CallbackTransport : public ChatTransport {
 public:
  using Handler = std::function<std::string(const ChatRequest&)>;
  explicit CallbackTransport(Handler handler);
  ~CallbackTransport() override;

  ChatResponse send(const ChatRequest& request) override;
  std::vector<ChatRequest> requests() const;

 private:
  struct State;
  Handler handler_;
  std::unique_ptr<State> state_;
};

// OpenAI-style chat-completions HTTP transport (messages in, choices out).
// `base_url` is scheme://host[:port]; the endpoint path defaults to
// /v1/chat/completions.
std::shared_ptr<ChatTransport> make_http_transport(
    const std::string& base_url, const std::string& api_key,
    const std::string& path = "/v1/chat/completions", int timeout_sec = 120);

// Environment variables the CLI reads for credentials.
inline constexpr const char* kApiKeyEnv = "XLIE_API_KEY";
inline constexpr const char* kBaseUrlEnv = "XLIE_BASE_URL";

std::shared_ptr<LlmClient> make_mock_client(
    std::vector<MockTransport::Scripted> transcript, ClientPolicy policy = {});

}  // namespace xlie
