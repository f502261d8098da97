#include "xlie/llm.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace xlie {

namespace {

using nlohmann::json;

// Runtime-sized counting semaphore.
class Semaphore {
 public:
  explicit Semaphore(int count) : count_(count < 1 ? 1 : count) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return count_ > 0; });
    --count_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(Semaphore& semaphore) : semaphore_(semaphore) {
    semaphore_.acquire();
  }
  ~SemaphoreGuard() { semaphore_.release(); }

 private:
  Semaphore& semaphore_;
};

json request_to_json(const ChatRequest& request) {
  json messages = json::array();
  for (const ChatMessage& message : request.messages) {
    messages.push_back({{"role", message.role}, {"content", message.content}});
  }
  return json{{"model", request.model},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", request.max_tokens}};
}

}  // namespace

// --- LlmClient ---------------------------------------------------------------

struct LlmClient::Impl {
  explicit Impl(std::shared_ptr<ChatTransport> transport, int concurrency)
      : transport(std::move(transport)), semaphore(concurrency) {}

  std::shared_ptr<ChatTransport> transport;
  Semaphore semaphore;

  mutable std::mutex mutex;
  std::vector<AttemptRecord> attempts;
  std::map<std::pair<std::string, std::string>, UsageRow> usage;
  std::string audit_path;

  void record(const ChatRequest& request, int attempt,
              const std::string& outcome, const ChatResponse* response) {
    std::lock_guard lock(mutex);
    attempts.push_back(
        AttemptRecord{request.tag, request.model, attempt, outcome});
    if (response) {
      UsageRow& row = usage[{request.tag, request.model}];
      row.tag = request.tag;
      row.model = request.model;
      row.prompt_tokens += response->usage.prompt_tokens;
      row.completion_tokens += response->usage.completion_tokens;
      ++row.calls;
    }
    if (!audit_path.empty()) {
      json row{{"tag", request.tag},
               {"attempt", attempt},
               {"request", request_to_json(request)},
               {"outcome", outcome}};
      if (response) {
        row["response"] = {{"content", response->content},
                           {"prompt_tokens", response->usage.prompt_tokens},
                           {"completion_tokens",
                            response->usage.completion_tokens}};
      }
      std::ofstream out(audit_path, std::ios::app);
      out << row.dump() << "\n";
    }
  }
};

LlmClient::LlmClient(std::shared_ptr<ChatTransport> transport,
                     ClientPolicy policy)
    : impl_(std::make_unique<Impl>(std::move(transport), policy.concurrency)),
      policy_(std::move(policy)) {}

LlmClient::~LlmClient() = default;

ChatResponse LlmClient::complete(ChatRequest request) {
  if (request.model.empty()) request.model = policy_.primary_model;
  SemaphoreGuard guard(impl_->semaphore);

  int backoff_ms = policy_.backoff_initial_ms;
  for (int attempt = 0; attempt <= policy_.max_retries; ++attempt) {
    auto start = std::chrono::steady_clock::now();
    try {
      ChatResponse response = impl_->transport->send(request);
      response.latency_ms =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - start)
              .count();
      if (response.model.empty()) response.model = request.model;
      impl_->record(request, attempt, "ok", &response);
      return response;
    } catch (const TransportError& error) {
      impl_->record(request, attempt, error.what(), nullptr);
      if (!error.transient()) {
        switch (error.kind()) {
          case TransportError::Kind::kAuth:
            throw LlmError(LlmError::Kind::kAuth, error.what());
          case TransportError::Kind::kMalformed:
            throw LlmError(LlmError::Kind::kMalformedResponse, error.what());
          default:
            throw LlmError(LlmError::Kind::kTransport, error.what());
        }
      }
      if (attempt == policy_.max_retries) {
        throw LlmError(LlmError::Kind::kExhaustedRetries,
                       "retries exhausted after " +
                           std::to_string(attempt + 1) +
                           " attempts: " + error.what());
      }
      if (backoff_ms > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      }
      backoff_ms = std::min<int>(
          policy_.backoff_max_ms,
          static_cast<int>(backoff_ms * policy_.backoff_factor));
    }
  }
  throw LlmError(LlmError::Kind::kExhaustedRetries, "retries exhausted");
}

std::vector<AttemptRecord> LlmClient::attempts() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->attempts;
}

std::vector<UsageRow> LlmClient::usage() const {
  std::lock_guard lock(impl_->mutex);
  std::vector<UsageRow> rows;
  rows.reserve(impl_->usage.size());
  for (const auto& [key, row] : impl_->usage) rows.push_back(row);
  return rows;
}

void LlmClient::set_audit_path(const std::string& path) {
  std::lock_guard lock(impl_->mutex);
  impl_->audit_path = path;
}

// --- MockTransport -----------------------------------------------------------

struct MockTransport::State {
  std::vector<Scripted> transcript;
  std::vector<ChatRequest> requests;
  std::size_t cursor = 0;
  int delay_ms = 0;
  std::atomic<int> in_flight{0};
  std::atomic<int> max_in_flight{0};
  mutable std::mutex mutex;
};

MockTransport::MockTransport(std::vector<Scripted> transcript)
    : state_(std::make_unique<State>()) {
  state_->transcript = std::move(transcript);
}

MockTransport::~MockTransport() = default;

ChatResponse MockTransport::send(const ChatRequest& request) {
  int now = ++state_->in_flight;
  int seen = state_->max_in_flight.load();
  while (now > seen && !state_->max_in_flight.compare_exchange_weak(seen, now)) {
  }

  Scripted step;
  {
    std::lock_guard lock(state_->mutex);
    state_->requests.push_back(request);
    if (state_->cursor < state_->transcript.size()) {
      step = state_->transcript[state_->cursor++];
    } else {
      --state_->in_flight;
      throw TransportError(TransportError::Kind::kConnection, false,
                           "mock transcript exhausted");
    }
  }
  if (state_->delay_ms > 0) {
    std::this_thread::sleep_for(std::chrono::milliseconds(state_->delay_ms));
  }
  --state_->in_flight;

  if (step.transient_failure) {
    throw TransportError(TransportError::Kind::kStatus, true,
                         "scripted transient failure");
  }
  if (step.fatal_failure) {
    throw TransportError(TransportError::Kind::kAuth, false,
                         "scripted fatal failure");
  }
  ChatResponse response;
  response.content = step.content;
  response.usage.prompt_tokens = step.prompt_tokens;
  response.usage.completion_tokens =
      step.completion_tokens > 0
          ? step.completion_tokens
          : static_cast<long>(step.content.size());
  response.model = request.model;
  return response;
}

std::vector<ChatRequest> MockTransport::requests() const {
  std::lock_guard lock(state_->mutex);
  return state_->requests;
}

std::size_t MockTransport::calls() const {
  std::lock_guard lock(state_->mutex);
  return state_->requests.size();
}

int MockTransport::max_in_flight() const { return state_->max_in_flight.load(); }

void MockTransport::set_delay_ms(int delay_ms) { state_->delay_ms = delay_ms; }

// --- CallbackTransport -------------------------------------------------------

struct CallbackTransport::State {
  mutable std::mutex mutex;
  std::vector<ChatRequest> requests;
};

CallbackTransport::CallbackTransport(Handler handler)
    : handler_(std::move(handler)), state_(std::make_unique<State>()) {}

CallbackTransport::~CallbackTransport() = default;

ChatResponse CallbackTransport::send(const ChatRequest& request) {
  {
    std::lock_guard lock(state_->mutex);
    state_->requests.push_back(request);
  }
  ChatResponse response;
  response.content = handler_(request);
  response.usage.completion_tokens = static_cast<long>(response.content.size());
  response.model = request.model;
  return response;
}

std::vector<ChatRequest> CallbackTransport::requests() const {
  std::lock_guard lock(state_->mutex);
  return state_->requests;
}

// --- HttpTransport -----------------------------------------------------------

namespace {

class HttpTransport : public ChatTransport {
 public:
  HttpTransport(std::string base_url, std::string api_key, std::string path,
                int timeout_sec)
      : base_url_(std::move(base_url)),
        api_key_(std::move(api_key)),
        path_(std::move(path)),
        timeout_sec_(timeout_sec) {}

  ChatResponse send(const ChatRequest& request) override {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_sec_, 0);
    client.set_read_timeout(timeout_sec_, 0);
    client.set_write_timeout(timeout_sec_, 0);

    httplib::Headers headers;
    if (!api_key_.empty()) {
      headers.emplace("Authorization", "Bearer " + api_key_);
    }
    std::string body = request_to_json(request).dump();
    httplib::Result result =
        client.Post(path_, headers, body, "application/json");

    if (!result) {
      throw TransportError(TransportError::Kind::kConnection, true,
                           "connection failed: " +
                               httplib::to_string(result.error()));
    }
    if (result->status == 401 || result->status == 403) {
      throw TransportError(TransportError::Kind::kAuth, false,
                           "authentication failed (status " +
                               std::to_string(result->status) + ")");
    }
    if (result->status == 429 || result->status >= 500) {
      throw TransportError(TransportError::Kind::kStatus, true,
                           "transient status " +
                               std::to_string(result->status));
    }
    if (result->status != 200) {
      throw TransportError(TransportError::Kind::kStatus, false,
                           "unexpected status " +
                               std::to_string(result->status) + ": " +
                               result->body);
    }

    json payload = json::parse(result->body, nullptr, false);
    if (payload.is_discarded() || !payload.contains("choices") ||
        !payload["choices"].is_array() || payload["choices"].empty()) {
      throw TransportError(TransportError::Kind::kMalformed, false,
                           "malformed chat response body");
    }
    const json& first = payload["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content")) {
      throw TransportError(TransportError::Kind::kMalformed, false,
                           "chat response missing message content");
    }
    ChatResponse response;
    response.content = first["message"]["content"].get<std::string>();
    if (payload.contains("usage")) {
      const json& usage = payload["usage"];
      response.usage.prompt_tokens = usage.value("prompt_tokens", 0L);
      response.usage.completion_tokens = usage.value("completion_tokens", 0L);
    }
    response.model = payload.value("model", request.model);
    return response;
  }

 private:
  std::string base_url_;
  std::string api_key_;
  std::string path_;
  int timeout_sec_;
};

}  // namespace

std::shared_ptr<ChatTransport> make_http_transport(const std::string& base_url,
                                                   const std::string& api_key,
                                                   const std::string& path,
                                                   int timeout_sec) {
  return std::make_shared<HttpTransport>(base_url, api_key, path, timeout_sec);
}

std::shared_ptr<LlmClient> make_mock_client(
    std::vector<MockTransport::Scripted> transcript, ClientPolicy policy) {
  return std::make_shared<LlmClient>(
      std::make_shared<MockTransport>(std::move(transcript)),
      std::move(policy));
}

}  // namespace xlie
