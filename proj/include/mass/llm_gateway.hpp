#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mass/provider.hpp"
#include "mass/style.hpp"

namespace mass {

struct ProviderConfig {
  std::string endpoint_url;  // e.g. https://host:port/v1
  std::string model_name;
  double style_temperature = 0.7;      // diversity wanted for personas
  double selection_temperature = 0.2;  // format discipline wanted for picks
  int max_retries = 2;
  int requests_per_minute = 120;
  std::string api_key_env = "MASS_LLM_API_KEY";
  int backoff_ms = 250;
  // Response cache directory (prompt hash -> response text). Empty disables
  // caching; replay_only serves everything from the cache and never makes a
  // network call.
  std::filesystem::path cache_dir;
  bool replay_only = false;
};

struct PromptBundle {
  std::string system_text;
  std::string style_template;     // placeholders: {examples} {input_data} {macro_data}
  std::string decision_template;  // placeholders: {num_stocks} {examples} {input_data}
  std::string style_examples;
  std::string decision_examples;
};

// The built-in templates for persona generation and stock selection.
const PromptBundle& default_prompt_bundle();

struct ChatMessage {
  std::string role;
  std::string content;
};

// Pure rendering: identical inputs produce byte-identical prompts.
std::string render_style_prompt(const PromptBundle& bundle, const StyleRequest& request);
std::string render_strategy_prompt(const PromptBundle& bundle,
                                   const StrategyRequest& request);
std::string render_decision_prompt(const PromptBundle& bundle,
                                   const SelectionRequest& request);
// Comma-separated pool table: Stock,Date then the visible columns ("NA" for
// missing cells), followed by any visible text items.
std::string render_stock_table(const SelectionRequest& request);

// True when no template placeholder ({examples}, {input_data}, {macro_data},
// {num_stocks}) survived rendering.
bool placeholders_resolved(const std::string& prompt);

// First balanced top-level JSON object in free-form text. Objects written
// with single quotes (a common model habit) are normalized when they contain
// no double quotes.
std::optional<std::string> extract_json_object(const std::string& text);

// Stable fingerprint of a rendered conversation, used as the cache key.
std::string prompt_fingerprint(const std::string& model,
                               const std::vector<ChatMessage>& messages);

// Token bucket with FIFO admission. acquire() blocks until a token is
// available and every earlier caller has been admitted.
class RateLimiter {
 public:
  explicit RateLimiter(int requests_per_minute, int burst = 1);
  void acquire();

 private:
  void refill(std::chrono::steady_clock::time_point now);

  std::mutex mutex_;
  std::condition_variable cv_;
  double tokens_;
  double capacity_;
  double refill_per_second_;
  std::chrono::steady_clock::time_point last_refill_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ = 0;
};

// Transport abstraction so tests can run against recorded fixtures or an
// in-process server.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  // Returns the assistant message content.
  virtual std::string complete(const std::string& model,
                               const std::vector<ChatMessage>& messages,
                               double temperature) = 0;
};

// Chat-completion-backed provider: renders the prompt bundle, enforces the
// output schemas, retries malformed responses, rate-limits requests and
// caches responses by prompt hash.
class LlmProvider : public DecisionProvider {
 public:
  explicit LlmProvider(ProviderConfig config,
                       PromptBundle bundle = default_prompt_bundle());
  // Takes ownership of a custom transport (tests).
  LlmProvider(ProviderConfig config, PromptBundle bundle,
              std::unique_ptr<ChatTransport> transport);

  std::string id() const override { return "llm:" + config_.model_name; }
  AgentStyle generate_style(const StyleRequest& request) override;
  std::string generate_strategy(const StrategyRequest& request) override;
  std::vector<std::string> select_stocks(const SelectionRequest& request) override;
  std::uint64_t call_count() const override { return calls_.load(); }

  const ProviderConfig& config() const { return config_; }

 private:
  std::string complete_with_cache(const std::vector<ChatMessage>& messages,
                                  double temperature);
  AgentStyle request_style(const std::string& rendered, std::string* error);

  ProviderConfig config_;
  PromptBundle bundle_;
  std::unique_ptr<ChatTransport> transport_;
  RateLimiter limiter_;
  std::atomic<std::uint64_t> calls_{0};
  std::mutex cache_mutex_;
};

// Parses the persona-schema JSON (the provider's response format) into an
// AgentStyle. Returns an explanation through `error` on failure; numeric
// fields are clamped to [0, 1] with a note in `warnings`.
std::optional<AgentStyle> parse_style_response(const std::string& response_text,
                                               std::string* error,
                                               std::vector<std::string>* warnings);

// Parses {"Stock": [...]} from a selection response.
std::optional<std::vector<std::string>> parse_selection_response(
    const std::string& response_text, std::string* error);

}  // namespace mass
