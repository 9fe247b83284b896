#include "mass/llm_gateway.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <fstream>
#include <sstream>
#include <thread>

#ifdef MASS_HTTPS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "mass/dataset.hpp"
#include "mass/rng.hpp"

namespace mass {

namespace {

using nlohmann::json;

constexpr const char* kSystemText =
    "You are a helpful assistant. Make sure you carefully and fully understand "
    "the details of the user's requirements before you start solving the "
    "problem.";

constexpr const char* kStyleTemplate = R"(Give the following input data:

1. Input time-series data column name and their descriptions in JSON format(textual data example).

2. latest macroeconomic and market insights.
Please try to analyze and summarize an abstract investing style description.

The output format is a json. The specific format of the output JSON is:

{
   "Outline": "The outline and general description for investment style within 50 words. The outline is a summarization about your investing strategy and your insights into the subsequent trend of the stock market, without any details below.",
   "Details": {
      "Risk Appetite": "conservative | moderate | moderately conservative | moderately aggressive | aggressive",
      "Holding Period": "one day | about one week | about one month | about half a year | more than one year",
      "Strategy Consistency": [0, 1] (Refers to the investor's ability to adhere to and execute their investment strategy with persistence and coherence, regardless of short-term market fluctuations or emotional influences. Higher number means high consistency",
      "Rationality": [0, 1] (Refers to whether the investor's decision-making process is based on logic, data, and long-term objectives rather than emotions, biases, or short-term market noise. Higher number means high rationality",
      "StockPoolSelector": "Specify what kind of preference you'd like to construct your watchlist stocks. The possible preferences are:
      1. RandomStockSelector: Randomly construct your watchlist.
      2. IndustryEqualStockSelector: Construct a stock pool with balanced distribution across industries.
      3. MVEqualStockSelector: Construct a stock pool with balanced distribution across market capitalizations.
      4. IndustryBasisStockSelector: Prefer stocks from specific industries and output the preferred industries. The result is presented in a list format.",
      "Others": "Extra information about your investing strategy, maybe correlated with latest market and macroeconmic information and others. No more than 30 words." } }

{examples}

Input data:
{input_data}

Macro data:
{macro_data}

Your investing style:
)";

constexpr const char* kStyleExamples = R"(Input data:

E/P,B/P,CF/P, S/P,Log-orthogonalized E/P,Log-orthogonalized B/P,Log-orthogonalized CF/P,Log-orthogonalized S/P,

Macro data:

The latest 1-year loan prime rate is 3.45. The latest month China CPI YOY growth rate is -0.5. The latest yield of China's ten-year government bonds is 2.6733%, while the yield has increased 0 BP over the past one day, increased -4 BP over the past one month, and increased -21 BP over the past half a year. The latest CSI_300 PE is 10.9478, and the current PE ratio of the CSI 300 is at the 5.4th percentile over the past 5 years(0 indicates most undervalued, and 100 indicates most overvalued). The latest market sentiment index got a 0.63% return.

Your investing style:

{'Outline': 'A value-oriented investment approach focusing on fundamentally strong companies with a long-term perspective, leveraging current market undervaluation and stable economic indicators to build a diversified portfolio.',
 'Details': {'Risk Appetite': 'moderate',
  'Holding Period': 'more than one year',
  'Strategy Consistency': '0.85',
  'Rationality': '0.9',
  'StockPoolSelector': 'IndustryEqualStockSelector',
  'Others': 'Leverage low CPI and undervalued CSI 300 PE for potential upside.'}

(END_OF_EXAMPLES))";

constexpr const char* kDecisionTemplate = R"(Giving following

1. Input data in table format and their descriptions in JSON format.

2. investing style to make investment decisions in JSON format.

Please output {num_stocks} stocks you tend to invest in. The result is in JSON format, key is "Stock", and value is a list containing the stock code. Please make sure:

1. You output legal stock code. The stock code is legal if and only if it is in the input data "Stock" list.

2. The number of stock codes is correct, actually equal to {num_stocks}.
{examples}

{input_data}
)";

constexpr const char* kDecisionExamples = R"(Here is an example.

For stock_nums in investing instructions, we use 3 in this example.
Input Data for investing decision:

1. Input Data Description:

{"E/P": "The inverse of the P/E ratio (E/P) indicates the earnings yield, showing the percentage of profit generated per dollar invested in the stock.",
"B/P": "Inverse of P/B (B/P) indicates the book yield, showing the return on book value per dollar invested.",
"S/P": "Inverse of P/S (S/P) reflects the sales yield, showing sales generated per dollar invested.",
"CF/P": "Inverse of P/CF (CF/P) shows the cash flow yield, representing cash flow generated per dollar invested.",
"EBITDA/EV": "Measures a company's return on enterprise value, indicating operating earnings (EBITDA) generated per dollar of EV."}

2. Investing Style:

{"Outline": "A value-driven investment approach focusing on stocks with strong fundamentals, undervalued valuations, and consistent cash flows over the long term.",
   "Details": {
      "Risk Appetite": "Moderately conservative",
      "Holding Period": "More than one year",
      "Strategy Consistency": "0.85",
      "Rationality": "0.9",
      "StockPoolSelector": "MVEqualStockSelector"  }}

3. Input data:

,Stock,Date,E/P,B/P,CF/P,S/P,EBITDA/EV
965494,000858,20190102,0.06295366,0.30744636,0.038947526,0.19324197,0.124886042941460
965495,002594,20190102,0.020888906,0.37708813,0.09185906,0.9017491,0.09258402716
965496,600519,20190102,0.042301364,0.13605072,0.036664255,0.09038502,0.0797575348104294
965497,600900,20190102,0.066111766,0.4052357,0.1183,0.15322393,0.1050353948267292
965498,601012,20190102,0.062190603,0.30756927,0.032795224,0.41643697,0.0887390158431868
965499,601288,20190102,0.16604953,1.2584949,0.12149128,0.4757528,0.059454748665067
965500,601888,20190102,0.02850359,0.1358013,0.034710173,0.35662726,0.0511954139068489
965501,603259,20190102,0.024971908,0.12955885,0.018961666,0.10751114,0.04303389

LLM output:

{'Stock': ['000858', '600900', '601288']}

Note that in this example, we ask LLM to output 3 stocks. However, in real scenarios, you should follow the "num_stocks" args in the instruction.

(END OF EXAMPLES))";

std::string replace_all(std::string text, const std::string& token,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(token, pos)) != std::string::npos) {
    text.replace(pos, token.size(), value);
    pos += value.size();
  }
  return text;
}

std::string describe_features_json(const std::vector<FeatureDesc>& features) {
  json j = json::object();
  for (const auto& f : features) j[f.name] = f.description;
  return j.dump(1);
}

// The persona JSON the prompts exchange (capitalized keys).
std::string style_prompt_json(const AgentStyle& style) {
  json details;
  details["Risk Appetite"] = to_string(style.risk_appetite);
  details["Holding Period"] = to_string(style.holding_period);
  details["Strategy Consistency"] = format_double(style.strategy_consistency);
  details["Rationality"] = format_double(style.rationality);
  if (style.pool_selector.kind == PoolSelectorKind::industry_basis) {
    details["StockPoolSelector"] =
        json::array({selector_name(style.pool_selector.kind),
                     style.pool_selector.industries});
  } else {
    details["StockPoolSelector"] = selector_name(style.pool_selector.kind);
  }
  details["Others"] = style.others;
  json j;
  j["Outline"] = style.outline;
  j["Details"] = details;
  return j.dump(1);
}

double clamp_unit(double value, const std::string& field,
                  std::vector<std::string>* warnings) {
  if (value < 0.0 || value > 1.0) {
    if (warnings) {
      warnings->push_back(field + " outside [0,1]; clamped");
    }
    return std::clamp(value, 0.0, 1.0);
  }
  return value;
}

std::optional<double> number_like(const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    try {
      return std::stod(value.get<std::string>());
    } catch (...) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

const PromptBundle& default_prompt_bundle() {
  static const PromptBundle bundle{kSystemText, kStyleTemplate, kDecisionTemplate,
                                   kStyleExamples, kDecisionExamples};
  return bundle;
}

bool placeholders_resolved(const std::string& prompt) {
  for (const char* token :
       {"{examples}", "{input_data}", "{macro_data}", "{num_stocks}"}) {
    if (prompt.find(token) != std::string::npos) return false;
  }
  return true;
}

std::string render_style_prompt(const PromptBundle& bundle,
                                const StyleRequest& request) {
  std::string input;
  for (std::size_t i = 0; i < request.features.size(); ++i) {
    if (i > 0) input += ',';
    input += request.features[i].name;
  }
  std::string text = bundle.style_template;
  text = replace_all(text, "{examples}", bundle.style_examples);
  text = replace_all(text, "{input_data}", input);
  text = replace_all(text, "{macro_data}", request.macro_narrative);
  return text;
}

std::string render_strategy_prompt(const PromptBundle& bundle,
                                   const StrategyRequest& request) {
  StyleRequest style_request;
  style_request.type_index = request.type_index;
  style_request.macro_narrative = request.macro_narrative;
  style_request.features = request.features;
  std::string text = render_style_prompt(bundle, style_request);
  if (request.style) {
    text += "\nYour current investing style for reference:\n";
    text += style_prompt_json(*request.style);
    text += "\nRefresh the style narrative against the latest macro data.\n";
  }
  return text;
}

std::string render_stock_table(const SelectionRequest& request) {
  std::ostringstream table;
  table << ",Stock,Date";
  for (const auto& column : request.columns) table << ',' << column.name;
  table << '\n';
  std::string compact_date = request.date;
  compact_date.erase(std::remove(compact_date.begin(), compact_date.end(), '-'),
                     compact_date.end());
  for (std::size_t r = 0; r < request.rows.size(); ++r) {
    const PoolRow& row = request.rows[r];
    table << r << ',' << row.stock << ',' << compact_date;
    for (const auto& cell : row.features) {
      table << ',' << (cell ? format_double(*cell) : std::string("NA"));
    }
    table << '\n';
  }
  bool any_text = false;
  for (const auto& row : request.rows) {
    if (!row.text_items.empty()) {
      any_text = true;
      break;
    }
  }
  if (any_text) {
    table << "\nRecent text items:\n";
    for (const auto& row : request.rows) {
      for (const auto& item : row.text_items) {
        table << row.stock << " [" << to_string(item.kind) << "] " << item.title
              << ": " << item.summary << '\n';
      }
    }
  }
  return table.str();
}

std::string render_decision_prompt(const PromptBundle& bundle,
                                   const SelectionRequest& request) {
  std::ostringstream input;
  input << "1. Input Data Description:\n\n"
        << describe_features_json(request.columns) << "\n\n"
        << "2. Investing Style:\n\n";
  if (request.style) input << style_prompt_json(*request.style);
  input << "\n\n3. Input data:\n\n" << render_stock_table(request);
  if (!request.strategy_text.empty()) {
    input << "\nDaily strategy:\n" << request.strategy_text << '\n';
  }
  std::string text = bundle.decision_template;
  text = replace_all(text, "{num_stocks}", std::to_string(request.num_stocks));
  text = replace_all(text, "{examples}", bundle.decision_examples);
  text = replace_all(text, "{input_data}", input.str());
  return text;
}

std::optional<std::string> extract_json_object(const std::string& text) {
  const std::size_t start = text.find('{');
  if (start == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false;
  char quote = '"';
  bool escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == quote) {
        in_string = false;
      }
      continue;
    }
    if (c == '"' || c == '\'') {
      in_string = true;
      quote = c;
    } else if (c == '{') {
      depth++;
    } else if (c == '}') {
      depth--;
      if (depth == 0) return text.substr(start, i - start + 1);
    }
  }
  return std::nullopt;
}

namespace {

std::optional<json> parse_json_lenient(const std::string& text) {
  const auto candidate = extract_json_object(text);
  if (!candidate) return std::nullopt;
  json parsed = json::parse(*candidate, nullptr, false);
  if (!parsed.is_discarded()) return parsed;
  // Python-styled dicts: single quotes and no double quotes anywhere.
  if (candidate->find('"') == std::string::npos) {
    std::string swapped = *candidate;
    std::replace(swapped.begin(), swapped.end(), '\'', '"');
    parsed = json::parse(swapped, nullptr, false);
    if (!parsed.is_discarded()) return parsed;
  }
  return std::nullopt;
}

}  // namespace

std::optional<AgentStyle> parse_style_response(const std::string& response_text,
                                               std::string* error,
                                               std::vector<std::string>* warnings) {
  const auto parsed = parse_json_lenient(response_text);
  if (!parsed) {
    if (error) *error = "response carries no parseable JSON object";
    return std::nullopt;
  }
  if (!parsed->contains("Details") || !(*parsed)["Details"].is_object()) {
    if (error) *error = "response JSON is missing the \"Details\" object";
    return std::nullopt;
  }
  const json& details = (*parsed)["Details"];
  AgentStyle style;
  style.outline = parsed->value("Outline", "");
  if (style.outline.empty()) {
    if (error) *error = "response JSON is missing \"Outline\"";
    return std::nullopt;
  }
  if (details.contains("Risk Appetite") && details["Risk Appetite"].is_string()) {
    if (auto v = parse_risk_appetite(details["Risk Appetite"].get<std::string>())) {
      style.risk_appetite = *v;
    }
  }
  if (details.contains("Holding Period") && details["Holding Period"].is_string()) {
    if (auto v = parse_holding_period(details["Holding Period"].get<std::string>())) {
      style.holding_period = *v;
    }
  }
  if (details.contains("Strategy Consistency")) {
    if (auto v = number_like(details["Strategy Consistency"])) {
      style.strategy_consistency = clamp_unit(*v, "Strategy Consistency", warnings);
    }
  }
  if (details.contains("Rationality")) {
    if (auto v = number_like(details["Rationality"])) {
      style.rationality = clamp_unit(*v, "Rationality", warnings);
    }
  }
  if (details.contains("StockPoolSelector")) {
    const json& selector = details["StockPoolSelector"];
    std::optional<PoolSelectorKind> kind;
    std::vector<std::string> industries;
    if (selector.is_string()) {
      kind = parse_pool_selector(selector.get<std::string>());
    } else if (selector.is_array() && !selector.empty()) {
      if (selector[0].is_string()) kind = parse_pool_selector(selector[0].get<std::string>());
      for (std::size_t i = 1; i < selector.size(); ++i) {
        if (selector[i].is_string()) {
          industries.push_back(selector[i].get<std::string>());
        } else if (selector[i].is_array()) {
          for (const auto& item : selector[i]) {
            if (item.is_string()) industries.push_back(item.get<std::string>());
          }
        }
      }
    } else if (selector.is_object()) {
      for (auto it = selector.begin(); it != selector.end(); ++it) {
        kind = parse_pool_selector(it.key());
        if (it.value().is_array()) {
          for (const auto& item : it.value()) {
            if (item.is_string()) industries.push_back(item.get<std::string>());
          }
        }
      }
    }
    if (kind) {
      style.pool_selector.kind = *kind;
      if (*kind == PoolSelectorKind::industry_basis) {
        if (industries.empty()) {
          if (warnings) {
            warnings->push_back(
                "industry-preference selector without industries; using random");
          }
          style.pool_selector.kind = PoolSelectorKind::random;
        } else {
          style.pool_selector.industries = industries;
        }
      }
    } else if (warnings) {
      warnings->push_back("unrecognized pool selector; using random");
    }
  }
  if (details.contains("Others") && details["Others"].is_string()) {
    style.others = details["Others"].get<std::string>();
  }
  return style;
}

std::optional<std::vector<std::string>> parse_selection_response(
    const std::string& response_text, std::string* error) {
  const auto parsed = parse_json_lenient(response_text);
  if (!parsed) {
    if (error) *error = "response carries no parseable JSON object";
    return std::nullopt;
  }
  if (!parsed->contains("Stock") || !(*parsed)["Stock"].is_array()) {
    if (error) *error = "response JSON is missing the \"Stock\" array";
    return std::nullopt;
  }
  std::vector<std::string> codes;
  for (const auto& item : (*parsed)["Stock"]) {
    if (item.is_string()) {
      codes.push_back(item.get<std::string>());
    } else if (item.is_number_integer()) {
      codes.push_back(std::to_string(item.get<long long>()));
    }
  }
  return codes;
}

std::string prompt_fingerprint(const std::string& model,
                               const std::vector<ChatMessage>& messages) {
  std::string canonical = model;
  for (const auto& message : messages) {
    canonical += '\x1e';
    canonical += message.role;
    canonical += '\x1f';
    canonical += message.content;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return std::string(buf);
}

RateLimiter::RateLimiter(int requests_per_minute, int burst)
    : tokens_(std::max(1, burst)),
      capacity_(std::max(1, burst)),
      refill_per_second_(std::max(1, requests_per_minute) / 60.0),
      last_refill_(std::chrono::steady_clock::now()) {}

void RateLimiter::refill(std::chrono::steady_clock::time_point now) {
  const double elapsed =
      std::chrono::duration<double>(now - last_refill_).count();
  tokens_ = std::min(capacity_, tokens_ + elapsed * refill_per_second_);
  last_refill_ = now;
}

void RateLimiter::acquire() {
  std::unique_lock<std::mutex> lock(mutex_);
  const std::uint64_t ticket = next_ticket_++;
  cv_.wait(lock, [&] { return serving_ == ticket; });
  while (true) {
    refill(std::chrono::steady_clock::now());
    if (tokens_ >= 1.0) break;
    const double deficit = 1.0 - tokens_;
    const auto wait = std::chrono::duration<double>(deficit / refill_per_second_);
    cv_.wait_for(lock,
                 std::chrono::duration_cast<std::chrono::milliseconds>(wait) +
                     std::chrono::milliseconds(1));
  }
  tokens_ -= 1.0;
  serving_++;
  cv_.notify_all();
}

namespace {

// POSTs to {endpoint_url}/chat/completions with bearer auth and retries on
// transport errors, 429 and 5xx.
class HttpTransport : public ChatTransport {
 public:
  explicit HttpTransport(const ProviderConfig& config) : config_(config) {}

  std::string complete(const std::string& model,
                       const std::vector<ChatMessage>& messages,
                       double temperature) override {
    std::string base = config_.endpoint_url;
    std::string prefix;
    const auto scheme_end = base.find("://");
    if (scheme_end != std::string::npos) {
      const auto path_start = base.find('/', scheme_end + 3);
      if (path_start != std::string::npos) {
        prefix = base.substr(path_start);
        base = base.substr(0, path_start);
      }
    }
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    json body;
    body["model"] = model;
    body["temperature"] = temperature;
    json msgs = json::array();
    for (const auto& message : messages) {
      msgs.push_back({{"role", message.role}, {"content", message.content}});
    }
    body["messages"] = msgs;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!config_.api_key_env.empty()) {
      if (const char* key = std::getenv(config_.api_key_env.c_str())) {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(config_.backoff_ms * (1 << (attempt - 1))));
      }
      httplib::Client client(base);
      client.set_read_timeout(120, 0);
      client.set_connection_timeout(10, 0);
      auto result = client.Post(prefix + "/chat/completions", headers, payload,
                                "application/json");
      if (!result) {
        last_error = "transport error: " + httplib::to_string(result.error());
        continue;
      }
      if (result->status == 429 || result->status >= 500) {
        last_error = "server status " + std::to_string(result->status);
        continue;
      }
      if (result->status != 200) {
        throw ProviderError("chat completion failed with status " +
                            std::to_string(result->status) + ": " + result->body);
      }
      json response = json::parse(result->body, nullptr, false);
      if (response.is_discarded() || !response.contains("choices") ||
          response["choices"].empty()) {
        throw ProviderError("chat completion response is not valid JSON");
      }
      return response["choices"][0]["message"]["content"].get<std::string>();
    }
    throw ProviderError("chat completion failed after retries: " + last_error);
  }

 private:
  ProviderConfig config_;
};

}  // namespace

LlmProvider::LlmProvider(ProviderConfig config, PromptBundle bundle)
    : LlmProvider(std::move(config), std::move(bundle), nullptr) {}

LlmProvider::LlmProvider(ProviderConfig config, PromptBundle bundle,
                         std::unique_ptr<ChatTransport> transport)
    : config_(std::move(config)),
      bundle_(std::move(bundle)),
      transport_(std::move(transport)),
      limiter_(config_.requests_per_minute) {
  if (!transport_ && !config_.replay_only) {
    transport_ = std::make_unique<HttpTransport>(config_);
  }
  if (!config_.cache_dir.empty()) {
    std::filesystem::create_directories(config_.cache_dir);
  }
}

std::string LlmProvider::complete_with_cache(const std::vector<ChatMessage>& messages,
                                             double temperature) {
  const std::string key = prompt_fingerprint(config_.model_name, messages);
  std::filesystem::path cache_file;
  if (!config_.cache_dir.empty()) {
    cache_file = config_.cache_dir / (key + ".txt");
    std::lock_guard<std::mutex> lock(cache_mutex_);
    std::ifstream in(cache_file, std::ios::binary);
    if (in.is_open()) {
      return std::string(std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>());
    }
  }
  if (config_.replay_only) {
    throw ProviderError("replay cache has no response for prompt " + key);
  }
  limiter_.acquire();
  calls_++;
  const std::string response = transport_->complete(config_.model_name, messages,
                                                    temperature);
  if (!cache_file.empty()) {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    std::ofstream out(cache_file, std::ios::binary);
    out << response;
  }
  return response;
}

AgentStyle LlmProvider::generate_style(const StyleRequest& request) {
  const std::string rendered = render_style_prompt(bundle_, request);
  std::string error;
  std::vector<ChatMessage> messages = {{"system", bundle_.system_text},
                                       {"user", rendered}};
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    const std::string response =
        complete_with_cache(messages, config_.style_temperature);
    std::vector<std::string> warnings;
    if (auto style = parse_style_response(response, &error, &warnings)) {
      return *style;
    }
    // Repair turn: show the model its response and what was wrong with it.
    messages.push_back({"assistant", response});
    messages.push_back(
        {"user", "The previous response was invalid: " + error +
                     ". Reply again with only the JSON object in the required "
                     "format."});
  }
  throw ProviderError("style generation failed: " + error);
}

std::string LlmProvider::generate_strategy(const StrategyRequest& request) {
  const std::string rendered = render_strategy_prompt(bundle_, request);
  std::string error;
  std::vector<ChatMessage> messages = {{"system", bundle_.system_text},
                                       {"user", rendered}};
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    const std::string response =
        complete_with_cache(messages, config_.style_temperature);
    std::vector<std::string> warnings;
    if (auto style = parse_style_response(response, &error, &warnings)) {
      std::string text = style->outline;
      if (!style->others.empty()) {
        text += ' ';
        text += style->others;
      }
      return text;
    }
    messages.push_back({"assistant", response});
    messages.push_back(
        {"user", "The previous response was invalid: " + error +
                     ". Reply again with only the JSON object in the required "
                     "format."});
  }
  throw ProviderError("strategy generation failed: " + error);
}

std::vector<std::string> LlmProvider::select_stocks(const SelectionRequest& request) {
  const std::string rendered = render_decision_prompt(bundle_, request);
  std::vector<ChatMessage> messages = {{"system", bundle_.system_text},
                                       {"user", rendered}};
  std::set<std::string> pool;
  for (const auto& row : request.rows) pool.insert(row.stock);

  std::string error;
  std::vector<std::string> last_codes;
  bool have_codes = false;
  // One repair turn for an illegal code or wrong count; the caller repairs
  // whatever still comes back wrong after that.
  for (int attempt = 0; attempt < 2; ++attempt) {
    const std::string response =
        complete_with_cache(messages, config_.selection_temperature);
    const auto codes = parse_selection_response(response, &error);
    if (codes) {
      last_codes = *codes;
      have_codes = true;
      bool legal = codes->size() == request.num_stocks;
      for (const auto& code : *codes) {
        if (!pool.count(code)) {
          legal = false;
          break;
        }
      }
      if (legal) return *codes;
      messages.push_back({"assistant", response});
      messages.push_back(
          {"user",
           "Some stock codes were not legal or the count was wrong. You output "
           "legal stock code. The number of stock codes is correct, actually "
           "equal to " +
               std::to_string(request.num_stocks) +
               ". Reply with only the JSON object."});
    } else {
      messages.push_back({"assistant", response});
      messages.push_back(
          {"user", "The previous response was invalid: " + error +
                       ". Reply with only the JSON object {\"Stock\": [...]}."});
    }
  }
  if (have_codes) return last_codes;
  throw ProviderError("stock selection failed: " + error);
}

}  // namespace mass
