#pragma once

#include <atomic>
#include <cstdint>
#include <optional>

#include "mass/provider.hpp"

namespace mass {

struct DeterministicProviderConfig {
  std::uint64_t seed = 0;
  // Scales the (1 - rationality) selection noise.
  double noise_scale = 1.0;
  // Overrides for controlled fixtures.
  std::optional<double> fixed_rationality;
  std::optional<PoolSelectorKind> forced_selector;
};

// Seeded stand-in for the LLM: scores each visible stock with a type-specific
// positive linear functional of its numeric features plus per-instance noise
// scaled by (1 - rationality), and picks the top of the ranking. Fully
// reproducible from (seed, type, instance, day) and safe to call from any
// number of workers.
class DeterministicProvider : public DecisionProvider {
 public:
  explicit DeterministicProvider(DeterministicProviderConfig config = {});

  std::string id() const override { return "deterministic"; }
  AgentStyle generate_style(const StyleRequest& request) override;
  std::string generate_strategy(const StrategyRequest& request) override;
  std::vector<std::string> select_stocks(const SelectionRequest& request) override;
  std::uint64_t call_count() const override { return calls_.load(); }

 private:
  DeterministicProviderConfig config_;
  std::atomic<std::uint64_t> calls_{0};
};

}  // namespace mass
