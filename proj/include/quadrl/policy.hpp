#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "quadrl/arpo.hpp"
#include "quadrl/tokenizer.hpp"

namespace quadrl {

/// Softmax table policy. The context of position t is
/// (condition, t mod period, previous token); order 0 ignores the previous
/// token. The first position sees previous token 0.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  ToyPolicy(std::size_t vocab, int order, std::size_t period = 1, std::size_t conditions = 1);

  std::size_t vocab() const { return vocab_; }
  int order() const { return order_; }
  std::size_t period() const { return period_; }
  std::size_t conditions() const { return conditions_; }
  std::size_t context_count() const { return conditions_ * period_ * (order_ == 1 ? vocab_ : 1); }
  std::size_t parameter_count() const { return logits_.size(); }

  std::uint64_t version = 0;

  std::span<double> parameters() { return logits_; }
  std::span<const double> parameters() const { return logits_; }

  std::size_t context(std::size_t condition, std::size_t position, Token previous) const;
  std::span<const double> row(std::size_t ctx) const { return {logits_.data() + ctx * vocab_, vocab_}; }
  std::span<double> row(std::size_t ctx) { return {logits_.data() + ctx * vocab_, vocab_}; }

  /// log softmax of one context row.
  std::vector<double> log_probs(std::size_t ctx) const;

 private:
  std::size_t vocab_ = 0;
  int order_ = 0;
  std::size_t period_ = 1;
  std::size_t conditions_ = 1;
  std::vector<double> logits_;
};

/// Sum of log p(token_t | context) over the window (whole sequence when
/// absent).
double sequence_logprob(const ToyPolicy& policy, std::span<const Token> tokens, std::size_t condition = 0,
                        std::optional<Window> window = std::nullopt);

/// Adds scale * d(sequence_logprob)/d(parameters) into `grad`.
void accumulate_logprob_gradient(const ToyPolicy& policy, std::span<const Token> tokens, std::size_t condition,
                                 std::optional<Window> window, double scale, std::span<double> grad);

std::vector<double> sequence_logprob_gradient(const ToyPolicy& policy, std::span<const Token> tokens,
                                              std::size_t condition = 0, std::optional<Window> window = std::nullopt);

/// Returns true when generation should stop after the given prefix.
using StopRule = std::function<bool(std::span<const Token>)>;

/// Gumbel-max categorical sampling; position t uses noise derived from
/// (seed, t), so equal seeds give common random numbers across policies.
std::vector<Token> policy_sample(const ToyPolicy& policy, std::size_t max_len, const StopRule& stop,
                                 std::uint64_t seed, std::size_t condition = 0);

/// New snapshot with parameters - lr * gradient.
ToyPolicy sgd_step(const ToyPolicy& policy, std::span<const double> gradient, double lr);

struct Demonstration {
  std::size_t condition = 0;
  std::vector<Token> tokens;
};

/// Mean negative log-likelihood per sequence and its gradient.
double nll_loss(const ToyPolicy& policy, std::span<const Demonstration> data, std::vector<double>* grad = nullptr);

// Checkpoint file: "QPOL", u32 format version, u32 vocab, u32 order,
// u32 period, u32 conditions, u64 policy version, u64 parameter count, then
// little-endian doubles.
void save_checkpoint(std::ostream& out, const ToyPolicy& policy);
void save_checkpoint(const std::filesystem::path& path, const ToyPolicy& policy);
ToyPolicy load_checkpoint(std::istream& in);
ToyPolicy load_checkpoint(const std::filesystem::path& path);

}  // namespace quadrl
