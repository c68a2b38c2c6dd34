#include "quadrl/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>

#include "quadrl/error.hpp"
#include "quadrl/random.hpp"

namespace quadrl {

ToyPolicy::ToyPolicy(std::size_t vocab, int order, std::size_t period, std::size_t conditions)
    : vocab_(vocab), order_(order), period_(period), conditions_(conditions) {
  if (vocab < 1) throw Error(ErrorCode::InvalidArgument, "vocab must be >= 1");
  if (order != 0 && order != 1) throw Error(ErrorCode::InvalidArgument, "context order must be 0 or 1");
  if (period < 1 || conditions < 1) throw Error(ErrorCode::InvalidArgument, "period and conditions must be >= 1");
  logits_.assign(context_count() * vocab_, 0.0);
}

std::size_t ToyPolicy::context(std::size_t condition, std::size_t position, Token previous) const {
  if (condition >= conditions_) throw Error(ErrorCode::InvalidArgument, "condition id out of range");
  std::size_t ctx = condition * period_ + position % period_;
  if (order_ == 1) {
    if (previous >= vocab_) throw Error(ErrorCode::TokenOutOfVocab, "token " + std::to_string(previous));
    ctx = ctx * vocab_ + previous;
  }
  return ctx;
}

std::vector<double> ToyPolicy::log_probs(std::size_t ctx) const {
  const auto r = row(ctx);
  const double lse = logsumexp(r);
  std::vector<double> out(r.begin(), r.end());
  for (auto& x : out) x -= lse;
  return out;
}

namespace {

std::pair<std::size_t, std::size_t> window_range(std::span<const Token> tokens, std::optional<Window> window) {
  if (!window) return {0, tokens.size()};
  if (window->m > tokens.size() || window->w > tokens.size() - window->m)
    throw Error(ErrorCode::WindowOutOfRange, "window exceeds the sequence");
  return {window->m, window->m + window->w};
}

void check_vocab(const ToyPolicy& policy, std::span<const Token> tokens) {
  for (auto t : tokens)
    if (t >= policy.vocab()) throw Error(ErrorCode::TokenOutOfVocab, "token " + std::to_string(t));
}

}  // namespace

double sequence_logprob(const ToyPolicy& policy, std::span<const Token> tokens, std::size_t condition,
                        std::optional<Window> window) {
  check_vocab(policy, tokens);
  const auto [lo, hi] = window_range(tokens, window);
  double total = 0.0;
  for (std::size_t t = lo; t < hi; ++t) {
    const auto r = policy.row(policy.context(condition, t, t == 0 ? 0 : tokens[t - 1]));
    total += r[tokens[t]] - logsumexp(r);
  }
  return total;
}

void accumulate_logprob_gradient(const ToyPolicy& policy, std::span<const Token> tokens, std::size_t condition,
                                 std::optional<Window> window, double scale, std::span<double> grad) {
  if (grad.size() != policy.parameter_count()) throw Error(ErrorCode::ShapeMismatch, "gradient size mismatch");
  check_vocab(policy, tokens);
  const auto [lo, hi] = window_range(tokens, window);
  const std::size_t v = policy.vocab();
  for (std::size_t t = lo; t < hi; ++t) {
    const std::size_t ctx = policy.context(condition, t, t == 0 ? 0 : tokens[t - 1]);
    const auto r = policy.row(ctx);
    const double lse = logsumexp(r);
    double* g = grad.data() + ctx * v;
    for (std::size_t k = 0; k < v; ++k) g[k] -= scale * std::exp(r[k] - lse);
    g[tokens[t]] += scale;
  }
}

std::vector<double> sequence_logprob_gradient(const ToyPolicy& policy, std::span<const Token> tokens,
                                              std::size_t condition, std::optional<Window> window) {
  std::vector<double> g(policy.parameter_count(), 0.0);
  accumulate_logprob_gradient(policy, tokens, condition, window, 1.0, g);
  return g;
}

std::vector<Token> policy_sample(const ToyPolicy& policy, std::size_t max_len, const StopRule& stop,
                                 std::uint64_t seed, std::size_t condition) {
  if (max_len < 1) throw Error(ErrorCode::InvalidArgument, "max_len must be >= 1");
  std::vector<Token> out;
  out.reserve(max_len);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  while (out.size() < max_len) {
    const std::size_t t = out.size();
    const auto r = policy.row(policy.context(condition, t, t == 0 ? 0 : out.back()));
    std::mt19937_64 rng(derive_seed(seed, {t}));
    Token best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r.size(); ++k) {
      double u = uni(rng);
      while (u <= 0.0) u = uni(rng);
      const double score = r[k] - std::log(-std::log(u));
      if (score > best_score) {
        best_score = score;
        best = static_cast<Token>(k);
      }
    }
    out.push_back(best);
    if (stop && stop(out)) break;
  }
  return out;
}

ToyPolicy sgd_step(const ToyPolicy& policy, std::span<const double> gradient, double lr) {
  if (gradient.size() != policy.parameter_count()) throw Error(ErrorCode::ShapeMismatch, "gradient size mismatch");
  ToyPolicy next = policy;
  auto p = next.parameters();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * gradient[i];
  return next;
}

double nll_loss(const ToyPolicy& policy, std::span<const Demonstration> data, std::vector<double>* grad) {
  if (data.empty()) throw Error(ErrorCode::EmptyCorpus, "no demonstrations");
  if (grad) grad->assign(policy.parameter_count(), 0.0);
  const double inv = 1.0 / static_cast<double>(data.size());
  double loss = 0.0;
  for (const auto& d : data) {
    loss -= sequence_logprob(policy, d.tokens, d.condition) * inv;
    if (grad) accumulate_logprob_gradient(policy, d.tokens, d.condition, std::nullopt, -inv, *grad);
  }
  return loss;
}

namespace {

constexpr char kMagic[4] = {'Q', 'P', 'O', 'L'};
constexpr std::uint32_t kFormat = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw Error(ErrorCode::Parse, "truncated checkpoint");
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ToyPolicy& policy) {
  out.write(kMagic, 4);
  put_le<std::uint32_t>(out, kFormat);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(policy.vocab()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(policy.order()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(policy.period()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(policy.conditions()));
  put_le<std::uint64_t>(out, policy.version);
  put_le<std::uint64_t>(out, policy.parameter_count());
  for (double p : policy.parameters()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p));
  if (!out) throw Error(ErrorCode::Io, "checkpoint write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ToyPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  save_checkpoint(out, policy);
}

ToyPolicy load_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw Error(ErrorCode::Parse, "not a checkpoint");
  if (get_le<std::uint32_t>(in) != kFormat) throw Error(ErrorCode::Parse, "unsupported checkpoint format");
  const auto vocab = get_le<std::uint32_t>(in);
  const auto order = get_le<std::uint32_t>(in);
  const auto period = get_le<std::uint32_t>(in);
  const auto conditions = get_le<std::uint32_t>(in);
  ToyPolicy p(vocab, static_cast<int>(order), period, conditions);
  p.version = get_le<std::uint64_t>(in);
  if (get_le<std::uint64_t>(in) != p.parameter_count()) throw Error(ErrorCode::Parse, "parameter count mismatch");
  for (double& x : p.parameters()) x = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return p;
}

ToyPolicy load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return load_checkpoint(in);
}

}  // namespace quadrl
