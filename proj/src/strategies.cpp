#include "thermadapt/strategies.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <Eigen/Dense>
#include <spdlog/spdlog.h>

#include "thermadapt/errors.hpp"
#include "thermadapt/rng.hpp"

namespace thermadapt {

namespace {

TrainResult train_split(const Network& base, const TrainValSplit& split, TrainOptions opts, std::uint64_t seed) {
  opts.seed = seed;
  return train(base, split.train, split.val, opts);
}

UpdateOutcome outcome_of(TrainResult r, int pool_periods, std::size_t pool_windows) {
  return {std::move(r.net), std::move(r.report), true, pool_periods, pool_windows};
}

const Network& base_model(const UpdateContext& ctx) {
  if (ctx.n == 1 || ctx.previous == nullptr) return *ctx.general;
  return *ctx.previous;
}

void check_context(const UpdateContext& ctx) {
  if (ctx.n < 1) throw ContractError("update: n must be >= 1, got " + std::to_string(ctx.n));
  if (ctx.x_n == nullptr || ctx.x_n->empty()) throw DataError("update " + std::to_string(ctx.n) + ": x_n is empty");
  if (ctx.general == nullptr) throw ContractError("update: general model missing");
  if (ctx.n >= 2 && ctx.previous == nullptr) throw ContractError("update: previous model missing at n >= 2");
}

/// k indices out of [0, n), ascending.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<std::size_t> out;
  out.reserve(std::min(n, k));
  std::sample(all.begin(), all.end(), std::back_inserter(out), std::min(n, k), rng);
  return out;
}

std::vector<double> flatten(std::span<const Matrix> blocks) {
  std::vector<double> out;
  for (const auto& b : blocks) out.insert(out.end(), b.values().begin(), b.values().end());
  return out;
}

void unflatten(std::span<const double> flat, std::span<Matrix> blocks) {
  std::size_t pos = 0;
  for (auto& b : blocks) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos), flat.begin() + static_cast<std::ptrdiff_t>(pos + b.size()),
              b.data());
    pos += b.size();
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

class Ift final : public Strategy {
 public:
  explicit Ift(const StrategyConfig& c) : cfg_(c) {}
  std::string_view name() const override { return "ift"; }
  std::size_t stored_examples() const override { return 0; }
  UpdateOutcome update(const UpdateContext& ctx) override {
    check_context(ctx);
    if (ctx.n == 1) return outcome_of(fine_tune(*ctx.general, *ctx.x_n, cfg_.finetune, ctx.seed), 1, ctx.x_n->size());
    return {*ctx.previous, {}, false, 0, 0};
  }

 private:
  StrategyConfig cfg_;
};

class Il final : public Strategy {
 public:
  explicit Il(const StrategyConfig& c) : cfg_(c) {}
  std::string_view name() const override { return "il"; }
  std::size_t stored_examples() const override { return 0; }
  UpdateOutcome update(const UpdateContext& ctx) override {
    check_context(ctx);
    return outcome_of(fine_tune(base_model(ctx), *ctx.x_n, cfg_.finetune, ctx.seed), 1, ctx.x_n->size());
  }

 private:
  StrategyConfig cfg_;
};

class Gil final : public Strategy {
 public:
  explicit Gil(const StrategyConfig& c) : cfg_(c) {}
  std::string_view name() const override { return "gil"; }
  std::size_t stored_examples() const override { return 0; }
  UpdateOutcome update(const UpdateContext& ctx) override {
    check_context(ctx);
    return outcome_of(fine_tune(*ctx.general, *ctx.x_n, cfg_.finetune, ctx.seed), 1, ctx.x_n->size());
  }

 private:
  StrategyConfig cfg_;
};

class Ewc final : public Strategy {
 public:
  explicit Ewc(const StrategyConfig& c) : cfg_(c) {
    if (c.ewc_capacity == 0 || c.ewc_refresh == 0 || c.ewc_refresh > c.ewc_capacity)
      throw ConfigError("ewc: need 0 < refresh <= capacity");
    if (!(c.ewc_lambda >= 0.0)) throw ConfigError("ewc: lambda must be >= 0");
  }
  std::string_view name() const override { return "ewc"; }
  std::size_t stored_examples() const override { return buffer_.size(); }

  UpdateOutcome update(const UpdateContext& ctx) override {
    check_context(ctx);
    TrainOptions opts = cfg_.finetune;
    if (!anchor_.empty()) {
      opts.extra_loss = [this](std::span<const Matrix> params, std::span<Matrix> grads) {
        return ewc_penalty(params, anchor_, fisher_, cfg_.ewc_lambda, grads);
      };
    }
    TrainResult r = fine_tune(base_model(ctx), *ctx.x_n, opts, ctx.seed);

    // First update fills the buffer; later ones replace the oldest examples.
    Rng rng(mix_seed(ctx.seed, {fnv1a("ewc-buffer")}));
    const std::size_t take = buffer_.empty() ? cfg_.ewc_capacity : cfg_.ewc_refresh;
    const auto picked = sample_indices(ctx.x_n->size(), take, rng);
    buffer_.append(ctx.x_n->select(picked));
    if (buffer_.size() > cfg_.ewc_capacity) buffer_ = buffer_.subset(buffer_.size() - cfg_.ewc_capacity, buffer_.size());

    anchor_ = r.net.params;
    fisher_ = estimate_fisher(r.net, buffer_);
    return outcome_of(std::move(r), 1, ctx.x_n->size());
  }

 private:
  StrategyConfig cfg_;
  WindowedDataset buffer_;
  std::vector<Matrix> anchor_;
  std::vector<Matrix> fisher_;
};

class Gem final : public Strategy {
 public:
  explicit Gem(const StrategyConfig& c) : cfg_(c) {
    if (c.gem_samples == 0) throw ConfigError("gem: samples per memory must be >= 1");
  }
  std::string_view name() const override { return "gem"; }
  std::size_t stored_examples() const override {
    std::size_t n = 0;
    for (const auto& m : memories_) n += m.size();
    return n;
  }

  UpdateOutcome update(const UpdateContext& ctx) override {
    check_context(ctx);
    TrainOptions opts = cfg_.finetune;
    int fallbacks = 0;
    if (!memories_.empty()) {
      opts.gradient_hook = [this, &fallbacks, rng = Rng(mix_seed(ctx.seed, {fnv1a("gem-batches")}))](
                               const Network& current, std::vector<Matrix>& grads) mutable {
        std::vector<std::vector<double>> mem_grads;
        mem_grads.reserve(memories_.size());
        for (const auto& mem : memories_) {
          std::vector<std::size_t> idx;
          if (cfg_.gem_memory_batch > 0 && cfg_.gem_memory_batch < mem.size()) {
            idx = sample_indices(mem.size(), cfg_.gem_memory_batch, rng);
          } else {
            idx.resize(mem.size());
            std::iota(idx.begin(), idx.end(), 0);
          }
          mem_grads.push_back(flatten(loss_and_gradients(current, mem, idx).grads));
        }
        const GemProjection p = gem_project(flatten(grads), mem_grads, cfg_.gem_solver);
        if (!p.converged) ++fallbacks;
        if (p.projected) unflatten(p.g, grads);
      };
    }
    TrainResult r = fine_tune(base_model(ctx), *ctx.x_n, opts, ctx.seed);
    if (fallbacks > 0)
      spdlog::warn("gem update {}: projection did not converge on {} batches, used raw gradient", ctx.n, fallbacks);

    Rng rng(mix_seed(ctx.seed, {fnv1a("gem-memory")}));
    memories_.push_back(ctx.x_n->select(sample_indices(ctx.x_n->size(), cfg_.gem_samples, rng)));
    return outcome_of(std::move(r), 1, ctx.x_n->size());
  }

  std::size_t memory_count() const { return memories_.size(); }

 private:
  StrategyConfig cfg_;
  std::vector<WindowedDataset> memories_;
};

class Sml final : public Strategy {
 public:
  explicit Sml(const StrategyConfig& c) : cfg_(c) {}
  std::string_view name() const override { return "sml"; }
  std::size_t stored_examples() const override {
    std::size_t n = 0;
    for (const auto& [idx, ds] : archive_) n += ds.size();
    return n;
  }

  UpdateOutcome update(const UpdateContext& ctx) override {
    check_context(ctx);
    const auto pool = sml_pool_indices(ctx.n, ctx.period_months);
    const int alpha = 12 / ctx.period_months;
    archive_.emplace_back(ctx.n, *ctx.x_n);

    // Each period is split on its own so the newest data always reaches the training set.
    TrainValSplit split{WindowedDataset(ctx.x_n->lookback(), ctx.x_n->horizon()),
                        WindowedDataset(ctx.x_n->lookback(), ctx.x_n->horizon())};
    std::size_t windows = 0;
    for (int idx : pool) {
      const auto it = std::find_if(archive_.begin(), archive_.end(), [&](const auto& e) { return e.first == idx; });
      if (it == archive_.end()) throw ContractError("sml: period " + std::to_string(idx) + " missing from archive");
      const TrainValSplit part = split_train_val(it->second);
      split.train.append(part.train);
      split.val.append(part.val);
      windows += it->second.size();
    }
    TrainResult r = train_split(base_model(ctx), split, cfg_.finetune, ctx.seed);

    // Later updates need periods >= n + 1 - alpha - 1.
    std::erase_if(archive_, [&](const auto& e) { return e.first < ctx.n - alpha; });
    return outcome_of(std::move(r), static_cast<int>(pool.size()), windows);
  }

 private:
  StrategyConfig cfg_;
  std::vector<std::pair<int, WindowedDataset>> archive_;
};

/// ALG, eALG and Scratch: all periods since a cursor.
class Accumulating final : public Strategy {
 public:
  enum class Kind { alg, ealg, scratch };
  Accumulating(const StrategyConfig& c, Kind kind) : cfg_(c), kind_(kind) {}
  std::string_view name() const override {
    return kind_ == Kind::alg ? "alg" : kind_ == Kind::ealg ? "ealg" : "scratch";
  }
  std::size_t stored_examples() const override {
    std::size_t n = 0;
    for (std::size_t k = cursor_; k < periods_.size(); ++k) n += periods_[k].size();
    return n;
  }

  UpdateOutcome update(const UpdateContext& ctx) override {
    check_context(ctx);
    periods_.push_back(*ctx.x_n);
    if (kind_ == Kind::ealg && ctx.event_flag) {
      // Pre-event periods are dropped for good.
      cursor_ = periods_.size() - 1;
      for (std::size_t k = 0; k < cursor_; ++k) periods_[k] = WindowedDataset();
    }
    const WindowedDataset pool = concat(std::span<const WindowedDataset>(periods_).subspan(cursor_));
    const int n_periods = static_cast<int>(periods_.size() - cursor_);
    if (kind_ == Kind::scratch) {
      const Network fresh = init_network(mix_seed(ctx.seed, {fnv1a("scratch-init")}), cfg_.hidden, ctx.general->horizon);
      return outcome_of(fine_tune(fresh, pool, cfg_.scratch, ctx.seed), n_periods, pool.size());
    }
    return outcome_of(fine_tune(*ctx.general, pool, cfg_.finetune, ctx.seed), n_periods, pool.size());
  }

 private:
  StrategyConfig cfg_;
  Kind kind_;
  std::vector<WindowedDataset> periods_;
  std::size_t cursor_ = 0;
};

}  // namespace

const std::vector<std::string>& strategy_names() {
  static const std::vector<std::string> names{"ift", "scratch", "il", "ewc", "gem", "sml", "gil", "alg", "ealg"};
  return names;
}

std::unique_ptr<Strategy> make_strategy(std::string_view name, const StrategyConfig& config) {
  if (name == "ift") return std::make_unique<Ift>(config);
  if (name == "il") return std::make_unique<Il>(config);
  if (name == "gil") return std::make_unique<Gil>(config);
  if (name == "ewc") return std::make_unique<Ewc>(config);
  if (name == "gem") return std::make_unique<Gem>(config);
  if (name == "sml") return std::make_unique<Sml>(config);
  if (name == "alg") return std::make_unique<Accumulating>(config, Accumulating::Kind::alg);
  if (name == "ealg") return std::make_unique<Accumulating>(config, Accumulating::Kind::ealg);
  if (name == "scratch") return std::make_unique<Accumulating>(config, Accumulating::Kind::scratch);
  std::string valid;
  for (const auto& n : strategy_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown strategy '" + std::string(name) + "'; valid names: " + valid);
}

TrainResult fine_tune(const Network& base, const WindowedDataset& pool, const TrainOptions& opts, std::uint64_t seed) {
  return train_split(base, split_train_val(pool), opts, seed);
}

std::vector<Matrix> estimate_fisher(const Network& net, const WindowedDataset& buffer) {
  if (buffer.empty()) throw DataError("estimate_fisher: empty buffer");
  std::vector<Matrix> fisher;
  for (const auto& p : net.params) fisher.emplace_back(p.rows(), p.cols());
  for (std::size_t i = 0; i < buffer.size(); ++i) {
    const std::size_t idx[1] = {i};
    const LossAndGrad lg = loss_and_gradients(net, buffer, idx);
    for (std::size_t k = 0; k < fisher.size(); ++k)
      for (std::size_t e = 0; e < fisher[k].size(); ++e) fisher[k][e] += lg.grads[k][e] * lg.grads[k][e];
  }
  const double inv = 1.0 / static_cast<double>(buffer.size());
  for (auto& f : fisher)
    for (double& v : f.values()) v *= inv;
  return fisher;
}

double ewc_penalty(std::span<const Matrix> params, std::span<const Matrix> anchor, std::span<const Matrix> fisher,
                   double lambda, std::span<Matrix> grads) {
  if (params.size() != anchor.size() || params.size() != fisher.size() || (!grads.empty() && grads.size() != params.size()))
    throw DimensionError("ewc_penalty: parameter, anchor, Fisher and gradient block counts differ");
  double sum = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].same_shape(anchor[k]) || !params[k].same_shape(fisher[k]))
      throw DimensionError("ewc_penalty: block " + std::to_string(k) + " shape mismatch");
    for (std::size_t e = 0; e < params[k].size(); ++e) {
      const double d = params[k][e] - anchor[k][e];
      sum += fisher[k][e] * d * d;
      if (!grads.empty()) grads[k][e] += lambda * fisher[k][e] * d;
    }
  }
  return 0.5 * lambda * sum;
}

GemProjection gem_project(std::span<const double> g, std::span<const std::vector<double>> memories,
                          const GemSolverOptions& options) {
  GemProjection out{{g.begin(), g.end()}, false, true, 0};
  const std::size_t k = memories.size();
  for (const auto& m : memories)
    if (m.size() != g.size())
      throw DimensionError("gem_project: memory gradient of size " + std::to_string(m.size()) + " vs " +
                           std::to_string(g.size()));

  std::vector<double> p(k);
  for (std::size_t a = 0; a < k; ++a) p[a] = dot(memories[a], g);
  if (std::all_of(p.begin(), p.end(), [](double v) { return v >= 0.0; })) return out;

  // Dual: min 0.5 v'Qv + p'v over v >= 0, Q = G G'; primal z = g + G'v.
  // Lawson-Hanson active set on the k x k normal equations.
  Eigen::MatrixXd q(k, k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) q(a, b) = q(b, a) = dot(memories[a], memories[b]);
  const Eigen::Map<const Eigen::VectorXd> pv(p.data(), static_cast<Eigen::Index>(k));

  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  std::vector<bool> passive(k, false);
  auto solve_passive = [&] {
    std::vector<Eigen::Index> idx;
    for (std::size_t a = 0; a < k; ++a)
      if (passive[a]) idx.push_back(static_cast<Eigen::Index>(a));
    Eigen::MatrixXd qp(idx.size(), idx.size());
    Eigen::VectorXd rhs(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      rhs(i) = -pv(idx[i]);
      for (std::size_t j = 0; j < idx.size(); ++j) qp(i, j) = q(idx[i], idx[j]);
    }
    const Eigen::VectorXd sol = qp.completeOrthogonalDecomposition().solve(rhs);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < idx.size(); ++i) s(idx[i]) = sol(i);
    return s;
  };

  bool done = false;
  int it = 0;
  for (; it < options.max_iterations; ++it) {
    const Eigen::VectorXd w = q * v + pv;  // = G z
    Eigen::Index enter = -1;
    double most = -options.tolerance;
    for (std::size_t a = 0; a < k; ++a)
      if (!passive[a] && w(a) < most) {
        most = w(a);
        enter = static_cast<Eigen::Index>(a);
      }
    if (enter < 0) {
      done = true;
      break;
    }
    passive[enter] = true;
    for (std::size_t inner = 0; inner <= k; ++inner) {
      const Eigen::VectorXd s = solve_passive();
      double alpha = 1.0;
      bool feasible = true;
      for (std::size_t a = 0; a < k; ++a)
        if (passive[a] && s(a) <= 0.0) {
          feasible = false;
          const double denom = v(a) - s(a);
          if (denom > 0.0) alpha = std::min(alpha, v(a) / denom);
        }
      if (feasible) {
        v = s;
        break;
      }
      v += alpha * (s - v);
      for (std::size_t a = 0; a < k; ++a)
        if (passive[a] && v(a) <= 1e-15 * (1.0 + v.cwiseAbs().maxCoeff())) {
          passive[a] = false;
          v(a) = 0.0;
        }
    }
  }
  out.iterations = it;

  std::vector<double> z(g.begin(), g.end());
  for (std::size_t a = 0; a < k; ++a)
    if (v[a] != 0.0)
      for (std::size_t e = 0; e < z.size(); ++e) z[e] += v[a] * memories[a][e];
  for (std::size_t a = 0; a < k && done; ++a) done = dot(z, memories[a]) >= -options.tolerance;
  if (!done) {
    out.converged = false;
    return out;
  }
  out.g = std::move(z);
  out.projected = true;
  return out;
}

std::vector<int> sml_pool_indices(int n, int period_months) {
  if (period_months < 1 || period_months > 3)
    throw ConfigError("sml: update period must be 1, 2 or 3 months, got " + std::to_string(period_months));
  if (n < 1) throw ContractError("sml: n must be >= 1");
  const int alpha = 12 / period_months;
  if (n - alpha - 1 >= 1) return {n - alpha - 1, n - alpha, n - alpha + 1, n};
  return {n};
}

}  // namespace thermadapt
