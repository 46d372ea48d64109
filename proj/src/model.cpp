#include "thermadapt/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "thermadapt/errors.hpp"
#include "thermadapt/rng.hpp"

namespace thermadapt {

namespace {

constexpr std::size_t kPredictChunk = 256;

std::size_t layer_input(const Network& net, int layer) {
  return layer == 0 ? kFeatureCount : static_cast<std::size_t>(net.hidden);
}

void check_network(const Network& net) {
  const std::size_t expected = 2 * kLstmLayers + 2;
  if (net.params.size() != expected || net.names.size() != expected)
    throw DimensionError("network: expected " + std::to_string(expected) + " parameter blocks, got " +
                         std::to_string(net.params.size()));
}

// One LSTM cell step on plain matrices; mirrors the recorded graph op for op.
void cell_step(const Matrix& w, const Matrix& b, const Matrix& x, Matrix& h, Matrix& c) {
  const std::size_t hs = h.rows();
  const std::size_t batch = h.cols();
  const std::size_t block = hs * batch;
  Matrix cat(x.rows() + hs, batch);
  std::copy(x.data(), x.data() + x.size(), cat.data());
  std::copy(h.data(), h.data() + h.size(), cat.data() + x.size());
  Matrix z = matmul(w, cat);
  for (std::size_t r = 0; r < z.rows(); ++r)
    for (std::size_t col = 0; col < batch; ++col) z(r, col) += b(r, 0);
  double* ig = z.data();
  double* fg = ig + block;
  double* gg = fg + block;
  double* og = gg + block;
  sigmoid_inplace({ig, block});
  sigmoid_inplace({fg, block});
  tanh_inplace({gg, block});
  sigmoid_inplace({og, block});
  double* cv = c.data();
  for (std::size_t k = 0; k < block; ++k) cv[k] = fg[k] * cv[k] + ig[k] * gg[k];
  Matrix tc = c;
  tanh_inplace(tc.values());
  double* hv = h.data();
  for (std::size_t k = 0; k < block; ++k) hv[k] = og[k] * tc[k];
}

Matrix forward_steps(const Network& net, std::span<const Matrix> steps) {
  const std::size_t batch = steps.front().cols();
  const auto hs = static_cast<std::size_t>(net.hidden);
  std::vector<Matrix> h(kLstmLayers, Matrix(hs, batch));
  std::vector<Matrix> c(kLstmLayers, Matrix(hs, batch));
  for (const Matrix& x : steps)
    for (int l = 0; l < kLstmLayers; ++l)
      cell_step(net.params[2 * l], net.params[2 * l + 1], l == 0 ? x : h[l - 1], h[l], c[l]);
  Matrix y = matmul(net.params[2 * kLstmLayers], h.back());
  const Matrix& bias = net.params[2 * kLstmLayers + 1];
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t col = 0; col < batch; ++col) y(r, col) += bias(r, 0);
  return y;
}

std::vector<Matrix> gather_steps(const WindowedDataset& ds, std::span<const std::size_t> indices) {
  std::vector<Matrix> steps(static_cast<std::size_t>(ds.lookback()), Matrix(kFeatureCount, indices.size()));
  for (std::size_t col = 0; col < indices.size(); ++col) ds.write_input_column(indices[col], steps, col);
  return steps;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params) n += p.size();
  return n;
}

Network init_network(std::uint64_t seed, int hidden, int horizon) {
  if (hidden < 1 || horizon < 1) throw ConfigError("init_network: hidden and horizon must be >= 1");
  Network net;
  net.hidden = hidden;
  net.horizon = horizon;
  Rng rng(mix_seed(seed, {fnv1a("init-network")}));
  const auto hs = static_cast<std::size_t>(hidden);

  auto glorot = [&](std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = u(rng);
    return m;
  };

  for (int l = 0; l < kLstmLayers; ++l) {
    const std::size_t in = layer_input(net, l);
    net.names.push_back("lstm" + std::to_string(l) + ".W");
    net.params.push_back(glorot(4 * hs, in + hs));
    Matrix b(4 * hs, 1);
    for (std::size_t r = hs; r < 2 * hs; ++r) b(r, 0) = 1.0;  // forget gate open
    net.names.push_back("lstm" + std::to_string(l) + ".b");
    net.params.push_back(std::move(b));
  }
  net.names.push_back("head.W");
  net.params.push_back(glorot(static_cast<std::size_t>(horizon), hs));
  net.names.push_back("head.b");
  net.params.emplace_back(static_cast<std::size_t>(horizon), 1);
  return net;
}

std::vector<double> forward(const Network& net, const Matrix& window) {
  check_network(net);
  if (window.cols() != kFeatureCount || window.rows() == 0)
    throw DimensionError("forward: window must be lookback x " + std::to_string(kFeatureCount) + ", got " +
                         window.shape_string());
  std::vector<Matrix> steps;
  steps.reserve(window.rows());
  for (std::size_t t = 0; t < window.rows(); ++t)
    steps.push_back(Matrix::column(std::span<const double>(window.data() + t * kFeatureCount, kFeatureCount)));
  const Matrix y = forward_steps(net, steps);
  return {y.data(), y.data() + y.size()};
}

Matrix predict(const Network& net, const WindowedDataset& ds) {
  check_network(net);
  if (ds.horizon() != net.horizon)
    throw DimensionError("predict: dataset horizon " + std::to_string(ds.horizon()) + " vs network horizon " +
                         std::to_string(net.horizon));
  Matrix out(ds.size(), static_cast<std::size_t>(net.horizon));
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < ds.size(); begin += kPredictChunk) {
    const std::size_t end = std::min(ds.size(), begin + kPredictChunk);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const Matrix y = forward_steps(net, gather_steps(ds, idx));
    for (std::size_t col = 0; col < idx.size(); ++col)
      for (std::size_t j = 0; j < y.rows(); ++j) out(begin + col, j) = y(j, col);
  }
  return out;
}

double mse(const Network& net, const WindowedDataset& ds) {
  if (ds.empty()) throw DataError("mse: empty dataset");
  const Matrix pred = predict(net, ds);
  double sum = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (int j = 0; j < ds.horizon(); ++j) {
      const double d = pred(i, static_cast<std::size_t>(j)) - ds.target(i, j);
      sum += d * d;
    }
  return sum / static_cast<double>(pred.size());
}

BatchGraph record_batch(Tape& tape, const Network& net, const WindowedDataset& ds,
                        std::span<const std::size_t> indices) {
  check_network(net);
  if (indices.empty()) throw ContractError("record_batch: empty batch");
  if (ds.horizon() != net.horizon) throw DimensionError("record_batch: dataset and network horizons differ");
  const std::size_t batch = indices.size();
  const auto hs = static_cast<std::size_t>(net.hidden);

  BatchGraph g;
  for (const auto& p : net.params) g.params.push_back(tape.parameter(p));

  std::vector<Matrix> steps = gather_steps(ds, indices);
  const NodeId zero = tape.constant(Matrix(hs, batch));
  std::vector<NodeId> h(kLstmLayers, zero);
  std::vector<NodeId> c(kLstmLayers, zero);
  for (auto& step : steps) {
    const NodeId x = tape.constant(std::move(step));
    for (int l = 0; l < kLstmLayers; ++l) {
      const NodeId parts[2] = {l == 0 ? x : h[l - 1], h[l]};
      const NodeId z = tape.add(tape.matmul(g.params[2 * l], tape.concat_rows(parts)), g.params[2 * l + 1]);
      const NodeId ig = tape.sigmoid(tape.slice_rows(z, 0, hs));
      const NodeId fg = tape.sigmoid(tape.slice_rows(z, hs, 2 * hs));
      const NodeId gg = tape.tanh(tape.slice_rows(z, 2 * hs, 3 * hs));
      const NodeId og = tape.sigmoid(tape.slice_rows(z, 3 * hs, 4 * hs));
      c[l] = tape.add(tape.hadamard(fg, c[l]), tape.hadamard(ig, gg));
      h[l] = tape.hadamard(og, tape.tanh(c[l]));
    }
  }
  g.output = tape.add(tape.matmul(g.params[2 * kLstmLayers], h.back()), g.params[2 * kLstmLayers + 1]);

  Matrix neg_target(static_cast<std::size_t>(net.horizon), batch);
  for (std::size_t col = 0; col < batch; ++col)
    for (int j = 0; j < net.horizon; ++j) neg_target(static_cast<std::size_t>(j), col) = -ds.target(indices[col], j);
  const NodeId diff = tape.add(g.output, tape.constant(std::move(neg_target)));
  g.loss = tape.scalar_mul(tape.sum_squares(diff), 1.0 / static_cast<double>(batch * static_cast<std::size_t>(net.horizon)));
  return g;
}

LossAndGrad loss_and_gradients(const Network& net, const WindowedDataset& ds, std::span<const std::size_t> indices) {
  Tape tape;
  const BatchGraph g = record_batch(tape, net, ds, indices);
  return {tape.value(g.loss)(0, 0), tape.backward(g.loss)};
}

TrainResult train(const Network& start, const WindowedDataset& train_ds, const WindowedDataset& val_ds,
                  const TrainOptions& opts) {
  if (opts.max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1, got " + std::to_string(opts.max_epochs));
  if (opts.batch_size < 1) throw ConfigError("train: batch_size must be >= 1, got " + std::to_string(opts.batch_size));
  if (opts.max_batches_per_epoch < 0 || opts.patience < 0 || opts.max_val_windows < 0)
    throw ConfigError("train: max_batches_per_epoch, patience and max_val_windows must be >= 0");
  if (train_ds.empty() || val_ds.empty()) throw DataError("train: empty training or validation set");
  check_network(start);

  const auto t0 = std::chrono::steady_clock::now();
  WindowedDataset val_sub;
  const WindowedDataset* val_set = &val_ds;
  if (opts.max_val_windows > 0 && val_ds.size() > static_cast<std::size_t>(opts.max_val_windows)) {
    const auto cap = static_cast<std::size_t>(opts.max_val_windows);
    std::vector<std::size_t> pick(cap);
    for (std::size_t i = 0; i < cap; ++i) pick[i] = i * val_ds.size() / cap;
    val_sub = val_ds.select(pick);
    val_set = &val_sub;
  }
  Network net = start;
  AdamState adam(opts.adam, net.params);
  Rng rng(mix_seed(opts.seed, {fnv1a("train-shuffle")}));

  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), 0);
  const auto bs = static_cast<std::size_t>(opts.batch_size);
  std::size_t n_batches = (order.size() + bs - 1) / bs;
  if (opts.max_batches_per_epoch > 0) n_batches = std::min(n_batches, static_cast<std::size_t>(opts.max_batches_per_epoch));

  TrainResult result{net, {}};
  result.report.n_train = train_ds.size();
  result.report.best_val_loss = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * bs;
      const std::size_t end = std::min(order.size(), begin + bs);
      LossAndGrad lg = loss_and_gradients(net, train_ds, std::span<const std::size_t>(order).subspan(begin, end - begin));
      if (opts.extra_loss) lg.loss += opts.extra_loss(net.params, lg.grads);
      if (!std::isfinite(lg.loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(b + 1) + " of " + std::to_string(n_batches));
      if (opts.gradient_hook) opts.gradient_hook(net, lg.grads);
      adam.step(net.params, lg.grads, net.names);
    }

    const double val = mse(net, *val_set);
    if (!std::isfinite(val)) throw NumericError("train: non-finite validation loss at epoch " + std::to_string(epoch));
    result.report.val_history.push_back(val);
    result.report.epochs_run = epoch;
    if (val < result.report.best_val_loss) {
      result.report.best_val_loss = val;
      result.report.best_epoch = epoch;
      result.net = net;
      since_best = 0;
    } else if (opts.patience > 0 && ++since_best >= opts.patience) {
      break;
    }
  }
  result.report.seconds = seconds_since(t0);
  return result;
}

void save_network(const std::filesystem::path& path, const Network& net, const std::string& config_hash) {
  check_network(net);
  nlohmann::json j;
  j["format"] = "thermadapt-network";
  j["hidden"] = net.hidden;
  j["horizon"] = net.horizon;
  j["config_hash"] = config_hash;
  auto& blocks = j["params"] = nlohmann::json::array();
  for (std::size_t k = 0; k < net.params.size(); ++k) {
    const Matrix& m = net.params[k];
    blocks.push_back({{"name", net.names[k]},
                      {"shape", {m.rows(), m.cols()}},
                      {"values", std::vector<double>(m.values().begin(), m.values().end())}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump() << '\n';
}

Network load_network(const std::filesystem::path& path, const Network* expected) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network snapshot " + path.string());
  Network net;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format") != "thermadapt-network") throw IoError(path.string() + ": not a network snapshot");
    net.hidden = j.at("hidden").get<int>();
    net.horizon = j.at("horizon").get<int>();
    for (const auto& block : j.at("params")) {
      const auto shape = block.at("shape").get<std::vector<std::size_t>>();
      auto values = block.at("values").get<std::vector<double>>();
      if (shape.size() != 2 || shape[0] * shape[1] != values.size())
        throw IoError(path.string() + ": block " + block.at("name").get<std::string>() + " has inconsistent shape");
      net.names.push_back(block.at("name").get<std::string>());
      net.params.emplace_back(shape[0], shape[1], std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }

  const Network layout = init_network(0, net.hidden, net.horizon);
  const Network& ref = expected ? *expected : layout;
  if (net.params.size() != ref.params.size())
    throw DimensionError(path.string() + ": " + std::to_string(net.params.size()) + " parameter blocks, expected " +
                         std::to_string(ref.params.size()));
  for (std::size_t k = 0; k < ref.params.size(); ++k)
    if (net.names[k] != ref.names[k] || !net.params[k].same_shape(ref.params[k]))
      throw DimensionError(path.string() + ": block " + net.names[k] + " " + net.params[k].shape_string() +
                           " does not match expected " + ref.names[k] + " " + ref.params[k].shape_string());
  return net;
}

void save_scaler(const std::filesystem::path& path, const Scaler& scaler, const std::string& config_hash) {
  nlohmann::json j;
  j["format"] = "thermadapt-scaler";
  j["features"] = {"t_in", "t_out", "q_dir", "q_dif", "u_in"};
  j["mean"] = scaler.mean;
  j["std"] = scaler.std;
  j["config_hash"] = config_hash;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

Scaler load_scaler(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scaler " + path.string());
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("format") != "thermadapt-scaler") throw IoError(path.string() + ": not a scaler file");
    Scaler s;
    s.mean = j.at("mean").get<std::array<double, kFeatureCount>>();
    s.std = j.at("std").get<std::array<double, kFeatureCount>>();
    for (double v : s.std)
      if (!(v > 0.0)) throw IoError(path.string() + ": non-positive std");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace thermadapt
