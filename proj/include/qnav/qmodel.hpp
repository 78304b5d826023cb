#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnav/json_io.hpp"
#include "qnav/navgraph.hpp"
#include "qnav/qoracle.hpp"
#include "qnav/rng.hpp"

namespace qnav {

struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Activation { tanh_fn, relu };

inline std::string to_string(Activation a) { return a == Activation::tanh_fn ? "tanh" : "relu"; }
inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::tanh_fn;
  if (s == "relu") return Activation::relu;
  throw std::invalid_argument("unknown activation: " + s);
}

// Plain fully-connected regressor, double precision throughout. The final
// layer is linear; hidden layers use the configured activation.
struct RegressorParams {
  struct Layer {
    std::vector<std::vector<double>> w;  // [out][in]
    std::vector<double> b;               // [out]
    bool operator==(const Layer&) const = default;
  };
  std::vector<int> dims;  // in, hidden..., out
  Activation act = Activation::tanh_fn;
  std::vector<Layer> layers;
  bool operator==(const RegressorParams&) const = default;

  int in_dim() const { return dims.front(); }
  int out_dim() const { return dims.back(); }
};

inline RegressorParams init_params(std::vector<int> dims, Activation act, std::uint64_t seed,
                                   double init_scale = 1.0) {
  if (dims.size() < 2) throw ShapeMismatch("need at least input and output dims");
  RegressorParams p;
  p.dims = std::move(dims);
  p.act = act;
  SplitMix64 rng(seed);
  for (size_t l = 0; l + 1 < p.dims.size(); ++l) {
    int fan_in = p.dims[l];
    int fan_out = p.dims[l + 1];
    double bound = init_scale / std::sqrt(static_cast<double>(fan_in));
    RegressorParams::Layer layer;
    layer.w.assign(static_cast<size_t>(fan_out), std::vector<double>(static_cast<size_t>(fan_in)));
    layer.b.assign(static_cast<size_t>(fan_out), 0.0);
    for (auto& row : layer.w)
      for (double& x : row) x = rng.uniform(-bound, bound);
    // Biases get the same spread. Zero biases would park a dead relu layer's
    // successors exactly on the activation kink, where finite differences and
    // the subgradient legitimately disagree.
    for (double& b : layer.b) b = rng.uniform(-bound, bound);
    p.layers.push_back(std::move(layer));
  }
  return p;
}

// Fixed-length trajectory/action summary of dimension 3d + 2:
// [ feature(tail) | mean feature over trajectory | sin,cos of tail->candidate
//   | feature(candidate) ].
inline std::vector<double> encode_input(const NavGraph& g, const PartialTrajectory& traj,
                                        int candidate) {
  const int d = g.feature_dim();
  std::vector<double> x;
  x.reserve(static_cast<size_t>(3 * d + 2));
  const std::vector<double>& tail_feat = g.node(traj.tail()).feature;
  x.insert(x.end(), tail_feat.begin(), tail_feat.end());
  std::vector<double> mean(static_cast<size_t>(d), 0.0);
  for (int id : traj.node_ids) {
    const std::vector<double>& f = g.node(id).feature;
    for (int i = 0; i < d; ++i) mean[static_cast<size_t>(i)] += f[static_cast<size_t>(i)];
  }
  for (double& m : mean) m /= static_cast<double>(traj.node_ids.size());
  x.insert(x.end(), mean.begin(), mean.end());
  auto [sin_t, cos_t] = heading_encoding(g, traj.tail(), candidate);
  x.push_back(sin_t);
  x.push_back(cos_t);
  const std::vector<double>& cand_feat = g.node(candidate).feature;
  x.insert(x.end(), cand_feat.begin(), cand_feat.end());
  return x;
}

namespace detail {

inline double activate(Activation a, double z) {
  return a == Activation::tanh_fn ? std::tanh(z) : (z > 0.0 ? z : 0.0);
}
inline double activate_grad(Activation a, double z) {
  if (a == Activation::tanh_fn) {
    double t = std::tanh(z);
    return 1.0 - t * t;
  }
  return z > 0.0 ? 1.0 : 0.0;
}

}  // namespace detail

inline std::vector<double> forward(const RegressorParams& p, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != p.in_dim())
    throw ShapeMismatch("input dim " + std::to_string(x.size()) + " != " +
                        std::to_string(p.in_dim()));
  std::vector<double> a = x;
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    std::vector<double> z(layer.b);
    for (size_t o = 0; o < layer.w.size(); ++o) {
      const auto& row = layer.w[o];
      double acc = 0.0;
      for (size_t i = 0; i < row.size(); ++i) acc += row[i] * a[i];
      z[o] += acc;
    }
    if (l + 1 < p.layers.size())
      for (double& v : z) v = detail::activate(p.act, v);
    a = std::move(z);
  }
  return a;
}

struct Gradients {
  std::vector<RegressorParams::Layer> layers;

  static Gradients zeros_like(const RegressorParams& p) {
    Gradients g;
    for (const auto& layer : p.layers) {
      RegressorParams::Layer zl;
      zl.w.assign(layer.w.size(), std::vector<double>(layer.w.front().size(), 0.0));
      zl.b.assign(layer.b.size(), 0.0);
      g.layers.push_back(std::move(zl));
    }
    return g;
  }
};

namespace detail {

// Accumulates d(mse)/d(theta) for one sample into grads; returns the sample's
// squared-error mean over output dims. `weight` scales the contribution
// (1/batch for minibatch means).
inline double backprop_sample(const RegressorParams& p, const std::vector<double>& x,
                              const std::vector<double>& y, double weight, Gradients& grads) {
  if (static_cast<int>(x.size()) != p.in_dim()) throw ShapeMismatch("input dim mismatch");
  const size_t n_layers = p.layers.size();
  std::vector<std::vector<double>> pre(n_layers);    // affine outputs
  std::vector<std::vector<double>> post(n_layers + 1);  // post[0] = input
  post[0] = x;
  for (size_t l = 0; l < n_layers; ++l) {
    const auto& layer = p.layers[l];
    std::vector<double> z(layer.b);
    for (size_t o = 0; o < layer.w.size(); ++o) {
      double acc = 0.0;
      const auto& row = layer.w[o];
      for (size_t i = 0; i < row.size(); ++i) acc += row[i] * post[l][i];
      z[o] += acc;
    }
    pre[l] = z;
    if (l + 1 < n_layers)
      for (double& v : z) v = activate(p.act, v);
    post[l + 1] = std::move(z);
  }
  const std::vector<double>& pred = post.back();
  if (pred.size() != y.size()) throw ShapeMismatch("target dim mismatch");
  const double inv_out = 1.0 / static_cast<double>(pred.size());
  double loss = 0.0;
  std::vector<double> delta(pred.size());  // dL/dz of the final (linear) layer
  for (size_t i = 0; i < pred.size(); ++i) {
    double e = pred[i] - y[i];
    loss += e * e;
    delta[i] = 2.0 * e * inv_out * weight;
  }
  loss *= inv_out;

  for (size_t l = n_layers; l-- > 0;) {
    const auto& layer = p.layers[l];
    const std::vector<double>& input = post[l];
    auto& gl = grads.layers[l];
    for (size_t o = 0; o < delta.size(); ++o) {
      gl.b[o] += delta[o];
      auto& grow = gl.w[o];
      for (size_t i = 0; i < input.size(); ++i) grow[i] += delta[o] * input[i];
    }
    if (l == 0) break;
    std::vector<double> prev(input.size(), 0.0);
    for (size_t o = 0; o < delta.size(); ++o) {
      const auto& row = layer.w[o];
      for (size_t i = 0; i < row.size(); ++i) prev[i] += row[i] * delta[o];
    }
    for (size_t i = 0; i < prev.size(); ++i)
      prev[i] *= activate_grad(p.act, pre[l - 1][i]);
    delta = std::move(prev);
  }
  return loss;
}

}  // namespace detail

struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;

  size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
};

// Encode training samples against their worlds; an optional world filter
// implements held-out-world splits.
inline Dataset encode_dataset(const std::vector<NavGraph>& worlds,
                              const std::vector<TrainingSample>& samples,
                              const std::vector<int>* world_filter = nullptr) {
  Dataset d;
  for (const TrainingSample& s : samples) {
    if (world_filter &&
        std::find(world_filter->begin(), world_filter->end(), s.world) == world_filter->end())
      continue;
    d.inputs.push_back(encode_input(worlds.at(static_cast<size_t>(s.world)), s.trajectory,
                                    s.candidate));
    d.targets.push_back(s.target);
  }
  return d;
}

inline double evaluate_mse(const RegressorParams& p, const Dataset& data) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (size_t s = 0; s < data.size(); ++s) {
    std::vector<double> pred = forward(p, data.inputs[s]);
    double loss = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
      double e = pred[i] - data.targets[s][i];
      loss += e * e;
    }
    total += loss / static_cast<double>(pred.size());
  }
  return total / static_cast<double>(data.size());
}

struct TrainConfig {
  enum class Optimizer { sgd, adam };
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 30;
  std::uint64_t seed = 0;
  double init_scale = 1.0;
  std::vector<int> hidden = {128};
  Activation act = Activation::tanh_fn;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

inline void validate(const TrainConfig& cfg) {
  if (cfg.learning_rate < 0.0) throw std::invalid_argument("learning rate must be >= 0");
  if (cfg.batch_size <= 0 || cfg.epochs < 0)
    throw std::invalid_argument("batch size and epochs must be positive");
}

struct EpochStats {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainResult {
  RegressorParams params;
  std::vector<EpochStats> curve;
};

// Minibatch gradient descent on MSE. Single-threaded and fully determined by
// (dataset, cfg): init, shuffles and update order all derive from cfg.seed.
inline TrainResult train(const Dataset& train_set, const Dataset& val_set,
                         const TrainConfig& cfg) {
  validate(cfg);
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  std::vector<int> dims;
  dims.push_back(static_cast<int>(train_set.inputs.front().size()));
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(static_cast<int>(train_set.targets.front().size()));

  TrainResult result;
  result.params = init_params(dims, cfg.act, derive_seed(cfg.seed, "init"), cfg.init_scale);
  RegressorParams& p = result.params;

  Gradients adam_m = Gradients::zeros_like(p);
  Gradients adam_v = Gradients::zeros_like(p);
  long adam_t = 0;

  const size_t n = train_set.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SplitMix64 shuffle_rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
    for (size_t i = n; i > 1; --i) {
      size_t j = shuffle_rng.below(i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_loss = 0.0;
    for (size_t begin = 0; begin < n; begin += static_cast<size_t>(cfg.batch_size)) {
      size_t end = std::min(n, begin + static_cast<size_t>(cfg.batch_size));
      double inv_batch = 1.0 / static_cast<double>(end - begin);
      Gradients grads = Gradients::zeros_like(p);
      for (size_t k = begin; k < end; ++k)
        epoch_loss += detail::backprop_sample(p, train_set.inputs[order[k]],
                                              train_set.targets[order[k]], inv_batch, grads);
      if (cfg.optimizer == TrainConfig::Optimizer::sgd) {
        for (size_t l = 0; l < p.layers.size(); ++l) {
          auto& layer = p.layers[l];
          const auto& gl = grads.layers[l];
          for (size_t o = 0; o < layer.b.size(); ++o) {
            layer.b[o] -= cfg.learning_rate * gl.b[o];
            for (size_t i = 0; i < layer.w[o].size(); ++i)
              layer.w[o][i] -= cfg.learning_rate * gl.w[o][i];
          }
        }
      } else {
        ++adam_t;
        double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
        double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
        auto update = [&](double& theta, double& m, double& v, double g) {
          m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
          v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
          theta -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
        };
        for (size_t l = 0; l < p.layers.size(); ++l) {
          auto& layer = p.layers[l];
          for (size_t o = 0; o < layer.b.size(); ++o) {
            update(layer.b[o], adam_m.layers[l].b[o], adam_v.layers[l].b[o], grads.layers[l].b[o]);
            for (size_t i = 0; i < layer.w[o].size(); ++i)
              update(layer.w[o][i], adam_m.layers[l].w[o][i], adam_v.layers[l].w[o][i],
                     grads.layers[l].w[o][i]);
          }
        }
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mse = epoch_loss / static_cast<double>(n);
    stats.val_mse = evaluate_mse(p, val_set);
    if (!std::isfinite(stats.train_mse) ||
        (!val_set.empty() && !std::isfinite(stats.val_mse)))
      throw NonFiniteLoss("loss diverged at epoch " + std::to_string(epoch));
    result.curve.push_back(stats);
  }
  return result;
}

// Max relative error between backprop and central finite differences over all
// parameters, on a single (x, y) pair.
inline double grad_check(const RegressorParams& params, const std::vector<double>& x,
                         const std::vector<double>& y, double fd_step = 1e-5) {
  Gradients analytic = Gradients::zeros_like(params);
  detail::backprop_sample(params, x, y, 1.0, analytic);

  RegressorParams probe = params;
  auto loss_at = [&]() {
    std::vector<double> pred = forward(probe, x);
    double loss = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
      double e = pred[i] - y[i];
      loss += e * e;
    }
    return loss / static_cast<double>(pred.size());
  };
  double max_rel = 0.0;
  auto check_param = [&](double& theta, double g_analytic) {
    double saved = theta;
    theta = saved + fd_step;
    double up = loss_at();
    theta = saved - fd_step;
    double down = loss_at();
    theta = saved;
    double g_numeric = (up - down) / (2.0 * fd_step);
    double denom = std::max({std::fabs(g_analytic), std::fabs(g_numeric), 1e-8});
    max_rel = std::max(max_rel, std::fabs(g_analytic - g_numeric) / denom);
  };
  for (size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (size_t o = 0; o < layer.b.size(); ++o) {
      check_param(layer.b[o], analytic.layers[l].b[o]);
      for (size_t i = 0; i < layer.w[o].size(); ++i)
        check_param(layer.w[o][i], analytic.layers[l].w[o][i]);
    }
  }
  return max_rel;
}

// One prediction per unvisited neighbor of the trajectory tail.
inline std::map<int, std::vector<double>> predict_qfeatures(const RegressorParams& params,
                                                            const NavGraph& g,
                                                            const PartialTrajectory& traj) {
  std::map<int, std::vector<double>> out;
  for (int cand : candidate_actions(g, traj))
    out[cand] = forward(params, encode_input(g, traj, cand));
  return out;
}

inline std::string serialize_params(const RegressorParams& p) {
  std::string out = "{\"dims\":" + int_array_json(p.dims) + ",\"act\":\"" + to_string(p.act) +
                    "\",\"layers\":[\n";
  for (size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    out += "{\"w\":[";
    for (size_t o = 0; o < layer.w.size(); ++o) {
      if (o) out += ",";
      out += double_array_json(layer.w[o]);
    }
    out += "],\"b\":" + double_array_json(layer.b) + "}";
    if (l + 1 < p.layers.size()) out += ",";
    out += "\n";
  }
  out += "]}\n";
  return out;
}

inline void save_params(const RegressorParams& p, const std::string& path) {
  atomic_write_file(path, serialize_params(p));
}

inline RegressorParams load_params(const std::string& path) {
  nlohmann::json j = parse_json_file(path);
  if (!j.contains("dims") || !j.contains("act") || !j.contains("layers"))
    throw SchemaError(path + ": params need keys dims, act, layers");
  RegressorParams p;
  p.dims = j["dims"].get<std::vector<int>>();
  p.act = parse_activation(j["act"].get<std::string>());
  for (const auto& lj : j["layers"]) {
    RegressorParams::Layer layer;
    layer.w = lj.at("w").get<std::vector<std::vector<double>>>();
    layer.b = lj.at("b").get<std::vector<double>>();
    p.layers.push_back(std::move(layer));
  }
  if (p.layers.size() + 1 != p.dims.size()) throw SchemaError(path + ": layer count mismatch");
  for (size_t l = 0; l < p.layers.size(); ++l) {
    if (static_cast<int>(p.layers[l].b.size()) != p.dims[l + 1] ||
        static_cast<int>(p.layers[l].w.size()) != p.dims[l + 1])
      throw SchemaError(path + ": layer " + std::to_string(l) + " shape mismatch");
    for (const auto& row : p.layers[l].w)
      if (static_cast<int>(row.size()) != p.dims[l])
        throw SchemaError(path + ": layer " + std::to_string(l) + " row dim mismatch");
  }
  return p;
}

inline std::string loss_curve_csv(const std::vector<EpochStats>& curve) {
  std::string out = "epoch,train_mse,val_mse\n";
  for (const EpochStats& e : curve)
    out += std::to_string(e.epoch) + "," + fmt_double(e.train_mse) + "," + fmt_double(e.val_mse) +
           "\n";
  return out;
}

}  // namespace qnav
