#pragma once

// Stacked bidirectional LSTM over word and POS embeddings with any number of
// per-token softmax heads. Double precision throughout; one sentence at a
// time, no batching.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "chartcons/util.hpp"

namespace chartcons {

struct BiLstmShape {
  int vocab = 2;
  int pos_vocab = 1;
  int word_dim = 32;
  int pos_dim = 8;
  int hidden = 100;
  int layers = 2;
  std::vector<int> heads;  // classes per head
};

/// Per-token class targets, one row per head.
struct LstmExample {
  std::vector<int> words;
  std::vector<int> pos;
  std::vector<std::vector<int>> targets;
};

class BiLstm {
 public:
  using Mat = Eigen::MatrixXd;
  using Vec = Eigen::VectorXd;

  BiLstm() = default;
  BiLstm(BiLstmShape shape, uint64_t seed, double init = 0.1) : shape_(std::move(shape)) {
    if (shape_.layers < 1 || shape_.hidden < 1) throw UsageError("lstm: bad shape");
    const int h = shape_.hidden;
    params_.push_back(Mat(shape_.word_dim, shape_.vocab));
    params_.push_back(Mat(shape_.pos_dim, shape_.pos_vocab));
    for (int l = 0; l < shape_.layers; ++l)
      for (int d = 0; d < 2; ++d) {
        const int in = l == 0 ? shape_.word_dim + shape_.pos_dim : 2 * h;
        params_.push_back(Mat(4 * h, in));
        params_.push_back(Mat(4 * h, h));
        params_.push_back(Mat(4 * h, 1));
      }
    for (int c : shape_.heads) {
      params_.push_back(Mat(c, 2 * h));
      params_.push_back(Mat(c, 1));
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-init, init);
    for (auto& p : params_)
      for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
  }

  const BiLstmShape& shape() const { return shape_; }
  std::vector<Mat>& params() { return params_; }
  const std::vector<Mat>& params() const { return params_; }

  /// Per head, a (classes x n) matrix of probabilities.
  std::vector<Mat> predict(const std::vector<int>& words, const std::vector<int>& pos) const {
    Cache c;
    forward(words, pos, c);
    return c.probs;
  }

  /// Summed cross-entropy of all heads; gradients are added into `grads`
  /// (same shapes as params()) when non-null.
  double loss(const LstmExample& ex, std::vector<Mat>* grads) const {
    Cache c;
    forward(ex.words, ex.pos, c);
    const int n = static_cast<int>(ex.words.size());
    double total = 0.0;
    for (size_t hd = 0; hd < shape_.heads.size(); ++hd)
      for (int t = 0; t < n; ++t) total -= std::log(c.probs[hd](ex.targets[hd][t], t));
    if (grads) backward(ex, c, *grads);
    return total;
  }

  std::vector<Mat> zero_grads() const {
    std::vector<Mat> g;
    for (const auto& p : params_) g.push_back(Mat::Zero(p.rows(), p.cols()));
    return g;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["shape"] = {{"vocab", shape_.vocab},       {"pos_vocab", shape_.pos_vocab},
                  {"word_dim", shape_.word_dim}, {"pos_dim", shape_.pos_dim},
                  {"hidden", shape_.hidden},     {"layers", shape_.layers},
                  {"heads", shape_.heads}};
    nlohmann::json ps = nlohmann::json::array();
    for (const auto& p : params_)
      ps.push_back({{"rows", p.rows()},
                    {"cols", p.cols()},
                    {"data", std::vector<double>(p.data(), p.data() + p.size())}});
    j["params"] = ps;
    return j;
  }

  static BiLstm from_json(const nlohmann::json& j) {
    const auto& s = j.at("shape");
    BiLstmShape shape{s.at("vocab").get<int>(),    s.at("pos_vocab").get<int>(),
                      s.at("word_dim").get<int>(), s.at("pos_dim").get<int>(),
                      s.at("hidden").get<int>(),   s.at("layers").get<int>(),
                      s.at("heads").get<std::vector<int>>()};
    BiLstm net(shape, 0);
    const auto& ps = j.at("params");
    if (ps.size() != net.params_.size()) throw DataError("lstm model: wrong number of parameter blocks");
    for (size_t i = 0; i < ps.size(); ++i) {
      auto& p = net.params_[i];
      const auto data = ps[i].at("data").get<std::vector<double>>();
      if (ps[i].at("rows").get<Eigen::Index>() != p.rows() ||
          ps[i].at("cols").get<Eigen::Index>() != p.cols() ||
          static_cast<Eigen::Index>(data.size()) != p.size())
        throw DataError("lstm model: parameter block " + std::to_string(i) + " has the wrong shape");
      std::copy(data.begin(), data.end(), p.data());
    }
    return net;
  }

 private:
  struct Direction {
    Mat gates;  // i, f, o, g after activation (4H x n)
    Mat cells;  // H x n
    Mat out;    // H x n
  };
  struct Cache {
    std::vector<Mat> inputs;  // per layer, (in x n)
    std::vector<Direction> dirs;  // layer * 2 + direction
    std::vector<Mat> probs;
  };

  int layer_base(int l, int d) const { return 2 + (l * 2 + d) * 3; }
  int head_base(int hd) const { return 2 + shape_.layers * 6 + hd * 2; }

  static double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

  void run_direction(const Mat& x, int l, int d, Direction& out) const {
    const int h = shape_.hidden;
    const int n = static_cast<int>(x.cols());
    const Mat& w = params_[layer_base(l, d)];
    const Mat& u = params_[layer_base(l, d) + 1];
    const Mat& b = params_[layer_base(l, d) + 2];
    Mat zx = w * x;
    zx.colwise() += b.col(0);
    out.gates.resize(4 * h, n);
    out.cells.resize(h, n);
    out.out.resize(h, n);
    Vec hprev = Vec::Zero(h), cprev = Vec::Zero(h);
    for (int s = 0; s < n; ++s) {
      const int t = d == 0 ? s : n - 1 - s;
      Vec z = zx.col(t) + u * hprev;
      for (int r = 0; r < 3 * h; ++r) z(r) = sigmoid(z(r));
      for (int r = 3 * h; r < 4 * h; ++r) z(r) = std::tanh(z(r));
      Vec c = z.segment(h, h).cwiseProduct(cprev) + z.segment(0, h).cwiseProduct(z.segment(3 * h, h));
      Vec hv = z.segment(2 * h, h).cwiseProduct(c.array().tanh().matrix());
      out.gates.col(t) = z;
      out.cells.col(t) = c;
      out.out.col(t) = hv;
      hprev = hv;
      cprev = c;
    }
  }

  void forward(const std::vector<int>& words, const std::vector<int>& pos, Cache& c) const {
    const int n = static_cast<int>(words.size());
    if (pos.size() != words.size()) throw UsageError("lstm: words and POS differ in length");
    const int dw = shape_.word_dim, dp = shape_.pos_dim;
    Mat x(dw + dp, n);
    for (int t = 0; t < n; ++t) {
      if (words[t] < 0 || words[t] >= shape_.vocab || pos[t] < 0 || pos[t] >= shape_.pos_vocab)
        throw UsageError("lstm: index out of range");
      x.block(0, t, dw, 1) = params_[0].col(words[t]);
      x.block(dw, t, dp, 1) = params_[1].col(pos[t]);
    }
    c.inputs.clear();
    c.dirs.assign(shape_.layers * 2, {});
    for (int l = 0; l < shape_.layers; ++l) {
      c.inputs.push_back(x);
      run_direction(x, l, 0, c.dirs[l * 2]);
      run_direction(x, l, 1, c.dirs[l * 2 + 1]);
      x.resize(2 * shape_.hidden, n);
      x.topRows(shape_.hidden) = c.dirs[l * 2].out;
      x.bottomRows(shape_.hidden) = c.dirs[l * 2 + 1].out;
    }
    c.inputs.push_back(x);  // top-layer features
    c.probs.clear();
    for (size_t hd = 0; hd < shape_.heads.size(); ++hd) {
      Mat logits = params_[head_base(static_cast<int>(hd))] * x;
      logits.colwise() += params_[head_base(static_cast<int>(hd)) + 1].col(0);
      for (int t = 0; t < n; ++t) {
        auto col = logits.col(t);
        col.array() -= col.maxCoeff();
        col = col.array().exp().matrix();
        col /= col.sum();
      }
      c.probs.push_back(std::move(logits));
    }
  }

  /// Backpropagates d(out) for one direction; returns d(input).
  Mat back_direction(const Mat& x, const Direction& fw, const Mat& dout, int l, int d,
                     std::vector<Mat>& g) const {
    const int h = shape_.hidden;
    const int n = static_cast<int>(x.cols());
    const int base = layer_base(l, d);
    const Mat& w = params_[base];
    const Mat& u = params_[base + 1];
    Mat dz(4 * h, n), hprev = Mat::Zero(h, n);
    Vec dh_next = Vec::Zero(h), dc_next = Vec::Zero(h);
    for (int s = n - 1; s >= 0; --s) {
      const int t = d == 0 ? s : n - 1 - s;
      const int p = d == 0 ? t - 1 : t + 1;
      const bool has_prev = s > 0;
      const auto gates = fw.gates.col(t);
      const Vec i = gates.segment(0, h), f = gates.segment(h, h), o = gates.segment(2 * h, h),
                gg = gates.segment(3 * h, h);
      const Vec tc = fw.cells.col(t).array().tanh().matrix();
      const Vec cprev = has_prev ? Vec(fw.cells.col(p)) : Vec::Zero(h);
      const Vec dh = dout.col(t) + dh_next;
      const Vec dob = dh.cwiseProduct(tc);
      const Vec dc = dh.cwiseProduct(o).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_next;
      auto col = dz.col(t);
      col.segment(0, h) = dc.cwiseProduct(gg).cwiseProduct(i.cwiseProduct((1.0 - i.array()).matrix()));
      col.segment(h, h) = dc.cwiseProduct(cprev).cwiseProduct(f.cwiseProduct((1.0 - f.array()).matrix()));
      col.segment(2 * h, h) = dob.cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));
      col.segment(3 * h, h) = dc.cwiseProduct(i).cwiseProduct((1.0 - gg.array().square()).matrix());
      dc_next = dc.cwiseProduct(f);
      dh_next = u.transpose() * dz.col(t);
      if (has_prev) hprev.col(t) = fw.out.col(p);
    }
    g[base].noalias() += dz * x.transpose();
    g[base + 1].noalias() += dz * hprev.transpose();
    g[base + 2] += dz.rowwise().sum();
    return w.transpose() * dz;
  }

  void backward(const LstmExample& ex, const Cache& c, std::vector<Mat>& g) const {
    const int n = static_cast<int>(ex.words.size());
    const int h = shape_.hidden;
    const Mat& top = c.inputs.back();
    Mat dx = Mat::Zero(2 * h, n);
    for (size_t hd = 0; hd < shape_.heads.size(); ++hd) {
      Mat dlogits = c.probs[hd];
      for (int t = 0; t < n; ++t) dlogits(ex.targets[hd][t], t) -= 1.0;
      const int base = head_base(static_cast<int>(hd));
      g[base].noalias() += dlogits * top.transpose();
      g[base + 1] += dlogits.rowwise().sum();
      dx.noalias() += params_[base].transpose() * dlogits;
    }
    for (int l = shape_.layers - 1; l >= 0; --l) {
      const Mat& x = c.inputs[l];
      Mat dfw = dx.topRows(h), dbw = dx.bottomRows(h);
      Mat din = back_direction(x, c.dirs[l * 2], dfw, l, 0, g);
      din += back_direction(x, c.dirs[l * 2 + 1], dbw, l, 1, g);
      dx = std::move(din);
    }
    const int dw = shape_.word_dim, dp = shape_.pos_dim;
    for (int t = 0; t < n; ++t) {
      g[0].col(ex.words[t]) += dx.block(0, t, dw, 1);
      g[1].col(ex.pos[t]) += dx.block(dw, t, dp, 1);
    }
  }

  BiLstmShape shape_;
  std::vector<Mat> params_;
};

struct TrainOptions {
  int epochs = 6;
  double lr0 = 5e-4;
  double decay = 0.1;  // lr after epoch e is lr0 * (1 - decay)^e
  double rho = 0.9;
  double eps = 1e-8;
  uint64_t seed = 1;
  bool shuffle = true;
};

struct EpochLog {
  int epoch;
  double train_loss;  // mean per sentence
  double dev_score;
  double lr;
};

/// Per-sentence RMSProp. After each epoch `dev_score` is evaluated and the
/// best-scoring parameters are kept (ties keep the earlier epoch).
inline std::vector<EpochLog> train_bilstm(BiLstm& net, const std::vector<LstmExample>& data,
                                          const TrainOptions& opt,
                                          const std::function<double(const BiLstm&)>& dev_score,
                                          const std::function<void(const EpochLog&)>& on_epoch = {}) {
  if (data.empty()) throw UsageError("train: empty corpus");
  std::vector<BiLstm::Mat> cache = net.zero_grads();
  std::vector<BiLstm::Mat> grads = net.zero_grads();
  std::vector<size_t> order(data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(opt.seed);
  std::vector<EpochLog> logs;
  std::vector<BiLstm::Mat> best = net.params();
  double best_score = -1.0;
  double lr = opt.lr0;
  for (int e = 0; e < opt.epochs; ++e) {
    if (opt.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (size_t idx : order) {
      const LstmExample& ex = data[idx];
      if (ex.words.empty()) continue;
      for (auto& g : grads) g.setZero();
      total += net.loss(ex, &grads);
      auto& ps = net.params();
      for (size_t p = 0; p < ps.size(); ++p) {
        cache[p] = opt.rho * cache[p] + (1.0 - opt.rho) * grads[p].cwiseAbs2();
        ps[p].array() -= lr * grads[p].array() / (cache[p].array().sqrt() + opt.eps);
      }
    }
    EpochLog log{e + 1, total / static_cast<double>(data.size()), dev_score(net), lr};
    logs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (log.dev_score > best_score) {
      best_score = log.dev_score;
      best = net.params();
    }
    lr *= 1.0 - opt.decay;
  }
  net.params() = std::move(best);
  return logs;
}

struct GradCheckResult {
  double max_rel_error = 0.0;  // worst block
  int checked = 0;
};

/// Central differences on `samples` random coordinates of every parameter
/// block (for embeddings, entries of the columns the example uses). The error
/// of a block is ||a - n|| / max(||a||, ||n||) over its sampled coordinates.
inline GradCheckResult gradient_check(BiLstm& net, const LstmExample& ex, int samples, uint64_t seed,
                                      double step = 1e-5) {
  std::vector<BiLstm::Mat> g = net.zero_grads();
  net.loss(ex, &g);
  std::mt19937_64 rng(seed);
  GradCheckResult r;
  auto& ps = net.params();
  for (size_t p = 0; p < ps.size(); ++p) {
    std::vector<Eigen::Index> coords;
    if (p < 2) {
      const auto& ids = p == 0 ? ex.words : ex.pos;
      for (int id : ids)
        for (Eigen::Index r0 = 0; r0 < ps[p].rows(); ++r0) coords.push_back(id * ps[p].rows() + r0);
      std::sort(coords.begin(), coords.end());
      coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
      std::shuffle(coords.begin(), coords.end(), rng);
      if (static_cast<int>(coords.size()) > samples) coords.resize(samples);
    } else {
      std::uniform_int_distribution<Eigen::Index> pick(0, ps[p].size() - 1);
      for (int s = 0; s < samples; ++s) coords.push_back(pick(rng));
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (Eigen::Index k : coords) {
      double& w = ps[p].data()[k];
      const double saved = w;
      w = saved + step;
      const double up = net.loss(ex, nullptr);
      w = saved - step;
      const double down = net.loss(ex, nullptr);
      w = saved;
      const double numeric = (up - down) / (2 * step);
      const double analytic = g[p].data()[k];
      diff += (numeric - analytic) * (numeric - analytic);
      na += analytic * analytic;
      nn += numeric * numeric;
      ++r.checked;
    }
    const double scale = std::sqrt(std::max(na, nn));
    if (scale > 0) r.max_rel_error = std::max(r.max_rel_error, std::sqrt(diff) / scale);
  }
  return r;
}

}  // namespace chartcons
