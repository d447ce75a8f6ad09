#include "cogflex/nn_core.hpp"

#include <algorithm>
#include <cmath>

#include "cogflex/errors.hpp"

namespace cogflex {

Mat xavier_uniform(int fan_in, int fan_out, Rng& rng) {
  if (fan_in < 1 || fan_out < 1) {
    throw ValidationError("xavier_uniform needs positive fan-in and fan-out");
  }
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Mat w(fan_out, fan_in);
  for (double& x : w.a) x = rng.uniform(-limit, limit);
  return w;
}

Network::Network(int input_width) : input_width_(input_width) {
  if (input_width < 1) throw ValidationError("network input width must be positive");
}

void Network::check_building() const {
  if (finalized_) throw ValidationError("network is finalized; cannot add nodes");
}

void Network::check_finalized() const {
  if (!finalized_) throw ValidationError("network is not finalized");
}

int Network::add_node(Node node) {
  if (!node.tap.empty()) {
    for (const Node& other : nodes_) {
      if (other.tap == node.tap) {
        throw ValidationError("duplicate tap name '" + node.tap + "'");
      }
    }
  }
  nodes_.push_back(std::move(node));
  return static_cast<int>(nodes_.size()) - 1;
}

int Network::add_input(int offset, int width, std::string tap) {
  check_building();
  if (offset < 0 || width < 1 || offset + width > input_width_) {
    throw ValidationError("input slice out of range");
  }
  Node n;
  n.kind = Kind::Input;
  n.offset = offset;
  n.width = width;
  n.tap = std::move(tap);
  return add_node(std::move(n));
}

int Network::add_dense(int src, int out_width, Activation act, std::string name,
                       std::string tap) {
  check_building();
  if (src < 0 || src >= static_cast<int>(nodes_.size())) {
    throw ValidationError("dense source node out of range");
  }
  if (out_width < 1) throw ValidationError("dense width must be positive");
  if (name.empty()) throw ValidationError("dense layer needs a name");
  for (const DenseInfo& d : dense_) {
    if (d.name == name) throw ValidationError("duplicate dense name '" + name + "'");
  }
  DenseInfo info;
  info.name = std::move(name);
  info.in = nodes_[src].width;
  info.out = out_width;
  info.act = act;
  dense_.push_back(info);

  Node n;
  n.kind = Kind::Dense;
  n.a = src;
  n.dense = static_cast<int>(dense_.size()) - 1;
  n.width = out_width;
  n.tap = std::move(tap);
  return add_node(std::move(n));
}

int Network::add_slice(int src, int offset, int width, std::string tap) {
  check_building();
  if (src < 0 || src >= static_cast<int>(nodes_.size())) {
    throw ValidationError("slice source node out of range");
  }
  if (offset < 0 || width < 1 || offset + width > nodes_[src].width) {
    throw ValidationError("slice out of range");
  }
  Node n;
  n.kind = Kind::Slice;
  n.a = src;
  n.offset = offset;
  n.width = width;
  n.tap = std::move(tap);
  return add_node(std::move(n));
}

int Network::add_multiply(int a, int b, std::string tap) {
  check_building();
  if (a < 0 || b < 0 || a >= static_cast<int>(nodes_.size()) ||
      b >= static_cast<int>(nodes_.size())) {
    throw ValidationError("multiply source node out of range");
  }
  if (nodes_[a].width != nodes_[b].width) {
    throw ValidationError("multiply needs equal widths, got " +
                          std::to_string(nodes_[a].width) + " and " +
                          std::to_string(nodes_[b].width));
  }
  Node n;
  n.kind = Kind::Multiply;
  n.a = a;
  n.b = b;
  n.width = nodes_[a].width;
  n.tap = std::move(tap);
  return add_node(std::move(n));
}

int Network::add_concat(int a, int b, std::string tap) {
  check_building();
  if (a < 0 || b < 0 || a >= static_cast<int>(nodes_.size()) ||
      b >= static_cast<int>(nodes_.size())) {
    throw ValidationError("concat source node out of range");
  }
  Node n;
  n.kind = Kind::Concat;
  n.a = a;
  n.b = b;
  n.width = nodes_[a].width + nodes_[b].width;
  n.tap = std::move(tap);
  return add_node(std::move(n));
}

void Network::finalize(int logits_node) {
  check_building();
  if (logits_node < 0 || logits_node >= static_cast<int>(nodes_.size())) {
    throw ValidationError("logits node out of range");
  }
  if (nodes_[logits_node].kind != Kind::Dense) {
    throw ValidationError("logits node must be a dense layer");
  }
  logits_node_ = logits_node;

  std::size_t offset = 0;
  for (DenseInfo& d : dense_) {
    d.w_offset = offset;
    offset += static_cast<std::size_t>(d.out) * d.in;
    d.b_offset = offset;
    offset += static_cast<std::size_t>(d.out);
  }
  params_.assign(offset, 0.0);
  grads_.assign(offset, 0.0);
  acts_.resize(nodes_.size());
  dacts_.resize(nodes_.size());
  finalized_ = true;
}

int Network::output_width() const {
  check_finalized();
  return nodes_[logits_node_].width;
}

int Network::node_width(int node) const {
  if (node < 0 || node >= static_cast<int>(nodes_.size())) {
    throw ValidationError("node index out of range");
  }
  return nodes_[node].width;
}

std::vector<std::string> Network::tap_names() const {
  std::vector<std::string> names;
  for (const Node& n : nodes_) {
    if (!n.tap.empty()) names.push_back(n.tap);
  }
  return names;
}

void Network::init_params(Rng& rng) {
  check_finalized();
  for (const DenseInfo& d : dense_) {
    const Mat w = xavier_uniform(d.in, d.out, rng);
    std::copy(w.a.begin(), w.a.end(), params_.begin() + d.w_offset);
    std::fill_n(params_.begin() + d.b_offset, d.out, 0.0);
  }
}

void Network::ensure_rows(int rows) {
  if (rows_ == rows) return;
  rows_ = rows;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    acts_[i].resize(rows, nodes_[i].width);
    dacts_[i].resize(rows, nodes_[i].width);
  }
  probs_.resize(rows, nodes_[logits_node_].width);
}

void Network::forward(const std::uint8_t* x, int rows) {
  check_finalized();
  if (rows < 1) throw ValidationError("forward needs at least one row");
  ensure_rows(rows);

  for (std::size_t ni = 0; ni < nodes_.size(); ++ni) {
    const Node& node = nodes_[ni];
    Mat& out = acts_[ni];
    switch (node.kind) {
      case Kind::Input: {
        for (int r = 0; r < rows; ++r) {
          const std::uint8_t* src =
              x + static_cast<std::size_t>(r) * input_width_ + node.offset;
          double* dst = out.row(r);
          for (int j = 0; j < node.width; ++j) dst[j] = src[j];
        }
        break;
      }
      case Kind::Dense: {
        const DenseInfo& d = dense_[node.dense];
        const Mat& in = acts_[node.a];
        const double* w = params_.data() + d.w_offset;
        const double* b = params_.data() + d.b_offset;
        for (int r = 0; r < rows; ++r) {
          const double* src = in.row(r);
          double* dst = out.row(r);
          for (int o = 0; o < d.out; ++o) {
            const double* wr = w + static_cast<std::size_t>(o) * d.in;
            double acc = b[o];
            for (int i = 0; i < d.in; ++i) acc += wr[i] * src[i];
            dst[o] = d.act == Activation::Sigmoid ? 1.0 / (1.0 + std::exp(-acc)) : acc;
          }
        }
        break;
      }
      case Kind::Slice: {
        const Mat& in = acts_[node.a];
        for (int r = 0; r < rows; ++r) {
          const double* src = in.row(r) + node.offset;
          double* dst = out.row(r);
          for (int j = 0; j < node.width; ++j) dst[j] = src[j];
        }
        break;
      }
      case Kind::Multiply: {
        const Mat& a = acts_[node.a];
        const Mat& b = acts_[node.b];
        for (int r = 0; r < rows; ++r) {
          const double* pa = a.row(r);
          const double* pb = b.row(r);
          double* dst = out.row(r);
          for (int j = 0; j < node.width; ++j) dst[j] = pa[j] * pb[j];
        }
        break;
      }
      case Kind::Concat: {
        const Mat& a = acts_[node.a];
        const Mat& b = acts_[node.b];
        const int wa = nodes_[node.a].width;
        for (int r = 0; r < rows; ++r) {
          double* dst = out.row(r);
          std::copy_n(a.row(r), wa, dst);
          std::copy_n(b.row(r), node.width - wa, dst + wa);
        }
        break;
      }
    }
  }

  const Mat& logits = acts_[logits_node_];
  const int k = logits.cols;
  for (int r = 0; r < rows; ++r) {
    const double* z = logits.row(r);
    double* p = probs_.row(r);
    double mx = z[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, z[j]);
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      p[j] = std::exp(z[j] - mx);
      sum += p[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < k; ++j) p[j] *= inv;
  }
}

const Mat& Network::tap_activation(const std::string& tap) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].tap == tap) return acts_[i];
  }
  throw ValidationError("unknown tap '" + tap + "'");
}

double Network::mean_loss(const std::uint8_t* targets, int rows) const {
  check_finalized();
  double sum = 0.0;
  for (int r = 0; r < rows; ++r) {
    sum -= std::log(probs_.at(r, targets[r]));
  }
  return sum / rows;
}

int Network::predicted(int row) const {
  const double* p = probs_.row(row);
  int best = 0;
  for (int j = 1; j < probs_.cols; ++j) {
    if (p[j] > p[best]) best = j;
  }
  return best;
}

int Network::correct_count(const std::uint8_t* targets, int rows) const {
  int correct = 0;
  for (int r = 0; r < rows; ++r) {
    correct += predicted(r) == targets[r];
  }
  return correct;
}

void Network::backward(const std::uint8_t* x, const std::uint8_t* targets, int rows) {
  check_finalized();
  if (rows != rows_) throw ValidationError("backward without matching forward");
  std::fill(grads_.begin(), grads_.end(), 0.0);
  for (Mat& d : dacts_) d.zero();

  // Fused softmax + cross-entropy: dLogits = (probs - onehot) / rows.
  {
    Mat& dl = dacts_[logits_node_];
    const double inv = 1.0 / rows;
    for (int r = 0; r < rows; ++r) {
      const double* p = probs_.row(r);
      double* d = dl.row(r);
      for (int j = 0; j < dl.cols; ++j) d[j] = p[j] * inv;
      d[targets[r]] -= inv;
    }
  }

  for (int ni = static_cast<int>(nodes_.size()) - 1; ni >= 0; --ni) {
    const Node& node = nodes_[ni];
    Mat& dout = dacts_[ni];
    switch (node.kind) {
      case Kind::Input:
        break;
      case Kind::Dense: {
        const DenseInfo& d = dense_[node.dense];
        const Mat& in = acts_[node.a];
        const Mat& out = acts_[ni];
        Mat& din = dacts_[node.a];
        double* gw = grads_.data() + d.w_offset;
        double* gb = grads_.data() + d.b_offset;
        const double* w = params_.data() + d.w_offset;
        for (int r = 0; r < rows; ++r) {
          double* dpre = dout.row(r);
          if (d.act == Activation::Sigmoid) {
            const double* a = out.row(r);
            for (int o = 0; o < d.out; ++o) dpre[o] *= a[o] * (1.0 - a[o]);
          }
          const double* src = in.row(r);
          double* dsrc = din.row(r);
          for (int o = 0; o < d.out; ++o) {
            const double g = dpre[o];
            if (g == 0.0) continue;
            double* gwr = gw + static_cast<std::size_t>(o) * d.in;
            const double* wr = w + static_cast<std::size_t>(o) * d.in;
            for (int i = 0; i < d.in; ++i) {
              gwr[i] += g * src[i];
              dsrc[i] += g * wr[i];
            }
            gb[o] += g;
          }
        }
        break;
      }
      case Kind::Slice: {
        Mat& din = dacts_[node.a];
        for (int r = 0; r < rows; ++r) {
          const double* d = dout.row(r);
          double* dst = din.row(r) + node.offset;
          for (int j = 0; j < node.width; ++j) dst[j] += d[j];
        }
        break;
      }
      case Kind::Multiply: {
        const Mat& a = acts_[node.a];
        const Mat& b = acts_[node.b];
        Mat& da = dacts_[node.a];
        Mat& db = dacts_[node.b];
        for (int r = 0; r < rows; ++r) {
          const double* d = dout.row(r);
          const double* pa = a.row(r);
          const double* pb = b.row(r);
          double* ga = da.row(r);
          double* gb2 = db.row(r);
          for (int j = 0; j < node.width; ++j) {
            ga[j] += d[j] * pb[j];
            gb2[j] += d[j] * pa[j];
          }
        }
        break;
      }
      case Kind::Concat: {
        Mat& da = dacts_[node.a];
        Mat& db = dacts_[node.b];
        const int wa = nodes_[node.a].width;
        const int wb = node.width - wa;
        for (int r = 0; r < rows; ++r) {
          const double* d = dout.row(r);
          double* ga = da.row(r);
          double* gb2 = db.row(r);
          for (int j = 0; j < wa; ++j) ga[j] += d[j];
          for (int j = 0; j < wb; ++j) gb2[j] += d[wa + j];
        }
        break;
      }
    }
  }
  (void)x;
}

Adam::Adam(std::size_t n, AdamConfig cfg)
    : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

void Adam::reset() {
  std::fill(m_.begin(), m_.end(), 0.0);
  std::fill(v_.begin(), v_.end(), 0.0);
  t_ = 0;
}

void Adam::step(std::vector<double>& params, const std::vector<double>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ValidationError("adam state size mismatch");
  }
  ++t_;
  const double b1t = std::pow(cfg_.beta1, static_cast<double>(t_));
  const double b2t = std::pow(cfg_.beta2, static_cast<double>(t_));
  const double alpha = cfg_.lr * std::sqrt(1.0 - b2t) / (1.0 - b1t);
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = grads[i];
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
    params[i] -= alpha * m_[i] / (std::sqrt(v_[i]) + cfg_.eps);
  }
}

}  // namespace cogflex
