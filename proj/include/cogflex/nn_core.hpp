#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cogflex/matrix.hpp"
#include "cogflex/rng.hpp"

namespace cogflex {

enum class Activation { Sigmoid, Identity };

// Xavier/Glorot uniform fan-based init: U(-limit, limit) with
// limit = sqrt(6 / (fan_in + fan_out)), drawn row-major (out x in).
Mat xavier_uniform(int fan_in, int fan_out, Rng& rng);

struct DenseInfo {
  std::string name;
  int in = 0;
  int out = 0;
  Activation act = Activation::Sigmoid;
  std::size_t w_offset = 0;  // into the flat parameter vector, out*in values
  std::size_t b_offset = 0;  // out values
};

// Small feed-forward computation graph over binary input rows. Nodes are
// added in topological order; `finalize` fixes the graph and lays out one
// flat parameter vector (weights row-major, biases zero-initialized order
// preserved per dense layer). The final node holds logits; forward applies
// a row-wise softmax, and backward uses the fused softmax/cross-entropy
// gradient.
class Network {
 public:
  explicit Network(int input_width);

  // Reads columns [offset, offset+width) of every input row.
  int add_input(int offset, int width, std::string tap = "");
  int add_dense(int src, int out_width, Activation act, std::string name,
                std::string tap = "");
  int add_slice(int src, int offset, int width, std::string tap = "");
  int add_multiply(int a, int b, std::string tap = "");
  // Output is (a ++ b): the first argument occupies the leading columns.
  int add_concat(int a, int b, std::string tap = "");

  void finalize(int logits_node);

  int input_width() const { return input_width_; }
  int output_width() const;
  int node_width(int node) const;
  std::size_t param_count() const { return params_.size(); }
  const std::vector<DenseInfo>& dense_layers() const { return dense_; }
  std::vector<std::string> tap_names() const;

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  const std::vector<double>& grads() const { return grads_; }

  // Draws every dense layer in creation order from `rng`; biases zero.
  void init_params(Rng& rng);

  // x: rows * input_width values in {0, 1}, row-major.
  void forward(const std::uint8_t* x, int rows);
  const Mat& probs() const { return probs_; }
  const Mat& tap_activation(const std::string& tap) const;

  // Mean cross-entropy of the last forward against target hot indices.
  double mean_loss(const std::uint8_t* targets, int rows) const;
  // Arg-max prediction for a row of the last forward; ties take the lowest index.
  int predicted(int row) const;
  int correct_count(const std::uint8_t* targets, int rows) const;

  // Accumulates dLoss/dParams into grads() for the given batch (overwrites).
  void backward(const std::uint8_t* x, const std::uint8_t* targets, int rows);

 private:
  enum class Kind { Input, Dense, Slice, Multiply, Concat };
  struct Node {
    Kind kind;
    int a = -1;
    int b = -1;
    int dense = -1;  // index into dense_
    int offset = 0;
    int width = 0;
    std::string tap;
  };

  void check_building() const;
  void check_finalized() const;
  int add_node(Node node);
  void ensure_rows(int rows);

  int input_width_ = 0;
  bool finalized_ = false;
  int logits_node_ = -1;
  std::vector<Node> nodes_;
  std::vector<DenseInfo> dense_;
  std::vector<double> params_;
  std::vector<double> grads_;

  // Workspace, reused across batches.
  int rows_ = 0;
  std::vector<Mat> acts_;
  std::vector<Mat> dacts_;
  Mat probs_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

// Adam in the TensorFlow formulation: bias correction folded into the step
// size, epsilon applied to the uncorrected sqrt(v) denominator.
class Adam {
 public:
  explicit Adam(std::size_t n, AdamConfig cfg = {});

  void step(std::vector<double>& params, const std::vector<double>& grads);
  void reset();
  long long steps_taken() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  long long t_ = 0;
};

}  // namespace cogflex
