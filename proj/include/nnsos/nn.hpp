#pragma once

#include <string>
#include <vector>

#include "nnsos/linalg.hpp"
#include "nnsos/poly.hpp"

namespace nnsos {

enum class Activation { ReLU, Tanh };

struct Layer {
  Mat W;  // n_out x n_in
  Vec b;  // n_out
};

// Feed-forward fully-connected controller: hidden layers share one activation,
// the final layer is affine. Immutable after load.
class NeuralNetwork {
 public:
  NeuralNetwork(std::vector<Layer> hidden, Layer output, Activation act);

  static NeuralNetwork load_json_file(const std::string& path);
  static NeuralNetwork load_json_text(const std::string& text);
  std::string to_json_text() const;

  int input_dim() const;
  int output_dim() const;
  int num_hidden_layers() const { return static_cast<int>(hidden_.size()); }
  int layer_width(int k) const { return hidden_[k].W.rows; }
  int hidden_node_count() const;
  Activation activation() const { return act_; }
  const std::vector<Layer>& hidden_layers() const { return hidden_; }
  const Layer& output_layer() const { return output_; }

  // Subtracts pi(0) from the output bias so the controller fixes the origin.
  NeuralNetwork with_shifted_output_bias() const;

  struct ForwardTrace {
    std::vector<Vec> pre;   // v^k per hidden layer
    std::vector<Vec> post;  // x^{k+1} per hidden layer
    Vec output;             // pi(z)
  };
  ForwardTrace forward(std::span<const double> z) const;
  Vec output(std::span<const double> z) const { return forward(z).output; }

 private:
  std::vector<Layer> hidden_;
  Layer output_;
  Activation act_;
};

struct Box {
  Vec lower, upper;

  int dim() const { return static_cast<int>(lower.size()); }
  void check() const;  // lower <= upper, equal sizes
  bool contains_origin_strictly() const;
  Box shrunk(double factor) const;  // scaled about the origin
};

struct Interval {
  double lo = 0.0, hi = 0.0;
};

// Sound pre/post activation enclosures per hidden node, plus output bounds.
struct IbpBounds {
  std::vector<std::vector<Interval>> pre;   // [layer][node]
  std::vector<std::vector<Interval>> post;  // [layer][node]
  std::vector<Interval> output;
};

IbpBounds ibp(const NeuralNetwork& nn, const Box& region);

struct EquilibriumReport {
  double residual = 0.0;
  bool pass = false;
};

// Evaluates ||f(0, pi(0))||_inf. Variables of f not listed as state or input
// (recast variables, uncertainty) are taken at zero, which is their value at
// the origin for every supported recast rule.
EquilibriumReport check_equilibrium(const NeuralNetwork& nn,
                                    std::span<const Polynomial> dynamics,
                                    std::span<const VarId> state_vars,
                                    std::span<const VarId> input_vars,
                                    std::size_t space_size, double tol);

}  // namespace nnsos
