#include "nnsos/nn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nnsos {

namespace {

double activate(Activation a, double v) {
  return a == Activation::ReLU ? std::max(0.0, v) : std::tanh(v);
}

}  // namespace

NeuralNetwork::NeuralNetwork(std::vector<Layer> hidden, Layer output,
                             Activation act)
    : hidden_(std::move(hidden)), output_(std::move(output)), act_(act) {
  if (hidden_.empty()) throw Error("network needs at least one hidden layer");
  int width = hidden_.front().W.cols;
  for (std::size_t k = 0; k < hidden_.size(); ++k) {
    const Layer& L = hidden_[k];
    if (L.W.cols != width)
      throw Error("layer " + std::to_string(k) + " input width " +
                  std::to_string(L.W.cols) + " does not chain with " +
                  std::to_string(width));
    if (static_cast<int>(L.b.size()) != L.W.rows)
      throw Error("layer bias length mismatch");
    width = L.W.rows;
  }
  if (output_.W.cols != width) throw Error("output layer width does not chain");
  if (static_cast<int>(output_.b.size()) != output_.W.rows)
    throw Error("output bias length mismatch");
}

int NeuralNetwork::input_dim() const { return hidden_.front().W.cols; }
int NeuralNetwork::output_dim() const { return output_.W.rows; }

int NeuralNetwork::hidden_node_count() const {
  int n = 0;
  for (auto& L : hidden_) n += L.W.rows;
  return n;
}

NeuralNetwork NeuralNetwork::load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open network file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_json_text(ss.str());
}

NeuralNetwork NeuralNetwork::load_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(std::string("network JSON parse error: ") + e.what());
  }
  if (!j.contains("layers") || !j["layers"].is_array() || j["layers"].empty())
    throw Error("network JSON needs a non-empty 'layers' array");
  std::string act = j.value("activation", "");
  Activation a;
  if (act == "relu") {
    a = Activation::ReLU;
  } else if (act == "tanh") {
    a = Activation::Tanh;
  } else {
    throw Error("network activation must be 'relu' or 'tanh', got '" + act + "'");
  }
  std::vector<Layer> layers;
  for (auto& lj : j["layers"]) {
    if (!lj.contains("W") || !lj.contains("b"))
      throw Error("each layer needs 'W' and 'b'");
    auto& Wj = lj["W"];
    if (!Wj.is_array() || Wj.empty()) throw Error("layer W must be a matrix");
    int rows = static_cast<int>(Wj.size());
    int cols = static_cast<int>(Wj[0].size());
    Mat W(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (static_cast<int>(Wj[i].size()) != cols)
        throw Error("ragged layer matrix");
      for (int c = 0; c < cols; ++c) W.at(i, c) = Wj[i][c].get<double>();
    }
    Vec b = lj["b"].get<Vec>();
    if (static_cast<int>(b.size()) != rows)
      throw Error("layer bias length mismatch");
    layers.push_back({std::move(W), std::move(b)});
  }
  if (layers.size() < 2)
    throw Error("network needs at least one hidden layer plus the affine output");
  Layer out = std::move(layers.back());
  layers.pop_back();
  return NeuralNetwork(std::move(layers), std::move(out), a);
}

std::string NeuralNetwork::to_json_text() const {
  nlohmann::ordered_json j;
  j["activation"] = act_ == Activation::ReLU ? "relu" : "tanh";
  j["layers"] = nlohmann::ordered_json::array();
  auto layer_json = [](const Layer& L) {
    nlohmann::ordered_json lj;
    lj["W"] = nlohmann::ordered_json::array();
    for (int i = 0; i < L.W.rows; ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (int c = 0; c < L.W.cols; ++c) row.push_back(L.W.at(i, c));
      lj["W"].push_back(row);
    }
    lj["b"] = L.b;
    return lj;
  };
  for (auto& L : hidden_) j["layers"].push_back(layer_json(L));
  j["layers"].push_back(layer_json(output_));
  return j.dump(2);
}

NeuralNetwork NeuralNetwork::with_shifted_output_bias() const {
  Vec zero(static_cast<std::size_t>(input_dim()), 0.0);
  Vec u0 = forward(zero).output;
  Layer out = output_;
  for (std::size_t i = 0; i < out.b.size(); ++i) out.b[i] -= u0[i];
  return NeuralNetwork(hidden_, std::move(out), act_);
}

NeuralNetwork::ForwardTrace NeuralNetwork::forward(
    std::span<const double> z) const {
  if (static_cast<int>(z.size()) != input_dim())
    throw Error("forward pass dimension mismatch: got " +
                std::to_string(z.size()) + ", expected " +
                std::to_string(input_dim()));
  ForwardTrace t;
  Vec x(z.begin(), z.end());
  for (auto& L : hidden_) {
    Vec v = matvec(L.W, x);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += L.b[i];
    Vec post(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) post[i] = activate(act_, v[i]);
    t.pre.push_back(v);
    t.post.push_back(post);
    x = std::move(post);
  }
  t.output = matvec(output_.W, x);
  for (std::size_t i = 0; i < t.output.size(); ++i) t.output[i] += output_.b[i];
  return t;
}

void Box::check() const {
  if (lower.size() != upper.size()) throw Error("box bound lengths differ");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i])
      throw Error("box lower bound exceeds upper bound at index " +
                  std::to_string(i));
}

bool Box::contains_origin_strictly() const {
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < 0.0 && 0.0 < upper[i])) return false;
  return true;
}

Box Box::shrunk(double factor) const {
  Box out = *this;
  for (auto& v : out.lower) v *= factor;
  for (auto& v : out.upper) v *= factor;
  return out;
}

IbpBounds ibp(const NeuralNetwork& nn, const Box& region) {
  region.check();
  if (region.dim() != nn.input_dim())
    throw Error("IBP region dimension mismatch");
  IbpBounds out;
  Vec lo = region.lower, hi = region.upper;
  for (auto& L : nn.hidden_layers()) {
    std::vector<Interval> pre(L.W.rows), post(L.W.rows);
    Vec nlo(L.W.rows), nhi(L.W.rows);
    for (int i = 0; i < L.W.rows; ++i) {
      double a = L.b[i], b = L.b[i];
      for (int j = 0; j < L.W.cols; ++j) {
        double w = L.W.at(i, j);
        if (w >= 0) {
          a += w * lo[j];
          b += w * hi[j];
        } else {
          a += w * hi[j];
          b += w * lo[j];
        }
      }
      pre[i] = {a, b};
      double pa = activate(nn.activation(), a);
      double pb = activate(nn.activation(), b);
      post[i] = {pa, pb};  // activations are monotone
      nlo[i] = pa;
      nhi[i] = pb;
    }
    out.pre.push_back(std::move(pre));
    out.post.push_back(std::move(post));
    lo = std::move(nlo);
    hi = std::move(nhi);
  }
  const Layer& L = nn.output_layer();
  out.output.resize(L.W.rows);
  for (int i = 0; i < L.W.rows; ++i) {
    double a = L.b[i], b = L.b[i];
    for (int j = 0; j < L.W.cols; ++j) {
      double w = L.W.at(i, j);
      if (w >= 0) {
        a += w * lo[j];
        b += w * hi[j];
      } else {
        a += w * hi[j];
        b += w * lo[j];
      }
    }
    out.output[i] = {a, b};
  }
  return out;
}

EquilibriumReport check_equilibrium(const NeuralNetwork& nn,
                                    std::span<const Polynomial> dynamics,
                                    std::span<const VarId> state_vars,
                                    std::span<const VarId> input_vars,
                                    std::size_t space_size, double tol) {
  Vec zero(static_cast<std::size_t>(nn.input_dim()), 0.0);
  Vec u0 = nn.output(zero);
  if (u0.size() != input_vars.size())
    throw Error("network output dimension does not match input variables");
  Vec point(space_size, 0.0);
  for (std::size_t i = 0; i < input_vars.size(); ++i)
    point[input_vars[i].index] = u0[i];
  (void)state_vars;  // states sit at zero in `point` already
  double worst = 0.0;
  for (auto& f : dynamics)
    worst = std::max(worst, std::abs(f.evaluate(point)));
  EquilibriumReport rep;
  rep.residual = worst;
  rep.pass = worst <= tol;
  return rep;
}

}  // namespace nnsos
