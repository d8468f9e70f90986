// Generates the bundled controller weight files deterministically.
//
// None of the reference controllers for these plants are published, so the
// repo carries its own: each network imitates a stabilizing linear state
// feedback law by construction (closed-form, no training run). Layer scales
// are chosen so pre-activations stay small over the benchmark regions, which
// keeps the activation sectors tight enough to certify. The exact output
// scaling is computed here from the network's own Jacobian at the origin, so
// regenerating the files is reproducible bit for bit.

#include <cstdio>
#include <string>
#include <vector>

#include "nnsos/nn.hpp"

using namespace nnsos;

namespace {

Mat mat(std::vector<std::vector<double>> rows) {
  Mat m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
  return m;
}

// Jacobian of the network at the origin (tanh slope 1, ReLU handled upstream).
Mat origin_jacobian(const std::vector<Mat>& ws) {
  Mat J = ws.front();
  for (std::size_t k = 1; k < ws.size(); ++k) J = matmul(ws[k], J);
  return J;
}

void write_net(const std::string& path, const std::vector<Mat>& ws,
               Activation act) {
  std::vector<Layer> hidden;
  for (std::size_t k = 0; k + 1 < ws.size(); ++k)
    hidden.push_back({ws[k], Vec(static_cast<std::size_t>(ws[k].rows), 0.0)});
  Layer out{ws.back(), Vec(static_cast<std::size_t>(ws.back().rows), 0.0)};
  NeuralNetwork nn(hidden, out, act);
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error("cannot write " + path);
  std::string text = nn.to_json_text();
  std::fwrite(text.data(), 1, text.size(), f);
  std::fputc('\n', f);
  std::fclose(f);
  std::printf("wrote %s\n", path.c_str());
}

// Duffing: 2 hidden ReLU layers x 2 nodes. The positive/negative channel
// pair carries k.z through both layers, so the network realizes an
// approximately linear law u = -(0.5 z1 + 0.5 z2) with mild PWL distortion
// from the off-unit weights.
void make_duffing(const std::string& dir) {
  std::vector<Mat> ws = {
      mat({{0.52, 0.47}, {-0.48, -0.53}}),
      mat({{0.96, -1.02}, {-1.04, 0.99}}),
      mat({{-0.98, 1.01}}),
  };
  write_net(dir + "/duffing_relu.json", ws, Activation::ReLU);
}

// Three-state plant: 5 hidden tanh layers x 5 nodes. The first layer reads
// mostly z3 with small scales (pre-activations stay within ~0.24 over the
// half-width-3 cube), the middle layers are near-identity channels, and the
// output is rescaled against the origin Jacobian to hit du/dz3 = -2.9.
void make_threestate(const std::string& dir) {
  std::vector<Mat> ws;
  ws.push_back(mat({{0.004, 0.002, 0.060},
                    {-0.002, 0.004, 0.072},
                    {0.006, -0.004, 0.066},
                    {0.002, 0.001, -0.054},
                    {-0.004, 0.002, 0.048}}));
  auto mid = [](double d, double m) {
    return mat({{d, m, 0, 0, -m},
                {m, d, -m, 0, 0},
                {0, m, d, m, 0},
                {0, 0, -m, d, m},
                {m, 0, 0, m, d}});
  };
  ws.push_back(mid(0.90, 0.02));
  ws.push_back(mid(0.92, -0.015));
  ws.push_back(mid(0.91, 0.018));
  ws.push_back(mid(0.93, 0.012));
  ws.push_back(mat({{-1.0, -1.0, -1.0, 1.0, -1.0}}));
  Mat J = origin_jacobian(ws);
  double scale = -2.9 / J.at(0, 2);
  for (auto& v : ws.back().a) v *= scale;
  J = origin_jacobian(ws);
  std::printf("threestate origin gains: %.4f %.4f %.4f\n", J.at(0, 0),
              J.at(0, 1), J.at(0, 2));
  write_net(dir + "/threestate_tanh.json", ws, Activation::Tanh);
}

// Pendulum: 2 hidden tanh layers x 4 nodes reading (theta, theta_dot) with
// small scales; output rescaled to the law u = -(1.7 theta + 0.3 theta_dot),
// which keeps |u| below the 1 Nm saturation bound over the benchmark box.
void make_pendulum(const std::string& dir) {
  std::vector<Mat> ws;
  ws.push_back(mat({{0.30, 0.055},
                    {-0.28, -0.050},
                    {0.26, 0.048},
                    {-0.32, -0.060}}));
  ws.push_back(mat({{0.85, -0.80, 0.78, -0.82},
                    {-0.80, 0.84, -0.76, 0.80},
                    {0.82, -0.78, 0.86, -0.84},
                    {-0.78, 0.82, -0.80, 0.88}}));
  ws.push_back(mat({{-1.0, 1.0, -1.0, 1.0}}));
  Mat J = origin_jacobian(ws);
  double scale = -1.7 / J.at(0, 0);
  for (auto& v : ws.back().a) v *= scale;
  J = origin_jacobian(ws);
  std::printf("pendulum origin gains: %.4f %.4f\n", J.at(0, 0), J.at(0, 1));
  write_net(dir + "/pendulum_tanh.json", ws, Activation::Tanh);
}

// Negative control: a network that outputs exactly zero.
void make_zero(const std::string& dir) {
  std::vector<Mat> ws = {mat({{0.0}}), mat({{0.0}})};
  write_net(dir + "/zero_nn.json", ws, Activation::Tanh);
}

}  // namespace

int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "benchmarks";
  make_duffing(dir);
  make_threestate(dir);
  make_pendulum(dir);
  make_zero(dir);
  return 0;
}
