#pragma once

// Fully connected tanh network with a linear output layer, batched over
// columns, with hand-written reverse-mode gradients.

#include <random>
#include <vector>

#include <json.hpp>

#include "aspace/common.hpp"

namespace aspace {

struct Mlp {
  std::vector<Mat> W;  // W[l] is out_l x in_l
  std::vector<Vec> b;

  struct Cache {
    std::vector<Mat> act;  // act[0] = input, act[l + 1] = output of layer l
  };

  template <class Rng>
  static Mlp make(int in, const std::vector<int>& hidden, int out, Rng& rng,
                  double out_gain = 1.0) {
    Mlp m;
    std::vector<int> sizes{in};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(out);
    std::normal_distribution<double> n01(0.0, 1.0);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      const double gain = l + 2 == sizes.size() ? out_gain : 1.0;
      const double s = gain / std::sqrt(static_cast<double>(sizes[l]));
      Mat w(sizes[l + 1], sizes[l]);
      for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = s * n01(rng);
      m.W.push_back(std::move(w));
      m.b.push_back(Vec::Zero(sizes[l + 1]));
    }
    return m;
  }

  int layers() const { return static_cast<int>(W.size()); }
  int in_dim() const { return static_cast<int>(W.front().cols()); }
  int out_dim() const { return static_cast<int>(W.back().rows()); }

  std::vector<int> hidden() const {
    std::vector<int> h;
    for (int l = 0; l + 1 < layers(); ++l) h.push_back(static_cast<int>(W[l].rows()));
    return h;
  }

  Mlp zeros_like() const {
    Mlp z = *this;
    for (auto& w : z.W) w.setZero();
    for (auto& v : z.b) v.setZero();
    return z;
  }

  Mat forward(const Mat& x, Cache* cache = nullptr) const {
    if (x.rows() != in_dim()) throw DimensionError("mlp input rows");
    if (cache) {
      cache->act.clear();
      cache->act.push_back(x);
    }
    Mat h = x;
    for (int l = 0; l < layers(); ++l) {
      Mat z = W[l] * h;
      z.colwise() += b[l];
      h = l + 1 < layers() ? Mat(z.array().tanh()) : z;
      if (cache) cache->act.push_back(h);
    }
    return h;
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Cache& cache, const Mat& d_out, Mlp& grad) const {
    Mat delta = d_out;
    for (int l = layers() - 1; l >= 0; --l) {
      if (l + 1 < layers()) {
        delta = delta.cwiseProduct((1.0 - cache.act[l + 1].array().square()).matrix());
      }
      grad.W[l].noalias() += delta * cache.act[l].transpose();
      grad.b[l] += delta.rowwise().sum();
      if (l > 0) delta = W[l].transpose() * delta;
    }
  }

  int num_params() const {
    int n = 0;
    for (int l = 0; l < layers(); ++l) n += static_cast<int>(W[l].size() + b[l].size());
    return n;
  }

  /// Appends all parameters to `out` starting at `offset`; returns the new offset.
  int flatten_into(Vec& out, int offset) const {
    for (int l = 0; l < layers(); ++l) {
      out.segment(offset, W[l].size()) = Eigen::Map<const Vec>(W[l].data(), W[l].size());
      offset += static_cast<int>(W[l].size());
      out.segment(offset, b[l].size()) = b[l];
      offset += static_cast<int>(b[l].size());
    }
    return offset;
  }

  int assign_from(const Vec& in, int offset) {
    for (int l = 0; l < layers(); ++l) {
      Eigen::Map<Vec>(W[l].data(), W[l].size()) = in.segment(offset, W[l].size());
      offset += static_cast<int>(W[l].size());
      b[l] = in.segment(offset, b[l].size());
      offset += static_cast<int>(b[l].size());
    }
    return offset;
  }
};

inline nlohmann::json to_json(const Mlp& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (int l = 0; l < m.layers(); ++l) {
    const Mat& w = m.W[l];
    layers.push_back({{"rows", w.rows()},
                      {"cols", w.cols()},
                      {"w", std::vector<double>(w.data(), w.data() + w.size())},
                      {"b", std::vector<double>(m.b[l].data(), m.b[l].data() + m.b[l].size())}});
  }
  return layers;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp m;
  for (const auto& layer : j) {
    const int rows = layer.at("rows"), cols = layer.at("cols");
    const auto w = layer.at("w").get<std::vector<double>>();
    const auto b = layer.at("b").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != rows * cols || static_cast<int>(b.size()) != rows) {
      throw std::invalid_argument("mlp layer size mismatch");
    }
    m.W.push_back(Eigen::Map<const Mat>(w.data(), rows, cols));
    m.b.push_back(Eigen::Map<const Vec>(b.data(), rows));
  }
  for (int l = 1; l < m.layers(); ++l) {
    if (m.W[l].cols() != m.W[l - 1].rows()) throw std::invalid_argument("mlp layers do not chain");
  }
  if (m.W.empty()) throw std::invalid_argument("mlp has no layers");
  return m;
}

}  // namespace aspace
