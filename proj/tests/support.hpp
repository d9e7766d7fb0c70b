#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "cann/io/features.hpp"
#include "cann/io/outfits.hpp"
#include "cann/numerics.hpp"

namespace cann::test {

inline nn::MatrixD random_matrix(Eigen::Index rows, Eigen::Index cols, nn::Rng& rng, double scale = 1.0) {
  nn::MatrixD m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

inline nn::Tensor random_tensor(Eigen::Index rows, Eigen::Index cols, nn::Rng& rng, bool requires_grad = true) {
  return nn::Tensor(random_matrix(rows, cols, rng), requires_grad);
}

/// Fixed random contraction u^T X v, so a matrix-valued output can be
/// checked through a scalar.
struct Projection {
  nn::Tensor u, v;

  Projection(Eigen::Index rows, Eigen::Index cols, nn::Rng& rng)
      : u(random_matrix(1, rows, rng), false), v(random_matrix(cols, 1, rng), false) {}

  nn::Tensor operator()(const nn::Tensor& x) const { return nn::matmul(nn::matmul(u, x), v); }
};

struct GradCheck {
  std::string name;
  double relative_error;
};

/// ||a - n|| / max(||a||, ||n||, 1e-4). The floor keeps gradients that are
/// identically zero (a bias ahead of batch norm) from comparing round-off;
/// for those the check becomes an absolute one, ||a - n|| <= 1e-8.
inline double relative_error(const nn::MatrixD& analytic, const nn::MatrixD& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-4});
  return (analytic - numeric).norm() / scale;
}

/// Compares backprop gradients of the scalar f() against central differences.
inline std::vector<GradCheck> check_gradients(const std::function<nn::Tensor()>& f,
                                              std::vector<std::pair<std::string, nn::Tensor>> wrt,
                                              double step = 1e-5) {
  for (auto& [_, t] : wrt) t.zero_grad();
  f().backward();
  std::vector<GradCheck> out;
  for (auto& [name, t] : wrt) {
    const nn::MatrixD analytic = t.grad();
    nn::MatrixD numeric(t.rows(), t.cols());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      double& w = t.mutable_value().data()[i];
      const double saved = w;
      w = saved + step;
      const double up = f().item();
      w = saved - step;
      const double down = f().item();
      w = saved;
      numeric.data()[i] = (up - down) / (2 * step);
    }
    out.push_back({name, relative_error(analytic, numeric)});
  }
  return out;
}

inline double worst(const std::vector<GradCheck>& checks) {
  double w = 0;
  for (const auto& c : checks) w = std::max(w, c.relative_error);
  return w;
}

/// Adds N(0, scale^2) noise to every parameter. Zero-initialized biases and
/// padding put ReLU inputs exactly on the kink, where differences are invalid.
inline void jitter(const nn::ParameterSet& params, nn::Rng& rng, double scale = 0.1) {
  for (const auto& p : params) {
    auto t = p.tensor;
    t.mutable_value() += random_matrix(t.rows(), t.cols(), rng, scale);
  }
}

inline std::vector<std::pair<std::string, nn::Tensor>> named(const nn::ParameterSet& params,
                                                             const std::string& prefix = "") {
  std::vector<std::pair<std::string, nn::Tensor>> out;
  for (const auto& p : params)
    if (p.name.rfind(prefix, 0) == 0) out.emplace_back(p.name, p.tensor);
  return out;
}

/// `n` outfits of `items` items each, drawn from categories cat0..cat{items-1}.
inline std::vector<io::OutfitRecord> synthetic_outfits(int n, int items, const std::string& tag = "o") {
  std::vector<io::OutfitRecord> out;
  for (int o = 0; o < n; ++o) {
    io::OutfitRecord rec;
    rec.outfit_id = tag + std::to_string(o);
    for (int i = 0; i < items; ++i)
      rec.items.push_back({rec.outfit_id + "_i" + std::to_string(i), "cat" + std::to_string(i), ""});
    out.push_back(std::move(rec));
  }
  return out;
}

inline std::vector<std::string> item_ids(const std::vector<io::OutfitRecord>& outfits) {
  std::vector<std::string> ids;
  for (const auto& o : outfits)
    for (const auto& item : o.items) ids.push_back(item.item_id);
  return ids;
}

}  // namespace cann::test
