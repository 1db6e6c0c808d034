#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gckan/common.hpp"
#include "gckan/spline.hpp"

namespace gckan {

/// One KAN layer. Every edge (i <- j) carries the learnable scalar function
///   phi_ij(x) = w_base(i,j) * silu(x) + w_spline(i,j) * sum_c coeffs(i,j,c) * B_c(x)
/// with a knot grid shared by all edges of the layer. Neuron i outputs the
/// plain sum of its incoming edge activations; there are no bias terms.
struct KanLayer {
  int n_in = 0;
  int n_out = 0;
  Matrix w_base;    // n_out x n_in
  Matrix w_spline;  // n_out x n_in
  Matrix coeffs;    // (n_in * n_out) x C, row j * n_out + i holds edge (i <- j)
  SplineGrid grid;

  int coeff_row(int i, int j) const { return j * n_out + i; }

  /// Contiguous coefficient block for all edges leaving input j (n_out x C).
  auto coeff_block(int j) const { return coeffs.middleRows(j * n_out, n_out); }
  auto coeff_block(int j) { return coeffs.middleRows(j * n_out, n_out); }

  void check() const {
    if (n_in < 1 || n_out < 1) throw ShapeError("KanLayer: widths must be positive");
    const int c = grid.num_basis();
    if (w_base.rows() != n_out || w_base.cols() != n_in || w_spline.rows() != n_out ||
        w_spline.cols() != n_in || coeffs.rows() != n_in * n_out || coeffs.cols() != c)
      throw ShapeError("KanLayer: parameter shapes inconsistent with n_in/n_out/grid");
    if (!w_base.allFinite() || !w_spline.allFinite() || !coeffs.allFinite())
      throw NumericError("KanLayer: non-finite parameter");
  }
};

/// Stack of KAN layers; one network per target series, final width 1.
struct KanNetwork {
  std::vector<KanLayer> layers;

  int input_width() const { return layers.empty() ? 0 : layers.front().n_in; }
  int output_width() const { return layers.empty() ? 0 : layers.back().n_out; }

  std::vector<int> widths() const {
    std::vector<int> w;
    if (layers.empty()) return w;
    w.push_back(layers.front().n_in);
    for (const KanLayer& l : layers) w.push_back(l.n_out);
    return w;
  }

  void check() const {
    if (layers.empty()) throw ShapeError("KanNetwork: no layers");
    for (std::size_t l = 0; l + 1 < layers.size(); ++l)
      if (layers[l].n_out != layers[l + 1].n_in)
        throw ShapeError("KanNetwork: width mismatch between layers " + std::to_string(l) +
                         " and " + std::to_string(l + 1));
    if (layers.back().n_out != 1) throw ShapeError("KanNetwork: final output width must be 1");
    for (const KanLayer& l : layers) l.check();
  }

  /// widths = [n_in, hidden..., 1]. First layer: w_base ~ U(-1,1)/sqrt(n_in),
  /// spline coefficients ~ N(0, 0.1^2). Deeper layers are deterministic
  /// (w_base = 1, coefficients = 0): the path from every hidden unit to the
  /// output then starts with the same healthy SiLU slope for every target.
  /// With a random outer path, the proximal step can wipe out the first layer
  /// before the outer layers develop any slope, and the network never
  /// recovers; the collapse point then varies wildly across targets, which
  /// ruins the proximal-strength sweep. w_spline = 1 everywhere.
  static KanNetwork make(const std::vector<int>& widths, const SplineGrid& grid,
                         std::uint64_t seed) {
    if (widths.size() < 2) throw ConfigError("KanNetwork: need at least input and output width");
    KanNetwork net;
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 0.1);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      KanLayer layer;
      layer.n_in = widths[l];
      layer.n_out = widths[l + 1];
      layer.grid = grid;
      const double scale = 1.0 / std::sqrt(static_cast<double>(layer.n_in));
      if (l == 0) {
        layer.w_base = Matrix::NullaryExpr(layer.n_out, layer.n_in,
                                           [&]() { return scale * unit(rng); });
        layer.coeffs = Matrix::NullaryExpr(layer.n_in * layer.n_out, grid.num_basis(),
                                           [&]() { return gauss(rng); });
      } else {
        layer.w_base = Matrix::Ones(layer.n_out, layer.n_in);
        layer.coeffs = Matrix::NullaryExpr(layer.n_in * layer.n_out, grid.num_basis(),
                                           [&]() { return gauss(rng); });
      }
      layer.w_spline = Matrix::Ones(layer.n_out, layer.n_in);
      net.layers.push_back(std::move(layer));
    }
    net.check();
    return net;
  }
};

/// Everything about a layer input that does not depend on the parameters.
/// For the first layer of a full-batch fit the input never changes, so this
/// is built once and shared (read-only) across epochs, targets and threads.
struct LayerCache {
  Matrix sig;                 // B x n_in: silu(x)
  std::vector<Matrix> basis;  // per input j: B x C
  // populated only when the layer needs gradients w.r.t. its input (depth > 0)
  Matrix dsig;                 // B x n_in: silu'(x)
  Matrix in_range;             // B x n_in: 1.0 where x inside the grid range
  std::vector<Matrix> dbasis;  // per input j: B x C

  int batch() const { return static_cast<int>(sig.rows()); }
};

inline LayerCache make_layer_cache(const SplineGrid& grid, const Matrix& x, bool need_input_grad) {
  if (!x.allFinite()) throw InputError("forward: non-finite entry in batch");
  const int b = static_cast<int>(x.rows());
  const int n_in = static_cast<int>(x.cols());
  const int c = grid.num_basis();
  const int k = grid.degree();
  LayerCache cache;
  cache.sig.resize(b, n_in);
  cache.basis.assign(static_cast<std::size_t>(n_in), Matrix::Zero(b, c));
  if (need_input_grad) {
    cache.dsig.resize(b, n_in);
    cache.in_range.resize(b, n_in);
    cache.dbasis.assign(static_cast<std::size_t>(n_in), Matrix::Zero(b, c));
  }
  double vals[16], dvals[16];
  for (int j = 0; j < n_in; ++j) {
    Matrix& bj = cache.basis[static_cast<std::size_t>(j)];
    for (int s = 0; s < b; ++s) {
      const double xs = x(s, j);
      cache.sig(s, j) = silu(xs);
      if (need_input_grad) {
        const int first = basis_nonzero(grid, xs, vals, dvals);
        Matrix& dbj = cache.dbasis[static_cast<std::size_t>(j)];
        for (int r = 0; r <= k; ++r) {
          bj(s, first + r) = vals[r];
          dbj(s, first + r) = dvals[r];
        }
        cache.dsig(s, j) = silu_prime(xs);
        cache.in_range(s, j) = grid.in_range(xs) ? 1.0 : 0.0;
      } else {
        const int first = basis_nonzero(grid, xs, vals);
        for (int r = 0; r <= k; ++r) bj(s, first + r) = vals[r];
      }
    }
  }
  return cache;
}

/// Per-layer record of every edge activation, kept for the regularizers and
/// for contribution extraction. phi[j](s, i) is the activation of edge
/// (i <- j) at sample s; sp[j] is its spline part (needed for gradients).
struct LayerRecord {
  std::vector<Matrix> phi;
  std::vector<Matrix> sp;
  Matrix h;  // layer output, B x n_out
};

struct ForwardPass {
  std::vector<LayerRecord> layers;
  LayerCache cache0_storage;            // used when no shared first-layer cache given
  bool used_shared_cache0 = false;
  std::vector<LayerCache> deep_caches;  // caches for layers 1..L-1
  Vector predictions;

  int batch() const { return static_cast<int>(predictions.size()); }
};

namespace detail {

inline void layer_forward_core(const KanLayer& layer, const LayerCache& cache, LayerRecord& rec) {
  const int b = cache.batch();
  rec.phi.resize(static_cast<std::size_t>(layer.n_in));
  rec.sp.resize(static_cast<std::size_t>(layer.n_in));
  rec.h = Matrix::Zero(b, layer.n_out);
  for (int j = 0; j < layer.n_in; ++j) {
    Matrix& sp = rec.sp[static_cast<std::size_t>(j)];
    Matrix& phi = rec.phi[static_cast<std::size_t>(j)];
    sp.noalias() = cache.basis[static_cast<std::size_t>(j)] * layer.coeff_block(j).transpose();
    phi = cache.sig.col(j) * layer.w_base.col(j).transpose();
    phi.array() += sp.array().rowwise() * layer.w_spline.col(j).transpose().array();
    rec.h.noalias() += phi;
  }
}

[[noreturn]] inline void report_nonfinite(const LayerRecord& rec, int layer_index) {
  for (std::size_t j = 0; j < rec.phi.size(); ++j)
    for (int i = 0; i < rec.phi[j].cols(); ++i)
      for (int s = 0; s < rec.phi[j].rows(); ++s)
        if (!std::isfinite(rec.phi[j](s, i)))
          throw NumericError("forward: non-finite activation at layer " +
                             std::to_string(layer_index) + ", edge (" + std::to_string(i) +
                             " <- " + std::to_string(static_cast<int>(j)) + ")");
  throw NumericError("forward: non-finite output at layer " + std::to_string(layer_index));
}

}  // namespace detail

/// Output of a single layer for a given input block (composition property
/// and tests; the full forward below records activations as it goes).
inline Matrix layer_output(const KanLayer& layer, const Matrix& x) {
  if (x.cols() != layer.n_in) throw ShapeError("layer_output: batch width mismatch");
  LayerCache cache = make_layer_cache(layer.grid, x, false);
  LayerRecord rec;
  detail::layer_forward_core(layer, cache, rec);
  return rec.h;
}

/// Full forward pass. If cache0 is non-null it must have been built from
/// `batch` with make_layer_cache(first layer grid, batch, false); the same
/// pointer must later be handed to backward().
inline void forward(const KanNetwork& net, const Matrix& batch, ForwardPass& fp,
                    const LayerCache* cache0 = nullptr) {
  if (net.layers.empty()) throw ShapeError("forward: empty network");
  if (batch.cols() != net.input_width())
    throw ShapeError("forward: batch width " + std::to_string(batch.cols()) +
                     " != network input width " + std::to_string(net.input_width()));
  const std::size_t n_layers = net.layers.size();
  fp.layers.resize(n_layers);
  fp.deep_caches.resize(n_layers > 0 ? n_layers - 1 : 0);
  fp.used_shared_cache0 = (cache0 != nullptr);
  if (cache0 == nullptr) {
    fp.cache0_storage = make_layer_cache(net.layers[0].grid, batch, false);
  }
  const LayerCache* cache = cache0 ? cache0 : &fp.cache0_storage;
  for (std::size_t l = 0; l < n_layers; ++l) {
    if (l > 0) {
      fp.deep_caches[l - 1] =
          make_layer_cache(net.layers[l].grid, fp.layers[l - 1].h, /*need_input_grad=*/true);
      cache = &fp.deep_caches[l - 1];
    }
    detail::layer_forward_core(net.layers[l], *cache, fp.layers[l]);
    if (!fp.layers[l].h.allFinite()) detail::report_nonfinite(fp.layers[l], static_cast<int>(l));
  }
  fp.predictions = fp.layers.back().h.col(0);
}

inline ForwardPass forward(const KanNetwork& net, const Matrix& batch) {
  ForwardPass fp;
  forward(net, batch, fp);
  return fp;
}

/// Gradient of the full loss w.r.t. every trainable parameter.
struct Gradients {
  struct Layer {
    Matrix w_base, w_spline, coeffs;
  };
  std::vector<Layer> layers;
};

/// Per-layer regularizer state: a(i,j) = |phi_ij|_1 (mean |activation| over
/// the batch), the layer L1 total, the layer entropy, and dS/da.
struct LayerRegState {
  Matrix a;    // n_out x n_in
  double l1 = 0.0;
  double entropy = 0.0;
  Matrix psi;  // n_out x n_in, dS/da (0 where a == 0)
};

inline LayerRegState make_reg_state(const LayerRecord& rec) {
  LayerRegState st;
  const int n_in = static_cast<int>(rec.phi.size());
  if (n_in == 0) throw ShapeError("reg_state: empty layer record");
  const int n_out = static_cast<int>(rec.phi[0].cols());
  const int b = static_cast<int>(rec.phi[0].rows());
  if (b == 0) throw InputError("reg_state: empty batch");
  st.a.resize(n_out, n_in);
  for (int j = 0; j < n_in; ++j)
    st.a.col(j) = rec.phi[static_cast<std::size_t>(j)].cwiseAbs().colwise().mean().transpose();
  st.l1 = st.a.sum();
  st.psi = Matrix::Zero(n_out, n_in);
  if (st.l1 > 0.0) {
    double s = 0.0;
    for (int j = 0; j < n_in; ++j)
      for (int i = 0; i < n_out; ++i) {
        const double p = st.a(i, j) / st.l1;
        if (p > 0.0) s -= p * std::log(p);
      }
    st.entropy = s;
    for (int j = 0; j < n_in; ++j)
      for (int i = 0; i < n_out; ++i) {
        const double p = st.a(i, j) / st.l1;
        if (p > 0.0) st.psi(i, j) = (-std::log(p) - s) / st.l1;
      }
  }
  return st;
}

inline std::vector<LayerRegState> make_reg_states(const ForwardPass& fp) {
  std::vector<LayerRegState> out;
  out.reserve(fp.layers.size());
  for (const LayerRecord& rec : fp.layers) out.push_back(make_reg_state(rec));
  return out;
}

/// Exact reverse-mode gradients of
///   (1/B) sum_s (pred_s - y_s)^2 + lambda * sum_layers (mu1 |Phi|_1 + mu2 S(Phi)).
/// |.| sub-terms use sign(0) = 0. cache0 must match the forward call.
inline Gradients backward(const KanNetwork& net, const ForwardPass& fp, const Vector& targets,
                          double lambda, double mu1, double mu2,
                          const LayerCache* cache0 = nullptr,
                          const std::vector<LayerRegState>* reg = nullptr) {
  if (fp.layers.size() != net.layers.size())
    throw ShapeError("backward: forward records missing or from a different network");
  if (fp.used_shared_cache0 != (cache0 != nullptr))
    throw ShapeError("backward: first-layer cache does not match the forward call");
  const int b = fp.batch();
  if (targets.size() != b) throw ShapeError("backward: target length != batch size");

  std::vector<LayerRegState> local_reg;
  if (lambda != 0.0 && reg == nullptr) {
    local_reg = make_reg_states(fp);
    reg = &local_reg;
  }

  Gradients g;
  g.layers.resize(net.layers.size());

  Matrix hhat = (2.0 / b) * (fp.predictions - targets);  // B x 1
  for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
    const KanLayer& layer = net.layers[static_cast<std::size_t>(l)];
    const LayerRecord& rec = fp.layers[static_cast<std::size_t>(l)];
    const LayerCache& cache = (l == 0) ? (cache0 ? *cache0 : fp.cache0_storage)
                                       : fp.deep_caches[static_cast<std::size_t>(l - 1)];
    Gradients::Layer& gl = g.layers[static_cast<std::size_t>(l)];
    gl.w_base.resize(layer.n_out, layer.n_in);
    gl.w_spline.resize(layer.n_out, layer.n_in);
    gl.coeffs.resize(layer.coeffs.rows(), layer.coeffs.cols());

    Matrix r;  // n_out x n_in: d(reg)/d(phi) prefactor before sign(phi)/B
    if (lambda != 0.0) {
      const LayerRegState& st = (*reg)[static_cast<std::size_t>(l)];
      r = lambda * (mu1 + (mu2 * st.psi).array()).matrix();
      // edges with a == 0 have every phi == 0; sign() kills the term, but the
      // psi convention there is 0, so r stays finite either way
    }

    Matrix xhat;
    if (l > 0) xhat = Matrix::Zero(b, layer.n_in);

    Matrix gphi;
    for (int j = 0; j < layer.n_in; ++j) {
      const Matrix& phi = rec.phi[static_cast<std::size_t>(j)];
      const Matrix& sp = rec.sp[static_cast<std::size_t>(j)];
      if (lambda != 0.0) {
        gphi = phi.array().sign().matrix();
        gphi.array().rowwise() *= (r.col(j).transpose().array() / b);
        gphi.noalias() += hhat;
      } else {
        gphi = hhat;
      }
      gl.w_base.col(j).noalias() = gphi.transpose() * cache.sig.col(j);
      gl.w_spline.col(j) = gphi.cwiseProduct(sp).colwise().sum().transpose();
      Matrix m = gphi.transpose() * cache.basis[static_cast<std::size_t>(j)];  // n_out x C
      m.array().colwise() *= layer.w_spline.col(j).array();
      gl.coeffs.middleRows(j * layer.n_out, layer.n_out) = m;
      if (l > 0) {
        Matrix spd = cache.dbasis[static_cast<std::size_t>(j)] * layer.coeff_block(j).transpose();
        xhat.col(j) = cache.dsig.col(j).cwiseProduct(gphi * layer.w_base.col(j)) +
                      cache.in_range.col(j).cwiseProduct(
                          gphi.cwiseProduct(spd) * layer.w_spline.col(j));
      }
    }
    if (l > 0) hhat = std::move(xhat);
  }
  return g;
}

}  // namespace gckan
