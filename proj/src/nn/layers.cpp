#include "naht/nn/layers.hpp"

#include <cmath>

#include "naht/error.hpp"

namespace naht::nn {
namespace {

template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

template <typename T>
ConstMatMap<T> as_matrix(const ParamStore<T>& s, std::size_t i) {
  const auto& v = s.value(i);
  return v.mat();
}

template <typename T>
MatMap<T> grad_matrix(ParamStore<T>& s, std::size_t i) {
  return s.grad(i).mat();
}

template <typename T>
Eigen::Map<const RowVec<T>> as_row(const ParamStore<T>& s, std::size_t i) {
  return s.value(i).row();
}

template <typename T>
Eigen::Map<RowVec<T>> grad_row(ParamStore<T>& s, std::size_t i) {
  return s.grad(i).row();
}

template <typename T>
void apply_activation(Activation act, Mat<T>& y) {
  switch (act) {
    case Activation::kRelu:
      y = y.cwiseMax(T(0));
      break;
    case Activation::kTanh:
      y = y.array().tanh().matrix();
      break;
    case Activation::kNone:
      break;
  }
}

// dy is overwritten with the gradient before the activation.
template <typename T>
void activation_backward(Activation act, const Mat<T>& out, Mat<T>& dy) {
  switch (act) {
    case Activation::kRelu:
      dy = (out.array() > T(0)).select(dy, T(0));
      break;
    case Activation::kTanh:
      dy.array() *= (T(1) - out.array().square());
      break;
    case Activation::kNone:
      break;
  }
}

template <typename T>
auto sigmoid(const Eigen::ArrayBase<T>& a) {
  using S = typename T::Scalar;
  return S(1) / (S(1) + (-a).exp());
}

}  // namespace

// ---------------------------------------------------------------- Dense

template <typename T>
Dense<T>::Dense(ParamStore<T>& store, const std::string& name, int in, int out)
    : name_(name), in_(in), out_(out) {
  weight_ = store.add(name + ".w", {std::size_t(in), std::size_t(out)});
  bias_ = store.add(name + ".b", {std::size_t(out)});
}

template <typename T>
void Dense<T>::forward(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& y) const {
  if (x.cols() != in_) {
    throw ConfigError("shape mismatch in " + name_ + ": input has " + std::to_string(x.cols()) +
                      " columns, layer expects " + std::to_string(in_));
  }
  y.noalias() = x * as_matrix(store, weight_);
  y.rowwise() += as_row(store, bias_);
}

template <typename T>
void Dense<T>::backward(ParamStore<T>& store, const Mat<T>& x, const Mat<T>& dy,
                        Mat<T>* dx) const {
  grad_matrix(store, weight_).noalias() += x.transpose() * dy;
  grad_row(store, bias_) += dy.colwise().sum();
  if (dx != nullptr) dx->noalias() = dy * as_matrix(store, weight_).transpose();
}

// ---------------------------------------------------------------- LayerNorm

template <typename T>
LayerNorm<T>::LayerNorm(ParamStore<T>& store, const std::string& name, int dim) : dim_(dim) {
  gain_ = store.add(name + ".gain", {std::size_t(dim)});
  bias_ = store.add(name + ".bias", {std::size_t(dim)});
  store.value(gain_).fill(T(1));
}

template <typename T>
void LayerNorm<T>::forward(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& y,
                           Cache* cache) const {
  if (x.cols() != dim_) throw ConfigError("shape mismatch in layer norm");
  const auto g = as_row(store, gain_);
  const auto b = as_row(store, bias_);
  const Eigen::Index n = x.rows();
  Eigen::Matrix<T, Eigen::Dynamic, 1> mean = x.rowwise().mean();
  Mat<T> centered = x.colwise() - mean;
  Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std =
      ((centered.array().square().rowwise().sum() / T(dim_)) + T(kEpsilon)).rsqrt();
  Mat<T> xhat = centered.array().colwise() * inv_std.array();
  y.resize(n, dim_);
  y = (xhat.array().rowwise() * g.array()).rowwise() + b.array();
  if (cache != nullptr) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
}

template <typename T>
void LayerNorm<T>::backward(ParamStore<T>& store, const Cache& cache, const Mat<T>& dy,
                            Mat<T>& dx) const {
  const auto g = as_row(store, gain_);
  grad_row(store, gain_) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  grad_row(store, bias_) += dy.colwise().sum();
  Mat<T> dxhat = dy.array().rowwise() * g.array();
  Eigen::Matrix<T, Eigen::Dynamic, 1> mean_d = dxhat.rowwise().mean();
  Eigen::Matrix<T, Eigen::Dynamic, 1> mean_dx =
      (dxhat.array() * cache.xhat.array()).rowwise().mean();
  Mat<T> tmp = dxhat.colwise() - mean_d;
  tmp.array() -= cache.xhat.array().colwise() * mean_dx.array();
  dx = tmp.array().colwise() * cache.inv_std.array();
}

template <typename T>
Mat<T> layer_norm(const Mat<T>& x, std::span<const T> gain, std::span<const T> bias) {
  if (gain.size() != std::size_t(x.cols()) || bias.size() != std::size_t(x.cols())) {
    throw ConfigError("layer_norm: gain/bias length does not match last dimension");
  }
  ParamStore<T> store;
  LayerNorm<T> ln(store, "ln", int(x.cols()));
  std::copy(gain.begin(), gain.end(), store.value(ln.gain()).data.begin());
  std::copy(bias.begin(), bias.end(), store.value(ln.bias()).data.begin());
  Mat<T> y;
  ln.forward(store, x, y, nullptr);
  return y;
}

// ---------------------------------------------------------------- Mlp

template <typename T>
Mlp<T>::Mlp(ParamStore<T>& store, const std::string& name, int in, std::vector<LayerSpec> layers)
    : in_(in), layers_(std::move(layers)) {
  int prev = in;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const std::string ln = name + "." + std::to_string(l);
    dense_.emplace_back(store, ln, prev, layers_[l].out);
    if (layers_[l].norm) {
      norms_.emplace_back(store, ln + ".norm", layers_[l].out);
    } else {
      norms_.emplace_back();
    }
    prev = layers_[l].out;
  }
}

template <typename T>
Mat<T> Mlp<T>::forward(const ParamStore<T>& store, const Mat<T>& x, Trace* trace) const {
  if (trace != nullptr) {
    trace->input = x;
    trace->norms.assign(layers_.size(), {});
    trace->outputs.assign(layers_.size(), {});
  }
  Mat<T> cur = x;
  Mat<T> y;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    dense_[l].forward(store, cur, y);
    if (layers_[l].norm) {
      Mat<T> normed;
      norms_[l].forward(store, y, normed, trace ? &trace->norms[l] : nullptr);
      y = std::move(normed);
    }
    apply_activation(layers_[l].act, y);
    cur = std::move(y);
    if (trace != nullptr) trace->outputs[l] = cur;
  }
  return cur;
}

template <typename T>
void Mlp<T>::backward(ParamStore<T>& store, const Trace& trace, const Mat<T>& dy,
                      Mat<T>* dx) const {
  Mat<T> grad = dy;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    activation_backward(layers_[l].act, trace.outputs[l], grad);
    if (layers_[l].norm) {
      Mat<T> dpre;
      norms_[l].backward(store, trace.norms[l], grad, dpre);
      grad = std::move(dpre);
    }
    const Mat<T>& input = l == 0 ? trace.input : trace.outputs[l - 1];
    if (l == 0 && dx == nullptr) {
      dense_[l].backward(store, input, grad, nullptr);
    } else {
      Mat<T> dinput;
      dense_[l].backward(store, input, grad, &dinput);
      grad = std::move(dinput);
    }
  }
  if (dx != nullptr) *dx = layers_.empty() ? dy : grad;
}

// ---------------------------------------------------------------- GruCell

template <typename T>
GruCell<T>::GruCell(ParamStore<T>& store, const std::string& name, int in, int hidden)
    : in_(in), hidden_(hidden) {
  const auto h = std::size_t(hidden);
  w_ = store.add(name + ".w", {std::size_t(in), 3 * h});
  u_gates_ = store.add(name + ".u_gates", {h, 2 * h});
  u_cand_ = store.add(name + ".u_cand", {h, h});
  b_cand_ = store.add(name + ".b_cand", {h});
}

template <typename T>
void GruCell<T>::project(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& xw) const {
  if (x.cols() != in_) throw ConfigError("shape mismatch in GRU input");
  xw.noalias() = x * as_matrix(store, w_);
}

template <typename T>
void GruCell<T>::step(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& xw,
                      const Eigen::Ref<const Mat<T>>& h, Eigen::Ref<Mat<T>> h_next,
                      StepCache* cache) const {
  const int hd = hidden_;
  Mat<T> gates = xw.leftCols(2 * hd);
  gates.noalias() += h * as_matrix(store, u_gates_);
  gates = sigmoid(gates.array()).matrix();
  Mat<T> rh = gates.rightCols(hd).cwiseProduct(h);
  Mat<T> cand = xw.rightCols(hd);
  cand.noalias() += rh * as_matrix(store, u_cand_);
  cand.rowwise() += as_row(store, b_cand_);
  cand = cand.array().tanh().matrix();
  h_next = cand + gates.leftCols(hd).cwiseProduct(h - cand);
  if (cache != nullptr) {
    cache->z = gates.leftCols(hd);
    cache->r = gates.rightCols(hd);
    cache->n = std::move(cand);
  }
}

template <typename T>
void GruCell<T>::step_backward(ParamStore<T>& store, const StepCache& c,
                               const Eigen::Ref<const Mat<T>>& h_prev,
                               const Eigen::Ref<const Mat<T>>& dh, Eigen::Ref<Mat<T>> dh_prev,
                               Eigen::Ref<Mat<T>> dxw) const {
  const int hd = hidden_;
  const auto& z = c.z;
  const auto& r = c.r;
  const auto& n = c.n;
  // h' = n + z * (h - n)
  Mat<T> dn = dh.cwiseProduct(Mat<T>::Ones(z.rows(), z.cols()) - z);
  Mat<T> dz = dh.cwiseProduct(h_prev - n);
  Mat<T> dh_acc = dh.cwiseProduct(z);

  Mat<T> dcand = dn.array() * (T(1) - n.array().square());
  grad_row(store, b_cand_) += dcand.colwise().sum();
  Mat<T> rh = r.cwiseProduct(h_prev);
  grad_matrix(store, u_cand_).noalias() += rh.transpose() * dcand;
  Mat<T> drh = dcand * as_matrix(store, u_cand_).transpose();
  Mat<T> dr = drh.cwiseProduct(h_prev);
  dh_acc += drh.cwiseProduct(r);

  Mat<T> dgates(z.rows(), 2 * hd);
  dgates.leftCols(hd) = dz.array() * z.array() * (T(1) - z.array());
  dgates.rightCols(hd) = dr.array() * r.array() * (T(1) - r.array());
  grad_matrix(store, u_gates_).noalias() += h_prev.transpose() * dgates;
  dh_acc.noalias() += dgates * as_matrix(store, u_gates_).transpose();

  dxw.leftCols(2 * hd) = dgates;
  dxw.rightCols(hd) = dcand;
  dh_prev = dh_acc;
}

template <typename T>
void GruCell<T>::project_backward(ParamStore<T>& store, const Mat<T>& x, const Mat<T>& dxw,
                                  Mat<T>* dx) const {
  grad_matrix(store, w_).noalias() += x.transpose() * dxw;
  if (dx != nullptr) dx->noalias() = dxw * as_matrix(store, w_).transpose();
}

// ---------------------------------------------------------------- RecurrentNet

template <typename T>
RecurrentNet<T>::RecurrentNet(ParamStore<T>& store, const std::string& name, RecurrentSpec spec)
    : spec_(std::move(spec)) {
  std::vector<LayerSpec> layers;
  for (int w : spec_.trunk) layers.push_back({w, true, Activation::kRelu});
  trunk_ = Mlp<T>(store, name + ".fc", spec_.in, layers);
  gru_ = GruCell<T>(store, name + ".gru", trunk_.out(), spec_.hidden);
  head_ = Dense<T>(store, name + ".head", spec_.hidden, spec_.out);
}

template <typename T>
Mat<T> RecurrentNet<T>::forward(const ParamStore<T>& store, const Mat<T>& x, int steps, int rows,
                                Trace* trace) const {
  if (x.rows() != Eigen::Index(steps) * rows) {
    throw ConfigError("recurrent input rows do not match steps * rows");
  }
  const int hd = spec_.hidden;
  Mat<T> trunk_out = trunk_.forward(store, x, trace ? &trace->trunk : nullptr);
  Mat<T> xw;
  gru_.project(store, trunk_out, xw);
  Mat<T> hidden(x.rows(), hd);
  Mat<T> h0 = Mat<T>::Zero(rows, hd);
  if (trace != nullptr) trace->gru.assign(std::size_t(steps), {});
  for (int t = 0; t < steps; ++t) {
    const Eigen::Index off = Eigen::Index(t) * rows;
    if (t == 0) {
      gru_.step(store, xw.middleRows(off, rows), h0, hidden.middleRows(off, rows),
                trace ? &trace->gru[0] : nullptr);
    } else {
      gru_.step(store, xw.middleRows(off, rows), hidden.middleRows(off - rows, rows),
                hidden.middleRows(off, rows), trace ? &trace->gru[t] : nullptr);
    }
  }
  Mat<T> out;
  head_.forward(store, hidden, out);
  apply_activation(spec_.out_act, out);
  if (trace != nullptr) {
    trace->steps = steps;
    trace->rows = rows;
    trace->trunk_out = std::move(trunk_out);
    trace->hidden = std::move(hidden);
    trace->output = out;
  }
  return out;
}

template <typename T>
void RecurrentNet<T>::backward(ParamStore<T>& store, const Trace& trace, const Mat<T>& dy,
                               Mat<T>* dx) const {
  const int hd = spec_.hidden;
  const int rows = trace.rows;
  Mat<T> dout = dy;
  activation_backward(spec_.out_act, trace.output, dout);
  Mat<T> dhidden;
  head_.backward(store, trace.hidden, dout, &dhidden);

  Mat<T> dxw(trace.hidden.rows(), 3 * hd);
  Mat<T> carry = Mat<T>::Zero(rows, hd);
  Mat<T> dh(rows, hd);
  const Mat<T> zeros = Mat<T>::Zero(rows, hd);
  for (int t = trace.steps - 1; t >= 0; --t) {
    const Eigen::Index off = Eigen::Index(t) * rows;
    dh = dhidden.middleRows(off, rows) + carry;
    if (t == 0) {
      gru_.step_backward(store, trace.gru[0], zeros, dh, carry, dxw.middleRows(off, rows));
    } else {
      gru_.step_backward(store, trace.gru[t], trace.hidden.middleRows(off - rows, rows), dh, carry,
                         dxw.middleRows(off, rows));
    }
  }
  Mat<T> dtrunk;
  gru_.project_backward(store, trace.trunk_out, dxw, &dtrunk);
  trunk_.backward(store, trace.trunk, dtrunk, dx);
}

template <typename T>
Mat<T> RecurrentNet<T>::step(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& h) const {
  Mat<T> trunk_out = trunk_.forward(store, x, nullptr);
  Mat<T> xw;
  gru_.project(store, trunk_out, xw);
  Mat<T> h_next(h.rows(), h.cols());
  gru_.step(store, xw, h, h_next, nullptr);
  h = std::move(h_next);
  Mat<T> out;
  head_.forward(store, h, out);
  apply_activation(spec_.out_act, out);
  return out;
}

// ---------------------------------------------------------------- init

template <typename T>
void init_orthogonal(Tensor<T>& w, double gain, Rng& rng) {
  const Eigen::Index rows = Eigen::Index(w.rows());
  const Eigen::Index cols = Eigen::Index(w.cols());
  const bool tall = rows >= cols;
  const Eigen::Index a = tall ? rows : cols;
  const Eigen::Index b = tall ? cols : rows;
  Eigen::MatrixXd g(a, b);
  for (Eigen::Index i = 0; i < a; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) g(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a, b);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(b).template triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < b; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  Eigen::MatrixXd out = tall ? q : Eigen::MatrixXd(q.transpose());
  auto m = w.mat();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<T>(gain * out(i, j));
  }
}

template <typename T>
void init_mlp(ParamStore<T>& store, const Mlp<T>& mlp, double gain, Rng& rng) {
  for (std::size_t l = 0; l < mlp.dense().size(); ++l) {
    const auto& d = mlp.dense()[l];
    init_orthogonal(store.value(d.weight()), gain, rng);
    store.value(d.bias()).fill(T(0));
    if (mlp.specs()[l].norm) {
      store.value(mlp.norms()[l].gain()).fill(T(1));
      store.value(mlp.norms()[l].bias()).fill(T(0));
    }
  }
}

template <typename T>
void init_recurrent(ParamStore<T>& store, const RecurrentNet<T>& net, double head_gain, Rng& rng) {
  init_mlp(store, net.trunk(), std::sqrt(2.0), rng);
  const auto& gru = net.gru();
  init_orthogonal(store.value(gru.input_weight()), 1.0, rng);
  init_orthogonal(store.value(gru.gate_weight()), 1.0, rng);
  init_orthogonal(store.value(gru.candidate_weight()), 1.0, rng);
  store.value(gru.candidate_bias()).fill(T(0));
  init_orthogonal(store.value(net.head().weight()), head_gain, rng);
  store.value(net.head().bias()).fill(T(0));
}

#define NAHT_INSTANTIATE(T)                                                                   \
  template class Dense<T>;                                                                    \
  template class LayerNorm<T>;                                                                \
  template class Mlp<T>;                                                                      \
  template class GruCell<T>;                                                                  \
  template class RecurrentNet<T>;                                                             \
  template Mat<T> layer_norm<T>(const Mat<T>&, std::span<const T>, std::span<const T>);       \
  template void init_orthogonal<T>(Tensor<T>&, double, Rng&);                                 \
  template void init_mlp<T>(ParamStore<T>&, const Mlp<T>&, double, Rng&);                     \
  template void init_recurrent<T>(ParamStore<T>&, const RecurrentNet<T>&, double, Rng&);

NAHT_INSTANTIATE(float)
NAHT_INSTANTIATE(double)

#undef NAHT_INSTANTIATE

}  // namespace naht::nn
