#ifndef NAHT_NN_LAYERS_HPP_
#define NAHT_NN_LAYERS_HPP_

#include <span>
#include <string>
#include <vector>

#include "naht/nn/param_store.hpp"
#include "naht/nn/tensor.hpp"
#include "naht/rng.hpp"

namespace naht::nn {

enum class Activation { kNone, kRelu, kTanh };

/// y = x W + b with W stored as [in, out].
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(ParamStore<T>& store, const std::string& name, int in, int out);

  void forward(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& y) const;
  /// Accumulates weight and bias gradients; writes dL/dx when dx is given.
  void backward(ParamStore<T>& store, const Mat<T>& x, const Mat<T>& dy, Mat<T>* dx) const;

  int in() const { return in_; }
  int out() const { return out_; }
  std::size_t weight() const { return weight_; }
  std::size_t bias() const { return bias_; }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  int in_ = 0;
  int out_ = 0;
  std::size_t weight_ = 0;
  std::size_t bias_ = 0;
};

/// Normalizes each row over its last dimension, then applies gain and bias.
template <typename T>
class LayerNorm {
 public:
  static constexpr double kEpsilon = 1e-5;

  struct Cache {
    Mat<T> xhat;
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std;
  };

  LayerNorm() = default;
  LayerNorm(ParamStore<T>& store, const std::string& name, int dim);

  void forward(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& y, Cache* cache) const;
  void backward(ParamStore<T>& store, const Cache& cache, const Mat<T>& dy, Mat<T>& dx) const;

  std::size_t gain() const { return gain_; }
  std::size_t bias() const { return bias_; }

 private:
  int dim_ = 0;
  std::size_t gain_ = 0;
  std::size_t bias_ = 0;
};

/// Stateless layer normalization of the rows of x.
template <typename T>
Mat<T> layer_norm(const Mat<T>& x, std::span<const T> gain, std::span<const T> bias);

struct LayerSpec {
  int out = 0;
  bool norm = true;
  Activation act = Activation::kRelu;
};

/// Stack of dense -> [layer norm] -> activation blocks.
template <typename T>
class Mlp {
 public:
  struct Trace {
    Mat<T> input;
    std::vector<typename LayerNorm<T>::Cache> norms;
    std::vector<Mat<T>> outputs;
  };

  Mlp() = default;
  Mlp(ParamStore<T>& store, const std::string& name, int in, std::vector<LayerSpec> layers);

  Mat<T> forward(const ParamStore<T>& store, const Mat<T>& x, Trace* trace) const;
  void backward(ParamStore<T>& store, const Trace& trace, const Mat<T>& dy, Mat<T>* dx) const;

  int in() const { return in_; }
  int out() const { return layers_.empty() ? in_ : layers_.back().out; }
  const std::vector<Dense<T>>& dense() const { return dense_; }
  const std::vector<LayerNorm<T>>& norms() const { return norms_; }
  const std::vector<LayerSpec>& specs() const { return layers_; }

 private:
  int in_ = 0;
  std::vector<LayerSpec> layers_;
  std::vector<Dense<T>> dense_;
  std::vector<LayerNorm<T>> norms_;  // one per layer; unused when norm is off
};

/// Gated recurrent unit with the update convention
///   z = sigmoid(x Wz + h Uz)
///   r = sigmoid(x Wr + h Ur)
///   n = tanh(x Wn + (r * h) Un + bn)
///   h' = (1 - z) * n + z * h
/// The input projection x [Wz Wr Wn] is applied to whole sequences at once.
template <typename T>
class GruCell {
 public:
  struct StepCache {
    Mat<T> z;
    Mat<T> r;
    Mat<T> n;
  };

  GruCell() = default;
  GruCell(ParamStore<T>& store, const std::string& name, int in, int hidden);

  /// xw = x W for all rows of x.
  void project(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& xw) const;
  /// One recurrence step; xw holds the projected inputs for this step.
  void step(const ParamStore<T>& store, const Eigen::Ref<const Mat<T>>& xw,
            const Eigen::Ref<const Mat<T>>& h, Eigen::Ref<Mat<T>> h_next, StepCache* cache) const;
  /// Backward through one step. dh holds dL/dh' on entry; on exit dh_prev
  /// holds dL/dh and dxw the gradient for the projected inputs.
  void step_backward(ParamStore<T>& store, const StepCache& cache,
                     const Eigen::Ref<const Mat<T>>& h_prev, const Eigen::Ref<const Mat<T>>& dh,
                     Eigen::Ref<Mat<T>> dh_prev, Eigen::Ref<Mat<T>> dxw) const;
  void project_backward(ParamStore<T>& store, const Mat<T>& x, const Mat<T>& dxw,
                        Mat<T>* dx) const;

  int in() const { return in_; }
  int hidden() const { return hidden_; }
  std::size_t input_weight() const { return w_; }
  std::size_t gate_weight() const { return u_gates_; }
  std::size_t candidate_weight() const { return u_cand_; }
  std::size_t candidate_bias() const { return b_cand_; }

 private:
  int in_ = 0;
  int hidden_ = 0;
  std::size_t w_ = 0;        // [in, 3h]
  std::size_t u_gates_ = 0;  // [h, 2h]
  std::size_t u_cand_ = 0;   // [h, h]
  std::size_t b_cand_ = 0;   // [h]
};

struct RecurrentSpec {
  int in = 0;
  std::vector<int> trunk;  // widths of the dense -> norm -> relu blocks
  int hidden = 64;
  int out = 1;
  Activation out_act = Activation::kNone;
};

/// trunk MLP -> GRU -> dense head, run over time-major sequences whose rows
/// are laid out as t * rows + r. Hidden state starts at zero.
template <typename T>
class RecurrentNet {
 public:
  struct Trace {
    int steps = 0;
    int rows = 0;
    typename Mlp<T>::Trace trunk;
    Mat<T> trunk_out;
    Mat<T> hidden;  // h_t for every step, same layout as the inputs
    std::vector<typename GruCell<T>::StepCache> gru;
    Mat<T> output;
  };

  RecurrentNet() = default;
  RecurrentNet(ParamStore<T>& store, const std::string& name, RecurrentSpec spec);

  Mat<T> forward(const ParamStore<T>& store, const Mat<T>& x, int steps, int rows,
                 Trace* trace) const;
  void backward(ParamStore<T>& store, const Trace& trace, const Mat<T>& dy, Mat<T>* dx) const;
  /// Single step for rollouts; h is advanced in place.
  Mat<T> step(const ParamStore<T>& store, const Mat<T>& x, Mat<T>& h) const;

  const RecurrentSpec& spec() const { return spec_; }
  const Mlp<T>& trunk() const { return trunk_; }
  const GruCell<T>& gru() const { return gru_; }
  const Dense<T>& head() const { return head_; }

 private:
  RecurrentSpec spec_;
  Mlp<T> trunk_;
  GruCell<T> gru_;
  Dense<T> head_;
};

/// Fills a 2-D tensor with a scaled (semi-)orthogonal matrix.
template <typename T>
void init_orthogonal(Tensor<T>& w, double gain, Rng& rng);

/// Orthogonal init for every dense and recurrent weight under the net, zero
/// biases, unit norm gains; head weights use head_gain.
template <typename T>
void init_mlp(ParamStore<T>& store, const Mlp<T>& mlp, double gain, Rng& rng);
template <typename T>
void init_recurrent(ParamStore<T>& store, const RecurrentNet<T>& net, double head_gain, Rng& rng);

extern template class Dense<float>;
extern template class Dense<double>;
extern template class LayerNorm<float>;
extern template class LayerNorm<double>;
extern template class Mlp<float>;
extern template class Mlp<double>;
extern template class GruCell<float>;
extern template class GruCell<double>;
extern template class RecurrentNet<float>;
extern template class RecurrentNet<double>;

}  // namespace naht::nn

#endif  // NAHT_NN_LAYERS_HPP_
