#include "volsr/tensor/ops.hpp"

#include "volsr/util/errors.hpp"

#include <algorithm>
#include <cmath>

namespace volsr::nn {

std::string to_string(const Activation& a) {
    switch (a.kind) {
    case Activation::Kind::linear: return "linear";
    case Activation::Kind::relu: return "relu";
    case Activation::Kind::leaky_relu: return "leaky_relu:" + std::to_string(a.alpha);
    case Activation::Kind::tanh: return "tanh";
    case Activation::Kind::sigmoid: return "sigmoid";
    }
    return "linear";
}

Activation parse_activation(const std::string& text) {
    if (text == "linear") return Activation::linear();
    if (text == "relu") return Activation::relu();
    if (text == "tanh") return Activation::tanh();
    if (text == "sigmoid") return Activation::sigmoid();
    if (text == "leaky_relu") return Activation::leaky_relu();
    if (text.rfind("leaky_relu:", 0) == 0) return Activation::leaky_relu(std::stod(text.substr(11)));
    throw ConfigError("unknown activation: " + text);
}

namespace ops {

template <typename T>
void require_finite(const Tensor<T>& t, const char* where) {
    if (!t.all_finite()) throw NumericError(std::string("non-finite value in ") + where);
}

namespace {

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
    if (a.shape() != b.shape())
        throw ContractError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                            to_string(b.shape()));
}

template <typename T>
void add_into(Node<T>& n, const Tensor<T>& g, T factor = T{1}) {
    if (!n.requires_grad) return;
    T* dst = n.grad_buffer().raw();
    const T* src = g.raw();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += factor * src[i];
}

} // namespace

template <typename T>
Var<T> batch_norm(const Var<T>& x, BatchNormState<T>& state) {
    const Shape& xs = x.shape();
    if (xs.empty() || xs.back() != state.channels())
        throw ContractError("batch_norm: channel count " + std::to_string(xs.empty() ? 0 : xs.back()) +
                            " does not match state " + std::to_string(state.channels()));
    const std::size_t C = state.channels();
    const std::size_t M = x.value().size() / C;
    const T* xp = x.value().raw();
    const T* gp = state.gamma.value().raw();
    const T* bp = state.beta.value().raw();

    std::vector<T> mean(C), inv_std(C);
    if (state.mode == Mode::train) {
        std::vector<double> s(C, 0.0), ss(C, 0.0);
        for (std::size_t r = 0; r < M; ++r)
            for (std::size_t c = 0; c < C; ++c) s[c] += xp[r * C + c];
        for (std::size_t c = 0; c < C; ++c) s[c] /= static_cast<double>(M);
        for (std::size_t r = 0; r < M; ++r)
            for (std::size_t c = 0; c < C; ++c) {
                const double d = xp[r * C + c] - s[c];
                ss[c] += d * d;
            }
        for (std::size_t c = 0; c < C; ++c) {
            const double var = ss[c] / static_cast<double>(M);
            mean[c] = static_cast<T>(s[c]);
            inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(state.epsilon)));
            const double unbiased = M > 1 ? ss[c] / static_cast<double>(M - 1) : var;
            state.running_mean[c] = state.momentum * state.running_mean[c] + (T{1} - state.momentum) * mean[c];
            state.running_var[c] =
                state.momentum * state.running_var[c] + (T{1} - state.momentum) * static_cast<T>(unbiased);
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            mean[c] = state.running_mean[c];
            inv_std[c] = T{1} / std::sqrt(std::max(state.running_var[c], T{0}) + state.epsilon);
        }
    }

    Tensor<T> y(xs);
    T* yp = y.raw();
    for (std::size_t r = 0; r < M; ++r)
        for (std::size_t c = 0; c < C; ++c) {
            const std::size_t i = r * C + c;
            yp[i] = gp[c] * ((xp[i] - mean[c]) * inv_std[c]) + bp[c];
        }

    const bool train = state.mode == Mode::train;
    return make_result<T>(std::move(y), {x, state.gamma.var, state.beta.var},
                          [C, M, train, mean = std::move(mean), inv_std = std::move(inv_std)](Node<T>& self) {
                              Node<T>& xn = *self.inputs[0];
                              Node<T>& gn = *self.inputs[1];
                              Node<T>& bn = *self.inputs[2];
                              const T* dy = self.grad.raw();
                              const T* xv = xn.value.raw();
                              const T* gamma = gn.value.raw();
                              std::vector<double> sum_dy(C, 0.0), sum_dy_xhat(C, 0.0);
                              for (std::size_t r = 0; r < M; ++r)
                                  for (std::size_t c = 0; c < C; ++c) {
                                      const std::size_t i = r * C + c;
                                      const double xhat = (xv[i] - mean[c]) * inv_std[c];
                                      sum_dy[c] += dy[i];
                                      sum_dy_xhat[c] += dy[i] * xhat;
                                  }
                              if (gn.requires_grad) {
                                  T* dg = gn.grad_buffer().raw();
                                  for (std::size_t c = 0; c < C; ++c) dg[c] += static_cast<T>(sum_dy_xhat[c]);
                              }
                              if (bn.requires_grad) {
                                  T* db = bn.grad_buffer().raw();
                                  for (std::size_t c = 0; c < C; ++c) db[c] += static_cast<T>(sum_dy[c]);
                              }
                              if (!xn.requires_grad) return;
                              T* dx = xn.grad_buffer().raw();
                              if (!train) {
                                  for (std::size_t r = 0; r < M; ++r)
                                      for (std::size_t c = 0; c < C; ++c) {
                                          const std::size_t i = r * C + c;
                                          dx[i] += dy[i] * gamma[c] * inv_std[c];
                                      }
                                  return;
                              }
                              const double inv_m = 1.0 / static_cast<double>(M);
                              for (std::size_t r = 0; r < M; ++r)
                                  for (std::size_t c = 0; c < C; ++c) {
                                      const std::size_t i = r * C + c;
                                      const double xhat = (xv[i] - mean[c]) * inv_std[c];
                                      const double v = static_cast<double>(gamma[c]) * inv_std[c] *
                                                       (dy[i] - inv_m * sum_dy[c] - xhat * inv_m * sum_dy_xhat[c]);
                                      dx[i] += static_cast<T>(v);
                                  }
                          });
}

template <typename T>
Var<T> activation(const Var<T>& x, const Activation& kind) {
    const T alpha = static_cast<T>(kind.alpha);
    const auto k = kind.kind;
    using K = Activation::Kind;
    if (k == K::linear) return x;
    Tensor<T> y(x.shape());
    const T* xp = x.value().raw();
    T* yp = y.raw();
    const std::size_t n = y.size();
    switch (k) {
    case K::relu:
        for (std::size_t i = 0; i < n; ++i) yp[i] = xp[i] > T{0} ? xp[i] : T{0};
        break;
    case K::leaky_relu:
        for (std::size_t i = 0; i < n; ++i) yp[i] = xp[i] > T{0} ? xp[i] : alpha * xp[i];
        break;
    case K::tanh:
        for (std::size_t i = 0; i < n; ++i) yp[i] = std::tanh(xp[i]);
        break;
    case K::sigmoid:
        for (std::size_t i = 0; i < n; ++i) yp[i] = T{1} / (T{1} + std::exp(-xp[i]));
        break;
    case K::linear: break;
    }
    return make_result<T>(std::move(y), {x}, [k, alpha](Node<T>& self) {
        Node<T>& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        const T* dy = self.grad.raw();
        const T* xv = xn.value.raw();
        const T* yv = self.value.raw();
        T* dx = xn.grad_buffer().raw();
        const std::size_t n = self.value.size();
        switch (k) {
        case K::relu:
            for (std::size_t i = 0; i < n; ++i) dx[i] += xv[i] > T{0} ? dy[i] : T{0};
            break;
        case K::leaky_relu:
            for (std::size_t i = 0; i < n; ++i) dx[i] += xv[i] > T{0} ? dy[i] : alpha * dy[i];
            break;
        case K::tanh:
            for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * (T{1} - yv[i] * yv[i]);
            break;
        case K::sigmoid:
            for (std::size_t i = 0; i < n; ++i) dx[i] += dy[i] * yv[i] * (T{1} - yv[i]);
            break;
        case K::linear: break;
        }
    });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
    if (numel(shape) != x.value().size())
        throw ContractError("reshape: " + to_string(x.shape()) + " -> " + to_string(shape));
    return make_result<T>(x.value().reshaped(std::move(shape)), {x},
                          [](Node<T>& self) { add_into(*self.inputs[0], self.grad); });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
    const Shape& as = a.shape();
    const Shape& bs = b.shape();
    if (as.empty() || as.size() != bs.size() || !std::equal(as.begin(), as.end() - 1, bs.begin()))
        throw ContractError("concat_channels: " + to_string(as) + " vs " + to_string(bs));
    const std::size_t ca = as.back(), cb = bs.back(), cc = ca + cb;
    const std::size_t rows = a.value().size() / ca;
    Shape out_shape = as;
    out_shape.back() = cc;
    Tensor<T> y(out_shape);
    const T* ap = a.value().raw();
    const T* bp = b.value().raw();
    T* yp = y.raw();
    for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(ap + r * ca, ca, yp + r * cc);
        std::copy_n(bp + r * cb, cb, yp + r * cc + ca);
    }
    return make_result<T>(std::move(y), {a, b}, [ca, cb, rows](Node<T>& self) {
        const std::size_t cc = ca + cb;
        const T* dy = self.grad.raw();
        if (self.inputs[0]->requires_grad) {
            T* da = self.inputs[0]->grad_buffer().raw();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < ca; ++c) da[r * ca + c] += dy[r * cc + c];
        }
        if (self.inputs[1]->requires_grad) {
            T* db = self.inputs[1]->grad_buffer().raw();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cb; ++c) db[r * cb + c] += dy[r * cc + ca + c];
        }
    });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a, b, "add");
    Tensor<T> y(a.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] + b.value()[i];
    return make_result<T>(std::move(y), {a, b}, [](Node<T>& self) {
        add_into(*self.inputs[0], self.grad);
        add_into(*self.inputs[1], self.grad);
    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a, b, "sub");
    Tensor<T> y(a.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] - b.value()[i];
    return make_result<T>(std::move(y), {a, b}, [](Node<T>& self) {
        add_into(*self.inputs[0], self.grad);
        add_into(*self.inputs[1], self.grad, T{-1});
    });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a, b, "mul");
    Tensor<T> y(a.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = a.value()[i] * b.value()[i];
    return make_result<T>(std::move(y), {a, b}, [](Node<T>& self) {
        Node<T>& an = *self.inputs[0];
        Node<T>& bn = *self.inputs[1];
        const T* dy = self.grad.raw();
        if (an.requires_grad) {
            T* da = an.grad_buffer().raw();
            for (std::size_t i = 0; i < self.grad.size(); ++i) da[i] += dy[i] * bn.value[i];
        }
        if (bn.requires_grad) {
            T* db = bn.grad_buffer().raw();
            for (std::size_t i = 0; i < self.grad.size(); ++i) db[i] += dy[i] * an.value[i];
        }
    });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = factor * x.value()[i];
    return make_result<T>(std::move(y), {x},
                          [factor](Node<T>& self) { add_into(*self.inputs[0], self.grad, factor); });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
    double s = 0.0;
    for (T v : x.value().data()) s += v;
    return make_result<T>(Tensor<T>::scalar(static_cast<T>(s)), {x}, [](Node<T>& self) {
        Node<T>& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        const T g = self.grad[0];
        for (T& v : xn.grad_buffer().data()) v += g;
    });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
    const std::size_t n = x.value().size();
    double s = 0.0;
    for (T v : x.value().data()) s += v;
    return make_result<T>(Tensor<T>::scalar(static_cast<T>(s / static_cast<double>(n))), {x}, [n](Node<T>& self) {
        Node<T>& xn = *self.inputs[0];
        if (!xn.requires_grad) return;
        const T g = self.grad[0] / static_cast<T>(n);
        for (T& v : xn.grad_buffer().data()) v += g;
    });
}

template <typename T>
Var<T> mse(const Var<T>& prediction, const Var<T>& target) {
    require_same_shape(prediction, target, "mse");
    const std::size_t n = prediction.value().size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(prediction.value()[i]) - target.value()[i];
        s += d * d;
    }
    return make_result<T>(Tensor<T>::scalar(static_cast<T>(s / static_cast<double>(n))), {prediction, target},
                          [n](Node<T>& self) {
                              Node<T>& pn = *self.inputs[0];
                              Node<T>& tn = *self.inputs[1];
                              const T g = T{2} * self.grad[0] / static_cast<T>(n);
                              T* dp = pn.requires_grad ? pn.grad_buffer().raw() : nullptr;
                              T* dt = tn.requires_grad ? tn.grad_buffer().raw() : nullptr;
                              for (std::size_t i = 0; i < n; ++i) {
                                  const T d = g * (pn.value[i] - tn.value[i]);
                                  if (dp) dp[i] += d;
                                  if (dt) dt[i] -= d;
                              }
                          });
}

namespace {
constexpr double kLogvarMin = -20.0;
constexpr double kLogvarMax = 20.0;
} // namespace

template <typename T>
Var<T> reparameterize(const Var<T>& mu, const Var<T>& logvar, const Tensor<T>& eps) {
    require_same_shape(mu, logvar, "reparameterize");
    if (eps.shape() != mu.shape()) throw ContractError("reparameterize: eps shape mismatch");
    Tensor<T> z(mu.shape());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const T lv = std::clamp(logvar.value()[i], T(kLogvarMin), T(kLogvarMax));
        z[i] = mu.value()[i] + std::exp(T(0.5) * lv) * eps[i];
    }
    return make_result<T>(std::move(z), {mu, logvar}, [eps](Node<T>& self) {
        add_into(*self.inputs[0], self.grad);
        Node<T>& ln = *self.inputs[1];
        if (!ln.requires_grad) return;
        T* dl = ln.grad_buffer().raw();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const T lv = ln.value[i];
            if (lv <= T(kLogvarMin) || lv >= T(kLogvarMax)) continue;
            dl[i] += self.grad[i] * eps[i] * T(0.5) * std::exp(T(0.5) * lv);
        }
    });
}

template <typename T>
Var<T> kl_divergence(const Var<T>& mu, const Var<T>& logvar) {
    require_same_shape(mu, logvar, "kl_divergence");
    if (mu.value().rank() != 2) throw ContractError("kl_divergence: expected [N, L]");
    const std::size_t batch = mu.shape()[0];
    double s = 0.0;
    for (std::size_t i = 0; i < mu.value().size(); ++i) {
        const double m = mu.value()[i];
        const double lv = logvar.value()[i];
        s += 1.0 + lv - m * m - std::exp(lv);
    }
    const T kl = static_cast<T>(-0.5 * s / static_cast<double>(batch));
    return make_result<T>(Tensor<T>::scalar(kl), {mu, logvar}, [batch](Node<T>& self) {
        Node<T>& mn = *self.inputs[0];
        Node<T>& ln = *self.inputs[1];
        const T g = self.grad[0] / static_cast<T>(batch);
        if (mn.requires_grad) {
            T* dm = mn.grad_buffer().raw();
            for (std::size_t i = 0; i < mn.value.size(); ++i) dm[i] += g * mn.value[i];
        }
        if (ln.requires_grad) {
            T* dl = ln.grad_buffer().raw();
            for (std::size_t i = 0; i < ln.value.size(); ++i) dl[i] += g * T(0.5) * (std::exp(ln.value[i]) - T{1});
        }
    });
}

#define VOLSR_INSTANTIATE(T)                                                          \
    template void require_finite(const Tensor<T>&, const char*);                      \
    template Var<T> batch_norm(const Var<T>&, BatchNormState<T>&);                     \
    template Var<T> activation(const Var<T>&, const Activation&);                     \
    template Var<T> reshape(const Var<T>&, Shape);                                     \
    template Var<T> concat_channels(const Var<T>&, const Var<T>&);                     \
    template Var<T> add(const Var<T>&, const Var<T>&);                                 \
    template Var<T> sub(const Var<T>&, const Var<T>&);                                 \
    template Var<T> mul(const Var<T>&, const Var<T>&);                                 \
    template Var<T> scale(const Var<T>&, T);                                           \
    template Var<T> sum(const Var<T>&);                                                \
    template Var<T> mean(const Var<T>&);                                               \
    template Var<T> mse(const Var<T>&, const Var<T>&);                                 \
    template Var<T> reparameterize(const Var<T>&, const Var<T>&, const Tensor<T>&);    \
    template Var<T> kl_divergence(const Var<T>&, const Var<T>&);

VOLSR_INSTANTIATE(float)
VOLSR_INSTANTIATE(double)
#undef VOLSR_INSTANTIATE

} // namespace ops
} // namespace volsr::nn
