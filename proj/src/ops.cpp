#include "fw/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "fw/interp.hpp"
#include "fw/parallel.hpp"

namespace fw {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

struct ConvGeometry {
  int n, cin, h, w;
  int cout, kh, kw;
  int pad, stride;
  int ho, wo;

  int k() const { return cin * kh * kw; }
  int p() const { return ho * wo; }
};

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* col) {
  const int P = g.p();
  for (int c = 0; c < g.cin; ++c) {
    const T* plane = x + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        T* row = col + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * P;
        for (int oh = 0; oh < g.ho; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          T* dst = row + static_cast<std::size_t>(oh) * g.wo;
          if (ih < 0 || ih >= g.h) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * g.w;
          for (int ow = 0; ow < g.wo; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            dst[ow] = (iw >= 0 && iw < g.w) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* dx) {
  const int P = g.p();
  for (int c = 0; c < g.cin; ++c) {
    T* plane = dx + static_cast<std::size_t>(c) * g.h * g.w;
    for (int ki = 0; ki < g.kh; ++ki) {
      for (int kj = 0; kj < g.kw; ++kj) {
        const T* row = col + static_cast<std::size_t>((c * g.kh + ki) * g.kw + kj) * P;
        for (int oh = 0; oh < g.ho; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          if (ih < 0 || ih >= g.h) continue;
          const T* src = row + static_cast<std::size_t>(oh) * g.wo;
          T* dst = plane + static_cast<std::size_t>(ih) * g.w;
          for (int ow = 0; ow < g.wo; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            if (iw >= 0 && iw < g.w) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

template <typename T>
T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& kernel, const Var<T>& bias, int padding,
              int stride) {
  const Shape& xs = x.shape();
  const Shape& ks = kernel.shape();
  require(xs.rank() == 4, "conv2d input must be [N,C,H,W], got " + xs.str());
  if (ks.rank() != 4 || ks[2] % 2 == 0 || ks[3] % 2 == 0) {
    throw InvalidConfig("conv2d kernel must be [Cout,Cin,kH,kW] with odd kH,kW, got " +
                        ks.str());
  }
  if (stride < 1 || padding < 0) throw InvalidConfig("conv2d needs stride >= 1, padding >= 0");
  require(ks[1] == xs[1], "conv2d channel mismatch: input " + xs.str() + ", kernel " + ks.str());
  require(bias.shape().rank() == 1 && bias.shape()[0] == ks[0], "conv2d bias must be [Cout]");
  require(xs[2] + 2 * padding >= ks[2] && xs[3] + 2 * padding >= ks[3],
          "conv2d kernel larger than padded input");

  ConvGeometry g{xs[0], xs[1], xs[2], xs[3], ks[0], ks[2], ks[3], padding, stride, 0, 0};
  g.ho = (g.h + 2 * padding - g.kh) / stride + 1;
  g.wo = (g.w + 2 * padding - g.kw) / stride + 1;

  Tensor<T> out(Shape{g.n, g.cout, g.ho, g.wo});
  const std::size_t in_per = static_cast<std::size_t>(g.cin) * g.h * g.w;
  const std::size_t out_per = static_cast<std::size_t>(g.cout) * g.p();
  const T* xd = x.value().data();
  const T* bd = bias.value().data();
  ConstMapMat<T> wm(kernel.value().data(), g.cout, g.k());
  T* od = out.data();

  parallel_for(static_cast<std::size_t>(g.n), [&](std::size_t n) {
    std::vector<T> col(static_cast<std::size_t>(g.k()) * g.p());
    im2col(xd + n * in_per, g, col.data());
    MapMat<T> o(od + n * out_per, g.cout, g.p());
    o.noalias() = wm * ConstMapMat<T>(col.data(), g.k(), g.p());
    for (int c = 0; c < g.cout; ++c) o.row(c).array() += bd[c];
  });

  return Var<T>::make(std::move(out), {x, kernel, bias}, [g, in_per, out_per](Node<T>& self) {
    Node<T>& xn = *self.inputs[0];
    Node<T>& kn = *self.inputs[1];
    Node<T>& bn = *self.inputs[2];
    const T* gd = self.grad.data();
    const std::size_t kp = static_cast<std::size_t>(g.cout) * g.k();
    std::vector<T> dk_per(kn.requires_grad ? kp * g.n : 0);
    T* dx = xn.requires_grad ? xn.grad_buffer().data() : nullptr;
    ConstMapMat<T> wm(kn.value.data(), g.cout, g.k());

    parallel_for(static_cast<std::size_t>(g.n), [&](std::size_t n) {
      ConstMapMat<T> go(gd + n * out_per, g.cout, g.p());
      std::vector<T> col(static_cast<std::size_t>(g.k()) * g.p());
      if (kn.requires_grad) {
        im2col(xn.value.data() + n * in_per, g, col.data());
        MapMat<T>(dk_per.data() + n * kp, g.cout, g.k()).noalias() =
            go * ConstMapMat<T>(col.data(), g.k(), g.p()).transpose();
      }
      if (dx) {
        MapMat<T>(col.data(), g.k(), g.p()).noalias() = wm.transpose() * go;
        col2im_add(col.data(), g, dx + n * in_per);
      }
    });

    if (kn.requires_grad) {
      T* dk = kn.grad_buffer().data();
      for (int n = 0; n < g.n; ++n) {
        const T* src = dk_per.data() + static_cast<std::size_t>(n) * kp;
        for (std::size_t i = 0; i < kp; ++i) dk[i] += src[i];
      }
    }
    if (bn.requires_grad) {
      T* db = bn.grad_buffer().data();
      for (int n = 0; n < g.n; ++n) {
        for (int c = 0; c < g.cout; ++c) {
          const T* row = gd + n * out_per + static_cast<std::size_t>(c) * g.p();
          T acc = T(0);
          for (int p = 0; p < g.p(); ++p) acc += row[p];
          db[c] += acc;
        }
      }
    }
  });
}

template <typename T>
Var<T> maxpool2(const Var<T>& x) {
  const Shape& s = x.shape();
  require(s.rank() == 4, "maxpool2 input must be [N,C,H,W], got " + s.str());
  require(s[2] % 2 == 0 && s[3] % 2 == 0, "maxpool2 needs even H and W, got " + s.str());
  const int planes = s[0] * s[1];
  const int h = s[2], w = s[3], ho = h / 2, wo = w / 2;
  Tensor<T> out(Shape{s[0], s[1], ho, wo});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const T* xd = x.value().data();
  T* od = out.data();

  parallel_for(static_cast<std::size_t>(planes), [&](std::size_t p) {
    const std::size_t in_base = p * h * w;
    const std::size_t out_base = p * ho * wo;
    for (int i = 0; i < ho; ++i) {
      for (int j = 0; j < wo; ++j) {
        std::size_t best = in_base + static_cast<std::size_t>(2 * i) * w + 2 * j;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            const std::size_t idx = in_base + static_cast<std::size_t>(2 * i + di) * w + 2 * j + dj;
            if (xd[idx] > xd[best]) best = idx;
          }
        }
        od[out_base + static_cast<std::size_t>(i) * wo + j] = xd[best];
        (*argmax)[out_base + static_cast<std::size_t>(i) * wo + j] = best;
      }
    }
  });

  return Var<T>::make(std::move(out), {x}, [argmax](Node<T>& self) {
    T* dx = self.inputs[0]->grad_buffer().data();
    const T* gd = self.grad.data();
    for (std::size_t i = 0; i < argmax->size(); ++i) dx[(*argmax)[i]] += gd[i];
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out(x.shape());
  const T* xd = x.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xd[i] > T(0) ? xd[i] : T(0);
  return Var<T>::make(std::move(out), {x}, [](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    T* dx = in.grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      if (in.value[i] > T(0)) dx[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> dense(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  require(xs.rank() == 2 && ws.rank() == 2, "dense expects [N,D] input and [D,M] weight");
  require(xs[1] == ws[0], "dense dimension mismatch: input " + xs.str() + ", weight " + ws.str());
  require(bias.shape().rank() == 1 && bias.shape()[0] == ws[1], "dense bias must be [M]");
  const int n = xs[0], d = xs[1], m = ws[1];
  Tensor<T> out(Shape{n, m});
  MapMat<T> o(out.data(), n, m);
  o.noalias() = ConstMapMat<T>(x.value().data(), n, d) * ConstMapMat<T>(weight.value().data(), d, m);
  const T* bd = bias.value().data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) o(i, j) += bd[j];

  return Var<T>::make(std::move(out), {x, weight, bias}, [n, d, m](Node<T>& self) {
    Node<T>& xn = *self.inputs[0];
    Node<T>& wn = *self.inputs[1];
    Node<T>& bn = *self.inputs[2];
    ConstMapMat<T> go(self.grad.data(), n, m);
    if (xn.requires_grad) {
      MapMat<T>(xn.grad_buffer().data(), n, d).noalias() +=
          go * ConstMapMat<T>(wn.value.data(), d, m).transpose();
    }
    if (wn.requires_grad) {
      MapMat<T>(wn.grad_buffer().data(), d, m).noalias() +=
          ConstMapMat<T>(xn.value.data(), n, d).transpose() * go;
    }
    if (bn.requires_grad) {
      T* db = bn.grad_buffer().data();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) db[j] += go(i, j);
    }
  });
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
  require(logits.rank() == 2, "softmax expects [N,K] logits");
  const int n = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (int i = 0; i < n; ++i) {
    T mx = logits.at(i, 0);
    for (int j = 1; j < k; ++j) mx = std::max(mx, logits.at(i, j));
    T total = T(0);
    for (int j = 0; j < k; ++j) {
      out.at(i, j) = std::exp(logits.at(i, j) - mx);
      total += out.at(i, j);
    }
    for (int j = 0; j < k; ++j) out.at(i, j) /= total;
  }
  return out;
}

template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels) {
  const Shape& s = logits.shape();
  require(s.rank() == 2, "softmax_cross_entropy expects [N,K] logits");
  const int n = s[0], k = s[1];
  require(static_cast<int>(labels.size()) == n, "label count does not match batch size");
  for (int label : labels) {
    require(label >= 0 && label < k,
            "label " + std::to_string(label) + " outside [0, " + std::to_string(k) + ")");
  }
  auto probs = std::make_shared<Tensor<T>>(softmax(logits.value()));
  std::vector<int> targets(labels.begin(), labels.end());
  T loss = T(0);
  for (int i = 0; i < n; ++i) {
    const T* row = logits.value().data() + static_cast<std::size_t>(i) * k;
    const T mx = *std::max_element(row, row + k);
    T total = T(0);
    for (int j = 0; j < k; ++j) total += std::exp(row[j] - mx);
    loss += std::log(total) + mx - row[targets[i]];
  }
  loss /= static_cast<T>(n);

  return Var<T>::make(Tensor<T>::scalar(loss), {logits},
                      [probs, targets = std::move(targets), n, k](Node<T>& self) {
                        T* dl = self.inputs[0]->grad_buffer().data();
                        const T scale = self.grad[0] / static_cast<T>(n);
                        for (int i = 0; i < n; ++i) {
                          for (int j = 0; j < k; ++j) {
                            const T onehot = j == targets[i] ? T(1) : T(0);
                            dl[i * k + j] += scale * (probs->at(i, j) - onehot);
                          }
                        }
                      });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(x.value()[i]);
  return Var<T>::make(std::move(out), {x}, [](Node<T>& self) {
    T* dx = self.inputs[0]->grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const T y = self.value[i];
      dx[i] += self.grad[i] * y * (T(1) - y);
    }
  });
}

template <typename T>
Var<T> binary_cross_entropy_with_logits(const Var<T>& logits, const Tensor<T>& targets) {
  require(logits.shape() == targets.shape(), "BCE targets must match logits shape");
  const std::size_t count = targets.size();
  T loss = T(0);
  for (std::size_t i = 0; i < count; ++i) {
    const T z = logits.value()[i];
    loss += std::max(z, T(0)) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  loss /= static_cast<T>(count);
  auto tgt = std::make_shared<Tensor<T>>(targets);
  return Var<T>::make(Tensor<T>::scalar(loss), {logits}, [tgt, count](Node<T>& self) {
    Node<T>& in = *self.inputs[0];
    T* dz = in.grad_buffer().data();
    const T scale = self.grad[0] / static_cast<T>(count);
    for (std::size_t i = 0; i < count; ++i) {
      dz[i] += scale * (sigmoid_scalar(in.value[i]) - (*tgt)[i]);
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require(a.shape() == b.shape(),
          "add shape mismatch: " + a.shape().str() + " vs " + b.shape().str());
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return Var<T>::make(std::move(out), {a, b}, [](Node<T>& self) {
    for (auto& in : self.inputs) {
      if (!in->requires_grad) continue;
      T* d = in->grad_buffer().data();
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    }
  });
}

template <typename T>
Var<T> concat_channels(const Var<T>& a, const Var<T>& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require(as.rank() == 4 && bs.rank() == 4 && as[0] == bs[0] && as[2] == bs[2] && as[3] == bs[3],
          "concat_channels shape mismatch: " + as.str() + " vs " + bs.str());
  const int n = as[0];
  const std::size_t pa = as.numel() / n, pb = bs.numel() / n;
  Tensor<T> out(Shape{n, as[1] + bs[1], as[2], as[3]});
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.value().data() + i * pa, pa, out.data() + i * (pa + pb));
    std::copy_n(b.value().data() + i * pb, pb, out.data() + i * (pa + pb) + pa);
  }
  return Var<T>::make(std::move(out), {a, b}, [n, pa, pb](Node<T>& self) {
    Node<T>& an = *self.inputs[0];
    Node<T>& bn = *self.inputs[1];
    for (int i = 0; i < n; ++i) {
      const T* g = self.grad.data() + i * (pa + pb);
      if (an.requires_grad) {
        T* d = an.grad_buffer().data() + i * pa;
        for (std::size_t j = 0; j < pa; ++j) d[j] += g[j];
      }
      if (bn.requires_grad) {
        T* d = bn.grad_buffer().data() + i * pb;
        for (std::size_t j = 0; j < pb; ++j) d[j] += g[pa + j];
      }
    }
  });
}

template <typename T>
Var<T> upsample_bilinear2x(const Var<T>& x) {
  const Shape& s = x.shape();
  require(s.rank() == 4, "upsample expects [N,C,H,W]");
  const int h = s[2], w = s[3], ho = 2 * h, wo = 2 * w;
  auto rows = linear_taps(h, ho);
  auto cols = linear_taps(w, wo);
  Tensor<T> out(Shape{s[0], s[1], ho, wo});
  const std::size_t planes = static_cast<std::size_t>(s[0]) * s[1];
  const T* xd = x.value().data();
  T* od = out.data();
  parallel_for(planes, [&](std::size_t p) {
    const T* in = xd + p * h * w;
    T* o = od + p * ho * wo;
    for (int i = 0; i < ho; ++i) {
      const auto& r = rows[i];
      const T fy = static_cast<T>(r.frac);
      for (int j = 0; j < wo; ++j) {
        const auto& c = cols[j];
        const T fx = static_cast<T>(c.frac);
        const T top = in[r.lo * w + c.lo] * (T(1) - fx) + in[r.lo * w + c.hi] * fx;
        const T bot = in[r.hi * w + c.lo] * (T(1) - fx) + in[r.hi * w + c.hi] * fx;
        o[i * wo + j] = top * (T(1) - fy) + bot * fy;
      }
    }
  });
  return Var<T>::make(std::move(out), {x}, [rows, cols, planes, h, w, ho, wo](Node<T>& self) {
    T* dx = self.inputs[0]->grad_buffer().data();
    const T* gd = self.grad.data();
    parallel_for(planes, [&](std::size_t p) {
      T* d = dx + p * h * w;
      const T* g = gd + p * ho * wo;
      for (int i = 0; i < ho; ++i) {
        const auto& r = rows[i];
        const T fy = static_cast<T>(r.frac);
        for (int j = 0; j < wo; ++j) {
          const auto& c = cols[j];
          const T fx = static_cast<T>(c.frac);
          const T gv = g[i * wo + j];
          d[r.lo * w + c.lo] += gv * (T(1) - fy) * (T(1) - fx);
          d[r.lo * w + c.hi] += gv * (T(1) - fy) * fx;
          d[r.hi * w + c.lo] += gv * fy * (T(1) - fx);
          d[r.hi * w + c.hi] += gv * fy * fx;
        }
      }
    });
  });
}

template <typename T>
Var<T> flatten(const Var<T>& x) {
  const int n = x.shape()[0];
  const int rest = static_cast<int>(x.value().size() / n);
  Tensor<T> out = x.value().reshape(Shape{n, rest});
  return Var<T>::make(std::move(out), {x}, [](Node<T>& self) {
    T* d = self.inputs[0]->grad_buffer().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
  });
}

template <typename T>
Var<T> delta_layer(const Var<T>& after, const Var<T>& before, const Var<T>& lambda) {
  const Shape& s = after.shape();
  require(s == before.shape(),
          "delta_layer shape mismatch: " + s.str() + " vs " + before.shape().str());
  require(s.rank() >= 2, "delta_layer expects [N,C,...] feature volumes");
  const int n = s[0], c = s[1];
  const int lambdas = static_cast<int>(lambda.value().size());
  require(lambda.shape().rank() == 1 && (lambdas == c || lambdas == 1),
          "delta_layer lambda must have " + std::to_string(c) + " entries or 1, got " +
              lambda.shape().str());
  const std::size_t spatial = s.numel() / (static_cast<std::size_t>(n) * c);
  Tensor<T> out(s);
  const T* a = after.value().data();
  const T* b = before.value().data();
  const T* l = lambda.value().data();
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const T lv = l[lambdas == 1 ? 0 : ch];
      const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * spatial;
      for (std::size_t k = 0; k < spatial; ++k) {
        const T v = a[base + k] - lv * b[base + k];
        out[base + k] = v > T(0) ? v : T(0);
      }
    }
  }
  return Var<T>::make(std::move(out), {after, before, lambda},
                      [n, c, lambdas, spatial](Node<T>& self) {
                        Node<T>& an = *self.inputs[0];
                        Node<T>& bn = *self.inputs[1];
                        Node<T>& ln = *self.inputs[2];
                        T* da = an.requires_grad ? an.grad_buffer().data() : nullptr;
                        T* db = bn.requires_grad ? bn.grad_buffer().data() : nullptr;
                        T* dl = ln.requires_grad ? ln.grad_buffer().data() : nullptr;
                        const T* b = bn.value.data();
                        const T* l = ln.value.data();
                        for (int i = 0; i < n; ++i) {
                          for (int ch = 0; ch < c; ++ch) {
                            const int li = lambdas == 1 ? 0 : ch;
                            const std::size_t base = (static_cast<std::size_t>(i) * c + ch) * spatial;
                            T acc = T(0);
                            for (std::size_t k = 0; k < spatial; ++k) {
                              if (!(self.value[base + k] > T(0))) continue;
                              const T g = self.grad[base + k];
                              if (da) da[base + k] += g;
                              if (db) db[base + k] -= l[li] * g;
                              acc -= b[base + k] * g;
                            }
                            if (dl) dl[li] += acc;
                          }
                        }
                      });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total = T(0);
  for (T v : x.value().values()) total += v;
  return Var<T>::make(Tensor<T>::scalar(total), {x}, [](Node<T>& self) {
    T* d = self.inputs[0]->grad_buffer().data();
    const std::size_t count = self.inputs[0]->value.size();
    for (std::size_t i = 0; i < count; ++i) d[i] += self.grad[0];
  });
}

template <typename T>
void backward(const Var<T>& output) {
  if (output.value().size() != 1) {
    throw InvalidInput("backward needs a single-element output, got " + output.shape().str());
  }
  Node<T>* root = output.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order of the live graph.
  std::vector<Node<T>*> order;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root, 0}};
  std::unordered_set<Node<T>*> visited{root};
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node<T>* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backward && node->has_grad()) node->backward(*node);
  }
}

#define FW_INSTANTIATE_OPS(T)                                                              \
  template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>&, int, int);           \
  template Var<T> maxpool2(const Var<T>&);                                                 \
  template Var<T> relu(const Var<T>&);                                                     \
  template Var<T> dense(const Var<T>&, const Var<T>&, const Var<T>&);                      \
  template Var<T> softmax_cross_entropy(const Var<T>&, std::span<const int>);              \
  template Var<T> sigmoid(const Var<T>&);                                                  \
  template Var<T> binary_cross_entropy_with_logits(const Var<T>&, const Tensor<T>&);       \
  template Var<T> add(const Var<T>&, const Var<T>&);                                       \
  template Var<T> concat_channels(const Var<T>&, const Var<T>&);                           \
  template Var<T> upsample_bilinear2x(const Var<T>&);                                      \
  template Var<T> flatten(const Var<T>&);                                                  \
  template Var<T> delta_layer(const Var<T>&, const Var<T>&, const Var<T>&);                \
  template Var<T> sum(const Var<T>&);                                                      \
  template Tensor<T> softmax(const Tensor<T>&);                                            \
  template void backward(const Var<T>&);

FW_INSTANTIATE_OPS(float)
FW_INSTANTIATE_OPS(double)

#undef FW_INSTANTIATE_OPS

}  // namespace fw
