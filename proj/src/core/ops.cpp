#include "core/ops.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "core/blas.hpp"

namespace ghostkit::tensor {
namespace {

struct Planes {
  std::size_t channels, height, width;
};

Planes planes_of(const Shape& s, const char* op) {
  if (s.size() == 3) return {s[0], s[1], s[2]};
  if (s.size() == 2) return {1, s[0], s[1]};
  fail(ErrorCode::Shape, std::string(op) + ": expected [C,H,W] or [H,W], got " + to_string(s));
}

Shape with_planes(const Shape& like, std::size_t c, std::size_t h, std::size_t w) {
  if (like.size() == 2) return {h, w};
  return {c, h, w};
}

template <typename T>
void accumulate(std::span<T> dst, std::span<const T> src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// col[(ci*k+ky)*k+kx][y*W+x] = input[ci][y+ky-p][x+kx-p], zero outside.
template <typename T>
void im2col(const T* in, std::size_t ci_count, std::size_t h, std::size_t w, std::size_t k,
            T* col) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < ci_count; ++ci) {
    const T* plane = in + ci * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        T* dst = col + row * h * w;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          T* out_row = dst + y * W;
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H || x0 >= x1) {
            std::fill(out_row, out_row + W, T(0));
            continue;
          }
          const T* src_row = plane + sy * W;
          std::fill(out_row, out_row + x0, T(0));
          for (std::ptrdiff_t x = x0; x < x1; ++x) out_row[x] = src_row[x + dx];
          std::fill(out_row + x1, out_row + W, T(0));
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t ci_count, std::size_t h, std::size_t w, std::size_t k,
                T* in_grad) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);
  std::size_t row = 0;
  for (std::size_t ci = 0; ci < ci_count; ++ci) {
    T* plane = in_grad + ci * h * w;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        const T* src = col + row * h * w;
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(W, W - dx);
        for (std::ptrdiff_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = y + dy;
          if (sy < 0 || sy >= H) continue;
          const T* src_row = src + y * W;
          T* dst_row = plane + sy * W;
          for (std::ptrdiff_t x = x0; x < x1; ++x) dst_row[x + dx] += src_row[x];
        }
      }
    }
  }
}

template <typename T>
void require_same_tape(Var<T> a, Var<T> b, const char* op) {
  require(a.tape != nullptr && a.tape == b.tape, ErrorCode::InvalidArgument,
          std::string(op) + ": operands live on different tapes");
}

template <typename T, typename F, typename G>
Var<T> unary(Var<T> x, F forward, G derivative) {
  const auto in = x.values();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  const std::size_t xid = x.id;
  return x.tape->record(x.shape(), std::move(out), {xid},
                        [xid, derivative](Tape<T>& tape, std::size_t self) {
                          if (!tape.requires_grad(xid)) return;
                          const auto g = tape.grad(self);
                          const auto v = tape.value(xid);
                          auto gx = tape.grad_buffer(xid);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * derivative(v[i]);
                        });
}

}  // namespace

template <typename T>
Var<T> conv2d(Var<T> input, Var<T> kernel, Var<T> bias) {
  require_same_tape(input, kernel, "conv2d");
  require_same_tape(input, bias, "conv2d");
  const Shape& is = input.shape();
  const Shape& ks = kernel.shape();
  const Shape& bs = bias.shape();
  require(is.size() == 3, ErrorCode::Shape, "conv2d: input must be [C_in,H,W], got " + to_string(is));
  require(ks.size() == 4, ErrorCode::Shape,
          "conv2d: kernel must be [C_out,C_in,k,k], got " + to_string(ks));
  require(ks[1] == is[0], ErrorCode::Shape,
          "conv2d: kernel axis 1 (input channels) is " + std::to_string(ks[1]) +
              " but input axis 0 has " + std::to_string(is[0]) + " channels");
  require(ks[2] == ks[3], ErrorCode::Shape,
          "conv2d: kernel axes 2 and 3 must match, got " + to_string(ks));
  require(ks[2] % 2 == 1, ErrorCode::Shape,
          "conv2d: kernel axis 2 (size) must be odd, got " + std::to_string(ks[2]));
  require(bs.size() == 1 && bs[0] == ks[0], ErrorCode::Shape,
          "conv2d: bias axis 0 must equal kernel axis 0 (" + std::to_string(ks[0]) + "), got " +
              to_string(bs));

  const std::size_t ci = is[0], h = is[1], w = is[2], co = ks[0], k = ks[2];
  const std::size_t hw = h * w, rows = ci * k * k;
  const auto x = input.values();
  const auto wk = kernel.values();
  const auto b = bias.values();

  std::vector<T> out(co * hw);
  if (k == 1) {
    blas::gemm<T>(false, false, co, hw, ci, T(1), wk.data(), ci, x.data(), hw, T(0), out.data(), hw);
  } else {
    std::vector<T> col(rows * hw);
    im2col(x.data(), ci, h, w, k, col.data());
    blas::gemm<T>(false, false, co, hw, rows, T(1), wk.data(), rows, col.data(), hw, T(0),
                  out.data(), hw);
  }
  for (std::size_t o = 0; o < co; ++o) {
    T* row = out.data() + o * hw;
    for (std::size_t i = 0; i < hw; ++i) row[i] += b[o];
  }

  const std::size_t iid = input.id, kid = kernel.id, bid = bias.id;
  return input.tape->record(
      {co, h, w}, std::move(out), {iid, kid, bid},
      [=](Tape<T>& tape, std::size_t self) {
        const auto g = tape.grad(self);
        const auto xv = tape.value(iid);
        const auto wv = tape.value(kid);
        std::vector<T> col;
        const bool need_col = k != 1 && tape.requires_grad(kid);
        if (need_col) {
          col.resize(rows * hw);
          im2col(xv.data(), ci, h, w, k, col.data());
        }
        if (tape.requires_grad(kid)) {
          auto gw = tape.grad_buffer(kid);
          const T* cols = k == 1 ? xv.data() : col.data();
          blas::gemm<T>(false, true, co, rows, hw, T(1), g.data(), hw, cols, hw, T(1), gw.data(),
                        rows);
        }
        if (tape.requires_grad(bid)) {
          auto gb = tape.grad_buffer(bid);
          for (std::size_t o = 0; o < co; ++o) {
            double acc = 0.0;
            const T* row = g.data() + o * hw;
            for (std::size_t i = 0; i < hw; ++i) acc += row[i];
            gb[o] += static_cast<T>(acc);
          }
        }
        if (tape.requires_grad(iid)) {
          auto gx = tape.grad_buffer(iid);
          if (k == 1) {
            blas::gemm<T>(true, false, ci, hw, co, T(1), wv.data(), ci, g.data(), hw, T(1),
                          gx.data(), hw);
          } else {
            std::vector<T> gcol(rows * hw);
            blas::gemm<T>(true, false, rows, hw, co, T(1), wv.data(), rows, g.data(), hw, T(0),
                          gcol.data(), hw);
            col2im_add(gcol.data(), ci, h, w, k, gx.data());
          }
        }
      });
}

template <typename T>
Var<T> dense(Var<T> input, Var<T> weight, Var<T> bias) {
  require_same_tape(input, weight, "dense");
  require_same_tape(input, bias, "dense");
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  const Shape& bs = bias.shape();
  require(is.size() == 1 || is.size() == 2, ErrorCode::Shape,
          "dense: input must be [n] or [batch,n], got " + to_string(is));
  require(ws.size() == 2, ErrorCode::Shape, "dense: weight must be [m,n], got " + to_string(ws));
  const std::size_t n = is.back();
  const std::size_t batch = is.size() == 2 ? is[0] : 1;
  require(ws[1] == n, ErrorCode::Shape,
          "dense: weight axis 1 is " + std::to_string(ws[1]) + " but input last axis is " +
              std::to_string(n));
  const std::size_t m = ws[0];
  require(bs.size() == 1 && bs[0] == m, ErrorCode::Shape,
          "dense: bias axis 0 must equal weight axis 0 (" + std::to_string(m) + "), got " +
              to_string(bs));

  const auto x = input.values();
  const auto wv = weight.values();
  const auto b = bias.values();
  std::vector<T> out(batch * m);
  blas::gemm<T>(false, true, batch, m, n, T(1), x.data(), n, wv.data(), n, T(0), out.data(), m);
  for (std::size_t r = 0; r < batch; ++r)
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] += b[j];

  Shape out_shape = is.size() == 2 ? Shape{batch, m} : Shape{m};
  const std::size_t iid = input.id, wid = weight.id, bid = bias.id;
  return input.tape->record(
      std::move(out_shape), std::move(out), {iid, wid, bid}, [=](Tape<T>& tape, std::size_t self) {
        const auto g = tape.grad(self);
        if (tape.requires_grad(wid)) {
          auto gw = tape.grad_buffer(wid);
          blas::gemm<T>(true, false, m, n, batch, T(1), g.data(), m, tape.value(iid).data(), n,
                        T(1), gw.data(), n);
        }
        if (tape.requires_grad(bid)) {
          auto gb = tape.grad_buffer(bid);
          for (std::size_t j = 0; j < m; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < batch; ++r) acc += g[r * m + j];
            gb[j] += static_cast<T>(acc);
          }
        }
        if (tape.requires_grad(iid)) {
          auto gx = tape.grad_buffer(iid);
          blas::gemm<T>(false, false, batch, n, m, T(1), g.data(), m, tape.value(wid).data(), n,
                        T(1), gx.data(), n);
        }
      });
}

template <typename T>
Var<T> relu(Var<T> x) {
  return unary<T>(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
Var<T> leaky_relu(Var<T> x, double slope) {
  const T s = static_cast<T>(slope);
  return unary<T>(
      x, [s](T v) { return v > T(0) ? v : s * v; }, [s](T v) { return v > T(0) ? T(1) : s; });
}

template <typename T>
Var<T> sin(Var<T> x) {
  return unary<T>(
      x, [](T v) { return std::sin(v); }, [](T v) { return std::cos(v); });
}

template <typename T>
Var<T> maxpool2x2(Var<T> x) {
  const Planes p = planes_of(x.shape(), "maxpool2x2");
  const std::size_t ho = (p.height + 1) / 2, wo = (p.width + 1) / 2;
  const auto in = x.values();
  std::vector<T> out(p.channels * ho * wo);
  std::vector<std::uint32_t> argmax(out.size());
  for (std::size_t c = 0; c < p.channels; ++c) {
    const std::size_t base = c * p.height * p.width;
    for (std::size_t oy = 0; oy < ho; ++oy) {
      for (std::size_t ox = 0; ox < wo; ++ox) {
        std::size_t best = base + (2 * oy) * p.width + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          const std::size_t y = std::min(2 * oy + dy, p.height - 1);
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t xx = std::min(2 * ox + dx, p.width - 1);
            const std::size_t idx = base + y * p.width + xx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (c * ho + oy) * wo + ox;
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  const std::size_t xid = x.id;
  return x.tape->record(with_planes(x.shape(), p.channels, ho, wo), std::move(out), {xid},
                        [xid, argmax = std::move(argmax)](Tape<T>& tape, std::size_t self) {
                          const auto g = tape.grad(self);
                          auto gx = tape.grad_buffer(xid);
                          for (std::size_t i = 0; i < g.size(); ++i) gx[argmax[i]] += g[i];
                        });
}

template <typename T>
Var<T> upsample_nearest2x(Var<T> x, std::size_t out_h, std::size_t out_w) {
  const Planes p = planes_of(x.shape(), "upsample_nearest2x");
  if (out_h == 0) out_h = 2 * p.height;
  if (out_w == 0) out_w = 2 * p.width;
  require(out_h <= 2 * p.height && out_w <= 2 * p.width && out_h > 0 && out_w > 0,
          ErrorCode::Shape,
          "upsample_nearest2x: target " + std::to_string(out_h) + "x" + std::to_string(out_w) +
              " exceeds twice the input size " + to_string(x.shape()));
  const auto in = x.values();
  std::vector<T> out(p.channels * out_h * out_w);
  for (std::size_t c = 0; c < p.channels; ++c)
    for (std::size_t y = 0; y < out_h; ++y)
      for (std::size_t xx = 0; xx < out_w; ++xx)
        out[(c * out_h + y) * out_w + xx] = in[(c * p.height + y / 2) * p.width + xx / 2];
  const std::size_t xid = x.id;
  return x.tape->record(with_planes(x.shape(), p.channels, out_h, out_w), std::move(out), {xid},
                        [=](Tape<T>& tape, std::size_t self) {
                          const auto g = tape.grad(self);
                          auto gx = tape.grad_buffer(xid);
                          for (std::size_t c = 0; c < p.channels; ++c)
                            for (std::size_t y = 0; y < out_h; ++y)
                              for (std::size_t xx = 0; xx < out_w; ++xx)
                                gx[(c * p.height + y / 2) * p.width + xx / 2] +=
                                    g[(c * out_h + y) * out_w + xx];
                        });
}

template <typename T>
Var<T> concat_channels(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "concat_channels");
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  require(as.size() == 3 && bs.size() == 3, ErrorCode::Shape,
          "concat_channels: operands must be [C,H,W], got " + to_string(as) + " and " +
              to_string(bs));
  require(as[1] == bs[1], ErrorCode::Shape,
          "concat_channels: axis 1 (height) differs: " + to_string(as) + " vs " + to_string(bs));
  require(as[2] == bs[2], ErrorCode::Shape,
          "concat_channels: axis 2 (width) differs: " + to_string(as) + " vs " + to_string(bs));
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> out;
  out.reserve(av.size() + bv.size());
  out.insert(out.end(), av.begin(), av.end());
  out.insert(out.end(), bv.begin(), bv.end());
  const std::size_t aid = a.id, bid = b.id, na = av.size();
  return a.tape->record({as[0] + bs[0], as[1], as[2]}, std::move(out), {aid, bid},
                        [=](Tape<T>& tape, std::size_t self) {
                          const auto g = tape.grad(self);
                          if (tape.requires_grad(aid)) accumulate<T>(tape.grad_buffer(aid), g.first(na));
                          if (tape.requires_grad(bid)) accumulate<T>(tape.grad_buffer(bid), g.subspan(na));
                        });
}

template <typename T>
Var<T> add(Var<T> a, Var<T> b) {
  require_same_tape(a, b, "add");
  require(a.shape() == b.shape(), ErrorCode::Shape,
          "add: shapes differ: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  const std::size_t aid = a.id, bid = b.id;
  return a.tape->record(a.shape(), std::move(out), {aid, bid}, [=](Tape<T>& tape, std::size_t self) {
    const auto g = tape.grad(self);
    if (tape.requires_grad(aid)) accumulate<T>(tape.grad_buffer(aid), g);
    if (tape.requires_grad(bid)) accumulate<T>(tape.grad_buffer(bid), g);
  });
}

template <typename T>
Var<T> sub(Var<T> a, Var<T> b) {
  return add(a, scale(b, -1.0));
}

template <typename T>
Var<T> scale(Var<T> x, double factor) {
  return affine(x, factor, 0.0);
}

template <typename T>
Var<T> affine(Var<T> x, double factor, double shift) {
  const T f = static_cast<T>(factor);
  const T s = static_cast<T>(shift);
  const auto in = x.values();
  std::vector<T> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] * f + s;
  const std::size_t xid = x.id;
  return x.tape->record(x.shape(), std::move(out), {xid}, [=](Tape<T>& tape, std::size_t self) {
    const auto g = tape.grad(self);
    auto gx = tape.grad_buffer(xid);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * f;
  });
}

template <typename T>
Var<T> reshape(Var<T> x, Shape shape) {
  require(numel(shape) == x.size(), ErrorCode::Shape,
          "reshape: cannot view " + to_string(x.shape()) + " as " + to_string(shape));
  const auto in = x.values();
  const std::size_t xid = x.id;
  return x.tape->record(std::move(shape), std::vector<T>(in.begin(), in.end()), {xid},
                        [=](Tape<T>& tape, std::size_t self) {
                          accumulate<T>(tape.grad_buffer(xid), tape.grad(self));
                        });
}

template <typename T>
Var<T> sum(Var<T> x) {
  double acc = 0.0;
  for (T v : x.values()) acc += v;
  const std::size_t xid = x.id;
  return x.tape->record({1}, {static_cast<T>(acc)}, {xid}, [=](Tape<T>& tape, std::size_t self) {
    const T g = tape.grad(self)[0];
    auto gx = tape.grad_buffer(xid);
    for (auto& v : gx) v += g;
  });
}

template <typename T>
Var<T> add_scalars(std::span<const Var<T>> terms) {
  require(!terms.empty(), ErrorCode::InvalidArgument, "add_scalars: no terms");
  double acc = 0.0;
  std::vector<std::size_t> ids;
  for (const auto& t : terms) {
    require(t.tape == terms[0].tape, ErrorCode::InvalidArgument,
            "add_scalars: operands live on different tapes");
    require(t.size() == 1, ErrorCode::Shape, "add_scalars: term of shape " + to_string(t.shape()));
    acc += static_cast<double>(t.values()[0]);
    ids.push_back(t.id);
  }
  auto inputs = ids;
  return terms[0].tape->record({1}, {static_cast<T>(acc)}, std::move(inputs),
                               [ids](Tape<T>& tape, std::size_t self) {
                                 const T g = tape.grad(self)[0];
                                 for (auto id : ids)
                                   if (tape.requires_grad(id)) tape.grad_buffer(id)[0] += g;
                               });
}

template <typename T>
Var<T> mse_loss(Var<T> pred, Var<T> target) {
  require_same_tape(pred, target, "mse_loss");
  require(pred.shape() == target.shape(), ErrorCode::Shape,
          "mse_loss: shapes differ: " + to_string(pred.shape()) + " vs " +
              to_string(target.shape()));
  const auto p = pred.values();
  const auto t = target.values();
  require(!p.empty(), ErrorCode::Shape, "mse_loss: empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(t[i]);
    acc += d * d;
  }
  const double n = static_cast<double>(p.size());
  const std::size_t pid = pred.id, tid = target.id;
  return pred.tape->record(
      {1}, {static_cast<T>(acc / n)}, {pid, tid}, [=](Tape<T>& tape, std::size_t self) {
        const double g = tape.grad(self)[0];
        const auto pv = tape.value(pid);
        const auto tv = tape.value(tid);
        const bool gp = tape.requires_grad(pid), gt = tape.requires_grad(tid);
        std::span<T> gpb, gtb;
        if (gp) gpb = tape.grad_buffer(pid);
        if (gt) gtb = tape.grad_buffer(tid);
        for (std::size_t i = 0; i < pv.size(); ++i) {
          const double d = 2.0 * g * (static_cast<double>(pv[i]) - tv[i]) / n;
          if (gp) gpb[i] += static_cast<T>(d);
          if (gt) gtb[i] -= static_cast<T>(d);
        }
      });
}

template <typename T>
Var<T> half_squared_error(Var<T> pred, std::span<const T> target) {
  const auto p = pred.values();
  require(p.size() == target.size(), ErrorCode::Shape,
          "half_squared_error: prediction has " + std::to_string(p.size()) + " values, target " +
              std::to_string(target.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(target[i]);
    acc += d * d;
  }
  const std::size_t pid = pred.id;
  return pred.tape->record({1}, {static_cast<T>(0.5 * acc)}, {pid},
                           [=](Tape<T>& tape, std::size_t self) {
                             const T g = tape.grad(self)[0];
                             const auto pv = tape.value(pid);
                             auto gp = tape.grad_buffer(pid);
                             for (std::size_t i = 0; i < pv.size(); ++i)
                               gp[i] += g * (pv[i] - target[i]);
                           });
}

template <typename T>
Var<T> smoothed_tv_loss(Var<T> image, double eps) {
  const Shape& s = image.shape();
  require(s.size() >= 2, ErrorCode::Shape,
          "smoothed_tv_loss: need at least [H,W], got " + to_string(s));
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  const std::size_t planes = numel(s) / (h * w);
  const auto v = image.values();
  const double eps2 = eps * eps;
  double acc = 0.0;
  for (std::size_t c = 0; c < planes; ++c) {
    const T* p = v.data() + c * h * w;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double here = p[y * w + x];
        const double dx = x + 1 < w ? p[y * w + x + 1] - here : 0.0;
        const double dy = y + 1 < h ? p[(y + 1) * w + x] - here : 0.0;
        acc += std::sqrt(dx * dx + dy * dy + eps2);
      }
    }
  }
  const std::size_t iid = image.id;
  return image.tape->record(
      {1}, {static_cast<T>(acc)}, {iid}, [=](Tape<T>& tape, std::size_t self) {
        const double g = tape.grad(self)[0];
        const auto vv = tape.value(iid);
        auto gi = tape.grad_buffer(iid);
        for (std::size_t c = 0; c < planes; ++c) {
          const T* p = vv.data() + c * h * w;
          T* gp = gi.data() + c * h * w;
          for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
              const double here = p[y * w + x];
              const double dx = x + 1 < w ? p[y * w + x + 1] - here : 0.0;
              const double dy = y + 1 < h ? p[(y + 1) * w + x] - here : 0.0;
              const double mag = std::sqrt(dx * dx + dy * dy + eps2);
              if (mag == 0.0) continue;
              const double gx = g * dx / mag;
              const double gy = g * dy / mag;
              if (x + 1 < w) {
                gp[y * w + x + 1] += static_cast<T>(gx);
                gp[y * w + x] -= static_cast<T>(gx);
              }
              if (y + 1 < h) {
                gp[(y + 1) * w + x] += static_cast<T>(gy);
                gp[y * w + x] -= static_cast<T>(gy);
              }
            }
          }
        }
      });
}

template <typename T>
Var<T> project(std::span<const T> matrix, std::size_t rows, std::size_t cols, Var<T> x) {
  require(matrix.size() == rows * cols, ErrorCode::Shape,
          "project: matrix holds " + std::to_string(matrix.size()) + " values, expected " +
              std::to_string(rows) + "x" + std::to_string(cols));
  require(x.size() == cols, ErrorCode::Shape,
          "project: input has " + std::to_string(x.size()) + " values but matrix axis 1 is " +
              std::to_string(cols));
  std::vector<T> out(rows);
  blas::gemv<T>(false, rows, cols, T(1), matrix.data(), cols, x.values().data(), T(0), out.data());
  const std::size_t xid = x.id;
  return x.tape->record({rows}, std::move(out), {xid}, [=](Tape<T>& tape, std::size_t self) {
    const auto g = tape.grad(self);
    auto gx = tape.grad_buffer(xid);
    blas::gemv<T>(true, rows, cols, T(1), matrix.data(), cols, g.data(), T(1), gx.data());
  });
}

#define GHOSTKIT_INSTANTIATE_OPS(T)                                                      \
  template Var<T> conv2d<T>(Var<T>, Var<T>, Var<T>);                                     \
  template Var<T> dense<T>(Var<T>, Var<T>, Var<T>);                                      \
  template Var<T> relu<T>(Var<T>);                                                       \
  template Var<T> leaky_relu<T>(Var<T>, double);                                         \
  template Var<T> sin<T>(Var<T>);                                                        \
  template Var<T> maxpool2x2<T>(Var<T>);                                                 \
  template Var<T> upsample_nearest2x<T>(Var<T>, std::size_t, std::size_t);               \
  template Var<T> concat_channels<T>(Var<T>, Var<T>);                                    \
  template Var<T> add<T>(Var<T>, Var<T>);                                                \
  template Var<T> sub<T>(Var<T>, Var<T>);                                                \
  template Var<T> scale<T>(Var<T>, double);                                              \
  template Var<T> affine<T>(Var<T>, double, double);                                     \
  template Var<T> reshape<T>(Var<T>, Shape);                                             \
  template Var<T> sum<T>(Var<T>);                                                        \
  template Var<T> add_scalars<T>(std::span<const Var<T>>);                               \
  template Var<T> mse_loss<T>(Var<T>, Var<T>);                                           \
  template Var<T> half_squared_error<T>(Var<T>, std::span<const T>);                     \
  template Var<T> smoothed_tv_loss<T>(Var<T>, double);                                   \
  template Var<T> project<T>(std::span<const T>, std::size_t, std::size_t, Var<T>);

GHOSTKIT_INSTANTIATE_OPS(float)
GHOSTKIT_INSTANTIATE_OPS(double)

}  // namespace ghostkit::tensor
