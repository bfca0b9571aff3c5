// Copyright 2026 The finsep authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "finsep/ops.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace finsep::numcore {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

Tape& tape_of(Var a) {
  require(a.valid(), "op: invalid var");
  return *a.tape;
}

void same_tape(Var a, Var b) {
  require(a.tape == b.tape, "op: vars from different tapes");
}

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

int64_t conv1d_out_len(int64_t L, int64_t k, const Conv1dOpts& o) {
  const int64_t span = o.dilation * (k - 1) + 1;
  const int64_t lout = (L + 2 * o.padding - span) / o.stride + 1;
  require(lout >= 1, "conv1d: output length < 1 (input " + std::to_string(L) + ", kernel " +
                         std::to_string(k) + ")");
  return lout;
}

bool all_finite(const Tensor& t) {
  for (double v : t.vec())
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------- elementwise ----------

namespace {

template <typename Fwd, typename Bwd>
Var binary_same_shape(Var a, Var b, const char* name, Fwd fwd, Bwd bwd) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  const Tensor& bv = t.val(b);
  require(av.same_shape(bv), std::string(name) + ": shape mismatch " + av.shape_str() + " vs " +
                                 bv.shape_str());
  Tensor out(av.shape());
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = fwd(av[i], bv[i]);
  const int32_t aid = a.id, bid = b.id;
  return t.record(std::move(out), {a, b}, [aid, bid, bwd](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad_buf(self);
    const Tensor& av2 = tp.val_of(aid);
    const Tensor& bv2 = tp.val_of(bid);
    const bool wa = tp.grad_wanted(aid), wb = tp.grad_wanted(bid);
    Tensor* ga = wa ? &tp.grad_buf(aid) : nullptr;
    Tensor* gb = wb ? &tp.grad_buf(bid) : nullptr;
    const int64_t n2 = g.numel();
    for (int64_t i = 0; i < n2; ++i) {
      double da, db;
      bwd(av2[i], bv2[i], g[i], da, db);
      if (ga) (*ga)[i] += da;
      if (gb) (*gb)[i] += db;
    }
  });
}

template <typename Fwd, typename Bwd>
Var unary(Var a, Fwd fwd, Bwd bwd) {
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  Tensor out(av.shape());
  const int64_t n = av.numel();
  for (int64_t i = 0; i < n; ++i) out[i] = fwd(av[i]);
  const int32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, bwd](Tape& tp, int32_t self) {
    if (!tp.grad_wanted(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    const Tensor& av2 = tp.val_of(aid);
    const Tensor& yv = tp.val_of(self);
    Tensor& ga = tp.grad_buf(aid);
    const int64_t n2 = g.numel();
    for (int64_t i = 0; i < n2; ++i) ga[i] += bwd(av2[i], yv[i]) * g[i];
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_same_shape(a, b, "add", [](double x, double y) { return x + y; },
                           [](double, double, double g, double& da, double& db) {
                             da = g;
                             db = g;
                           });
}

Var sub(Var a, Var b) {
  return binary_same_shape(a, b, "sub", [](double x, double y) { return x - y; },
                           [](double, double, double g, double& da, double& db) {
                             da = g;
                             db = -g;
                           });
}

Var mul(Var a, Var b) {
  return binary_same_shape(a, b, "mul", [](double x, double y) { return x * y; },
                           [](double x, double y, double g, double& da, double& db) {
                             da = g * y;
                             db = g * x;
                           });
}

Var divide(Var a, Var b) {
  return binary_same_shape(a, b, "divide", [](double x, double y) { return x / y; },
                           [](double x, double y, double g, double& da, double& db) {
                             da = g / y;
                             db = -g * x / (y * y);
                           });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var add_const(Var a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var mul_scalar(Var a, Var s) {
  same_tape(a, s);
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  const Tensor& sv = t.val(s);
  require(sv.numel() == 1, "mul_scalar: scalar var must have one element");
  Tensor out(av.shape());
  const double sc = sv[0];
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] * sc;
  const int32_t aid = a.id, sid = s.id;
  return t.record(std::move(out), {a, s}, [aid, sid](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad_buf(self);
    const Tensor& av2 = tp.val_of(aid);
    const double sc2 = tp.val_of(sid)[0];
    if (tp.grad_wanted(aid)) {
      Tensor& ga = tp.grad_buf(aid);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * sc2;
    }
    if (tp.grad_wanted(sid)) {
      double acc = 0.0;
      for (int64_t i = 0; i < g.numel(); ++i) acc += g[i] * av2[i];
      tp.grad_buf(sid)[0] += acc;
    }
  });
}

Var sum_all(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  double acc = 0.0;
  for (int64_t i = 0; i < av.numel(); ++i) acc += av[i];
  const int32_t aid = a.id;
  return t.record(Tensor::scalar(acc), {a}, [aid](Tape& tp, int32_t self) {
    if (!tp.grad_wanted(aid)) return;
    const double g = tp.grad_buf(self)[0];
    Tensor& ga = tp.grad_buf(aid);
    for (int64_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  });
}

Var mean_all(Var a) {
  const int64_t n = tape_of(a).val(a).numel();
  require(n > 0, "mean_all: empty tensor");
  return scale(sum_all(a), 1.0 / static_cast<double>(n));
}

Var abs_val(Var a) {
  return unary(a, [](double x) { return std::fabs(x); },
               [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Var log_val(Var a) {
  return unary(a, [](double x) { return std::log(x); },
               [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi) {
  require(lo <= hi, "clamp: lo > hi");
  return unary(a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
               [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Var reshape(Var a, std::vector<int64_t> shape) {
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  Tensor out(std::move(shape), av.vec());
  require(out.numel() == av.numel(), "reshape: element count mismatch");
  const int32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid](Tape& tp, int32_t self) {
    if (!tp.grad_wanted(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    Tensor& ga = tp.grad_buf(aid);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i];
  });
}

namespace {

Var slice_axis(Var a, int axis, int64_t from, int64_t count, const char* name) {
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  require(av.rank() == 3, std::string(name) + ": tensor must be [batch, channel, time]");
  const int64_t B = av.dim(0), C = av.dim(1), L = av.dim(2);
  const int64_t extent = axis == 1 ? C : L;
  require(from >= 0 && count >= 1 && from + count <= extent, std::string(name) + ": range out of bounds");

  std::vector<int64_t> shape{B, axis == 1 ? count : C, axis == 2 ? count : L};
  Tensor out(shape);
  const int64_t oc = shape[1], ol = shape[2];
  for (int64_t b = 0; b < B; ++b)
    for (int64_t c = 0; c < oc; ++c)
      for (int64_t l = 0; l < ol; ++l)
        out.at3(b, c, l) = av.at3(b, axis == 1 ? from + c : c, axis == 2 ? from + l : l);

  const int32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, axis, from](Tape& tp, int32_t self) {
    if (!tp.grad_wanted(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    Tensor& ga = tp.grad_buf(aid);
    const int64_t B2 = g.dim(0), oc2 = g.dim(1), ol2 = g.dim(2);
    for (int64_t b = 0; b < B2; ++b)
      for (int64_t c = 0; c < oc2; ++c)
        for (int64_t l = 0; l < ol2; ++l)
          ga.at3(b, axis == 1 ? from + c : c, axis == 2 ? from + l : l) += g.at3(b, c, l);
  });
}

}  // namespace

Var slice_channels(Var a, int64_t from, int64_t count) {
  return slice_axis(a, 1, from, count, "slice_channels");
}

Var slice_time(Var a, int64_t from, int64_t count) {
  return slice_axis(a, 2, from, count, "slice_time");
}

// ---------- activations ----------

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(a, [](double x) { return sigmoid_d(x); },
               [](double, double y) { return y * (1.0 - y); });
}

Var prelu(Var a, Var slope) {
  same_tape(a, slope);
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  const Tensor& sv = t.val(slope);
  require(sv.numel() == 1, "prelu: slope must be a single-element tensor");
  const double s = sv[0];
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] > 0.0 ? av[i] : s * av[i];
  const int32_t aid = a.id, sid = slope.id;
  return t.record(std::move(out), {a, slope}, [aid, sid](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad_buf(self);
    const Tensor& av2 = tp.val_of(aid);
    const double s2 = tp.val_of(sid)[0];
    if (tp.grad_wanted(aid)) {
      Tensor& ga = tp.grad_buf(aid);
      for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * (av2[i] > 0.0 ? 1.0 : s2);
    }
    if (tp.grad_wanted(sid)) {
      double acc = 0.0;
      for (int64_t i = 0; i < g.numel(); ++i)
        if (av2[i] <= 0.0) acc += g[i] * av2[i];
      tp.grad_buf(sid)[0] += acc;
    }
  });
}

Var glu(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = t.val(a);
  require(av.rank() == 3, "glu: tensor must be [batch, channel, time]");
  const int64_t B = av.dim(0), C2 = av.dim(1), L = av.dim(2);
  require(C2 % 2 == 0, "glu: channel count must be even");
  const int64_t C = C2 / 2;
  Tensor out({B, C, L});
  for (int64_t b = 0; b < B; ++b)
    for (int64_t c = 0; c < C; ++c)
      for (int64_t l = 0; l < L; ++l)
        out.at3(b, c, l) = av.at3(b, c, l) * sigmoid_d(av.at3(b, C + c, l));
  const int32_t aid = a.id;
  return t.record(std::move(out), {a}, [aid, C](Tape& tp, int32_t self) {
    if (!tp.grad_wanted(aid)) return;
    const Tensor& g = tp.grad_buf(self);
    const Tensor& av2 = tp.val_of(aid);
    Tensor& ga = tp.grad_buf(aid);
    const int64_t B2 = g.dim(0), L2 = g.dim(2);
    for (int64_t b = 0; b < B2; ++b)
      for (int64_t c = 0; c < C; ++c)
        for (int64_t l = 0; l < L2; ++l) {
          const double content = av2.at3(b, c, l);
          const double sg = sigmoid_d(av2.at3(b, C + c, l));
          const double gv = g.at3(b, c, l);
          ga.at3(b, c, l) += gv * sg;
          ga.at3(b, C + c, l) += gv * content * sg * (1.0 - sg);
        }
  });
}

// ---------- convolution ----------

Var conv1d(Var x, Var w, std::optional<Var> bias, const Conv1dOpts& opts) {
  same_tape(x, w);
  if (bias) same_tape(x, *bias);
  Tape& t = tape_of(x);
  const Tensor& xv = t.val(x);
  const Tensor& wv = t.val(w);
  require(xv.rank() == 3, "conv1d: input must be [batch, channel, time]");
  require(wv.rank() == 3, "conv1d: weight must be [out, in/groups, kernel]");
  require(opts.stride >= 1 && opts.dilation >= 1 && opts.groups >= 1 && opts.padding >= 0,
          "conv1d: invalid geometry");
  const int64_t B = xv.dim(0), Ci = xv.dim(1), L = xv.dim(2);
  const int64_t Co = wv.dim(0), Cig = wv.dim(1), K = wv.dim(2);
  require(Ci % opts.groups == 0 && Co % opts.groups == 0,
          "conv1d: channels not divisible by groups");
  require(Cig == Ci / opts.groups, "conv1d: weight in-channels disagree with input/groups");
  if (bias) require(t.val(*bias).numel() == Co, "conv1d: bias must have out-channel length");
  const int64_t Lout = conv1d_out_len(L, K, opts);
  const int64_t ocpg = Co / opts.groups;

  Tensor out({B, Co, Lout});
  const double* bptr = bias ? t.val(*bias).data() : nullptr;
  for (int64_t b = 0; b < B; ++b)
    for (int64_t g = 0; g < opts.groups; ++g)
      for (int64_t ol = 0; ol < ocpg; ++ol) {
        const int64_t o = g * ocpg + ol;
        double* yrow = out.data() + (b * Co + o) * Lout;
        if (bptr) {
          const double bv = bptr[o];
          for (int64_t i = 0; i < Lout; ++i) yrow[i] = bv;
        }
        for (int64_t il = 0; il < Cig; ++il) {
          const double* xrow = xv.data() + (b * Ci + g * Cig + il) * L;
          const double* wrow = wv.data() + (o * Cig + il) * K;
          for (int64_t j = 0; j < K; ++j) {
            const double wj = wrow[j];
            if (wj == 0.0) continue;
            const int64_t off = j * opts.dilation - opts.padding;
            const int64_t tlo = off >= 0 ? 0 : (-off + opts.stride - 1) / opts.stride;
            const int64_t num = L - 1 - off;
            if (num < 0) continue;
            const int64_t thi = std::min(Lout - 1, num / opts.stride);
            const double* xp = xrow + tlo * opts.stride + off;
            for (int64_t tt = tlo; tt <= thi; ++tt, xp += opts.stride) yrow[tt] += wj * *xp;
          }
        }
      }

  std::vector<Var> parents{x, w};
  if (bias) parents.push_back(*bias);
  const int32_t xid = x.id, wid = w.id;
  const int32_t bid = bias ? bias->id : -1;
  const Conv1dOpts o = opts;
  return t.record(std::move(out), parents, [xid, wid, bid, o](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad_buf(self);
    const Tensor& xv2 = tp.val_of(xid);
    const Tensor& wv2 = tp.val_of(wid);
    const int64_t B2 = xv2.dim(0), Ci2 = xv2.dim(1), L2 = xv2.dim(2);
    const int64_t Co2 = wv2.dim(0), Cig2 = wv2.dim(1), K2 = wv2.dim(2);
    const int64_t Lout2 = g.dim(2);
    const int64_t ocpg2 = Co2 / o.groups;
    const bool wx = tp.grad_wanted(xid), ww = tp.grad_wanted(wid);
    const bool wb = bid >= 0 && tp.grad_wanted(bid);
    Tensor* gx = wx ? &tp.grad_buf(xid) : nullptr;
    Tensor* gw = ww ? &tp.grad_buf(wid) : nullptr;
    Tensor* gb = wb ? &tp.grad_buf(bid) : nullptr;

    for (int64_t b = 0; b < B2; ++b)
      for (int64_t grp = 0; grp < o.groups; ++grp)
        for (int64_t ol = 0; ol < ocpg2; ++ol) {
          const int64_t oc = grp * ocpg2 + ol;
          const double* grow = g.data() + (b * Co2 + oc) * Lout2;
          if (gb) {
            double acc = 0.0;
            for (int64_t tt = 0; tt < Lout2; ++tt) acc += grow[tt];
            (*gb)[oc] += acc;
          }
          if (!gx && !gw) continue;
          for (int64_t il = 0; il < Cig2; ++il) {
            const int64_t ci = grp * Cig2 + il;
            const double* xrow = xv2.data() + (b * Ci2 + ci) * L2;
            const double* wrow = wv2.data() + (oc * Cig2 + il) * K2;
            double* gxrow = gx ? gx->data() + (b * Ci2 + ci) * L2 : nullptr;
            double* gwrow = gw ? gw->data() + (oc * Cig2 + il) * K2 : nullptr;
            for (int64_t j = 0; j < K2; ++j) {
              const int64_t off = j * o.dilation - o.padding;
              const int64_t tlo = off >= 0 ? 0 : (-off + o.stride - 1) / o.stride;
              const int64_t num = L2 - 1 - off;
              if (num < 0) continue;
              const int64_t thi = std::min(Lout2 - 1, num / o.stride);
              if (gxrow) {
                const double wj = wrow[j];
                double* xp = gxrow + tlo * o.stride + off;
                for (int64_t tt = tlo; tt <= thi; ++tt, xp += o.stride) *xp += wj * grow[tt];
              }
              if (gwrow) {
                double acc = 0.0;
                const double* xp = xrow + tlo * o.stride + off;
                for (int64_t tt = tlo; tt <= thi; ++tt, xp += o.stride) acc += grow[tt] * *xp;
                gwrow[j] += acc;
              }
            }
          }
        }
  });
}

Var conv1d_transpose(Var x, Var w, std::optional<Var> bias, int64_t stride, int64_t padding) {
  same_tape(x, w);
  if (bias) same_tape(x, *bias);
  Tape& t = tape_of(x);
  const Tensor& xv = t.val(x);
  const Tensor& wv = t.val(w);
  require(xv.rank() == 3, "conv1d_transpose: input must be [batch, channel, time]");
  require(wv.rank() == 3, "conv1d_transpose: weight must be [in, out, kernel]");
  require(stride >= 1 && padding >= 0, "conv1d_transpose: invalid geometry");
  const int64_t B = xv.dim(0), Ci = xv.dim(1), Lin = xv.dim(2);
  const int64_t Wci = wv.dim(0), Co = wv.dim(1), K = wv.dim(2);
  require(Wci == Ci, "conv1d_transpose: weight in-channels disagree with input");
  if (bias) require(t.val(*bias).numel() == Co, "conv1d_transpose: bias length mismatch");
  const int64_t Lout = (Lin - 1) * stride + K - 2 * padding;
  require(Lout >= 1, "conv1d_transpose: output length < 1");

  Tensor out({B, Co, Lout});
  if (bias) {
    const double* bptr = t.val(*bias).data();
    for (int64_t b = 0; b < B; ++b)
      for (int64_t o = 0; o < Co; ++o) {
        double* yrow = out.data() + (b * Co + o) * Lout;
        for (int64_t i = 0; i < Lout; ++i) yrow[i] = bptr[o];
      }
  }
  for (int64_t b = 0; b < B; ++b)
    for (int64_t i = 0; i < Ci; ++i) {
      const double* xrow = xv.data() + (b * Ci + i) * Lin;
      for (int64_t o = 0; o < Co; ++o) {
        double* yrow = out.data() + (b * Co + o) * Lout;
        const double* wrow = wv.data() + (i * Co + o) * K;
        for (int64_t j = 0; j < K; ++j) {
          const double wj = wrow[j];
          if (wj == 0.0) continue;
          const int64_t off = j - padding;
          const int64_t ulo = off >= 0 ? 0 : (-off + stride - 1) / stride;
          const int64_t num = Lout - 1 - off;
          if (num < 0) continue;
          const int64_t uhi = std::min(Lin - 1, num / stride);
          double* yp = yrow + ulo * stride + off;
          for (int64_t u = ulo; u <= uhi; ++u, yp += stride) *yp += wj * xrow[u];
        }
      }
    }

  std::vector<Var> parents{x, w};
  if (bias) parents.push_back(*bias);
  const int32_t xid = x.id, wid = w.id;
  const int32_t bid = bias ? bias->id : -1;
  return t.record(std::move(out), parents, [xid, wid, bid, stride, padding](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad_buf(self);
    const Tensor& xv2 = tp.val_of(xid);
    const Tensor& wv2 = tp.val_of(wid);
    const int64_t B2 = xv2.dim(0), Ci2 = xv2.dim(1), Lin2 = xv2.dim(2);
    const int64_t Co2 = wv2.dim(1), K2 = wv2.dim(2);
    const int64_t Lout2 = g.dim(2);
    const bool wx = tp.grad_wanted(xid), ww = tp.grad_wanted(wid);
    const bool wb = bid >= 0 && tp.grad_wanted(bid);
    Tensor* gx = wx ? &tp.grad_buf(xid) : nullptr;
    Tensor* gw = ww ? &tp.grad_buf(wid) : nullptr;
    if (wb) {
      Tensor& gb = tp.grad_buf(bid);
      for (int64_t b = 0; b < B2; ++b)
        for (int64_t o = 0; o < Co2; ++o) {
          const double* grow = g.data() + (b * Co2 + o) * Lout2;
          double acc = 0.0;
          for (int64_t i = 0; i < Lout2; ++i) acc += grow[i];
          gb[o] += acc;
        }
    }
    if (!gx && !gw) return;
    for (int64_t b = 0; b < B2; ++b)
      for (int64_t i = 0; i < Ci2; ++i) {
        const double* xrow = xv2.data() + (b * Ci2 + i) * Lin2;
        double* gxrow = gx ? gx->data() + (b * Ci2 + i) * Lin2 : nullptr;
        for (int64_t o = 0; o < Co2; ++o) {
          const double* grow = g.data() + (b * Co2 + o) * Lout2;
          const double* wrow = wv2.data() + (i * Co2 + o) * K2;
          double* gwrow = gw ? gw->data() + (i * Co2 + o) * K2 : nullptr;
          for (int64_t j = 0; j < K2; ++j) {
            const int64_t off = j - padding;
            const int64_t ulo = off >= 0 ? 0 : (-off + stride - 1) / stride;
            const int64_t num = Lout2 - 1 - off;
            if (num < 0) continue;
            const int64_t uhi = std::min(Lin2 - 1, num / stride);
            const double* gp = grow + ulo * stride + off;
            if (gxrow) {
              const double wj = wrow[j];
              const double* p = gp;
              for (int64_t u = ulo; u <= uhi; ++u, p += stride) gxrow[u] += wj * *p;
            }
            if (gwrow) {
              double acc = 0.0;
              const double* p = gp;
              for (int64_t u = ulo; u <= uhi; ++u, p += stride) acc += xrow[u] * *p;
              gwrow[j] += acc;
            }
          }
        }
      }
  });
}

// ---------- normalization ----------

Var global_layer_norm(Var x, Var gain, Var bias, double eps) {
  same_tape(x, gain);
  same_tape(x, bias);
  Tape& t = tape_of(x);
  const Tensor& xv = t.val(x);
  require(xv.rank() == 3, "global_layer_norm: input must be [batch, channel, time]");
  const int64_t B = xv.dim(0), C = xv.dim(1), L = xv.dim(2);
  require(t.val(gain).numel() == C && t.val(bias).numel() == C,
          "global_layer_norm: gain/bias must be per-channel");
  const int64_t N = C * L;

  auto cache = std::make_shared<std::pair<std::vector<double>, std::vector<double>>>();
  auto& xhat = cache->first;   // normalized values, B*C*L
  auto& inv = cache->second;   // 1/sqrt(var+eps) per batch item
  xhat.resize(static_cast<size_t>(B * N));
  inv.resize(static_cast<size_t>(B));

  Tensor out({B, C, L});
  const double* gp = t.val(gain).data();
  const double* bp = t.val(bias).data();
  for (int64_t b = 0; b < B; ++b) {
    const double* xp = xv.data() + b * N;
    double mean = 0.0;
    for (int64_t i = 0; i < N; ++i) mean += xp[i];
    mean /= static_cast<double>(N);
    double var = 0.0;
    for (int64_t i = 0; i < N; ++i) {
      const double d = xp[i] - mean;
      var += d * d;
    }
    var /= static_cast<double>(N);
    const double iv = 1.0 / std::sqrt(var + eps);
    inv[static_cast<size_t>(b)] = iv;
    double* hp = xhat.data() + b * N;
    double* op = out.data() + b * N;
    for (int64_t c = 0; c < C; ++c)
      for (int64_t l = 0; l < L; ++l) {
        const int64_t i = c * L + l;
        hp[i] = (xp[i] - mean) * iv;
        op[i] = gp[c] * hp[i] + bp[c];
      }
  }

  const int32_t xid = x.id, gid = gain.id, bid = bias.id;
  return t.record(std::move(out), {x, gain, bias}, [xid, gid, bid, cache, C, L, N](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad_buf(self);
    const int64_t B2 = g.dim(0);
    const double* gainp = tp.val_of(gid).data();
    const auto& xhat2 = cache->first;
    const auto& inv2 = cache->second;

    if (tp.grad_wanted(gid) || tp.grad_wanted(bid)) {
      Tensor* gg = tp.grad_wanted(gid) ? &tp.grad_buf(gid) : nullptr;
      Tensor* gb = tp.grad_wanted(bid) ? &tp.grad_buf(bid) : nullptr;
      for (int64_t b = 0; b < B2; ++b) {
        const double* gp2 = g.data() + b * N;
        const double* hp = xhat2.data() + b * N;
        for (int64_t c = 0; c < C; ++c) {
          double sg = 0.0, sb = 0.0;
          for (int64_t l = 0; l < L; ++l) {
            const int64_t i = c * L + l;
            sg += gp2[i] * hp[i];
            sb += gp2[i];
          }
          if (gg) (*gg)[c] += sg;
          if (gb) (*gb)[c] += sb;
        }
      }
    }
    if (tp.grad_wanted(xid)) {
      Tensor& gx = tp.grad_buf(xid);
      for (int64_t b = 0; b < B2; ++b) {
        const double* gp2 = g.data() + b * N;
        const double* hp = xhat2.data() + b * N;
        double sum_dh = 0.0, sum_dh_h = 0.0;
        for (int64_t c = 0; c < C; ++c)
          for (int64_t l = 0; l < L; ++l) {
            const int64_t i = c * L + l;
            const double dh = gp2[i] * gainp[c];
            sum_dh += dh;
            sum_dh_h += dh * hp[i];
          }
        const double mean_dh = sum_dh / static_cast<double>(N);
        const double mean_dh_h = sum_dh_h / static_cast<double>(N);
        double* gxp = gx.data() + b * N;
        for (int64_t c = 0; c < C; ++c)
          for (int64_t l = 0; l < L; ++l) {
            const int64_t i = c * L + l;
            const double dh = gp2[i] * gainp[c];
            gxp[i] += inv2[static_cast<size_t>(b)] * (dh - mean_dh - hp[i] * mean_dh_h);
          }
      }
    }
  });
}

// ---------- linear ----------

Var linear(Var x, Var w, std::optional<Var> bias) {
  same_tape(x, w);
  if (bias) same_tape(x, *bias);
  Tape& t = tape_of(x);
  const Tensor& xv = t.val(x);
  const Tensor& wv = t.val(w);
  require(xv.rank() == 3, "linear: input must be [batch, channel, time]");
  require(wv.rank() == 2, "linear: weight must be [out, in]");
  const int64_t B = xv.dim(0), Ci = xv.dim(1), L = xv.dim(2);
  const int64_t Co = wv.dim(0);
  require(wv.dim(1) == Ci, "linear: weight in-dim disagrees with input channels");
  if (bias) require(t.val(*bias).numel() == Co, "linear: bias length mismatch");

  Tensor out({B, Co, L});
  const double* bptr = bias ? t.val(*bias).data() : nullptr;
  for (int64_t b = 0; b < B; ++b)
    for (int64_t o = 0; o < Co; ++o) {
      double* yrow = out.data() + (b * Co + o) * L;
      if (bptr)
        for (int64_t l = 0; l < L; ++l) yrow[l] = bptr[o];
      const double* wrow = wv.data() + o * Ci;
      for (int64_t i = 0; i < Ci; ++i) {
        const double wi = wrow[i];
        if (wi == 0.0) continue;
        const double* xrow = xv.data() + (b * Ci + i) * L;
        for (int64_t l = 0; l < L; ++l) yrow[l] += wi * xrow[l];
      }
    }

  std::vector<Var> parents{x, w};
  if (bias) parents.push_back(*bias);
  const int32_t xid = x.id, wid = w.id;
  const int32_t bid = bias ? bias->id : -1;
  return t.record(std::move(out), parents, [xid, wid, bid](Tape& tp, int32_t self) {
    const Tensor& g = tp.grad_buf(self);
    const Tensor& xv2 = tp.val_of(xid);
    const Tensor& wv2 = tp.val_of(wid);
    const int64_t B2 = xv2.dim(0), Ci2 = xv2.dim(1), L2 = xv2.dim(2);
    const int64_t Co2 = wv2.dim(0);
    if (bid >= 0 && tp.grad_wanted(bid)) {
      Tensor& gb = tp.grad_buf(bid);
      for (int64_t b = 0; b < B2; ++b)
        for (int64_t o = 0; o < Co2; ++o) {
          const double* grow = g.data() + (b * Co2 + o) * L2;
          double acc = 0.0;
          for (int64_t l = 0; l < L2; ++l) acc += grow[l];
          gb[o] += acc;
        }
    }
    const bool wx = tp.grad_wanted(xid), ww = tp.grad_wanted(wid);
    if (!wx && !ww) return;
    Tensor* gx = wx ? &tp.grad_buf(xid) : nullptr;
    Tensor* gw = ww ? &tp.grad_buf(wid) : nullptr;
    for (int64_t b = 0; b < B2; ++b)
      for (int64_t o = 0; o < Co2; ++o) {
        const double* grow = g.data() + (b * Co2 + o) * L2;
        const double* wrow = wv2.data() + o * Ci2;
        double* gwrow = gw ? gw->data() + o * Ci2 : nullptr;
        for (int64_t i = 0; i < Ci2; ++i) {
          const double* xrow = xv2.data() + (b * Ci2 + i) * L2;
          if (gx) {
            double* gxrow = gx->data() + (b * Ci2 + i) * L2;
            const double wi = wrow[i];
            for (int64_t l = 0; l < L2; ++l) gxrow[l] += wi * grow[l];
          }
          if (gwrow) {
            double acc = 0.0;
            for (int64_t l = 0; l < L2; ++l) acc += grow[l] * xrow[l];
            gwrow[i] += acc;
          }
        }
      }
  });
}

// ---------- bidirectional LSTM ----------

namespace {

// Forward intermediates for one (layer, direction, batch) lane.
struct LstmLane {
  std::vector<double> gates;   // T x 4H, post-nonlinearity (i, f, g, o)
  std::vector<double> c;       // T x H
  std::vector<double> tanh_c;  // T x H
  std::vector<double> h;       // T x H
};

struct LstmCache {
  int64_t B = 0, T = 0, H = 0, layers = 0;
  std::vector<int64_t> in_size;                 // per layer
  std::vector<std::vector<double>> layer_in;    // per layer, B x in x T (layer 0 copies x)
  std::vector<std::vector<LstmLane>> lanes;     // [layer*2+dir][b]
};

}  // namespace

Var bilstm(Var x, const BiLstmParams& params) {
  Tape& t = tape_of(x);
  const Tensor& xv = t.val(x);
  require(xv.rank() == 3, "bilstm: input must be [batch, channel, time]");
  require(!params.layers.empty(), "bilstm: needs at least one layer");
  const int64_t H = params.hidden;
  require(H >= 1, "bilstm: hidden size must be positive");
  const int64_t B = xv.dim(0), C = xv.dim(1), T = xv.dim(2);
  require(T >= 1, "bilstm: empty time axis");

  const int64_t n_layers = static_cast<int64_t>(params.layers.size());
  auto cache = std::make_shared<LstmCache>();
  cache->B = B;
  cache->T = T;
  cache->H = H;
  cache->layers = n_layers;
  cache->lanes.resize(static_cast<size_t>(n_layers * 2));

  std::vector<Var> parents{x};
  for (const auto& layer : params.layers)
    for (int d = 0; d < 2; ++d) {
      const LstmDirParams& p = layer[static_cast<size_t>(d)];
      same_tape(x, p.w_ih);
      same_tape(x, p.w_hh);
      same_tape(x, p.b_ih);
      same_tape(x, p.b_hh);
      parents.push_back(p.w_ih);
      parents.push_back(p.w_hh);
      parents.push_back(p.b_ih);
      parents.push_back(p.b_hh);
    }

  // validate parameter shapes
  for (int64_t l = 0; l < n_layers; ++l) {
    const int64_t in_size = l == 0 ? C : 2 * H;
    cache->in_size.push_back(in_size);
    for (int d = 0; d < 2; ++d) {
      const LstmDirParams& p = params.layers[static_cast<size_t>(l)][static_cast<size_t>(d)];
      const Tensor& wih = t.val(p.w_ih);
      const Tensor& whh = t.val(p.w_hh);
      require(wih.rank() == 2 && wih.dim(0) == 4 * H && wih.dim(1) == in_size,
              "bilstm: w_ih must be [4H, in]");
      require(whh.rank() == 2 && whh.dim(0) == 4 * H && whh.dim(1) == H,
              "bilstm: w_hh must be [4H, H]");
      require(t.val(p.b_ih).numel() == 4 * H && t.val(p.b_hh).numel() == 4 * H,
              "bilstm: biases must be [4H]");
    }
  }

  // forward
  std::vector<double> cur(static_cast<size_t>(B * C * T));
  for (int64_t i = 0; i < B * C * T; ++i) cur[static_cast<size_t>(i)] = xv[i];

  for (int64_t l = 0; l < n_layers; ++l) {
    const int64_t in_size = cache->in_size[static_cast<size_t>(l)];
    cache->layer_in.push_back(cur);
    std::vector<double> next(static_cast<size_t>(B * 2 * H * T), 0.0);
    for (int d = 0; d < 2; ++d) {
      const LstmDirParams& p = params.layers[static_cast<size_t>(l)][static_cast<size_t>(d)];
      const double* wih = t.val(p.w_ih).data();
      const double* whh = t.val(p.w_hh).data();
      const double* bih = t.val(p.b_ih).data();
      const double* bhh = t.val(p.b_hh).data();
      auto& lanes = cache->lanes[static_cast<size_t>(l * 2 + d)];
      lanes.resize(static_cast<size_t>(B));
      for (int64_t b = 0; b < B; ++b) {
        LstmLane& lane = lanes[static_cast<size_t>(b)];
        lane.gates.assign(static_cast<size_t>(T * 4 * H), 0.0);
        lane.c.assign(static_cast<size_t>(T * H), 0.0);
        lane.tanh_c.assign(static_cast<size_t>(T * H), 0.0);
        lane.h.assign(static_cast<size_t>(T * H), 0.0);
        std::vector<double> h_prev(static_cast<size_t>(H), 0.0);
        std::vector<double> c_prev(static_cast<size_t>(H), 0.0);
        std::vector<double> pre(static_cast<size_t>(4 * H));
        for (int64_t step = 0; step < T; ++step) {
          const int64_t tt = d == 0 ? step : T - 1 - step;
          for (int64_t r = 0; r < 4 * H; ++r) {
            double acc = bih[r] + bhh[r];
            const double* wr = wih + r * in_size;
            for (int64_t i = 0; i < in_size; ++i)
              acc += wr[i] * cur[static_cast<size_t>((b * in_size + i) * T + tt)];
            const double* vr = whh + r * H;
            for (int64_t i = 0; i < H; ++i) acc += vr[i] * h_prev[static_cast<size_t>(i)];
            pre[static_cast<size_t>(r)] = acc;
          }
          double* gates_t = lane.gates.data() + step * 4 * H;
          double* c_t = lane.c.data() + step * H;
          double* tc_t = lane.tanh_c.data() + step * H;
          double* h_t = lane.h.data() + step * H;
          for (int64_t i = 0; i < H; ++i) {
            const double gi = sigmoid_d(pre[static_cast<size_t>(i)]);
            const double gf = sigmoid_d(pre[static_cast<size_t>(H + i)]);
            const double gg = std::tanh(pre[static_cast<size_t>(2 * H + i)]);
            const double go = sigmoid_d(pre[static_cast<size_t>(3 * H + i)]);
            gates_t[i] = gi;
            gates_t[H + i] = gf;
            gates_t[2 * H + i] = gg;
            gates_t[3 * H + i] = go;
            const double cc = gf * c_prev[static_cast<size_t>(i)] + gi * gg;
            c_t[i] = cc;
            const double tc = std::tanh(cc);
            tc_t[i] = tc;
            h_t[i] = go * tc;
            next[static_cast<size_t>((b * 2 * H + d * H + i) * T + tt)] = h_t[i];
          }
          for (int64_t i = 0; i < H; ++i) {
            h_prev[static_cast<size_t>(i)] = h_t[i];
            c_prev[static_cast<size_t>(i)] = c_t[i];
          }
        }
      }
    }
    cur = std::move(next);
  }

  Tensor out({B, 2 * H, T}, cur);
  const int32_t xid = x.id;
  std::vector<int32_t> pids;
  for (size_t i = 1; i < parents.size(); ++i) pids.push_back(parents[i].id);

  return t.record(std::move(out), parents, [xid, pids, cache](Tape& tp, int32_t self) {
    const int64_t B2 = cache->B, T2 = cache->T, H2 = cache->H, n_layers2 = cache->layers;
    const Tensor& gout = tp.grad_buf(self);

    // dy for the layer being processed, laid out as B x 2H x T
    std::vector<double> dy(gout.vec());

    for (int64_t l = n_layers2 - 1; l >= 0; --l) {
      const int64_t in_size = cache->in_size[static_cast<size_t>(l)];
      const auto& layer_in = cache->layer_in[static_cast<size_t>(l)];
      std::vector<double> din(static_cast<size_t>(B2 * in_size * T2), 0.0);

      for (int d = 0; d < 2; ++d) {
        const size_t base = static_cast<size_t>((l * 2 + d) * 4);
        const int32_t wih_id = pids[base], whh_id = pids[base + 1];
        const int32_t bih_id = pids[base + 2], bhh_id = pids[base + 3];
        const double* wih = tp.val_of(wih_id).data();
        const double* whh = tp.val_of(whh_id).data();
        Tensor* gwih = tp.grad_wanted(wih_id) ? &tp.grad_buf(wih_id) : nullptr;
        Tensor* gwhh = tp.grad_wanted(whh_id) ? &tp.grad_buf(whh_id) : nullptr;
        Tensor* gbih = tp.grad_wanted(bih_id) ? &tp.grad_buf(bih_id) : nullptr;
        Tensor* gbhh = tp.grad_wanted(bhh_id) ? &tp.grad_buf(bhh_id) : nullptr;
        const auto& lanes = cache->lanes[static_cast<size_t>(l * 2 + d)];

        for (int64_t b = 0; b < B2; ++b) {
          const LstmLane& lane = lanes[static_cast<size_t>(b)];
          std::vector<double> dh(static_cast<size_t>(H2), 0.0);
          std::vector<double> dc(static_cast<size_t>(H2), 0.0);
          std::vector<double> dpre(static_cast<size_t>(4 * H2));
          for (int64_t step = T2 - 1; step >= 0; --step) {
            const int64_t tt = d == 0 ? step : T2 - 1 - step;
            const double* gates_t = lane.gates.data() + step * 4 * H2;
            const double* c_t = lane.c.data() + step * H2;
            const double* tc_t = lane.tanh_c.data() + step * H2;
            const double* c_prev = step > 0 ? lane.c.data() + (step - 1) * H2 : nullptr;
            const double* h_prev = step > 0 ? lane.h.data() + (step - 1) * H2 : nullptr;
            (void)c_t;
            for (int64_t i = 0; i < H2; ++i) {
              const double dh_i =
                  dh[static_cast<size_t>(i)] +
                  dy[static_cast<size_t>((b * 2 * H2 + d * H2 + i) * T2 + tt)];
              const double gi = gates_t[i], gf = gates_t[H2 + i];
              const double gg = gates_t[2 * H2 + i], go = gates_t[3 * H2 + i];
              const double tc = tc_t[i];
              const double dtc = dh_i * go;
              const double dci = dc[static_cast<size_t>(i)] + dtc * (1.0 - tc * tc);
              const double cp = c_prev ? c_prev[i] : 0.0;
              dpre[static_cast<size_t>(i)] = dci * gg * gi * (1.0 - gi);
              dpre[static_cast<size_t>(H2 + i)] = dci * cp * gf * (1.0 - gf);
              dpre[static_cast<size_t>(2 * H2 + i)] = dci * gi * (1.0 - gg * gg);
              dpre[static_cast<size_t>(3 * H2 + i)] = dh_i * tc * go * (1.0 - go);
              dc[static_cast<size_t>(i)] = dci * gf;
              dh[static_cast<size_t>(i)] = 0.0;  // refilled below from w_hh
            }
            for (int64_t r = 0; r < 4 * H2; ++r) {
              const double dp = dpre[static_cast<size_t>(r)];
              if (dp == 0.0) continue;
              if (gbih) (*gbih)[r] += dp;
              if (gbhh) (*gbhh)[r] += dp;
              if (gwih) {
                double* row = gwih->data() + r * in_size;
                for (int64_t i = 0; i < in_size; ++i)
                  row[i] += dp * layer_in[static_cast<size_t>((b * in_size + i) * T2 + tt)];
              }
              const double* wr = wih + r * in_size;
              for (int64_t i = 0; i < in_size; ++i)
                din[static_cast<size_t>((b * in_size + i) * T2 + tt)] += dp * wr[i];
              if (h_prev) {
                if (gwhh) {
                  double* row = gwhh->data() + r * H2;
                  for (int64_t i = 0; i < H2; ++i) row[i] += dp * h_prev[i];
                }
                const double* vr = whh + r * H2;
                for (int64_t i = 0; i < H2; ++i) dh[static_cast<size_t>(i)] += dp * vr[i];
              }
            }
          }
        }
      }
      dy = std::move(din);
    }

    if (tp.grad_wanted(xid)) {
      Tensor& gx = tp.grad_buf(xid);
      for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += dy[static_cast<size_t>(i)];
    }
  });
}

}  // namespace finsep::numcore
