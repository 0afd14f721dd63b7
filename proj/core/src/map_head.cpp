#include "frofa/map_head.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "frofa/rng.hpp"

namespace frofa {

std::size_t default_head_count(std::size_t channels) {
  const std::size_t cap = std::max<std::size_t>(1, channels / 64);
  for (std::size_t h = cap; h > 1; --h) {
    if (channels % h == 0) return h;
  }
  return 1;
}

std::size_t MapHeadParams::Slice::size() const {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

MapHeadParams::MapHeadParams(std::size_t channels, std::size_t classes, std::size_t heads)
    : channels_(channels), classes_(classes), heads_(heads) {
  if (channels == 0 || classes == 0) throw std::invalid_argument("map head needs C >= 1 and S >= 1");
  if (heads == 0 || channels % heads != 0) {
    throw std::invalid_argument("head count " + std::to_string(heads) + " does not divide C=" +
                                std::to_string(channels));
  }
  const std::size_t C = channels, S = classes, H = 4 * channels;
  const std::array<std::pair<const char*, std::vector<std::size_t>>, kTensorCount> layout{{
      {"probe", {C}},
      {"attention/query/kernel", {C, C}},
      {"attention/query/bias", {C}},
      {"attention/key/kernel", {C, C}},
      {"attention/key/bias", {C}},
      {"attention/value/kernel", {C, C}},
      {"attention/value/bias", {C}},
      {"attention/out/kernel", {C, C}},
      {"attention/out/bias", {C}},
      {"layer_norm/scale", {C}},
      {"layer_norm/bias", {C}},
      {"mlp/dense1/kernel", {H, C}},
      {"mlp/dense1/bias", {H}},
      {"mlp/dense2/kernel", {C, H}},
      {"mlp/dense2/bias", {C}},
      {"head/kernel", {S, C}},
      {"head/bias", {S}},
  }};
  std::size_t offset = 0;
  for (std::size_t t = 0; t < kTensorCount; ++t) {
    auto& s = slices_[t];
    s.name = layout[t].first;
    s.shape = layout[t].second;
    s.offset = offset;
    s.decayed = t == probe || s.shape.size() == 2;
    offset += s.size();
  }
  flat_.assign(offset, 0.0f);
  std::fill_n(ptr(ln_scale), C, 1.0f);
}

std::span<float> MapHeadParams::tensor(Tensor t) { return {ptr(t), slices_[t].size()}; }
std::span<const float> MapHeadParams::tensor(Tensor t) const { return {ptr(t), slices_[t].size()}; }

MapHeadParams MapHeadParams::zeros_like() const {
  MapHeadParams z = *this;
  std::fill(z.flat_.begin(), z.flat_.end(), 0.0f);
  return z;
}

bool MapHeadParams::all_finite() const {
  return std::all_of(flat_.begin(), flat_.end(), [](float v) { return std::isfinite(v); });
}

MapHeadParams init_map_head(std::size_t channels, std::size_t classes, std::size_t heads,
                            std::uint64_t seed) {
  MapHeadParams p(channels, classes, heads);
  const RngKey root = RngKey(seed).fold("map_head_init");
  for (auto t : {MapHeadParams::probe, MapHeadParams::query_kernel, MapHeadParams::key_kernel,
                 MapHeadParams::value_kernel, MapHeadParams::out_kernel, MapHeadParams::mlp1_kernel,
                 MapHeadParams::mlp2_kernel}) {
    const auto& shape = p.slice(t).shape;
    const double fan_out = shape.size() == 2 ? static_cast<double>(shape[0]) : 1.0;
    const double fan_in = static_cast<double>(shape.back());
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(root.fold(static_cast<std::uint64_t>(t)));
    for (auto& w : p.tensor(t)) w = static_cast<float>(rng.uniform(-limit, limit));
  }
  return p;
}

namespace {

constexpr float kLayerNormEps = 1e-6f;

float gelu(float x) {
  const float k = 0.7978845608028654f;  // sqrt(2 / pi)
  return 0.5f * x * (1.0f + std::tanh(k * (x + 0.044715f * x * x * x)));
}

float gelu_grad(float x) {
  const float k = 0.7978845608028654f;
  const float t = std::tanh(k * (x + 0.044715f * x * x * x));
  return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * k * (1.0f + 3.0f * 0.044715f * x * x);
}

float sigmoid(float l) {
  if (l >= 0.0f) return 1.0f / (1.0f + std::exp(-l));
  const float e = std::exp(l);
  return e / (1.0f + e);
}

// y[r] = sum_c W[r, c] x[c] + b[r]
void affine(const float* W, const float* b, const float* x, float* y, std::size_t rows,
            std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const float* w = W + r * cols;
    float acc = b[r];
    for (std::size_t c = 0; c < cols; ++c) acc += w[c] * x[c];
    y[r] = acc;
  }
}

// dW += dy x^T, db += dy, dx = W^T dy (dx may be null).
void affine_backward(const float* W, const float* x, const float* dy, float* dW, float* db,
                     float* dx, std::size_t rows, std::size_t cols) {
  if (dx) std::fill_n(dx, cols, 0.0f);
  for (std::size_t r = 0; r < rows; ++r) {
    const float g = dy[r];
    db[r] += g;
    float* dw = dW + r * cols;
    const float* w = W + r * cols;
    for (std::size_t c = 0; c < cols; ++c) dw[c] += g * x[c];
    if (dx) {
      for (std::size_t c = 0; c < cols; ++c) dx[c] += g * w[c];
    }
  }
}

// Per-batch quantities derived from the probe.
struct Query {
  std::vector<float> q;   // C
  std::vector<float> kq;  // h x C: Wk_h^T q_h
  std::vector<float> qb;  // h: q_h . bk_h
};

Query make_query(const MapHeadParams& p) {
  using P = MapHeadParams;
  const std::size_t C = p.channels(), h = p.heads(), d = C / h;
  Query out{std::vector<float>(C), std::vector<float>(h * C, 0.0f), std::vector<float>(h, 0.0f)};
  affine(p.ptr(P::query_kernel), p.ptr(P::query_bias), p.ptr(P::probe), out.q.data(), C, C);
  const float* Wk = p.ptr(P::key_kernel);
  const float* bk = p.ptr(P::key_bias);
  for (std::size_t hh = 0; hh < h; ++hh) {
    float* kq = out.kq.data() + hh * C;
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t r = hh * d + j;
      const float qj = out.q[r];
      const float* w = Wk + r * C;
      for (std::size_t c = 0; c < C; ++c) kq[c] += w[c] * qj;
      out.qb[hh] += qj * bk[r];
    }
  }
  return out;
}

struct Activations {
  std::vector<float> attn_w;  // h x N softmax weights
  std::vector<float> u;       // h x C attention-weighted token means
  std::vector<float> attn;    // C
  std::vector<float> o;       // C
  std::vector<float> xhat;    // C
  float inv_std = 0.0f;
  std::vector<float> ln;      // C
  std::vector<float> h1;      // 4C
  std::vector<float> g;       // 4C
  std::vector<float> y;       // C
  std::vector<float> logits;  // S
};

void check_tokens(const MapHeadParams& p, const FeatureTensor& x) {
  if (x.channels() != p.channels()) {
    throw std::invalid_argument("channel mismatch: tokens have C=" + std::to_string(x.channels()) +
                                ", head expects C=" + std::to_string(p.channels()));
  }
  if (x.tokens() == 0) throw std::invalid_argument("map head needs at least one token");
}

void forward_example(const MapHeadParams& p, const Query& query, const FeatureTensor& x,
                     Activations& a) {
  using P = MapHeadParams;
  check_tokens(p, x);
  const std::size_t C = p.channels(), h = p.heads(), d = C / h, N = x.tokens(), S = p.classes();
  const std::size_t H = p.hidden();
  const float scale = 1.0f / std::sqrt(static_cast<float>(d));
  const float* X = x.data().data();

  a.attn_w.resize(h * N);
  for (std::size_t hh = 0; hh < h; ++hh) {
    const float* kq = query.kq.data() + hh * C;
    float* s = a.attn_w.data() + hh * N;
    float smax = -INFINITY;
    for (std::size_t n = 0; n < N; ++n) {
      const float* xn = X + n * C;
      float acc = query.qb[hh];
      for (std::size_t c = 0; c < C; ++c) acc += kq[c] * xn[c];
      s[n] = acc * scale;
      smax = std::max(smax, s[n]);
    }
    float sum = 0.0f;
    for (std::size_t n = 0; n < N; ++n) {
      s[n] = std::exp(s[n] - smax);
      sum += s[n];
    }
    for (std::size_t n = 0; n < N; ++n) s[n] /= sum;
  }

  a.u.assign(h * C, 0.0f);
  for (std::size_t n = 0; n < N; ++n) {
    const float* xn = X + n * C;
    for (std::size_t hh = 0; hh < h; ++hh) {
      const float w = a.attn_w[hh * N + n];
      float* u = a.u.data() + hh * C;
      for (std::size_t c = 0; c < C; ++c) u[c] += w * xn[c];
    }
  }

  a.attn.resize(C);
  const float* Wv = p.ptr(P::value_kernel);
  const float* bv = p.ptr(P::value_bias);
  for (std::size_t hh = 0; hh < h; ++hh) {
    affine(Wv + hh * d * C, bv + hh * d, a.u.data() + hh * C, a.attn.data() + hh * d, d, C);
  }
  a.o.resize(C);
  affine(p.ptr(P::out_kernel), p.ptr(P::out_bias), a.attn.data(), a.o.data(), C, C);

  double mean = 0.0, var = 0.0;
  for (float v : a.o) mean += v;
  mean /= static_cast<double>(C);
  for (float v : a.o) var += (v - mean) * (v - mean);
  var /= static_cast<double>(C);
  a.inv_std = static_cast<float>(1.0 / std::sqrt(var + kLayerNormEps));
  a.xhat.resize(C);
  a.ln.resize(C);
  const float* gamma = p.ptr(P::ln_scale);
  const float* beta = p.ptr(P::ln_bias);
  for (std::size_t c = 0; c < C; ++c) {
    a.xhat[c] = static_cast<float>(a.o[c] - mean) * a.inv_std;
    a.ln[c] = a.xhat[c] * gamma[c] + beta[c];
  }

  a.h1.resize(H);
  a.g.resize(H);
  affine(p.ptr(P::mlp1_kernel), p.ptr(P::mlp1_bias), a.ln.data(), a.h1.data(), H, C);
  for (std::size_t i = 0; i < H; ++i) a.g[i] = gelu(a.h1[i]);
  a.y.resize(C);
  affine(p.ptr(P::mlp2_kernel), p.ptr(P::mlp2_bias), a.g.data(), a.y.data(), C, H);
  for (std::size_t c = 0; c < C; ++c) a.y[c] += a.o[c];

  a.logits.resize(S);
  affine(p.ptr(P::head_kernel), p.ptr(P::head_bias), a.y.data(), a.logits.data(), S, C);
}

struct Scratch {
  std::vector<float> dy, dh, dln, dxhat, d_o, dattn, du, da;
};

// Accumulates the gradient of (weight * loss) given dlogits = weight * dL/dlogits.
void backward_example(const MapHeadParams& p, const Query& query, const FeatureTensor& x,
                      const Activations& a, const float* dlogits, MapHeadParams& grad,
                      std::vector<float>& dq, Scratch& s) {
  using P = MapHeadParams;
  const std::size_t C = p.channels(), h = p.heads(), d = C / h, N = x.tokens(), S = p.classes();
  const std::size_t H = p.hidden();
  const float scale = 1.0f / std::sqrt(static_cast<float>(d));
  const float* X = x.data().data();

  s.dy.resize(C);
  affine_backward(p.ptr(P::head_kernel), a.y.data(), dlogits, grad.ptr(P::head_kernel),
                  grad.ptr(P::head_bias), s.dy.data(), S, C);

  s.dh.resize(H);
  affine_backward(p.ptr(P::mlp2_kernel), a.g.data(), s.dy.data(), grad.ptr(P::mlp2_kernel),
                  grad.ptr(P::mlp2_bias), s.dh.data(), C, H);
  for (std::size_t i = 0; i < H; ++i) s.dh[i] *= gelu_grad(a.h1[i]);
  s.dln.resize(C);
  affine_backward(p.ptr(P::mlp1_kernel), a.ln.data(), s.dh.data(), grad.ptr(P::mlp1_kernel),
                  grad.ptr(P::mlp1_bias), s.dln.data(), H, C);

  const float* gamma = p.ptr(P::ln_scale);
  float* dgamma = grad.ptr(P::ln_scale);
  float* dbeta = grad.ptr(P::ln_bias);
  s.dxhat.resize(C);
  float mean_dxhat = 0.0f, mean_dxhat_xhat = 0.0f;
  for (std::size_t c = 0; c < C; ++c) {
    dgamma[c] += s.dln[c] * a.xhat[c];
    dbeta[c] += s.dln[c];
    s.dxhat[c] = s.dln[c] * gamma[c];
    mean_dxhat += s.dxhat[c];
    mean_dxhat_xhat += s.dxhat[c] * a.xhat[c];
  }
  mean_dxhat /= static_cast<float>(C);
  mean_dxhat_xhat /= static_cast<float>(C);
  s.d_o.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    s.d_o[c] = s.dy[c] + a.inv_std * (s.dxhat[c] - mean_dxhat - a.xhat[c] * mean_dxhat_xhat);
  }

  s.dattn.resize(C);
  affine_backward(p.ptr(P::out_kernel), a.attn.data(), s.d_o.data(), grad.ptr(P::out_kernel),
                  grad.ptr(P::out_bias), s.dattn.data(), C, C);

  const float* Wk = p.ptr(P::key_kernel);
  const float* bk = p.ptr(P::key_bias);
  float* dWk = grad.ptr(P::key_kernel);
  float* dbk = grad.ptr(P::key_bias);
  s.du.resize(C);
  s.da.resize(N);
  for (std::size_t hh = 0; hh < h; ++hh) {
    affine_backward(p.ptr(P::value_kernel) + hh * d * C, a.u.data() + hh * C,
                    s.dattn.data() + hh * d, grad.ptr(P::value_kernel) + hh * d * C,
                    grad.ptr(P::value_bias) + hh * d, s.du.data(), d, C);
    const float* w = a.attn_w.data() + hh * N;
    float weighted = 0.0f;
    for (std::size_t n = 0; n < N; ++n) {
      const float* xn = X + n * C;
      float acc = 0.0f;
      for (std::size_t c = 0; c < C; ++c) acc += s.du[c] * xn[c];
      s.da[n] = acc;
      weighted += w[n] * acc;
    }
    // Gradient with respect to kq_h (C values) and qb_h.
    float dqb = 0.0f;
    std::vector<float>& dkq = s.du;  // du is no longer needed
    std::fill(dkq.begin(), dkq.end(), 0.0f);
    for (std::size_t n = 0; n < N; ++n) {
      const float ds = w[n] * (s.da[n] - weighted) * scale;
      dqb += ds;
      const float* xn = X + n * C;
      for (std::size_t c = 0; c < C; ++c) dkq[c] += ds * xn[c];
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::size_t r = hh * d + j;
      const float qj = query.q[r];
      const float* wk = Wk + r * C;
      float* dwk = dWk + r * C;
      float acc = dqb * bk[r];
      for (std::size_t c = 0; c < C; ++c) {
        dwk[c] += dkq[c] * qj;
        acc += wk[c] * dkq[c];
      }
      dq[r] += acc;
      dbk[r] += dqb * qj;
    }
  }
}

}  // namespace

HeadOutput forward(const MapHeadParams& params, const FeatureTensor& tokens) {
  const Query q = make_query(params);
  Activations a;
  forward_example(params, q, tokens, a);
  return {a.y, a.logits};
}

std::vector<HeadOutput> forward(const MapHeadParams& params, std::span<const FeatureTensor> batch) {
  const Query q = make_query(params);
  Activations a;
  std::vector<HeadOutput> out;
  out.reserve(batch.size());
  for (const auto& x : batch) {
    forward_example(params, q, x, a);
    out.push_back({a.y, a.logits});
  }
  return out;
}

double sigmoid_ce(std::span<const float> logits, std::span<const float> labels) {
  if (logits.size() != labels.size()) throw std::invalid_argument("logits/labels size mismatch");
  double total = 0.0;
  for (std::size_t s = 0; s < logits.size(); ++s) {
    const double l = logits[s];
    total += std::max(l, 0.0) - l * labels[s] + std::log1p(std::exp(-std::abs(l)));
  }
  return total;
}

double loss_sigmoid_ce(const std::vector<std::vector<float>>& logits,
                       const std::vector<std::vector<float>>& labels) {
  if (logits.size() != labels.size() || logits.empty()) {
    throw std::invalid_argument("loss needs a non-empty batch with one label per example");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) total += sigmoid_ce(logits[i], labels[i]);
  return total / static_cast<double>(logits.size());
}

double loss_and_gradient(const MapHeadParams& params, std::span<const WeightedExample> batch,
                         MapHeadParams* grad) {
  using P = MapHeadParams;
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t C = params.channels(), S = params.classes();
  double total_weight = 0.0;
  for (const auto& e : batch) total_weight += e.weight;
  if (grad) {
    if (grad->flat().size() != params.flat().size()) *grad = params.zeros_like();
    std::fill(grad->flat().begin(), grad->flat().end(), 0.0f);
  }

  const Query query = make_query(params);
  Activations a;
  Scratch scratch;
  std::vector<float> dq(C, 0.0f), dlogits(S);
  double loss = 0.0;
  for (const auto& e : batch) {
    forward_example(params, query, *e.tokens, a);
    const std::span<const float> labels(e.labels, S);
    loss += e.weight * sigmoid_ce(a.logits, labels);
    if (!grad) continue;
    const float scale = static_cast<float>(e.weight / total_weight);
    for (std::size_t s = 0; s < S; ++s) dlogits[s] = scale * (sigmoid(a.logits[s]) - labels[s]);
    backward_example(params, query, *e.tokens, a, dlogits.data(), *grad, dq, scratch);
  }
  if (grad) {
    std::vector<float> dprobe(C);
    affine_backward(params.ptr(P::query_kernel), params.ptr(P::probe), dq.data(),
                    grad->ptr(P::query_kernel), grad->ptr(P::query_bias), dprobe.data(), C, C);
    std::copy(dprobe.begin(), dprobe.end(), grad->ptr(P::probe));
  }
  return loss / total_weight;
}

std::size_t argmax(std::span<const float> scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace frofa
