#include "model_kernels.hpp"

#include <algorithm>
#include <cmath>

namespace bcfl::detail {

namespace {

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// LSTM parameter offsets: W_ih (4H x I), W_hh (4H x H), b_ih (4H), b_hh (4H),
// w_out (H), b_out.
struct LstmLayout {
  std::size_t I, H, G;
  std::size_t w_ih, w_hh, b_ih, b_hh, w_out, b_out;

  explicit LstmLayout(const ArchSpec& s)
      : I(static_cast<std::size_t>(s.channels)),
        H(static_cast<std::size_t>(s.hidden)),
        G(4 * H),
        w_ih(0),
        w_hh(w_ih + G * I),
        b_ih(w_hh + G * H),
        b_hh(b_ih + G),
        w_out(b_hh + G),
        b_out(w_out + H) {}
};

double lstm_forward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
                    Workspace& ws) {
  const LstmLayout lay(spec);
  const auto L = static_cast<std::size_t>(spec.history_len);
  const std::size_t H = lay.H, I = lay.I, G = lay.G;
  ws.gates.resize(L * G);
  ws.cells.assign((L + 1) * H, 0.0);
  ws.hidden.assign((L + 1) * H, 0.0);
  ws.tanh_c.resize(L * H);

  for (std::size_t t = 0; t < L; ++t) {
    const double* xt = x.data() + t * I;
    const double* hp = ws.hidden.data() + t * H;
    double* gt = ws.gates.data() + t * G;
    for (std::size_t r = 0; r < G; ++r) {
      double a = w[lay.b_ih + r] + w[lay.b_hh + r];
      const double* wi = w.data() + lay.w_ih + r * I;
      for (std::size_t k = 0; k < I; ++k) a += wi[k] * xt[k];
      const double* wh = w.data() + lay.w_hh + r * H;
      for (std::size_t k = 0; k < H; ++k) a += wh[k] * hp[k];
      gt[r] = a;
    }
    const double* cp = ws.cells.data() + t * H;
    double* cn = ws.cells.data() + (t + 1) * H;
    double* hn = ws.hidden.data() + (t + 1) * H;
    double* tc = ws.tanh_c.data() + t * H;
    for (std::size_t j = 0; j < H; ++j) {
      const double ig = sigmoid(gt[j]);
      const double fg = sigmoid(gt[H + j]);
      const double gg = std::tanh(gt[2 * H + j]);
      const double og = sigmoid(gt[3 * H + j]);
      gt[j] = ig;
      gt[H + j] = fg;
      gt[2 * H + j] = gg;
      gt[3 * H + j] = og;
      cn[j] = fg * cp[j] + ig * gg;
      tc[j] = std::tanh(cn[j]);
      hn[j] = og * tc[j];
    }
  }
  const double* hL = ws.hidden.data() + L * H;
  double out = w[lay.b_out];
  for (std::size_t j = 0; j < H; ++j) out += w[lay.w_out + j] * hL[j];
  return out;
}

void lstm_backward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
                   double scale, Workspace& ws, std::span<double> grad) {
  const LstmLayout lay(spec);
  const auto L = static_cast<std::size_t>(spec.history_len);
  const std::size_t H = lay.H, I = lay.I, G = lay.G;
  ws.da.resize(G);
  ws.dh.resize(H);
  ws.dc.assign(H, 0.0);
  ws.dh_prev.resize(H);

  const double* hL = ws.hidden.data() + L * H;
  grad[lay.b_out] += scale;
  for (std::size_t j = 0; j < H; ++j) {
    grad[lay.w_out + j] += scale * hL[j];
    ws.dh[j] = scale * w[lay.w_out + j];
  }

  for (std::size_t t = L; t-- > 0;) {
    const double* gt = ws.gates.data() + t * G;
    const double* cp = ws.cells.data() + t * H;
    const double* tc = ws.tanh_c.data() + t * H;
    const double* hp = ws.hidden.data() + t * H;
    const double* xt = x.data() + t * I;
    for (std::size_t j = 0; j < H; ++j) {
      const double ig = gt[j], fg = gt[H + j], gg = gt[2 * H + j], og = gt[3 * H + j];
      const double dh = ws.dh[j];
      const double dc = ws.dc[j] + dh * og * (1.0 - tc[j] * tc[j]);
      ws.da[j] = dc * gg * ig * (1.0 - ig);
      ws.da[H + j] = dc * cp[j] * fg * (1.0 - fg);
      ws.da[2 * H + j] = dc * ig * (1.0 - gg * gg);
      ws.da[3 * H + j] = dh * tc[j] * og * (1.0 - og);
      ws.dc[j] = dc * fg;
    }
    std::fill(ws.dh_prev.begin(), ws.dh_prev.end(), 0.0);
    for (std::size_t r = 0; r < G; ++r) {
      const double d = ws.da[r];
      grad[lay.b_ih + r] += d;
      grad[lay.b_hh + r] += d;
      double* gi = grad.data() + lay.w_ih + r * I;
      for (std::size_t k = 0; k < I; ++k) gi[k] += d * xt[k];
      double* gh = grad.data() + lay.w_hh + r * H;
      const double* wh = w.data() + lay.w_hh + r * H;
      for (std::size_t k = 0; k < H; ++k) {
        gh[k] += d * hp[k];
        ws.dh_prev[k] += d * wh[k];
      }
    }
    std::swap(ws.dh, ws.dh_prev);
  }
}

// NNPG: W1 (hid x D), b1 (hid), w2 (hid), b2. Hidden activations in ws.hidden.
double nnpg_forward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
                    Workspace& ws) {
  const std::size_t D = spec.input_size(), Hn = static_cast<std::size_t>(spec.hidden);
  const std::size_t b1 = Hn * D, w2 = b1 + Hn, b2 = w2 + Hn;
  ws.hidden.resize(Hn);
  double out = w[b2];
  for (std::size_t j = 0; j < Hn; ++j) {
    double a = w[b1 + j];
    const double* row = w.data() + j * D;
    for (std::size_t k = 0; k < D; ++k) a += row[k] * x[k];
    ws.hidden[j] = std::tanh(a);
    out += w[w2 + j] * ws.hidden[j];
  }
  return out;
}

void nnpg_backward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
                   double scale, Workspace& ws, std::span<double> grad) {
  const std::size_t D = spec.input_size(), Hn = static_cast<std::size_t>(spec.hidden);
  const std::size_t b1 = Hn * D, w2 = b1 + Hn, b2 = w2 + Hn;
  grad[b2] += scale;
  for (std::size_t j = 0; j < Hn; ++j) {
    const double hj = ws.hidden[j];
    grad[w2 + j] += scale * hj;
    const double da = scale * w[w2 + j] * (1.0 - hj * hj);
    grad[b1 + j] += da;
    double* row = grad.data() + j * D;
    for (std::size_t k = 0; k < D; ++k) row[k] += da * x[k];
  }
}

}  // namespace

double forward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
               Workspace& ws) {
  switch (spec.arch) {
    case Arch::kLinear: {
      const std::size_t D = spec.input_size();
      double out = w[D];
      for (std::size_t k = 0; k < D; ++k) out += w[k] * x[k];
      return out;
    }
    case Arch::kNnpg: return nnpg_forward(spec, w, x, ws);
    case Arch::kLstm: return lstm_forward(spec, w, x, ws);
  }
  return 0.0;
}

void backward(const ArchSpec& spec, std::span<const double> w, std::span<const double> x,
              double scale, Workspace& ws, std::span<double> grad) {
  switch (spec.arch) {
    case Arch::kLinear: {
      const std::size_t D = spec.input_size();
      for (std::size_t k = 0; k < D; ++k) grad[k] += scale * x[k];
      grad[D] += scale;
      return;
    }
    case Arch::kNnpg: nnpg_backward(spec, w, x, scale, ws, grad); return;
    case Arch::kLstm: lstm_backward(spec, w, x, scale, ws, grad); return;
  }
}

}  // namespace bcfl::detail
