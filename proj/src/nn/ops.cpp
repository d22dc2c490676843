#include "oareco/nn/ops.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "oareco/error.hpp"
#include "oareco/parallel.hpp"

namespace oareco::nn {

namespace {

constexpr std::size_t kColumnBlock = 512;

void require(bool ok, const std::string& message) {
  if (!ok) throw InvalidInput(message);
}

std::size_t out_extent(std::size_t in, int stride) { return (in + stride - 1) / static_cast<std::size_t>(stride); }

// Unrolls the receptive fields of channels [c0, c0 + cin) into rows of `col`
// (row = (c * k + ky) * k + kx, column = output pixel).
void im2col(const Tensor& input, std::size_t c0, std::size_t cin, std::size_t k, int stride, std::size_t pad,
            std::size_t oh, std::size_t ow, std::vector<float>& col) {
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t n = oh * ow;
  col.assign(cin * k * k * n, 0.0f);
  for (std::size_t c = 0; c < cin; ++c) {
    const float* src = input.channel(c0 + c);
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        float* dst = col.data() + ((c * k + ky) * k + kx) * n;
        for (std::size_t oy = 0; oy < oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
          const float* row = src + static_cast<std::size_t>(iy) * w;
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const std::ptrdiff_t ix =
                static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
            if (ix >= 0 && ix < static_cast<std::ptrdiff_t>(w)) dst[oy * ow + ox] = row[ix];
          }
        }
      }
    }
  }
}

// out[m, :] = bias[m] + sum_k a[m, k] * b[k, :] for m in [m_begin, m_end).
// Column blocks keep the accumulator row in cache; k always runs ascending.
void gemm_rows(const float* a, const float* b, const float* bias, float* out, std::size_t m_begin, std::size_t m_end,
               std::size_t kdim, std::size_t n) {
  for (std::size_t m = m_begin; m < m_end; ++m) {
    const float* arow = a + m * kdim;
    float* orow = out + m * n;
    for (std::size_t j0 = 0; j0 < n; j0 += kColumnBlock) {
      const std::size_t j1 = std::min(n, j0 + kColumnBlock);
      std::fill(orow + j0, orow + j1, 0.0f);
      for (std::size_t kk = 0; kk < kdim; ++kk) {
        const float av = arow[kk];
        const float* brow = b + kk * n;
        for (std::size_t j = j0; j < j1; ++j) orow[j] += av * brow[j];
      }
      if (bias != nullptr) {
        const float bv = bias[m];
        for (std::size_t j = j0; j < j1; ++j) orow[j] += bv;
      }
    }
  }
}

void depthwise(const Tensor& input, const Tensor& weight, std::span<const float> bias, int stride, std::size_t pad,
               Tensor& out) {
  const std::size_t k = weight.dim(2);
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t oh = out.height();
  const std::size_t ow = out.width();
  const std::size_t mult = out.channels() / input.channels();
  parallel_for(out.channels(), [&](std::size_t c_begin, std::size_t c_end) {
    for (std::size_t co = c_begin; co < c_end; ++co) {
      const float* src = input.channel(co / mult);
      const float* wk = weight.data().data() + co * k * k;
      float* dst = out.channel(co);
      const float b = bias.empty() ? 0.0f : bias[co];
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          float acc = 0.0f;
          for (std::size_t ky = 0; ky < k; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - static_cast<std::ptrdiff_t>(pad);
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
            for (std::size_t kx = 0; kx < k; ++kx) {
              const std::ptrdiff_t ix =
                  static_cast<std::ptrdiff_t>(ox * stride + kx) - static_cast<std::ptrdiff_t>(pad);
              if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
              acc += wk[ky * k + kx] * src[static_cast<std::size_t>(iy) * w + static_cast<std::size_t>(ix)];
            }
          }
          dst[oy * ow + ox] = acc + b;
        }
      }
    }
  });
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, std::span<const float> bias, int stride, int groups) {
  require(input.rank() == 3, "conv2d input must be (C, H, W), got " + input.shape_string());
  require(weight.rank() == 4, "conv2d weight must be (O, I, k, k), got " + weight.shape_string());
  require(stride == 1 || stride == 2, "conv2d stride must be 1 or 2");
  require(groups >= 1, "conv2d groups must be positive");
  const std::size_t cin = input.channels();
  const std::size_t cout = weight.dim(0);
  const std::size_t k = weight.dim(2);
  const auto g = static_cast<std::size_t>(groups);
  require(weight.dim(3) == k && k % 2 == 1, "conv2d kernel must be square and odd");
  require(cin % g == 0 && cout % g == 0, "conv2d groups must divide input and output channels");
  require(weight.dim(1) == cin / g, "conv2d weight " + weight.shape_string() + " does not match input channels " +
                                        std::to_string(cin) + " with groups " + std::to_string(groups));
  require(bias.empty() || bias.size() == cout, "conv2d bias length must equal output channels");

  const std::size_t pad = k / 2;
  const std::size_t oh = out_extent(input.height(), stride);
  const std::size_t ow = out_extent(input.width(), stride);
  Tensor out({cout, oh, ow});

  if (g == cin && g > 1) {
    depthwise(input, weight, bias, stride, pad, out);
    return out;
  }

  const std::size_t cin_g = cin / g;
  const std::size_t cout_g = cout / g;
  const std::size_t kdim = cin_g * k * k;
  const std::size_t n = oh * ow;
  const bool direct = k == 1 && stride == 1;
  std::vector<float> col;
  for (std::size_t grp = 0; grp < g; ++grp) {
    const float* b_matrix = nullptr;
    if (direct) {
      b_matrix = input.channel(grp * cin_g);
    } else {
      im2col(input, grp * cin_g, cin_g, k, stride, pad, oh, ow, col);
      b_matrix = col.data();
    }
    const float* a = weight.data().data() + grp * cout_g * kdim;
    float* o = out.channel(grp * cout_g);
    const float* bias_g = bias.empty() ? nullptr : bias.data() + grp * cout_g;
    parallel_for(cout_g, [&](std::size_t m_begin, std::size_t m_end) {
      gemm_rows(a, b_matrix, bias_g, o, m_begin, m_end, kdim, n);
    });
  }
  return out;
}

void batch_norm(Tensor& x, const BatchNormView& bn, Activation act) {
  require(x.rank() == 3, "batch_norm input must be (C, H, W)");
  const std::size_t c = x.channels();
  require(bn.gamma.size() == c && bn.beta.size() == c && bn.mean.size() == c && bn.var.size() == c,
          "batch_norm parameter lengths must equal the channel count");
  for (std::size_t i = 0; i < c; ++i) {
    require(std::isfinite(bn.gamma[i]) && std::isfinite(bn.beta[i]) && std::isfinite(bn.mean[i]) &&
                std::isfinite(bn.var[i]),
            "batch_norm parameters must be finite");
    require(bn.var[i] >= 0.0f, "batch_norm variance must be >= 0");
  }
  require(std::isfinite(bn.eps) && bn.eps >= 0.0f, "batch_norm eps must be finite and >= 0");
  const std::size_t plane = x.plane();
  parallel_for(c, [&](std::size_t c_begin, std::size_t c_end) {
    for (std::size_t ch = c_begin; ch < c_end; ++ch) {
      const float scale = bn.gamma[ch] / std::sqrt(bn.var[ch] + bn.eps);
      const float mean = bn.mean[ch];
      const float beta = bn.beta[ch];
      float* p = x.channel(ch);
      for (std::size_t i = 0; i < plane; ++i) {
        const float z = scale * (p[i] - mean) + beta;
        switch (act) {
          case Activation::none: p[i] = z; break;
          case Activation::relu: p[i] = z > 0.0f ? z : 0.0f; break;
          case Activation::silu: p[i] = silu(z); break;
        }
      }
    }
  });
}

Tensor bn_silu(const Tensor& input, std::span<const float> gamma, std::span<const float> beta,
               std::span<const float> mean, std::span<const float> var, float eps) {
  Tensor out = input;
  batch_norm(out, {gamma, beta, mean, var, eps}, Activation::silu);
  return out;
}

Tensor se_block(const Tensor& input, const Tensor& w_reduce, std::span<const float> b_reduce, const Tensor& w_expand,
                std::span<const float> b_expand) {
  require(input.rank() == 3, "se_block input must be (C, H, W)");
  const std::size_t c = input.channels();
  require(w_reduce.rank() == 4 && w_reduce.dim(1) == c && w_reduce.dim(2) == 1 && w_reduce.dim(3) == 1,
          "se_block reduce weight " + w_reduce.shape_string() + " does not match " + std::to_string(c) + " channels");
  const std::size_t r = w_reduce.dim(0);
  require(w_expand.rank() == 4 && w_expand.dim(0) == c && w_expand.dim(1) == r && w_expand.dim(2) == 1 &&
              w_expand.dim(3) == 1,
          "se_block expand weight " + w_expand.shape_string() + " does not match");
  require(b_reduce.size() == r && b_expand.size() == c, "se_block bias lengths do not match");

  const std::size_t plane = input.plane();
  std::vector<float> pooled(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    const float* p = input.channel(ch);
    double sum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    pooled[ch] = static_cast<float>(sum / static_cast<double>(plane));
  }
  std::vector<float> squeezed(r);
  for (std::size_t i = 0; i < r; ++i) {
    float acc = 0.0f;
    const float* wr = w_reduce.data().data() + i * c;
    for (std::size_t ch = 0; ch < c; ++ch) acc += wr[ch] * pooled[ch];
    squeezed[i] = silu(acc + b_reduce[i]);
  }
  Tensor out(input.dims());
  parallel_for(c, [&](std::size_t c_begin, std::size_t c_end) {
    for (std::size_t ch = c_begin; ch < c_end; ++ch) {
      float acc = 0.0f;
      const float* we = w_expand.data().data() + ch * r;
      for (std::size_t i = 0; i < r; ++i) acc += we[i] * squeezed[i];
      const float gate = sigmoid(acc + b_expand[ch]);
      const float* src = input.channel(ch);
      float* dst = out.channel(ch);
      for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * gate;
    }
  });
  return out;
}

Tensor upsample_bilinear2x(const Tensor& input) {
  require(input.rank() == 3, "upsample input must be (C, H, W)");
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t oh = 2 * h;
  const std::size_t ow = 2 * w;
  struct Tap {
    std::size_t i0, i1;
    float lambda;
  };
  auto taps = [](std::size_t out_n, std::size_t in_n) {
    std::vector<Tap> t(out_n);
    for (std::size_t o = 0; o < out_n; ++o) {
      const float src = std::max(0.0f, (static_cast<float>(o) + 0.5f) * 0.5f - 0.5f);
      const auto i0 = std::min(static_cast<std::size_t>(src), in_n - 1);
      const std::size_t i1 = std::min(i0 + 1, in_n - 1);
      t[o] = {i0, i1, src - static_cast<float>(i0)};
    }
    return t;
  };
  const std::vector<Tap> ty = taps(oh, h);
  const std::vector<Tap> tx = taps(ow, w);
  Tensor out({input.channels(), oh, ow});
  parallel_for(input.channels(), [&](std::size_t c_begin, std::size_t c_end) {
    for (std::size_t c = c_begin; c < c_end; ++c) {
      const float* src = input.channel(c);
      float* dst = out.channel(c);
      for (std::size_t y = 0; y < oh; ++y) {
        const Tap& a = ty[y];
        const float* r0 = src + a.i0 * w;
        const float* r1 = src + a.i1 * w;
        for (std::size_t x = 0; x < ow; ++x) {
          const Tap& b = tx[x];
          const float top = (1.0f - b.lambda) * r0[b.i0] + b.lambda * r0[b.i1];
          const float bottom = (1.0f - b.lambda) * r1[b.i0] + b.lambda * r1[b.i1];
          dst[y * ow + x] = (1.0f - a.lambda) * top + a.lambda * bottom;
        }
      }
    }
  });
  return out;
}

Tensor concat_channels(const Tensor& first, const Tensor& second) {
  require(first.rank() == 3 && second.rank() == 3, "concat inputs must be (C, H, W)");
  require(first.height() == second.height() && first.width() == second.width(),
          "concat spatial sizes differ: " + first.shape_string() + " vs " + second.shape_string());
  Tensor out({first.channels() + second.channels(), first.height(), first.width()});
  std::copy(first.data().begin(), first.data().end(), out.data().begin());
  std::copy(second.data().begin(), second.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(first.size()));
  return out;
}

void relu_inplace(Tensor& x) {
  for (float& v : x.data()) v = v > 0.0f ? v : 0.0f;
}

void add_inplace(Tensor& x, const Tensor& other) {
  require(x.dims() == other.dims(), "add: shapes differ " + x.shape_string() + " vs " + other.shape_string());
  auto dst = x.data();
  const auto src = other.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace oareco::nn
