#include "pasc/nn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>

namespace pasc::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;
using ConstMapVec = Eigen::Map<const Eigen::VectorXd>;
using MapVec = Eigen::Map<Eigen::VectorXd>;

// Tensor indices in CodecWeights, matching expected_layout().
constexpr std::size_t kEncConv = 0;    // weight at 2i, bias at 2i+1
constexpr std::size_t kEncQuant = 8;   // weight, bias
constexpr std::size_t kDecDense = 10;  // weight, bias
constexpr std::size_t kDecConv = 12;   // weight at 12+2i, bias at 13+2i
constexpr std::size_t kDecOut = 20;    // weight, bias

struct Shape {
    int c, h, w;
    std::size_t size() const { return static_cast<std::size_t>(c) * h * w; }
};

struct ConvCache {
    RowMat col;
    Shape in{};
};

// Same-padded stride-1 convolution via im2col.
void conv_forward(std::span<const double> in, Shape s, const NamedTensor& weight, const NamedTensor& bias,
                  std::vector<double>& out, ConvCache& cache) {
    const int cout = weight.shape[0];
    const int k = weight.shape[2];
    const int pad = k / 2;
    const int hw = s.h * s.w;
    cache.in = s;
    cache.col.resize(static_cast<Eigen::Index>(s.c) * k * k, hw);
    for (int ci = 0; ci < s.c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                double* row = cache.col.row((ci * k + ky) * k + kx).data();
                const int x_lo = std::min(s.w, std::max(0, pad - kx));
                const int x_hi = std::max(x_lo, std::min(s.w, s.w + pad - kx));
                for (int y = 0; y < s.h; ++y) {
                    double* dst = row + y * s.w;
                    const int iy = y + ky - pad;
                    if (iy < 0 || iy >= s.h) {
                        std::fill(dst, dst + s.w, 0.0);
                        continue;
                    }
                    const double* src = in.data() + (static_cast<std::size_t>(ci) * s.h + iy) * s.w;
                    std::fill(dst, dst + x_lo, 0.0);
                    std::copy(src + x_lo + kx - pad, src + x_hi + kx - pad, dst + x_lo);
                    std::fill(dst + x_hi, dst + s.w, 0.0);
                }
            }
    out.assign(static_cast<std::size_t>(cout) * hw, 0.0);
    MapMat o(out.data(), cout, hw);
    ConstMapMat wm(weight.values.data(), cout, static_cast<Eigen::Index>(s.c) * k * k);
    o.noalias() = wm * cache.col;
    o.colwise() += ConstMapVec(bias.values.data(), cout);
}

void conv_backward(const ConvCache& cache, std::span<const double> dout, const NamedTensor& weight,
                   std::vector<double>* gw, std::vector<double>* gb, std::vector<double>* din) {
    const int cout = weight.shape[0];
    const int k = weight.shape[2];
    const int pad = k / 2;
    const Shape s = cache.in;
    const int hw = s.h * s.w;
    const Eigen::Index kk = static_cast<Eigen::Index>(s.c) * k * k;
    ConstMapMat d(dout.data(), cout, hw);
    if (gw) MapMat(gw->data(), cout, kk).noalias() += d * cache.col.transpose();
    if (gb) MapVec(gb->data(), cout) += d.rowwise().sum();
    if (!din) return;
    ConstMapMat wm(weight.values.data(), cout, kk);
    const RowMat dcol = wm.transpose() * d;
    din->assign(s.size(), 0.0);
    for (int ci = 0; ci < s.c; ++ci)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const double* row = dcol.row((ci * k + ky) * k + kx).data();
                for (int y = 0; y < s.h; ++y) {
                    const int iy = y + ky - pad;
                    if (iy < 0 || iy >= s.h) continue;
                    double* dst = din->data() + (static_cast<std::size_t>(ci) * s.h + iy) * s.w;
                    const int x_lo = std::max(0, pad - kx);
                    const int x_hi = std::min(s.w, s.w + pad - kx);
                    for (int x = x_lo; x < x_hi; ++x) dst[x + kx - pad] += row[y * s.w + x];
                }
            }
}

void relu_inplace(std::vector<double>& v) {
    for (auto& x : v) x = x > 0.0 ? x : 0.0;
}

// Gradient through ReLU given its output.
void relu_backward(const std::vector<double>& out, std::vector<double>& grad) {
    for (std::size_t i = 0; i < grad.size(); ++i)
        if (!(out[i] > 0.0)) grad[i] = 0.0;
}

std::vector<double> avg_pool(const std::vector<double>& in, Shape s, int f) {
    const int oh = s.h / f, ow = s.w / f;
    std::vector<double> out(static_cast<std::size_t>(s.c) * oh * ow, 0.0);
    const double scale = 1.0 / (f * f);
    for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x)
                out[(static_cast<std::size_t>(c) * oh + y / f) * ow + x / f] +=
                    scale * in[(static_cast<std::size_t>(c) * s.h + y) * s.w + x];
    return out;
}

std::vector<double> avg_pool_backward(const std::vector<double>& dout, Shape s, int f) {
    const int oh = s.h / f, ow = s.w / f;
    std::vector<double> din(s.size());
    const double scale = 1.0 / (f * f);
    for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < s.h; ++y)
            for (int x = 0; x < s.w; ++x)
                din[(static_cast<std::size_t>(c) * s.h + y) * s.w + x] =
                    scale * dout[(static_cast<std::size_t>(c) * oh + y / f) * ow + x / f];
    return din;
}

// Nearest-neighbour upsampling of a [c][h][w] map by f.
std::vector<double> upsample(const std::vector<double>& in, Shape s, int f) {
    const int oh = s.h * f, ow = s.w * f;
    std::vector<double> out(static_cast<std::size_t>(s.c) * oh * ow);
    for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                out[(static_cast<std::size_t>(c) * oh + y) * ow + x] = in[(static_cast<std::size_t>(c) * s.h + y / f) * s.w + x / f];
    return out;
}

std::vector<double> upsample_backward(const std::vector<double>& dout, Shape s, int f) {
    const int oh = s.h * f, ow = s.w * f;
    std::vector<double> din(s.size(), 0.0);
    for (int c = 0; c < s.c; ++c)
        for (int y = 0; y < oh; ++y)
            for (int x = 0; x < ow; ++x)
                din[(static_cast<std::size_t>(c) * s.h + y / f) * s.w + x / f] += dout[(static_cast<std::size_t>(c) * oh + y) * ow + x];
    return din;
}

struct EncoderCache {
    std::array<ConvCache, 4> conv;
    std::array<Shape, 4> conv_shape{};        // input shape of each block
    std::array<std::vector<double>, 4> act;   // ReLU outputs, pre-pooling
    std::vector<double> flat;                 // bottleneck features
    std::vector<double> tanh_out;
};

void encoder_forward(const CodecWeights& w, const CodecConfig& cfg, const Image& x, EncoderCache& cache) {
    std::vector<double> cur = to_chw(x);
    Shape s{3, cfg.height, cfg.width};
    for (int i = 0; i < 4; ++i) {
        cache.conv_shape[i] = s;
        conv_forward(cur, s, w.tensors[kEncConv + 2 * i], w.tensors[kEncConv + 2 * i + 1], cache.act[i], cache.conv[i]);
        relu_inplace(cache.act[i]);
        const Shape conv_out{cfg.widths[i], s.h, s.w};
        cur = avg_pool(cache.act[i], conv_out, kResample[i]);
        s = {cfg.widths[i], s.h / kResample[i], s.w / kResample[i]};
    }
    cache.flat = std::move(cur);
    const auto& qw = w.tensors[kEncQuant];
    const auto& qb = w.tensors[kEncQuant + 1];
    const int bits = qw.shape[0];
    const int n = qw.shape[1];
    Eigen::VectorXd pre = ConstMapMat(qw.values.data(), bits, n) * ConstMapVec(cache.flat.data(), n) +
                          ConstMapVec(qb.values.data(), bits);
    cache.tanh_out.resize(bits);
    for (int i = 0; i < bits; ++i) cache.tanh_out[i] = std::tanh(pre[i]);
}

// dt: gradient with respect to the tanh outputs.
void encoder_backward(const CodecWeights& w, const CodecConfig& cfg, const EncoderCache& cache,
                      std::span<const double> dt, Gradients& g, DenseFactors* defer = nullptr) {
    const auto& qw = w.tensors[kEncQuant];
    const int bits = qw.shape[0];
    const int n = qw.shape[1];
    Eigen::VectorXd dpre(bits);
    for (int i = 0; i < bits; ++i) dpre[i] = dt[i] * (1.0 - cache.tanh_out[i] * cache.tanh_out[i]);
    if (defer) {
        defer->enc_out.emplace_back(dpre.data(), dpre.data() + bits);
        defer->enc_in.push_back(cache.flat);
    } else {
        MapMat(g[kEncQuant].data(), bits, n).noalias() += dpre * ConstMapVec(cache.flat.data(), n).transpose();
    }
    MapVec(g[kEncQuant + 1].data(), bits) += dpre;
    std::vector<double> grad(n);
    MapVec(grad.data(), n).noalias() = ConstMapMat(qw.values.data(), bits, n).transpose() * dpre;

    for (int i = 3; i >= 0; --i) {
        const Shape s = cache.conv_shape[i];
        const Shape conv_out{cfg.widths[i], s.h, s.w};
        grad = avg_pool_backward(grad, conv_out, kResample[i]);
        relu_backward(cache.act[i], grad);
        std::vector<double> din;
        conv_backward(cache.conv[i], grad, w.tensors[kEncConv + 2 * i], &g[kEncConv + 2 * i], &g[kEncConv + 2 * i + 1],
                      i > 0 ? &din : nullptr);
        grad = std::move(din);
    }
}

struct DecoderCache {
    std::vector<double> symbols;
    std::vector<double> dense_out;  // post-ReLU
    std::array<ConvCache, 4> conv;
    std::array<Shape, 4> conv_shape{};  // conv input shape of each block
    std::array<std::vector<double>, 4> act;
    ConvCache out_conv;
    std::vector<double> y;  // tanh output
};

constexpr std::array<int, 4> kDecKernel{3, 5, 7, 13};
constexpr std::array<int, 4> kDecUp{2, 2, 2, 4};
// The three small blocks upsample before convolving; the 13x13 block runs at
// 1/4 resolution and is upsampled afterwards.
constexpr std::array<bool, 4> kDecUpFirst{true, true, true, false};

void decoder_forward(const CodecWeights& w, const CodecConfig& cfg, std::span<const double> symbols, DecoderCache& cache) {
    const auto& dw = w.tensors[kDecDense];
    const auto& db = w.tensors[kDecDense + 1];
    const int n = dw.shape[0];
    const int bits = dw.shape[1];
    cache.symbols.assign(symbols.begin(), symbols.end());
    cache.dense_out.resize(n);
    MapVec(cache.dense_out.data(), n) =
        ConstMapMat(dw.values.data(), n, bits) * ConstMapVec(cache.symbols.data(), bits) + ConstMapVec(db.values.data(), n);
    relu_inplace(cache.dense_out);

    std::vector<double> cur = cache.dense_out;
    Shape s{cfg.widths[3], cfg.bottleneck_height(), cfg.bottleneck_width()};
    for (int i = 0; i < 4; ++i) {
        const auto& cw = w.tensors[kDecConv + 2 * i];
        if (kDecUpFirst[i]) {
            cur = upsample(cur, s, kDecUp[i]);
            s = {s.c, s.h * kDecUp[i], s.w * kDecUp[i]};
        }
        cache.conv_shape[i] = s;
        conv_forward(cur, s, cw, w.tensors[kDecConv + 2 * i + 1], cache.act[i], cache.conv[i]);
        relu_inplace(cache.act[i]);
        s.c = cw.shape[0];
        if (kDecUpFirst[i]) {
            cur = cache.act[i];
        } else {
            cur = upsample(cache.act[i], s, kDecUp[i]);
            s = {s.c, s.h * kDecUp[i], s.w * kDecUp[i]};
        }
    }
    conv_forward(cur, s, w.tensors[kDecOut], w.tensors[kDecOut + 1], cache.y, cache.out_conv);
    for (auto& v : cache.y) v = std::tanh(v);
}

// dy: gradient with respect to the tanh output; returns gradient w.r.t. symbols.
std::vector<double> decoder_backward(const CodecWeights& w, const DecoderCache& cache, std::span<const double> dy,
                                     Gradients& g, DenseFactors* defer = nullptr) {
    std::vector<double> grad(dy.size());
    for (std::size_t i = 0; i < dy.size(); ++i) grad[i] = dy[i] * (1.0 - cache.y[i] * cache.y[i]);
    std::vector<double> din;
    conv_backward(cache.out_conv, grad, w.tensors[kDecOut], &g[kDecOut], &g[kDecOut + 1], &din);
    grad = std::move(din);
    for (int i = 3; i >= 0; --i) {
        const auto& cw = w.tensors[kDecConv + 2 * i];
        const Shape s = cache.conv_shape[i];
        if (!kDecUpFirst[i]) grad = upsample_backward(grad, Shape{cw.shape[0], s.h, s.w}, kDecUp[i]);
        relu_backward(cache.act[i], grad);
        conv_backward(cache.conv[i], grad, cw, &g[kDecConv + 2 * i], &g[kDecConv + 2 * i + 1], &din);
        grad = kDecUpFirst[i] ? upsample_backward(din, Shape{s.c, s.h / kDecUp[i], s.w / kDecUp[i]}, kDecUp[i])
                              : std::move(din);
    }
    relu_backward(cache.dense_out, grad);
    const auto& dw = w.tensors[kDecDense];
    const int n = dw.shape[0];
    const int bits = dw.shape[1];
    ConstMapVec d(grad.data(), n);
    if (defer) {
        defer->dec_out.emplace_back(grad.begin(), grad.begin() + n);
        defer->dec_in.push_back(cache.symbols);
    } else {
        MapMat(g[kDecDense].data(), n, bits).noalias() += d * ConstMapVec(cache.symbols.data(), bits).transpose();
    }
    MapVec(g[kDecDense + 1].data(), n) += d;
    std::vector<double> ds(bits);
    MapVec(ds.data(), bits).noalias() = ConstMapMat(dw.values.data(), n, bits).transpose() * d;
    return ds;
}

}  // namespace

Gradients zero_gradients(const CodecWeights& w) {
    Gradients g;
    g.reserve(w.tensors.size());
    for (const auto& t : w.tensors) g.emplace_back(t.values.size(), 0.0);
    return g;
}

std::vector<double> to_chw(const Image& img) {
    const int H = img.height(), W = img.width();
    std::vector<double> out(img.size());
    for (int k = 0; k < 3; ++k)
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) out[(static_cast<std::size_t>(k) * H + r) * W + c] = img.at(r, c, k);
    return out;
}

Image from_chw(std::span<const double> chw, int height, int width) {
    Image img(height, width);
    for (int k = 0; k < 3; ++k)
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c) img.at(r, c, k) = chw[(static_cast<std::size_t>(k) * height + r) * width + c];
    return img;
}

std::vector<double> encoder_soft(const CodecWeights& w, const CodecConfig& cfg, const Image& x) {
    EncoderCache cache;
    encoder_forward(w, cfg, x, cache);
    return std::move(cache.tanh_out);
}

std::vector<double> decoder_soft(const CodecWeights& w, const CodecConfig& cfg, std::span<const double> symbols) {
    DecoderCache cache;
    decoder_forward(w, cfg, symbols, cache);
    return std::move(cache.y);
}

double encoder_probe(const CodecWeights& w, const CodecConfig& cfg, const Image& x, std::span<const double> coeff,
                     Gradients* grad) {
    EncoderCache cache;
    encoder_forward(w, cfg, x, cache);
    double value = 0.0;
    for (std::size_t i = 0; i < coeff.size(); ++i) value += coeff[i] * cache.tanh_out[i];
    if (grad) encoder_backward(w, cfg, cache, coeff, *grad);
    return value;
}

namespace {

double mse_and_grad(const std::vector<double>& y, const std::vector<double>& target, std::vector<double>* dy) {
    const double n = static_cast<double>(y.size());
    double loss = 0.0;
    if (dy) dy->resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - target[i];
        loss += d * d;
        if (dy) (*dy)[i] = 2.0 * d / n;
    }
    return loss / n;
}

}  // namespace

double decoder_loss(const CodecWeights& w, const CodecConfig& cfg, std::span<const double> symbols, const Image& target,
                    Gradients* grad) {
    DecoderCache cache;
    decoder_forward(w, cfg, symbols, cache);
    std::vector<double> dy;
    const double loss = mse_and_grad(cache.y, to_chw(target), grad ? &dy : nullptr);
    if (grad) decoder_backward(w, cache, dy, *grad);
    return loss;
}

double autoencoder_step(const CodecWeights& w, const CodecConfig& cfg, const Image& x,
                        const std::vector<std::uint8_t>& flips, Gradients* grad, DenseFactors* defer) {
    EncoderCache enc;
    encoder_forward(w, cfg, x, enc);
    std::vector<double> symbols(enc.tanh_out.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
        const double s = enc.tanh_out[i] > 0.0 ? 1.0 : -1.0;
        symbols[i] = flips.empty() || !flips[i] ? s : -s;
    }
    DecoderCache dec;
    decoder_forward(w, cfg, symbols, dec);
    std::vector<double> dy;
    const double loss = mse_and_grad(dec.y, to_chw(x), grad ? &dy : nullptr);
    if (grad) {
        // Straight-through: the hard decision and the channel pass gradients unchanged.
        const std::vector<double> ds = decoder_backward(w, dec, dy, *grad, defer);
        encoder_backward(w, cfg, enc, ds, *grad, defer);
    }
    return loss;
}

void round_to_float(std::vector<double>& values) {
    for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
}

namespace {

// g (rows x cols, row-major) += sum_k out[k] in[k]^T as one matrix product.
void add_outer_products(std::vector<double>& g, const std::vector<std::vector<double>>& out,
                        const std::vector<std::vector<double>>& in) {
    if (out.empty()) return;
    const auto rows = static_cast<Eigen::Index>(out[0].size());
    const auto cols = static_cast<Eigen::Index>(in[0].size());
    const auto k = static_cast<Eigen::Index>(out.size());
    Eigen::MatrixXd a(rows, k), b(cols, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        a.col(j) = ConstMapVec(out[j].data(), rows);
        b.col(j) = ConstMapVec(in[j].data(), cols);
    }
    MapMat(g.data(), rows, cols).noalias() += a * b.transpose();
}

}  // namespace

void flush_dense(DenseFactors& f, Gradients& grad) {
    add_outer_products(grad[kEncQuant], f.enc_out, f.enc_in);
    add_outer_products(grad[kDecDense], f.dec_out, f.dec_in);
    f = {};
}

}  // namespace pasc::nn
