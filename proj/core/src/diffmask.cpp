#include "pasc/diffmask.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pasc {

namespace {

// a - b == s + err exactly, for s = fl(a - b)
double sub_error(double a, double b, double s) {
    const double bb = s - a;
    return (a - (s - bb)) + (-b - bb);
}

double add_error(double a, double b, double s) {
    const double bb = s - a;
    return (a - (s - bb)) + (b - bb);
}

}  // namespace

DiffImage mask_diff(const Image& p, const Image& p_syn, double eps) {
    require_same_shape(p, p_syn, "mask_diff");
    if (!(eps >= 0.0)) throw ArgumentError("mask_diff: eps must be nonnegative");
    DiffImage out{Image(p.height(), p.width()), eps, {}};
    const auto& a = p.data();
    const auto& b = p_syn.data();
    auto& d = out.values.data();
    out.residual.assign(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); i += 3) {
        const double d0 = a[i] - b[i];
        const double d1 = a[i + 1] - b[i + 1];
        const double d2 = a[i + 2] - b[i + 2];
        if (std::abs(d0) + std::abs(d1) + std::abs(d2) > eps) {
            for (std::size_t k = 0; k < 3; ++k) {
                d[i + k] = a[i + k] - b[i + k];
                out.residual[i + k] = sub_error(a[i + k], b[i + k], d[i + k]);
            }
        }
    }
    return out;
}

double zero_ratio(const Image& d) {
    if (d.pixel_count() == 0) return 1.0;
    const auto& v = d.data();
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < v.size(); i += 3)
        if (v[i] == 0.0 && v[i + 1] == 0.0 && v[i + 2] == 0.0) ++zeros;
    return static_cast<double>(zeros) / static_cast<double>(d.pixel_count());
}

double zero_ratio(const DiffImage& d) { return zero_ratio(d.values); }

Image combine(const Image& p_syn, const DiffImage& d_hat, const CombineOptions& opts) {
    require_same_shape(p_syn, d_hat.values, "combine");
    Image out(p_syn.height(), p_syn.width());
    const auto& s = p_syn.data();
    const auto& d = d_hat.values.data();
    auto& o = out.data();
    const bool exact = d_hat.residual.size() == d.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        double v = s[i] + d[i];
        if (exact) v += add_error(s[i], d[i], v) + d_hat.residual[i];
        o[i] = std::clamp(v, -1.0, 1.0);
    }
    if (!opts.median_smoothing) return out;

    const Image fused = out;
    const int H = out.height();
    const int W = out.width();
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            const double mag = std::abs(d_hat.values.at(r, c, 0)) + std::abs(d_hat.values.at(r, c, 1)) +
                               std::abs(d_hat.values.at(r, c, 2));
            if (mag >= opts.floor) continue;
            for (int k = 0; k < 3; ++k) {
                std::array<double, 9> win;
                int n = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        win[n++] = fused.at(std::clamp(r + dr, 0, H - 1), std::clamp(c + dc, 0, W - 1), k);
                std::nth_element(win.begin(), win.begin() + 4, win.end());
                out.at(r, c, k) = win[4];
            }
        }
    }
    return out;
}

Image scaled(const Image& img, double factor) {
    Image out = img;
    for (auto& v : out.data()) v *= factor;
    return out;
}

}  // namespace pasc
