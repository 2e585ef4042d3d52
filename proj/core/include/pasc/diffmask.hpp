#pragma once

#include "pasc/types.hpp"

namespace pasc {

/// Keeps p - p_syn at pixels whose channel-absolute-sum difference is
/// strictly greater than eps; every other pixel becomes exactly (0,0,0).
DiffImage mask_diff(const Image& p, const Image& p_syn, double eps);

/// Fraction of pixels that are exactly (0,0,0).
double zero_ratio(const DiffImage& d);
double zero_ratio(const Image& d);

struct CombineOptions {
    /// Median-smooth (3x3) pixels whose |d_hat| channel sum is below `floor`.
    bool median_smoothing = false;
    double floor = 0.05;
};

/// p_syn + d_hat, clamped to [-1, 1].
Image combine(const Image& p_syn, const DiffImage& d_hat, const CombineOptions& opts = {});

/// Component-wise scaling, used to move differences in and out of the
/// codec's [-1, 1] range.
Image scaled(const Image& img, double factor);

}  // namespace pasc
