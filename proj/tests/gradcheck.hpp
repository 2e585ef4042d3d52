#pragma once

// Central finite-difference check of the analytic codec gradients.

#include "pasc/nn.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace pasc::test {

struct GradCheck {
    /// Worst per-tensor ||analytic - numeric|| / ||numeric|| over the sampled entries.
    double worst_relative = 0.0;
    std::string worst_tensor;
    int entries = 0;
};

/// `objective(w, grad)` returns the scalar and accumulates its gradient into
/// grad when non-null. Only tensors whose name starts with `prefix` are probed.
/// The step is small so that a probe rarely carries a pre-activation across a
/// ReLU kink; a bias feeds every position of its channel.
inline GradCheck check_gradients(CodecWeights w,
                                 const std::function<double(const CodecWeights&, nn::Gradients*)>& objective,
                                 const std::string& prefix, int per_tensor, std::uint64_t seed, double h = 1e-7) {
    nn::Gradients g = nn::zero_gradients(w);
    objective(w, &g);
    std::mt19937_64 rng(seed);
    GradCheck out;
    for (std::size_t t = 0; t < w.tensors.size(); ++t) {
        if (w.tensors[t].name.rfind(prefix, 0) != 0) continue;
        auto& vals = w.tensors[t].values;
        std::uniform_int_distribution<std::size_t> pick(0, vals.size() - 1);
        double diff2 = 0.0, ref2 = 0.0;
        const bool all = vals.size() <= static_cast<std::size_t>(per_tensor);
        const std::size_t n = all ? vals.size() : static_cast<std::size_t>(per_tensor);
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t i = all ? k : pick(rng);
            const double keep = vals[i];
            vals[i] = keep + h;
            const double up = objective(w, nullptr);
            vals[i] = keep - h;
            const double down = objective(w, nullptr);
            vals[i] = keep;
            const double numeric = (up - down) / (2.0 * h);
            diff2 += (g[t][i] - numeric) * (g[t][i] - numeric);
            ref2 += numeric * numeric;
            ++out.entries;
        }
        // Tensors with a vanishing gradient pass on the absolute error.
        const double rel = std::sqrt(diff2) <= 1e-10 ? 0.0 : std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-300);
        if (rel > out.worst_relative) {
            out.worst_relative = rel;
            out.worst_tensor = w.tensors[t].name;
        }
    }
    return out;
}

}  // namespace pasc::test
