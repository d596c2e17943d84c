#pragma once

#include <utility>
#include <vector>

#include "frontal/inversion.hpp"
#include "frontal/models.hpp"
#include "frontal/slerp.hpp"

// End-to-end frontalization: invert the image and its mirror, walk the
// Slerp path between the two embeddings, and render every point. The two
// median strip images are the frontal candidates.

namespace frontal {

struct FrontalizeOptions {
    int n_points = 10;
    InversionConfig inversion;
};

struct FrontalizeResult {
    InversionResult left;  // fit of the input image
    InversionResult right; // fit of the mirrored view
    std::vector<Embedding> path;
    std::vector<double> ts;     // interpolation parameter per strip image
    std::vector<Tensor> strip;  // rendered path, [1,1,S,S] each
    std::size_t median_a = 0;   // strip indices of the median pair
    std::size_t median_b = 0;
    bool median_degenerate = false;
};

inline FrontalizeResult frontalize(const Generator& g, const Discriminator& d,
                                   const Tensor& image, const FrontalizeOptions& opts) {
    if (opts.n_points < 2) throw ContractError("frontalize: n_points must be >= 2");

    FrontalizeResult res;
    auto [left, right] = paired_invert(g, d, image, opts.inversion);
    res.left = std::move(left);
    res.right = std::move(right);

    res.path = interpolation_path(res.left.z, res.right.z, opts.n_points);
    const MedianPair medians = median_pair(res.path);
    res.median_a = medians.first_index;
    res.median_b = medians.second_index;
    res.median_degenerate = medians.degenerate;

    res.ts.reserve(res.path.size());
    res.strip.reserve(res.path.size());
    for (std::size_t i = 0; i < res.path.size(); ++i) {
        res.ts.push_back(static_cast<double>(i) / static_cast<double>(opts.n_points - 1));
        res.strip.push_back(generate(g, res.path[i]));
    }
    return res;
}

} // namespace frontal
