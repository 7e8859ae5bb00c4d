#pragma once

#include <vector>

#include "polycl/image.hpp"

namespace polycl {

struct ContrastiveGrads {
    std::vector<double> anchor, positive, negative;
};

// Binary-softmax contrastive loss over cosine similarities,
//   -log( exp(s+/tau) / (exp(s+/tau) + exp(s-/tau)) ),
// evaluated in the log-sum-exp form so small temperatures stay finite.
// Computed in double; gradients (optional) are w.r.t. the raw embeddings.
double contrastive_loss(const std::vector<double>& z, const std::vector<double>& z_pos,
                        const std::vector<double>& z_neg, double tau,
                        ContrastiveGrads* grads = nullptr);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Soft Dice loss 1 - (2*sum(p*t) + eps) / (sum(p) + sum(t) + eps). The
// smoothing keeps empty slices defined (both empty -> 0). Gradient
// (optional) is w.r.t. the per-pixel probabilities.
double dice_loss(const std::vector<double>& pred, const std::vector<double>& target,
                 double eps = 1.0, std::vector<double>* grad = nullptr);

double dice_loss(const Image2D& pred, const Mask2D& target, double eps = 1.0,
                 std::vector<double>* grad = nullptr);

}  // namespace polycl
