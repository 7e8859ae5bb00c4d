#include "polycl/losses.hpp"

#include <cmath>
#include <sstream>

namespace polycl {

namespace {

double norm_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// d sim(z, w) / dz = (w/|w| - sim * z/|z|) / |z|
void cosine_grad_wrt_first(const std::vector<double>& z, const std::vector<double>& w,
                           double sim, double nz, double nw, double scale,
                           std::vector<double>& out) {
    for (size_t i = 0; i < z.size(); ++i)
        out[i] += scale * (w[i] / (nz * nw) - sim * z[i] / (nz * nz));
}

[[noreturn]] void diagnostics_failure(const char* what, double nz, double np, double nn,
                                      double tau) {
    std::ostringstream os;
    os << "contrastive_loss: " << what << " (|z|=" << nz << ", |z+|=" << np << ", |z-|=" << nn
       << ", tau=" << tau << ")";
    throw InvalidArgumentError(os.str());
}

}  // namespace

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ShapeMismatchError("cosine_similarity: dimension mismatch");
    const double na = norm_of(a), nb = norm_of(b);
    if (na == 0.0 || nb == 0.0)
        throw InvalidArgumentError("cosine_similarity: zero-norm vector");
    return dot(a, b) / (na * nb);
}

double contrastive_loss(const std::vector<double>& z, const std::vector<double>& z_pos,
                        const std::vector<double>& z_neg, double tau, ContrastiveGrads* grads) {
    if (tau <= 0.0) throw InvalidArgumentError("contrastive_loss: tau must be positive");
    if (z.size() != z_pos.size() || z.size() != z_neg.size())
        throw ShapeMismatchError("contrastive_loss: embedding dimension mismatch");

    const double nz = norm_of(z), np = norm_of(z_pos), nn = norm_of(z_neg);
    if (nz == 0.0 || np == 0.0 || nn == 0.0)
        diagnostics_failure("zero-norm embedding, cosine undefined", nz, np, nn, tau);

    const double s_pos = dot(z, z_pos) / (nz * np);
    const double s_neg = dot(z, z_neg) / (nz * nn);

    // L = softplus((s- - s+)/tau); the margin form of the two-way softmax.
    const double x = (s_neg - s_pos) / tau;
    const double loss = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
    if (!std::isfinite(loss))
        diagnostics_failure("non-finite loss", nz, np, nn, tau);

    if (grads) {
        const double sig = 1.0 / (1.0 + std::exp(-x));  // dL/dx
        const double d_spos = -sig / tau;
        const double d_sneg = sig / tau;
        grads->anchor.assign(z.size(), 0.0);
        grads->positive.assign(z.size(), 0.0);
        grads->negative.assign(z.size(), 0.0);
        cosine_grad_wrt_first(z, z_pos, s_pos, nz, np, d_spos, grads->anchor);
        cosine_grad_wrt_first(z, z_neg, s_neg, nz, nn, d_sneg, grads->anchor);
        cosine_grad_wrt_first(z_pos, z, s_pos, np, nz, d_spos, grads->positive);
        cosine_grad_wrt_first(z_neg, z, s_neg, nn, nz, d_sneg, grads->negative);
        for (const auto* g : {&grads->anchor, &grads->positive, &grads->negative})
            for (double v : *g)
                if (!std::isfinite(v)) diagnostics_failure("non-finite gradient", nz, np, nn, tau);
    }
    return loss;
}

double dice_loss(const std::vector<double>& pred, const std::vector<double>& target, double eps,
                 std::vector<double>* grad) {
    if (pred.size() != target.size()) throw ShapeMismatchError("dice_loss: shape mismatch");
    if (eps < 0.0) throw InvalidArgumentError("dice_loss: negative smoothing");
    double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
    for (size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] * target[i];
        sum_p += pred[i];
        sum_t += target[i];
    }
    const double num = 2.0 * inter + eps;
    const double den = sum_p + sum_t + eps;
    if (den == 0.0) return 0.0;  // eps = 0 and both empty
    const double loss = 1.0 - num / den;
    if (grad) {
        grad->assign(pred.size(), 0.0);
        const double den2 = den * den;
        for (size_t i = 0; i < pred.size(); ++i)
            (*grad)[i] = -(2.0 * target[i] * den - num) / den2;
    }
    return loss;
}

double dice_loss(const Image2D& pred, const Mask2D& target, double eps,
                 std::vector<double>* grad) {
    if (pred.height != target.height || pred.width != target.width)
        throw ShapeMismatchError("dice_loss: prediction/target shape mismatch");
    std::vector<double> p(pred.data.begin(), pred.data.end());
    std::vector<double> t(target.data.begin(), target.data.end());
    return dice_loss(p, t, eps, grad);
}

}  // namespace polycl
