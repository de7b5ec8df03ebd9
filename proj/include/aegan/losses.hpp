#pragma once

#include <aegan/error.hpp>
#include <aegan/nn.hpp>

#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace aegan {

using nn::Mat;

namespace loss_detail {

template <typename T>
T mean(std::span<const T> v) {
    if (v.empty()) throw Error(ErrorCode::invalid_argument, "empty batch");
    return std::accumulate(v.begin(), v.end(), T(0)) / static_cast<T>(v.size());
}

} // namespace loss_detail

/// Mean over the batch of the squared L2 distance between input and
/// reconstruction. Columns are samples.
template <typename T>
T loss_ae(const Mat<T>& input, const Mat<T>& output) {
    if (input.rows() != output.rows() || input.cols() != output.cols())
        throw Error(ErrorCode::shape_mismatch, "reconstruction shape differs from input");
    if (input.cols() == 0) throw Error(ErrorCode::invalid_argument, "empty batch");
    return (output - input).squaredNorm() / static_cast<T>(input.cols());
}

/// d loss_ae / d output.
template <typename T>
Mat<T> loss_ae_grad(const Mat<T>& input, const Mat<T>& output) {
    return (T(2) / static_cast<T>(input.cols())) * (output - input);
}

/// Critic loss with gradient penalty:
/// E[D(G(z))] - E[D(x)] + lambda * E[(||grad D(x_hat)|| - 1)^2].
template <typename T>
T loss_d(std::span<const T> d_real, std::span<const T> d_fake, std::span<const T> grad_norms, T lambda) {
    if (lambda < T(0)) throw Error(ErrorCode::invalid_argument, "gradient penalty weight must be >= 0");
    T penalty = T(0);
    for (T n : grad_norms) {
        if (!std::isfinite(n)) throw Error(ErrorCode::non_finite, "non-finite gradient norm");
        penalty += (n - T(1)) * (n - T(1));
    }
    if (!grad_norms.empty()) penalty /= static_cast<T>(grad_norms.size());
    return loss_detail::mean(d_fake) - loss_detail::mean(d_real) + lambda * penalty;
}

template <typename T>
struct CrossEntropy {
    T value = T(0);
    Mat<T> grad; // d value / d logits
};

/// Batch-mean softmax cross entropy. `logits` is (classes x batch).
template <typename T>
CrossEntropy<T> cross_entropy(const Mat<T>& logits, std::span<const std::size_t> targets) {
    if (static_cast<std::size_t>(logits.cols()) != targets.size())
        throw Error(ErrorCode::shape_mismatch, "logits and targets disagree on batch size");
    if (targets.empty()) throw Error(ErrorCode::invalid_argument, "empty batch");
    const auto batch = static_cast<T>(targets.size());
    CrossEntropy<T> ce;
    ce.grad.resize(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.cols(); ++i) {
        const auto t = static_cast<Eigen::Index>(targets[static_cast<std::size_t>(i)]);
        if (t >= logits.rows()) throw Error(ErrorCode::invalid_argument, "target class out of range");
        const T top = logits.col(i).maxCoeff();
        auto shifted = (logits.col(i).array() - top).exp();
        const T sum = shifted.sum();
        ce.value += std::log(sum) + top - logits(t, i);
        ce.grad.col(i) = shifted.matrix() / sum;
        ce.grad(t, i) -= T(1);
    }
    ce.value /= batch;
    ce.grad /= batch;
    return ce;
}

/// Generator loss: -E[D(G(z))] plus, when the classifier is enabled, the
/// cross entropy between the classifier's prediction and the synthetic rows'
/// own target values.
template <typename T>
T loss_g(std::span<const T> d_fake, const Mat<T>* class_logits = nullptr,
         std::span<const std::size_t> class_targets = {}) {
    T value = -loss_detail::mean(d_fake);
    if (class_logits) value += cross_entropy(*class_logits, class_targets).value;
    return value;
}

/// Classifier loss: cross entropy on reconstructed real rows plus cross
/// entropy on synthetic rows.
template <typename T>
T loss_c(const Mat<T>& real_logits, std::span<const std::size_t> real_targets, const Mat<T>& synth_logits,
         std::span<const std::size_t> synth_targets) {
    return cross_entropy(real_logits, real_targets).value + cross_entropy(synth_logits, synth_targets).value;
}

} // namespace aegan
