#pragma once

// Minimal dense-network toolkit: fully-connected blocks with optional batch
// normalization and leaky ReLU, manual backpropagation, Adam, and the
// input-gradient penalty used by the critic.
//
// Batches are stored column-wise: a matrix of shape (features x batch).

#include <aegan/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace aegan::nn {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Mode { train, eval };

/// A named parameter tensor and its gradient accumulator.
template <typename T>
struct ParamRef {
    std::string name;
    Mat<T>* value;
    Mat<T>* grad;
};

/// A named non-trainable tensor (batch-norm running statistics).
template <typename T>
struct BufferRef {
    std::string name;
    Mat<T>* value;
};

struct BlockSpec {
    std::size_t in = 0;
    std::size_t out = 0;
    bool batch_norm = false;
    bool activation = false; // leaky ReLU after the (normalized) affine map
};

template <typename T>
class DenseBlock {
public:
    DenseBlock() = default;

    DenseBlock(const BlockSpec& spec, T slope, std::mt19937_64& rng) : spec_(spec), slope_(slope) {
        const auto in = static_cast<Eigen::Index>(spec.in), out = static_cast<Eigen::Index>(spec.out);
        const double bound = 1.0 / std::sqrt(static_cast<double>(spec.in));
        std::uniform_real_distribution<double> u(-bound, bound);
        weight_.resize(out, in);
        bias_.resize(out, 1);
        for (Eigen::Index i = 0; i < weight_.size(); ++i) weight_.data()[i] = static_cast<T>(u(rng));
        for (Eigen::Index i = 0; i < bias_.size(); ++i) bias_.data()[i] = static_cast<T>(u(rng));
        d_weight_ = Mat<T>::Zero(out, in);
        d_bias_ = Mat<T>::Zero(out, 1);
        if (spec.batch_norm) {
            gamma_ = Mat<T>::Ones(out, 1);
            beta_ = Mat<T>::Zero(out, 1);
            d_gamma_ = Mat<T>::Zero(out, 1);
            d_beta_ = Mat<T>::Zero(out, 1);
            running_mean_ = Mat<T>::Zero(out, 1);
            running_var_ = Mat<T>::Ones(out, 1);
        }
    }

    const BlockSpec& spec() const noexcept { return spec_; }
    T slope() const noexcept { return slope_; }
    const Mat<T>& weight() const noexcept { return weight_; }
    Mat<T>& weight() noexcept { return weight_; }
    Mat<T>& d_weight() noexcept { return d_weight_; }

    Mat<T> forward(const Mat<T>& x, Mode mode) {
        input_ = x;
        Mat<T> z = weight_ * x;
        z.colwise() += bias_.col(0);
        if (spec_.batch_norm) z = batch_norm_forward(z, mode);
        pre_activation_ = z;
        if (!spec_.activation) return z;
        return z.unaryExpr([s = slope_](T v) { return v > T(0) ? v : s * v; });
    }

    /// Stateless forward pass using batch-norm running statistics.
    Mat<T> infer(const Mat<T>& x) const {
        Mat<T> z = weight_ * x;
        z.colwise() += bias_.col(0);
        if (spec_.batch_norm) {
            const Vec<T> inv = (running_var_.col(0).array() + T(bn_eps)).rsqrt().matrix();
            z = ((z.colwise() - running_mean_.col(0)).array().colwise() * (inv.array() * gamma_.col(0).array()))
                    .matrix();
            z.colwise() += beta_.col(0);
        }
        if (!spec_.activation) return z;
        return z.unaryExpr([s = slope_](T v) { return v > T(0) ? v : s * v; });
    }

    /// Accumulates parameter gradients and returns d(loss)/d(input).
    Mat<T> backward(const Mat<T>& grad_out) {
        Mat<T> g = grad_out;
        if (spec_.activation) g = g.cwiseProduct(activation_mask());
        if (spec_.batch_norm) g = batch_norm_backward(g);
        d_weight_.noalias() += g * input_.transpose();
        d_bias_ += g.rowwise().sum();
        return weight_.transpose() * g;
    }

    /// Slope of the activation at the cached pre-activations (1 where there is none).
    Mat<T> activation_mask() const {
        if (!spec_.activation) return Mat<T>::Ones(pre_activation_.rows(), pre_activation_.cols());
        return pre_activation_.unaryExpr([s = slope_](T v) { return v > T(0) ? T(1) : s; });
    }

    void zero_grad() {
        d_weight_.setZero();
        d_bias_.setZero();
        if (spec_.batch_norm) {
            d_gamma_.setZero();
            d_beta_.setZero();
        }
    }

    void collect(const std::string& prefix, std::vector<ParamRef<T>>& params, std::vector<BufferRef<T>>& buffers) {
        params.push_back({prefix + ".weight", &weight_, &d_weight_});
        params.push_back({prefix + ".bias", &bias_, &d_bias_});
        if (spec_.batch_norm) {
            params.push_back({prefix + ".bn.gamma", &gamma_, &d_gamma_});
            params.push_back({prefix + ".bn.beta", &beta_, &d_beta_});
            buffers.push_back({prefix + ".bn.running_mean", &running_mean_});
            buffers.push_back({prefix + ".bn.running_var", &running_var_});
        }
    }

    static constexpr double bn_eps = 1e-5;
    static constexpr double bn_momentum = 0.1;

private:
    Mat<T> batch_norm_forward(const Mat<T>& z, Mode mode) {
        const Eigen::Index b = z.cols();
        Vec<T> mean, var;
        if (mode == Mode::train) {
            if (b < 2) throw Error(ErrorCode::invalid_argument, "batch normalization needs a batch of >= 2");
            mean = z.rowwise().mean();
            Mat<T> centered = z.colwise() - mean;
            var = centered.array().square().rowwise().mean();
            const T unbias = static_cast<T>(b) / static_cast<T>(b - 1);
            running_mean_ = (T(1) - T(bn_momentum)) * running_mean_ + T(bn_momentum) * mean;
            running_var_ = (T(1) - T(bn_momentum)) * running_var_ + T(bn_momentum) * unbias * var;
        } else {
            mean = running_mean_.col(0);
            var = running_var_.col(0);
        }
        inv_std_ = (var.array() + T(bn_eps)).rsqrt().matrix();
        x_hat_ = (z.colwise() - mean).array().colwise() * inv_std_.array();
        bn_mode_ = mode;
        Mat<T> y = x_hat_.array().colwise() * gamma_.col(0).array();
        y.colwise() += beta_.col(0);
        return y;
    }

    Mat<T> batch_norm_backward(const Mat<T>& g) {
        d_gamma_ += g.cwiseProduct(x_hat_).rowwise().sum();
        d_beta_ += g.rowwise().sum();
        Mat<T> dx_hat = g.array().colwise() * gamma_.col(0).array();
        if (bn_mode_ == Mode::eval) return dx_hat.array().colwise() * inv_std_.array();
        const T n = static_cast<T>(g.cols());
        Vec<T> sum_dx = dx_hat.rowwise().sum();
        Vec<T> sum_dx_xhat = dx_hat.cwiseProduct(x_hat_).rowwise().sum();
        Mat<T> dz = (n * dx_hat).colwise() - sum_dx;
        dz -= (x_hat_.array().colwise() * sum_dx_xhat.array()).matrix();
        return (dz.array().colwise() * (inv_std_.array() / n)).matrix();
    }

    BlockSpec spec_{};
    T slope_ = T(0.2);
    Mat<T> weight_, bias_, d_weight_, d_bias_;
    Mat<T> gamma_, beta_, d_gamma_, d_beta_, running_mean_, running_var_;
    Mat<T> input_, pre_activation_, x_hat_;
    Vec<T> inv_std_;
    Mode bn_mode_ = Mode::train;
};

/// Sequence of dense blocks.
template <typename T>
class Mlp {
public:
    Mlp() = default;

    Mlp(const std::vector<BlockSpec>& blocks, T slope, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            if (i && blocks[i].in != blocks[i - 1].out)
                throw Error(ErrorCode::shape_mismatch, "mismatched block widths in network");
            blocks_.emplace_back(blocks[i], slope, rng);
        }
    }

    std::size_t in_width() const { return blocks_.front().spec().in; }
    std::size_t out_width() const { return blocks_.back().spec().out; }
    std::vector<DenseBlock<T>>& blocks() noexcept { return blocks_; }
    const std::vector<DenseBlock<T>>& blocks() const noexcept { return blocks_; }

    std::vector<BlockSpec> specs() const {
        std::vector<BlockSpec> s;
        for (const auto& b : blocks_) s.push_back(b.spec());
        return s;
    }

    Mat<T> forward(const Mat<T>& x, Mode mode = Mode::train) {
        if (static_cast<std::size_t>(x.rows()) != in_width())
            throw Error(ErrorCode::shape_mismatch, "network input has " + std::to_string(x.rows()) +
                                                       " rows, expected " + std::to_string(in_width()));
        Mat<T> h = x;
        for (auto& b : blocks_) h = b.forward(h, mode);
        return h;
    }

    /// Forward pass in eval mode that leaves the network untouched.
    Mat<T> infer(const Mat<T>& x) const {
        if (static_cast<std::size_t>(x.rows()) != in_width())
            throw Error(ErrorCode::shape_mismatch, "network input has " + std::to_string(x.rows()) +
                                                       " rows, expected " + std::to_string(in_width()));
        Mat<T> h = x;
        for (const auto& b : blocks_) h = b.infer(h);
        return h;
    }

    Mat<T> backward(const Mat<T>& grad_out) {
        Mat<T> g = grad_out;
        for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = it->backward(g);
        return g;
    }

    void zero_grad() {
        for (auto& b : blocks_) b.zero_grad();
    }

    std::vector<ParamRef<T>> parameters() {
        std::vector<ParamRef<T>> p;
        std::vector<BufferRef<T>> unused;
        for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect("l" + std::to_string(i), p, unused);
        return p;
    }

    std::vector<BufferRef<T>> buffers() {
        std::vector<ParamRef<T>> unused;
        std::vector<BufferRef<T>> b;
        for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect("l" + std::to_string(i), unused, b);
        return b;
    }

    /// Parameters followed by buffers, as (name, tensor) pairs for serialization.
    std::vector<std::pair<std::string, Mat<T>*>> state() {
        std::vector<std::pair<std::string, Mat<T>*>> s;
        for (auto& p : parameters()) s.emplace_back(p.name, p.value);
        for (auto& b : buffers()) s.emplace_back(b.name, b.value);
        return s;
    }

    /// Sum of every parameter and buffer entry, for cheap change detection.
    double checksum() {
        double s = 0.0;
        for (auto& [name, m] : state()) s += m->template cast<double>().sum() + 1e-3 * m->template cast<double>().squaredNorm();
        return s;
    }

    bool all_finite() {
        for (auto& [name, m] : state())
            if (!m->allFinite()) return false;
        return true;
    }

private:
    std::vector<DenseBlock<T>> blocks_;
};

/// Result of the input-gradient penalty on a critic.
template <typename T>
struct PenaltyResult {
    T value = T(0);          // lambda * mean((||grad|| - 1)^2)
    std::vector<T> norms;    // per-sample ||d critic / d input||
};

/// Computes lambda * mean_i (||d f(x_i)/d x_i|| - 1)^2 for a scalar-output
/// critic made of affine maps and leaky ReLUs, and accumulates its gradient
/// with respect to the critic's weights.
///
/// For such a network the input gradient is W1^T S1 W2^T S2 ... wK^T with S
/// the (piecewise constant) activation slopes, so the penalty depends only on
/// the weights; biases receive no gradient.
template <typename T>
PenaltyResult<T> gradient_penalty(Mlp<T>& critic, const Mat<T>& x_hat, T lambda) {
    auto& blocks = critic.blocks();
    for (const auto& b : blocks)
        if (b.spec().batch_norm) throw Error(ErrorCode::invalid_argument, "gradient penalty needs a critic without batch norm");
    if (critic.out_width() != 1) throw Error(ErrorCode::shape_mismatch, "critic must have a scalar output");

    critic.forward(x_hat, Mode::train);
    const std::size_t depth = blocks.size();
    const Eigen::Index batch = x_hat.cols();

    std::vector<Mat<T>> masks(depth);
    for (std::size_t l = 0; l < depth; ++l) masks[l] = blocks[l].activation_mask();

    // delta[l]: d f / d (pre-activation of block l), computed backwards.
    std::vector<Mat<T>> delta(depth);
    delta[depth - 1] = masks[depth - 1].cwiseProduct(Mat<T>::Ones(1, batch));
    for (std::size_t l = depth - 1; l > 0; --l)
        delta[l - 1] = masks[l - 1].cwiseProduct(blocks[l].weight().transpose() * delta[l]);
    Mat<T> grad_in = blocks[0].weight().transpose() * delta[0];

    PenaltyResult<T> out;
    out.norms.resize(static_cast<std::size_t>(batch));
    Mat<T> r(grad_in.rows(), batch); // d penalty / d grad_in
    T total = T(0);
    for (Eigen::Index i = 0; i < batch; ++i) {
        const T norm = grad_in.col(i).norm();
        out.norms[static_cast<std::size_t>(i)] = norm;
        total += (norm - T(1)) * (norm - T(1));
        const T scale = norm > T(0) ? T(2) * lambda * (norm - T(1)) / (norm * static_cast<T>(batch)) : T(0);
        r.col(i) = scale * grad_in.col(i);
    }
    out.value = lambda * total / static_cast<T>(batch);

    // Reverse through grad_in = W0^T delta0, delta_{l-1} = S_{l-1} (W_l^T delta_l).
    Mat<T> r_prev = r;
    for (std::size_t l = 0; l < depth; ++l) {
        blocks[l].d_weight().noalias() += delta[l] * r_prev.transpose();
        if (l + 1 < depth) r_prev = masks[l].cwiseProduct(blocks[l].weight() * r_prev);
    }
    return out;
}

struct AdamOptions {
    double learning_rate = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double eps = 1e-8;
};

template <typename T>
class Adam {
public:
    Adam() = default;
    Adam(std::vector<ParamRef<T>> params, AdamOptions opt) : params_(std::move(params)), opt_(opt) {
        for (const auto& p : params_) {
            m_.push_back(Mat<T>::Zero(p.value->rows(), p.value->cols()));
            v_.push_back(Mat<T>::Zero(p.value->rows(), p.value->cols()));
        }
    }

    void step() {
        ++t_;
        const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
        const T b1 = T(opt_.beta1), b2 = T(opt_.beta2);
        const T lr = T(opt_.learning_rate / c1);
        const T inv_c2 = T(1.0 / c2);
        const T eps = T(opt_.eps);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const Mat<T>& g = *params_[i].grad;
            m_[i] = b1 * m_[i] + (T(1) - b1) * g;
            v_[i] = b2 * v_[i] + (T(1) - b2) * g.cwiseProduct(g);
            params_[i].value->array() -=
                lr * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.grad->setZero();
    }

    std::size_t steps() const noexcept { return t_; }

private:
    std::vector<ParamRef<T>> params_;
    std::vector<Mat<T>> m_, v_;
    AdamOptions opt_{};
    std::size_t t_ = 0;
};

} // namespace aegan::nn
