#pragma once

#include <aegan/encoding.hpp>
#include <aegan/error.hpp>
#include <aegan/losses.hpp>
#include <aegan/nn.hpp>
#include <aegan/schema.hpp>

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace aegan {

using nn::Mat;
using nn::Mlp;
using nn::Mode;

/// Layer widths of the five networks.
struct NetSpec {
    std::size_t total_width = 0;  // encoded row width (Enc input, Dec output)
    std::size_t latent_len = 0;   // Enc output, G output, D input
    std::size_t noise_len = 100;  // G input
    std::vector<std::size_t> enc_hidden;  // Dec uses the reverse
    std::size_t gan_hidden = 256; // both hidden layers of G and D
    std::vector<std::size_t> cls_hidden{256, 256};
    double leaky_slope = 0.2;
    bool generator_batch_norm = true;
    std::size_t target_offset = 0; // target span in the encoded row
    std::size_t target_width = 0;
    std::size_t n_classes = 0;

    std::size_t classifier_input() const { return total_width - target_width; }

    std::vector<nn::BlockSpec> encoder_blocks() const {
        std::vector<nn::BlockSpec> b;
        std::size_t in = total_width;
        for (auto h : enc_hidden) {
            b.push_back({in, h, false, true});
            in = h;
        }
        b.push_back({in, latent_len, false, false});
        return b;
    }

    std::vector<nn::BlockSpec> decoder_blocks() const {
        std::vector<nn::BlockSpec> b;
        std::size_t in = latent_len;
        for (auto it = enc_hidden.rbegin(); it != enc_hidden.rend(); ++it) {
            b.push_back({in, *it, false, true});
            in = *it;
        }
        b.push_back({in, total_width, false, false});
        return b;
    }

    std::vector<nn::BlockSpec> generator_blocks() const {
        return {{noise_len, gan_hidden, generator_batch_norm, true},
                {gan_hidden, gan_hidden, generator_batch_norm, true},
                {gan_hidden, latent_len, false, false}};
    }

    std::vector<nn::BlockSpec> discriminator_blocks() const {
        return {{latent_len, gan_hidden, false, true}, {gan_hidden, gan_hidden, false, true}, {gan_hidden, 1, false, false}};
    }

    std::vector<nn::BlockSpec> classifier_blocks() const {
        std::vector<nn::BlockSpec> b;
        std::size_t in = classifier_input();
        for (auto h : cls_hidden) {
            b.push_back({in, h, false, true});
            in = h;
        }
        b.push_back({in, n_classes, false, false});
        return b;
    }

    friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// Latent length: ceil(total_width / 4) clamped to [32, 256].
inline std::size_t default_latent_len(std::size_t total_width) {
    return std::clamp<std::size_t>((total_width + 3) / 4, 32, 256);
}

/// Network shapes for an encoder state. Zero-valued overrides mean "derive".
inline NetSpec make_net_spec(const EncoderState& state, std::size_t latent_len = 0, std::size_t gan_hidden = 256,
                             std::size_t noise_len = 100) {
    NetSpec s;
    s.total_width = state.total_width;
    s.latent_len = latent_len ? latent_len : default_latent_len(state.total_width);
    s.noise_len = noise_len;
    s.gan_hidden = gan_hidden;
    const auto L = static_cast<double>(s.latent_len);
    s.enc_hidden = {static_cast<std::size_t>(std::lround(2.0 * L)), static_cast<std::size_t>(std::lround(1.5 * L))};
    const auto& target = state.target_feature();
    s.target_offset = target.offset;
    s.target_width = target.width;
    s.n_classes = state.schema[state.schema.target_index()].categories.size();
    return s;
}

struct TrainConfig {
    std::size_t ae_epochs = 300;
    std::size_t gan_epochs = 300;
    std::size_t batch_size = 256;
    double ae_learning_rate = 1e-3;
    double learning_rate = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    std::size_t n_critic = 5;
    double gp_lambda = 10.0;
    std::size_t patience = 20;
    double ae_min_improvement = 1e-5;
    bool use_classifier = true;
    bool joint = false;
    std::size_t pretrain_epochs = 50; // joint mode only
    std::uint64_t seed = 0;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct TrainingHistory {
    std::vector<double> ae_loss;       // per autoencoder epoch (and per co-training epoch in joint mode)
    std::vector<double> d_loss;        // per GAN epoch
    std::vector<double> g_loss;
    std::vector<double> c_loss;
    std::vector<double> gp;            // mean penalty term
    std::vector<double> validity_gap;  // E[D(real)] - E[D(fake)]
    std::vector<double> cotrain_ae_loss; // joint mode: AE loss during co-training epochs

    friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;
};

using Real = float;

struct SynthModel {
    std::shared_ptr<const EncoderState> encoder;
    NetSpec spec;
    TrainConfig config;
    Mlp<Real> enc, dec, gen, disc, cls;
    TrainingHistory history;
};

// ---- batch helpers -------------------------------------------------------

namespace synth_detail {

/// Columns `idx` of the encoded matrix, transposed to (features x batch).
template <typename T>
Mat<T> gather_batch(const Eigen::MatrixXd& rows, std::span<const std::size_t> idx) {
    Mat<T> out(rows.cols(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t b = 0; b < idx.size(); ++b)
        out.col(static_cast<Eigen::Index>(b)) = rows.row(static_cast<Eigen::Index>(idx[b])).transpose().template cast<T>();
    return out;
}

template <typename T>
Mat<T> gather_cols(const Mat<T>& m, std::span<const std::size_t> idx) {
    Mat<T> out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t b = 0; b < idx.size(); ++b) out.col(static_cast<Eigen::Index>(b)) = m.col(static_cast<Eigen::Index>(idx[b]));
    return out;
}

/// Removes rows [offset, offset + width).
template <typename T>
Mat<T> drop_rows(const Mat<T>& m, std::size_t offset, std::size_t width) {
    const auto off = static_cast<Eigen::Index>(offset), w = static_cast<Eigen::Index>(width);
    Mat<T> out(m.rows() - w, m.cols());
    out.topRows(off) = m.topRows(off);
    out.bottomRows(m.rows() - off - w) = m.bottomRows(m.rows() - off - w);
    return out;
}

/// Inverse of drop_rows for gradients: zero rows are inserted for the span.
template <typename T>
Mat<T> insert_zero_rows(const Mat<T>& g, std::size_t offset, std::size_t width) {
    const auto off = static_cast<Eigen::Index>(offset), w = static_cast<Eigen::Index>(width);
    Mat<T> out = Mat<T>::Zero(g.rows() + w, g.cols());
    out.topRows(off) = g.topRows(off);
    out.bottomRows(g.rows() - off) = g.bottomRows(g.rows() - off);
    return out;
}

template <typename T>
Mat<T> normal_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat<T> z(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = static_cast<T>(n(rng));
    return z;
}

} // namespace synth_detail

/// Class index carried by the target span of each column of `rows`
/// (argmax for one-hot spans, nearest label for a label-encoded target).
template <typename T>
std::vector<std::size_t> target_classes(const Mat<T>& rows, const NetSpec& spec) {
    std::vector<std::size_t> out(static_cast<std::size_t>(rows.cols()));
    const auto off = static_cast<Eigen::Index>(spec.target_offset);
    for (Eigen::Index i = 0; i < rows.cols(); ++i) {
        if (spec.target_width == 1) {
            const double hi = static_cast<double>(spec.n_classes - 1);
            const double v = std::clamp(static_cast<double>(rows(off, i)), -1.0, 1.0);
            out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(std::clamp(std::round((v + 1.0) * 0.5 * hi), 0.0, hi));
        } else {
            Eigen::Index best = 0;
            rows.col(i).segment(off, static_cast<Eigen::Index>(spec.target_width)).maxCoeff(&best);
            out[static_cast<std::size_t>(i)] = static_cast<std::size_t>(best);
        }
    }
    return out;
}

// ---- per-step objectives (forward + backward, gradients accumulated) -----

/// Autoencoder reconstruction loss on a batch; accumulates Enc/Dec gradients.
template <typename T>
T autoencoder_objective(Mlp<T>& enc, Mlp<T>& dec, const Mat<T>& x) {
    Mat<T> latent = enc.forward(x);
    Mat<T> recon = dec.forward(latent);
    const T loss = loss_ae(x, recon);
    enc.backward(dec.backward(loss_ae_grad(x, recon)));
    return loss;
}

template <typename T>
struct CriticObjective {
    T loss = T(0);
    T penalty = T(0);
    T gap = T(0); // E[D(real)] - E[D(fake)]
};

/// Critic loss with gradient penalty on interpolates eps*real + (1-eps)*fake;
/// accumulates the critic's gradients.
template <typename T>
CriticObjective<T> critic_objective(Mlp<T>& disc, const Mat<T>& real, const Mat<T>& fake, std::span<const T> eps,
                                    T lambda) {
    const Eigen::Index b = real.cols();
    const T inv_b = T(1) / static_cast<T>(b);
    Mat<T> d_real = disc.forward(real);
    disc.backward(Mat<T>::Constant(1, b, -inv_b));
    Mat<T> d_fake = disc.forward(fake);
    disc.backward(Mat<T>::Constant(1, b, inv_b));

    Mat<T> x_hat(real.rows(), b);
    for (Eigen::Index i = 0; i < b; ++i) {
        const T e = eps[static_cast<std::size_t>(i)];
        x_hat.col(i) = e * real.col(i) + (T(1) - e) * fake.col(i);
    }
    auto gp = nn::gradient_penalty(disc, x_hat, lambda);

    CriticObjective<T> out;
    std::vector<T> vr(d_real.data(), d_real.data() + b), vf(d_fake.data(), d_fake.data() + b);
    out.loss = loss_d<T>(vr, vf, gp.norms, lambda);
    out.penalty = gp.value;
    out.gap = d_real.mean() - d_fake.mean();
    return out;
}

/// Generator loss for noise `z`. The classifier term decodes G(z) with Dec,
/// takes each row's own target class from the decoded target span, and scores
/// the classifier's prediction from the remaining columns. Gradients reach G
/// through D, and through Dec and C when the classifier is used; the other
/// networks' accumulated gradients are left for the caller to discard.
template <typename T>
T generator_objective(Mlp<T>& gen, Mlp<T>& disc, Mlp<T>& dec, Mlp<T>* cls, const NetSpec& spec, const Mat<T>& z) {
    const Eigen::Index b = z.cols();
    Mat<T> fake = gen.forward(z, Mode::train);
    Mat<T> validity = disc.forward(fake);
    Mat<T> grad_latent = disc.backward(Mat<T>::Constant(1, b, T(-1) / static_cast<T>(b)));
    std::vector<T> vf(validity.data(), validity.data() + b);
    T loss = -loss_detail::mean<T>(vf);

    if (cls) {
        Mat<T> rows = dec.forward(fake);
        const auto targets = target_classes(rows, spec);
        Mat<T> features = synth_detail::drop_rows(rows, spec.target_offset, spec.target_width);
        auto ce = cross_entropy(cls->forward(features), targets);
        loss += ce.value;
        Mat<T> grad_features = cls->backward(ce.grad);
        Mat<T> grad_rows = synth_detail::insert_zero_rows(grad_features, spec.target_offset, spec.target_width);
        grad_latent += dec.backward(grad_rows);
    }
    gen.backward(grad_latent);
    return loss;
}

/// Classifier loss on reconstructed real rows and decoded synthetic rows;
/// accumulates the classifier's gradients.
template <typename T>
T classifier_objective(Mlp<T>& cls, const NetSpec& spec, const Mat<T>& real_rows, std::span<const std::size_t> real_targets,
                       const Mat<T>& synth_rows, std::span<const std::size_t> synth_targets) {
    auto real = cross_entropy(cls.forward(synth_detail::drop_rows(real_rows, spec.target_offset, spec.target_width)),
                              real_targets);
    cls.backward(real.grad);
    auto synth = cross_entropy(cls.forward(synth_detail::drop_rows(synth_rows, spec.target_offset, spec.target_width)),
                               synth_targets);
    cls.backward(synth.grad);
    return real.value + synth.value;
}

// ---- training ------------------------------------------------------------

namespace synth_detail {

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

enum Stream : std::uint64_t { enc_init, dec_init, gen_init, disc_init, cls_init, ae_shuffle, gan_shuffle, gan_noise };

inline nn::AdamOptions adam(double lr, const TrainConfig& cfg) { return {lr, cfg.beta1, cfg.beta2, 1e-8}; }

inline void check_finite(double v, const char* what, std::size_t epoch) {
    if (!std::isfinite(v))
        throw Error(ErrorCode::divergence, std::string(what) + " became non-finite at epoch " + std::to_string(epoch));
}

/// Batches of a shuffled index permutation. A trailing batch of one row is
/// dropped (batch normalization needs two).
inline std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch, std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t s = 0; s < n; s += batch) {
        const std::size_t e = std::min(n, s + batch);
        if (e - s < 2) break;
        out.emplace_back(idx.begin() + static_cast<std::ptrdiff_t>(s), idx.begin() + static_cast<std::ptrdiff_t>(e));
    }
    return out;
}

inline void validate_config(const TrainConfig& cfg) {
    if (cfg.batch_size < 2) throw Error(ErrorCode::config, "batch_size must be >= 2");
    if (cfg.n_critic < 1) throw Error(ErrorCode::config, "n_critic must be >= 1");
    if (cfg.gp_lambda < 0) throw Error(ErrorCode::config, "gp_lambda must be >= 0");
    if (cfg.ae_epochs < 1) throw Error(ErrorCode::config, "ae_epochs must be >= 1");
}

} // namespace synth_detail

struct AutoencoderResult {
    Mlp<Real> enc, dec;
    std::vector<double> history;
};

/// Trains Enc/Dec on encoded rows with Adam until `max_epochs` or until the
/// epoch loss has failed to improve by `ae_min_improvement` for `patience`
/// consecutive epochs.
inline void train_autoencoder_epochs(Mlp<Real>& enc, Mlp<Real>& dec, nn::Adam<Real>& opt, const Eigen::MatrixXd& rows,
                                     const TrainConfig& cfg, std::size_t max_epochs, std::mt19937_64& rng,
                                     std::vector<double>& history) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    for (std::size_t epoch = 0; epoch < max_epochs; ++epoch) {
        double total = 0.0;
        std::size_t seen = 0;
        for (const auto& batch : synth_detail::epoch_batches(static_cast<std::size_t>(rows.rows()), cfg.batch_size, rng)) {
            Mat<Real> x = synth_detail::gather_batch<Real>(rows, batch);
            opt.zero_grad();
            const double loss = autoencoder_objective(enc, dec, x);
            synth_detail::check_finite(loss, "autoencoder loss", epoch);
            opt.step();
            total += loss * static_cast<double>(batch.size());
            seen += batch.size();
        }
        const double epoch_loss = total / static_cast<double>(std::max<std::size_t>(seen, 1));
        history.push_back(epoch_loss);
        if (best - epoch_loss < cfg.ae_min_improvement) {
            if (++stale >= cfg.patience) break;
        } else {
            stale = 0;
        }
        best = std::min(best, epoch_loss);
    }
}

inline AutoencoderResult train_autoencoder(const EncodedMatrix& encoded, const NetSpec& spec, const TrainConfig& cfg) {
    synth_detail::validate_config(cfg);
    if (encoded.width() != spec.total_width) throw Error(ErrorCode::shape_mismatch, "encoded width differs from net spec");
    using synth_detail::stream_seed;
    AutoencoderResult r;
    const auto slope = static_cast<Real>(spec.leaky_slope);
    r.enc = Mlp<Real>(spec.encoder_blocks(), slope, stream_seed(cfg.seed, synth_detail::enc_init));
    r.dec = Mlp<Real>(spec.decoder_blocks(), slope, stream_seed(cfg.seed, synth_detail::dec_init));
    auto params = r.enc.parameters();
    for (auto& p : r.dec.parameters()) params.push_back(p);
    nn::Adam<Real> opt(params, synth_detail::adam(cfg.ae_learning_rate, cfg));
    std::mt19937_64 rng(stream_seed(cfg.seed, synth_detail::ae_shuffle));
    train_autoencoder_epochs(r.enc, r.dec, opt, encoded.values, cfg, cfg.ae_epochs, rng, r.history);
    return r;
}

namespace synth_detail {

/// Shared GAN loop. Enc/Dec keep learning during the first `ae_cotrain_epochs`
/// epochs (joint mode) and are frozen afterwards.
inline void run_gan(SynthModel& m, const EncodedMatrix& encoded, std::size_t ae_cotrain_epochs,
                    nn::Adam<Real>* ae_opt, std::mt19937_64* ae_rng) {
    const TrainConfig& cfg = m.config;
    const NetSpec& spec = m.spec;
    const auto slope = static_cast<Real>(spec.leaky_slope);
    m.gen = Mlp<Real>(spec.generator_blocks(), slope, stream_seed(cfg.seed, gen_init));
    m.disc = Mlp<Real>(spec.discriminator_blocks(), slope, stream_seed(cfg.seed, disc_init));
    m.cls = Mlp<Real>(spec.classifier_blocks(), slope, stream_seed(cfg.seed, cls_init));
    nn::Adam<Real> opt_g(m.gen.parameters(), adam(cfg.learning_rate, cfg));
    nn::Adam<Real> opt_d(m.disc.parameters(), adam(cfg.learning_rate, cfg));
    nn::Adam<Real> opt_c(m.cls.parameters(), adam(cfg.learning_rate, cfg));
    std::mt19937_64 shuffle_rng(stream_seed(cfg.seed, gan_shuffle));
    std::mt19937_64 noise_rng(stream_seed(cfg.seed, gan_noise));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const Eigen::MatrixXd& rows = encoded.values;
    const std::size_t n = static_cast<std::size_t>(rows.rows());
    const Mat<Real> all = gather_batch<Real>(rows, [&] {
        std::vector<std::size_t> i(n);
        std::iota(i.begin(), i.end(), 0);
        return i;
    }());
    const std::vector<std::size_t> all_targets = target_classes(all, spec);

    // Frozen autoencoder: latent codes and reconstructions are computed once.
    Mat<Real> latent_all, recon_all;
    auto refresh = [&] {
        latent_all = m.enc.infer(all);
        recon_all = m.dec.infer(latent_all);
    };
    refresh();

    for (std::size_t epoch = 0; epoch < cfg.gan_epochs; ++epoch) {
        const bool cotrain = epoch < ae_cotrain_epochs;
        double sum_d = 0, sum_g = 0, sum_c = 0, sum_gp = 0, sum_gap = 0, sum_ae = 0;
        std::size_t n_d = 0, n_g = 0, n_c = 0, n_ae = 0;
        const auto batches = epoch_batches(n, cfg.batch_size, shuffle_rng);
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& batch = batches[bi];
            const std::size_t b = batch.size();

            Mat<Real> real_latent, real_recon;
            if (cotrain) {
                Mat<Real> x = gather_cols(all, batch);
                ae_opt->zero_grad();
                sum_ae += autoencoder_objective(m.enc, m.dec, x);
                ++n_ae;
                ae_opt->step();
                real_latent = m.enc.infer(x);
                real_recon = m.dec.infer(real_latent);
            } else {
                real_latent = gather_cols(latent_all, batch);
                real_recon = gather_cols(recon_all, batch);
            }

            // critic
            Mat<Real> z = normal_noise<Real>(spec.noise_len, b, noise_rng);
            Mat<Real> fake = m.gen.forward(z, Mode::train);
            std::vector<Real> eps(b);
            for (auto& e : eps) e = static_cast<Real>(unit(noise_rng));
            opt_d.zero_grad();
            auto crit = critic_objective<Real>(m.disc, real_latent, fake, eps, static_cast<Real>(cfg.gp_lambda));
            check_finite(crit.loss, "critic loss", epoch);
            opt_d.step();
            sum_d += crit.loss;
            sum_gp += crit.penalty;
            sum_gap += crit.gap;
            ++n_d;

            // auxiliary classifier
            if (cfg.use_classifier) {
                Mat<Real> synth_rows = m.dec.infer(fake);
                std::vector<std::size_t> real_t(b);
                for (std::size_t k = 0; k < b; ++k) real_t[k] = all_targets[batch[k]];
                const auto synth_t = target_classes(synth_rows, spec);
                opt_c.zero_grad();
                const double lc = classifier_objective(m.cls, spec, real_recon, real_t, synth_rows, synth_t);
                check_finite(lc, "classifier loss", epoch);
                opt_c.step();
                sum_c += lc;
                ++n_c;
            }

            // generator, once per n_critic critic steps
            if (bi % cfg.n_critic == 0) {
                Mat<Real> zg = normal_noise<Real>(spec.noise_len, b, noise_rng);
                opt_g.zero_grad();
                const double lg =
                    generator_objective(m.gen, m.disc, m.dec, cfg.use_classifier ? &m.cls : nullptr, spec, zg);
                check_finite(lg, "generator loss", epoch);
                opt_g.step();
                sum_g += lg;
                ++n_g;
            }
        }
        if (cotrain && epoch + 1 == ae_cotrain_epochs) refresh();
        auto avg = [](double s, std::size_t k) { return k ? s / static_cast<double>(k) : 0.0; };
        m.history.d_loss.push_back(avg(sum_d, n_d));
        m.history.g_loss.push_back(avg(sum_g, n_g));
        m.history.c_loss.push_back(avg(sum_c, n_c));
        m.history.gp.push_back(avg(sum_gp, n_d));
        m.history.validity_gap.push_back(avg(sum_gap, n_d));
        if (cotrain) m.history.cotrain_ae_loss.push_back(avg(sum_ae, n_ae));
    }
    (void)ae_rng;
}

} // namespace synth_detail

/// Disjoint training: the autoencoder is given (already trained) and stays
/// frozen while G, D and C train on its latent space.
inline SynthModel train_gan(const EncodedMatrix& encoded, Mlp<Real> enc, Mlp<Real> dec, const NetSpec& spec,
                            const TrainConfig& cfg, std::vector<double> ae_history = {}) {
    synth_detail::validate_config(cfg);
    SynthModel m;
    m.encoder = encoded.state;
    m.spec = spec;
    m.config = cfg;
    m.enc = std::move(enc);
    m.dec = std::move(dec);
    m.history.ae_loss = std::move(ae_history);
    synth_detail::run_gan(m, encoded, 0, nullptr, nullptr);
    if (!m.gen.all_finite() || !m.disc.all_finite() || !m.cls.all_finite())
        throw Error(ErrorCode::divergence, "non-finite parameters after GAN training");
    return m;
}

/// Joint training: the autoencoder is pre-trained for `pretrain_epochs`, then
/// keeps updating during the first (ae_epochs - pretrain_epochs) GAN epochs.
/// With pretrain_epochs >= ae_epochs this is disjoint training.
inline SynthModel train_joint(const EncodedMatrix& encoded, const NetSpec& spec, const TrainConfig& cfg) {
    synth_detail::validate_config(cfg);
    using synth_detail::stream_seed;
    SynthModel m;
    m.encoder = encoded.state;
    m.spec = spec;
    m.config = cfg;
    const auto slope = static_cast<Real>(spec.leaky_slope);
    m.enc = Mlp<Real>(spec.encoder_blocks(), slope, stream_seed(cfg.seed, synth_detail::enc_init));
    m.dec = Mlp<Real>(spec.decoder_blocks(), slope, stream_seed(cfg.seed, synth_detail::dec_init));
    auto params = m.enc.parameters();
    for (auto& p : m.dec.parameters()) params.push_back(p);
    nn::Adam<Real> ae_opt(params, synth_detail::adam(cfg.ae_learning_rate, cfg));
    std::mt19937_64 ae_rng(stream_seed(cfg.seed, synth_detail::ae_shuffle));
    const std::size_t pretrain = std::min(cfg.pretrain_epochs, cfg.ae_epochs);
    train_autoencoder_epochs(m.enc, m.dec, ae_opt, encoded.values, cfg, pretrain, ae_rng, m.history.ae_loss);
    synth_detail::run_gan(m, encoded, cfg.ae_epochs - pretrain, &ae_opt, &ae_rng);
    if (!m.gen.all_finite() || !m.disc.all_finite() || !m.cls.all_finite() || !m.enc.all_finite())
        throw Error(ErrorCode::divergence, "non-finite parameters after joint training");
    return m;
}

/// Full pipeline on an encoded table: disjoint by default, joint when configured.
inline SynthModel train(const EncodedMatrix& encoded, const NetSpec& spec, const TrainConfig& cfg) {
    if (cfg.joint) return train_joint(encoded, spec, cfg);
    auto ae = train_autoencoder(encoded, spec, cfg);
    return train_gan(encoded, std::move(ae.enc), std::move(ae.dec), spec, cfg, std::move(ae.history));
}

/// Draws n rows: noise -> G -> Dec -> inverse encoding. Uses batch-norm
/// running statistics, so the model is not modified.
inline RawTable synthesize(const SynthModel& m, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw Error(ErrorCode::invalid_argument, "cannot synthesize zero rows");
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m.spec.total_width));
    const std::size_t chunk = std::max<std::size_t>(m.config.batch_size, 2);
    for (std::size_t s = 0; s < n; s += chunk) {
        const std::size_t b = std::min(chunk, n - s);
        Mat<Real> z = synth_detail::normal_noise<Real>(m.spec.noise_len, b, rng);
        Mat<Real> decoded = m.dec.infer(m.gen.infer(z));
        rows.middleRows(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(b)) =
            decoded.transpose().cast<double>();
    }
    return decode_matrix(rows, *m.encoder);
}

// ---- serialization -------------------------------------------------------

inline nlohmann::json net_spec_to_json(const NetSpec& s) {
    return {{"total_width", s.total_width},   {"latent_len", s.latent_len},
            {"noise_len", s.noise_len},       {"enc_hidden", s.enc_hidden},
            {"gan_hidden", s.gan_hidden},     {"cls_hidden", s.cls_hidden},
            {"leaky_slope", s.leaky_slope},   {"generator_batch_norm", s.generator_batch_norm},
            {"target_offset", s.target_offset}, {"target_width", s.target_width},
            {"n_classes", s.n_classes}};
}

inline NetSpec net_spec_from_json(const nlohmann::json& j) {
    NetSpec s;
    s.total_width = j.at("total_width").get<std::size_t>();
    s.latent_len = j.at("latent_len").get<std::size_t>();
    s.noise_len = j.at("noise_len").get<std::size_t>();
    s.enc_hidden = j.at("enc_hidden").get<std::vector<std::size_t>>();
    s.gan_hidden = j.at("gan_hidden").get<std::size_t>();
    s.cls_hidden = j.at("cls_hidden").get<std::vector<std::size_t>>();
    s.leaky_slope = j.at("leaky_slope").get<double>();
    s.generator_batch_norm = j.at("generator_batch_norm").get<bool>();
    s.target_offset = j.at("target_offset").get<std::size_t>();
    s.target_width = j.at("target_width").get<std::size_t>();
    s.n_classes = j.at("n_classes").get<std::size_t>();
    return s;
}

inline nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {{"ae_epochs", c.ae_epochs},
            {"gan_epochs", c.gan_epochs},
            {"batch_size", c.batch_size},
            {"ae_learning_rate", c.ae_learning_rate},
            {"learning_rate", c.learning_rate},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"n_critic", c.n_critic},
            {"gp_lambda", c.gp_lambda},
            {"patience", c.patience},
            {"ae_min_improvement", c.ae_min_improvement},
            {"use_classifier", c.use_classifier},
            {"joint", c.joint},
            {"pretrain_epochs", c.pretrain_epochs},
            {"seed", c.seed}};
}

/// Reads the keys present in `j` over `base`; unknown keys are rejected.
inline TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
    const auto known = train_config_to_json(c);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key())) throw Error(ErrorCode::config, "unknown training option '" + it.key() + "'");
    auto get = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("ae_epochs", c.ae_epochs);
    get("gan_epochs", c.gan_epochs);
    get("batch_size", c.batch_size);
    get("ae_learning_rate", c.ae_learning_rate);
    get("learning_rate", c.learning_rate);
    get("beta1", c.beta1);
    get("beta2", c.beta2);
    get("n_critic", c.n_critic);
    get("gp_lambda", c.gp_lambda);
    get("patience", c.patience);
    get("ae_min_improvement", c.ae_min_improvement);
    get("use_classifier", c.use_classifier);
    get("joint", c.joint);
    get("pretrain_epochs", c.pretrain_epochs);
    get("seed", c.seed);
    return c;
}

inline nlohmann::json history_to_json(const TrainingHistory& h) {
    return {{"ae_loss", h.ae_loss}, {"d_loss", h.d_loss}, {"g_loss", h.g_loss}, {"c_loss", h.c_loss},
            {"gp", h.gp}, {"validity_gap", h.validity_gap}, {"cotrain_ae_loss", h.cotrain_ae_loss}};
}

inline TrainingHistory history_from_json(const nlohmann::json& j) {
    TrainingHistory h;
    h.ae_loss = j.at("ae_loss").get<std::vector<double>>();
    h.d_loss = j.at("d_loss").get<std::vector<double>>();
    h.g_loss = j.at("g_loss").get<std::vector<double>>();
    h.c_loss = j.at("c_loss").get<std::vector<double>>();
    h.gp = j.at("gp").get<std::vector<double>>();
    h.validity_gap = j.at("validity_gap").get<std::vector<double>>();
    h.cotrain_ae_loss = j.at("cotrain_ae_loss").get<std::vector<double>>();
    return h;
}

// Tensor blob layout (all integers little-endian):
//   "AEGT" | u32 version (1) | u32 tensor count
//   per tensor: u32 name length | name bytes | u32 ndim (2) | u64 rows | u64 cols
//               | rows*cols float32 values, row-major
namespace blob_detail {

template <typename U>
void put(std::ostream& out, U v) {
    static_assert(std::is_integral_v<U> || std::is_same_v<U, float>);
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, &v, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get(std::istream& in) {
    unsigned char bytes[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw Error(ErrorCode::io, "truncated tensor blob");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    U v;
    std::memcpy(&v, bytes, sizeof(U));
    return v;
}

} // namespace blob_detail

inline void write_tensor_blob(const std::string& path, Mlp<Real>& net) {
    using namespace blob_detail;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
    out.write("AEGT", 4);
    put<std::uint32_t>(out, 1);
    auto state = net.state();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(state.size()));
    for (auto& [name, m] : state) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put<std::uint32_t>(out, 2);
        put<std::uint64_t>(out, static_cast<std::uint64_t>(m->rows()));
        put<std::uint64_t>(out, static_cast<std::uint64_t>(m->cols()));
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) put<float>(out, static_cast<float>((*m)(r, c)));
    }
    if (!out) throw Error(ErrorCode::io, "write failed for '" + path + "'");
}

/// Loads tensors into a network of the expected shape.
inline void read_tensor_blob(const std::string& path, Mlp<Real>& net) {
    using namespace blob_detail;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "AEGT", 4) != 0) throw Error(ErrorCode::io, "'" + path + "' is not a tensor blob");
    if (get<std::uint32_t>(in) != 1) throw Error(ErrorCode::version_mismatch, "unsupported tensor blob version");
    auto state = net.state();
    const auto count = get<std::uint32_t>(in);
    if (count != state.size()) throw Error(ErrorCode::shape_mismatch, "tensor count mismatch in '" + path + "'");
    for (auto& [name, m] : state) {
        std::string stored(get<std::uint32_t>(in), '\0');
        if (!in.read(stored.data(), static_cast<std::streamsize>(stored.size()))) throw Error(ErrorCode::io, "truncated tensor blob");
        if (stored != name) throw Error(ErrorCode::shape_mismatch, "expected tensor '" + name + "', found '" + stored + "'");
        if (get<std::uint32_t>(in) != 2) throw Error(ErrorCode::shape_mismatch, "tensor '" + name + "' is not 2-D");
        const auto rows = get<std::uint64_t>(in), cols = get<std::uint64_t>(in);
        if (rows != static_cast<std::uint64_t>(m->rows()) || cols != static_cast<std::uint64_t>(m->cols()))
            throw Error(ErrorCode::shape_mismatch, "tensor '" + name + "' has the wrong shape");
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = get<float>(in);
    }
}

inline constexpr int checkpoint_version = 1;

/// Writes meta.json plus one tensor blob per network into `dir`.
inline void save_checkpoint(const std::string& dir, SynthModel& m) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create '" + dir + "': " + ec.message());
    nlohmann::json meta{{"version", checkpoint_version},
                        {"net_spec", net_spec_to_json(m.spec)},
                        {"config", train_config_to_json(m.config)},
                        {"seed", m.config.seed},
                        {"encoder", encoder_to_json(*m.encoder)},
                        {"history", history_to_json(m.history)}};
    write_json_file((fs::path(dir) / "meta.json").string(), meta);
    write_tensor_blob((fs::path(dir) / "enc.bin").string(), m.enc);
    write_tensor_blob((fs::path(dir) / "dec.bin").string(), m.dec);
    write_tensor_blob((fs::path(dir) / "gen.bin").string(), m.gen);
    write_tensor_blob((fs::path(dir) / "disc.bin").string(), m.disc);
    write_tensor_blob((fs::path(dir) / "cls.bin").string(), m.cls);
}

inline SynthModel load_checkpoint(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto meta = read_json_file((fs::path(dir) / "meta.json").string());
    SynthModel m;
    try {
        if (meta.at("version").get<int>() != checkpoint_version)
            throw Error(ErrorCode::version_mismatch, "unsupported checkpoint version");
        m.spec = net_spec_from_json(meta.at("net_spec"));
        m.config = train_config_from_json(meta.at("config"));
        m.encoder = std::make_shared<const EncoderState>(encoder_from_json(meta.at("encoder")));
        m.history = history_from_json(meta.at("history"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::version_mismatch, std::string("malformed checkpoint metadata: ") + e.what());
    }
    if (m.encoder->total_width != m.spec.total_width)
        throw Error(ErrorCode::shape_mismatch, "checkpoint encoder width differs from network input");
    const auto slope = static_cast<Real>(m.spec.leaky_slope);
    m.enc = Mlp<Real>(m.spec.encoder_blocks(), slope, 0);
    m.dec = Mlp<Real>(m.spec.decoder_blocks(), slope, 0);
    m.gen = Mlp<Real>(m.spec.generator_blocks(), slope, 0);
    m.disc = Mlp<Real>(m.spec.discriminator_blocks(), slope, 0);
    m.cls = Mlp<Real>(m.spec.classifier_blocks(), slope, 0);
    read_tensor_blob((fs::path(dir) / "enc.bin").string(), m.enc);
    read_tensor_blob((fs::path(dir) / "dec.bin").string(), m.dec);
    read_tensor_blob((fs::path(dir) / "gen.bin").string(), m.gen);
    read_tensor_blob((fs::path(dir) / "disc.bin").string(), m.disc);
    read_tensor_blob((fs::path(dir) / "cls.bin").string(), m.cls);
    return m;
}

} // namespace aegan
