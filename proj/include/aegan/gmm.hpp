#pragma once

#include <aegan/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace aegan {

/// A fitted one-dimensional Gaussian mixture.
struct GmmParams {
    std::vector<double> weights;
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t active_modes() const noexcept { return weights.size(); }

    /// Index of the mode with the largest posterior responsibility for x.
    /// Ties go to the lowest index.
    std::size_t argmax_posterior(double x) const {
        std::size_t best = 0;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const double z = (x - means[k]) / stds[k];
            const double score = std::log(weights[k]) - std::log(stds[k]) - 0.5 * z * z;
            if (score > best_score) {
                best_score = score;
                best = k;
            }
        }
        return best;
    }

    friend bool operator==(const GmmParams&, const GmmParams&) = default;
};

struct EmOptions {
    std::size_t max_modes = 10;
    double prune_weight = 0.005;
    double tolerance = 1e-4; // on the mean per-sample log-likelihood
    int max_iterations = 100;
    // Samples beyond this count are subsampled (seeded) before fitting; 0 disables.
    std::size_t max_fit_samples = 100000;
};

struct EmFit {
    GmmParams params;
    std::vector<double> log_likelihood; // mean per-sample, one entry per EM iteration of the chosen fit
    std::size_t chosen_components = 0;  // mixture size selected before pruning
};

namespace gmm_detail {

constexpr double log_sqrt_2pi = 0.91893853320467274178;

struct Moments {
    double mean = 0.0;
    double std = 0.0;
};

inline Moments moments(std::span<const double> x) {
    Moments m;
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(ss / static_cast<double>(x.size()));
    return m;
}

// Runs EM for a fixed number of components initialised at evenly spaced quantiles.
inline EmFit run_em(std::span<const double> x, std::span<const double> sorted, std::size_t k, double std_floor,
                    const EmOptions& opt) {
    const std::size_t n = x.size();
    const Moments mom = moments(x);
    GmmParams p;
    p.weights.assign(k, 1.0 / static_cast<double>(k));
    p.stds.assign(k, std::max(mom.std, std_floor));
    for (std::size_t j = 0; j < k; ++j) {
        const double q = (static_cast<double>(j) + 0.5) / static_cast<double>(k);
        p.means.push_back(sorted[std::min(n - 1, static_cast<std::size_t>(q * static_cast<double>(n)))]);
    }
    if (k > 1) p.stds.assign(k, std::max(mom.std / static_cast<double>(k), std_floor));

    EmFit fit;
    std::vector<double> resp(n * k);
    std::vector<double> logp(k);
    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        // E step
        double ll = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double top = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < k; ++j) {
                const double z = (x[i] - p.means[j]) / p.stds[j];
                logp[j] = std::log(p.weights[j]) - std::log(p.stds[j]) - log_sqrt_2pi - 0.5 * z * z;
                top = std::max(top, logp[j]);
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < k; ++j) sum += std::exp(logp[j] - top);
            const double lse = top + std::log(sum);
            ll += lse;
            for (std::size_t j = 0; j < k; ++j) resp[i * k + j] = std::exp(logp[j] - lse);
        }
        fit.log_likelihood.push_back(ll / static_cast<double>(n));

        const std::size_t m = fit.log_likelihood.size();
        if (m >= 2 && fit.log_likelihood[m - 1] - fit.log_likelihood[m - 2] < opt.tolerance) break;

        // M step
        for (std::size_t j = 0; j < k; ++j) {
            double nk = 0.0, sx = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                nk += resp[i * k + j];
                sx += resp[i * k + j] * x[i];
            }
            if (nk < 1e-12) {
                p.weights[j] = 1e-300;
                continue;
            }
            const double mu = sx / nk;
            double sv = 0.0;
            for (std::size_t i = 0; i < n; ++i) sv += resp[i * k + j] * (x[i] - mu) * (x[i] - mu);
            p.weights[j] = nk / static_cast<double>(n);
            p.means[j] = mu;
            p.stds[j] = std::max(std::sqrt(sv / nk), std_floor);
        }
    }
    fit.params = std::move(p);
    fit.chosen_components = k;
    return fit;
}

} // namespace gmm_detail

/// Fits a 1-D Gaussian mixture by EM.
///
/// Mixtures of 1..max_modes components are fitted (each initialised at k
/// evenly spaced sample quantiles) and the one with the lowest BIC is kept.
/// The search stops once BIC has failed to improve twice in a row. Components
/// lighter than `prune_weight` are then dropped and weights renormalised;
/// modes come back sorted by mean.
inline EmFit em_fit_1d_trace(std::span<const double> samples, const EmOptions& opt, std::uint64_t seed) {
    if (samples.size() < 2) throw Error(ErrorCode::degenerate_column, "need at least 2 samples to fit a mixture");
    if (opt.max_modes < 1) throw Error(ErrorCode::invalid_argument, "max_modes must be >= 1");
    for (double v : samples)
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "non-finite sample in mixture fit");

    std::vector<double> x(samples.begin(), samples.end());
    if (opt.max_fit_samples && x.size() > opt.max_fit_samples) {
        std::mt19937_64 rng(seed);
        std::shuffle(x.begin(), x.end(), rng);
        x.resize(opt.max_fit_samples);
    }
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back())
        throw Error(ErrorCode::degenerate_column, "all samples are equal; mixture undefined");

    std::size_t n_distinct = 1;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i] != sorted[i - 1]) ++n_distinct;

    const double std_floor = 1e-4 * (gmm_detail::moments(x).std + 1e-12);
    const std::size_t k_max = std::min(opt.max_modes, n_distinct);
    const double n = static_cast<double>(x.size());

    EmFit best;
    double best_bic = std::numeric_limits<double>::infinity();
    int worse_streak = 0;
    for (std::size_t k = 1; k <= k_max; ++k) {
        EmFit fit = gmm_detail::run_em(x, sorted, k, std_floor, opt);
        const double free_params = 3.0 * static_cast<double>(k) - 1.0;
        const double bic = -2.0 * fit.log_likelihood.back() * n + free_params * std::log(n);
        if (bic < best_bic) {
            best_bic = bic;
            best = std::move(fit);
            worse_streak = 0;
        } else if (++worse_streak >= 2) {
            break;
        }
    }

    // prune and renormalise
    GmmParams& p = best.params;
    const std::size_t heaviest =
        static_cast<std::size_t>(std::max_element(p.weights.begin(), p.weights.end()) - p.weights.begin());
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < p.weights.size(); ++j)
        if (p.weights[j] >= opt.prune_weight || j == heaviest) keep.push_back(j);
    std::sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) { return p.means[a] < p.means[b]; });
    GmmParams pruned;
    double total = 0.0;
    for (auto j : keep) total += p.weights[j];
    for (auto j : keep) {
        pruned.weights.push_back(p.weights[j] / total);
        pruned.means.push_back(p.means[j]);
        pruned.stds.push_back(p.stds[j]);
    }
    best.params = std::move(pruned);
    return best;
}

inline GmmParams em_fit_1d(std::span<const double> samples, std::size_t max_modes, std::uint64_t seed) {
    EmOptions opt;
    opt.max_modes = max_modes;
    return em_fit_1d_trace(samples, opt, seed).params;
}

} // namespace aegan
