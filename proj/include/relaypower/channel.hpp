// Subchannel gain realizations for a two-hop relay network: Rayleigh
// sampling and the sorted pairing used by amplify-sort-and-forward.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace relaypower {

// One orthogonal subchannel. Only squared gain magnitudes are kept:
// phases never enter any rate expression.
struct Subchannel {
    double g2 = 0.0;  // |g_i|^2, source -> relay
    double h2 = 0.0;  // |h_i|^2, relay -> destination
};

// Per-subchannel fading variances. sigma_g2[i] is the variance of the
// complex Gaussian coefficient g_i, i.e. the mean of |g_i|^2.
struct ChannelStats {
    std::vector<double> sigma_g2;
    std::vector<double> sigma_h2;

    // The common case: one shared variance pair for all n subchannels.
    static ChannelStats shared(std::size_t n, double sg2, double sh2) {
        ChannelStats s;
        s.sigma_g2.assign(n, sg2);
        s.sigma_h2.assign(n, sh2);
        return s;
    }

    std::size_t size() const { return sigma_g2.size(); }

    bool valid() const {
        if (sigma_g2.empty() || sigma_g2.size() != sigma_h2.size()) return false;
        for (double v : sigma_g2)
            if (!(v > 0.0) || !std::isfinite(v)) return false;
        for (double v : sigma_h2)
            if (!(v > 0.0) || !std::isfinite(v)) return false;
        return true;
    }
};

// A drawn set of subchannels together with the node power budgets.
// Powers are linear and relative to unit noise power.
struct NetworkRealization {
    std::vector<Subchannel> channels;
    double p_s = 0.0;  // source budget P_S
    double p_r = 0.0;  // relay budget P_R

    std::size_t size() const { return channels.size(); }
    double tau() const { return p_r / p_s; }  // P_R / P_S
};

namespace detail {

// splitmix64 finalizer. Used wherever a seed has to be mixed or split
// into independent streams; documented as the project-wide mixing
// function so derived seeds stay stable across versions.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream seed number `index` derived from `master`: the splitmix64
// finalizer applied to master + (index + 1) * golden-ratio increment.
// Injective in the index for a fixed master.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return mix64(master + 0x9e3779b97f4a7c15ULL * (index + 1));
}

// Uniform draw in (0, 1] with 53-bit resolution. Built directly from
// the raw engine output so realizations do not depend on library
// distribution internals.
inline double unit_open(std::mt19937_64& gen) {
    return (static_cast<double>(gen() >> 11) + 1.0) * 0x1.0p-53;
}

// |X|^2 for X ~ CN(0, sigma2) is exponential with mean sigma2.
inline double exponential_gain(std::mt19937_64& gen, double sigma2) {
    return -sigma2 * std::log(unit_open(gen));
}

}  // namespace detail

// Draws n independent subchannels; g2 and h2 are exponential with
// means sigma_g2[i] and sigma_h2[i]. Same seed, same realization.
inline NetworkRealization sample_network(const ChannelStats& stats, double p_s,
                                         double p_r, std::uint64_t seed) {
    if (!stats.valid()) throw std::invalid_argument("sample_network: bad ChannelStats");
    if (!(p_s > 0.0) || !(p_r > 0.0))
        throw std::invalid_argument("sample_network: power budgets must be positive");
    std::mt19937_64 gen(seed);
    NetworkRealization net;
    net.p_s = p_s;
    net.p_r = p_r;
    net.channels.resize(stats.size());
    for (std::size_t i = 0; i < stats.size(); ++i) {
        net.channels[i].g2 = detail::exponential_gain(gen, stats.sigma_g2[i]);
        net.channels[i].h2 = detail::exponential_gain(gen, stats.sigma_h2[i]);
    }
    return net;
}

// Pairs the i-th largest g2 with the i-th largest h2: both gain lists
// are sorted in decreasing order independently and re-zipped. Stable,
// so ties keep their original relative order. Budgets pass through.
inline NetworkRealization sort_for_asf(const NetworkRealization& net) {
    std::vector<double> gs(net.size()), hs(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
        gs[i] = net.channels[i].g2;
        hs[i] = net.channels[i].h2;
    }
    std::stable_sort(gs.begin(), gs.end(), std::greater<>());
    std::stable_sort(hs.begin(), hs.end(), std::greater<>());
    NetworkRealization out;
    out.p_s = net.p_s;
    out.p_r = net.p_r;
    out.channels.resize(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) out.channels[i] = {gs[i], hs[i]};
    return out;
}

}  // namespace relaypower
