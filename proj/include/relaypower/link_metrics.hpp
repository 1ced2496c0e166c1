// Closed-form SNR and rate expressions for one amplify-and-forward
// subchannel, plus the alpha-only reformulation used by the global
// power allocator. All rates are log2, bits/s/Hz, unit noise power.

#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "relaypower/channel.hpp"

namespace relaypower {

// Transmit powers on one subchannel pair (SR_i, RD_i).
struct LinkPowers {
    double ps_i = 0.0;
    double pr_i = 0.0;
};

// End-to-end AF SNR of one subchannel:
//   rho_i = ps*pr*g2*h2 / (ps*g2 + pr*h2 + 1).
inline double af_link_snr(const LinkPowers& p, const Subchannel& ch) {
    if (p.ps_i <= 0.0 || p.pr_i <= 0.0) return 0.0;
    const double num = p.ps_i * p.pr_i * ch.g2 * ch.h2;
    const double den = p.ps_i * ch.g2 + p.pr_i * ch.h2 + 1.0;
    return num / den;
}

inline double link_capacity(double rho) {
    return std::log1p(rho) / std::numbers::ln2;
}

// A(alpha) = sqrt(1 + 4*alpha*P_S*h2*(alpha*P_S*g2 + 1)).
inline double a_function(double alpha, double p_s, const Subchannel& ch) {
    const double u = alpha * p_s * ch.g2;
    return std::sqrt(1.0 + 4.0 * alpha * p_s * ch.h2 * (u + 1.0));
}

namespace detail {

// A(alpha) - 1 without cancellation at small alpha:
//   A - 1 = 4*alpha*P_S*h2*(u + 1) / (A + 1).
inline double a_function_minus_one(double alpha, double p_s, const Subchannel& ch) {
    const double u = alpha * p_s * ch.g2;
    const double q = 4.0 * alpha * p_s * ch.h2 * (u + 1.0);
    return q / (1.0 + std::sqrt(1.0 + q));
}

inline double beta_from_alpha_ch(double alpha, double p_s, double p_r,
                                 const Subchannel& ch) {
    if (alpha <= 0.0) return 0.0;
    if (ch.h2 <= 0.0)
        throw std::domain_error("beta_from_alpha: h2 = 0 admits no finite relay power");
    return a_function_minus_one(alpha, p_s, ch) / (2.0 * p_r * ch.h2);
}

// Per-link rate of the alpha-only reformulation,
//   C_i(alpha) = log2(1 + u*(A-1)/2 / (u + (1+A)/2)),  u = alpha*P_S*g2.
// Identical to link_capacity(af_link_snr(.)) with the relay share set
// by beta_from_alpha.
inline double link_rate_alpha(double alpha, double p_s, const Subchannel& ch) {
    if (alpha <= 0.0) return 0.0;
    const double u = alpha * p_s * ch.g2;
    const double am1 = a_function_minus_one(alpha, p_s, ch);
    const double num = u * am1;
    const double den = 2.0 * u + 2.0 + am1;  // 2u + 1 + A
    return std::log1p(num / den) / std::numbers::ln2;
}

// d/d(alpha) of link_rate_alpha. The allocator's inner bisections run
// on this expression, and it backs the analytic gradient contract.
inline double link_rate_alpha_deriv(double alpha, double p_s, const Subchannel& ch) {
    const double u = alpha * p_s * ch.g2;
    const double up = p_s * ch.g2;
    const double s4 = 4.0 * p_s * ch.h2;
    const double a = std::sqrt(1.0 + s4 * alpha * (u + 1.0));
    const double ap = s4 * (2.0 * u + 1.0) / (2.0 * a);
    const double am1 = s4 * alpha * (u + 1.0) / (1.0 + a);
    const double num = u * am1;
    const double den = 2.0 * u + 1.0 + a;
    const double nump = up * am1 + u * ap;
    const double denp = 2.0 * up + ap;
    const double rho = num / den;
    const double rhop = (nump * den - num * denp) / (den * den);
    return rhop / ((1.0 + rho) * std::numbers::ln2);
}

// d/d(alpha) of beta_from_alpha; simplifies to (2u + 1) / (tau * A).
inline double beta_from_alpha_deriv(double alpha, double p_s, double p_r,
                                    const Subchannel& ch) {
    const double u = alpha * p_s * ch.g2;
    const double a = a_function(alpha, p_s, ch);
    return (2.0 * u + 1.0) * p_s / (p_r * a);
}

}  // namespace detail

// Minimum relay fraction that realizes the Theorem-style power symmetry
// for a given source fraction: beta = (A(alpha) - 1) / (2 P_R h2).
inline double beta_from_alpha(double alpha, const NetworkRealization& net,
                              std::size_t i) {
    return detail::beta_from_alpha_ch(alpha, net.p_s, net.p_r, net.channels.at(i));
}

// Network sum capacity as a function of the source fractions only.
inline double sum_capacity_alpha(std::span<const double> alphas,
                                 const NetworkRealization& net) {
    if (alphas.size() != net.size())
        throw std::invalid_argument("sum_capacity_alpha: length mismatch");
    double c = 0.0;
    for (std::size_t i = 0; i < alphas.size(); ++i)
        c += detail::link_rate_alpha(alphas[i], net.p_s, net.channels[i]);
    return c;
}

// Analytic gradient of sum_capacity_alpha (diagonal: the objective is
// separable across links).
inline std::vector<double> sum_capacity_alpha_gradient(std::span<const double> alphas,
                                                       const NetworkRealization& net) {
    if (alphas.size() != net.size())
        throw std::invalid_argument("sum_capacity_alpha_gradient: length mismatch");
    std::vector<double> grad(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i)
        grad[i] = detail::link_rate_alpha_deriv(alphas[i], net.p_s, net.channels[i]);
    return grad;
}

// Achievable rate of one link when the source side is summarized by its
// SNR rho_sr and the relay side spends the fraction beta:
//   C = log2(1 + rho_sr*x / (rho_sr + x + 1)),  x = beta*P_R*h2.
inline double relay_side_capacity(double rho_sr, double beta, double p_r, double h2) {
    if (beta <= 0.0 || rho_sr <= 0.0) return 0.0;
    const double x = beta * p_r * h2;
    return std::log1p(rho_sr * x / (rho_sr + x + 1.0)) / std::numbers::ln2;
}

}  // namespace relaypower
