// High-SNR closed form of the global allocation problem. As the
// budgets grow the per-link SNR tends to alpha_i * phi_i * P_S with
// phi_i = |h||g| / (1 + |h|/|g|), the objective becomes a sum of logs,
// and the optimal fractions take a water-filling-like inverse form in
// two multipliers:
//   alpha_i* = max{0, (lambda1 + (lambda2/tau) * |g_i|/|h_i|)^-1}.
// More source power goes to the weaker source-relay subchannel when
// the relay budget binds, the inverse of classical water-filling.

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "relaypower/channel.hpp"
#include "relaypower/link_metrics.hpp"

namespace relaypower {

struct AsymptoticSolution {
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<double> phi;  // per-link phi_i
    double lambda1 = 0.0;     // multiplier of sum(alpha) <= 1
    double lambda2 = 0.0;     // multiplier of (1/tau) sum(alpha |g|/|h|) <= 1
};

inline double phi_factor(const Subchannel& ch) {
    if (!(ch.g2 > 0.0) || !(ch.h2 > 0.0))
        throw std::domain_error("phi_factor: gains must be positive");
    const double g = std::sqrt(ch.g2), h = std::sqrt(ch.h2);
    return h * g / (1.0 + h / g);
}

// Limit of the end-to-end SNR for large budgets: alpha * phi_i * P_S.
inline double asymptotic_link_snr(double alpha, double p_s, const Subchannel& ch) {
    return alpha * phi_factor(ch) * p_s;
}

inline double asymptotic_beta_closed_form(double h_over_g, double tau, double lp1,
                                          double lp2) {
    const double d = lp1 + lp2 * tau * h_over_g;
    if (d <= 0.0) return 0.0;
    return std::max(0.0, 1.0 / d);
}

// Solves the high-SNR problem: log-sum objective under the alpha budget
// and the asymptotic beta budget (1/tau) sum alpha_i |g_i|/|h_i| <= 1.
// Both single-constraint cases have closed forms; the both-active case
// is a nested root find on the two multipliers. Betas follow from the
// power symmetry alpha_i = tau * beta_i * |h_i|/|g_i|.
inline AsymptoticSolution solve_asymptotic(const NetworkRealization& net) {
    const std::size_t n = net.size();
    if (n == 0) throw std::invalid_argument("solve_asymptotic: empty realization");
    const double tau = net.tau();

    std::vector<double> w(n);  // |g_i| / |h_i|
    AsymptoticSolution sol;
    sol.phi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        sol.phi[i] = phi_factor(net.channels[i]);  // rejects zero gains
        w[i] = std::sqrt(net.channels[i].g2 / net.channels[i].h2);
    }

    const double nn = static_cast<double>(n);
    auto alphas_at = [&](double l1, double l2) {
        std::vector<double> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = 1.0 / (l1 + (l2 / tau) * w[i]);
        return a;
    };
    auto sum_a = [&](double l1, double l2) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += 1.0 / (l1 + (l2 / tau) * w[i]);
        return s;
    };
    auto sum_b = [&](double l1, double l2) {  // (1/tau) sum alpha w = sum beta
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += (w[i] / tau) / (l1 + (l2 / tau) * w[i]);
        return s;
    };

    double l1 = 0.0, l2 = 0.0;
    // alpha budget active only: uniform split
    if (sum_b(nn, 0.0) <= 1.0) {
        l1 = nn;
    } else if (sum_a(0.0, nn) <= 1.0) {
        // beta budget active only: alpha_i proportional to tau / w_i
        l2 = nn;
    } else {
        // both active: outer root find on l2, inner on l1 keeping sum_a = 1
        auto inner_l1 = [&](double lam2) {
            if (sum_a(0.0, lam2) <= 1.0) return 0.0;
            double lo = 0.0, hi = nn;  // sum_a(n, l2) <= n/n = 1
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
                const double mid = 0.5 * (lo + hi);
                (sum_a(mid, lam2) > 1.0 ? lo : hi) = mid;
            }
            return hi;
        };
        double lo = 0.0, hi = nn;  // sum_b <= n / lam2, so lam2 = n is feasible
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            (sum_b(inner_l1(mid), mid) > 1.0 ? lo : hi) = mid;
        }
        l2 = hi;
        l1 = inner_l1(l2);
    }

    sol.lambda1 = l1;
    sol.lambda2 = l2;
    sol.alphas = alphas_at(l1, l2);
    sol.betas.resize(n);
    for (std::size_t i = 0; i < n; ++i) sol.betas[i] = sol.alphas[i] * w[i] / tau;
    return sol;
}

// Objective value the asymptotic problem assigns to a solution,
// including the additive constant N log2(P/(1+tau)) = N log2(P_S) so
// it is directly comparable with finite-SNR sum rates.
inline double asymptotic_objective(const AsymptoticSolution& sol,
                                   const NetworkRealization& net) {
    double c = 0.0;
    for (std::size_t i = 0; i < net.size(); ++i)
        c += std::log2(sol.alphas[i] * sol.phi[i] * net.p_s);
    return c;
}

// Inverse water-filling witness: among links with equal |h|^2, the one
// with the smaller |g|^2 must receive at least as much source power.
// Vacuous (true) when the beta budget multiplier is zero.
inline bool check_inverse_waterfilling(const AsymptoticSolution& sol,
                                       const NetworkRealization& net) {
    if (!(sol.lambda2 > 0.0)) return true;
    for (std::size_t i = 0; i < net.size(); ++i)
        for (std::size_t j = 0; j < net.size(); ++j) {
            if (net.channels[i].h2 != net.channels[j].h2) continue;
            if (net.channels[i].g2 < net.channels[j].g2 &&
                sol.alphas[i] < sol.alphas[j])
                return false;
        }
    return true;
}

}  // namespace relaypower
