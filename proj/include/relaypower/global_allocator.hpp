// Case I / Case III power allocation: maximize the network sum capacity
// over the source fractions alpha (relay fractions follow from the
// optimality symmetry), subject to the two budget constraints
//   sum alpha_i <= 1   and   sum beta_i(alpha_i) <= 1.
//
// Core scheme: dual search on the two multipliers with a per-link
// scalar maximization of the Lagrangian. The per-link rate is convex in
// alpha near zero and concave beyond, which gives links an on/off
// threshold; when that makes the dual sums jump across a budget target
// (duality gap), a completion layer recovers the optimum: on-sets are
// enumerated with the off choice removed, and a single hump-region link
// is handled by direct substitution of its fraction with the remaining
// links re-solved on the leftover budgets. A converged dual point with
// tight budgets is already certified optimal by weak duality, so the
// completion only runs when a jump is detected.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "relaypower/channel.hpp"
#include "relaypower/link_metrics.hpp"

namespace relaypower {

struct Allocation {
    std::vector<double> alphas;
    std::vector<double> betas;
    std::vector<double> per_link_rates;
    double sum_rate = 0.0;
    // multipliers of the alpha- and beta-budget constraints; zero means
    // the corresponding constraint was slack at the optimum
    double lambda1 = 0.0;
    double lambda2 = 0.0;
};

struct SolverConfig {
    double tol = 1e-8;                // dual feasibility gap
    int max_iters = 200;              // multiplier iterations per root find
    double multiplier_bracket = 1.0;  // initial dual search bracket
};

struct SolverError : std::runtime_error {
    Allocation best;
    SolverError(const std::string& msg, Allocation b)
        : std::runtime_error(msg), best(std::move(b)) {}
};

namespace detail {

constexpr double kBudgetTol = 1e-10;  // budget - sum accepted as tight
constexpr double kSlackTol = 1e-9;    // complementary-slackness check

inline double lagrangian_deriv(double a, double lam1, double lam2, double ps,
                               double pr, const Subchannel& ch) {
    return link_rate_alpha_deriv(a, ps, ch) - lam1 -
           lam2 * beta_from_alpha_deriv(a, ps, pr, ch);
}

inline double lagrangian_value(double a, double lam1, double lam2, double ps,
                               double pr, const Subchannel& ch) {
    return link_rate_alpha(a, ps, ch) - lam1 * a -
           lam2 * beta_from_alpha_ch(a, ps, pr, ch);
}

// Illinois-weighted regula falsi for a locally decreasing f with a
// maintained sign bracket f(lo) > 0 >= f(hi). Keeps the feasible (hi)
// side; stops once -f(hi) <= ftol or the bracket has collapsed, which
// happens when f jumps across zero.
template <typename F>
inline std::pair<double, double> falsi_hi(F&& f, double lo, double flo, double hi,
                                          double fhi, double ftol, int iters) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    double wlo = flo, whi = fhi;
    int last = 0;
    for (int it = 0; it < iters; ++it) {
        if (-fhi <= ftol) break;
        if (hi - lo <= 8.0 * eps * std::max(1.0, hi)) break;
        double x = (whi != wlo) ? (lo * whi - hi * wlo) / (whi - wlo)
                                : 0.5 * (lo + hi);
        if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
        if (!(x > lo && x < hi)) break;  // bracket collapsed to adjacent values
        const double fx = f(x);
        if (fx > 0.0) {
            lo = x;
            flo = wlo = fx;
            if (last > 0) whi *= 0.5;
            last = 1;
        } else {
            hi = x;
            fhi = whi = fx;
            if (last < 0) wlo *= 0.5;
            last = -1;
        }
    }
    return {hi, fhi};
}

// Reduced problem over a subset of links with scaled budgets.
struct ReducedProblem {
    const NetworkRealization* net = nullptr;
    std::vector<std::size_t> links;  // original channel indices
    std::vector<double> hints;       // cached per-link roots
    std::vector<char> on;            // pinned on-set (subset candidates)
    bool pinned = false;
};

struct DualPoint {
    std::vector<double> alpha;  // aligned with ReducedProblem::links
    double sum_a = 0.0;
    double sum_b = 0.0;
};

// Largest maximizer of the per-link Lagrangian on [0, 1]. The
// derivative starts negative (for positive multipliers), can rise above
// zero once, and ends decreasing; the descending zero-crossing is the
// interior candidate. In pinned mode the crossing is returned even when
// staying at zero would score better.
inline double link_argmax(double lam1, double lam2, double ps, double pr,
                          const Subchannel& ch, double& hint, bool pinned) {
    auto deriv = [&](double a) { return lagrangian_deriv(a, lam1, lam2, ps, pr, ch); };

    double pos = -1.0, dpos = 0.0;
    if (hint > 0.0 && hint <= 1.0) {
        const double dh = deriv(hint);
        if (dh > 0.0) {
            pos = hint;
            dpos = dh;
        }
    }
    if (pos < 0.0) {
        for (double a = 1.0; a > 1e-12; a *= 0.45) {
            const double da = deriv(a);
            if (da > 0.0) {
                pos = a;
                dpos = da;
                break;
            }
        }
    }
    if (pos < 0.0) {
        hint = 0.0;
        return 0.0;
    }
    double lo = pos, flo = dpos;
    double hi = 1.0, fhi = 0.0;
    if (pos >= 1.0 || (fhi = deriv(1.0)) > 0.0) {
        hint = 1.0;
        return 1.0;
    }
    for (double x = std::min(1.0, pos * 1.3); x < hi; x *= 1.3) {
        const double fx = deriv(x);
        if (fx > 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
            break;
        }
    }
    const auto [root, fr] = falsi_hi(deriv, lo, flo, hi, fhi, 0.0, 200);
    (void)fr;
    if (!pinned && lagrangian_value(root, lam1, lam2, ps, pr, ch) <= 0.0) {
        hint = 0.0;
        return 0.0;
    }
    hint = root;
    return root;
}

inline DualPoint eval_dual_point(ReducedProblem& rp, double lam1, double lam2) {
    const auto& net = *rp.net;
    DualPoint d;
    d.alpha.assign(rp.links.size(), 0.0);
    for (std::size_t k = 0; k < rp.links.size(); ++k) {
        if (rp.pinned && !rp.on[k]) continue;
        const Subchannel& ch = net.channels[rp.links[k]];
        const double a =
            link_argmax(lam1, lam2, net.p_s, net.p_r, ch, rp.hints[k], rp.pinned);
        d.alpha[k] = a;
        d.sum_a += a;
        if (a > 0.0) d.sum_b += beta_from_alpha_ch(a, net.p_s, net.p_r, ch);
    }
    return d;
}

// Finds lam1 >= 0 putting sum(alpha) at budget_a from the feasible
// side; lam1 = 0 when that budget is already slack. `warm` seeds the
// bracket from the caller's previous outer iterate.
inline std::pair<double, DualPoint> solve_lambda1(ReducedProblem& rp, double lam2,
                                                  double budget_a, double warm,
                                                  const SolverConfig& cfg) {
    DualPoint d0 = eval_dual_point(rp, 0.0, lam2);
    if (d0.sum_a <= budget_a) return {0.0, std::move(d0)};

    double hi = warm > 0.0 ? warm : cfg.multiplier_bracket;
    double lo = 0.0, flo = d0.sum_a - budget_a;
    DualPoint dhi = eval_dual_point(rp, hi, lam2);
    while (dhi.sum_a > budget_a) {
        lo = hi;
        flo = dhi.sum_a - budget_a;
        hi *= 4.0;
        if (hi > 1e300)
            throw std::runtime_error("solve_case1: alpha multiplier bracket exhausted");
        dhi = eval_dual_point(rp, hi, lam2);
    }
    DualPoint dbest = std::move(dhi);
    double xbest = hi;
    auto f = [&](double x) {
        DualPoint d = eval_dual_point(rp, x, lam2);
        const double v = d.sum_a - budget_a;
        if (v <= 0.0 && v > dbest.sum_a - budget_a) {
            dbest = std::move(d);
            xbest = x;
        }
        return v;
    };
    falsi_hi(f, lo, flo, hi, dbest.sum_a - budget_a, kBudgetTol, cfg.max_iters);
    return {xbest, std::move(dbest)};
}

inline bool tight_enough(double lam, double sum, double budget) {
    return lam == 0.0 || sum >= budget - kSlackTol;
}

// One full KKT case sweep at fixed pinning: both multipliers zero, one
// budget active, the other active, both active. Returns the feasible-
// side multipliers and dual point; tightness is judged by the caller.
inline std::tuple<double, double, DualPoint> dual_solve(ReducedProblem& rp,
                                                        const SolverConfig& cfg,
                                                        double budget_a,
                                                        double budget_b) {
    DualPoint d = eval_dual_point(rp, 0.0, 0.0);
    if (d.sum_a <= budget_a && d.sum_b <= budget_b) return {0.0, 0.0, std::move(d)};

    // alpha budget active only
    double l1B = 0.0;
    if (d.sum_a > budget_a) {
        auto [l1, dB] = solve_lambda1(rp, 0.0, budget_a, 0.0, cfg);
        l1B = l1;
        if (dB.sum_b <= budget_b) return {l1, 0.0, std::move(dB)};
    }

    // beta budget active only
    {
        double lo = 0.0, flo = d.sum_b - budget_b;
        double hi = cfg.multiplier_bracket;
        DualPoint dhi = eval_dual_point(rp, 0.0, hi);
        while (dhi.sum_b > budget_b) {
            lo = hi;
            flo = dhi.sum_b - budget_b;
            hi *= 4.0;
            if (hi > 1e300)
                throw std::runtime_error("solve_case1: beta multiplier bracket exhausted");
            dhi = eval_dual_point(rp, 0.0, hi);
        }
        DualPoint dbest = std::move(dhi);
        double xbest = hi;
        auto f = [&](double x) {
            DualPoint dm = eval_dual_point(rp, 0.0, x);
            const double v = dm.sum_b - budget_b;
            if (v <= 0.0 && v > dbest.sum_b - budget_b) {
                dbest = std::move(dm);
                xbest = x;
            }
            return v;
        };
        falsi_hi(f, lo, flo, hi, dbest.sum_b - budget_b, kBudgetTol, cfg.max_iters);
        if (dbest.sum_a <= budget_a) return {0.0, xbest, std::move(dbest)};
    }

    // both budgets active: outer root find on lam2, inner on lam1
    double warm = l1B;
    double l2best = 0.0, l1best = 0.0;
    DualPoint dbest;
    bool have = false;
    auto g = [&](double lam2) {
        auto [w, dp] = solve_lambda1(rp, lam2, budget_a, warm, cfg);
        if (w > 0.0) warm = w;
        const double v = dp.sum_b - budget_b;
        if (v <= 0.0 && (!have || v > dbest.sum_b - budget_b)) {
            dbest = std::move(dp);
            l2best = lam2;
            l1best = w;
            have = true;
        }
        return v;
    };
    double lo = 0.0;
    double flo = 1.0;  // sum_b > budget_b at lam2 = 0 since the one-active cases failed
    double hi = cfg.multiplier_bracket;
    double fhi = g(hi);
    while (fhi > 0.0) {
        lo = hi;
        flo = fhi;
        hi *= 4.0;
        if (hi > 1e300)
            throw std::runtime_error("solve_case1: beta multiplier bracket exhausted");
        fhi = g(hi);
    }
    falsi_hi(g, lo, flo, hi, fhi, kBudgetTol, cfg.max_iters);
    if (!have)
        throw std::runtime_error("solve_case1: dual search found no feasible point");
    return {l1best, l2best, std::move(dbest)};
}

// Result of one reduced solve; alpha is aligned with the link list.
struct CResult {
    std::vector<double> alpha;
    double sum_a = 0.0, sum_b = 0.0;
    double l1 = 0.0, l2 = 0.0;
    double obj = 0.0;
    bool tight = false;
};

inline CResult make_result(const NetworkRealization& net,
                           const std::vector<std::size_t>& links, const DualPoint& d,
                           double l1, double l2, double ba, double bb) {
    CResult r;
    r.alpha = d.alpha;
    r.sum_a = d.sum_a;
    r.sum_b = d.sum_b;
    r.l1 = l1;
    r.l2 = l2;
    for (std::size_t k = 0; k < links.size(); ++k)
        r.obj += link_rate_alpha(d.alpha[k], net.p_s, net.channels[links[k]]);
    r.tight = tight_enough(l1, d.sum_a, ba) && tight_enough(l2, d.sum_b, bb);
    return r;
}

// Largest alpha with beta(alpha) <= bb on one link (quadratic in alpha
// through A^2); used to bound the hump-link substitution.
inline double alpha_at_beta(double bb, double ps, double pr, const Subchannel& ch) {
    const double m = 1.0 + 2.0 * pr * ch.h2 * bb;  // target A value
    const double q = m * m - 1.0;
    const double disc = ch.h2 * ch.h2 + ch.g2 * ch.h2 * q;
    return (std::sqrt(disc) - ch.h2) / (2.0 * ps * ch.g2 * ch.h2);
}

inline CResult constrained_solve(const NetworkRealization& net,
                                 const std::vector<std::size_t>& links, double ba,
                                 double bb, const SolverConfig& cfg, int depth);

// Candidate with link j frozen at fraction x and everything else solved
// on the leftover budgets.
inline CResult hump_candidate(const NetworkRealization& net,
                              const std::vector<std::size_t>& links, std::size_t j,
                              double x, double ba, double bb, const SolverConfig& cfg,
                              int depth) {
    const Subchannel& ch = net.channels[links[j]];
    const double bj = beta_from_alpha_ch(x, net.p_s, net.p_r, ch);
    std::vector<std::size_t> rest;
    for (std::size_t k = 0; k < links.size(); ++k)
        if (k != j) rest.push_back(links[k]);
    CResult inner = constrained_solve(net, rest, ba - x, bb - bj, cfg, depth);
    CResult r;
    r.alpha.assign(links.size(), 0.0);
    r.alpha[j] = x;
    for (std::size_t k = 0, t = 0; k < links.size(); ++k)
        if (k != j) r.alpha[k] = inner.alpha[t++];
    r.sum_a = inner.sum_a + x;
    r.sum_b = inner.sum_b + bj;
    r.obj = inner.obj + link_rate_alpha(x, net.p_s, ch);
    if (!rest.empty()) {
        r.l1 = inner.l1;
        r.l2 = inner.l2;
        r.tight = inner.tight;
    } else {
        // single-link problem: the binding budget supplies the multiplier
        const double cb = link_rate_alpha_deriv(x, net.p_s, ch);
        if (bb - bj <= ba - x) {
            r.l2 = cb / beta_from_alpha_deriv(x, net.p_s, net.p_r, ch);
        } else {
            r.l1 = cb;
        }
        r.tight = true;
    }
    return r;
}

// Solves max sum C_i(alpha_i) over the given links subject to
// sum alpha <= ba and sum beta <= bb. `depth` bounds how many nested
// completion layers may run.
inline CResult constrained_solve(const NetworkRealization& net,
                                 const std::vector<std::size_t>& links, double ba,
                                 double bb, const SolverConfig& cfg, int depth) {
    CResult zero;
    zero.alpha.assign(links.size(), 0.0);
    zero.tight = true;
    if (links.empty() || ba <= 1e-14 || bb <= 1e-14) return zero;

    ReducedProblem rp;
    rp.net = &net;
    rp.links = links;
    rp.hints.assign(links.size(), 0.0);

    auto [l1, l2, d] = dual_solve(rp, cfg, ba, bb);
    CResult best = make_result(net, links, d, l1, l2, ba, bb);
    if (best.tight) return best;

    const std::size_t m = links.size();
    auto consider = [&](CResult&& c) {
        if (c.sum_a > ba + 1e-12 || c.sum_b > bb + 1e-12) return;
        if (c.obj > best.obj || (c.tight && !best.tight && c.obj >= best.obj - 1e-9))
            best = std::move(c);
    };

    // re-tighten with the incumbent on-set pinned
    {
        ReducedProblem p = rp;
        p.pinned = true;
        p.on.assign(m, 0);
        for (std::size_t k = 0; k < m; ++k) p.on[k] = d.alpha[k] > 0.0;
        std::fill(p.hints.begin(), p.hints.end(), 0.0);
        auto [pl1, pl2, pd] = dual_solve(p, cfg, ba, bb);
        consider(make_result(net, links, pd, pl1, pl2, ba, bb));
    }

    // nested completions are bounded: on-sets at depth >= 1 for small
    // problems, the hump sweep only at the top level
    const bool enum_sets = (depth >= 2 && m <= 8) || (depth == 1 && m <= 5);
    const bool hump_sweep = depth >= 2 && m <= 8;
    if (!enum_sets && !hump_sweep) return best;

    if (enum_sets) {
        // every on-set, links forced onto the descending branch
        for (std::uint32_t mask = 1; mask < (1u << m); ++mask) {
            ReducedProblem p = rp;
            p.pinned = true;
            p.on.assign(m, 0);
            for (std::size_t k = 0; k < m; ++k) p.on[k] = (mask >> k) & 1u;
            std::fill(p.hints.begin(), p.hints.end(), 0.0);
            auto [pl1, pl2, pd] = dual_solve(p, cfg, ba, bb);
            consider(make_result(net, links, pd, pl1, pl2, ba, bb));
        }
    }

    if (hump_sweep) {
        // Choose which links to sweep: the flipping link at a dual jump
        // has Lagrangian value ~0 at its interior candidate, so rank by
        // |phi(r)| at the stalled multipliers; branch-dead links score
        // highest since pinning cannot recover them at all.
        std::vector<std::size_t> sweep;
        if (m <= 3) {
            for (std::size_t k = 0; k < m; ++k) sweep.push_back(k);
        } else {
            std::vector<std::pair<double, std::size_t>> score(m);
            for (std::size_t k = 0; k < m; ++k) {
                const Subchannel& ch = net.channels[links[k]];
                double hint = 0.0;
                const double r = link_argmax(best.l1, best.l2, net.p_s, net.p_r, ch,
                                             hint, true);
                score[k] = {r > 0.0 ? std::abs(lagrangian_value(
                                          r, best.l1, best.l2, net.p_s, net.p_r, ch))
                                    : 0.0,
                            k};
            }
            std::sort(score.begin(), score.end());
            for (std::size_t k = 0; k < std::min<std::size_t>(4, m); ++k)
                sweep.push_back(score[k].second);
        }

        for (std::size_t j : sweep) {
            const Subchannel& ch = net.channels[links[j]];
            const double xmax =
                std::min({1.0, ba, alpha_at_beta(bb, net.p_s, net.p_r, ch)});
            if (xmax <= 0.0) continue;
            // the scan runs with cheap depth-0 inner solves; only the
            // final candidates get the full nested treatment
            auto value_at = [&](double x, int d) {
                return hump_candidate(net, links, j, x, ba, bb, cfg, d);
            };
            const int kGrid = 14;
            std::vector<double> xs{xmax / 256.0, xmax / 64.0};
            for (int k = 1; k <= kGrid; ++k) xs.push_back(xmax * k / kGrid);
            double xb = xmax, fb = -1.0;
            for (double x : xs) {
                const CResult c = value_at(x, 0);
                if (c.obj > fb) {
                    fb = c.obj;
                    xb = x;
                }
            }
            // golden-section polish around the best grid point
            double lo = std::max(0.0, xb - xmax / kGrid);
            double hi = std::min(xmax, xb + xmax / kGrid);
            const double gr = 0.61803398874989484820;
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            double f1 = value_at(x1, 0).obj, f2 = value_at(x2, 0).obj;
            for (int it = 0; it < 20; ++it) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = value_at(x2, 0).obj;
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = value_at(x1, 0).obj;
                }
            }
            consider(value_at(f1 > f2 ? x1 : x2, depth - 1));
            consider(value_at(xb, depth - 1));
            consider(value_at(xmax, depth - 1));
        }
    }
    return best;
}

inline Allocation package(const NetworkRealization& net,
                          const std::vector<std::size_t>& links, const CResult& r) {
    Allocation out;
    out.alphas.assign(net.size(), 0.0);
    out.betas.assign(net.size(), 0.0);
    out.per_link_rates.assign(net.size(), 0.0);
    out.lambda1 = r.l1;
    out.lambda2 = r.l2;
    for (std::size_t k = 0; k < links.size(); ++k) {
        const double a = r.alpha[k];
        if (a <= 0.0) continue;
        const std::size_t i = links[k];
        out.alphas[i] = a;
        out.betas[i] = beta_from_alpha_ch(a, net.p_s, net.p_r, net.channels[i]);
    }
    for (std::size_t i = 0; i < net.size(); ++i) {
        const LinkPowers p{out.alphas[i] * net.p_s, out.betas[i] * net.p_r};
        out.per_link_rates[i] = link_capacity(af_link_snr(p, net.channels[i]));
        out.sum_rate += out.per_link_rates[i];
    }
    return out;
}

}  // namespace detail

// Maximizes the sum capacity over both power budgets with global CSI
// (Case I). Links with a vanished hop gain are excluded up front and
// receive alpha = beta = 0.
inline Allocation solve_case1(const NetworkRealization& net,
                              const SolverConfig& cfg = {}) {
    if (net.channels.empty())
        throw std::invalid_argument("solve_case1: empty realization");
    if (!(net.p_s > 0.0) || !(net.p_r > 0.0))
        throw std::invalid_argument("solve_case1: power budgets must be positive");
    if (!(cfg.tol > 0.0) || cfg.max_iters < 1)
        throw std::invalid_argument("solve_case1: bad solver config");

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < net.size(); ++i) {
        const auto& ch = net.channels[i];
        if (!std::isfinite(ch.g2) || !std::isfinite(ch.h2) || ch.g2 < 0.0 || ch.h2 < 0.0)
            throw std::invalid_argument("solve_case1: invalid channel gain");
        if (ch.g2 > 0.0 && ch.h2 > 0.0) active.push_back(i);
    }

    try {
        const detail::CResult r =
            detail::constrained_solve(net, active, 1.0, 1.0, cfg, 2);
        return detail::package(net, active, r);
    } catch (const std::runtime_error& e) {
        Allocation best;
        best.alphas.assign(net.size(), 0.0);
        best.betas.assign(net.size(), 0.0);
        best.per_link_rates.assign(net.size(), 0.0);
        throw SolverError(e.what(), std::move(best));
    }
}

// Case III: identical problem on the sorted pairing; the returned
// allocation is indexed over the sorted subchannels.
inline Allocation solve_case3(const NetworkRealization& net,
                              const SolverConfig& cfg = {}) {
    return solve_case1(sort_for_asf(net), cfg);
}

// Per-link absolute residual of the optimality symmetry
//   (beta_i / alpha_i) * tau = (alpha_i P_S g2 + 1) / (beta_i P_R h2 + 1);
// zero is reported for links carrying no source power.
inline std::vector<double> verify_kkt(const NetworkRealization& net,
                                      const Allocation& alloc) {
    if (alloc.alphas.size() != net.size() || alloc.betas.size() != net.size())
        throw std::invalid_argument("verify_kkt: allocation does not match network");
    std::vector<double> res(net.size(), 0.0);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const double a = alloc.alphas[i], b = alloc.betas[i];
        if (a <= 0.0) continue;
        const double lhs = (b / a) * net.tau();
        const double rhs = (a * net.p_s * net.channels[i].g2 + 1.0) /
                           (b * net.p_r * net.channels[i].h2 + 1.0);
        res[i] = std::abs(lhs - rhs);
    }
    return res;
}

}  // namespace relaypower
