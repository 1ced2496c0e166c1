// Case II / Case IV power allocation: the source splits its budget
// blindly (water-filling or equal split) and commits per-link data
// rates; the relay then buys links in decreasing rate-per-cost order,
// spending exactly the minimum fraction that avoids outage on each
// link it forwards.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaypower/channel.hpp"
#include "relaypower/link_metrics.hpp"

namespace relaypower {

enum class SourceMode { waterfill, equal };

// Source-side decision: per-link powers plus the committed rates
// gamma_i = delta * log2(1 + ps_i * g2_i).
struct SourcePlan {
    std::vector<double> ps_alloc;
    std::vector<double> gammas;
    double delta = 0.0;
};

// Relay-side outcome. achieved_rates[i] is exactly gamma_i for
// forwarded links and exactly 0 otherwise; no link ever receives more
// than its minimum outage-free fraction.
struct RelaySelection {
    std::vector<char> selected;
    std::vector<double> beta_tilde;
    std::vector<double> achieved_rates;
    double sum_rate = 0.0;
    double leftover = 0.0;
};

// Classic single-constraint water-filling: p_i = max(0, mu - 1/g2_i)
// with the water level mu chosen so the powers sum to p. Zero-gain
// links get nothing.
inline std::vector<double> water_fill(std::span<const double> g2s, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("water_fill: power must be positive");
    const std::size_t n = g2s.size();
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i)
        if (g2s[i] > 0.0) order.push_back(i);
    if (order.empty()) throw std::invalid_argument("water_fill: all gains are zero");
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return g2s[a] > g2s[b]; });

    // shrink the active set until the water level clears its weakest member
    std::size_t k = order.size();
    double mu = 0.0;
    while (k > 0) {
        double inv = 0.0;
        for (std::size_t j = 0; j < k; ++j) inv += 1.0 / g2s[order[j]];
        mu = (p + inv) / static_cast<double>(k);
        if (mu > 1.0 / g2s[order[k - 1]]) break;
        --k;
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t j = 0; j < k; ++j)
        out[order[j]] = mu - 1.0 / g2s[order[j]];
    return out;
}

inline std::vector<double> equal_split(std::size_t n, double p) {
    if (n == 0) throw std::invalid_argument("equal_split: n must be positive");
    return std::vector<double>(n, p / static_cast<double>(n));
}

inline SourcePlan make_source_plan(const NetworkRealization& net, double delta,
                                   SourceMode mode) {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("make_source_plan: delta must be in [0, 1]");
    SourcePlan plan;
    plan.delta = delta;
    if (mode == SourceMode::equal) {
        plan.ps_alloc = equal_split(net.size(), net.p_s);
    } else {
        std::vector<double> g2s(net.size());
        for (std::size_t i = 0; i < net.size(); ++i) g2s[i] = net.channels[i].g2;
        plan.ps_alloc = water_fill(g2s, net.p_s);
    }
    plan.gammas.resize(net.size());
    for (std::size_t i = 0; i < net.size(); ++i)
        plan.gammas[i] =
            delta * link_capacity(plan.ps_alloc[i] * net.channels[i].g2);
    return plan;
}

// Smallest relay fraction beta with relay_side_capacity(...) = gamma_i:
//   beta = G * (rho_sr + 1) / ((rho_sr - G) * P_R * h2),  G = 2^gamma - 1.
// Returns +inf when no finite fraction reaches gamma_i (delta = 1 makes
// rho_sr - G vanish, and h2 = 0 carries nothing); such links are
// excluded by selection rather than reported as errors.
inline double min_relay_fraction(const SourcePlan& plan, const NetworkRealization& net,
                                 std::size_t i) {
    const double gamma = plan.gammas.at(i);
    if (gamma <= 0.0) return 0.0;
    const double rho_sr = plan.ps_alloc[i] * net.channels[i].g2;
    const double big = std::exp2(gamma) - 1.0;
    const double h2 = net.channels[i].h2;
    if (h2 <= 0.0 || rho_sr - big <= 0.0)
        return std::numeric_limits<double>::infinity();
    return big * (rho_sr + 1.0) / ((rho_sr - big) * net.p_r * h2);
}

// Greedy knapsack pass: links sorted by efficiency eta_i = rate/cost
// descending (ties: cheaper first, then lower index), each taken iff
// its cost still fits the remaining relay budget of 1.
inline RelaySelection greedy_select(std::span<const double> costs,
                                    std::span<const double> rates) {
    if (costs.size() != rates.size())
        throw std::invalid_argument("greedy_select: length mismatch");
    const std::size_t n = costs.size();
    RelaySelection sel;
    sel.selected.assign(n, 0);
    sel.beta_tilde.assign(n, 0.0);
    sel.achieved_rates.assign(n, 0.0);

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i)
        if (rates[i] > 0.0 && std::isfinite(costs[i])) order.push_back(i);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ea = rates[a] / costs[a], eb = rates[b] / costs[b];
        if (ea != eb) return ea > eb;
        if (costs[a] != costs[b]) return costs[a] < costs[b];
        return a < b;
    });

    double remaining = 1.0;
    for (std::size_t i : order) {
        if (costs[i] > remaining) continue;
        sel.selected[i] = 1;
        sel.beta_tilde[i] = costs[i];
        sel.achieved_rates[i] = rates[i];
        sel.sum_rate += rates[i];
        remaining -= costs[i];
    }
    sel.leftover = std::max(0.0, remaining);
    return sel;
}

// Exhaustive selection oracle: the feasible subset maximizing the sum
// rate, ties broken toward smaller total cost, then lexicographically
// by selected indices. Intentionally kept independent of the greedy
// pass so the two can check each other.
inline RelaySelection brute_force_select(std::span<const double> costs,
                                         std::span<const double> rates) {
    if (costs.size() != rates.size())
        throw std::invalid_argument("brute_force_select: length mismatch");
    const std::size_t n = costs.size();
    if (n > 25) throw std::invalid_argument("brute_force_select: n > 25");

    auto lex_less = [&](std::uint32_t a, std::uint32_t b) {
        for (std::size_t i = 0; i < n; ++i) {
            const bool ia = (a >> i) & 1u, ib = (b >> i) & 1u;
            if (ia != ib) return ia;  // earlier index selected wins
        }
        return false;
    };

    std::uint32_t best_mask = 0;
    double best_rate = 0.0, best_cost = 0.0;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
        double cost = 0.0, rate = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            if (!((mask >> i) & 1u)) continue;
            if (!std::isfinite(costs[i])) ok = false;
            cost += costs[i];
            rate += rates[i];
        }
        if (!ok || cost > 1.0) continue;
        if (rate > best_rate || (rate == best_rate && cost < best_cost) ||
            (rate == best_rate && cost == best_cost && lex_less(mask, best_mask)))
        {
            best_mask = mask;
            best_rate = rate;
            best_cost = cost;
        }
    }
    RelaySelection sel;
    sel.selected.assign(n, 0);
    sel.beta_tilde.assign(n, 0.0);
    sel.achieved_rates.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!((best_mask >> i) & 1u)) continue;
        sel.selected[i] = 1;
        sel.beta_tilde[i] = costs[i];
        sel.achieved_rates[i] = rates[i];
    }
    sel.sum_rate = best_rate;
    sel.leftover = std::max(0.0, 1.0 - best_cost);
    return sel;
}

inline RelaySelection solve_case2(const NetworkRealization& net, double delta,
                                  SourceMode mode) {
    const SourcePlan plan = make_source_plan(net, delta, mode);
    std::vector<double> costs(net.size());
    for (std::size_t i = 0; i < net.size(); ++i)
        costs[i] = min_relay_fraction(plan, net, i);
    return greedy_select(costs, plan.gammas);
}

// Case IV: sort first, then commit rates on the ordered pairs.
inline RelaySelection solve_case4(const NetworkRealization& net, double delta,
                                  SourceMode mode) {
    return solve_case2(sort_for_asf(net), delta, mode);
}

struct DeltaStarResult {
    double delta_star = 0.0;
    double expected_sum_rate = 0.0;
};

// Monte Carlo search for the rate-backoff delta* maximizing the
// expected greedy sum rate. The grid {step, 2*step, ..., 1 - step}
// excludes both endpoints (delta = 0 commits nothing, delta = 1 needs
// unbounded relay power), and all grid values share the same channel
// draws so the arg-max is stable at modest trial counts.
inline DeltaStarResult optimize_delta(const ChannelStats& stats, double p_s, double p_r,
                                      SourceMode mode, double grid_step,
                                      std::size_t trials, std::uint64_t seed) {
    if (!(grid_step > 0.0 && grid_step <= 0.5))
        throw std::invalid_argument("optimize_delta: grid_step must be in (0, 0.5]");
    if (trials == 0) throw std::invalid_argument("optimize_delta: trials must be >= 1");

    std::vector<double> grid;
    const auto steps = static_cast<std::size_t>(std::llround(1.0 / grid_step));
    for (std::size_t k = 1; k + 1 <= steps; ++k) grid.push_back(k * grid_step);
    if (grid.empty()) grid.push_back(0.5);

    std::vector<double> total(grid.size(), 0.0);
    for (std::size_t t = 0; t < trials; ++t) {
        const NetworkRealization net =
            sample_network(stats, p_s, p_r, detail::derive_seed(seed, t));
        for (std::size_t k = 0; k < grid.size(); ++k)
            total[k] += solve_case2(net, grid[k], mode).sum_rate;
    }
    DeltaStarResult res{grid[0], total[0] / static_cast<double>(trials)};
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double mean = total[k] / static_cast<double>(trials);
        if (mean > res.expected_sum_rate) res = {grid[k], mean};
    }
    return res;
}

// --- delta* table persistence -------------------------------------------
//
// Plain text, one record per line:
//   sigma_g2 sigma_h2 n tau snr_db mode delta_star

struct DeltaTableEntry {
    double sigma_g2 = 0.0;
    double sigma_h2 = 0.0;
    std::size_t n = 0;
    double tau = 0.0;
    double snr_db = 0.0;
    SourceMode mode = SourceMode::equal;
    double delta_star = 0.0;
};

inline const char* to_string(SourceMode m) {
    return m == SourceMode::waterfill ? "waterfill" : "equal";
}

inline SourceMode source_mode_from_string(const std::string& s) {
    if (s == "waterfill") return SourceMode::waterfill;
    if (s == "equal") return SourceMode::equal;
    throw std::invalid_argument("unknown source mode: " + s);
}

inline void write_delta_table(std::span<const DeltaTableEntry> entries,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_delta_table: cannot open " + path);
    out << "# sigma_g2 sigma_h2 n tau snr_db mode delta_star\n";
    out.precision(17);
    for (const auto& e : entries)
        out << e.sigma_g2 << ' ' << e.sigma_h2 << ' ' << e.n << ' ' << e.tau << ' '
            << e.snr_db << ' ' << to_string(e.mode) << ' ' << e.delta_star << '\n';
    if (!out) throw std::runtime_error("write_delta_table: write failed: " + path);
}

inline std::vector<DeltaTableEntry> read_delta_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_delta_table: cannot open " + path);
    std::vector<DeltaTableEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        DeltaTableEntry e;
        std::string mode;
        if (!(ss >> e.sigma_g2 >> e.sigma_h2 >> e.n >> e.tau >> e.snr_db >> mode >>
              e.delta_star))
            throw std::runtime_error("read_delta_table: malformed line: " + line);
        e.mode = source_mode_from_string(mode);
        entries.push_back(e);
    }
    return entries;
}

}  // namespace relaypower
