// Monte Carlo experiment driver: sweeps total transmit SNR, runs the
// requested allocation cases on shared seeded channel draws (paired
// comparison), and aggregates mean sum rates with standard errors.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "relaypower/asymptotic.hpp"
#include "relaypower/channel.hpp"
#include "relaypower/global_allocator.hpp"
#include "relaypower/link_metrics.hpp"
#include "relaypower/relay_allocator.hpp"

namespace relaypower {

enum class CaseId { case1, case2, case3, case4, asym };

inline const char* to_string(CaseId c) {
    switch (c) {
        case CaseId::case1: return "1";
        case CaseId::case2: return "2";
        case CaseId::case3: return "3";
        case CaseId::case4: return "4";
        case CaseId::asym: return "asym";
    }
    return "?";
}

inline CaseId case_from_string(const std::string& s) {
    if (s == "1") return CaseId::case1;
    if (s == "2") return CaseId::case2;
    if (s == "3") return CaseId::case3;
    if (s == "4") return CaseId::case4;
    if (s == "asym") return CaseId::asym;
    throw std::invalid_argument("unknown case: " + s);
}

struct ExperimentConfig {
    std::vector<CaseId> cases{CaseId::case1};
    std::size_t n = 20;
    double tau = 1.0;
    std::vector<double> snr_db;        // total transmit SNR points
    double sigma2 = 1.0;               // fading variance
    std::size_t trials = 2000;
    std::uint64_t master_seed = 1;
    std::optional<double> fixed_delta; // nullopt: optimize per SNR point
    SourceMode source_mode = SourceMode::equal;
    std::string out_path;              // consumed by the CLI, not run_experiment
    std::size_t workers = 0;           // 0: hardware concurrency
    double delta_grid_step = 0.02;
    std::size_t delta_calib_trials = 256;
};

struct CurveRow {
    double snr_db = 0.0;
    std::string case_label;
    double mean_sum_rate = 0.0;
    double std_err = 0.0;
    std::size_t trials = 0;
    std::optional<double> delta_used;  // only for the greedy cases
};

using SumRateCurve = std::vector<CurveRow>;

// Evaluation seed of one trial. splitmix64-based (see detail::derive_seed):
// mix64(master + (trial + 1) * 0x9e3779b97f4a7c15); injective per master.
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed,
                                       std::uint64_t trial_index) {
    return detail::derive_seed(master_seed, trial_index);
}

namespace detail {

// Calibration stream for delta*, disjoint from evaluation trials by a
// large fixed offset in the derivation index.
inline std::uint64_t calibration_seed(std::uint64_t master_seed,
                                      std::size_t snr_index) {
    return derive_seed(master_seed, 0x100000000ULL + snr_index);
}

inline double case_sum_rate(CaseId c, const NetworkRealization& net, double delta,
                            SourceMode mode) {
    switch (c) {
        case CaseId::case1: return solve_case1(net).sum_rate;
        case CaseId::case2: return solve_case2(net, delta, mode).sum_rate;
        case CaseId::case3: return solve_case3(net).sum_rate;
        case CaseId::case4: return solve_case4(net, delta, mode).sum_rate;
        case CaseId::asym: {
            // asymptotic allocation scored with the exact finite-SNR rates
            const AsymptoticSolution sol = solve_asymptotic(net);
            double c2 = 0.0;
            for (std::size_t i = 0; i < net.size(); ++i) {
                const LinkPowers p{sol.alphas[i] * net.p_s, sol.betas[i] * net.p_r};
                c2 += link_capacity(af_link_snr(p, net.channels[i]));
            }
            return c2;
        }
    }
    return 0.0;
}

inline void validate(const ExperimentConfig& cfg) {
    if (cfg.cases.empty()) throw std::invalid_argument("config: cases is empty");
    if (cfg.n == 0) throw std::invalid_argument("config: n must be >= 1");
    if (!(cfg.tau > 0.0)) throw std::invalid_argument("config: tau must be > 0");
    if (cfg.snr_db.empty()) throw std::invalid_argument("config: snr_db is empty");
    if (!(cfg.sigma2 > 0.0)) throw std::invalid_argument("config: sigma2 must be > 0");
    if (cfg.trials == 0) throw std::invalid_argument("config: trials must be >= 1");
    if (cfg.fixed_delta && !(*cfg.fixed_delta > 0.0 && *cfg.fixed_delta < 1.0))
        throw std::invalid_argument("config: fixed delta must be in (0, 1)");
}

}  // namespace detail

// Runs the configured sweep. For each SNR point the total power is
// P = SNR/sigma2, split as P_S = P/(1+tau), P_R = tau*P/(1+tau); every
// requested case sees the same per-trial realization. Trials run on a
// worker pool but are accumulated by trial index, so the output does
// not depend on the worker count.
inline SumRateCurve run_experiment(const ExperimentConfig& cfg) {
    detail::validate(cfg);
    const ChannelStats stats = ChannelStats::shared(cfg.n, cfg.sigma2, cfg.sigma2);
    const bool needs_delta =
        std::any_of(cfg.cases.begin(), cfg.cases.end(), [](CaseId c) {
            return c == CaseId::case2 || c == CaseId::case4;
        });

    std::size_t workers = cfg.workers ? cfg.workers
                                      : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, cfg.trials);

    SumRateCurve curve;
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
        const double snr = std::pow(10.0, cfg.snr_db[si] / 10.0);
        const double p_total = snr / cfg.sigma2;
        const double p_s = p_total / (1.0 + cfg.tau);
        const double p_r = p_total * cfg.tau / (1.0 + cfg.tau);

        double delta = 0.0;
        if (needs_delta) {
            if (cfg.fixed_delta) {
                delta = *cfg.fixed_delta;
            } else {
                delta = optimize_delta(stats, p_s, p_r, cfg.source_mode,
                                       cfg.delta_grid_step, cfg.delta_calib_trials,
                                       detail::calibration_seed(cfg.master_seed, si))
                            .delta_star;
            }
        }

        // rates[t * cases + c]
        std::vector<double> rates(cfg.trials * cfg.cases.size(), 0.0);
        auto run_range = [&](std::size_t t0, std::size_t t1) {
            for (std::size_t t = t0; t < t1; ++t) {
                const NetworkRealization net = sample_network(
                    stats, p_s, p_r, derive_trial_seed(cfg.master_seed, t));
                for (std::size_t c = 0; c < cfg.cases.size(); ++c)
                    rates[t * cfg.cases.size() + c] =
                        detail::case_sum_rate(cfg.cases[c], net, delta,
                                              cfg.source_mode);
            }
        };
        if (workers <= 1) {
            run_range(0, cfg.trials);
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (cfg.trials + workers - 1) / workers;
            for (std::size_t w = 0; w < workers; ++w) {
                const std::size_t t0 = w * chunk;
                const std::size_t t1 = std::min(cfg.trials, t0 + chunk);
                if (t0 < t1) pool.emplace_back(run_range, t0, t1);
            }
            for (auto& th : pool) th.join();
        }

        for (std::size_t c = 0; c < cfg.cases.size(); ++c) {
            double sum = 0.0;
            for (std::size_t t = 0; t < cfg.trials; ++t)
                sum += rates[t * cfg.cases.size() + c];
            const double mean = sum / static_cast<double>(cfg.trials);
            double var = 0.0;
            for (std::size_t t = 0; t < cfg.trials; ++t) {
                const double d = rates[t * cfg.cases.size() + c] - mean;
                var += d * d;
            }
            const double std_err =
                cfg.trials > 1 ? std::sqrt(var / (static_cast<double>(cfg.trials) - 1.0) /
                                           static_cast<double>(cfg.trials))
                               : 0.0;
            CurveRow row;
            row.snr_db = cfg.snr_db[si];
            row.case_label = to_string(cfg.cases[c]);
            row.mean_sum_rate = mean;
            row.std_err = std_err;
            row.trials = cfg.trials;
            if (cfg.cases[c] == CaseId::case2 || cfg.cases[c] == CaseId::case4)
                row.delta_used = delta;
            curve.push_back(std::move(row));
        }
    }
    return curve;
}

// CSV with the fixed header below, floating values at 6 significant
// digits, rows sorted by (snr_db, case).
inline void write_csv(const SumRateCurve& curve, const std::string& path) {
    SumRateCurve rows = curve;
    std::stable_sort(rows.begin(), rows.end(), [](const CurveRow& a, const CurveRow& b) {
        if (a.snr_db != b.snr_db) return a.snr_db < b.snr_db;
        return a.case_label < b.case_label;
    });
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "snr_db,case,mean_sum_rate,std_err,trials,delta_used\n";
    char buf[64];
    auto fmt = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    for (const auto& r : rows) {
        out << fmt(r.snr_db) << ',' << r.case_label << ',' << fmt(r.mean_sum_rate)
            << ',' << fmt(r.std_err) << ',' << r.trials << ','
            << (r.delta_used ? fmt(*r.delta_used) : std::string("n/a")) << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: write failed: " + path);
}

}  // namespace relaypower
