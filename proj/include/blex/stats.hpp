#pragma once

// Statistical plumbing: KS distances (with a possible atom at -inf),
// chi-square goodness of fit with automatic pooling, Laplace-functional
// comparison, and monotone-trend reports for "-> as t -> infinity" claims.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "detail/special.hpp"
#include "point_measure.hpp"

namespace blex {

struct Estimate {
    double value = 0.0;
    double ci_half = 0.0; // 95% half width
};

inline Estimate mean_ci(const std::vector<double>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_ci: empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / double(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double se = xs.size() > 1 ? std::sqrt(ss / double(xs.size() - 1) / double(xs.size())) : 0.0;
    return {mean, 1.96 * se};
}

inline Estimate proportion_ci(double hits, double n) {
    if (!(n > 0.0)) throw std::invalid_argument("proportion_ci: n > 0 required");
    const double p = hits / n;
    return {p, 1.96 * std::sqrt(std::max(p * (1.0 - p), 1.0 / n) / n)};
}

// sup_x |F_emp(x) - (m + (1-m) cdf(x))| over the sample points (both sides of
// each jump); -inf samples live in the atom of mass m = mass_at_minus_inf.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf,
                          double mass_at_minus_inf = 0.0) {
    if (samples.size() < 100) throw std::invalid_argument("ks_distance: need >= 100 samples");
    std::sort(samples.begin(), samples.end());
    const double n = double(samples.size());
    std::size_t neg_inf = 0;
    while (neg_inf < samples.size() && std::isinf(samples[neg_inf]) && samples[neg_inf] < 0.0)
        ++neg_inf;
    double sup = std::fabs(double(neg_inf) / n - mass_at_minus_inf);
    for (std::size_t i = neg_inf; i < samples.size();) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        const double model = mass_at_minus_inf + (1.0 - mass_at_minus_inf) * cdf(samples[i]);
        sup = std::max(sup, std::fabs(double(i) / n - model));     // just below the jump
        sup = std::max(sup, std::fabs(double(j) / n - model));     // at the jump
        i = j;
    }
    return sup;
}

struct KsTwoSample {
    double statistic = 0.0;
    double p_value = 1.0;
};

inline KsTwoSample ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double sup = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        sup = std::max(sup, std::fabs(double(i) / double(a.size()) - double(j) / double(b.size())));
    }
    const double ne = double(a.size()) * double(b.size()) / double(a.size() + b.size());
    const double arg = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * sup;
    return {sup, detail::kolmogorov_q(arg)};
}

struct ChiSquare {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t dof = 0;
    std::size_t pooled_bins = 0; // bins after expected-count pooling
};

// Pearson test of counts against probs (same length, probs summing to 1;
// the last bin conventionally holds the tail). Adjacent bins are pooled
// left to right until every pooled bin expects >= 5.
inline ChiSquare chi_square_gof(const std::vector<double>& counts, const std::vector<double>& probs) {
    if (counts.size() != probs.size() || counts.empty())
        throw std::invalid_argument("chi_square_gof: counts/probs must match and be nonempty");
    double n = 0.0, ptot = 0.0;
    for (double c : counts) n += c;
    for (double p : probs) ptot += p;
    if (std::fabs(ptot - 1.0) > 1e-9)
        throw std::invalid_argument("chi_square_gof: probabilities must sum to 1");
    std::vector<double> obs, expd;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        o_acc += counts[i];
        e_acc += n * probs[i];
        if (e_acc >= 5.0) {
            obs.push_back(o_acc);
            expd.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) { // leftover pools into the final bin
        if (expd.empty()) throw std::invalid_argument("chi_square_gof: too few observations");
        obs.back() += o_acc;
        expd.back() += e_acc;
    }
    if (obs.size() < 2) throw std::invalid_argument("chi_square_gof: need >= 2 pooled bins");
    ChiSquare result;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double d = obs[i] - expd[i];
        result.statistic += d * d / expd[i];
    }
    result.pooled_bins = obs.size();
    result.dof = obs.size() - 1;
    result.p_value = detail::gamma_q(0.5 * double(result.dof), 0.5 * result.statistic);
    return result;
}

// Homogeneity test of two histograms over the same bins.
inline ChiSquare chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("chi_square_two_sample: histograms must match");
    double na = 0.0, nb = 0.0;
    for (double x : a) na += x;
    for (double x : b) nb += x;
    if (!(na > 0.0 && nb > 0.0)) throw std::invalid_argument("chi_square_two_sample: empty histogram");
    // pool until each combined bin expects >= 5 in both samples
    std::vector<double> pa, pb;
    double aa = 0.0, ba = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        aa += a[i];
        ba += b[i];
        const double tot = aa + ba;
        if (na * tot / (na + nb) >= 5.0 && nb * tot / (na + nb) >= 5.0) {
            pa.push_back(aa);
            pb.push_back(ba);
            aa = ba = 0.0;
        }
    }
    if (aa > 0.0 || ba > 0.0) {
        if (pa.empty()) throw std::invalid_argument("chi_square_two_sample: too few observations");
        pa.back() += aa;
        pb.back() += ba;
    }
    if (pa.size() < 2) throw std::invalid_argument("chi_square_two_sample: need >= 2 pooled bins");
    ChiSquare result;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const double tot = pa[i] + pb[i];
        const double ea = na * tot / (na + nb);
        const double eb = nb * tot / (na + nb);
        result.statistic += (pa[i] - ea) * (pa[i] - ea) / ea + (pb[i] - eb) * (pb[i] - eb) / eb;
    }
    result.pooled_bins = pa.size();
    result.dof = pa.size() - 1;
    result.p_value = detail::gamma_q(0.5 * double(result.dof), 0.5 * result.statistic);
    return result;
}

struct TrendRow {
    double t = 0.0;
    double value = 0.0;
    double se = 0.0; // standard error of value; 0 means exact
};

struct TrendReport {
    bool monotone_ok = true; // |value - limit| never increases beyond 1 pooled SE
    bool final_ok = true;    // last gap below final_tol
    double final_gap = 0.0;
    std::string table;
};

inline TrendReport convergence_report(const std::vector<TrendRow>& rows, double limit,
                                      double final_tol) {
    if (rows.size() < 2) throw std::invalid_argument("convergence_report: need >= 2 rows");
    TrendReport report;
    double prev_gap = 0.0, prev_se = 0.0;
    char buf[160];
    report.table = "t,value,gap,se\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double gap = std::fabs(rows[i].value - limit);
        std::snprintf(buf, sizeof buf, "%.6g,%.10g,%.10g,%.10g\n", rows[i].t, rows[i].value, gap,
                      rows[i].se);
        report.table += buf;
        if (i > 0) {
            const double slack = std::sqrt(prev_se * prev_se + rows[i].se * rows[i].se);
            if (gap > prev_gap + slack) report.monotone_ok = false;
        }
        prev_gap = gap;
        prev_se = rows[i].se;
        if (i + 1 == rows.size()) {
            report.final_gap = gap;
            report.final_ok = gap < final_tol;
        }
    }
    return report;
}

struct LaplaceCompare {
    Estimate empirical;
    double target = 1.0;
    double target_ci = 0.0;
    bool overlap = true;
};

// Empirical E exp(-<g,N>) across replications against a target with CI.
inline LaplaceCompare laplace_compare(const std::vector<PointMeasure>& measures,
                                      const TestFunction& g, double target, double target_ci) {
    if (measures.empty()) throw std::invalid_argument("laplace_compare: no measures");
    std::vector<double> vals;
    vals.reserve(measures.size());
    for (const auto& m : measures) vals.push_back(std::exp(-m.integrate(g)));
    LaplaceCompare cmp;
    cmp.empirical = mean_ci(vals);
    cmp.target = target;
    cmp.target_ci = target_ci;
    cmp.overlap = std::fabs(cmp.empirical.value - target) <= cmp.empirical.ci_half + target_ci;
    return cmp;
}

} // namespace blex
