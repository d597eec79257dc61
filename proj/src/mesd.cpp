#include "aad/mesd.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "aad/common.hpp"

namespace aad {

double expected_hitting_steps(double p_up, int k, int target, int start) {
    if (k < 2 || target < 1 || target > k - 1) throw ParameterError("hitting time: bad chain design");
    if (start < 0 || start >= target) throw ParameterError("hitting time: start must lie below target");
    if (!(p_up > 0.0) || p_up >= 1.0) throw ParameterError("hitting time: p must be in (0, 1)");
    // Transient states 0..target-1; target is absorbing. The walk moves up
    // with probability p, down with 1-p, and reflects at 0 (stays in place
    // on a blocked down-step).
    const int n = target;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        if (i + 1 < n) a(i, i + 1) -= p_up;
        if (i - 1 >= 0) {
            a(i, i - 1) -= 1.0 - p_up;
        } else {
            a(i, i) -= 1.0 - p_up;  // reflection: stay at 0
        }
    }
    const Eigen::VectorXd h = a.partialPivLu().solve(Eigen::VectorXd::Ones(n));
    return h[start];
}

double stationary_upper_mass(double p_up, int k, int target) {
    if (p_up >= 1.0) return 1.0;
    // Birth-death chain stationary law: pi_i proportional to r^i with
    // r = p/(1-p). Accumulate relative to the largest term so extreme r
    // cannot overflow.
    const double r = p_up / (1.0 - p_up);
    double total = 0.0, upper = 0.0;
    if (r <= 1.0) {
        double w = 1.0;  // anchored at state 0
        for (int i = 0; i < k; ++i) {
            total += w;
            if (i >= target) upper += w;
            w *= r;
        }
    } else {
        double w = 1.0;  // anchored at state k-1
        for (int i = k - 1; i >= 0; --i) {
            total += w;
            if (i >= target) upper += w;
            w /= r;
        }
    }
    return upper / total;
}

namespace {

int comfort_state(int k, double comfort_gain) {
    // Gains equally spaced on [0, 1]; the target is the lowest state whose
    // gain reaches comfort_gain.
    const int c = static_cast<int>(std::ceil(comfort_gain * (k - 1) - 1e-12));
    return std::min(std::max(c, 1), k - 1);
}

}  // namespace

MesdResult mesd(const PerformanceCurve& curve, const MesdOptions& opts) {
    if (curve.points.empty()) throw ParameterError("mesd: empty performance curve");
    if (opts.k_min < 2 || opts.k_max < opts.k_min) throw ParameterError("mesd: bad state bounds");

    MesdResult best;
    best.seconds = std::numeric_limits<double>::infinity();
    for (const CurvePoint& pt : curve.points) {
        const double p = pt.accuracy_pct / 100.0;
        if (p <= 0.5 || pt.tau_s <= 0.0) continue;  // no finite switch below chance
        for (int k = opts.k_min; k <= opts.k_max; ++k) {
            const int target = comfort_state(k, opts.comfort_gain);
            const int start = (k - 1) - target;  // previous speaker's comfort state
            if (start >= target) continue;       // design cannot represent a switch
            if (stationary_upper_mass(p, k, target) < opts.comfort_threshold) continue;
            // A perfect classifier walks deterministically.
            const double steps =
                p >= 1.0 ? target - start : expected_hitting_steps(p, k, target, start);
            const double seconds = steps * pt.tau_s;
            if (seconds < best.seconds) {
                best.seconds = seconds;
                best.optimal_tau_s = pt.tau_s;
                best.states = k;
                best.target_state = target;
                best.finite = true;
            }
        }
    }
    if (!best.finite) {
        best.seconds = std::numeric_limits<double>::infinity();
        best.optimal_tau_s = 0.0;
        best.states = 0;
        best.target_state = 0;
    }
    return best;
}

std::string mesd_cell(const MesdResult& r, const MesdOptions& opts) {
    if (!r.finite) {
        std::string b = std::to_string(opts.bound_s);
        b.erase(b.find_last_not_of('0') + 1);
        if (!b.empty() && b.back() == '.') b += "0";
        return ">" + b;
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", r.seconds);
    return buf;
}

}  // namespace aad
