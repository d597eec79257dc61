#pragma once

#include <string>
#include <vector>

namespace aad {

struct CurvePoint {
    double tau_s = 0.0;
    double accuracy_pct = 0.0;
    int n_decisions = 0;
};

struct PerformanceCurve {
    std::vector<CurvePoint> points;  // tau strictly increasing
    std::string subject_id;
    std::string algorithm;
};

// Gain-control chain settings behind the minimal-expected-switch-duration
// metric. States are gain levels equally spaced on [0, 1]; the comfort
// region is the set of states with gain >= comfort_gain, the target state is
// its lower edge, and a switch starts from the mirrored state (the previous
// speaker's comfort state). A design is admissible when the stationary mass
// of the comfort region is at least comfort_threshold.
struct MesdOptions {
    int k_min = 10;
    int k_max = 10;
    double comfort_gain = 0.8;
    double comfort_threshold = 0.9;
    double bound_s = 50.0;  // reporting bound for unbounded results
};

struct MesdResult {
    double seconds = 0.0;
    double optimal_tau_s = 0.0;
    int states = 0;        // chain design K
    int target_state = 0;  // absorbing comfort state index
    bool finite = false;
};

// Expected number of steps for a +/-1 random walk on states 0..k-1
// (reflecting boundaries, up-probability p) to first hit `target`, starting
// from `start` below it. Solves the absorbing-chain linear system.
double expected_hitting_steps(double p_up, int k, int target, int start);

// Stationary probability of states >= `target` for the same chain.
double stationary_upper_mass(double p_up, int k, int target);

// Minimal expected switch duration over the curve's points and admissible
// chain designs. Points with accuracy <= 50% are never admissible. When
// nothing is admissible the result is flagged unbounded ("> bound_s").
MesdResult mesd(const PerformanceCurve& curve, const MesdOptions& opts = {});

// "12.345" or ">50.0" for unbounded results.
std::string mesd_cell(const MesdResult& r, const MesdOptions& opts = {});

}  // namespace aad
