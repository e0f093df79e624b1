#pragma once

#include <array>
#include <string>
#include <vector>

namespace optctl::fuzzy {

// levels x levels matrix of output levels, entries in
// [-(levels-1)/2, +(levels-1)/2], row index = error term, column = change
// term. Must be anti-symmetric: table[i][j] == -table[L-1-i][L-1-j].
using RuleTable = std::vector<std::vector<int>>;

enum class MembershipShape { Triangular };

enum class GainChannel { P, I, D };

// Inference setup: a symmetric universe [-phi, phi] partitioned by `levels`
// uniformly spaced triangular terms, plus one rule table per PID channel.
struct FuzzyConfig {
    double phi = 3.0;  // universe half-range, in error units
    int levels = 7;    // odd
    MembershipShape membership = MembershipShape::Triangular;
    RuleTable rule_table_p;
    RuleTable rule_table_i;
    RuleTable rule_table_d;
    // When set, phi is re-derived once from observed errors (3 standard
    // deviations over the warm-up window) instead of staying fixed.
    bool auto_phi = false;
    int warmup_steps = 100;

    // Config with the built-in seven-level rule tables.
    static FuzzyConfig defaults();

    // Throws InvalidConfigError naming the offending field.
    void validate() const;
};

struct FuzzyInput {
    double e = 0.0;   // error sample
    double ec = 0.0;  // error change, e_t - e_{t-1}
};

struct Membership {
    int level = 0;       // term index, 0 .. levels-1
    double degree = 0.0;  // in [0, 1]
};

// Triangular fuzzification over the uniform partition. Out-of-range inputs
// clamp to the boundary term. At most two terms fire and their degrees sum
// to one.
std::vector<Membership> fuzzify(const FuzzyConfig& cfg, double x);

// Mamdani inference (min AND, max aggregation) with centroid defuzzification
// over the rule-table output levels, normalized into [-1, 1].
double defuzzify(const FuzzyConfig& cfg, GainChannel which, const FuzzyInput& input);

struct PidGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
};

// Per-channel gain correction: K_hat = K * (1 + D_f). Nonnegative base gains
// stay nonnegative because |D_f| <= 1.
PidGains fuzzy_gains(const FuzzyConfig& cfg, const PidGains& base, const FuzzyInput& input);

// Plain-text CSV: `levels` lines of `levels` comma-separated integers.
// Validation (shape, entry range, anti-symmetry) happens at load.
RuleTable load_rule_table_csv(const std::string& path, int levels);

const RuleTable& default_table(GainChannel which);

}  // namespace optctl::fuzzy
