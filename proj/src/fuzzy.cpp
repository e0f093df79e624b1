#include "optctl/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "optctl/errors.hpp"

namespace optctl::fuzzy {

namespace {

// Seven-level tables, anti-symmetric by construction: the lower half mirrors
// the negated, reversed upper half. Derived from the widely used self-tuning
// PID rule sets, with the sign convention that the (PB, PB) corner of the P
// table is PB.
const RuleTable kTableP = {
    {-3, -3, -2, -2, -1, 0, 0},
    {-3, -3, -2, -1, -1, 0, 1},
    {-2, -2, -2, -1, 0, 1, 1},
    {-2, -2, -1, 0, 1, 2, 2},
    {-1, -1, 0, 1, 2, 2, 2},
    {-1, 0, 1, 1, 2, 3, 3},
    {0, 0, 1, 2, 2, 3, 3},
};

const RuleTable kTableI = {
    {-3, -3, -2, -2, -1, 0, 0},
    {-3, -3, -2, -1, -1, 0, 0},
    {-3, -2, -1, -1, 0, 1, 1},
    {-2, -2, -1, 0, 1, 2, 2},
    {-1, -1, 0, 1, 1, 2, 3},
    {0, 0, 1, 1, 2, 3, 3},
    {0, 0, 1, 2, 2, 3, 3},
};

// Damping table: the P table transposed, so it responds to the change term
// the way the P table responds to the error term.
RuleTable transpose(const RuleTable& t) {
    RuleTable out(t.size(), std::vector<int>(t.size(), 0));
    for (std::size_t i = 0; i < t.size(); ++i) {
        for (std::size_t j = 0; j < t.size(); ++j) {
            out[j][i] = t[i][j];
        }
    }
    return out;
}

const RuleTable kTableD = transpose(kTableP);

void validate_table(const RuleTable& table, int levels, const std::string& field) {
    const int half = (levels - 1) / 2;
    if (static_cast<int>(table.size()) != levels) {
        throw InvalidConfigError(field, "expected " + std::to_string(levels) + " rows");
    }
    for (const auto& row : table) {
        if (static_cast<int>(row.size()) != levels) {
            throw InvalidConfigError(field, "expected " + std::to_string(levels) + " columns");
        }
        for (int v : row) {
            if (v < -half || v > half) {
                throw InvalidConfigError(field, "entry " + std::to_string(v) + " outside [" +
                                                    std::to_string(-half) + ", " +
                                                    std::to_string(half) + "]");
            }
        }
    }
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
            if (table[i][j] != -table[levels - 1 - i][levels - 1 - j]) {
                throw InvalidConfigError(field, "not anti-symmetric at (" + std::to_string(i) +
                                                    ", " + std::to_string(j) + ")");
            }
        }
    }
}

}  // namespace

const RuleTable& default_table(GainChannel which) {
    switch (which) {
        case GainChannel::P:
            return kTableP;
        case GainChannel::I:
            return kTableI;
        case GainChannel::D:
            return kTableD;
    }
    return kTableP;
}

FuzzyConfig FuzzyConfig::defaults() {
    FuzzyConfig cfg;
    cfg.rule_table_p = kTableP;
    cfg.rule_table_i = kTableI;
    cfg.rule_table_d = kTableD;
    return cfg;
}

void FuzzyConfig::validate() const {
    if (!(phi > 0.0)) {
        throw InvalidConfigError("fuzzy.phi", "must be > 0");
    }
    if (levels < 3 || levels % 2 == 0) {
        throw InvalidConfigError("fuzzy.levels", "must be odd and >= 3");
    }
    if (warmup_steps < 1) {
        throw InvalidConfigError("fuzzy.warmup_steps", "must be >= 1");
    }
    validate_table(rule_table_p, levels, "fuzzy.rule_table_p");
    validate_table(rule_table_i, levels, "fuzzy.rule_table_i");
    validate_table(rule_table_d, levels, "fuzzy.rule_table_d");
}

std::vector<Membership> fuzzify(const FuzzyConfig& cfg, double x) {
    const int levels = cfg.levels;
    const double spacing = 2.0 * cfg.phi / static_cast<double>(levels - 1);
    const double clamped = std::clamp(x, -cfg.phi, cfg.phi);

    // Position within the partition; term k has its peak at -phi + k*spacing.
    const double pos = (clamped + cfg.phi) / spacing;
    const int lower = std::clamp(static_cast<int>(std::floor(pos)), 0, levels - 1);
    const double frac = pos - static_cast<double>(lower);

    std::vector<Membership> out;
    if (lower >= levels - 1 || frac == 0.0) {
        out.push_back({lower, 1.0});
        return out;
    }
    out.push_back({lower, 1.0 - frac});
    out.push_back({lower + 1, frac});
    return out;
}

double defuzzify(const FuzzyConfig& cfg, GainChannel which, const FuzzyInput& input) {
    const RuleTable& table = which == GainChannel::P   ? cfg.rule_table_p
                             : which == GainChannel::I ? cfg.rule_table_i
                                                       : cfg.rule_table_d;
    const int half = (cfg.levels - 1) / 2;
    const std::vector<Membership> mu_e = fuzzify(cfg, input.e);
    const std::vector<Membership> mu_ec = fuzzify(cfg, input.ec);

    // Max-aggregate rule strengths per output level, then take the centroid.
    std::vector<double> activation(static_cast<std::size_t>(cfg.levels), 0.0);
    for (const Membership& a : mu_e) {
        for (const Membership& b : mu_ec) {
            const double strength = std::min(a.degree, b.degree);
            const int level = table[a.level][b.level] + half;
            activation[level] = std::max(activation[level], strength);
        }
    }
    double weighted = 0.0;
    double total = 0.0;
    for (int k = 0; k < cfg.levels; ++k) {
        weighted += activation[k] * static_cast<double>(k - half);
        total += activation[k];
    }
    if (total == 0.0) {
        return 0.0;
    }
    return weighted / total / static_cast<double>(half);
}

PidGains fuzzy_gains(const FuzzyConfig& cfg, const PidGains& base, const FuzzyInput& input) {
    PidGains out;
    out.kp = base.kp * (1.0 + defuzzify(cfg, GainChannel::P, input));
    out.ki = base.ki * (1.0 + defuzzify(cfg, GainChannel::I, input));
    out.kd = base.kd * (1.0 + defuzzify(cfg, GainChannel::D, input));
    return out;
}

RuleTable load_rule_table_csv(const std::string& path, int levels) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidConfigError("rule_table", "cannot open '" + path + "'");
    }
    RuleTable table;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<int> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stoi(cell));
            } catch (const std::exception&) {
                throw InvalidConfigError("rule_table", "non-integer cell '" + cell + "' in " + path);
            }
        }
        table.push_back(std::move(row));
    }
    validate_table(table, levels, "rule_table");
    return table;
}

}  // namespace optctl::fuzzy
