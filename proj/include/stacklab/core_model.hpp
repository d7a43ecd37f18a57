#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stacklab/errors.hpp"

namespace stacklab {

// All types in this header are immutable values after construction and safe
// to share and send between threads.

// ---------------------------------------------------------------------------
// Observation and action channels.
//
// Every observation is omega0 plus independent standard-normal noise.
// PopMeanObs is the arithmetic mean of the n follower/minor observations.
// ---------------------------------------------------------------------------

enum class Obs : int { leader = 0, major = 1, own = 2, pop_mean = 3 };
constexpr int n_obs_channels = 4;

// Channels a quadratic cost term may reference. OwnAction is the action of the
// distinguished (representative) follower/minor; Omega0 is the common state.
enum class Act : int { leader = 0, major = 1, own = 2, pop_mean = 3, omega0 = 4 };
constexpr int n_act_channels = 5;

enum class Role { leader, major, minor };

const char* obs_name(Obs o);
const char* act_name(Act a);

// ---------------------------------------------------------------------------
// Game specifications.
// ---------------------------------------------------------------------------

// One leader, n symmetric followers, every follower directly incentivized.
struct PnGameSpec {
    double r0 = 1.0;  // leader control weight
    double q0 = 1.0;  // leader tracking weight
    double r = 1.0;   // follower control weight
    double q = 1.0;   // follower tracking weight
    int n = 1;

    void validate() const;
};

// One leader, one major follower, n minor followers; only the major follower
// is incentivized. shared_obs selects the variant where the major and every
// minor observe one common signal y (used by the zero-loss example).
struct MajGameSpec {
    double r0 = 1.0;
    double rM = 1.0;
    double r = 1.0;
    double qM = 1.0;
    double q0 = 0.0;
    double qhat0 = 0.0;
    double q = 0.0;
    int n = 1;
    bool shared_obs = false;

    void validate() const;
};

// ---------------------------------------------------------------------------
// Policies.
// ---------------------------------------------------------------------------

// A linear policy: action = sum of coeff[channel] * observation[channel].
// Absent channel means coefficient zero.
struct LinearPolicy {
    std::array<double, n_obs_channels> coeff{};

    double get(Obs o) const { return coeff[static_cast<int>(o)]; }
    void set(Obs o, double v) { coeff[static_cast<int>(o)] = v; }

    static LinearPolicy single(Obs o, double v) {
        LinearPolicy p;
        p.set(o, v);
        return p;
    }
};

// Which realized action the leader's incentive term monitors.
enum class Monitored { pop_mean_action, major_action };

// Leader policy: base(observations) + gain * (monitored action - reference(observations)).
// gain == 0 realizes exactly the base policy.
struct IncentivePolicy {
    LinearPolicy base;
    double gain = 0.0;
    LinearPolicy reference;
    Monitored monitored = Monitored::pop_mean_action;

    void validate() const;
};

// Symmetric strategy profile: one leader, one (optional) major, one
// representative minor/follower policy shared by the whole population.
struct Profile {
    IncentivePolicy leader;
    LinearPolicy major;
    LinearPolicy minor;
};

// Population/observation structure shared by all evaluators.
struct GameContext {
    int n = 1;
    bool has_major = false;
    bool shared_obs = false;
};

GameContext make_context(const PnGameSpec& s);
GameContext make_context(const MajGameSpec& s);

// Information set of a role within a context.
std::vector<Obs> information_set(Role role, const GameContext& ctx);

// Throws contract_violation if the policy uses channels outside the player's
// information set.
void check_information_set(const LinearPolicy& p, Role role, const GameContext& ctx);
void check_profile(const Profile& p, const GameContext& ctx);

// ---------------------------------------------------------------------------
// Quadratic cost specifications: sum of weight * (linear combo of channels)^2.
// ---------------------------------------------------------------------------

struct CostTerm {
    double weight = 0.0;
    std::array<double, n_act_channels> combo{};

    double& at(Act a) { return combo[static_cast<int>(a)]; }
    double at(Act a) const { return combo[static_cast<int>(a)]; }
};

struct QuadraticCostSpec {
    std::vector<CostTerm> terms;

    // Pointwise evaluation at given channel values (nonnegative by construction).
    double evaluate(const std::array<double, n_act_channels>& values) const;
};

struct PnCosts {
    QuadraticCostSpec leader;
    QuadraticCostSpec follower;
};

struct MajCosts {
    QuadraticCostSpec leader;
    QuadraticCostSpec major;
    QuadraticCostSpec minor;
};

// leader: r0*(u0)^2 + q0*(u0 + omega0 + mean)^2
// follower: r*(ui)^2 + q*(ui + u0 + omega0 + mean)^2
// Zero-weight terms are dropped.
PnCosts build_pn_costs(const PnGameSpec& spec);

// The three major/minor cost displays, including the leader's qhat0*(u0+uM)^2
// cross term. With shared_obs set, builds the zero-loss variant instead:
// leader: r0*(u0)^2 + q0*(u0 + uM/n + mean + omega0)^2
// minor:  (ui - mean)^2 + (ui - uM)^2
MajCosts build_maj_costs(const MajGameSpec& spec);

// ---------------------------------------------------------------------------
// Solved-equilibrium view used for serialization and the CLI.
// ---------------------------------------------------------------------------

struct EquilibriumSolution {
    std::map<std::string, double> params;
    std::map<std::string, double> residuals;
    int n = 0;
};

// JSON (de)serialization of game specs; keys match the field names
// ("r0","q0","qhat0","r","q","rM","qM","n"). Accepts either a bare spec
// object or a solver output document carrying a "spec" member.
std::string to_json(const PnGameSpec& s);
std::string to_json(const MajGameSpec& s);
PnGameSpec pn_spec_from_json(const std::string& text);
MajGameSpec maj_spec_from_json(const std::string& text);

} // namespace stacklab
