#pragma once

#include <stdexcept>
#include <string>

namespace stacklab {

// Solver-level failures: a game instance whose defining linear system cannot
// be solved (singular pivot, vanishing gain denominator, ...).
class degenerate_error : public std::runtime_error {
public:
    explicit degenerate_error(const std::string& what) : std::runtime_error(what) {}
};

class degenerate_game_error : public degenerate_error {
public:
    explicit degenerate_game_error(const std::string& what) : degenerate_error(what) {}
};

class degenerate_gain_error : public degenerate_error {
public:
    explicit degenerate_gain_error(const std::string& what) : degenerate_error(what) {}
};

class degenerate_limit_error : public degenerate_error {
public:
    explicit degenerate_limit_error(const std::string& what) : degenerate_error(what) {}
};

class unsupported_parameterization_error : public degenerate_error {
public:
    explicit unsupported_parameterization_error(const std::string& what) : degenerate_error(what) {}
};

// Misuse of the library API (policy referencing channels outside the player's
// information set, mismatched game/solution pairs, ...).
class contract_violation : public std::logic_error {
public:
    explicit contract_violation(const std::string& what) : std::logic_error(what) {}
};

} // namespace stacklab
