#pragma once

#include <stdexcept>
#include <string>

namespace hawkes {

// Cholesky factorization failed; usually bad hyperparameters or missing jitter.
class NotPositiveDefinite : public std::runtime_error {
public:
    explicit NotPositiveDefinite(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solve hit its iteration cap before reaching tolerance.
class NoConvergence : public std::runtime_error {
public:
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Total intensity vanished at an observed event; the model has collapsed.
class DegenerateIntensity : public std::runtime_error {
public:
    explicit DegenerateIntensity(const std::string& what) : std::runtime_error(what) {}
};

// Branching ratio of the triggering kernel is >= 1; realizations would not terminate.
class SupercriticalModel : public std::runtime_error {
public:
    explicit SupercriticalModel(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hawkes
