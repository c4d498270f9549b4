#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace hawkes {

// An ordered realization of a point process on the window [0, t_end].
struct EventSequence {
    std::vector<double> times;
    double t_end{0.0};

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }
    [[nodiscard]] bool empty() const noexcept { return times.empty(); }

    // Sorts, drops exact duplicates and checks every timestamp lies in [0, t_end].
    void normalize() {
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        validate();
    }

    void validate() const {
        if (t_end <= 0.0) {
            throw std::invalid_argument("EventSequence: observation window must be positive");
        }
        double prev = -1.0;
        for (double t : times) {
            if (t < 0.0 || t > t_end) {
                throw std::invalid_argument("EventSequence: timestamp outside [0, T]");
            }
            if (t <= prev) {
                throw std::invalid_argument("EventSequence: timestamps must be strictly increasing");
            }
            prev = t;
        }
    }
};

} // namespace hawkes
