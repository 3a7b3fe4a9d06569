#ifndef ENSCTRL_ERRORS_HPP
#define ENSCTRL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ensctrl {

// Bad arguments, mismatched grids/dimensions, invalid config values.
class validation_error : public std::invalid_argument {
public:
    explicit validation_error(const std::string& msg)
        : std::invalid_argument(msg) {}
};

// A trajectory left the admissible region (|x| > divergence_bound).
class divergence_error : public std::runtime_error {
public:
    divergence_error(const std::string& msg, int member, double time)
        : std::runtime_error(msg), member_index(member), time_of_failure(time) {}

    int member_index;
    double time_of_failure;
};

} // namespace ensctrl

#endif
