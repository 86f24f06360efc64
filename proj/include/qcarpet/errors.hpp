#pragma once

#include <stdexcept>
#include <string>

namespace qcarpet {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid argument or precondition violation (out-of-range quantum number,
// position outside the model domain, malformed grid, ...).
struct domain_error : error {
    using error::error;
};

// Coefficient-set construction failure (empty support, duplicate entries).
struct construction_error : error {
    using error::error;
};

// The requested operation is not defined for this model kind.
struct unsupported_model_error : error {
    using error::error;
};

// Classically forbidden point: E < V(x). Carries |Im p| = sqrt(V - E).
class forbidden_region_error : public error {
public:
    forbidden_region_error(const std::string& msg, double imag_magnitude)
        : error(msg), imag_magnitude_(imag_magnitude) {}

    double imaginary_magnitude() const noexcept { return imag_magnitude_; }

private:
    double imag_magnitude_;
};

// n = m with opposite WKB signs: zero-over-zero in the velocity formula.
struct undefined_velocity_error : error {
    using error::error;
};

// Eigen-solver did not converge / bracketing exhausted / a numerical
// self-check failed.
struct numerical_error : error {
    using error::error;
};

// E'(n_bar) = 0: the classical period is undefined.
struct degenerate_spectrum_error : error {
    using error::error;
};

// No velocity bundle at the requested speed.
struct lookup_error : error {
    using error::error;
};

// File I/O failure; the message names the path.
struct io_error : error {
    using error::error;
};

} // namespace qcarpet
