#pragma once

#include "msrom/error.hpp"

#include <cmath>
#include <functional>
#include <string>

namespace msrom {

/// Sign applied to (u^3 - u)/eps^2 when it is placed on the right-hand side
/// of u_t - div(kappa grad u) = S(u).
enum class SourceSign {
    as_written = 1,   // S(u) = +(u^3 - u)/eps^2
    allen_cahn = -1,  // S(u) = (u - u^3)/eps^2, the dissipative phase-field form
};

inline double sign_value(SourceSign s) { return s == SourceSign::as_written ? 1.0 : -1.0; }

inline std::string to_string(SourceSign s) { return s == SourceSign::as_written ? "as_written" : "allen_cahn"; }

inline SourceSign source_sign_from_string(const std::string& s) {
    if (s == "as_written") return SourceSign::as_written;
    if (s == "allen_cahn") return SourceSign::allen_cahn;
    throw ConfigError("stepper", "unknown source sign '" + s + "' (expected as_written or allen_cahn)");
}

/// Pointwise reaction S(u) with its derivative and the ratio S(u)/u used in
/// the exponential factor. The ratio must be supplied analytically where
/// S(0) = 0 so that no division by u occurs.
struct Nonlinearity {
    std::function<double(double)> source;
    std::function<double(double)> derivative;
    std::function<double(double)> rate;

    static Nonlinearity zero() {
        return {[](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
    }

    static Nonlinearity linear(double c) {
        return {[c](double u) { return c * u; }, [c](double) { return c; }, [c](double) { return c; }};
    }

    static Nonlinearity allen_cahn(double eps, SourceSign sign) {
        if (!(eps > 0.0)) throw ConfigError("stepper", "epsilon must be positive");
        const double s = sign_value(sign) / (eps * eps);
        return {[s](double u) { return s * (u * u * u - u); }, [s](double u) { return s * (3.0 * u * u - 1.0); },
                [s](double u) { return s * (u * u - 1.0); }};
    }

    /// Generic S with S(0) = 0; the ratio falls back to S'(0) for |u| < 1e-12.
    static Nonlinearity guarded(std::function<double(double)> s, std::function<double(double)> ds) {
        auto rate = [s, ds](double u) { return std::abs(u) < 1e-12 ? ds(0.0) : s(u) / u; };
        return {std::move(s), std::move(ds), std::move(rate)};
    }
};

} // namespace msrom
