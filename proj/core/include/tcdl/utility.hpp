#pragma once

#include <string>

namespace tcdl {

enum class UtilityFamily { Log, Power };

/// Utility on (0, inf), extended by -inf on (-inf, 0].
///
/// Log:   U(x) = ln x
/// Power: U(x) = x^a / a + c, a < 1, a != 0. For a < 0 the shift c makes U(2) = 1 so that
///        U(inf) = c > 0; for 0 < a < 1, c = 0.
///
/// V is the convex conjugate sup_{x>0} {U(x) - xy} and I = (U')^{-1} = -V'.
class Utility {
public:
    static Utility log();
    static Utility power(double alpha);
    /// Parses "log" or "power:<alpha>"; throws InputError.
    static Utility parse(const std::string& text);

    UtilityFamily family() const noexcept { return family_; }
    double alpha() const noexcept { return alpha_; }
    double shift() const noexcept { return shift_; }
    std::string name() const;

    /// U(x); -inf for x <= 0.
    double u(double x) const;
    /// U'(x); DomainError for x <= 0.
    double u_prime(double x) const;
    double u_second(double x) const;

    /// V(y); DomainError for y <= 0.
    double v(double y) const;
    /// Closed-form V'(y) = -I(y).
    double v_prime(double y) const;
    /// V''(y) = -I'(y) > 0.
    double v_second(double y) const;
    /// Inverse marginal utility I(y) = (U')^{-1}(y).
    double i(double y) const;

    /// V(0+) = U(inf) and V(inf) = U(0+), as extended reals.
    double u_at_infinity() const;
    double u_at_zero() const;

    bool operator==(const Utility&) const = default;

private:
    Utility(UtilityFamily family, double alpha, double shift) : family_(family), alpha_(alpha), shift_(shift) {}

    UtilityFamily family_;
    double alpha_;
    double shift_;
};

struct ElasticityCheck {
    double value = 0.0;         ///< closed-form AE(U) of the unshifted family
    double numeric_tail = 0.0;  ///< x U'(x) / U(x) at the largest grid point
    double numeric_sup = 0.0;   ///< max of x U'(x) / U(x) over the tail grid {1e2, ..., 1e8}
    bool pass = false;
};

/// Reasonable asymptotic elasticity: limsup x U'(x) / U(x) < 1.
/// The ratio is taken on the unshifted family (ln x, x^a / a).
ElasticityCheck check_rae(const Utility& utility);

}  // namespace tcdl
