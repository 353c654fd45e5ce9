#include "tcdl/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tcdl/error.hpp"

namespace tcdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive(double x, const char* what) {
    if (!(x > 0.0)) {
        std::ostringstream os;
        os << what << " requires a positive argument, got " << x;
        throw DomainError(os.str());
    }
}

}  // namespace

Utility Utility::log() { return Utility(UtilityFamily::Log, 0.0, 0.0); }

Utility Utility::power(double alpha) {
    if (!(alpha < 1.0) || alpha == 0.0 || !std::isfinite(alpha))
        throw InputError("power utility needs alpha < 1 and alpha != 0");
    const double shift = alpha < 0.0 ? 1.0 - std::pow(2.0, alpha) / alpha : 0.0;
    return Utility(UtilityFamily::Power, alpha, shift);
}

Utility Utility::parse(const std::string& text) {
    if (text == "log") return log();
    const std::string prefix = "power:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string rest = text.substr(prefix.size());
        std::size_t used = 0;
        double alpha = 0.0;
        try {
            alpha = std::stod(rest, &used);
        } catch (const std::exception&) {
            throw InputError("bad utility alpha '" + rest + "'");
        }
        if (used != rest.size()) throw InputError("bad utility alpha '" + rest + "'");
        return power(alpha);
    }
    throw InputError("unknown utility '" + text + "' (expected log or power:<alpha>)");
}

std::string Utility::name() const {
    if (family_ == UtilityFamily::Log) return "log";
    std::ostringstream os;
    os.precision(17);
    os << "power:" << alpha_;
    return os.str();
}

double Utility::u(double x) const {
    if (!(x > 0.0)) return -kInf;
    if (family_ == UtilityFamily::Log) return std::log(x);
    return std::pow(x, alpha_) / alpha_ + shift_;
}

double Utility::u_prime(double x) const {
    require_positive(x, "U'");
    if (family_ == UtilityFamily::Log) return 1.0 / x;
    return std::pow(x, alpha_ - 1.0);
}

double Utility::u_second(double x) const {
    require_positive(x, "U''");
    if (family_ == UtilityFamily::Log) return -1.0 / (x * x);
    return (alpha_ - 1.0) * std::pow(x, alpha_ - 2.0);
}

double Utility::v(double y) const {
    require_positive(y, "V");
    if (family_ == UtilityFamily::Log) return -std::log(y) - 1.0;
    return (1.0 - alpha_) / alpha_ * std::pow(y, alpha_ / (alpha_ - 1.0)) + shift_;
}

double Utility::v_prime(double y) const { return -i(y); }

double Utility::v_second(double y) const {
    require_positive(y, "V''");
    if (family_ == UtilityFamily::Log) return 1.0 / (y * y);
    return std::pow(y, (2.0 - alpha_) / (alpha_ - 1.0)) / (1.0 - alpha_);
}

double Utility::i(double y) const {
    require_positive(y, "I");
    if (family_ == UtilityFamily::Log) return 1.0 / y;
    return std::pow(y, 1.0 / (alpha_ - 1.0));
}

double Utility::u_at_infinity() const {
    if (family_ == UtilityFamily::Power && alpha_ < 0.0) return shift_;
    return kInf;
}

double Utility::u_at_zero() const {
    if (family_ == UtilityFamily::Power && alpha_ > 0.0) return shift_;
    return -kInf;
}

ElasticityCheck check_rae(const Utility& utility) {
    ElasticityCheck out;
    auto ratio = [&](double x) {
        if (utility.family() == UtilityFamily::Log) return 1.0 / std::log(x);
        const double a = utility.alpha();
        return x * std::pow(x, a - 1.0) / (std::pow(x, a) / a);
    };
    out.value = utility.family() == UtilityFamily::Log ? 0.0 : utility.alpha();
    out.numeric_sup = -kInf;
    for (int k = 2; k <= 8; ++k) {
        const double r = ratio(std::pow(10.0, k));
        out.numeric_sup = std::max(out.numeric_sup, r);
        out.numeric_tail = r;
    }
    out.pass = out.value < 1.0 && out.numeric_sup < 1.0;
    return out;
}

}  // namespace tcdl
