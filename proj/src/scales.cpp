#include "tonelab/scales.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tonelab/errors.hpp"

namespace tonelab {

F0Scale F0Scale::parse(const std::string& name, double ref_hz) {
    F0Scale s;
    s.ref_hz = ref_hz;
    if (name == "hz") s.kind = ScaleKind::hz;
    else if (name == "log") s.kind = ScaleKind::log;
    else if (name == "semitone") s.kind = ScaleKind::semitone;
    else if (name == "erb") s.kind = ScaleKind::erb;
    else if (name == "mel") s.kind = ScaleKind::mel;
    else if (name == "bark") s.kind = ScaleKind::bark;
    else throw ConfigError("unknown f0_scale \"" + name + "\"");
    if (s.kind == ScaleKind::semitone && !(s.ref_hz > 0.0))
        throw ConfigError("semitone_ref_hz must be positive");
    return s;
}

std::string F0Scale::name() const {
    switch (kind) {
        case ScaleKind::hz: return "hz";
        case ScaleKind::log: return "log";
        case ScaleKind::semitone: return "semitone";
        case ScaleKind::erb: return "erb";
        case ScaleKind::mel: return "mel";
        case ScaleKind::bark: return "bark";
    }
    return "?";
}

namespace {

double bark_of(double f) {
    return 13.0 * std::atan(0.00076 * f) + 3.5 * std::atan((f / 7500.0) * (f / 7500.0));
}

}  // namespace

double transform_f0(double f0_hz, const F0Scale& scale) {
    if (!(f0_hz > 0.0)) throw std::domain_error("transform_f0: f0 must be positive");
    switch (scale.kind) {
        case ScaleKind::hz: return f0_hz;
        case ScaleKind::log: return std::log(f0_hz);
        case ScaleKind::semitone: return 12.0 * std::log2(f0_hz / scale.ref_hz);
        case ScaleKind::erb: return 21.4 * std::log10(0.00437 * f0_hz + 1.0);
        case ScaleKind::mel: return 2595.0 * std::log10(1.0 + f0_hz / 700.0);
        case ScaleKind::bark: return bark_of(f0_hz);
    }
    throw std::domain_error("transform_f0: bad scale");
}

double inverse_transform(double value, const F0Scale& scale) {
    switch (scale.kind) {
        case ScaleKind::hz:
            if (!(value > 0.0)) throw std::domain_error("inverse_transform: hz must be positive");
            return value;
        case ScaleKind::log:
            return std::exp(value);
        case ScaleKind::semitone:
            return scale.ref_hz * std::exp2(value / 12.0);
        case ScaleKind::erb: {
            const double f = (std::pow(10.0, value / 21.4) - 1.0) / 0.00437;
            if (!(f > 0.0)) throw std::domain_error("inverse_transform: erb value out of range");
            return f;
        }
        case ScaleKind::mel: {
            const double f = 700.0 * (std::pow(10.0, value / 2595.0) - 1.0);
            if (!(f > 0.0)) throw std::domain_error("inverse_transform: mel value out of range");
            return f;
        }
        case ScaleKind::bark: {
            // No closed form; bisect on the monotone forward map to 1e-6 Hz.
            if (!(value > 0.0) || value >= bark_of(1e6))
                throw std::domain_error("inverse_transform: bark value out of range");
            double lo = 1e-9, hi = 1e6;
            while (hi - lo > 1e-6) {
                const double mid = 0.5 * (lo + hi);
                (bark_of(mid) < value ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    throw std::domain_error("inverse_transform: bad scale");
}

std::vector<double> normalize_time(const std::vector<double>& times) {
    if (times.size() < 2)
        throw std::invalid_argument("normalize_time: need at least 2 samples to span [0,1]");
    const double a = times.front(), b = times.back();
    if (!(b > a)) throw std::invalid_argument("normalize_time: times must be strictly increasing");
    std::vector<double> out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) out[i] = (times[i] - a) / (b - a);
    out.front() = 0.0;
    out.back() = 1.0;
    return out;
}

double hz_span(const std::vector<double>& contour_log, double intercept_log) {
    if (contour_log.empty()) return 0.0;
    const auto [mn, mx] = std::minmax_element(contour_log.begin(), contour_log.end());
    return std::exp(intercept_log + *mx) - std::exp(intercept_log + *mn);
}

}  // namespace tonelab
