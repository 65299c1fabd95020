#pragma once

#include <string>
#include <vector>

namespace tonelab {

enum class ScaleKind { hz, log, semitone, erb, mel, bark };

struct F0Scale {
    ScaleKind kind = ScaleKind::log;
    double ref_hz = 50.0;  // semitone reference

    static F0Scale parse(const std::string& name, double ref_hz = 50.0);
    std::string name() const;
};

double transform_f0(double f0_hz, const F0Scale& scale);
double inverse_transform(double value, const F0Scale& scale);

// Affine map of sample times onto [0,1]; first -> 0, last -> 1.
std::vector<double> normalize_time(const std::vector<double>& times);

// exp(intercept + max) - exp(intercept + min) for a log-scale contour.
double hz_span(const std::vector<double>& contour_log, double intercept_log);

}  // namespace tonelab
