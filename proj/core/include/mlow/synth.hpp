#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlow/dataio.hpp"

namespace mlow {

struct ToneSpec {
    double period = 24.0;  // samples per cycle
    double amplitude = 1.0;
    /// Fixed phase in radians; when unset each channel draws Uniform(-pi, pi).
    std::optional<double> phase;
    /// Per-channel amplitude factor drawn from Uniform(1 - j, 1 + j); 0 keeps
    /// every channel at `amplitude`.
    double amplitude_jitter = 0.0;
};

/// Sum of sinusoids + polynomial trend + Gaussian noise, per channel.
struct SynthSpec {
    std::vector<ToneSpec> tones;
    std::vector<double> trend;  // polynomial coefficients c0 + c1 t + c2 t^2 ...
    double noise_sigma = 0.0;
};

struct SynthResult {
    SeriesTable table;
    /// Generator parameters including the realized per-channel phases.
    nlohmann::json parameters;
};

/// Throws InvalidInput for non-positive periods, negative noise, or non-finite values.
void validate(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& doc);
nlohmann::json synth_spec_to_json(const SynthSpec& spec);

/// Deterministic for a given (spec, length, channels, seed). Channels are
/// named ch0, ch1, ...
SynthResult generate_synthetic(const SynthSpec& spec, std::size_t length, std::size_t channels,
                               std::uint64_t seed);

/// Periods 24 and 168 (unit amplitude), slope 1e-3 per step, noise sigma 0.3.
SynthSpec two_tone_benchmark_spec();

/// Noise-free periods 24 and 168 with +-50% per-channel amplitude jitter, so
/// the two tones do not co-occur at a fixed ratio.
SynthSpec two_tone_component_spec();

}  // namespace mlow
