#include "mlow/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "mlow/error.hpp"

namespace mlow {

void validate(const SynthSpec& spec) {
    for (const ToneSpec& tone : spec.tones) {
        if (!(tone.period > 0.0) || !std::isfinite(tone.period)) throw InvalidInput("tone period must be positive");
        if (!std::isfinite(tone.amplitude)) throw InvalidInput("tone amplitude must be finite");
        if (tone.phase && !std::isfinite(*tone.phase)) throw InvalidInput("tone phase must be finite");
        if (!(tone.amplitude_jitter >= 0.0 && tone.amplitude_jitter <= 1.0)) {
            throw InvalidInput("tone amplitude_jitter must lie in [0, 1]");
        }
    }
    for (double c : spec.trend) {
        if (!std::isfinite(c)) throw InvalidInput("trend coefficients must be finite");
    }
    if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
        throw InvalidInput("noise sigma must be finite and >= 0");
    }
}

SynthSpec synth_spec_from_json(const nlohmann::json& doc) {
    try {
        SynthSpec spec;
        if (!doc.is_object()) throw InvalidInput("synthetic spec must be a JSON object");
        for (const auto& [key, value] : doc.items()) {
            if (key != "tones" && key != "trend" && key != "noise") {
                throw InvalidInput("unknown synthetic spec key '" + key + "' (expected tones, trend, noise)");
            }
        }
        if (doc.contains("tones")) {
            for (const auto& t : doc.at("tones")) {
                ToneSpec tone;
                tone.period = t.at("period").get<double>();
                tone.amplitude = t.value("amplitude", 1.0);
                if (t.contains("phase")) tone.phase = t.at("phase").get<double>();
                tone.amplitude_jitter = t.value("amplitude_jitter", 0.0);
                spec.tones.push_back(tone);
            }
        }
        if (doc.contains("trend")) spec.trend = doc.at("trend").get<std::vector<double>>();
        spec.noise_sigma = doc.value("noise", 0.0);
        validate(spec);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed synthetic spec: ") + e.what());
    }
}

nlohmann::json synth_spec_to_json(const SynthSpec& spec) {
    nlohmann::json tones = nlohmann::json::array();
    for (const ToneSpec& tone : spec.tones) {
        nlohmann::json t{{"period", tone.period}, {"amplitude", tone.amplitude}};
        if (tone.amplitude_jitter > 0.0) t["amplitude_jitter"] = tone.amplitude_jitter;
        if (tone.phase) t["phase"] = *tone.phase;
        tones.push_back(std::move(t));
    }
    return nlohmann::json{{"tones", std::move(tones)}, {"trend", spec.trend}, {"noise", spec.noise_sigma}};
}

SynthResult generate_synthetic(const SynthSpec& spec, std::size_t length, std::size_t channels,
                               std::uint64_t seed) {
    validate(spec);
    if (length < 1) throw InvalidInput("synthetic length must be >= 1");
    if (channels < 1) throw InvalidInput("synthetic channel count must be >= 1");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase_dist(-std::numbers::pi, std::numbers::pi);
    std::normal_distribution<double> noise(0.0, 1.0);

    SynthResult result;
    result.table.values.resize(static_cast<Eigen::Index>(length), static_cast<Eigen::Index>(channels));
    nlohmann::json channel_params = nlohmann::json::array();
    for (std::size_t d = 0; d < channels; ++d) {
        result.table.channel_names.push_back("ch" + std::to_string(d));
        std::vector<double> phases;
        std::vector<double> amplitudes;
        for (const ToneSpec& tone : spec.tones) {
            phases.push_back(tone.phase ? *tone.phase : phase_dist(rng));
            double amplitude = tone.amplitude;
            if (tone.amplitude_jitter > 0.0) {
                std::uniform_real_distribution<double> jitter(1.0 - tone.amplitude_jitter, 1.0 + tone.amplitude_jitter);
                amplitude *= jitter(rng);
            }
            amplitudes.push_back(amplitude);
        }
        for (std::size_t t = 0; t < length; ++t) {
            const auto x = static_cast<double>(t);
            double value = 0.0;
            for (std::size_t i = 0; i < spec.tones.size(); ++i) {
                value += amplitudes[i] *
                         std::cos(2.0 * std::numbers::pi * x / spec.tones[i].period + phases[i]);
            }
            double power = 1.0;
            for (double c : spec.trend) {
                value += c * power;
                power *= x;
            }
            if (spec.noise_sigma > 0.0) value += spec.noise_sigma * noise(rng);
            result.table.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(d)) = value;
        }
        channel_params.push_back({{"name", result.table.channel_names.back()}, {"phases", phases}, {"amplitudes", amplitudes}});
    }
    result.parameters = {
        {"spec", synth_spec_to_json(spec)},
        {"length", length},
        {"channels", channels},
        {"seed", seed},
        {"channel_parameters", std::move(channel_params)},
    };
    return result;
}

SynthSpec two_tone_benchmark_spec() {
    SynthSpec spec;
    spec.tones = {ToneSpec{24.0, 1.0, std::nullopt}, ToneSpec{168.0, 1.0, std::nullopt}};
    spec.trend = {0.0, 1e-3};
    spec.noise_sigma = 0.3;
    return spec;
}

SynthSpec two_tone_component_spec() {
    SynthSpec spec;
    spec.tones = {ToneSpec{24.0, 1.0, std::nullopt, 0.5}, ToneSpec{168.0, 1.0, std::nullopt, 0.5}};
    return spec;
}

}  // namespace mlow
