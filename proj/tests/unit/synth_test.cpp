#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "mlow/error.hpp"
#include "mlow/spectral.hpp"
#include "mlow/synth.hpp"

namespace {

using namespace mlow;

TEST(Synth, SeedDeterminism) {
    const auto a = generate_synthetic(two_tone_benchmark_spec(), 500, 3, 7);
    const auto b = generate_synthetic(two_tone_benchmark_spec(), 500, 3, 7);
    const auto c = generate_synthetic(two_tone_benchmark_spec(), 500, 3, 8);
    EXPECT_EQ(a.table.values, b.table.values);
    EXPECT_EQ(a.parameters, b.parameters);
    EXPECT_NE(a.table.values, c.table.values);
    EXPECT_EQ(a.table.channel_names, (std::vector<std::string>{"ch0", "ch1", "ch2"}));
}

TEST(Synth, SidecarPhasesReproduceNoiseFreeSeries) {
    SynthSpec spec;
    spec.tones = {ToneSpec{24.0, 1.0, std::nullopt, 0.5}, ToneSpec{168.0, 2.0, 0.3}};
    spec.trend = {0.5, -1e-3};
    const auto r = generate_synthetic(spec, 400, 2, 3);
    for (std::size_t d = 0; d < 2; ++d) {
        const auto& p = r.parameters.at("channel_parameters").at(d);
        EXPECT_DOUBLE_EQ(p.at("phases").at(1).get<double>(), 0.3);
        for (int t : {0, 17, 399}) {
            double expected = 0.5 - 1e-3 * t;
            for (int i = 0; i < 2; ++i) {
                expected += p.at("amplitudes").at(i).get<double>() *
                            std::cos(2.0 * std::numbers::pi * t / spec.tones[i].period + p.at("phases").at(i).get<double>());
            }
            EXPECT_NEAR(r.table.values(t, static_cast<Eigen::Index>(d)), expected, 1e-12);
        }
    }
}

TEST(Synth, BinAlignedTonesLandOnTheirLevels) {
    SynthSpec spec;
    spec.tones = {ToneSpec{24.0, 1.0, std::nullopt}, ToneSpec{168.0, 1.0, std::nullopt}};
    const auto r = generate_synthetic(spec, 336, 1, 1);
    const auto s = compute_spectrum(r.table.channel(0));
    for (Eigen::Index k = 0; k < s.amplitudes.size(); ++k) {
        if (k == 2 || k == 14) {
            EXPECT_NEAR(s.amplitudes[k], 336.0, 1e-9);
        } else {
            EXPECT_NEAR(s.amplitudes[k], 0.0, 1e-9);
        }
    }
}

TEST(Synth, NoiseHasRequestedScale) {
    SynthSpec spec;
    spec.noise_sigma = 0.3;
    const auto r = generate_synthetic(spec, 20000, 1, 5);
    const double mean = r.table.values.mean();
    const double var = (r.table.values.array() - mean).square().mean();
    EXPECT_NEAR(std::sqrt(var), 0.3, 0.01);
}

TEST(Synth, SpecJsonRoundTripAndValidation) {
    const auto spec = two_tone_component_spec();
    const auto back = synth_spec_from_json(synth_spec_to_json(spec));
    ASSERT_EQ(back.tones.size(), 2u);
    EXPECT_EQ(back.tones[0].amplitude_jitter, 0.5);
    EXPECT_EQ(back.tones[1].period, 168.0);
    EXPECT_THROW(synth_spec_from_json(nlohmann::json::parse(R"({"tones":[{"period":-1,"amplitude":1}]})")),
                 InvalidInput);
    EXPECT_THROW(synth_spec_from_json(nlohmann::json::parse(R"({"tone":[]})")), InvalidInput);
    EXPECT_THROW(synth_spec_from_json(nlohmann::json::parse(R"({"noise":-0.5})")), InvalidInput);
    EXPECT_THROW(synth_spec_from_json(nlohmann::json::parse("[1,2]")), InvalidInput);
    EXPECT_THROW(generate_synthetic(spec, 0, 1, 0), InvalidInput);
}

}  // namespace
