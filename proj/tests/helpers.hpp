#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "tonelab/rng.hpp"
#include "tonelab/types.hpp"

namespace tltest {

inline tonelab::TokenRecord make_token(std::string id, std::string word, std::string sense,
                                       std::string speaker, std::string gender,
                                       int n_samples = 8, double f0_hz = 200.0,
                                       std::string tone = "T1", std::string vowel = "a") {
    tonelab::TokenRecord t;
    t.token_id = std::move(id);
    t.word = std::move(word);
    t.sense = std::move(sense);
    t.tone = std::move(tone);
    t.vowel = std::move(vowel);
    t.speaker = std::move(speaker);
    t.gender = std::move(gender);
    t.duration_s = 0.005 * (n_samples > 1 ? n_samples - 1 : 1);
    t.utt_pos = 0.5;
    for (int i = 0; i < n_samples; ++i)
        t.samples.push_back({0.005 * i, f0_hz});
    return t;
}

inline std::filesystem::path test_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("tonelab_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small structurally rich corpus: several words, speakers of both genders,
// mixed senses/tones/vowels, varied durations and sample counts.
inline tonelab::Corpus toy_corpus(std::uint64_t seed, int n_words = 6, int n_speakers = 4,
                                  int tokens_per_word = 8) {
    using namespace tonelab;
    Rng r(seed);
    Corpus c;
    const char* vowels[] = {"a", "i", "u"};
    int id = 0;
    for (int w = 0; w < n_words; ++w) {
        char wbuf[8];
        std::snprintf(wbuf, sizeof wbuf, "w%02d", w);
        const std::string word = wbuf;
        const int senses = 1 + (w % 2);
        for (int k = 0; k < tokens_per_word; ++k) {
            TokenRecord tok;
            char ibuf[16];
            std::snprintf(ibuf, sizeof ibuf, "t%05d", id++);
            tok.token_id = ibuf;
            tok.word = word;
            tok.sense = word + "_s" + std::to_string(k % senses);
            tok.tone = "T" + std::to_string(1 + ((w + k) % 4));
            if (r.uniform() > 0.15)
                tok.prev_tone = "T" + std::to_string(1 + static_cast<int>(r.below(4)));
            if (r.uniform() > 0.15)
                tok.next_tone = "T" + std::to_string(1 + static_cast<int>(r.below(4)));
            tok.vowel = vowels[(w + k) % 3];
            const int sp = k % n_speakers;
            tok.speaker = "sp" + std::to_string(sp);
            tok.gender = sp % 2 ? "M" : "F";
            tok.duration_s = 0.05 + 0.1 * r.uniform();
            tok.utt_pos = r.uniform();
            const int ns = 6 + static_cast<int>(r.below(5));
            for (int i = 0; i < ns; ++i) {
                const double tnorm = static_cast<double>(i) / (ns - 1);
                const double f0 = 170.0 + 20.0 * std::sin(6.28 * tnorm + w) +
                                  3.0 * r.normal();
                tok.samples.push_back({0.005 * i, f0 > 60.0 ? f0 : 60.0});
            }
            c.tokens.push_back(std::move(tok));
        }
    }
    c.rebuild_registries();
    return c;
}

}  // namespace tltest
