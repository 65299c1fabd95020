#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tonelab {

inline constexpr const char* kSchwa = "\xc9\x99";  // ə

struct PitchSample {
    double time_s = 0.0;
    double f0_hz = 0.0;
};

struct TokenRecord {
    std::string token_id;  // opaque label; ordering comparisons are lexicographic
    std::string word;
    std::string sense;
    std::string tone;                     // T0..T4
    std::optional<std::string> prev_tone; // T0..T4, empty = utterance edge
    std::optional<std::string> next_tone;
    std::string vowel;                    // a, i, u, ə
    std::string speaker;
    std::string gender;                   // F or M
    double duration_s = 0.0;
    double utt_pos = 0.0;                 // position in utterance, [0,1]
    std::vector<PitchSample> samples;     // sorted by time_s
};

// "P-C-N" with NULL spelled out for utterance edges, tones stripped of the
// T prefix, e.g. (NULL, T4, T2) -> "NULL-4-2".
std::string tone_sequence_level(const std::optional<std::string>& prev,
                                const std::string& cur,
                                const std::optional<std::string>& next);

struct Corpus {
    std::vector<TokenRecord> tokens;
    // Attested factor levels, sorted; rebuilt whenever tokens change.
    std::vector<std::string> words;
    std::vector<std::string> senses;
    std::vector<std::string> speakers;
    std::vector<std::string> tone_seqs;
    std::vector<std::string> vowels;
    std::vector<std::string> tones;

    void rebuild_registries();
    const TokenRecord* find_token(const std::string& token_id) const;
};

struct PreprocessRules {
    double octave_threshold = 0.8;  // octaves, against both neighbors
    int min_samples = 5;
    int cap_per_word = 220;
    int min_word_freq = 10;
    int min_sense_support = 4;
};

struct PreprocessReport {
    std::int64_t tokens_in = 0;
    std::int64_t samples_removed_octave = 0;
    std::int64_t dropped_min_samples = 0;
    std::int64_t dropped_cap = 0;
    std::int64_t dropped_word_freq = 0;
    std::int64_t dropped_sense_support = 0;
    std::int64_t tokens_out = 0;
    std::map<std::string, std::int64_t> retained_per_word;
    std::uint64_t seed = 0;

    std::int64_t dropped_total() const {
        return dropped_min_samples + dropped_cap + dropped_word_freq +
               dropped_sense_support;
    }
};

}  // namespace tonelab
