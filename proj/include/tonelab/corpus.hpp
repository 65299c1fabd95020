#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "tonelab/types.hpp"

namespace tonelab {

// tokens.csv: token_id,word,sense,tone,prev_tone,next_tone,vowel,speaker,
//             gender,duration_ms,utt_pos
// samples.csv: token_id,time_ms,f0_hz
// Durations and times are converted to seconds on load.
Corpus load_corpus(const std::string& tokens_path, const std::string& samples_path);

void write_corpus(const Corpus& corpus, const std::string& tokens_path,
                  const std::string& samples_path);

// Removes interior samples whose log2 f0 differs from BOTH original
// neighbors by at least threshold octaves. Single pass; idempotent.
TokenRecord remove_octave_jumps(const TokenRecord& token, double threshold = 0.8);

// Rules applied in order: octave-jump sample removal -> min_samples ->
// per-word cap -> min_word_freq -> sense support. Deterministic given seed.
std::pair<Corpus, PreprocessReport> apply_preprocessing(const Corpus& corpus,
                                                        const PreprocessRules& rules,
                                                        std::uint64_t seed);

}  // namespace tonelab
