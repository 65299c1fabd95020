#include "tonelab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "tonelab/csv.hpp"
#include "tonelab/errors.hpp"
#include "tonelab/rng.hpp"

namespace tonelab {

namespace {

const std::vector<std::string> kTokenHeader = {
    "token_id", "word",    "sense",  "tone",        "prev_tone", "next_tone",
    "vowel",    "speaker", "gender", "duration_ms", "utt_pos"};
const std::vector<std::string> kSampleHeader = {"token_id", "time_ms", "f0_hz"};

bool valid_tone(const std::string& t) {
    return t.size() == 2 && t[0] == 'T' && t[1] >= '0' && t[1] <= '4';
}

std::optional<std::string> parse_opt_tone(CsvReader& r, const std::string& field,
                                          std::size_t column1) {
    if (field == "NULL") return std::nullopt;
    if (!valid_tone(field)) r.fail(column1, "expected T0..T4 or NULL, got \"" + field + "\"");
    return field;
}

void sorted_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::string tone_sequence_level(const std::optional<std::string>& prev,
                                const std::string& cur,
                                const std::optional<std::string>& next) {
    auto digit = [](const std::optional<std::string>& t) -> std::string {
        return t ? t->substr(1) : "NULL";
    };
    return digit(prev) + "-" + cur.substr(1) + "-" + digit(next);
}

void Corpus::rebuild_registries() {
    words.clear();
    senses.clear();
    speakers.clear();
    tone_seqs.clear();
    vowels.clear();
    tones.clear();
    for (const auto& t : tokens) {
        words.push_back(t.word);
        senses.push_back(t.sense);
        speakers.push_back(t.speaker);
        tone_seqs.push_back(tone_sequence_level(t.prev_tone, t.tone, t.next_tone));
        vowels.push_back(t.vowel);
        tones.push_back(t.tone);
    }
    sorted_unique(words);
    sorted_unique(senses);
    sorted_unique(speakers);
    sorted_unique(tone_seqs);
    sorted_unique(vowels);
    sorted_unique(tones);
}

const TokenRecord* Corpus::find_token(const std::string& token_id) const {
    for (const auto& t : tokens)
        if (t.token_id == token_id) return &t;
    return nullptr;
}

Corpus load_corpus(const std::string& tokens_path, const std::string& samples_path) {
    Corpus corpus;
    std::map<std::string, std::size_t> index;  // token_id -> position

    CsvReader tr(tokens_path, kTokenHeader);
    std::vector<std::string> f;
    while (tr.next_row(f)) {
        TokenRecord t;
        t.token_id = f[0];
        if (t.token_id.empty()) tr.fail(1, "empty token_id");
        t.word = f[1];
        t.sense = f[2];
        if (!valid_tone(f[3])) tr.fail(4, "expected T0..T4, got \"" + f[3] + "\"");
        t.tone = f[3];
        t.prev_tone = parse_opt_tone(tr, f[4], 5);
        t.next_tone = parse_opt_tone(tr, f[5], 6);
        if (f[6] != "a" && f[6] != "i" && f[6] != "u" && f[6] != kSchwa)
            tr.fail(7, "unknown vowel \"" + f[6] + "\"");
        t.vowel = f[6];
        t.speaker = f[7];
        if (f[8] != "F" && f[8] != "M") tr.fail(9, "gender must be F or M, got \"" + f[8] + "\"");
        t.gender = f[8];
        t.duration_s = tr.as_double(f[9], 10) / 1000.0;
        if (!(t.duration_s > 0.0)) tr.fail(10, "duration must be positive");
        t.utt_pos = tr.as_double(f[10], 11);
        if (t.utt_pos < 0.0 || t.utt_pos > 1.0) tr.fail(11, "utt_pos outside [0,1]");
        if (index.count(t.token_id))
            throw DataError(tokens_path + ": duplicate token_id " + t.token_id);
        index[t.token_id] = corpus.tokens.size();
        corpus.tokens.push_back(std::move(t));
    }

    CsvReader sr(samples_path, kSampleHeader);
    std::vector<std::string> orphans;
    while (sr.next_row(f)) {
        const auto it = index.find(f[0]);
        if (it == index.end()) {
            if (std::find(orphans.begin(), orphans.end(), f[0]) == orphans.end())
                orphans.push_back(f[0]);
            continue;
        }
        PitchSample s;
        s.time_s = sr.as_double(f[1], 2) / 1000.0;
        s.f0_hz = sr.as_double(f[2], 3);
        if (!(s.f0_hz > 0.0)) sr.fail(3, "f0_hz must be positive");
        corpus.tokens[it->second].samples.push_back(s);
    }
    if (!orphans.empty()) {
        std::ostringstream msg;
        msg << samples_path << ": orphan sample token_id=";
        for (std::size_t i = 0; i < orphans.size(); ++i) msg << (i ? "," : "") << orphans[i];
        throw DataError(msg.str());
    }

    for (auto& t : corpus.tokens) {
        if (t.samples.empty())
            throw DataError(tokens_path + ": token " + t.token_id + " has no samples");
        std::sort(t.samples.begin(), t.samples.end(),
                  [](const PitchSample& a, const PitchSample& b) { return a.time_s < b.time_s; });
        for (std::size_t i = 1; i < t.samples.size(); ++i)
            if (!(t.samples[i - 1].time_s < t.samples[i].time_s))
                throw DataError(samples_path + ": token " + t.token_id +
                                " has non-increasing sample times");
    }

    corpus.rebuild_registries();
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& tokens_path,
                  const std::string& samples_path) {
    std::ostringstream tok;
    for (std::size_t i = 0; i < kTokenHeader.size(); ++i)
        tok << (i ? "," : "") << kTokenHeader[i];
    tok << "\n";
    for (const auto& t : corpus.tokens) {
        tok << t.token_id << "," << t.word << "," << t.sense << "," << t.tone << ","
            << (t.prev_tone ? *t.prev_tone : "NULL") << ","
            << (t.next_tone ? *t.next_tone : "NULL") << "," << t.vowel << "," << t.speaker
            << "," << t.gender << "," << format_double(t.duration_s * 1000.0) << ","
            << format_double(t.utt_pos) << "\n";
    }
    write_text_file(tokens_path, tok.str());

    std::ostringstream smp;
    smp << "token_id,time_ms,f0_hz\n";
    for (const auto& t : corpus.tokens)
        for (const auto& s : t.samples)
            smp << t.token_id << "," << format_double(s.time_s * 1000.0) << ","
                << format_double(s.f0_hz) << "\n";
    write_text_file(samples_path, smp.str());
}

TokenRecord remove_octave_jumps(const TokenRecord& token, double threshold) {
    if (token.samples.size() < 3) return token;
    std::vector<double> l2(token.samples.size());
    for (std::size_t i = 0; i < token.samples.size(); ++i)
        l2[i] = std::log2(token.samples[i].f0_hz);
    TokenRecord out = token;
    out.samples.clear();
    out.samples.push_back(token.samples.front());
    for (std::size_t i = 1; i + 1 < token.samples.size(); ++i) {
        const bool jump = std::fabs(l2[i] - l2[i - 1]) >= threshold &&
                          std::fabs(l2[i] - l2[i + 1]) >= threshold;
        if (!jump) out.samples.push_back(token.samples[i]);
    }
    out.samples.push_back(token.samples.back());
    return out;
}

std::pair<Corpus, PreprocessReport> apply_preprocessing(const Corpus& corpus,
                                                        const PreprocessRules& rules,
                                                        std::uint64_t seed) {
    PreprocessReport report;
    report.tokens_in = static_cast<std::int64_t>(corpus.tokens.size());
    report.seed = seed;

    std::vector<TokenRecord> tokens;
    tokens.reserve(corpus.tokens.size());
    for (const auto& t : corpus.tokens) {
        TokenRecord cleaned = remove_octave_jumps(t, rules.octave_threshold);
        report.samples_removed_octave +=
            static_cast<std::int64_t>(t.samples.size() - cleaned.samples.size());
        if (static_cast<int>(cleaned.samples.size()) < rules.min_samples) {
            ++report.dropped_min_samples;
            continue;
        }
        tokens.push_back(std::move(cleaned));
    }

    // Per-word cap: round-robin over speakers (sorted) with per-speaker
    // shuffles, RNG forked per word so other words cannot perturb the draw.
    std::map<std::string, std::vector<std::size_t>> by_word;
    for (std::size_t i = 0; i < tokens.size(); ++i) by_word[tokens[i].word].push_back(i);

    Rng root(seed);
    std::set<std::size_t> dropped;
    for (const auto& [word, idxs] : by_word) {
        if (static_cast<int>(idxs.size()) <= rules.cap_per_word) continue;
        Rng rng = root.fork(word);
        std::map<std::string, std::vector<std::size_t>> by_speaker;
        for (std::size_t i : idxs) by_speaker[tokens[i].speaker].push_back(i);
        std::vector<std::vector<std::size_t>> queues;
        for (auto& [spk, q] : by_speaker) {
            rng.shuffle(q);
            queues.push_back(std::move(q));
        }
        std::vector<std::size_t> kept;
        std::size_t round = 0;
        while (static_cast<int>(kept.size()) < rules.cap_per_word) {
            bool any = false;
            for (auto& q : queues) {
                if (round < q.size()) {
                    kept.push_back(q[round]);
                    any = true;
                    if (static_cast<int>(kept.size()) == rules.cap_per_word) break;
                }
            }
            if (!any) break;
            ++round;
        }
        std::set<std::size_t> keep_set(kept.begin(), kept.end());
        for (std::size_t i : idxs)
            if (!keep_set.count(i)) dropped.insert(i);
    }
    report.dropped_cap = static_cast<std::int64_t>(dropped.size());

    std::vector<TokenRecord> capped;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!dropped.count(i)) capped.push_back(std::move(tokens[i]));

    std::map<std::string, int> word_count;
    for (const auto& t : capped) ++word_count[t.word];
    std::vector<TokenRecord> frequent;
    for (auto& t : capped) {
        if (word_count[t.word] < rules.min_word_freq) {
            ++report.dropped_word_freq;
            continue;
        }
        frequent.push_back(std::move(t));
    }

    std::map<std::string, int> sense_count;
    for (const auto& t : frequent) ++sense_count[t.sense];
    Corpus out;
    for (auto& t : frequent) {
        if (sense_count[t.sense] < rules.min_sense_support) {
            ++report.dropped_sense_support;
            continue;
        }
        out.tokens.push_back(std::move(t));
    }

    if (out.tokens.empty()) throw DataError("all tokens filtered");
    out.rebuild_registries();
    report.tokens_out = static_cast<std::int64_t>(out.tokens.size());
    for (const auto& t : out.tokens) ++report.retained_per_word[t.word];
    return {std::move(out), report};
}

}  // namespace tonelab
