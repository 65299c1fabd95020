#include "tonelab/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"
#include "tonelab/csv.hpp"
#include "tonelab/errors.hpp"
#include "tonelab/rng.hpp"
#include "tonelab/stats.hpp"

namespace tonelab {

using nlohmann::json;

namespace {

constexpr int kGrid = 100;
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> make_grid() {
    std::vector<double> g(kGrid);
    for (int i = 0; i < kGrid; ++i) g[static_cast<std::size_t>(i)] = i / 99.0;
    return g;
}

// Random cubic polynomial plus one sinusoid harmonic, centered over the grid
// and scaled to a target RMS there; evaluable at arbitrary normalized time.
struct Signature {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0, b = 0, phase = 0;
    int freq = 1;
    double offset = 0.0;
    double scale = 0.0;

    double raw(double t) const {
        return a0 + t * (a1 + t * (a2 + t * a3)) + b * std::sin(kTwoPi * freq * t + phase);
    }
    double eval(double t) const { return (raw(t) - offset) * scale; }
};

Signature draw_signature(Rng rng, double amplitude, const std::vector<double>& grid) {
    Signature s;
    s.a0 = rng.normal();
    s.a1 = rng.normal();
    s.a2 = rng.normal();
    s.a3 = rng.normal();
    s.b = rng.normal();
    s.freq = 1 + static_cast<int>(rng.below(2));
    s.phase = rng.uniform(0.0, kTwoPi);
    double mean = 0.0;
    for (double t : grid) mean += s.raw(t);
    mean /= grid.size();
    double ss = 0.0;
    for (double t : grid) {
        const double c = s.raw(t) - mean;
        ss += c * c;
    }
    double rms = std::sqrt(ss / grid.size());
    if (rms < 1e-3) {
        // Degenerate draw; fall back to a plain sinusoid.
        s.b += 1.0;
        mean = 0.0;
        for (double t : grid) mean += s.raw(t);
        mean /= grid.size();
        ss = 0.0;
        for (double t : grid) {
            const double c = s.raw(t) - mean;
            ss += c * c;
        }
        rms = std::sqrt(ss / grid.size());
    }
    s.offset = mean;
    s.scale = amplitude / rms;
    return s;
}

std::vector<double> tabulate(const Signature& s, const std::vector<double>& grid) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = s.eval(grid[i]);
    return v;
}

// Canonical tone shapes: T1 high level, T2 rising, T3 dipping, T4 falling,
// T0 neutral; level/neutral carry no time-varying component.
struct ToneCurve {
    int shape = 0;  // 0 none, 2 rise, 3 dip, 4 fall
    double offset = 0.0;
    double scale = 0.0;

    double raw(double t) const {
        switch (shape) {
            case 2: return t - 0.5;
            case 3: return std::fabs(2.0 * t - 1.0) - 0.5;
            case 4: return 0.5 - t;
            default: return 0.0;
        }
    }
    double eval(double t) const { return shape == 0 ? 0.0 : (raw(t) - offset) * scale; }
};

ToneCurve make_tone_curve(const std::string& tone, double amplitude,
                          const std::vector<double>& grid) {
    ToneCurve c;
    if (tone == "T2") c.shape = 2;
    else if (tone == "T3") c.shape = 3;
    else if (tone == "T4") c.shape = 4;
    if (c.shape == 0 || amplitude == 0.0) {
        c.shape = 0;
        return c;
    }
    double mean = 0.0;
    for (double t : grid) mean += c.raw(t);
    mean /= grid.size();
    double ss = 0.0;
    for (double t : grid) {
        const double d = c.raw(t) - mean;
        ss += d * d;
    }
    c.offset = mean;
    c.scale = amplitude / std::sqrt(ss / grid.size());
    return c;
}

std::string pad_int(const char* prefix, int value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, value);
    return buf;
}

void validate(const GenConfig& c) {
    if (c.n_speakers < 1) throw ConfigError("n_speakers must be >= 1");
    if (c.n_words < 1) throw ConfigError("n_words must be >= 1");
    if (c.senses_per_word < 1 || c.senses_per_word > 3)
        throw ConfigError("senses_per_word must be in 1..3");
    if (c.embedding_dim < 1) throw ConfigError("embedding_dim must be >= 1");
    if (c.noise_sigma < 0) throw ConfigError("noise_sigma must be >= 0");
    if (!(c.ar1_rho >= 0.0 && c.ar1_rho < 1.0)) throw ConfigError("ar1_rho must be in [0,1)");
    if (c.signature_amplitude < 0) throw ConfigError("signature_amplitude must be >= 0");
    if (c.tone_amplitude < 0) throw ConfigError("tone_amplitude must be >= 0");
    if (c.zipf_mass <= 0 || c.zipf_exponent < 0)
        throw ConfigError("zipf_mass must be > 0 and zipf_exponent >= 0");
    if (c.zipf_floor < 1 || c.zipf_cap < c.zipf_floor)
        throw ConfigError("zipf_floor must be >= 1 and <= zipf_cap");
    if (c.zipf_floor / c.senses_per_word < 4)
        throw ConfigError("zipf_floor too small: every sense needs >= 4 tokens");
}

}  // namespace

GenOutput generate(const GenConfig& config) {
    validate(config);
    const std::vector<double> grid = make_grid();
    const Rng master(config.seed);

    GenOutput out;
    GroundTruth& truth = out.truth;
    truth.grid = grid;
    truth.mu = 5.0;
    truth.position_slope = -0.08;
    truth.duration_coeff = 0.05;
    truth.duration_ref_log = std::log(0.095);
    truth.gender_offset = {{"F", 0.195}, {"M", -0.195}};

    const std::vector<std::string> vowel_cycle = {"a", "i", "u", kSchwa};

    std::vector<std::string> speaker_ids;
    std::vector<std::string> speaker_genders;
    std::vector<Signature> speaker_shapes;
    std::vector<double> speaker_intercepts;
    for (int s = 0; s < config.n_speakers; ++s) {
        const std::string id = pad_int("s", s, 2);
        speaker_ids.push_back(id);
        speaker_genders.push_back(s % 2 == 0 ? "F" : "M");
        Rng rng = master.fork("speaker:" + id);
        speaker_intercepts.push_back(rng.normal(0.0, 0.06));
        speaker_shapes.push_back(draw_signature(rng.fork("shape"), 0.10, grid));
        std::vector<double> curve = tabulate(speaker_shapes.back(), grid);
        for (double& v : curve) v += speaker_intercepts.back();
        truth.speaker_curve[id] = std::move(curve);
    }

    const std::vector<std::string> all_tones = {"T0", "T1", "T2", "T3", "T4"};
    std::map<std::string, ToneCurve> tone_curves;
    for (const auto& tone : all_tones) {
        tone_curves[tone] = make_tone_curve(tone, config.tone_amplitude, grid);
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) v[i] = tone_curves[tone].eval(grid[i]);
        truth.tone_curve[tone] = std::move(v);
    }

    struct WordPlan {
        std::string id;
        std::string tone;
        int n_tokens = 0;
        Signature signature;
        std::vector<std::string> senses;
        std::vector<Signature> sense_half;  // raw half-amplitude curves
        std::vector<int> sense_counts;
        std::vector<double> sense_weights;
    };

    std::vector<WordPlan> words;
    for (int w = 0; w < config.n_words; ++w) {
        WordPlan plan;
        plan.id = pad_int("w", w, 3);
        plan.tone = w % 10 == 9 ? "T0" : "T" + std::to_string(1 + w % 4);
        const double raw_count =
            config.zipf_mass / std::pow(static_cast<double>(w + 1), config.zipf_exponent);
        plan.n_tokens = std::clamp(static_cast<int>(std::lround(raw_count)), config.zipf_floor,
                                   config.zipf_cap);
        plan.signature =
            draw_signature(master.fork("word:" + plan.id), config.signature_amplitude, grid);
        truth.word_signature[plan.id] = tabulate(plan.signature, grid);
        truth.word_tone[plan.id] = plan.tone;

        const int n_senses = 1 + w % config.senses_per_word;
        for (int s = 0; s < n_senses; ++s) {
            const std::string sense = plan.id + "_s" + std::to_string(s);
            plan.senses.push_back(sense);
            plan.sense_half.push_back(draw_signature(master.fork("sense:" + sense),
                                                     config.signature_amplitude / 2.0, grid));
        }
        plan.sense_counts.assign(plan.senses.size(), 0);
        for (int k = 0; k < plan.n_tokens; ++k)
            ++plan.sense_counts[static_cast<std::size_t>(k) % plan.senses.size()];
        for (int c : plan.sense_counts)
            plan.sense_weights.push_back(static_cast<double>(c) / plan.n_tokens);

        // Token-weighted centering: the weighted sense mean is removed so the
        // word-level expectation stays the signature alone.
        for (std::size_t s = 0; s < plan.senses.size(); ++s) {
            std::vector<double> v(grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                double mean = 0.0;
                for (std::size_t q = 0; q < plan.senses.size(); ++q)
                    mean += plan.sense_weights[q] * plan.sense_half[q].eval(grid[i]);
                v[i] = plan.sense_half[s].eval(grid[i]) - mean;
            }
            truth.sense_offset[plan.senses[s]] = std::move(v);
        }
        words.push_back(std::move(plan));
    }

    const double innovation_sd = config.noise_sigma * std::sqrt(1.0 - config.ar1_rho * config.ar1_rho);

    std::vector<Eigen::RowVectorXd> embedding_rows;
    int token_counter = 0;
    for (const auto& word : words) {
        Eigen::RowVectorXd word_centroid(config.embedding_dim);
        {
            Rng rng = master.fork("emb_word:" + word.id);
            for (int i = 0; i < config.embedding_dim; ++i) word_centroid(i) = rng.normal();
        }
        std::vector<Eigen::RowVectorXd> sense_centroids;
        for (const auto& sense : word.senses) {
            Rng rng = master.fork("emb_sense:" + sense);
            Eigen::RowVectorXd c = word_centroid;
            for (int i = 0; i < config.embedding_dim; ++i) c(i) += 0.5 * rng.normal();
            sense_centroids.push_back(std::move(c));
        }

        for (int k = 0; k < word.n_tokens; ++k) {
            TokenRecord tok;
            tok.token_id = pad_int("t", token_counter, 6);
            tok.word = word.id;
            const std::size_t sense_idx = static_cast<std::size_t>(k) % word.senses.size();
            tok.sense = word.senses[sense_idx];
            tok.tone = word.tone;
            tok.vowel = vowel_cycle[static_cast<std::size_t>(token_counter) % vowel_cycle.size()];

            Rng rng = master.fork("token:" + tok.token_id);
            const int sp = static_cast<int>(rng.below(static_cast<std::uint64_t>(config.n_speakers)));
            tok.speaker = speaker_ids[static_cast<std::size_t>(sp)];
            tok.gender = speaker_genders[static_cast<std::size_t>(sp)];
            tok.duration_s = std::clamp(rng.lognormal(std::log(0.095), 0.45), 0.03, 0.5);
            tok.utt_pos = rng.uniform();
            if (rng.uniform() >= 0.15)
                tok.prev_tone = "T" + std::to_string(rng.below(5));
            if (rng.uniform() >= 0.15)
                tok.next_tone = "T" + std::to_string(rng.below(5));

            const std::string seq_level = tone_sequence_level(tok.prev_tone, tok.tone, tok.next_tone);
            auto seq_it = truth.toneseq_intercept.find(seq_level);
            if (seq_it == truth.toneseq_intercept.end()) {
                Rng seq_rng = master.fork("toneseq:" + seq_level);
                seq_it = truth.toneseq_intercept.emplace(seq_level, seq_rng.normal(0.0, 0.03)).first;
            }

            const double gender_off = truth.gender_offset.at(tok.gender);
            const double log_dur = std::log(tok.duration_s);
            const double pos_effect = truth.position_slope * (tok.utt_pos - 0.5);
            const int n_samples = static_cast<int>(std::floor(tok.duration_s / 0.005 + 1e-9)) + 1;

            double noise = rng.normal(0.0, config.noise_sigma);
            for (int i = 0; i < n_samples; ++i) {
                if (i > 0) noise = config.ar1_rho * noise + rng.normal(0.0, innovation_sd);
                const double tn = n_samples > 1 ? static_cast<double>(i) / (n_samples - 1) : 0.0;
                double sense_mean = 0.0;
                for (std::size_t q = 0; q < word.senses.size(); ++q)
                    sense_mean += word.sense_weights[q] * word.sense_half[q].eval(tn);
                const double sense_off = word.sense_half[sense_idx].eval(tn) - sense_mean;
                const double log_f0 = truth.mu + gender_off +
                                      speaker_intercepts[static_cast<std::size_t>(sp)] +
                                      speaker_shapes[static_cast<std::size_t>(sp)].eval(tn) +
                                      tone_curves.at(word.tone).eval(tn) + word.signature.eval(tn) +
                                      sense_off + seq_it->second + pos_effect +
                                      truth.duration_coeff * (tn - 0.5) *
                                          (log_dur - truth.duration_ref_log) +
                                      noise;
                tok.samples.push_back({0.005 * i, std::exp(log_f0)});
            }

            Eigen::RowVectorXd emb = sense_centroids[sense_idx];
            for (int i = 0; i < config.embedding_dim; ++i) emb(i) += 0.25 * rng.normal();
            embedding_rows.push_back(std::move(emb));
            out.embeddings.token_ids.push_back(tok.token_id);

            out.corpus.tokens.push_back(std::move(tok));
            ++token_counter;
        }
    }

    out.corpus.rebuild_registries();
    out.embeddings.e.resize(static_cast<Eigen::Index>(embedding_rows.size()), config.embedding_dim);
    for (std::size_t i = 0; i < embedding_rows.size(); ++i)
        out.embeddings.e.row(static_cast<Eigen::Index>(i)) = embedding_rows[i];
    out.embeddings.rebuild_index();
    return out;
}

void write_ground_truth(const GroundTruth& truth, const std::string& path) {
    json j;
    j["grid"] = truth.grid;
    j["word_signature"] = truth.word_signature;
    j["sense_offset"] = truth.sense_offset;
    j["speaker_curve"] = truth.speaker_curve;
    j["tone_curve"] = truth.tone_curve;
    j["toneseq_intercept"] = truth.toneseq_intercept;
    j["gender_offset"] = truth.gender_offset;
    j["word_tone"] = truth.word_tone;
    j["mu"] = truth.mu;
    j["position_slope"] = truth.position_slope;
    j["duration_coeff"] = truth.duration_coeff;
    j["duration_ref_log"] = truth.duration_ref_log;
    write_text_file(path, j.dump(2) + "\n");
}

GroundTruth load_ground_truth(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    json j;
    try {
        in >> j;
        GroundTruth truth;
        truth.grid = j.at("grid").get<std::vector<double>>();
        truth.word_signature =
            j.at("word_signature").get<std::map<std::string, std::vector<double>>>();
        truth.sense_offset = j.at("sense_offset").get<std::map<std::string, std::vector<double>>>();
        truth.speaker_curve =
            j.at("speaker_curve").get<std::map<std::string, std::vector<double>>>();
        truth.tone_curve = j.at("tone_curve").get<std::map<std::string, std::vector<double>>>();
        truth.toneseq_intercept = j.at("toneseq_intercept").get<std::map<std::string, double>>();
        truth.gender_offset = j.at("gender_offset").get<std::map<std::string, double>>();
        truth.word_tone = j.at("word_tone").get<std::map<std::string, std::string>>();
        truth.mu = j.at("mu").get<double>();
        truth.position_slope = j.at("position_slope").get<double>();
        truth.duration_coeff = j.at("duration_coeff").get<double>();
        truth.duration_ref_log = j.at("duration_ref_log").get<double>();
        return truth;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

std::vector<RecoveryRow> recovery_score(const FitResult& fit, const GroundTruth& truth,
                                        const Corpus* corpus) {
    struct Component {
        const char* name;
        std::string term;
        const std::map<std::string, std::vector<double>>* curves;
    };
    const Component components[] = {
        {"word", "fs(time,word)", &truth.word_signature},
        {"speaker", "fs(time,speaker)", &truth.speaker_curve},
        {"tone", "fs(time,tone)", &truth.tone_curve},
    };

    std::vector<RecoveryRow> rows;
    for (const auto& comp : components) {
        const TermLayout* term = nullptr;
        for (const auto& t : fit.layout.terms)
            if (t.spec.label() == comp.term) term = &t;
        if (!term) continue;
        for (const auto& level : term->levels) {
            const auto it = comp.curves->find(level);
            if (it == comp.curves->end())
                throw DataError(std::string("no ground truth ") + comp.name + " curve for \"" +
                                level + "\"");
            const PartialEffect pe = partial_effect(fit, comp.term, level);
            if (pe.values.size() != it->second.size())
                throw DataError("ground-truth grid length mismatch");
            std::vector<double> fitted = pe.values;
            std::vector<double> target = it->second;
            double mf = 0.0, mt = 0.0;
            for (std::size_t i = 0; i < fitted.size(); ++i) {
                mf += fitted[i];
                mt += target[i];
            }
            mf /= fitted.size();
            mt /= target.size();
            double sf = 0.0, st = 0.0;
            for (std::size_t i = 0; i < fitted.size(); ++i) {
                fitted[i] -= mf;
                target[i] -= mt;
                sf += fitted[i] * fitted[i];
                st += target[i] * target[i];
            }
            RecoveryRow row;
            row.component = comp.name;
            row.level = level;
            row.r = (sf > 0.0 && st > 0.0) ? pearson(fitted, target)
                                           : std::numeric_limits<double>::quiet_NaN();
            row.rmse = rmse(fitted, target);
            if (corpus) {
                const std::string name = comp.name;
                for (const auto& tok : corpus->tokens) {
                    const std::string& val =
                        name == "word" ? tok.word : name == "speaker" ? tok.speaker : tok.tone;
                    if (val == level) ++row.n_tokens;
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace tonelab
