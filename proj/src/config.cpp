#include "tonelab/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>

#include "tonelab/errors.hpp"
#include "tonelab/suite.hpp"

namespace tonelab {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

struct IniEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct IniSection {
    std::string name;  // "" for the global prologue
    std::vector<IniEntry> entries;
};

std::vector<IniSection> parse_ini(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path + ": cannot open file");

    std::vector<IniSection> sections;
    sections.push_back({"", {}});
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#' || text[0] == ';') continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ParseError(path + ":" + std::to_string(line_no) +
                                 ": unterminated section header");
            const std::string name = trim(text.substr(1, text.size() - 2));
            if (name.empty())
                throw ParseError(path + ":" + std::to_string(line_no) + ": empty section name");
            sections.push_back({name, {}});
            continue;
        }
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected key = value, got \"" + text + "\"");
        IniEntry entry;
        entry.key = trim(text.substr(0, eq));
        entry.value = trim(text.substr(eq + 1));
        entry.line = line_no;
        if (entry.key.empty())
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty key");
        sections.back().entries.push_back(std::move(entry));
    }
    return sections;
}

[[noreturn]] void bad_value(const std::string& where, const std::string& value,
                            const std::string& expected) {
    throw ConfigError(where + ": cannot read \"" + value + "\" as " + expected);
}

double to_double(const std::string& where, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) bad_value(where, value, "a number");
        return v;
    } catch (const std::logic_error&) {
        bad_value(where, value, "a number");
    }
}

int to_int(const std::string& where, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(value, &pos);
        if (pos != value.size()) bad_value(where, value, "an integer");
        return static_cast<int>(v);
    } catch (const std::logic_error&) {
        bad_value(where, value, "an integer");
    }
}

std::uint64_t to_seed(const std::string& where, const std::string& value) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(value, &pos);
        if (pos != value.size()) bad_value(where, value, "an unsigned integer");
        return v;
    } catch (const std::logic_error&) {
        bad_value(where, value, "an unsigned integer");
    }
}

bool to_bool(const std::string& where, const std::string& value) {
    if (value == "true" || value == "yes" || value == "1") return true;
    if (value == "false" || value == "no" || value == "0") return false;
    bad_value(where, value, "a boolean (true/false)");
}

}  // namespace

TermSpec parse_term(const std::string& text) {
    const std::string t = trim(text);
    const std::size_t open = t.find('(');
    if (open == std::string::npos || t.back() != ')')
        throw ConfigError("term \"" + t + "\": expected kind(arguments)");
    const std::string kind = trim(t.substr(0, open));
    const std::string body = t.substr(open + 1, t.size() - open - 2);

    std::vector<std::string> positional;
    std::map<std::string, std::string> options;
    std::size_t start = 0;
    while (start <= body.size()) {
        const std::size_t comma = body.find(',', start);
        const std::string arg =
            trim(comma == std::string::npos ? body.substr(start) : body.substr(start, comma - start));
        if (!arg.empty()) {
            const std::size_t eq = arg.find('=');
            if (eq == std::string::npos) {
                positional.push_back(arg);
            } else {
                const std::string key = trim(arg.substr(0, eq));
                const std::string value = trim(arg.substr(eq + 1));
                if (key.empty() || value.empty())
                    throw ConfigError("term \"" + t + "\": malformed option \"" + arg + "\"");
                if (!options.emplace(key, value).second)
                    throw ConfigError("term \"" + t + "\": option \"" + key + "\" repeated");
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }

    const auto take_int = [&](const char* key, int& target) {
        const auto it = options.find(key);
        if (it == options.end()) return;
        target = to_int("term \"" + t + "\" option " + key, it->second);
        options.erase(it);
    };
    const auto take_string = [&](const char* key) -> std::optional<std::string> {
        const auto it = options.find(key);
        if (it == options.end()) return std::nullopt;
        std::string v = it->second;
        options.erase(it);
        return v;
    };
    const auto expect_positional = [&](std::size_t n) {
        if (positional.size() != n)
            throw ConfigError("term \"" + t + "\": expected " + std::to_string(n) +
                              " positional argument" + (n == 1 ? "" : "s") + ", got " +
                              std::to_string(positional.size()));
    };

    TermSpec spec;
    if (kind == "param") {
        expect_positional(1);
        spec.kind = TermKind::parametric;
        spec.factor = positional[0];
    } else if (kind == "re") {
        expect_positional(1);
        spec.kind = TermKind::random_intercept;
        spec.factor = positional[0];
    } else if (kind == "s") {
        expect_positional(1);
        spec.cov = positional[0];
        spec.k = 10;
        if (const auto by = take_string("by")) {
            spec.kind = TermKind::by_smooth;
            spec.factor = *by;
        } else {
            spec.kind = TermKind::smooth;
        }
        take_int("k", spec.k);
    } else if (kind == "ti") {
        expect_positional(2);
        spec.kind = TermKind::tensor;
        spec.cov = positional[0];
        spec.cov2 = positional[1];
        spec.k = 5;
        spec.k2 = 5;
        take_int("k", spec.k);
        take_int("k2", spec.k2);
    } else if (kind == "fs") {
        spec.kind = TermKind::factor_smooth;
        spec.k = 5;
        spec.m = 1;
        if (const auto by = take_string("by")) {
            expect_positional(1);
            spec.cov = positional[0];
            spec.factor = *by;
        } else {
            expect_positional(2);
            spec.cov = positional[0];
            spec.factor = positional[1];
        }
        take_int("k", spec.k);
        take_int("m", spec.m);
    } else {
        throw ConfigError("term \"" + t + "\": unknown kind \"" + kind +
                          "\"; expected param|s|ti|fs|re");
    }

    if (!options.empty())
        throw ConfigError("term \"" + t + "\": unknown option \"" + options.begin()->first + "\"");
    return spec;
}

namespace {

bool is_builtin_model(const std::string& name) {
    static const std::set<std::string> names = {"baseline", "none",      "tone_pattern",
                                               "tone",     "word",      "word_sense",
                                               "sense"};
    return names.count(name) > 0;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
    const std::vector<IniSection> sections = parse_ini(path);
    RunConfig config;

    // Custom spec sections are collected first so [models] can reference
    // them regardless of order.
    std::map<std::string, ModelSpec> custom;
    for (const auto& section : sections) {
        if (section.name.rfind("model ", 0) != 0) continue;
        const std::string name = trim(section.name.substr(6));
        if (name.empty()) throw ConfigError(path + ": [model] section needs a name");
        if (is_builtin_model(name))
            throw ConfigError(path + ": custom model \"" + name + "\" shadows a built-in name");
        ModelSpec spec;
        spec.name = name;
        spec.core = "custom";
        for (const auto& entry : section.entries) {
            if (entry.key != "term")
                throw ConfigError(path + ":" + std::to_string(entry.line) + ": [model " + name +
                                  "] only takes term keys, got \"" + entry.key + "\"");
            spec.terms.push_back(parse_term(entry.value));
        }
        if (spec.terms.empty())
            throw ConfigError(path + ": [model " + name + "] has no terms");
        if (!custom.emplace(name, std::move(spec)).second)
            throw ConfigError(path + ": [model " + name + "] defined twice");
    }

    std::string scale_name = config.scale.name();
    double ref_hz = config.scale.ref_hz;

    for (const auto& section : sections) {
        if (section.name.rfind("model ", 0) == 0) continue;
        for (const auto& entry : section.entries) {
            const std::string where =
                path + ":" + std::to_string(entry.line) + ": " +
                (section.name.empty() ? entry.key : section.name + "." + entry.key);
            const std::string& v = entry.value;
            const auto unknown = [&]() {
                throw ConfigError(where + ": unknown key");
            };
            if (section.name.empty()) {
                if (entry.key == "seed") config.seed = to_seed(where, v);
                else if (entry.key == "threads") config.threads = to_int(where, v);
                else if (entry.key == "outdir") config.outdir = v;
                else unknown();
            } else if (section.name == "data") {
                if (entry.key == "tokens") config.tokens_path = v;
                else if (entry.key == "samples") config.samples_path = v;
                else if (entry.key == "embeddings") config.embeddings_path = v;
                else if (entry.key == "ground_truth") config.ground_truth_path = v;
                else if (entry.key == "outdir") config.outdir = v;
                else unknown();
            } else if (section.name == "scale") {
                if (entry.key == "scale") scale_name = v;
                else if (entry.key == "ref_hz") ref_hz = to_double(where, v);
                else unknown();
            } else if (section.name == "preprocess") {
                if (entry.key == "enabled") config.preprocess_enabled = to_bool(where, v);
                else if (entry.key == "octave_threshold")
                    config.preprocess.octave_threshold = to_double(where, v);
                else if (entry.key == "min_samples")
                    config.preprocess.min_samples = to_int(where, v);
                else if (entry.key == "cap_per_word")
                    config.preprocess.cap_per_word = to_int(where, v);
                else if (entry.key == "min_word_freq")
                    config.preprocess.min_word_freq = to_int(where, v);
                else if (entry.key == "min_sense_support")
                    config.preprocess.min_sense_support = to_int(where, v);
                else unknown();
            } else if (section.name == "fit") {
                if (entry.key == "core") config.core = v;
                else if (entry.key == "rho") config.rho = to_double(where, v);
                else if (entry.key == "estimate_rho") config.estimate_rho = to_bool(where, v);
                else if (entry.key == "fs_ridge_ratio")
                    config.fs_ridge_ratio = to_double(where, v);
                else unknown();
            } else if (section.name == "models") {
                if (entry.key != "model") unknown();
                if (is_builtin_model(v)) {
                    config.models.push_back(build_spec(core_from_name(v)));
                } else {
                    const auto it = custom.find(v);
                    if (it == custom.end())
                        throw ConfigError(where + ": unknown model \"" + v +
                                          "\" (no built-in and no [model " + v + "] section)");
                    config.models.push_back(it->second);
                }
            } else if (section.name == "cv") {
                if (entry.key == "runs") config.cv_runs = to_int(where, v);
                else if (entry.key == "holdout") config.cv_holdout = to_double(where, v);
                else unknown();
            } else if (section.name == "dlm") {
                if (entry.key == "runs") config.dlm_runs = to_int(where, v);
                else if (entry.key == "holdout") config.dlm_holdout = to_double(where, v);
                else if (entry.key == "ridge") config.dlm_ridge = to_double(where, v);
                else if (entry.key == "pool_mode") config.pool_mode = v;
                else if (entry.key == "permutation_runs")
                    config.permutation_runs = to_int(where, v);
                else if (entry.key == "source") {
                    const std::size_t eq = v.find('=');
                    if (eq == std::string::npos || eq == 0 || eq + 1 == v.size())
                        throw ConfigError(where + ": source must be label=path, got \"" + v + "\"");
                    config.dlm_sources.push_back({trim(v.substr(0, eq)), trim(v.substr(eq + 1))});
                } else unknown();
            } else if (section.name == "synth") {
                if (entry.key == "speakers") config.gen.n_speakers = to_int(where, v);
                else if (entry.key == "words") config.gen.n_words = to_int(where, v);
                else if (entry.key == "senses_per_word")
                    config.gen.senses_per_word = to_int(where, v);
                else if (entry.key == "embedding_dim")
                    config.gen.embedding_dim = to_int(where, v);
                else if (entry.key == "noise_sigma") config.gen.noise_sigma = to_double(where, v);
                else if (entry.key == "ar1_rho") config.gen.ar1_rho = to_double(where, v);
                else if (entry.key == "signature_amplitude")
                    config.gen.signature_amplitude = to_double(where, v);
                else if (entry.key == "tone_amplitude")
                    config.gen.tone_amplitude = to_double(where, v);
                else if (entry.key == "zipf_mass") config.gen.zipf_mass = to_double(where, v);
                else if (entry.key == "zipf_exponent")
                    config.gen.zipf_exponent = to_double(where, v);
                else if (entry.key == "zipf_floor") config.gen.zipf_floor = to_int(where, v);
                else if (entry.key == "zipf_cap") config.gen.zipf_cap = to_int(where, v);
                else unknown();
            } else {
                throw ConfigError(path + ": unknown section [" + section.name + "]");
            }
        }
    }

    config.scale = F0Scale::parse(scale_name, ref_hz);
    config.gen.seed = config.seed;
    if (config.threads < 1) throw ConfigError(path + ": threads must be >= 1");
    return config;
}

void apply_overrides(RunConfig& config, const ConfigOverrides& overrides) {
    if (overrides.seed) {
        config.seed = *overrides.seed;
        config.gen.seed = *overrides.seed;
    }
    if (overrides.outdir) config.outdir = *overrides.outdir;
    if (overrides.threads) {
        if (*overrides.threads < 1) throw ConfigError("threads must be >= 1");
        config.threads = *overrides.threads;
    }
}

}  // namespace tonelab
