#include "tonelab/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "tonelab/corpus.hpp"
#include "tonelab/csv.hpp"
#include "tonelab/embeddings.hpp"
#include "tonelab/errors.hpp"
#include "tonelab/fit.hpp"
#include "tonelab/mapping.hpp"
#include "tonelab/serialize.hpp"
#include "tonelab/suite.hpp"
#include "tonelab/synthgen.hpp"

namespace tonelab {

namespace {

namespace fs = std::filesystem;

std::string out_path(const RunConfig& config, const char* name) {
    return (fs::path(config.outdir) / name).string();
}

void ensure_outdir(const RunConfig& config) {
    std::error_code ec;
    fs::create_directories(config.outdir, ec);
    if (ec || !fs::is_directory(config.outdir))
        throw ConfigError("outdir \"" + config.outdir + "\" is not writable: " + ec.message());
}

Corpus load_inputs(const RunConfig& config) {
    const std::string tokens =
        config.tokens_path.empty() ? out_path(config, "tokens.csv") : config.tokens_path;
    const std::string samples =
        config.samples_path.empty() ? out_path(config, "samples.csv") : config.samples_path;
    Corpus corpus = load_corpus(tokens, samples);
    if (config.preprocess_enabled) {
        auto [kept, report] = apply_preprocessing(corpus, config.preprocess);
        if (kept.tokens.empty())
            throw DataError("preprocessing removed every token (" +
                            std::to_string(report.tokens_in) + " in)");
        corpus = std::move(kept);
    }
    if (corpus.tokens.empty()) throw DataError("corpus has no tokens");
    return corpus;
}

SuiteOptions suite_options(const RunConfig& config) {
    SuiteOptions options;
    options.scale = config.scale;
    options.rho = config.rho;
    options.estimate_rho = config.estimate_rho;
    options.fs_ridge_ratio = config.fs_ridge_ratio;
    options.threads = config.threads;
    return options;
}

ModelSpec spec_for_core(const RunConfig& config, const std::string& core) {
    for (const auto& spec : config.models)
        if (spec.name == core) return spec;
    return build_spec(core_from_name(core));
}

}  // namespace

void cmd_synth(const RunConfig& config) {
    ensure_outdir(config);
    const GenOutput out = generate(config.gen);
    write_corpus(out.corpus, out_path(config, "tokens.csv"), out_path(config, "samples.csv"));
    write_embeddings(out.embeddings, out_path(config, "embeddings.csv"));
    write_ground_truth(out.truth, out_path(config, "ground_truth.json"));
}

void cmd_fit(const RunConfig& config, const std::string& core) {
    ensure_outdir(config);
    const Corpus corpus = load_inputs(config);
    const ModelSpec spec = spec_for_core(config, core.empty() ? config.core : core);

    const auto design = assemble_design(spec, corpus, config.scale);
    FitOptions options;
    options.rho = config.rho;
    options.estimate_rho = config.estimate_rho;
    options.fs_ridge_ratio = config.fs_ridge_ratio;
    const FitResult fit = fit_model(*design, options);

    save_fit(fit, out_path(config, "fit.json"));

    std::string partials = "term\tlevel\tt\tvalue\tse\n";
    for (const auto& term : fit.layout.terms) {
        std::vector<std::string> levels = term.levels;
        if (levels.empty()) levels.push_back("");
        for (const auto& level : levels) {
            const PartialEffect pe = partial_effect(fit, term.spec.label(), level);
            for (std::size_t i = 0; i < pe.grid.size(); ++i) {
                partials += pe.term + "\t" + level + "\t" + format_double(pe.grid[i]) + "\t" +
                            format_double(pe.values[i]) + "\t" + format_double(pe.se[i]) + "\n";
            }
        }
    }
    write_text_file(out_path(config, "partials.tsv"), partials);

    write_contours(denoise_contours(fit, corpus), out_path(config, "contours.tsv"));
}

void cmd_compare(const RunConfig& config) {
    ensure_outdir(config);
    if (config.models.size() < 2)
        throw ConfigError("compare needs at least 2 models listed in [models]");
    const Corpus corpus = load_inputs(config);
    const ComparisonReport report = compare_models(corpus, config.models, suite_options(config));
    write_text_file(out_path(config, "comparison.json"), comparison_json(report));
}

void cmd_cv(const RunConfig& config) {
    ensure_outdir(config);
    if (config.models.empty()) throw ConfigError("cv needs models listed in [models]");
    const Corpus corpus = load_inputs(config);
    const CVReport report = crossvalidate(corpus, config.models, config.cv_runs,
                                          config.cv_holdout, config.seed, suite_options(config));
    write_text_file(out_path(config, "cvreport.json"), cv_json(report));
}

void cmd_dlm(const RunConfig& config) {
    ensure_outdir(config);
    if (config.dlm_sources.empty())
        throw ConfigError("dlm needs contour sources listed in [dlm] (source = label=path)");

    const std::string tokens =
        config.tokens_path.empty() ? out_path(config, "tokens.csv") : config.tokens_path;
    const std::string samples =
        config.samples_path.empty() ? out_path(config, "samples.csv") : config.samples_path;
    const Corpus corpus = load_corpus(tokens, samples);
    std::map<std::string, std::string> word_of;
    for (const auto& token : corpus.tokens) word_of[token.token_id] = token.word;

    const std::string embeddings_path = config.embeddings_path.empty()
                                            ? out_path(config, "embeddings.csv")
                                            : config.embeddings_path;
    const EmbeddingSet embeddings = load_embeddings(embeddings_path);
    std::set<std::string> have(embeddings.token_ids.begin(), embeddings.token_ids.end());

    std::vector<ContourMatrix> sources;
    for (const auto& source : config.dlm_sources) {
        ContourMatrix m = load_contours(source.path);
        m.label = source.label;
        sources.push_back(std::move(m));
    }

    std::vector<std::string> missing;
    for (const auto& id : sources.front().token_ids)
        if (!have.count(id)) missing.push_back(id);
    if (!missing.empty()) {
        std::string msg = "embeddings file is missing tokens:";
        for (const auto& id : missing) msg += " " + id;
        throw DataError(msg);
    }

    DLMOptions options;
    options.ridge = config.dlm_ridge;
    options.holdout = config.dlm_holdout;
    options.permutation_runs = config.permutation_runs;
    options.pool_mode = config.pool_mode;
    options.threads = config.threads;
    const DLMReport report =
        run_dlm_experiment(embeddings, sources, word_of, config.dlm_runs, config.seed, options);
    write_text_file(out_path(config, "evalreport.json"), dlm_json(report));
}

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"pitch contour decomposition and embedding-mapping toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    std::string outdir;
    int threads = 0;
    std::string core;
    app.add_option("--config", config_path, "run configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "override the configured seed");
    auto* outdir_opt = app.add_option("--outdir", outdir, "override the configured outdir");
    auto* threads_opt = app.add_option("--threads", threads, "override the configured threads");

    app.add_subcommand("synth", "generate a synthetic corpus with ground truth");
    auto* fit_cmd = app.add_subcommand("fit", "fit one model and export partials and contours");
    fit_cmd->add_option("--core", core,
                        "core predictor (none|tone_pattern|word|word_sense) or configured model");
    app.add_subcommand("compare", "fit all configured models and rank them by AIC");
    app.add_subcommand("cv", "stratified cross-validation over the configured models");
    app.add_subcommand("dlm", "train and evaluate the embedding-to-contour mapping");

    std::vector<std::string> argv_storage = {"tonelab"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : argv_storage) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig config;
        if (!config_path.empty()) config = load_run_config(config_path);
        ConfigOverrides overrides;
        if (seed_opt->count() > 0) overrides.seed = seed;
        if (outdir_opt->count() > 0) overrides.outdir = outdir;
        if (threads_opt->count() > 0) overrides.threads = threads;
        apply_overrides(config, overrides);

        if (app.got_subcommand("synth")) cmd_synth(config);
        else if (app.got_subcommand("fit")) cmd_fit(config, core);
        else if (app.got_subcommand("compare")) cmd_compare(config);
        else if (app.got_subcommand("cv")) cmd_cv(config);
        else cmd_dlm(config);
        return 0;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 70;
    }
}

}  // namespace tonelab
