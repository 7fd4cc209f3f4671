#include "cli/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "core/digest.hpp"
#include "core/errors.hpp"
#include "datagen/synthetic.hpp"
#include "dataset/dataset.hpp"
#include "editing/editing.hpp"
#include "evalmetrics/metrics.hpp"
#include "handles/stubs.hpp"
#include "io/image.hpp"
#include "pipeline/artifacts.hpp"
#include "pipeline/config.hpp"
#include "spectrum/spectrum.hpp"
#include "supervision/trainer.hpp"

namespace affedit::cli {

namespace {

namespace fs = std::filesystem;
using pipeline::RunConfig;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << content;
}

std::string artifact_path(const RunConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.checkpoint_dir);
    return (fs::path(cfg.checkpoint_dir) / name).string();
}

void log_config_hash(const RunConfig& cfg, const std::string& command) {
    std::cout << "command=" << command << " config_hash=" << cfg.hash() << "\n";
}

// ---------------------------------------------------------------------------
// Manifest loading
// ---------------------------------------------------------------------------

Tensor load_image_tensor(const std::string& path) {
    return io::image_to_tensor(io::read_png(path));
}

struct TrainingRecord {
    std::string id;
    std::string text;
    std::string image_path;
    std::optional<spectrum::EmotionDistribution> distribution;
};

std::vector<TrainingRecord> load_training_manifest(const std::string& path) {
    if (path.empty()) throw InvalidConfig("paths.manifest is required for this command");
    std::vector<TrainingRecord> out;
    for (const auto& rec : spectrum::load_manifest_jsonl(path)) {
        out.push_back({rec.id, rec.text, rec.image_path, rec.distribution});
    }
    if (out.empty()) throw InvalidInput("manifest is empty: " + path);
    return out;
}

std::shared_ptr<supervision::MllmClient> make_supervisor(const RunConfig& cfg) {
    std::shared_ptr<supervision::MllmClient> base;
    if (cfg.offline || cfg.endpoint.empty()) {
        base = handles::make_offline_supervisor();
    } else {
        supervision::HttpClientConfig hc;
        hc.endpoint = cfg.endpoint;
        hc.api_key_env = cfg.api_key_env;
        hc.timeout_ms = cfg.timeout_ms;
        hc.max_retries = cfg.max_retries;
        hc.min_interval_ms = cfg.min_interval_ms;
        base = std::make_shared<supervision::HttpMllmClient>(hc);
    }
    fs::create_directories(cfg.cache_dir);
    return std::make_shared<supervision::CachedMllmClient>(base, cfg.cache_dir);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_build_spectrum(const RunConfig& cfg) {
    log_config_hash(cfg, "build-spectrum");
    auto records = load_training_manifest(cfg.manifest);

    core::HashTokenizer tokenizer(cfg.vocab, cfg.n_l);
    handles::ColorToneClassifier classifier;
    std::vector<spectrum::LabeledText> data;
    for (const auto& rec : records) {
        spectrum::LabeledText item;
        item.id = rec.id;
        item.token_ids = tokenizer.encode(rec.text);
        if (rec.distribution.has_value()) {
            item.distribution = *rec.distribution;
        } else if (!rec.image_path.empty()) {
            item.distribution =
                spectrum::estimate_distribution(load_image_tensor(rec.image_path), classifier);
        } else {
            throw InvalidInput("record " + rec.id + " has neither distribution nor image_path");
        }
        data.push_back(std::move(item));
    }

    nn::TextEncoder encoder = pipeline::make_request_encoder(cfg);
    spectrum::SpectrumTrainConfig tc;
    tc.epochs = cfg.spectrum_epochs;
    tc.batch_size = cfg.spectrum_batch;
    tc.learning_rate = cfg.spectrum_lr;
    tc.alpha = cfg.triplet_margin;
    tc.seed = cfg.seed;
    auto result = spectrum::train_spectrum(encoder, data, spectrum::WheelGeometry::standard(),
                                           tc);

    save_spectrum_checkpoint(artifact_path(cfg, "spectrum.ckpt"), encoder, cfg);

    std::ostringstream loss_csv;
    loss_csv << "step,loss\n";
    for (const auto& [step, loss] : result.loss_log) loss_csv << step << "," << loss << "\n";
    write_text_file(artifact_path(cfg, "spectrum_loss.csv"), loss_csv.str());

    // pairwise-distance dump over the first samples
    std::vector<spectrum::SpectrumSample> samples;
    for (size_t i = 0; i < data.size() && i < 64; ++i) {
        samples.push_back({spectrum::EmotionalRequest{encoder.encode(data[i].token_ids)},
                           data[i].distribution, data[i].id});
    }
    write_text_file(artifact_path(cfg, "pairwise_distances.csv"),
                    spectrum::pairwise_distance_csv(samples));

    std::cout << "trained spectrum on " << data.size() << " samples over " << result.steps
              << " steps; checkpoint " << artifact_path(cfg, "spectrum.ckpt") << "\n";
    return 0;
}

int cmd_train_backbone(const RunConfig& cfg) {
    log_config_hash(cfg, "train-backbone");
    auto records = load_training_manifest(cfg.manifest);

    std::vector<Tensor> images;
    std::vector<std::string> texts;
    for (const auto& rec : records) {
        if (rec.image_path.empty()) {
            throw InvalidInput("record " + rec.id + " needs image_path for backbone training");
        }
        images.push_back(load_image_tensor(rec.image_path));
        texts.push_back(rec.text);
    }

    pipeline::Backbone backbone{pipeline::make_autoencoder(cfg), pipeline::make_denoiser(cfg),
                                pipeline::make_semantic_encoder(cfg),
                                pipeline::make_schedule(cfg)};

    // stage 1: autoencoder
    std::vector<const Tensor*> image_ptrs;
    for (const auto& img : images) image_ptrs.push_back(&img);
    nn::Adam ae_opt({cfg.ae_lr});
    core::RngStream ae_rng(cfg.seed ^ 0xAE0ull);
    real last_ae_loss = 0;
    for (int step = 0; step < cfg.ae_steps; ++step) {
        last_ae_loss =
            backbone.autoencoder.train_step(image_ptrs, cfg.ae_batch, ae_opt, ae_rng);
    }
    real psnr_db = backbone.autoencoder.roundtrip_psnr(image_ptrs);

    // stage 2: denoiser + semantic encoder on precomputed latents
    core::HashTokenizer tokenizer(cfg.vocab, cfg.n_l);
    std::vector<supervision::BackboneItem> items;
    for (size_t i = 0; i < images.size(); ++i) {
        items.push_back({backbone.autoencoder.encode(images[i]), tokenizer.encode(texts[i])});
    }
    supervision::BackboneTrainConfig bc;
    bc.steps = cfg.backbone_steps;
    bc.batch_size = cfg.backbone_batch;
    bc.learning_rate = cfg.backbone_lr;
    bc.seed = cfg.seed ^ 0xBB0ull;
    auto log = supervision::pretrain_denoiser(backbone.denoiser, backbone.semantic_encoder,
                                              backbone.schedule, items, bc);
    backbone.semantic_encoder.set_frozen(true);

    save_backbone_checkpoint(artifact_path(cfg, "backbone.ckpt"), backbone, cfg);
    write_text_file(artifact_path(cfg, "schedule.csv"), backbone.schedule.to_csv());
    std::ostringstream csv;
    csv << "step,loss\n";
    for (const auto& [step, loss] : log) csv << step << "," << loss << "\n";
    write_text_file(artifact_path(cfg, "backbone_loss.csv"), csv.str());

    std::cout << "autoencoder: " << cfg.ae_steps << " steps, final mse " << last_ae_loss
              << ", round-trip psnr " << psnr_db << " dB\n";
    std::cout << "denoiser: " << log.size() << " steps, final loss "
              << (log.empty() ? 0.0 : log.back().second) << "; checkpoint "
              << artifact_path(cfg, "backbone.ckpt") << "\n";
    return 0;
}

int cmd_train_mapper(const RunConfig& cfg) {
    log_config_hash(cfg, "train-mapper");
    auto records = load_training_manifest(cfg.manifest);

    nn::TextEncoder request_encoder =
        pipeline::load_spectrum_checkpoint(artifact_path(cfg, "spectrum.ckpt"));
    pipeline::Backbone backbone =
        pipeline::load_backbone_checkpoint(artifact_path(cfg, "backbone.ckpt"));

    core::HashTokenizer tokenizer(request_encoder.config().vocab,
                                  request_encoder.config().seq_len);
    auto supervisor = make_supervisor(cfg);
    auto prompts = supervision::default_prompts();

    std::vector<supervision::TrainItem> items;
    int skipped = 0;
    for (const auto& rec : records) {
        if (rec.image_path.empty()) {
            throw InvalidInput("record " + rec.id + " needs image_path for mapper training");
        }
        io::Image png = io::read_png(rec.image_path);
        Tensor image = io::image_to_tensor(png);
        std::vector<uint8_t> png_bytes = io::encode_png_bytes(png);

        auto responses = supervision::collect_responses(rec.id, png_bytes, prompts, *supervisor);
        supervision::encode_responses(responses, tokenizer, backbone.semantic_encoder);

        supervision::TrainItem item;
        item.id = rec.id;
        item.latent = backbone.autoencoder.encode(image);
        auto ids = tokenizer.encode(rec.text);
        item.request_embedding = request_encoder.encode(ids);
        item.semantics_embedding = backbone.semantic_encoder.encode(ids);
        for (const auto& resp : responses) {
            if (!resp.flagged_empty()) item.response_embeddings.push_back(resp.embedding);
        }
        if (item.response_embeddings.empty()) {
            ++skipped;
            continue;
        }
        items.push_back(std::move(item));
    }
    if (skipped > 0) {
        std::cout << "skipped " << skipped << " records with empty supervisor responses\n";
    }

    mapper::EmotionalMapper m = pipeline::make_mapper(cfg);
    supervision::ModelBundle bundle;
    bundle.request_encoder = &request_encoder;
    bundle.semantic_encoder = &backbone.semantic_encoder;
    bundle.mapper = &m;
    bundle.denoiser = &backbone.denoiser;
    bundle.autoencoder = &backbone.autoencoder;
    bundle.schedule = backbone.schedule;
    bundle.denoiser_frozen = true;
    bundle.autoencoder_frozen = true;

    supervision::MapperTrainConfig mc;
    mc.steps = cfg.mapper_steps;
    mc.batch_size = cfg.mapper_batch;
    mc.learning_rate = cfg.mapper_lr;
    mc.weights.beta = cfg.loss_beta;
    mc.seed = cfg.seed ^ 0x4D50ull;
    mc.squared_sa = cfg.squared_sa;
    auto log = supervision::train_mapper(bundle, items, mc);

    save_mapper_checkpoint(artifact_path(cfg, "mapper.ckpt"), m, cfg);
    write_text_file(artifact_path(cfg, "mapper_loss.csv"), supervision::train_log_csv(log));

    std::cout << "trained mapper on " << items.size() << " items over " << log.size()
              << " steps; final l_total " << (log.empty() ? 0.0 : log.back().l_total)
              << "; checkpoint " << artifact_path(cfg, "mapper.ckpt") << "\n";
    return 0;
}

struct LoadedPipeline {
    nn::TextEncoder request_encoder;
    pipeline::Backbone backbone;
    mapper::EmotionalMapper mapper_net;
    editing::EditPipeline pipe;
};

std::unique_ptr<LoadedPipeline> load_pipeline(const RunConfig& cfg) {
    auto lp = std::make_unique<LoadedPipeline>(LoadedPipeline{
        pipeline::load_spectrum_checkpoint(artifact_path(cfg, "spectrum.ckpt")),
        pipeline::load_backbone_checkpoint(artifact_path(cfg, "backbone.ckpt")),
        pipeline::load_mapper_checkpoint(artifact_path(cfg, "mapper.ckpt")),
        {}});
    lp->pipe.request_encoder = &lp->request_encoder;
    lp->pipe.semantic_encoder = &lp->backbone.semantic_encoder;
    lp->pipe.mapper = &lp->mapper_net;
    lp->pipe.denoiser = &lp->backbone.denoiser;
    lp->pipe.autoencoder = &lp->backbone.autoencoder;
    lp->pipe.schedule = lp->backbone.schedule;
    lp->pipe.tokenizer = core::HashTokenizer(lp->request_encoder.config().vocab,
                                             lp->request_encoder.config().seq_len);
    return lp;
}

int cmd_edit(const RunConfig& cfg, const std::string& image_path, const std::string& text,
             int t, const std::string& mask_path, const std::string& out_path) {
    log_config_hash(cfg, "edit");
    auto lp = load_pipeline(cfg);

    editing::EditRequest req;
    req.image = load_image_tensor(image_path);
    req.text = text;
    req.noise_level = t;
    req.seed = cfg.seed;

    editing::EditResult result;
    if (!mask_path.empty()) {
        req.mask = io::mask_to_latent_grid(io::read_png(mask_path),
                                           lp->backbone.autoencoder.config().grid());
        result = editing::edit_masked(req, lp->pipe);
    } else {
        result = editing::edit(req, lp->pipe);
    }
    io::write_png(out_path, io::tensor_to_image(result.image));
    std::cout << "edited '" << image_path << "' at t=" << t << " -> " << out_path << "\n";
    return 0;
}

int cmd_generate(const RunConfig& cfg, const std::string& text, const std::string& out_path) {
    log_config_hash(cfg, "generate");
    auto lp = load_pipeline(cfg);
    editing::EditResult result = editing::generate(text, cfg.seed, lp->pipe);
    io::write_png(out_path, io::tensor_to_image(result.image));
    std::cout << "generated -> " << out_path << "\n";
    return 0;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& manifest_path,
                 const std::string& report_prefix) {
    log_config_hash(cfg, "evaluate");
    if (manifest_path.empty()) throw InvalidConfig("evaluate needs --manifest");

    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path);
    std::vector<evalmetrics::EvalRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        evalmetrics::EvalRecord rec;
        rec.id = j.at("id").get<std::string>();
        rec.original = load_image_tensor(j.at("original").get<std::string>());
        rec.edited = load_image_tensor(j.at("edited").get<std::string>());
        rec.target = spectrum::EmotionDistribution::from_probs(
            j.at("target_distribution").get<std::vector<real>>());
        rec.text = j.value("text", "");
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw InvalidInput("evaluation manifest is empty");

    // backbone bottleneck features when available, raw pixels otherwise
    std::optional<pipeline::Backbone> backbone;
    std::unique_ptr<evalmetrics::FeatureExtractor> features;
    if (fs::exists(artifact_path(cfg, "backbone.ckpt"))) {
        backbone = pipeline::load_backbone_checkpoint(artifact_path(cfg, "backbone.ckpt"));
        features = std::make_unique<handles::BottleneckFeatureExtractor>(&backbone->autoencoder);
    } else {
        features = std::make_unique<handles::PixelFeatureExtractor>();
    }
    handles::ChannelMeanProbClassifier object_cls(4.0);
    handles::UniformProbClassifier scene_cls(365);
    handles::ColorToneClassifier emotion_cls;

    evalmetrics::EvalHandles h;
    h.feature_extractor = features.get();
    h.object_classifier = &object_cls;
    h.scene_classifier = &scene_cls;
    h.emotion_classifier = &emotion_cls;

    auto direction = cfg.kld_direction == "target-given-predicted"
                         ? evalmetrics::KldDirection::TargetGivenPredicted
                         : evalmetrics::KldDirection::PredictedGivenTarget;
    evalmetrics::EvalReport report =
        evalmetrics::evaluate_suite(records, h, cfg.hash(), cfg.kld_eps, direction);

    write_text_file(report_prefix + ".json", report.to_json().dump(2) + "\n");
    write_text_file(report_prefix + ".csv", report.per_record_csv());
    std::cout << report.to_json().dump() << "\n";
    return report.errors.empty() ? 0 : 2;
}

int cmd_dataset_annotate(const RunConfig& cfg) {
    log_config_hash(cfg, "dataset annotate");
    auto records = load_training_manifest(cfg.manifest);
    dataset::RecordStore store(cfg.record_store);
    auto supervisor = make_supervisor(cfg);

    int annotated = 0, pending = 0;
    for (const auto& rec : records) {
        if (rec.image_path.empty()) {
            throw InvalidInput("record " + rec.id + " needs image_path for annotation");
        }
        std::vector<uint8_t> bytes = io::encode_png_bytes(io::read_png(rec.image_path));
        auto out = dataset::annotate_cot(rec.id, rec.image_path, bytes, *supervisor, store);
        (out.status == dataset::RecordStatus::Annotated ? annotated : pending)++;
    }
    std::cout << "annotated " << annotated << " records, " << pending << " pending; store "
              << cfg.record_store << "\n";
    return 0;
}

handles::ScoreTableRetriever load_score_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open retrieval scores: " + path);
    handles::ScoreTableRetriever retriever(0.0);
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        retriever.set_score(j.at("text").get<std::string>(),
                            j.at("image").get<std::string>(), j.at("score").get<real>());
    }
    return retriever;
}

int cmd_dataset_validate(const RunConfig& cfg) {
    log_config_hash(cfg, "dataset validate");
    if (cfg.lexicon.empty()) throw InvalidConfig("dataset validate needs paths.lexicon");
    if (cfg.retrieval_scores.empty()) {
        throw InvalidConfig("dataset validate needs paths.retrieval_scores");
    }

    dataset::RecordStore store(cfg.record_store);
    auto lexicon = dataset::PolarityLexicon::from_tsv(cfg.lexicon);
    auto text_cls = handles::KeywordTextClassifier::with_default_lexicon();
    handles::ColorToneClassifier image_cls;
    auto retriever = load_score_table(cfg.retrieval_scores);
    auto wheel = spectrum::WheelGeometry::standard();

    dataset::ValidatorHandles handles;
    handles.lexicon = &lexicon;
    handles.text_classifier = &text_cls;
    handles.image_classifier = &image_cls;
    handles.retriever = &retriever;
    handles.wheel = &wheel;
    handles.emotion_region_level = cfg.emotion_region_level;
    handles.retrieval_top_k = cfg.retrieval_top_k;
    handles.required_distractors = cfg.required_distractors;

    auto all = store.all();
    std::vector<std::string> ids;
    for (const auto& rec : all) ids.push_back(rec.id);

    int validated = 0, rejected = 0, untouched = 0;
    for (const auto& rec : all) {
        if (rec.status != dataset::RecordStatus::Annotated) {
            ++untouched;
            continue;
        }
        // seeded per-record distractor sample from the other records
        std::vector<std::string> others;
        for (const auto& id : ids) {
            if (id != rec.id) others.push_back(id);
        }
        core::RngStream rng(cfg.seed ^ core::fnv1a(rec.id));
        std::vector<std::string> distractors;
        if (static_cast<int>(others.size()) < cfg.required_distractors) {
            throw InvalidConfig("record " + rec.id + ": need " +
                                std::to_string(cfg.required_distractors) +
                                " distractors, corpus has " + std::to_string(others.size()));
        }
        auto perm = rng.permutation(others.size());
        for (int k = 0; k < cfg.required_distractors; ++k) {
            distractors.push_back(others[perm[static_cast<size_t>(k)]]);
        }

        Tensor image = load_image_tensor(rec.image_path);
        auto out = dataset::validate_record(rec, image, distractors, handles, store);
        (out.status == dataset::RecordStatus::Validated ? validated : rejected)++;
    }
    std::cout << "validated " << validated << ", rejected " << rejected << ", untouched "
              << untouched << "\n";
    return 0;
}

int cmd_dataset_split(const RunConfig& cfg, int n, const std::string& out_path) {
    log_config_hash(cfg, "dataset split");
    dataset::RecordStore store(cfg.record_store);
    handles::PixelFeatureExtractor embedder;
    handles::ColorToneClassifier classifier;

    std::vector<dataset::SplitCandidate> candidates;
    for (const auto& rec : store.all()) {
        if (rec.status != dataset::RecordStatus::Validated) continue;
        Tensor image = load_image_tensor(rec.image_path);
        dataset::SplitCandidate c;
        c.id = rec.id;
        c.text = rec.phase3;
        c.distribution = spectrum::estimate_distribution(image, classifier);
        c.embedding = embedder.features(image);
        candidates.push_back(std::move(c));
    }

    auto split = dataset::build_eval_split(candidates, n, cfg.split_percentile);
    std::ostringstream out;
    for (const auto& s : split.samples) {
        nlohmann::json j;
        j["original"] = s.original_id;
        j["target"] = s.target_id;
        j["target_text"] = s.target_text;
        j["target_distribution"] = s.target_distribution.probs.vec();
        j["embedding_distance"] = s.embedding_distance;
        out << j.dump() << "\n";
    }
    write_text_file(out_path, out.str());
    if (split.warning) std::cout << "warning: " << split.warning_message << "\n";
    std::cout << "wrote " << split.samples.size() << " eval samples -> " << out_path << "\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"affective image editing toolkit"};
    app.require_subcommand(1);
    app.fallthrough(true);

    std::string config_path;
    app.add_option("--config", config_path, "TOML config file");
    std::optional<uint64_t> seed_flag;
    app.add_option("--seed", seed_flag, "override config seed");
    std::optional<std::string> endpoint_flag;
    app.add_option("--endpoint", endpoint_flag, "supervisor endpoint URL");
    bool offline_flag = false;
    app.add_flag("--offline", offline_flag, "force the deterministic stub supervisor");
    std::optional<std::string> manifest_flag;
    app.add_option("--manifest", manifest_flag, "JSONL manifest path");

    auto* sc_spectrum = app.add_subcommand("build-spectrum",
                                           "contrastively train the request encoder");
    auto* sc_backbone = app.add_subcommand("train-backbone",
                                           "train the toy autoencoder and denoiser");
    auto* sc_mapper = app.add_subcommand("train-mapper",
                                         "train the emotional mapper (backbone frozen)");

    auto* sc_edit = app.add_subcommand("edit", "edit an image toward an emotional description");
    std::string edit_image, edit_text, edit_mask, edit_out = "edited.png";
    std::optional<int> edit_t;
    sc_edit->add_option("--image", edit_image, "input PNG")->required();
    sc_edit->add_option("--text", edit_text, "emotional description")->required();
    sc_edit->add_option("--t", edit_t, "noise level (default from config)");
    sc_edit->add_option("--mask", edit_mask, "binary mask PNG (local edit)");
    sc_edit->add_option("--out", edit_out, "output PNG");

    auto* sc_generate = app.add_subcommand("generate", "generate from Gaussian noise");
    std::string gen_text, gen_out = "generated.png";
    sc_generate->add_option("--text", gen_text, "emotional description")->required();
    sc_generate->add_option("--out", gen_out, "output PNG");

    auto* sc_evaluate = app.add_subcommand("evaluate", "run FID / Sem-C / KLD over a manifest");
    std::string report_prefix = "report";
    sc_evaluate->add_option("--report-prefix", report_prefix, "report file prefix");

    auto* sc_dataset = app.add_subcommand("dataset", "annotation and validation pipeline");
    sc_dataset->require_subcommand(1);
    auto* sc_annotate = sc_dataset->add_subcommand("annotate", "three-phase CoT annotation");
    auto* sc_validate = sc_dataset->add_subcommand("validate", "run the three validators");
    auto* sc_split = sc_dataset->add_subcommand("split", "build the evaluation split");
    int split_n = 0;
    std::string split_out = "eval_split.jsonl";
    sc_split->add_option("--n", split_n, "number of eval samples")->required();
    sc_split->add_option("--out", split_out, "output JSONL");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        nlohmann::json err{{"error", {{"kind", "usage"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
        if (seed_flag.has_value()) cfg.seed = *seed_flag;
        if (endpoint_flag.has_value()) {
            cfg.endpoint = *endpoint_flag;
            cfg.offline = false;
        }
        if (offline_flag) cfg.offline = true;
        if (manifest_flag.has_value()) cfg.manifest = *manifest_flag;
        cfg.validate();

        if (sc_spectrum->parsed()) return cmd_build_spectrum(cfg);
        if (sc_backbone->parsed()) return cmd_train_backbone(cfg);
        if (sc_mapper->parsed()) return cmd_train_mapper(cfg);
        if (sc_edit->parsed()) {
            return cmd_edit(cfg, edit_image, edit_text, edit_t.value_or(cfg.default_t),
                            edit_mask, edit_out);
        }
        if (sc_generate->parsed()) return cmd_generate(cfg, gen_text, gen_out);
        if (sc_evaluate->parsed()) return cmd_evaluate(cfg, cfg.manifest, report_prefix);
        if (sc_dataset->parsed()) {
            if (sc_annotate->parsed()) return cmd_dataset_annotate(cfg);
            if (sc_validate->parsed()) return cmd_dataset_validate(cfg);
            if (sc_split->parsed()) return cmd_dataset_split(cfg, split_n, split_out);
        }
        throw InvalidConfig("no subcommand dispatched");
    } catch (const Error& e) {
        nlohmann::json err{{"error", {{"kind", e.kind}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        nlohmann::json err{{"error", {{"kind", "internal"}, {"message", e.what()}}}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
}

}  // namespace affedit::cli
