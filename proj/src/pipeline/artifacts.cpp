#include "pipeline/artifacts.hpp"

#include <filesystem>

#include "core/checkpoint.hpp"
#include "core/errors.hpp"
#include "spectrum/emotion.hpp"

namespace affedit::pipeline {

namespace {

void require_exists(const std::string& path, const std::string& producer) {
    if (!std::filesystem::exists(path)) {
        throw IoError("checkpoint not found: " + path + "; produce it with `affedit " +
                      producer + "` first");
    }
}

nlohmann::json categories_json() {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& name : spectrum::category_names()) arr.push_back(name);
    return arr;
}

// Overwrites dst tensors from src entries sharing the given prefix.
void load_params(core::ParamMap& dst, const core::ParamMap& src, const std::string& prefix) {
    for (auto& [name, tensor] : dst) {
        auto it = src.find(prefix + name);
        if (it == src.end()) {
            throw IoError("checkpoint is missing tensor '" + prefix + name + "'");
        }
        if (!(it->second.shape() == tensor.shape())) {
            throw IoError("checkpoint tensor '" + prefix + name + "' has shape " +
                          it->second.shape_str() + ", expected " + tensor.shape_str());
        }
        tensor = it->second;
    }
}

nn::TextEncoderConfig encoder_config_from_json(const nlohmann::json& j) {
    nn::TextEncoderConfig ec;
    ec.channels = j.at("channels").get<int>();
    ec.seq_len = j.at("seq_len").get<int>();
    ec.vocab = j.at("vocab").get<int>();
    ec.heads = j.at("heads").get<int>();
    return ec;
}

nlohmann::json encoder_config_to_json(const nn::TextEncoderConfig& ec) {
    return {{"channels", ec.channels},
            {"seq_len", ec.seq_len},
            {"vocab", ec.vocab},
            {"heads", ec.heads}};
}

}  // namespace

nn::TextEncoder make_request_encoder(const RunConfig& cfg) {
    nn::TextEncoderConfig ec;
    ec.channels = cfg.c_t;
    ec.seq_len = cfg.n_l;
    ec.vocab = cfg.vocab;
    ec.heads = cfg.encoder_heads;
    return nn::TextEncoder(ec, cfg.seed ^ 0x5370ull);
}

nn::TextEncoder make_semantic_encoder(const RunConfig& cfg) {
    nn::TextEncoderConfig ec;
    ec.channels = cfg.c_s;
    ec.seq_len = cfg.n_l;
    ec.vocab = cfg.vocab;
    ec.heads = cfg.encoder_heads;
    return nn::TextEncoder(ec, cfg.seed ^ 0x53E4ull);
}

mapper::EmotionalMapper make_mapper(const RunConfig& cfg) {
    mapper::MapperConfig mc;
    mc.depth = cfg.mapper_depth;
    mc.heads = cfg.mapper_heads;
    mc.c_s = cfg.c_s;
    mc.c_t = cfg.c_t;
    mc.n_l = cfg.n_l;
    return mapper::EmotionalMapper(mc, cfg.seed ^ 0x4D41ull);
}

diffusion::LatentDenoiser make_denoiser(const RunConfig& cfg) {
    diffusion::DenoiserConfig dc;
    dc.latent_channels = cfg.latent_channels;
    dc.grid = cfg.image_size / cfg.patch;
    dc.width = cfg.denoiser_width;
    dc.heads = cfg.denoiser_heads;
    dc.cond_channels = cfg.c_s;
    return diffusion::LatentDenoiser(dc, cfg.seed ^ 0x4445ull);
}

diffusion::PatchAutoencoder make_autoencoder(const RunConfig& cfg) {
    diffusion::AutoencoderConfig ac;
    ac.image_size = cfg.image_size;
    ac.patch = cfg.patch;
    ac.latent_channels = cfg.latent_channels;
    ac.hidden = cfg.ae_hidden;
    return diffusion::PatchAutoencoder(ac, cfg.seed ^ 0x4145ull);
}

diffusion::NoiseSchedule make_schedule(const RunConfig& cfg) {
    diffusion::ScheduleParams sp;
    sp.total_steps = cfg.total_steps;
    sp.kind = diffusion::schedule_kind_from_string(cfg.schedule_kind);
    sp.eta = cfg.eta;
    sp.beta_start = cfg.beta_start;
    sp.beta_end = cfg.beta_end;
    return diffusion::build_schedule(sp);
}

void save_spectrum_checkpoint(const std::string& path, const nn::TextEncoder& encoder,
                              const RunConfig& cfg) {
    core::Checkpoint ck;
    ck.config = {{"kind", "spectrum"},
                 {"seed", cfg.seed},
                 {"encoder", encoder_config_to_json(encoder.config())},
                 {"frozen", encoder.frozen()},
                 {"categories", categories_json()}};
    ck.tensors = encoder.params();
    core::save_checkpoint(path, ck);
}

nn::TextEncoder load_spectrum_checkpoint(const std::string& path) {
    require_exists(path, "build-spectrum");
    core::Checkpoint ck = core::load_checkpoint(path);
    if (ck.config.value("kind", "") != "spectrum") {
        throw IoError(path + " is not a spectrum checkpoint");
    }
    nn::TextEncoder enc(encoder_config_from_json(ck.config.at("encoder")),
                        ck.config.value("seed", 0ull));
    load_params(enc.params(), ck.tensors, "");
    enc.set_frozen(ck.config.value("frozen", true));
    return enc;
}

void save_backbone_checkpoint(const std::string& path, const Backbone& backbone,
                              const RunConfig& cfg) {
    core::Checkpoint ck;
    ck.config = {{"kind", "backbone"},
                 {"seed", cfg.seed},
                 {"autoencoder",
                  {{"image_size", backbone.autoencoder.config().image_size},
                   {"patch", backbone.autoencoder.config().patch},
                   {"latent_channels", backbone.autoencoder.config().latent_channels},
                   {"hidden", backbone.autoencoder.config().hidden}}},
                 {"denoiser",
                  {{"latent_channels", backbone.denoiser.config().latent_channels},
                   {"grid", backbone.denoiser.config().grid},
                   {"width", backbone.denoiser.config().width},
                   {"heads", backbone.denoiser.config().heads},
                   {"cond_channels", backbone.denoiser.config().cond_channels}}},
                 {"semantic_encoder", encoder_config_to_json(backbone.semantic_encoder.config())},
                 {"schedule",
                  {{"total_steps", cfg.total_steps},
                   {"kind", cfg.schedule_kind},
                   {"eta", cfg.eta},
                   {"beta_start", cfg.beta_start},
                   {"beta_end", cfg.beta_end}}},
                 {"categories", categories_json()}};
    for (const auto& [name, tensor] : backbone.autoencoder.params()) {
        ck.tensors.emplace("ae." + name, tensor);
    }
    for (const auto& [name, tensor] : backbone.denoiser.params()) {
        ck.tensors.emplace("den." + name, tensor);
    }
    for (const auto& [name, tensor] : backbone.semantic_encoder.params()) {
        ck.tensors.emplace("sem." + name, tensor);
    }
    core::save_checkpoint(path, ck);
}

Backbone load_backbone_checkpoint(const std::string& path) {
    require_exists(path, "train-backbone");
    core::Checkpoint ck = core::load_checkpoint(path);
    if (ck.config.value("kind", "") != "backbone") {
        throw IoError(path + " is not a backbone checkpoint");
    }
    const auto& aej = ck.config.at("autoencoder");
    diffusion::AutoencoderConfig ac;
    ac.image_size = aej.at("image_size").get<int>();
    ac.patch = aej.at("patch").get<int>();
    ac.latent_channels = aej.at("latent_channels").get<int>();
    ac.hidden = aej.at("hidden").get<int>();

    const auto& dj = ck.config.at("denoiser");
    diffusion::DenoiserConfig dc;
    dc.latent_channels = dj.at("latent_channels").get<int>();
    dc.grid = dj.at("grid").get<int>();
    dc.width = dj.at("width").get<int>();
    dc.heads = dj.at("heads").get<int>();
    dc.cond_channels = dj.at("cond_channels").get<int>();

    const auto& sj = ck.config.at("schedule");
    diffusion::ScheduleParams sp;
    sp.total_steps = sj.at("total_steps").get<int>();
    sp.kind = diffusion::schedule_kind_from_string(sj.at("kind").get<std::string>());
    sp.eta = sj.at("eta").get<real>();
    sp.beta_start = sj.at("beta_start").get<real>();
    sp.beta_end = sj.at("beta_end").get<real>();

    uint64_t seed = ck.config.value("seed", 0ull);
    Backbone backbone{
        diffusion::PatchAutoencoder(ac, seed),
        diffusion::LatentDenoiser(dc, seed),
        nn::TextEncoder(encoder_config_from_json(ck.config.at("semantic_encoder")), seed),
        diffusion::build_schedule(sp)};
    load_params(backbone.autoencoder.params(), ck.tensors, "ae.");
    load_params(backbone.denoiser.params(), ck.tensors, "den.");
    load_params(backbone.semantic_encoder.params(), ck.tensors, "sem.");
    backbone.semantic_encoder.set_frozen(true);
    return backbone;
}

void save_mapper_checkpoint(const std::string& path, const mapper::EmotionalMapper& m,
                            const RunConfig& cfg) {
    core::Checkpoint ck;
    ck.config = {{"kind", "mapper"},
                 {"seed", cfg.seed},
                 {"mapper",
                  {{"depth", m.config().depth},
                   {"heads", m.config().heads},
                   {"c_s", m.config().c_s},
                   {"c_t", m.config().c_t},
                   {"n_l", m.config().n_l}}},
                 {"categories", categories_json()}};
    ck.tensors = m.params();
    core::save_checkpoint(path, ck);
}

mapper::EmotionalMapper load_mapper_checkpoint(const std::string& path) {
    require_exists(path, "train-mapper");
    core::Checkpoint ck = core::load_checkpoint(path);
    if (ck.config.value("kind", "") != "mapper") {
        throw IoError(path + " is not a mapper checkpoint");
    }
    const auto& mj = ck.config.at("mapper");
    mapper::MapperConfig mc;
    mc.depth = mj.at("depth").get<int>();
    mc.heads = mj.at("heads").get<int>();
    mc.c_s = mj.at("c_s").get<int>();
    mc.c_t = mj.at("c_t").get<int>();
    mc.n_l = mj.at("n_l").get<int>();
    mapper::EmotionalMapper m(mc, ck.config.value("seed", 0ull));
    load_params(m.params(), ck.tensors, "");
    return m;
}

}  // namespace affedit::pipeline
