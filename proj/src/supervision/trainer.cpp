#include "supervision/trainer.hpp"

#include <cmath>
#include <sstream>

#include "core/errors.hpp"

namespace affedit::supervision {

using ad::Tape;
using ad::Var;

std::vector<SupervisorResponse> collect_responses(const std::string& image_id,
                                                  const std::vector<uint8_t>& image_png,
                                                  const std::vector<SupervisorPrompt>& prompts,
                                                  MllmClient& client) {
    if (prompts.empty()) throw InvalidInput("collect_responses: no prompts configured");
    std::vector<SupervisorResponse> responses;
    responses.reserve(prompts.size());
    for (const SupervisorPrompt& prompt : prompts) {
        MllmQuery query{image_id, image_png, prompt.id, prompt.text};
        SupervisorResponse resp;
        resp.prompt_id = prompt.id;
        resp.text = client.complete(query);
        responses.push_back(std::move(resp));
    }
    return responses;
}

void encode_responses(std::vector<SupervisorResponse>& responses,
                      const core::HashTokenizer& tokenizer,
                      const nn::TextEncoder& semantic_encoder) {
    for (SupervisorResponse& resp : responses) {
        if (resp.flagged_empty()) continue;
        resp.embedding = semantic_encoder.encode(tokenizer.encode(resp.text));
    }
}

void ModelBundle::validate_frozen() const {
    if (!request_encoder || !semantic_encoder || !mapper || !denoiser || !autoencoder) {
        throw InvalidConfig("model bundle is incomplete");
    }
    if (!request_encoder->frozen() || !semantic_encoder->frozen()) {
        throw InvalidConfig("train_step: encoders must be frozen");
    }
    if (!denoiser_frozen || !autoencoder_frozen) {
        throw InvalidConfig("train_step: backbone and autoencoder must be flagged frozen");
    }
}

StepRecord train_step(ModelBundle& models, const std::vector<const TrainItem*>& batch,
                      const LossWeights& weights, nn::Adam& optimizer, core::RngStream& rng,
                      bool squared_sa) {
    models.validate_frozen();
    weights.validate();
    if (batch.empty()) throw EmptyBatch("train_step: empty batch");

    Tape tape;
    nn::Bind mapper_bind(tape, models.mapper->params(), true, "mapper.");
    nn::Bind denoiser_bind(tape, models.denoiser->params(), false);

    Var sa_sum, dm_sum;
    int T = models.schedule.total_steps;
    for (const TrainItem* item : batch) {
        Var request = tape.leaf(item->request_embedding, false);
        Var semantics = tape.leaf(item->semantics_embedding, false);
        Var condition = models.mapper->forward_t(tape, request, semantics, mapper_bind);

        Var sa = sentiment_alignment_loss_t(tape, condition, item->response_embeddings,
                                            squared_sa);
        int t = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(T)));
        Tensor noise = rng.normal_tensor(item->latent.shape());
        Var dm = diffusion_loss_t(tape, item->latent, t, noise, condition, *models.denoiser,
                                  denoiser_bind, models.schedule);

        sa_sum = sa_sum.valid() ? tape.add(sa_sum, sa) : sa;
        dm_sum = dm_sum.valid() ? tape.add(dm_sum, dm) : dm;
    }
    real inv_n = 1.0 / static_cast<real>(batch.size());
    Var l_sa = tape.scale(sa_sum, inv_n);
    Var l_dm = tape.scale(dm_sum, inv_n);
    Var total = total_loss_t(tape, l_sa, l_dm, weights);

    StepRecord record{tape.value(l_sa)[0], tape.value(l_dm)[0], tape.value(total)[0]};
    if (!std::isfinite(record.l_total)) {
        throw TrainingDiverged("train_step: loss is not finite (l_sa=" +
                               std::to_string(record.l_sa) +
                               ", l_dm=" + std::to_string(record.l_dm) + ")");
    }
    tape.backward(total);
    optimizer.step(models.mapper->params(), tape, "mapper.");
    return record;
}

std::vector<StepRecord> train_mapper(ModelBundle& models, const std::vector<TrainItem>& items,
                                     const MapperTrainConfig& config) {
    if (items.empty()) throw EmptyBatch("train_mapper: no items");
    // Samples whose supervisor responses are all flagged empty are skipped.
    std::vector<const TrainItem*> usable;
    for (const TrainItem& item : items) {
        if (!item.response_embeddings.empty()) usable.push_back(&item);
    }
    if (usable.empty()) throw EmptyBatch("train_mapper: no usable items");

    core::RngStream rng(config.seed);
    nn::Adam optimizer({config.learning_rate});
    std::vector<StepRecord> log;
    log.reserve(static_cast<size_t>(config.steps));
    for (int step = 0; step < config.steps; ++step) {
        std::vector<const TrainItem*> batch;
        batch.reserve(static_cast<size_t>(config.batch_size));
        for (int b = 0; b < config.batch_size; ++b) {
            batch.push_back(usable[rng.uniform_int(usable.size())]);
        }
        log.push_back(train_step(models, batch, config.weights, optimizer, rng,
                                 config.squared_sa));
    }
    return log;
}

std::string train_log_csv(const std::vector<StepRecord>& log) {
    std::ostringstream os;
    os << "step,l_sa,l_dm,l_total\n";
    os.precision(10);
    for (size_t i = 0; i < log.size(); ++i) {
        os << i << "," << log[i].l_sa << "," << log[i].l_dm << "," << log[i].l_total << "\n";
    }
    return os.str();
}

std::vector<std::pair<int, real>> pretrain_denoiser(diffusion::LatentDenoiser& denoiser,
                                                    nn::TextEncoder& semantic_encoder,
                                                    const diffusion::NoiseSchedule& schedule,
                                                    const std::vector<BackboneItem>& items,
                                                    const BackboneTrainConfig& config) {
    if (items.empty()) throw EmptyBatch("pretrain_denoiser: no items");
    core::RngStream rng(config.seed);
    nn::Adam den_opt({config.learning_rate});
    nn::Adam sem_opt({config.learning_rate});
    std::vector<std::pair<int, real>> log;

    int T = schedule.total_steps;
    for (int step = 0; step < config.steps; ++step) {
        Tape tape;
        nn::Bind den_bind(tape, denoiser.params(), true, "den.");
        nn::Bind sem_bind(tape, semantic_encoder.params(), config.train_semantic_encoder,
                          "sem.");
        Var loss_sum;
        for (int b = 0; b < config.batch_size; ++b) {
            const BackboneItem& item = items[rng.uniform_int(items.size())];
            Var condition = semantic_encoder.encode_t(tape, item.text_ids, sem_bind);
            int t = 1 + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(T)));
            Tensor noise = rng.normal_tensor(item.latent.shape());
            Var dm = diffusion_loss_t(tape, item.latent, t, noise, condition, denoiser,
                                      den_bind, schedule);
            loss_sum = loss_sum.valid() ? tape.add(loss_sum, dm) : dm;
        }
        Var loss = tape.scale(loss_sum, 1.0 / static_cast<real>(config.batch_size));
        real value = tape.value(loss)[0];
        if (!std::isfinite(value)) {
            throw TrainingDiverged("pretrain_denoiser: loss is not finite at step " +
                                   std::to_string(step));
        }
        tape.backward(loss);
        den_opt.step(denoiser.params(), tape, "den.");
        if (config.train_semantic_encoder) {
            sem_opt.step(semantic_encoder.params(), tape, "sem.");
        }
        log.emplace_back(step, value);
    }
    return log;
}

}  // namespace affedit::supervision
