#include <cmath>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"

#include "core/digest.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "diffusion/schedule.hpp"
#include "supervision/trainer.hpp"

using namespace affedit;
using namespace affedit::supervision;
using core::RngStream;
using core::Tensor;

namespace {

struct ZeroDenoiser : diffusion::Denoiser {
    Tensor predict(const Tensor& z_t, int, const Tensor&) const override {
        return Tensor(z_t.shape());
    }
};

struct EchoDenoiser : diffusion::Denoiser {
    explicit EchoDenoiser(Tensor eps) : eps_(std::move(eps)) {}
    Tensor eps_;
    Tensor predict(const Tensor&, int, const Tensor&) const override { return eps_; }
};

}  // namespace

TEST_CASE("default prompt set covers the four emotional factors") {
    auto prompts = default_prompts();
    REQUIRE(prompts.size() == 4);
    CHECK(prompts[0].id == "color_tone");
    CHECK(prompts[1].id == "object_category");
    CHECK(prompts[2].id == "facial_expression");
    CHECK(prompts[3].id == "atmosphere");
    for (const auto& p : prompts) CHECK(!p.text.empty());
}

TEST_CASE("collect_responses: stub fixtures, order and cardinality") {
    StubMllmClient stub;
    auto prompts = default_prompts();
    for (const auto& p : prompts) stub.add_fixture("img0", p.id, "answer for " + p.id);

    std::vector<uint8_t> png{1, 2, 3};
    auto responses = collect_responses("img0", png, prompts, stub);
    REQUIRE(responses.size() == 4);
    for (size_t i = 0; i < responses.size(); ++i) {
        CHECK(responses[i].prompt_id == prompts[i].id);
        CHECK(responses[i].text == "answer for " + prompts[i].id);
    }
    CHECK(stub.call_count() == 4);

    StubMllmClient empty_stub;
    CHECK_THROWS_AS(collect_responses("img1", png, prompts, empty_stub),
                    SupervisionUnavailable);
}

TEST_CASE("cached client serves repeats without touching the inner client") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "affedit_cache_test";
    fs::remove_all(dir);

    auto stub = std::make_shared<StubMllmClient>(
        [](const MllmQuery& q) { return "resp:" + q.prompt_id; });
    CachedMllmClient cached(stub, dir.string());

    auto prompts = default_prompts();
    std::vector<uint8_t> png{9, 9, 9};
    auto first = collect_responses("imgA", png, prompts, cached);
    CHECK(stub->call_count() == 4);
    CHECK(cached.misses() == 4);

    auto second = collect_responses("imgA", png, prompts, cached);
    CHECK(stub->call_count() == 4);  // zero new client invocations
    CHECK(cached.hits() == 4);
    for (size_t i = 0; i < first.size(); ++i) CHECK(first[i].text == second[i].text);

    fs::remove_all(dir);
}

TEST_CASE("sentiment_alignment_loss: zero case, single entry, oracle sum") {
    RngStream rng(3);
    Tensor mapped = rng.normal_tensor({4, 5});

    std::vector<Tensor> equal{mapped, mapped};
    CHECK(sentiment_alignment_loss(mapped, equal) == doctest::Approx(0.0));

    Tensor off = mapped;
    off[7] += 2.0;
    CHECK(sentiment_alignment_loss(mapped, {off}) == doctest::Approx(2.0));

    std::vector<Tensor> three;
    long double expect = 0;
    for (int k = 0; k < 3; ++k) {
        Tensor resp = rng.normal_tensor({4, 5});
        long double acc = 0;
        for (size_t i = 0; i < resp.size(); ++i) {
            acc += (mapped[i] - resp[i]) * static_cast<long double>(mapped[i] - resp[i]);
        }
        expect += sqrtl(acc);
        three.push_back(std::move(resp));
    }
    CHECK(sentiment_alignment_loss(mapped, three) ==
          doctest::Approx(static_cast<double>(expect)).epsilon(1e-10));

    // squared variant
    Tensor single = mapped;
    single[3] += 3.0;
    CHECK(sentiment_alignment_loss(mapped, {single}, true) == doctest::Approx(9.0));

    // tape version agrees and differentiates
    ad::Tape tape;
    ad::Var m = tape.leaf(mapped, true);
    ad::Var loss = sentiment_alignment_loss_t(tape, m, three);
    CHECK(tape.value(loss)[0] ==
          doctest::Approx(sentiment_alignment_loss(mapped, three)).epsilon(1e-12));
    tape.backward(loss);
    const Tensor& g = tape.grad(m);
    const real h = 1e-6;
    for (size_t i = 0; i < mapped.size(); i += 3) {
        Tensor p = mapped, q = mapped;
        p[i] += h;
        q[i] -= h;
        real fd = (sentiment_alignment_loss(p, three) - sentiment_alignment_loss(q, three)) /
                  (2 * h);
        CHECK(std::abs(fd - g[i]) / std::max({std::abs(fd), std::abs(g[i]), real(1e-6)}) < 1e-5);
    }
}

TEST_CASE("diffusion_loss: oracle predictor, zero predictor, bad step") {
    auto schedule = diffusion::build_schedule(50, diffusion::ScheduleKind::LinearBeta, 0.0);
    RngStream rng(6);
    Tensor latent = rng.normal_tensor({2, 4, 4});
    Tensor noise = rng.normal_tensor({2, 4, 4});
    Tensor condition({8, 4});

    EchoDenoiser echo(noise);
    CHECK(diffusion_loss(latent, 12, noise, condition, echo, schedule) ==
          doctest::Approx(0.0));

    ZeroDenoiser zero;
    real norm = 0;
    for (size_t i = 0; i < noise.size(); ++i) norm += noise[i] * noise[i];
    norm = std::sqrt(norm);
    CHECK(diffusion_loss(latent, 12, noise, condition, zero, schedule) ==
          doctest::Approx(norm));

    CHECK_THROWS_AS(diffusion_loss(latent, 51, noise, condition, zero, schedule),
                    InvalidStep);
    CHECK_THROWS_AS(diffusion_loss(latent, 0, noise, condition, zero, schedule), InvalidStep);
}

TEST_CASE("total_loss arithmetic") {
    LossWeights w;
    CHECK(total_loss(0, 0, w) == 0.0);
    CHECK(total_loss(1, 2, w) == doctest::Approx(21.0));
    CHECK(total_loss(0.5, 0.05, w) == doctest::Approx(1.0));
    LossWeights bad;
    bad.beta = 0;
    CHECK_THROWS_AS(total_loss(1, 1, bad), InvalidConfig);
}

namespace {

struct TinyWorld {
    nn::TextEncoder request_enc;
    nn::TextEncoder semantic_enc;
    mapper::EmotionalMapper map;
    diffusion::LatentDenoiser den;
    diffusion::PatchAutoencoder ae;
    diffusion::NoiseSchedule schedule;
    std::vector<TrainItem> items;

    static nn::TextEncoderConfig req_cfg() {
        nn::TextEncoderConfig c;
        c.channels = 8;
        c.seq_len = 6;
        c.vocab = 64;
        c.heads = 2;
        return c;
    }
    static nn::TextEncoderConfig sem_cfg() {
        nn::TextEncoderConfig c;
        c.channels = 16;
        c.seq_len = 6;
        c.vocab = 64;
        c.heads = 2;
        return c;
    }
    static mapper::MapperConfig map_cfg() {
        mapper::MapperConfig c;
        c.c_s = 16;
        c.c_t = 8;
        c.n_l = 6;
        c.heads = 2;
        c.depth = 1;
        return c;
    }
    static diffusion::DenoiserConfig den_cfg() {
        diffusion::DenoiserConfig c;
        c.latent_channels = 2;
        c.grid = 4;
        c.width = 8;
        c.heads = 2;
        c.cond_channels = 16;
        return c;
    }
    static diffusion::AutoencoderConfig ae_cfg() {
        diffusion::AutoencoderConfig c;
        c.image_size = 16;
        c.patch = 4;
        c.latent_channels = 2;
        c.hidden = 8;
        return c;
    }

    TinyWorld()
        : request_enc(req_cfg(), 1),
          semantic_enc(sem_cfg(), 2),
          map(map_cfg(), 3),
          den(den_cfg(), 4),
          ae(ae_cfg(), 5),
          schedule(diffusion::build_schedule(10, diffusion::ScheduleKind::LinearBeta, 0.0)) {
        request_enc.set_frozen(true);
        semantic_enc.set_frozen(true);
        core::HashTokenizer tok(64, 6);
        RngStream rng(9);
        for (int i = 0; i < 3; ++i) {
            TrainItem item;
            item.id = "it" + std::to_string(i);
            item.latent = rng.normal_tensor({2, 4, 4});
            auto ids = tok.encode("sample text number " + std::to_string(i));
            item.request_embedding = request_enc.encode(ids);
            item.semantics_embedding = semantic_enc.encode(ids);
            item.response_embeddings.push_back(rng.normal_tensor({16, 6}));
            item.response_embeddings.push_back(rng.normal_tensor({16, 6}));
            items.push_back(std::move(item));
        }
    }

    ModelBundle bundle() {
        ModelBundle b;
        b.request_encoder = &request_enc;
        b.semantic_encoder = &semantic_enc;
        b.mapper = &map;
        b.denoiser = &den;
        b.autoencoder = &ae;
        b.schedule = schedule;
        b.denoiser_frozen = true;
        b.autoencoder_frozen = true;
        return b;
    }
};

}  // namespace

TEST_CASE("train_step: freeze contract, zero-lr identity, determinism") {
    TinyWorld world;
    ModelBundle bundle = world.bundle();
    LossWeights weights;

    uint64_t den_before = core::params_checksum(world.den.params());
    uint64_t ae_before = core::params_checksum(world.ae.params());
    uint64_t req_before = core::params_checksum(world.request_enc.params());
    uint64_t sem_before = core::params_checksum(world.semantic_enc.params());
    uint64_t map_before = core::params_checksum(world.map.params());

    std::vector<const TrainItem*> batch{&world.items[0], &world.items[1]};
    nn::Adam opt({1e-3});
    RngStream rng(11);
    StepRecord rec = train_step(bundle, batch, weights, opt, rng);
    CHECK(rec.l_total == doctest::Approx(rec.l_sa + weights.beta * rec.l_dm));
    CHECK(rec.l_sa > 0);
    CHECK(rec.l_dm > 0);

    // frozen parameters unchanged, mapper parameters changed
    CHECK(core::params_checksum(world.den.params()) == den_before);
    CHECK(core::params_checksum(world.ae.params()) == ae_before);
    CHECK(core::params_checksum(world.request_enc.params()) == req_before);
    CHECK(core::params_checksum(world.semantic_enc.params()) == sem_before);
    CHECK(core::params_checksum(world.map.params()) != map_before);

    // zero learning rate leaves the mapper bit-identical
    TinyWorld w2;
    ModelBundle b2 = w2.bundle();
    uint64_t map2 = core::params_checksum(w2.map.params());
    nn::Adam zero_opt({0.0});
    RngStream rng2(11);
    std::vector<const TrainItem*> batch2{&w2.items[0], &w2.items[1]};
    train_step(b2, batch2, weights, zero_opt, rng2);
    CHECK(core::params_checksum(w2.map.params()) == map2);

    // same seed, same losses
    TinyWorld wa, wb;
    ModelBundle ba = wa.bundle(), bb = wb.bundle();
    MapperTrainConfig cfg;
    cfg.steps = 4;
    cfg.batch_size = 2;
    cfg.learning_rate = 1e-3;
    cfg.seed = 5;
    auto log_a = train_mapper(ba, wa.items, cfg);
    auto log_b = train_mapper(bb, wb.items, cfg);
    REQUIRE(log_a.size() == log_b.size());
    for (size_t i = 0; i < log_a.size(); ++i) {
        CHECK(log_a[i].l_total == log_b[i].l_total);
    }
    CHECK(core::params_checksum(wa.map.params()) == core::params_checksum(wb.map.params()));

    // unfrozen bundle is rejected
    ModelBundle loose = world.bundle();
    loose.denoiser_frozen = false;
    CHECK_THROWS_AS(train_step(loose, batch, weights, opt, rng), InvalidConfig);
}

TEST_CASE("train log CSV is well-formed") {
    std::vector<StepRecord> log{{1.0, 2.0, 21.0}, {0.5, 1.0, 10.5}};
    std::string csv = train_log_csv(log);
    CHECK(csv.find("step,l_sa,l_dm,l_total") == 0);
    CHECK(csv.find("21") != std::string::npos);
}

TEST_CASE("http client retries transport failures then succeeds") {
    httplib::Server server;
    int request_count = 0;
    server.Post("/v1/complete", [&](const httplib::Request&, httplib::Response& res) {
        ++request_count;
        if (request_count < 2) {
            res.status = 500;
            return;
        }
        res.set_content("{\"text\": \"hello from server\"}", "application/json");
    });

    int port = 0;
    std::thread server_thread([&] {
        port = server.bind_to_any_port("127.0.0.1");
        server.listen_after_bind();
    });
    while (port == 0) std::this_thread::sleep_for(std::chrono::milliseconds(5));
    server.wait_until_ready();

    HttpClientConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
    cfg.max_retries = 3;
    cfg.backoff_ms = 10;
    HttpMllmClient client(cfg);
    MllmQuery q{"img", {}, "p0", "describe"};
    CHECK(client.complete(q) == "hello from server");
    CHECK(request_count == 2);

    server.stop();
    server_thread.join();

    // unreachable endpoint exhausts retries
    HttpClientConfig dead = cfg;
    dead.endpoint = "http://127.0.0.1:1/v1/complete";
    dead.max_retries = 2;
    dead.backoff_ms = 1;
    HttpMllmClient dead_client(dead);
    CHECK_THROWS_AS(dead_client.complete(q), SupervisionUnavailable);
}
