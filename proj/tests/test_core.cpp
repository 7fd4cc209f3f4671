#include <cmath>
#include <cstdio>
#include <filesystem>

#include "doctest.h"

#include "core/checkpoint.hpp"
#include "core/digest.hpp"
#include "core/errors.hpp"
#include "core/linalg.hpp"
#include "core/rng.hpp"
#include "core/text.hpp"

using namespace affedit;
using core::RngStream;
using core::Tensor;

TEST_CASE("rng streams are reproducible and seed-sensitive") {
    RngStream a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        real va = a.normal();
        CHECK(va == b.normal());
    }
    bool differs = false;
    RngStream a2(42);
    for (int i = 0; i < 10; ++i) differs |= a2.normal() != c.normal();
    CHECK(differs);

    RngStream d(7);
    auto p = d.permutation(50);
    std::vector<bool> seen(50, false);
    for (size_t v : p) {
        CHECK(!seen[v]);
        seen[v] = true;
    }
}

TEST_CASE("rng normal moments are sane") {
    RngStream rng(5);
    const int n = 200000;
    real mean = 0, var = 0;
    std::vector<real> xs(n);
    for (int i = 0; i < n; ++i) {
        xs[static_cast<size_t>(i)] = rng.normal();
        mean += xs[static_cast<size_t>(i)];
    }
    mean /= n;
    for (real x : xs) var += (x - mean) * (x - mean);
    var /= n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("sha256 known vectors") {
    CHECK(core::sha256_hex(std::string("abc")) ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(core::sha256_hex(std::string("")) ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("hash tokenizer pads, truncates and rejects empty text") {
    core::HashTokenizer tok(256, 8);
    auto ids = tok.encode("A warm, golden sunset.");
    REQUIRE(ids.size() == 8);
    CHECK(ids[0] != 0);
    CHECK(ids[3] != 0);
    CHECK(ids[4] == 0);  // padded

    auto again = tok.encode("a WARM golden sunset");
    CHECK(ids == again);  // case and punctuation insensitive

    CHECK_THROWS_AS(tok.encode("   ,,, "), InvalidInput);

    auto longer = tok.encode("one two three four five six seven eight nine ten");
    CHECK(longer.size() == 8);
    for (int id : longer) CHECK(id != 0);
}

TEST_CASE("jacobi eigendecomposition reconstructs symmetric matrices") {
    RngStream rng(9);
    const int n = 8;
    Tensor m({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            real v = rng.normal();
            m.at(i, j) = v;
            m.at(j, i) = v;
        }
    core::EigenSym eg = core::eigh(m);
    // V diag(d) V^T == M
    Tensor vd = eg.vectors;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) vd.at(i, j) *= eg.values[static_cast<size_t>(j)];
    Tensor rec = core::matmul(vd, core::transpose(eg.vectors));
    for (size_t i = 0; i < rec.size(); ++i)
        CHECK(rec[i] == doctest::Approx(m[i]).epsilon(1e-10));
    // eigenvalues ascending
    for (size_t i = 1; i < eg.values.size(); ++i) CHECK(eg.values[i] >= eg.values[i - 1]);
}

TEST_CASE("eigh matches analytic 2x2 eigenvalues") {
    Tensor m({2, 2}, {3.0, 1.0, 1.0, 2.0});
    auto eg = core::eigh(m);
    real tr = 5.0, det = 5.0;
    real disc = std::sqrt(tr * tr - 4 * det);
    CHECK(eg.values[0] == doctest::Approx((tr - disc) / 2).epsilon(1e-12));
    CHECK(eg.values[1] == doctest::Approx((tr + disc) / 2).epsilon(1e-12));
}

TEST_CASE("psd_sqrt squares back to the original") {
    RngStream rng(13);
    const int n = 6;
    Tensor a({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a.at(i, j) = rng.normal();
    Tensor psd = core::matmul(a, core::transpose(a));
    Tensor root = core::psd_sqrt(psd);
    Tensor sq = core::matmul(root, root);
    for (size_t i = 0; i < sq.size(); ++i)
        CHECK(sq[i] == doctest::Approx(psd[i]).epsilon(1e-8));
}

TEST_CASE("checkpoint round-trips tensors and config") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "affedit_ck_test.bin";

    core::Checkpoint ck;
    ck.config = {{"seed", 7}, {"dims", {{"ct", 32}, {"nl", 16}}}};
    RngStream rng(3);
    ck.tensors.emplace("enc.w", rng.normal_tensor({4, 3}));
    ck.tensors.emplace("enc.b", rng.normal_tensor({4}));
    core::save_checkpoint(path.string(), ck);

    core::Checkpoint back = core::load_checkpoint(path.string());
    CHECK(back.config["seed"] == 7);
    REQUIRE(back.tensors.count("enc.w") == 1);
    REQUIRE(back.tensors.count("enc.b") == 1);
    CHECK(back.tensors.at("enc.w").shape() == std::vector<int>{4, 3});
    for (size_t i = 0; i < ck.tensors.at("enc.w").size(); ++i)
        CHECK(back.tensors.at("enc.w")[i] == ck.tensors.at("enc.w")[i]);
    CHECK(core::params_checksum(back.tensors) == core::params_checksum(ck.tensors));

    fs::remove(path);
    CHECK_THROWS_AS(core::load_checkpoint(path.string()), IoError);
}
