#include "core/digest.hpp"

#include <openssl/evp.h>

#include <cstring>

#include "core/errors.hpp"

namespace affedit::core {

std::string sha256_hex(const void* data, size_t len) {
    unsigned char out[EVP_MAX_MD_SIZE];
    unsigned int out_len = 0;
    if (!EVP_Digest(data, len, out, &out_len, EVP_sha256(), nullptr)) {
        throw IoError("sha256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string s;
    s.reserve(out_len * 2);
    for (unsigned int i = 0; i < out_len; ++i) {
        s.push_back(hex[out[i] >> 4]);
        s.push_back(hex[out[i] & 0xf]);
    }
    return s;
}

std::string sha256_hex(const std::string& s) { return sha256_hex(s.data(), s.size()); }

uint64_t fnv1a(const void* data, size_t len, uint64_t seed) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    uint64_t h = seed;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

uint64_t tensor_checksum(const Tensor& t) {
    uint64_t h = fnv1a(t.data(), t.size() * sizeof(real));
    for (int d : t.shape()) {
        h = fnv1a(&d, sizeof(d), h);
    }
    return h;
}

}  // namespace affedit::core
