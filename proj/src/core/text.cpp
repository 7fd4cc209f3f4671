#include "core/text.hpp"

#include <cctype>

#include "core/digest.hpp"
#include "core/errors.hpp"

namespace affedit::core {

std::vector<std::string> normalize_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        unsigned char u = static_cast<unsigned char>(ch);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

HashTokenizer::HashTokenizer(int vocab_size, int seq_len)
    : vocab_size_(vocab_size), seq_len_(seq_len) {}

std::vector<int> HashTokenizer::encode(const std::string& text) const {
    std::vector<std::string> words = normalize_words(text);
    if (words.empty()) {
        throw InvalidInput("text is empty after normalization");
    }
    std::vector<int> ids(static_cast<size_t>(seq_len_), kPadId);
    size_t n = std::min(words.size(), static_cast<size_t>(seq_len_));
    for (size_t i = 0; i < n; ++i) {
        uint64_t h = fnv1a(words[i]);
        ids[i] = 1 + static_cast<int>(h % static_cast<uint64_t>(vocab_size_ - 1));
    }
    return ids;
}

}  // namespace affedit::core
