#pragma once

#include <string>
#include <vector>

namespace affedit::core {

// Word list after normalization: lowercased, split on non-alphanumerics.
std::vector<std::string> normalize_words(const std::string& text);

// Vocabulary-free hashing tokenizer. Words map deterministically into
// [1, vocab); id 0 is the padding token. Sequences are padded or truncated
// to the fixed length.
class HashTokenizer {
  public:
    HashTokenizer(int vocab_size, int seq_len);

    static constexpr int kPadId = 0;

    // Throws InvalidInput on text with no tokens after normalization.
    std::vector<int> encode(const std::string& text) const;

    int vocab_size() const { return vocab_size_; }
    int seq_len() const { return seq_len_; }

  private:
    int vocab_size_;
    int seq_len_;
};

}  // namespace affedit::core
