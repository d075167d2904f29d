#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace dualgraph {

class VecIndexError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vector = std::vector<float>;

struct SearchHit {
    std::string key;
    double score = 0;
};

// Cosine similarity accumulated in double; 0 when either vector is zero.
double cosine(const float* a, const float* b, std::size_t dim);
double cosine(const Vector& a, const Vector& b);

// Exact linear-scan index. The first upsert fixes the dimension.
class EmbeddingIndex {
public:
    EmbeddingIndex() = default;
    explicit EmbeddingIndex(std::size_t dim) : dim_(dim) {}

    void upsert(const std::string& key, const Vector& vec, std::string payload = {});

    // Top-k by cosine, descending; equal scores ordered by key.
    std::vector<SearchHit> search(const Vector& query, std::size_t k) const;
    std::vector<SearchHit> search_serial(const Vector& query, std::size_t k) const;

    std::size_t size() const { return keys_.size(); }
    std::size_t dim() const { return dim_; }
    bool contains(const std::string& key) const { return pos_.count(key) > 0; }

    const std::string& key(std::size_t i) const { return keys_[i]; }
    const std::string& payload(std::size_t i) const { return payloads_[i]; }
    Vector vector(std::size_t i) const;
    std::size_t index_of(const std::string& key) const;

    // Binary layout: "DGVX", u32 dim, u64 count, then per record u32 key
    // length, key bytes, u32 payload length, payload bytes, dim float32.
    void save(const std::string& path) const;
    static EmbeddingIndex load(const std::string& path);

private:
    std::size_t dim_ = 0;
    std::vector<std::string> keys_;
    std::vector<std::string> payloads_;
    std::vector<float> data_;  // row-major, size() * dim_
    std::unordered_map<std::string, std::size_t> pos_;

    void check_dim(std::size_t n) const;
    std::vector<SearchHit> top_k(std::vector<double>& scores, std::size_t k) const;
};

}  // namespace dualgraph
