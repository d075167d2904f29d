#include "dualgraph/vecindex.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>

namespace dualgraph {

double cosine(const float* a, const float* b, std::size_t dim) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < dim; ++i) {
        double x = a[i], y = b[i];
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0 || nb == 0) return 0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw VecIndexError("dimension mismatch");
    return cosine(a.data(), b.data(), a.size());
}

void EmbeddingIndex::check_dim(std::size_t n) const {
    if (n != dim_)
        throw VecIndexError("dimension mismatch: expected " + std::to_string(dim_) + ", got " + std::to_string(n));
}

void EmbeddingIndex::upsert(const std::string& key, const Vector& vec, std::string payload) {
    if (vec.empty()) throw VecIndexError("empty vector");
    if (dim_ == 0) dim_ = vec.size();
    check_dim(vec.size());
    auto it = pos_.find(key);
    if (it != pos_.end()) {
        std::copy(vec.begin(), vec.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
        payloads_[it->second] = std::move(payload);
        return;
    }
    pos_.emplace(key, keys_.size());
    keys_.push_back(key);
    payloads_.push_back(std::move(payload));
    data_.insert(data_.end(), vec.begin(), vec.end());
}

Vector EmbeddingIndex::vector(std::size_t i) const {
    auto begin = data_.begin() + static_cast<std::ptrdiff_t>(i * dim_);
    return Vector(begin, begin + static_cast<std::ptrdiff_t>(dim_));
}

std::size_t EmbeddingIndex::index_of(const std::string& key) const {
    auto it = pos_.find(key);
    if (it == pos_.end()) throw VecIndexError("unknown key: " + key);
    return it->second;
}

std::vector<SearchHit> EmbeddingIndex::top_k(std::vector<double>& scores, std::size_t k) const {
    std::vector<std::size_t> order(keys_.size());
    std::iota(order.begin(), order.end(), 0);
    k = std::min(k, order.size());
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return keys_[a] < keys_[b];
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
    std::vector<SearchHit> hits;
    hits.reserve(k);
    for (std::size_t i = 0; i < k; ++i) hits.push_back({keys_[order[i]], scores[order[i]]});
    return hits;
}

std::vector<SearchHit> EmbeddingIndex::search(const Vector& query, std::size_t k) const {
    if (keys_.empty()) return {};
    check_dim(query.size());
    std::vector<double> scores(keys_.size());
    const long n = static_cast<long>(keys_.size());
    const float* q = query.data();
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) {
        scores[static_cast<std::size_t>(i)] = cosine(data_.data() + static_cast<std::size_t>(i) * dim_, q, dim_);
    }
    return top_k(scores, k);
}

std::vector<SearchHit> EmbeddingIndex::search_serial(const Vector& query, std::size_t k) const {
    if (keys_.empty()) return {};
    check_dim(query.size());
    std::vector<double> scores(keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) scores[i] = cosine(data_.data() + i * dim_, query.data(), dim_);
    return top_k(scores, k);
}

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw VecIndexError("truncated index file");
    return v;
}

void put_string(std::ofstream& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::ifstream& in) {
    auto n = get<std::uint32_t>(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw VecIndexError("truncated index file");
    return s;
}

constexpr char kMagic[4] = {'D', 'G', 'V', 'X'};

}  // namespace

void EmbeddingIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw VecIndexError("cannot write " + path);
    out.write(kMagic, 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    put<std::uint64_t>(out, keys_.size());
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        put_string(out, keys_[i]);
        put_string(out, payloads_[i]);
        out.write(reinterpret_cast<const char*>(data_.data() + i * dim_),
                  static_cast<std::streamsize>(dim_ * sizeof(float)));
    }
    if (!out) throw VecIndexError("write failed: " + path);
}

EmbeddingIndex EmbeddingIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw VecIndexError("cannot read " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw VecIndexError("not a vector index file: " + path);
    EmbeddingIndex idx(get<std::uint32_t>(in));
    auto count = get<std::uint64_t>(in);
    Vector v(idx.dim_);
    for (std::uint64_t i = 0; i < count; ++i) {
        auto key = get_string(in);
        auto payload = get_string(in);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(idx.dim_ * sizeof(float)));
        if (!in) throw VecIndexError("truncated index file");
        idx.upsert(key, v, std::move(payload));
    }
    return idx;
}

}  // namespace dualgraph
