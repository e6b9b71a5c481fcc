#include "hyperfuse/vocabulary.hpp"

#include <cstring>
#include <fstream>

#include "hyperfuse/errors.hpp"
#include "hyperfuse/kmeans.hpp"

namespace hyperfuse {

std::vector<KdTree::Neighbor> VisualVocabulary::knn(const float* query,
                                                    std::size_t count) const {
    if (count > k) throw CountExceedsVocabulary(count, k);
    return index.knn(query, count);
}

std::uint32_t VisualVocabulary::quantize(const float* descriptor) const {
    return index.knn(descriptor, 1).front().id;
}

VisualVocabulary build_vocabulary(const PointCloud& cloud, std::size_t k,
                                  std::uint64_t seed, unsigned threads) {
    const std::size_t n = cloud.descriptor_count();
    if (n == 0) throw NoDescriptors();

    KmeansResult km = kmeans(cloud.descriptors, n, kDescriptorDim, k, seed, 100,
                             1e-6, threads);

    VisualVocabulary vocab;
    vocab.k = k;
    vocab.centroids = km.centroids;
    vocab.index = KdTree(km.centroids, k, kDescriptorDim);
    vocab.word_to_points.resize(k);
    for (std::size_t i = 0; i < n; ++i)
        vocab.word_to_points[km.assignments[i]].push_back(cloud.descriptor_point[i]);
    return vocab;
}

std::vector<std::uint8_t> write_vocabulary(const VisualVocabulary& vocab) {
    std::vector<std::uint8_t> out = {'H', 'F', 'V', '1'};
    const auto put_u32 = [&](std::uint32_t v) {
        const std::size_t at = out.size();
        out.resize(at + 4);
        std::memcpy(out.data() + at, &v, 4);
    };
    put_u32(static_cast<std::uint32_t>(vocab.k));
    put_u32(static_cast<std::uint32_t>(kDescriptorDim));
    {
        const std::size_t at = out.size();
        out.resize(at + vocab.centroids.size() * 4);
        std::memcpy(out.data() + at, vocab.centroids.data(),
                    vocab.centroids.size() * 4);
    }
    for (const auto& points : vocab.word_to_points) {
        put_u32(static_cast<std::uint32_t>(points.size()));
        const std::size_t at = out.size();
        out.resize(at + points.size() * 4);
        std::memcpy(out.data() + at, points.data(), points.size() * 4);
    }
    return out;
}

VisualVocabulary load_vocabulary(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "HFV1", 4) != 0)
        throw MalformedHeader("vocabulary file lacks HFV1 magic");
    std::size_t at = 4;
    const auto get_u32 = [&]() {
        if (at + 4 > bytes.size()) throw TruncatedPayload("vocabulary file");
        std::uint32_t v;
        std::memcpy(&v, bytes.data() + at, 4);
        at += 4;
        return v;
    };
    VisualVocabulary vocab;
    vocab.k = get_u32();
    const std::uint32_t dim = get_u32();
    if (dim != kDescriptorDim)
        throw MalformedHeader("vocabulary dim " + std::to_string(dim));

    vocab.centroids.resize(vocab.k * kDescriptorDim);
    if (at + vocab.centroids.size() * 4 > bytes.size())
        throw TruncatedPayload("vocabulary centroids");
    std::memcpy(vocab.centroids.data(), bytes.data() + at, vocab.centroids.size() * 4);
    at += vocab.centroids.size() * 4;

    vocab.word_to_points.resize(vocab.k);
    for (auto& points : vocab.word_to_points) {
        const std::uint32_t count = get_u32();
        points.resize(count);
        if (at + count * 4 > bytes.size())
            throw TruncatedPayload("vocabulary adjacency");
        std::memcpy(points.data(), bytes.data() + at, count * 4);
        at += count * 4;
    }
    vocab.index = KdTree(vocab.centroids, vocab.k, kDescriptorDim);
    return vocab;
}

void write_vocabulary_file(const VisualVocabulary& vocab, const std::string& path) {
    const auto bytes = write_vocabulary(vocab);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
}

VisualVocabulary load_vocabulary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load_vocabulary(bytes);
}

}  // namespace hyperfuse
