#ifndef HYPERFUSE_VOCABULARY_HPP
#define HYPERFUSE_VOCABULARY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hyperfuse/kdtree.hpp"
#include "hyperfuse/ply.hpp"

namespace hyperfuse {

/// k-means centroids in descriptor space plus the exact k-d tree over them
/// and the word -> 3D point inverse map. Immutable after build; knn is safe
/// to call concurrently.
struct VisualVocabulary {
    std::size_t k = 0;
    std::vector<float> centroids;  // k * 128
    KdTree index;
    std::vector<std::vector<std::uint32_t>> word_to_points;

    /// Exact nearest-word ids with squared distances; ascending distance,
    /// ties to the lower word id. Throws CountExceedsVocabulary.
    std::vector<KdTree::Neighbor> knn(const float* query, std::size_t count = 2) const;

    /// Word id of the nearest centroid.
    std::uint32_t quantize(const float* descriptor) const;
};

VisualVocabulary build_vocabulary(const PointCloud& cloud, std::size_t k,
                                  std::uint64_t seed, unsigned threads = 1);

/// Vocabulary file, magic HFV1: k, dim, f32 centroids, then per word a u32
/// count and the 3D point ids.
std::vector<std::uint8_t> write_vocabulary(const VisualVocabulary& vocab);
VisualVocabulary load_vocabulary(const std::vector<std::uint8_t>& bytes);
void write_vocabulary_file(const VisualVocabulary& vocab, const std::string& path);
VisualVocabulary load_vocabulary_file(const std::string& path);

}  // namespace hyperfuse

#endif
