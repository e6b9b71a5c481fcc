#ifndef HYPERFUSE_REGISTRATION_HPP
#define HYPERFUSE_REGISTRATION_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperfuse/projection.hpp"
#include "hyperfuse/sift.hpp"
#include "hyperfuse/vocabulary.hpp"

namespace hyperfuse {

/// A 2D cube pixel paired with a candidate 3D point through a matched
/// visual word.
struct Correspondence {
    std::array<double, 2> pixel{};  // (u, v) subpixel cube coordinates
    std::uint32_t point_id = 0;
    std::array<double, 3> point{};  // (x, y, z)
    std::uint32_t word = 0;
    double distance_ratio = 0.0;     // d1/d2 from the 2-NN test
    double descriptor_distance = 0.0;  // d1 (Euclidean)
};

struct SprtConfig {
    double epsilon = 0.2;   // assumed inlier fraction under a good model
    double delta = 0.05;    // inlier probability under a bad model
    double A = 20.0;        // likelihood-ratio rejection threshold
    double tau = 3.0;       // inlier reprojection threshold, pixels
    std::size_t n_min = 5;  // inlier-count acceptance threshold
    bool n_min_inclusive = false;  // accept at |inliers| >= n_min instead of >
    double eta0 = 0.01;     // failure probability target
    std::size_t max_iterations = 10000;
    std::uint64_t seed = 0;
};

enum class SprtDecision { Good, Bad };

struct SprtResult {
    SprtDecision decision = SprtDecision::Good;
    std::size_t inliers_found = 0;
    std::size_t points_tested = 0;
    double lambda_final = 1.0;
};

/// Wald's sequential probability ratio test over a pre-ordered inlier/outlier
/// sequence: lambda *= delta/epsilon on an inlier, (1-delta)/(1-epsilon) on an
/// outlier; `bad` as soon as lambda exceeds A.
SprtResult sprt_run(const std::vector<char>& inlier_flags, double epsilon,
                    double delta, double A);

/// SPRT screening of a candidate model: correspondences are visited in a
/// seeded random permutation and classified by reprojection error < tau.
SprtResult sprt_evaluate(const ProjectionModel& model,
                         const std::vector<Correspondence>& corrs,
                         const SprtConfig& cfg);

struct RegistrationResult {
    ProjectionModel model;
    std::vector<std::uint32_t> inliers;  // correspondence ids
    std::size_t iterations = 0;
    std::size_t sprt_points_evaluated = 0;
    std::vector<std::size_t> sprt_points_per_model;
    bool accepted = false;
    std::uint64_t seed = 0;
};

/// 2-NN visual-word matching with ratio and absolute-distance gates; each
/// accepted word expands to at most per_query_limit candidate 3D points.
std::vector<Correspondence> match_descriptors(
    const FeatureSet& query, const VisualVocabulary& vocab, const PointCloud& cloud,
    double ratio_max = 0.8, double dist_max = 0.7, std::size_t per_query_limit = 5);

/// Optimal Randomized RANSAC: 6-point DLT hypotheses screened by SPRT, best
/// model kept by inlier count (ties by total inlier reprojection error),
/// adaptive iteration bound from the best inlier fraction, final refit on
/// the consensus set.
RegistrationResult ransac_register(const std::vector<Correspondence>& corrs,
                                   const SprtConfig& cfg);

/// Pose JSON: P row-major, inlier ids, iteration and SPRT counters, seed and
/// config echo. Stable field order for byte-identical reruns.
std::string registration_to_json(const RegistrationResult& result,
                                 const SprtConfig& cfg);

}  // namespace hyperfuse

#endif
