#include "hyperfuse/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hyperfuse/errors.hpp"
#include "hyperfuse/rng.hpp"

namespace hyperfuse {

namespace {

double descriptor_distance_sq(const float* a, const float* b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < kDescriptorDim; ++i) {
        const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        acc += d * d;
    }
    return acc;
}

}  // namespace

std::vector<Correspondence> match_descriptors(const FeatureSet& query,
                                              const VisualVocabulary& vocab,
                                              const PointCloud& cloud,
                                              double ratio_max, double dist_max,
                                              std::size_t per_query_limit) {
    if (vocab.k < 2) throw VocabularyTooSmall();

    std::vector<Correspondence> corrs;
    for (std::size_t q = 0; q < query.descriptors.size(); ++q) {
        const float* desc = query.descriptors[q].data();
        const auto neighbors = vocab.knn(desc, 2);
        const double d1 = std::sqrt(neighbors[0].dist_sq);
        const double d2 = std::sqrt(neighbors[1].dist_sq);
        const double ratio = d2 > 0.0 ? d1 / d2 : 1.0;
        if (!(ratio < ratio_max) || !(d1 < dist_max)) continue;

        const std::uint32_t word = neighbors[0].id;
        // candidate points of the word, closest-descriptor first
        std::vector<std::uint32_t> candidates = vocab.word_to_points[word];
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()),
                         candidates.end());

        std::vector<std::pair<double, std::uint32_t>> ranked;
        ranked.reserve(candidates.size());
        for (std::uint32_t pid : candidates) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < cloud.descriptor_count(); ++i)
                if (cloud.descriptor_point[i] == pid)
                    best = std::min(best,
                                    descriptor_distance_sq(desc, cloud.descriptor(i)));
            if (!std::isfinite(best)) best = 0.0;  // no per-point descriptors loaded
            ranked.emplace_back(best, pid);
        }
        std::sort(ranked.begin(), ranked.end());

        const std::size_t limit = std::min(per_query_limit, ranked.size());
        for (std::size_t i = 0; i < limit; ++i) {
            Correspondence c;
            c.pixel = {query.keypoints[q].x, query.keypoints[q].y};
            c.point_id = ranked[i].second;
            const auto& p = cloud.points[ranked[i].second];
            c.point = {p[0], p[1], p[2]};
            c.word = word;
            c.distance_ratio = std::max(ratio, std::numeric_limits<double>::min());
            c.descriptor_distance = d1;
            corrs.push_back(c);
        }
    }
    return corrs;
}

SprtResult sprt_run(const std::vector<char>& inlier_flags, double epsilon,
                    double delta, double A) {
    const double inlier_factor = delta / epsilon;
    const double outlier_factor = (1.0 - delta) / (1.0 - epsilon);

    SprtResult res;
    double lambda = 1.0;
    for (char flag : inlier_flags) {
        res.points_tested++;
        if (flag) {
            res.inliers_found++;
            lambda *= inlier_factor;
        } else {
            lambda *= outlier_factor;
        }
        if (lambda > A) {
            res.decision = SprtDecision::Bad;
            res.lambda_final = lambda;
            return res;
        }
    }
    res.decision = SprtDecision::Good;
    res.lambda_final = lambda;
    return res;
}

SprtResult sprt_evaluate(const ProjectionModel& model,
                         const std::vector<Correspondence>& corrs,
                         const SprtConfig& cfg) {
    std::vector<std::uint32_t> order(corrs.size());
    std::iota(order.begin(), order.end(), 0u);
    Xoshiro256 rng(cfg.seed);
    rng.shuffle(order);

    std::vector<char> flags;
    flags.reserve(corrs.size());
    for (std::uint32_t i : order)
        flags.push_back(
            reprojection_error(model, corrs[i].point, corrs[i].pixel) < cfg.tau ? 1
                                                                                : 0);
    return sprt_run(flags, cfg.epsilon, cfg.delta, cfg.A);
}

namespace {

std::vector<std::uint32_t> extract_inliers(const ProjectionModel& model,
                                           const std::vector<Correspondence>& corrs,
                                           double tau, double& total_error) {
    std::vector<std::uint32_t> inliers;
    total_error = 0.0;
    for (std::size_t i = 0; i < corrs.size(); ++i) {
        const double err = reprojection_error(model, corrs[i].point, corrs[i].pixel);
        if (err < tau) {
            inliers.push_back(static_cast<std::uint32_t>(i));
            total_error += err;
        }
    }
    return inliers;
}

std::size_t adaptive_bound(double inlier_fraction, double eta0, std::size_t cap) {
    const double eps6 = std::pow(std::clamp(inlier_fraction, 1e-9, 0.999999), 6.0);
    const double denom = std::log(1.0 - eps6);
    if (denom >= 0.0) return cap;
    const double bound = std::ceil(std::log(eta0) / denom);
    if (!(bound > 0.0)) return 1;
    if (bound >= static_cast<double>(cap)) return cap;
    return static_cast<std::size_t>(bound);
}

}  // namespace

RegistrationResult ransac_register(const std::vector<Correspondence>& corrs,
                                   const SprtConfig& cfg) {
    const std::size_t n = corrs.size();
    if (n < 6) throw TooFewCorrespondences(n, 6);

    Xoshiro256 rng(cfg.seed);
    RegistrationResult result;
    result.seed = cfg.seed;

    double eps_hat = cfg.epsilon;
    std::size_t bound = adaptive_bound(eps_hat, cfg.eta0, cfg.max_iterations);
    std::size_t best_count = 0;
    double best_error = std::numeric_limits<double>::infinity();
    ProjectionModel best_model;
    bool have_model = false;

    std::size_t iter = 0;
    while (iter < bound) {
        ++iter;

        // 6 distinct correspondence indices
        std::array<std::size_t, 6> sample{};
        std::size_t filled = 0;
        while (filled < 6) {
            const std::size_t pick = static_cast<std::size_t>(rng.below(n));
            bool dup = false;
            for (std::size_t j = 0; j < filled; ++j) dup |= sample[j] == pick;
            if (!dup) sample[filled++] = pick;
        }
        const std::uint64_t sprt_seed = rng.next();

        ProjectionModel model;
        try {
            std::vector<std::array<double, 3>> world(6);
            std::vector<std::array<double, 2>> pixels(6);
            for (std::size_t j = 0; j < 6; ++j) {
                world[j] = corrs[sample[j]].point;
                pixels[j] = corrs[sample[j]].pixel;
            }
            model = estimate_projection_dlt(world, pixels);
        } catch (const DegenerateConfiguration&) {
            result.sprt_points_per_model.push_back(0);
            continue;
        }

        SprtConfig screen = cfg;
        screen.seed = sprt_seed;
        screen.epsilon = eps_hat;
        const SprtResult sprt = sprt_evaluate(model, corrs, screen);
        result.sprt_points_per_model.push_back(sprt.points_tested);
        result.sprt_points_evaluated += sprt.points_tested;
        if (sprt.decision == SprtDecision::Bad) continue;

        double total_error = 0.0;
        const auto inliers = extract_inliers(model, corrs, cfg.tau, total_error);
        if (inliers.size() > best_count ||
            (inliers.size() == best_count && total_error < best_error)) {
            best_count = inliers.size();
            best_error = total_error;
            best_model = model;
            have_model = true;
            const double fraction =
                static_cast<double>(best_count) / static_cast<double>(n);
            eps_hat = std::max(eps_hat, fraction);
            bound = std::max(iter,
                             adaptive_bound(eps_hat, cfg.eta0, cfg.max_iterations));
        }
    }
    result.iterations = iter;

    if (have_model) {
        double total_error = 0.0;
        auto inliers = extract_inliers(best_model, corrs, cfg.tau, total_error);
        if (inliers.size() >= 6) {
            // consensus refit, then one final inlier re-extraction
            try {
                std::vector<std::array<double, 3>> world;
                std::vector<std::array<double, 2>> pixels;
                for (std::uint32_t i : inliers) {
                    world.push_back(corrs[i].point);
                    pixels.push_back(corrs[i].pixel);
                }
                const ProjectionModel refit = estimate_projection_dlt(world, pixels);
                double refit_error = 0.0;
                auto refit_inliers = extract_inliers(refit, corrs, cfg.tau, refit_error);
                if (refit_inliers.size() >= inliers.size()) {
                    best_model = refit;
                    inliers = std::move(refit_inliers);
                }
            } catch (const DegenerateConfiguration&) {
                // keep the sampled model
            }
        }
        result.model = best_model;
        result.inliers = std::move(inliers);
    }

    result.accepted = cfg.n_min_inclusive ? result.inliers.size() >= cfg.n_min
                                          : result.inliers.size() > cfg.n_min;
    return result;
}

std::string registration_to_json(const RegistrationResult& result,
                                 const SprtConfig& cfg) {
    nlohmann::ordered_json j;
    j["accepted"] = result.accepted;
    j["P"] = result.model.p;
    j["inliers"] = result.inliers;
    j["iterations"] = result.iterations;
    j["points_evaluated"] = result.sprt_points_evaluated;
    j["seed"] = result.seed;
    j["config"] = {
        {"epsilon", cfg.epsilon},
        {"delta", cfg.delta},
        {"A", cfg.A},
        {"tau", cfg.tau},
        {"n_min", cfg.n_min},
        {"n_min_inclusive", cfg.n_min_inclusive},
        {"eta0", cfg.eta0},
        {"max_iterations", cfg.max_iterations},
    };
    return j.dump(2) + "\n";
}

}  // namespace hyperfuse
