#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperfuse/envi.hpp"
#include "hyperfuse/errors.hpp"
#include "hyperfuse/fusion.hpp"
#include "hyperfuse/manifest.hpp"
#include "hyperfuse/parallel.hpp"
#include "hyperfuse/png_io.hpp"
#include "hyperfuse/radiometry.hpp"
#include "hyperfuse/registration.hpp"
#include "hyperfuse/sift.hpp"
#include "hyperfuse/spectral_maps.hpp"
#include "hyperfuse/vocabulary.hpp"

namespace hf = hyperfuse;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNotAccepted = 3;

hf::Roi parse_roi(const std::vector<std::size_t>& v) {
    if (v.size() != 4) throw CLI::ValidationError("ROI needs x,y,width,height");
    return hf::Roi{v[0], v[1], v[2], v[3]};
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw hf::IoFailure(path);
    out << text;
}

struct CommonOpts {
    unsigned threads = 0;  // 0 = resolve from HYPERFUSE_THREADS, then 1
};

void add_common(CLI::App* cmd, CommonOpts& common) {
    cmd->add_option("--threads", common.threads,
                    "worker cap (HYPERFUSE_THREADS as fallback); does not change outputs");
}

struct SprtOpts {
    hf::SprtConfig cfg;
    double ratio_max = 0.8;
    double dist_max = 0.7;
    std::size_t per_query_limit = 5;
};

void add_sprt(CLI::App* cmd, SprtOpts& o) {
    cmd->add_option("--epsilon", o.cfg.epsilon, "assumed good-model inlier fraction");
    cmd->add_option("--delta", o.cfg.delta, "bad-model inlier probability");
    cmd->add_option("--sprt-a", o.cfg.A, "SPRT rejection threshold");
    cmd->add_option("--tau", o.cfg.tau, "inlier reprojection threshold (px)");
    cmd->add_option("--n-min", o.cfg.n_min, "inlier-count acceptance threshold");
    cmd->add_flag("--n-min-inclusive", o.cfg.n_min_inclusive,
                  "accept at >= n-min instead of strictly more");
    cmd->add_option("--eta0", o.cfg.eta0, "failure probability target");
    cmd->add_option("--max-iterations", o.cfg.max_iterations, "RANSAC iteration cap");
    cmd->add_option("--ratio-max", o.ratio_max, "2-NN distance ratio gate");
    cmd->add_option("--dist-max", o.dist_max, "absolute descriptor distance gate");
    cmd->add_option("--per-query-limit", o.per_query_limit,
                    "correspondences emitted per query descriptor");
}

ordered_json sprt_echo(const SprtOpts& o, std::uint64_t seed) {
    return ordered_json{{"epsilon", o.cfg.epsilon},
                        {"delta", o.cfg.delta},
                        {"A", o.cfg.A},
                        {"tau", o.cfg.tau},
                        {"n_min", o.cfg.n_min},
                        {"n_min_inclusive", o.cfg.n_min_inclusive},
                        {"eta0", o.cfg.eta0},
                        {"max_iterations", o.cfg.max_iterations},
                        {"ratio_max", o.ratio_max},
                        {"dist_max", o.dist_max},
                        {"per_query_limit", o.per_query_limit},
                        {"seed", seed}};
}

hf::PointCloud load_cloud(const std::string& ply_path, const std::string& desc_path) {
    hf::PointCloud cloud = hf::load_ply_file(ply_path);
    if (!desc_path.empty()) hf::load_descriptor_sidecar_file(cloud, desc_path);
    return cloud;
}

hf::RegistrationResult run_registration(const hf::FeatureSet& features,
                                        const hf::VisualVocabulary& vocab,
                                        const hf::PointCloud& cloud,
                                        const SprtOpts& sprt, std::uint64_t seed) {
    auto corrs = hf::match_descriptors(features, vocab, cloud, sprt.ratio_max,
                                       sprt.dist_max, sprt.per_query_limit);
    hf::SprtConfig cfg = sprt.cfg;
    cfg.seed = seed;
    return hf::ransac_register(corrs, cfg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hyperspectral cube calibration, analysis and 3D fusion"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);
    app.allow_config_extras(CLI::config_extras_mode::error);

    // ---- calibrate ----------------------------------------------------
    auto* calibrate = app.add_subcommand(
        "calibrate", "DN to reflectance via the tarp gain method");
    std::string cal_cube, cal_asd, cal_out;
    std::vector<std::size_t> cal_roi;
    double cal_fwhm = 0.0;
    CommonOpts cal_common;
    calibrate->add_option("--cube", cal_cube, "input DN cube (.hdr)")->required();
    calibrate->add_option("--tarp-roi", cal_roi, "tarp ROI as x,y,width,height")
        ->required()
        ->delimiter(',');
    calibrate->add_option("--asd", cal_asd, "ASD reference CSV")->required();
    calibrate->add_option("-o,--output", cal_out, "output reflectance cube (.hdr)")
        ->required();
    calibrate->add_option("--gaussian-fwhm", cal_fwhm,
                          "band-response FWHM (nm); 0 = linear interpolation");
    add_common(calibrate, cal_common);

    // ---- stats --------------------------------------------------------
    auto* stats = app.add_subcommand("stats", "per-band ROI statistics");
    std::string st_cube, st_out, st_svg;
    std::vector<std::size_t> st_roi;
    stats->add_option("--cube", st_cube, "input cube (.hdr)")->required();
    stats->add_option("--roi", st_roi, "ROI as x,y,width,height")
        ->required()
        ->delimiter(',');
    stats->add_option("-o,--output", st_out, "output CSV")->required();
    stats->add_option("--svg", st_svg, "optional SVG plot");

    // ---- classify -----------------------------------------------------
    auto* classify = app.add_subcommand("classify", "material class map");
    std::string cl_cube, cl_out, cl_counts;
    hf::ClassifierThresholds cl_thresholds;
    classify->add_option("--cube", cl_cube, "reflectance cube (.hdr)")->required();
    classify->add_option("-o,--output", cl_out, "output PNG")->required();
    classify->add_option("--counts", cl_counts, "class pixel-count CSV");
    classify->add_option("--ndvi-red-nm", cl_thresholds.ndvi_red_nm);
    classify->add_option("--ndvi-nir-nm", cl_thresholds.ndvi_nir_nm);
    classify->add_option("--ndvi-vegetation-min", cl_thresholds.ndvi_vegetation_min);
    classify->add_option("--shade-brightness-max", cl_thresholds.shade_brightness_max);
    classify->add_option("--road-ndvi-max", cl_thresholds.road_ndvi_max);

    // ---- features -----------------------------------------------------
    auto* features = app.add_subcommand(
        "features", "keypoints and descriptors on the true-color composite");
    std::string ft_cube, ft_out;
    double ft_red = 640.0, ft_green = 550.0, ft_blue = 460.0;
    features->add_option("--cube", ft_cube, "input cube (.hdr)")->required();
    features->add_option("-o,--output", ft_out, "output feature file (.hff)")
        ->required();
    features->add_option("--red-nm", ft_red);
    features->add_option("--green-nm", ft_green);
    features->add_option("--blue-nm", ft_blue);

    // ---- vocab --------------------------------------------------------
    auto* vocab = app.add_subcommand("vocab", "visual vocabulary from a cloud");
    std::string vc_cloud, vc_desc, vc_out;
    std::size_t vc_k = 100000;
    std::uint64_t vc_seed = 0;
    CommonOpts vc_common;
    vocab->add_option("--cloud", vc_cloud, "point cloud (.ply)")->required();
    vocab->add_option("--desc", vc_desc, "descriptor sidecar (.hfd)")->required();
    vocab->add_option("-k,--words", vc_k,
                      "word count; clamped to descriptor_count/4 for small scenes");
    vocab->add_option("--seed", vc_seed, "k-means seed");
    vocab->add_option("-o,--output", vc_out, "output vocabulary (.hfv)")->required();
    add_common(vocab, vc_common);

    // ---- register -----------------------------------------------------
    auto* reg = app.add_subcommand("register", "SPRT-RANSAC pose estimation");
    std::string rg_features, rg_vocab, rg_cloud, rg_desc, rg_out;
    std::uint64_t rg_seed = 0;
    SprtOpts rg_sprt;
    reg->add_option("--features", rg_features, "cube feature file (.hff)")->required();
    reg->add_option("--vocab", rg_vocab, "vocabulary (.hfv)")->required();
    reg->add_option("--cloud", rg_cloud, "point cloud (.ply)")->required();
    reg->add_option("--desc", rg_desc, "descriptor sidecar (.hfd)");
    reg->add_option("--seed", rg_seed, "RANSAC seed");
    reg->add_option("-o,--output", rg_out, "output pose JSON")->required();
    add_sprt(reg, rg_sprt);

    // ---- fuse ---------------------------------------------------------
    auto* fuse = app.add_subcommand("fuse", "projective fusion with a pose");
    std::string fu_cube, fu_cloud, fu_pose, fu_dir, fu_stem = "fused";
    double fu_ztol = 0.2;
    fuse->add_option("--cube", fu_cube, "reflectance cube (.hdr)")->required();
    fuse->add_option("--cloud", fu_cloud, "point cloud (.ply)")->required();
    fuse->add_option("--pose", fu_pose, "pose JSON from register")->required();
    fuse->add_option("-o,--output", fu_dir, "output directory")->required();
    fuse->add_option("--stem", fu_stem, "output file stem");
    fuse->add_option("--z-tolerance", fu_ztol, "depth-buffer tolerance (m)");

    // ---- fuse-geo -----------------------------------------------------
    auto* fuse_geo = app.add_subcommand("fuse-geo", "geo-referenced fusion");
    std::string fg_cube, fg_cloud, fg_dir, fg_stem = "fused";
    std::vector<double> fg_geo;
    fuse_geo->add_option("--cube", fg_cube, "reflectance cube (.hdr)")->required();
    fuse_geo->add_option("--cloud", fg_cloud, "point cloud (.ply)")->required();
    fuse_geo
        ->add_option("--geo", fg_geo,
                     "geotransform origin_x,origin_y,pixel_dx,pixel_dy[,rot_x,rot_y]")
        ->required()
        ->delimiter(',');
    fuse_geo->add_option("-o,--output", fg_dir, "output directory")->required();
    fuse_geo->add_option("--stem", fg_stem, "output file stem");

    // ---- pipeline -----------------------------------------------------
    auto* pipeline =
        app.add_subcommand("pipeline", "register then fuse in one run");
    std::string pl_cube, pl_cloud, pl_desc, pl_features, pl_vocab, pl_dir;
    std::size_t pl_k = 100000;
    std::uint64_t pl_seed = 0;
    double pl_ztol = 0.2;
    SprtOpts pl_sprt;
    CommonOpts pl_common;
    pipeline->add_option("--cube", pl_cube, "reflectance cube (.hdr)")->required();
    pipeline->add_option("--cloud", pl_cloud, "point cloud (.ply)")->required();
    pipeline->add_option("--desc", pl_desc, "descriptor sidecar (.hfd)")->required();
    pipeline->add_option("--features", pl_features,
                         "precomputed cube features (.hff); computed when absent");
    pipeline->add_option("--vocab", pl_vocab,
                         "precomputed vocabulary (.hfv); built when absent");
    pipeline->add_option("-k,--words", pl_k, "word count when building the vocabulary");
    pipeline->add_option("--seed", pl_seed, "seed for k-means and RANSAC");
    pipeline->add_option("--z-tolerance", pl_ztol, "depth-buffer tolerance (m)");
    pipeline->add_option("-o,--output", pl_dir, "output directory")->required();
    add_sprt(pipeline, pl_sprt);
    add_common(pipeline, pl_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "{\"error\":\"usage\",\"detail\":" << ordered_json(e.what())
                  << "}\n";
        return kExitValidation;
    }

    try {
        if (*calibrate) {
            const unsigned threads = hf::resolve_threads(cal_common.threads);
            const hf::HyperCube cube = hf::load_cube_file(cal_cube);
            const hf::Spectrum asd = hf::load_asd_csv(cal_asd);
            const hf::Roi roi = parse_roi(cal_roi);
            const hf::Spectrum resampled =
                cal_fwhm > 0.0
                    ? hf::resample_spectrum_gaussian(asd, cube.header.wavelengths,
                                                     cal_fwhm)
                    : asd;
            const hf::HyperCube out = hf::calibrate_cube(cube, roi, resampled, threads);
            hf::save_cube_file(out, cal_out);

            ordered_json manifest = hf::make_manifest(
                0, ordered_json{{"tarp_roi", cal_roi}, {"gaussian_fwhm", cal_fwhm}});
            manifest["inputs"]["cube"] = hf::hash_file(cal_cube);
            manifest["inputs"]["asd"] = hf::hash_file(cal_asd);
            manifest["outputs"]["cube"] = hf::hash_file(cal_out);
            hf::write_manifest(manifest, cal_out + ".manifest.json");
        } else if (*stats) {
            const hf::HyperCube cube = hf::load_cube_file(st_cube);
            const hf::RoiStats st = hf::roi_statistics(cube, parse_roi(st_roi));
            write_text(st_out, hf::roi_stats_csv(st));
            if (!st_svg.empty()) write_text(st_svg, hf::roi_stats_svg(st));

            ordered_json manifest = hf::make_manifest(0, ordered_json{{"roi", st_roi}});
            manifest["inputs"]["cube"] = hf::hash_file(st_cube);
            manifest["outputs"]["csv"] = hf::hash_file(st_out);
            hf::write_manifest(manifest, st_out + ".manifest.json");
        } else if (*classify) {
            const hf::HyperCube cube = hf::load_cube_file(cl_cube);
            const hf::ClassMap map = hf::classify_materials(cube, cl_thresholds);
            hf::write_png(hf::render_class_map(map), cl_out);
            if (!cl_counts.empty()) write_text(cl_counts, hf::class_counts_csv(map));

            ordered_json manifest = hf::make_manifest(
                0, ordered_json{
                       {"ndvi_red_nm", cl_thresholds.ndvi_red_nm},
                       {"ndvi_nir_nm", cl_thresholds.ndvi_nir_nm},
                       {"ndvi_vegetation_min", cl_thresholds.ndvi_vegetation_min},
                       {"shade_brightness_max", cl_thresholds.shade_brightness_max},
                       {"road_ndvi_max", cl_thresholds.road_ndvi_max}});
            manifest["inputs"]["cube"] = hf::hash_file(cl_cube);
            manifest["outputs"]["png"] = hf::hash_file(cl_out);
            hf::write_manifest(manifest, cl_out + ".manifest.json");
        } else if (*features) {
            const hf::HyperCube cube = hf::load_cube_file(ft_cube);
            const hf::BandImage gray = hf::to_grayscale(
                hf::rgb_composite(cube, ft_red, ft_green, ft_blue));
            const auto keypoints = hf::detect_keypoints(gray);
            const hf::FeatureSet set = hf::compute_descriptors(gray, keypoints);
            hf::write_features_file(set, ft_out);
            std::cerr << set.keypoints.size() << " features ("
                      << set.dropped << " dropped)\n";

            ordered_json manifest = hf::make_manifest(
                0, ordered_json{{"red_nm", ft_red},
                                {"green_nm", ft_green},
                                {"blue_nm", ft_blue}});
            manifest["inputs"]["cube"] = hf::hash_file(ft_cube);
            manifest["outputs"]["features"] = hf::hash_file(ft_out);
            hf::write_manifest(manifest, ft_out + ".manifest.json");
        } else if (*vocab) {
            const unsigned threads = hf::resolve_threads(vc_common.threads);
            hf::PointCloud cloud = load_cloud(vc_cloud, vc_desc);
            const std::size_t k =
                std::max<std::size_t>(1,
                                      std::min(vc_k, cloud.descriptor_count() / 4));
            const hf::VisualVocabulary v =
                hf::build_vocabulary(cloud, k, vc_seed, threads);
            hf::write_vocabulary_file(v, vc_out);

            ordered_json manifest =
                hf::make_manifest(vc_seed, ordered_json{{"k", k}});
            manifest["inputs"]["cloud"] = hf::hash_file(vc_cloud);
            manifest["inputs"]["desc"] = hf::hash_file(vc_desc);
            manifest["outputs"]["vocab"] = hf::hash_file(vc_out);
            hf::write_manifest(manifest, vc_out + ".manifest.json");
        } else if (*reg) {
            const hf::FeatureSet set = hf::load_features_file(rg_features);
            const hf::VisualVocabulary v = hf::load_vocabulary_file(rg_vocab);
            const hf::PointCloud cloud = load_cloud(rg_cloud, rg_desc);
            const hf::RegistrationResult result =
                run_registration(set, v, cloud, rg_sprt, rg_seed);
            write_text(rg_out, hf::registration_to_json(result, rg_sprt.cfg));

            ordered_json manifest =
                hf::make_manifest(rg_seed, sprt_echo(rg_sprt, rg_seed));
            manifest["inputs"]["features"] = hf::hash_file(rg_features);
            manifest["inputs"]["vocab"] = hf::hash_file(rg_vocab);
            manifest["inputs"]["cloud"] = hf::hash_file(rg_cloud);
            manifest["outputs"]["pose"] = hf::hash_file(rg_out);
            hf::write_manifest(manifest, rg_out + ".manifest.json");
            if (!result.accepted) {
                std::cerr << "{\"error\":\"registration not accepted\",\"inliers\":"
                          << result.inliers.size() << "}\n";
                return kExitNotAccepted;
            }
        } else if (*fuse) {
            const hf::HyperCube cube = hf::load_cube_file(fu_cube);
            const hf::PointCloud cloud = hf::load_ply_file(fu_cloud);
            std::ifstream pose_in(fu_pose);
            if (!pose_in) throw hf::IoFailure(fu_pose);
            const auto pose = nlohmann::json::parse(pose_in);
            hf::RegistrationResult reg_result;
            reg_result.accepted = pose.at("accepted").get<bool>();
            const auto p = pose.at("P");
            for (std::size_t i = 0; i < 12; ++i) reg_result.model.p[i] = p.at(i);
            const hf::FusedCloud fused =
                hf::fuse_projective(cloud, cube, reg_result, fu_ztol);
            ordered_json files = hf::export_fused(fused, fu_dir, fu_stem);

            ordered_json manifest = hf::make_manifest(
                0, ordered_json{{"z_tolerance", fu_ztol}, {"stem", fu_stem}});
            manifest["inputs"]["cube"] = hf::hash_file(fu_cube);
            manifest["inputs"]["cloud"] = hf::hash_file(fu_cloud);
            manifest["inputs"]["pose"] = hf::hash_file(fu_pose);
            manifest["outputs"] = files;
            hf::write_manifest(
                manifest,
                (std::filesystem::path(fu_dir) / "manifest.json").string());
        } else if (*fuse_geo) {
            if (fg_geo.size() != 4 && fg_geo.size() != 6)
                throw CLI::ValidationError("--geo needs 4 or 6 numbers");
            hf::GeoRef geo;
            geo.origin_x = fg_geo[0];
            geo.origin_y = fg_geo[1];
            geo.pixel_dx = fg_geo[2];
            geo.pixel_dy = fg_geo[3];
            if (fg_geo.size() == 6) {
                geo.rot_x = fg_geo[4];
                geo.rot_y = fg_geo[5];
            }
            const hf::HyperCube cube = hf::load_cube_file(fg_cube);
            const hf::PointCloud cloud = hf::load_ply_file(fg_cloud);
            const hf::FusedCloud fused = hf::fuse_georef(cloud, cube, geo);
            ordered_json files = hf::export_fused(fused, fg_dir, fg_stem);

            ordered_json manifest =
                hf::make_manifest(0, ordered_json{{"geo", fg_geo}, {"stem", fg_stem}});
            manifest["inputs"]["cube"] = hf::hash_file(fg_cube);
            manifest["inputs"]["cloud"] = hf::hash_file(fg_cloud);
            manifest["outputs"] = files;
            hf::write_manifest(
                manifest,
                (std::filesystem::path(fg_dir) / "manifest.json").string());
        } else if (*pipeline) {
            const unsigned threads = hf::resolve_threads(pl_common.threads);
            const hf::HyperCube cube = hf::load_cube_file(pl_cube);
            hf::PointCloud cloud = load_cloud(pl_cloud, pl_desc);

            hf::FeatureSet set;
            if (!pl_features.empty()) {
                set = hf::load_features_file(pl_features);
            } else {
                const hf::BandImage gray =
                    hf::to_grayscale(hf::rgb_composite(cube, 640.0, 550.0, 460.0));
                set = hf::compute_descriptors(gray, hf::detect_keypoints(gray));
            }

            hf::VisualVocabulary v;
            std::size_t k_used = 0;
            if (!pl_vocab.empty()) {
                v = hf::load_vocabulary_file(pl_vocab);
                k_used = v.k;
            } else {
                k_used = std::max<std::size_t>(
                    2, std::min(pl_k, cloud.descriptor_count() / 4));
                v = hf::build_vocabulary(cloud, k_used, pl_seed, threads);
            }

            const hf::RegistrationResult result =
                run_registration(set, v, cloud, pl_sprt, pl_seed);
            std::filesystem::create_directories(pl_dir);
            write_text((std::filesystem::path(pl_dir) / "pose.json").string(),
                       hf::registration_to_json(result, pl_sprt.cfg));

            ordered_json config = sprt_echo(pl_sprt, pl_seed);
            config["k"] = k_used;
            config["z_tolerance"] = pl_ztol;
            ordered_json manifest = hf::make_manifest(pl_seed, config);
            manifest["inputs"]["cube"] = hf::hash_file(pl_cube);
            manifest["inputs"]["cloud"] = hf::hash_file(pl_cloud);
            manifest["inputs"]["desc"] = hf::hash_file(pl_desc);

            if (!result.accepted) {
                hf::write_manifest(
                    manifest,
                    (std::filesystem::path(pl_dir) / "manifest.json").string());
                std::cerr << "{\"error\":\"registration not accepted\",\"inliers\":"
                          << result.inliers.size() << "}\n";
                return kExitNotAccepted;
            }
            const hf::FusedCloud fused =
                hf::fuse_projective(cloud, cube, result, pl_ztol);
            manifest["outputs"] = hf::export_fused(fused, pl_dir, "fused");
            manifest["outputs"]["pose"] = "pose.json";
            hf::write_manifest(
                manifest,
                (std::filesystem::path(pl_dir) / "manifest.json").string());
        }
    } catch (const CLI::Error& e) {
        std::cerr << "{\"error\":\"usage\",\"detail\":" << ordered_json(e.what())
                  << "}\n";
        return kExitValidation;
    } catch (const hf::Error& e) {
        std::cerr << "{\"error\":\"validation\",\"detail\":" << ordered_json(e.what())
                  << "}\n";
        return kExitValidation;
    }
    return kExitOk;
}
