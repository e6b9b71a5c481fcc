#ifndef HYPERFUSE_RADIOMETRY_HPP
#define HYPERFUSE_RADIOMETRY_HPP

#include <string>
#include <vector>

#include "hyperfuse/cube.hpp"

namespace hyperfuse {

struct Spectrum {
    std::vector<double> wavelengths;  // nm, strictly increasing
    std::vector<double> values;       // same length
};

struct Roi {
    std::size_t x0 = 0;  // sample index of the left edge
    std::size_t y0 = 0;  // line index of the top edge
    std::size_t width = 0;
    std::size_t height = 0;
};

struct RoiStats {
    std::vector<double> wavelengths;
    std::vector<double> mean;
    std::vector<double> std_dev;  // population
    std::vector<double> min;
    std::vector<double> max;
};

/// Linear interpolation of a (typically 1 nm grid) spectrum onto the target
/// wavelengths. Targets must lie within the source range; nodes pass through
/// exactly.
Spectrum resample_spectrum(const Spectrum& source, const std::vector<double>& targets);

/// Optional band-response mode: convolve the source with a Gaussian of the
/// given FWHM before sampling each target (off by default in callers).
Spectrum resample_spectrum_gaussian(const Spectrum& source,
                                    const std::vector<double>& targets,
                                    double fwhm_nm);

RoiStats roi_statistics(const HyperCube& cube, const Roi& roi);

/// Per-band tarp mean of a DN cube.
std::vector<double> roi_mean(const HyperCube& cube, const Roi& roi);

/// Gain-only DN-to-reflectance conversion: r(b) = DN(b) * r_asd(b) / DN_tarp(b).
/// r_asd is resampled to the cube's wavelengths internally when its grid
/// differs. The output cube carries f32 samples and Reflectance units.
HyperCube calibrate_cube(const HyperCube& cube, const Roi& tarp_roi,
                         const Spectrum& r_asd, unsigned threads = 1);

/// ASD CSV: header line `wavelength_nm,reflectance`, one sample per line.
Spectrum load_asd_csv(const std::string& path);

std::string roi_stats_csv(const RoiStats& stats);

/// Self-contained SVG line plot: mean in black, +/-1 std band in purple,
/// min/max envelope in red.
std::string roi_stats_svg(const RoiStats& stats, int width = 720, int height = 480);

}  // namespace hyperfuse

#endif
