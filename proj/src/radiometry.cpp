#include "hyperfuse/radiometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hyperfuse/errors.hpp"
#include "hyperfuse/parallel.hpp"

namespace hyperfuse {

namespace {

double interp_at(const Spectrum& src, double nm) {
    const auto& w = src.wavelengths;
    if (nm < w.front() || nm > w.back()) throw TargetOutOfRange(nm);
    const auto it = std::lower_bound(w.begin(), w.end(), nm);
    const std::size_t hi = static_cast<std::size_t>(it - w.begin());
    if (hi < w.size() && w[hi] == nm) return src.values[hi];  // node passthrough
    const std::size_t lo = hi - 1;
    const double t = (nm - w[lo]) / (w[hi] - w[lo]);
    return src.values[lo] * (1.0 - t) + src.values[hi] * t;
}

void check_roi(const HyperCube& cube, const Roi& roi) {
    if (roi.width == 0 || roi.height == 0 ||
        roi.x0 + roi.width > cube.header.samples ||
        roi.y0 + roi.height > cube.header.lines)
        throw RoiOutOfBounds();
}

}  // namespace

Spectrum resample_spectrum(const Spectrum& source, const std::vector<double>& targets) {
    Spectrum out;
    out.wavelengths = targets;
    out.values.reserve(targets.size());
    for (double nm : targets) out.values.push_back(interp_at(source, nm));
    return out;
}

Spectrum resample_spectrum_gaussian(const Spectrum& source,
                                    const std::vector<double>& targets,
                                    double fwhm_nm) {
    const double sigma = fwhm_nm / 2.3548200450309493;  // FWHM -> sigma
    const double reach = 4.0 * sigma;
    Spectrum out;
    out.wavelengths = targets;
    out.values.reserve(targets.size());
    for (double nm : targets) {
        if (nm < source.wavelengths.front() || nm > source.wavelengths.back())
            throw TargetOutOfRange(nm);
        double acc = 0.0, wsum = 0.0;
        for (std::size_t i = 0; i < source.wavelengths.size(); ++i) {
            const double d = source.wavelengths[i] - nm;
            if (std::abs(d) > reach) continue;
            const double g = std::exp(-0.5 * d * d / (sigma * sigma));
            acc += g * source.values[i];
            wsum += g;
        }
        out.values.push_back(acc / wsum);
    }
    return out;
}

RoiStats roi_statistics(const HyperCube& cube, const Roi& roi) {
    check_roi(cube, roi);
    const std::size_t bands = cube.header.bands;
    const double n = static_cast<double>(roi.width * roi.height);

    RoiStats stats;
    stats.wavelengths = cube.header.wavelengths;
    stats.mean.assign(bands, 0.0);
    stats.std_dev.assign(bands, 0.0);
    stats.min.assign(bands, std::numeric_limits<double>::infinity());
    stats.max.assign(bands, -std::numeric_limits<double>::infinity());

    std::vector<double> sq(bands, 0.0);
    for (std::size_t l = roi.y0; l < roi.y0 + roi.height; ++l)
        for (std::size_t s = roi.x0; s < roi.x0 + roi.width; ++s) {
            const double* spec = cube.spectrum(l, s);
            for (std::size_t b = 0; b < bands; ++b) {
                const double v = spec[b];
                stats.mean[b] += v;
                sq[b] += v * v;
                stats.min[b] = std::min(stats.min[b], v);
                stats.max[b] = std::max(stats.max[b], v);
            }
        }
    for (std::size_t b = 0; b < bands; ++b) {
        stats.mean[b] /= n;
        const double var = sq[b] / n - stats.mean[b] * stats.mean[b];
        stats.std_dev[b] = std::sqrt(std::max(0.0, var));
    }
    return stats;
}

std::vector<double> roi_mean(const HyperCube& cube, const Roi& roi) {
    check_roi(cube, roi);
    std::vector<double> mean(cube.header.bands, 0.0);
    for (std::size_t l = roi.y0; l < roi.y0 + roi.height; ++l)
        for (std::size_t s = roi.x0; s < roi.x0 + roi.width; ++s) {
            const double* spec = cube.spectrum(l, s);
            for (std::size_t b = 0; b < cube.header.bands; ++b) mean[b] += spec[b];
        }
    const double n = static_cast<double>(roi.width * roi.height);
    for (double& m : mean) m /= n;
    return mean;
}

HyperCube calibrate_cube(const HyperCube& cube, const Roi& tarp_roi,
                         const Spectrum& r_asd, unsigned threads) {
    if (cube.units != Units::DigitalNumber)
        throw UnitsMismatch("calibrate_cube expects a DigitalNumber cube");

    const Spectrum resampled =
        (r_asd.wavelengths == cube.header.wavelengths)
            ? r_asd
            : resample_spectrum(r_asd, cube.header.wavelengths);

    const std::vector<double> tarp = roi_mean(cube, tarp_roi);
    const std::size_t bands = cube.header.bands;
    std::vector<double> gain(bands);
    for (std::size_t b = 0; b < bands; ++b) {
        if (!(tarp[b] > 0.0)) throw ZeroTarpSignal(b);
        gain[b] = resampled.values[b] / tarp[b];
    }

    HyperCube out;
    out.header = cube.header;
    out.header.data_type = DataType::F32;  // reflectance is always written f32
    out.units = Units::Reflectance;
    out.values.resize(cube.values.size());

    parallel_for(cube.header.pixel_count(), threads,
                 [&](std::size_t begin, std::size_t end) {
                     for (std::size_t p = begin; p < end; ++p)
                         for (std::size_t b = 0; b < bands; ++b)
                             out.values[p * bands + b] =
                                 cube.values[p * bands + b] * gain[b];
                 });
    return out;
}

Spectrum load_asd_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure(path);
    Spectrum spec;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        if (first) {
            first = false;
            if (line.find("wavelength") != std::string::npos) continue;  // header row
        }
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
            throw MalformedValue("asd csv row: " + line);
        try {
            spec.wavelengths.push_back(std::stod(a));
            spec.values.push_back(std::stod(b));
        } catch (...) {
            throw MalformedValue("asd csv row: " + line);
        }
    }
    for (std::size_t i = 1; i < spec.wavelengths.size(); ++i)
        if (!(spec.wavelengths[i] > spec.wavelengths[i - 1]))
            throw MalformedValue("asd csv wavelengths not strictly increasing");
    if (spec.wavelengths.empty()) throw MalformedValue("asd csv has no samples");
    return spec;
}

std::string roi_stats_csv(const RoiStats& stats) {
    std::ostringstream out;
    out.precision(12);
    out << "wavelength_nm,mean,std,min,max\n";
    for (std::size_t b = 0; b < stats.wavelengths.size(); ++b)
        out << stats.wavelengths[b] << ',' << stats.mean[b] << ',' << stats.std_dev[b]
            << ',' << stats.min[b] << ',' << stats.max[b] << "\n";
    return out.str();
}

std::string roi_stats_svg(const RoiStats& stats, int width, int height) {
    const int ml = 50, mr = 15, mt = 15, mb = 35;  // margins
    const double x0 = stats.wavelengths.front(), x1 = stats.wavelengths.back();
    double y0 = *std::min_element(stats.min.begin(), stats.min.end());
    double y1 = *std::max_element(stats.max.begin(), stats.max.end());
    if (y1 <= y0) y1 = y0 + 1.0;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    const auto px = [&](double nm) {
        return ml + (nm - x0) / std::max(1e-12, x1 - x0) * (width - ml - mr);
    };
    const auto py = [&](double v) {
        return height - mb - (v - y0) / (y1 - y0) * (height - mt - mb);
    };
    const auto polyline = [&](const std::vector<double>& ys, const char* color,
                              std::ostringstream& out) {
        out << "<polyline fill=\"none\" stroke=\"" << color
            << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t b = 0; b < ys.size(); ++b)
            out << px(stats.wavelengths[b]) << ',' << py(ys[b]) << ' ';
        out << "\"/>\n";
    };

    std::ostringstream out;
    out.precision(7);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // +/- one standard deviation band
    out << "<polygon fill=\"#b070d0\" fill-opacity=\"0.35\" stroke=\"none\" points=\"";
    for (std::size_t b = 0; b < stats.wavelengths.size(); ++b)
        out << px(stats.wavelengths[b]) << ','
            << py(stats.mean[b] + stats.std_dev[b]) << ' ';
    for (std::size_t b = stats.wavelengths.size(); b-- > 0;)
        out << px(stats.wavelengths[b]) << ','
            << py(stats.mean[b] - stats.std_dev[b]) << ' ';
    out << "\"/>\n";

    polyline(stats.min, "red", out);
    polyline(stats.max, "red", out);
    polyline(stats.mean, "black", out);

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 8
        << "\" font-size=\"12\" text-anchor=\"middle\">wavelength (nm)</text>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace hyperfuse
