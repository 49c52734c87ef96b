#include "specfit/cost.hpp"

#include "specfit/util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace specfit::cost {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// Recognizes the sidecar metadata directive "# units: nm" (or cm-1).
std::optional<std::string> parse_units_directive(const std::string& comment) {
    std::string body = trim(comment.substr(1));
    std::string lower;
    lower.reserve(body.size());
    for (char c : body) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    const std::string key = "units:";
    if (lower.rfind(key, 0) != 0) return std::nullopt;
    return trim(lower.substr(key.size()));
}

void check_grids_match(const spectra::Spectrum& a, const spectra::Spectrum& b) {
    if (a.nu.size() != b.nu.size()) throw std::invalid_argument("spectral_cost: grid size mismatch");
    for (std::size_t i = 0; i < a.nu.size(); ++i) {
        if (std::abs(a.nu[i] - b.nu[i]) > 1e-9 * std::max(1.0, std::abs(a.nu[i]))) {
            throw std::invalid_argument("spectral_cost: grids differ at index " + std::to_string(i));
        }
    }
}

}  // namespace

ExperimentalSpectrum ingest_spectrum(const std::filesystem::path& file, const IngestOptions& opts) {
    std::ifstream in(file);
    if (!in) throw std::invalid_argument("cannot open spectrum file: " + file.string());
    return ingest_spectrum(in, file.string(), opts);
}

ExperimentalSpectrum ingest_spectrum(std::istream& in, const std::string& source,
                                     const IngestOptions& opts) {
    ExperimentalSpectrum spec;
    spec.source = source;

    bool units_nm = false;
    std::vector<std::pair<double, double>> pts;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string body = trim(line);
        if (body.empty()) continue;
        if (body[0] == '#') {
            if (auto units = parse_units_directive(body)) {
                if (*units == "nm") {
                    units_nm = true;
                } else if (*units != "cm-1" && *units != "cm^-1") {
                    throw std::invalid_argument(source + " line " + std::to_string(line_no) +
                                                ": unknown units '" + *units + "'");
                }
            }
            continue;
        }
        std::replace(body.begin(), body.end(), ',', ' ');
        std::istringstream row(body);
        double x = 0.0, y = 0.0;
        std::string extra;
        if (!(row >> x >> y) || (row >> extra)) {
            throw std::invalid_argument(source + " line " + std::to_string(line_no) +
                                        ": expected two numeric columns, got '" + trim(line) + "'");
        }
        if (!std::isfinite(x) || !std::isfinite(y)) {
            throw std::invalid_argument(source + " line " + std::to_string(line_no) +
                                        ": non-finite value");
        }
        pts.emplace_back(x, y);
    }

    if (units_nm) {
        spec.prep.nm_converted = true;
        for (auto& [x, y] : pts) {
            if (!(x > 0.0)) {
                throw std::invalid_argument(source + ": nonpositive wavelength with nm units");
            }
            x = 1e7 / x;
        }
    }
    if (opts.baseline_offset != 0.0) {
        spec.prep.baseline_offset = opts.baseline_offset;
        for (auto& [x, y] : pts) y -= opts.baseline_offset;
    }
    if (opts.clip_lo || opts.clip_hi) {
        spec.prep.clipped_window = true;
        std::erase_if(pts, [&](const auto& p) {
            return (opts.clip_lo && p.first < *opts.clip_lo) ||
                   (opts.clip_hi && p.first > *opts.clip_hi);
        });
    }

    std::stable_sort(pts.begin(), pts.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    // merge exact-duplicate frequencies by averaging their amplitudes
    std::size_t i = 0;
    while (i < pts.size()) {
        std::size_t j = i + 1;
        double sum = pts[i].second;
        while (j < pts.size() && pts[j].first == pts[i].first) {
            sum += pts[j].second;
            ++j;
        }
        if (j > i + 1) {
            pts[i].second = sum / static_cast<double>(j - i);
            pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i) + 1,
                      pts.begin() + static_cast<std::ptrdiff_t>(j));
            spec.prep.merged_duplicates += static_cast<int>(j - i - 1);
        }
        ++i;
    }

    if (pts.size() < 10) {
        throw std::invalid_argument(source + ": need at least 10 points, got " +
                                    std::to_string(pts.size()));
    }
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (!(pts[k].first < pts[k + 1].first)) {
            throw std::invalid_argument(source + ": frequency axis not strictly increasing");
        }
    }

    spec.nu.reserve(pts.size());
    spec.amp.reserve(pts.size());
    for (const auto& [x, y] : pts) {
        spec.nu.push_back(x);
        spec.amp.push_back(y);
    }
    return spec;
}

spectra::Spectrum to_common_grid(const ExperimentalSpectrum& e, const std::vector<double>& nu_grid,
                                 GridMapInfo* info) {
    if (e.nu.size() < 2) throw std::invalid_argument("to_common_grid: need at least 2 data points");
    if (nu_grid.size() < 2) throw std::invalid_argument("to_common_grid: grid too small");
    if (nu_grid.back() < e.nu.front() || nu_grid.front() > e.nu.back()) {
        throw std::invalid_argument("to_common_grid: grid entirely outside the data support");
    }

    GridMapInfo local;
    spectra::Spectrum out;
    out.nu = nu_grid;
    out.amp.resize(nu_grid.size(), 0.0);

    for (std::size_t i = 0; i < nu_grid.size(); ++i) {
        const double x = nu_grid[i];
        if (x < e.nu.front() || x > e.nu.back()) {
            local.outside_support = true;
            continue;
        }
        const auto upper = std::upper_bound(e.nu.begin(), e.nu.end(), x);
        std::size_t hi = std::min<std::size_t>(
            static_cast<std::size_t>(std::distance(e.nu.begin(), upper)), e.nu.size() - 1);
        if (hi == 0) hi = 1;
        const std::size_t lo = hi - 1;
        const double f = (x - e.nu[lo]) / (e.nu[hi] - e.nu[lo]);
        double a = e.amp[lo] + f * (e.amp[hi] - e.amp[lo]);
        if (a < 0.0) {
            a = 0.0;
            ++local.clipped_negatives;
        }
        out.amp[i] = a;
    }

    const double area = util::trapezoid(out.nu, out.amp);
    if (!(area > 0.0)) {
        throw std::invalid_argument("to_common_grid: data has nonpositive area on the grid");
    }
    for (double& a : out.amp) a /= area;
    out.normalized = true;
    if (info) *info = local;
    return out;
}

double spectral_cost(const spectra::Spectrum& a, const spectra::Spectrum& b) {
    if (!a.normalized || !b.normalized) {
        throw std::invalid_argument("spectral_cost: inputs must be area-normalized");
    }
    check_grids_match(a, b);
    std::vector<double> diff(a.nu.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(a.amp[i] - b.amp[i]);
    const double value = util::trapezoid(a.nu, diff);
    return std::clamp(value, 0.0, 2.0);
}

double spectral_cost_signed(const spectra::Spectrum& a, const spectra::Spectrum& b) {
    if (!a.normalized || !b.normalized) {
        throw std::invalid_argument("spectral_cost_signed: inputs must be area-normalized");
    }
    check_grids_match(a, b);
    std::vector<double> diff(a.nu.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = a.amp[i] - b.amp[i];
    return util::trapezoid(a.nu, diff);
}

}  // namespace specfit::cost
