// cost.hpp — experimental-spectrum ingest, resampling onto a common frequency
// grid, and the scalar distance between two area-normalized spectra.

#pragma once

#include "specfit/spectra.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace specfit::cost {

// Reference cost below which calculated and experimental spectra are deemed
// consistent, and the inner contour below which spectra are visually
// indistinguishable. Both are defaults, overridable through run configs.
inline constexpr double kConsistencyThreshold = 0.1;
inline constexpr double kInnerThreshold = 0.05;

struct IngestOptions {
    // optional clip window applied at ingest (cm^-1, after any unit conversion)
    std::optional<double> clip_lo;
    std::optional<double> clip_hi;
    double baseline_offset = 0.0;  // subtracted from amplitudes when nonzero
};

struct PreprocessRecord {
    int merged_duplicates = 0;
    bool nm_converted = false;
    bool clipped_window = false;
    double baseline_offset = 0.0;
};

struct ExperimentalSpectrum {
    std::vector<double> nu;   // cm^-1, strictly increasing
    std::vector<double> amp;  // finite, may contain baseline noise below zero
    std::string source;
    PreprocessRecord prep{};
};

// Two-column text: optional '#' comment lines, then "nu amplitude" rows
// separated by whitespace or a comma. A "# units: nm" directive switches the
// first column to wavelength; nu = 1e7 / lambda is applied at ingest.
ExperimentalSpectrum ingest_spectrum(const std::filesystem::path& file,
                                     const IngestOptions& opts = {});
ExperimentalSpectrum ingest_spectrum(std::istream& in, const std::string& source,
                                     const IngestOptions& opts = {});

struct GridMapInfo {
    int clipped_negatives = 0;
    bool outside_support = false;  // some grid points fell outside the data hull
};

// Linear interpolation onto nu_grid (points outside the data
// support are set to zero and flagged), negative amplitudes clipped, then
// area-normalized.
spectra::Spectrum to_common_grid(const ExperimentalSpectrum& e, const std::vector<double>& nu_grid,
                                 GridMapInfo* info = nullptr);

// Cost(P) = int |A_exp - A_cal| d nu over the shared grid; both inputs must be
// normalized on identical grids. Bounded by [0, 2].
double spectral_cost(const spectra::Spectrum& a, const spectra::Spectrum& b);

// Diagnostics-only signed variant of the integral (identically ~0 for
// normalized spectra).
double spectral_cost_signed(const spectra::Spectrum& a, const spectra::Spectrum& b);

}  // namespace specfit::cost
