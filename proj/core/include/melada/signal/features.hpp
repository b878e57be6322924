#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "melada/data/domain.hpp"

namespace melada::signal {

/// Frequency band with inclusive bounds in Hz.
struct BandSpec {
  std::string name;
  double lo_hz = 0.0;
  double hi_hz = 0.0;
};

/// delta 1-3, theta 4-7, alpha 8-13, beta 14-30, gamma 31-50 Hz.
std::vector<BandSpec> default_bands();

/// Periodic Hann taper: w[n] = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann_window(std::size_t n);

/// One-sided power |X_k|^2, k = 0..N/2, of the Hann-tapered signal.
std::vector<double> tapered_power_spectrum(std::span<const double> samples);

/// Band energies of a one-second window.
///
/// `window` is channel-major: channel ch occupies samples [ch * fs, (ch + 1) * fs).
/// Returns channels x bands energies, channel-major. A DFT bin k (frequency
/// k * fs / N) belongs to a band when lo <= freq <= hi.
std::vector<double> stft_band_energy(std::span<const double> window, std::size_t channels,
                                     double fs, std::span<const BandSpec> bands);

inline constexpr double kEnergyFloor = 1e-12;

/// Log band energy with a fixed floor: ln(max(energy, 1e-12)).
double differential_entropy(double energy);

struct LdsParams {
  double transition = 1.0;
  double observation = 1.0;
  double process_var = 1e-4;
  double obs_var = 1e-2;
};

/// Kalman filter + Rauch-Tung-Striebel smoother for the scalar model
/// x_t = a x_{t-1} + w, y_t = c x_t + v. The first state is initialised from
/// the first observation (x = y_1 / c, P = r / c^2).
std::vector<double> lds_smooth_series(std::span<const double> series, const LdsParams& params = {});

/// Smooths each of `dim` feature trajectories of a frame-major
/// (n_frames x dim) matrix independently.
std::vector<double> lds_smooth(std::span<const double> frames, std::size_t dim,
                               const LdsParams& params = {});

struct FeatureFrame {
  std::vector<double> values;
  double timestamp_s = 0.0;
};

/// Sliding windows of `step` frames advancing by `stride`. Returns
/// floor((N - step) / stride) + 1 samples when N >= step, otherwise none.
std::vector<data::SequenceSample> make_sequences(std::span<const FeatureFrame> frames,
                                                 std::size_t step = 15, std::size_t stride = 14);

/// Multichannel recording, sample-major (n_samples x channels).
struct RawRecording {
  double fs = 200.0;
  std::size_t channels = 0;
  std::vector<double> samples;

  std::size_t n_samples() const noexcept { return channels == 0 ? 0 : samples.size() / channels; }
};

/// One column per channel, one row per sample. A non-numeric first row is
/// treated as a header.
RawRecording read_raw_csv(const std::filesystem::path& path, double fs);

/// Differential-entropy frames over non-overlapping one-second windows,
/// smoothed with the LDS. Frame values are channel-major (ch * n_bands + band).
std::vector<FeatureFrame> de_frames(const RawRecording& recording,
                                    std::span<const BandSpec> bands,
                                    const LdsParams& lds = {});

struct PipelineOptions {
  std::size_t step = 15;
  std::size_t stride = 14;
  std::uint32_t n_classes = 3;
  LdsParams lds;
};

/// Full path from a raw recording to a labelled domain.
data::Domain recording_to_domain(const RawRecording& recording, std::uint32_t subject_id,
                                 std::uint8_t label, const PipelineOptions& options = {});

}  // namespace melada::signal
