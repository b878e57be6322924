#include "melada/signal/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>
#include <fmt/format.h>

#include "melada/error.hpp"

namespace melada::signal {

namespace {

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex transform of `n`-sample signals, reusing one plan.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    in_ = fftw_alloc_real(n);
    out_ = fftw_alloc_complex(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in_, out_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
    }
    fftw_free(in_);
    fftw_free(out_);
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  /// Writes |X_k|^2 for k = 0..n/2 of (signal * taper) into `power`.
  void power(std::span<const double> signal, std::span<const double> taper, std::span<double> power) {
    for (std::size_t i = 0; i < n_; ++i) in_[i] = signal[i] * taper[i];
    fftw_execute(plan_);
    for (std::size_t k = 0; k <= n_ / 2; ++k) power[k] = out_[k][0] * out_[k][0] + out_[k][1] * out_[k][1];
  }

 private:
  std::size_t n_;
  double* in_ = nullptr;
  fftw_complex* out_ = nullptr;
  fftw_plan plan_ = nullptr;
};

void check_bands(std::span<const BandSpec> bands, double fs) {
  if (bands.empty()) throw InvalidArgument("at least one band is required");
  double top = 0.0;
  for (const auto& b : bands) {
    if (!(b.lo_hz > 0.0) || !(b.lo_hz <= b.hi_hz)) {
      throw InvalidArgument(fmt::format("band {}: need 0 < lo <= hi, got [{}, {}] Hz", b.name,
                                        b.lo_hz, b.hi_hz));
    }
    top = std::max(top, b.hi_hz);
  }
  if (fs < 2.0 * top) {
    throw InvalidArgument(fmt::format(
        "sampling rate {} Hz is below twice the highest band edge ({} Hz)", fs, top));
  }
}

bool parse_double(std::string_view text, double& out) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
  return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::vector<BandSpec> default_bands() {
  return {{"delta", 1.0, 3.0},
          {"theta", 4.0, 7.0},
          {"alpha", 8.0, 13.0},
          {"beta", 14.0, 30.0},
          {"gamma", 31.0, 50.0}};
}

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

std::vector<double> tapered_power_spectrum(std::span<const double> samples) {
  if (samples.empty()) throw InvalidArgument("power spectrum of an empty signal");
  const auto taper = hann_window(samples.size());
  RealFft fft(samples.size());
  std::vector<double> power(samples.size() / 2 + 1);
  fft.power(samples, taper, power);
  return power;
}

std::vector<double> stft_band_energy(std::span<const double> window, std::size_t channels,
                                     double fs, std::span<const BandSpec> bands) {
  check_bands(bands, fs);
  if (channels == 0) throw InvalidArgument("stft_band_energy: no channels");
  const auto n = static_cast<std::size_t>(std::llround(fs));
  if (static_cast<double>(n) != fs || window.size() != channels * n) {
    throw InvalidArgument(fmt::format(
        "stft_band_energy: expected a one-second window of {} x {} samples, got {} values",
        channels, fs, window.size()));
  }
  if (!std::all_of(window.begin(), window.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("stft_band_energy: non-finite sample");
  }

  const auto taper = hann_window(n);
  RealFft fft(n);
  std::vector<double> power(n / 2 + 1);
  std::vector<double> energy(channels * bands.size(), 0.0);
  for (std::size_t ch = 0; ch < channels; ++ch) {
    fft.power(window.subspan(ch * n, n), taper, power);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) {
        const double freq = static_cast<double>(k) * fs / static_cast<double>(n);
        if (freq >= bands[b].lo_hz && freq <= bands[b].hi_hz) e += power[k];
      }
      energy[ch * bands.size() + b] = e;
    }
  }
  return energy;
}

double differential_entropy(double energy) {
  if (std::isnan(energy) || energy < 0.0) {
    throw InvalidArgument(fmt::format("differential_entropy: energy must be >= 0, got {}", energy));
  }
  return std::log(std::max(energy, kEnergyFloor));
}

std::vector<double> lds_smooth_series(std::span<const double> y, const LdsParams& p) {
  if (y.empty()) throw InvalidArgument("lds_smooth: empty series");
  if (!(p.process_var > 0.0) || !(p.obs_var > 0.0)) {
    throw InvalidArgument("lds_smooth: process and observation variances must be > 0");
  }
  if (p.observation == 0.0 || !std::isfinite(p.observation) || !std::isfinite(p.transition)) {
    throw InvalidArgument("lds_smooth: observation gain must be finite and non-zero");
  }
  if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("lds_smooth: non-finite input");
  }

  const double a = p.transition;
  const double c = p.observation;
  const std::size_t n = y.size();
  std::vector<double> x_filt(n), p_filt(n), x_pred(n), p_pred(n);

  x_filt[0] = y[0] / c;
  p_filt[0] = p.obs_var / (c * c);
  x_pred[0] = x_filt[0];
  p_pred[0] = p_filt[0];
  for (std::size_t t = 1; t < n; ++t) {
    x_pred[t] = a * x_filt[t - 1];
    p_pred[t] = a * a * p_filt[t - 1] + p.process_var;
    const double gain = p_pred[t] * c / (c * c * p_pred[t] + p.obs_var);
    x_filt[t] = x_pred[t] + gain * (y[t] - c * x_pred[t]);
    p_filt[t] = (1.0 - gain * c) * p_pred[t];
  }

  std::vector<double> x_smooth(n);
  x_smooth[n - 1] = x_filt[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    const double j = p_filt[t] * a / p_pred[t + 1];
    x_smooth[t] = x_filt[t] + j * (x_smooth[t + 1] - x_pred[t + 1]);
  }
  return x_smooth;
}

std::vector<double> lds_smooth(std::span<const double> frames, std::size_t dim, const LdsParams& params) {
  if (dim == 0 || frames.size() % dim != 0) {
    throw InvalidArgument(fmt::format("lds_smooth: {} values do not form rows of {}", frames.size(), dim));
  }
  const std::size_t n = frames.size() / dim;
  std::vector<double> out(frames.size());
  std::vector<double> series(n);
  for (std::size_t f = 0; f < dim; ++f) {
    for (std::size_t t = 0; t < n; ++t) series[t] = frames[t * dim + f];
    const auto smooth = lds_smooth_series(series, params);
    for (std::size_t t = 0; t < n; ++t) out[t * dim + f] = smooth[t];
  }
  return out;
}

std::vector<data::SequenceSample> make_sequences(std::span<const FeatureFrame> frames,
                                                 std::size_t step, std::size_t stride) {
  if (step < 1 || stride < 1 || stride > step) {
    throw InvalidArgument(fmt::format("make_sequences: need 1 <= stride <= step, got step={} stride={}",
                                      step, stride));
  }
  std::vector<data::SequenceSample> out;
  if (frames.size() < step) return out;
  const std::size_t dim = frames.front().values.size();
  for (const auto& f : frames) {
    if (f.values.size() != dim) throw ShapeError("make_sequences: frames differ in length");
  }
  const std::size_t count = (frames.size() - step) / stride + 1;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    data::SequenceSample s;
    s.frames.reserve(step * dim);
    for (std::size_t j = 0; j < step; ++j) {
      const auto& v = frames[k * stride + j].values;
      s.frames.insert(s.frames.end(), v.begin(), v.end());
    }
    out.push_back(std::move(s));
  }
  return out;
}

RawRecording read_raw_csv(const std::filesystem::path& path, double fs) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {} for reading", path.string()));
  RawRecording rec;
  rec.fs = fs;
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> row;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_commas(line);
    row.assign(cells.size(), 0.0);
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) numeric = numeric && parse_double(cells[i], row[i]);
    if (!numeric) {
      if (rec.channels == 0 && rec.samples.empty()) continue;  // header
      throw FormatError(fmt::format("{}:{}: non-numeric value", path.string(), line_no));
    }
    if (rec.channels == 0) rec.channels = cells.size();
    if (cells.size() != rec.channels) {
      throw FormatError(fmt::format("{}:{}: {} columns, expected {}", path.string(), line_no,
                                    cells.size(), rec.channels));
    }
    rec.samples.insert(rec.samples.end(), row.begin(), row.end());
  }
  if (rec.channels == 0) throw FormatError(fmt::format("{}: no samples", path.string()));
  return rec;
}

std::vector<FeatureFrame> de_frames(const RawRecording& rec, std::span<const BandSpec> bands,
                                    const LdsParams& lds) {
  check_bands(bands, rec.fs);
  const auto n = static_cast<std::size_t>(std::llround(rec.fs));
  if (static_cast<double>(n) != rec.fs) {
    throw InvalidArgument(fmt::format("sampling rate must be a whole number of Hz, got {}", rec.fs));
  }
  const std::size_t windows = rec.n_samples() / n;
  const std::size_t dim = rec.channels * bands.size();
  std::vector<double> raw(windows * dim);
  std::vector<double> block(rec.channels * n);
  for (std::size_t w = 0; w < windows; ++w) {
    for (std::size_t ch = 0; ch < rec.channels; ++ch) {
      for (std::size_t i = 0; i < n; ++i) block[ch * n + i] = rec.samples[(w * n + i) * rec.channels + ch];
    }
    const auto energy = stft_band_energy(block, rec.channels, rec.fs, bands);
    for (std::size_t k = 0; k < dim; ++k) raw[w * dim + k] = differential_entropy(energy[k]);
  }
  std::vector<FeatureFrame> frames(windows);
  if (windows == 0) return frames;
  const auto smooth = lds_smooth(raw, dim, lds);
  for (std::size_t w = 0; w < windows; ++w) {
    frames[w].values.assign(smooth.begin() + static_cast<std::ptrdiff_t>(w * dim),
                            smooth.begin() + static_cast<std::ptrdiff_t>((w + 1) * dim));
    frames[w].timestamp_s = static_cast<double>(w);
  }
  return frames;
}

data::Domain recording_to_domain(const RawRecording& recording, std::uint32_t subject_id,
                                 std::uint8_t label, const PipelineOptions& options) {
  if (label >= options.n_classes) {
    throw InvalidArgument(fmt::format("label {} out of range for {} classes", label, options.n_classes));
  }
  const auto bands = default_bands();
  const auto frames = de_frames(recording, bands, options.lds);
  data::Domain d;
  d.subject_id = subject_id;
  d.n_classes = options.n_classes;
  d.seq_len = static_cast<std::uint32_t>(options.step);
  d.feat_dim = static_cast<std::uint32_t>(recording.channels * bands.size());
  d.provenance = data::Provenance::Imported;
  for (const auto& s : make_sequences(frames, options.step, options.stride)) d.push_back(s.frames, label);
  return d;
}

}  // namespace melada::signal
