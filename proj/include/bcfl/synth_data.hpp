#pragma once

// Synthetic T1D patient generator, sliding-window sample construction and
// the train/validation/test partitioning used by every scenario.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace bcfl {

inline constexpr int kStepsPerDay = 288;
inline constexpr int kIntervalMinutes = 5;
inline constexpr int kChannels = 4;

enum Channel : int { kGlucose = 0, kCarbs = 1, kInsulin = 2, kTimeOfDay = 3 };

struct GlucoseSeries {
  int patient_id = 0;
  int interval_minutes = kIntervalMinutes;
  int days = 0;
  std::vector<double> glucose;      // mg/dL
  std::vector<double> carbs;        // g
  std::vector<double> insulin;      // units
  std::vector<double> time_of_day;  // fraction of day

  std::size_t length() const { return glucose.size(); }
  double value(int channel, std::size_t step) const;

  friend bool operator==(const GlucoseSeries&, const GlucoseSeries&) = default;
};

struct WindowConfig {
  int history_len = 24;  // L
  int horizon = 6;       // H

  int span() const { return history_len + horizon; }
  int lead_minutes(int interval = kIntervalMinutes) const { return horizon * interval; }
  void validate() const;
};

// Per-channel z-score statistics for glucose, carbs and insulin. Time of day
// is passed through unscaled.
struct NormStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
  double count = 0.0;

  double normalize(int channel, double v) const;
  double normalize_target(double glucose) const { return (glucose - mean[0]) / stddev[0]; }
  double denormalize_target(double z) const { return z * stddev[0] + mean[0]; }

  friend bool operator==(const NormStats&, const NormStats&) = default;
};

// Statistics over steps [begin, end) of each series.
NormStats compute_stats(std::span<const GlucoseSeries> series, std::size_t begin, std::size_t end);

// Sample-weighted pooling of per-participant statistics (parallel-variance
// combination), as a federation would agree on a shared input scaling.
NormStats pool_stats(std::span<const NormStats> parts);

struct WindowedSample {
  std::vector<double> x;  // history_len rows x 4 channels, row-major, oldest first
  double y = 0.0;         // raw glucose (mg/dL) at step start + L + H - 1
  int patient_id = 0;
  std::int32_t start = 0;  // first source step of the window

  friend bool operator==(const WindowedSample&, const WindowedSample&) = default;
};

struct PatientParams {
  double basal_glucose = 0.0;
  double circadian_amplitude = 0.0;
  double circadian_phase = 0.0;
  double meal_response_gain = 0.0;
  double insulin_response_gain = 0.0;
  int response_lag = 0;
  double noise_std = 0.0;
  double noise_ar = 0.0;
  double carb_ratio = 0.0;  // g of carbohydrate covered per unit of insulin
  int min_events_per_day = 3;
  int max_events_per_day = 5;
};

PatientParams derive_patient_params(int patient_id, std::uint64_t data_seed);

GlucoseSeries generate_patient(int patient_id, int days, std::uint64_t data_seed);
GlucoseSeries generate_malicious_series(int patient_id, int days, std::uint64_t seed);

// Windows over the whole series.
std::vector<WindowedSample> make_windows(const GlucoseSeries& series, const WindowConfig& cfg,
                                         const NormStats& stats);
// Windows whose full source span lies inside [begin, end).
std::vector<WindowedSample> make_windows(const GlucoseSeries& series, const WindowConfig& cfg,
                                         const NormStats& stats, std::size_t begin,
                                         std::size_t end);

struct SplitConfig {
  int train_days = 7;
  double val_fraction = 0.05;
};

struct PatientWindows {
  int patient_id = 0;
  std::vector<WindowedSample> samples;
};

struct HospitalDataset {
  int hospital_id = 0;
  bool malicious = false;
  std::vector<int> patient_ids;
  std::vector<WindowedSample> train;
  std::vector<WindowedSample> val;
  std::vector<PatientWindows> test;  // one entry per patient, in patient_ids order
  NormStats stats;                   // statistics the windows were scaled with
  std::size_t n_train = 0;
};

// Training statistics (first train_days of each series) for a hospital.
NormStats training_stats(std::span<const GlucoseSeries> series, const SplitConfig& split);

// Splits using the hospital's own training statistics.
HospitalDataset split_dataset(int hospital_id, std::span<const GlucoseSeries> series,
                              const WindowConfig& cfg, const SplitConfig& split,
                              std::uint64_t split_seed);
// Splits using externally agreed statistics (shared federation scaling).
HospitalDataset split_dataset(int hospital_id, std::span<const GlucoseSeries> series,
                              const WindowConfig& cfg, const SplitConfig& split,
                              std::uint64_t split_seed, const NormStats& stats);

// Test-only windows for patients that never contribute training data.
PatientWindows test_windows(const GlucoseSeries& series, const WindowConfig& cfg,
                            const SplitConfig& split, const NormStats& stats);

void write_series_csv(std::ostream& out, const GlucoseSeries& series);
GlucoseSeries read_series_csv(std::istream& in, int patient_id);

}  // namespace bcfl
