#include "bcfl/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bcfl/errors.hpp"
#include "bcfl/random.hpp"

namespace bcfl {

namespace {

constexpr double kGlucoseMin = 40.0;
constexpr double kGlucoseMax = 400.0;
constexpr double kCarbsMax = 200.0;
constexpr double kInsulinMax = 25.0;

// Gamma-shaped impulse response normalised to a peak of 1 at s == lag.
double impulse(int s, int lag) {
  const double u = static_cast<double>(s) / lag;
  return u * std::exp(1.0 - u);
}

struct DayEvent {
  int step;
  double carbs;
  double insulin;
};

std::vector<DayEvent> draw_day_events(const PatientParams& p, Rng& rng) {
  // Main meals around breakfast, lunch and dinner; extra events are snacks.
  static constexpr std::array<double, 3> kMainHours{7.5, 12.5, 18.5};
  static constexpr std::array<double, 2> kSnackHours{10.0, 15.5};

  const int n_meals = static_cast<int>(rng.uniform_int(p.min_events_per_day, p.max_events_per_day));
  const int n_bolus = static_cast<int>(rng.uniform_int(p.min_events_per_day, p.max_events_per_day));

  auto to_step = [](double hour) {
    return std::clamp(static_cast<int>(std::lround(hour * 12.0)), 0, kStepsPerDay - 1);
  };

  std::vector<DayEvent> events;
  for (int m = 0; m < n_meals; ++m) {
    const bool main = m < 3;
    const double hour = main ? kMainHours[m] + rng.uniform(-0.75, 0.75)
                             : kSnackHours[m - 3] + rng.uniform(-0.5, 0.5);
    const double carbs = main ? rng.uniform(30.0, 90.0) : rng.uniform(10.0, 30.0);
    events.push_back({to_step(hour), carbs, 0.0});
  }
  // Boluses cover meals first; any remaining ones are correction boluses.
  for (int b = 0; b < n_bolus; ++b) {
    if (b < n_meals) {
      auto& ev = events[static_cast<std::size_t>(b)];
      ev.insulin = std::min(kInsulinMax, ev.carbs / p.carb_ratio * rng.uniform(0.8, 1.2));
    } else {
      const int step = static_cast<int>(rng.uniform_int(0, kStepsPerDay - 1));
      events.push_back({step, 0.0, rng.uniform(1.0, 3.0)});
    }
  }
  return events;
}

void check_days(int days) {
  if (days < 1) throw std::invalid_argument("days must be >= 1, got " + std::to_string(days));
}

GlucoseSeries empty_series(int patient_id, int days) {
  GlucoseSeries s;
  s.patient_id = patient_id;
  s.days = days;
  const auto n = static_cast<std::size_t>(days) * kStepsPerDay;
  s.glucose.assign(n, 0.0);
  s.carbs.assign(n, 0.0);
  s.insulin.assign(n, 0.0);
  s.time_of_day.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.time_of_day[i] = static_cast<double>(i % kStepsPerDay) / kStepsPerDay;
  return s;
}

}  // namespace

double GlucoseSeries::value(int channel, std::size_t step) const {
  switch (channel) {
    case kGlucose: return glucose[step];
    case kCarbs: return carbs[step];
    case kInsulin: return insulin[step];
    case kTimeOfDay: return time_of_day[step];
  }
  throw std::out_of_range("channel index");
}

void WindowConfig::validate() const {
  if (history_len < 1) throw std::invalid_argument("history_len must be >= 1");
  if (horizon < 1) throw std::invalid_argument("horizon must be >= 1");
}

double NormStats::normalize(int channel, double v) const {
  if (channel == kTimeOfDay) return v;
  return (v - mean[static_cast<std::size_t>(channel)]) / stddev[static_cast<std::size_t>(channel)];
}

NormStats compute_stats(std::span<const GlucoseSeries> series, std::size_t begin, std::size_t end) {
  NormStats st;
  std::array<double, 3> sum{}, sq{};
  double n = 0.0;
  for (const auto& s : series) {
    const std::size_t e = std::min(end, s.length());
    for (std::size_t i = begin; i < e; ++i) {
      for (int c = 0; c < 3; ++c) sum[c] += s.value(c, i);
      n += 1.0;
    }
  }
  if (n == 0.0) throw std::invalid_argument("compute_stats: no samples in range");
  for (int c = 0; c < 3; ++c) st.mean[c] = sum[c] / n;
  // Second pass for numerically stable variance.
  for (const auto& s : series) {
    const std::size_t e = std::min(end, s.length());
    for (std::size_t i = begin; i < e; ++i)
      for (int c = 0; c < 3; ++c) {
        const double d = s.value(c, i) - st.mean[c];
        sq[c] += d * d;
      }
  }
  for (int c = 0; c < 3; ++c) {
    const double sd = std::sqrt(sq[c] / n);
    st.stddev[c] = sd > 1e-9 ? sd : 1.0;
  }
  st.count = n;
  return st;
}

NormStats pool_stats(std::span<const NormStats> parts) {
  if (parts.empty()) throw std::invalid_argument("pool_stats: no statistics to pool");
  NormStats out;
  double n = 0.0;
  for (const auto& p : parts) n += p.count;
  if (n <= 0.0) throw std::invalid_argument("pool_stats: zero total count");
  for (int c = 0; c < 3; ++c) {
    double m = 0.0;
    for (const auto& p : parts) m += p.count * p.mean[c];
    m /= n;
    double v = 0.0;
    for (const auto& p : parts) {
      const double d = p.mean[c] - m;
      v += p.count * (p.stddev[c] * p.stddev[c] + d * d);
    }
    out.mean[c] = m;
    const double sd = std::sqrt(v / n);
    out.stddev[c] = sd > 1e-9 ? sd : 1.0;
  }
  out.count = n;
  return out;
}

PatientParams derive_patient_params(int patient_id, std::uint64_t data_seed) {
  Rng rng(derive_seed({data_seed, 0x7061746965ULL, static_cast<std::uint64_t>(patient_id)}));
  PatientParams p;
  p.basal_glucose = rng.uniform(110.0, 170.0);
  p.circadian_amplitude = rng.uniform(5.0, 25.0);
  p.circadian_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.meal_response_gain = rng.uniform(1.2, 2.8);
  p.carb_ratio = rng.uniform(8.0, 15.0);
  // Slightly mismatched insulin sensitivity gives each patient its own drift.
  p.insulin_response_gain = p.meal_response_gain * p.carb_ratio * 0.5 * rng.uniform(0.85, 1.15);
  p.response_lag = static_cast<int>(rng.uniform_int(4, 9));
  p.noise_std = rng.uniform(2.0, 6.0);
  p.noise_ar = 0.9;
  return p;
}

GlucoseSeries generate_patient(int patient_id, int days, std::uint64_t data_seed) {
  check_days(days);
  const PatientParams p = derive_patient_params(patient_id, data_seed);
  GlucoseSeries s = empty_series(patient_id, days);
  const std::size_t n = s.length();

  Rng rng(derive_seed({data_seed, 0x6576656e7473ULL, static_cast<std::uint64_t>(patient_id)}));
  for (int d = 0; d < days; ++d) {
    for (const auto& ev : draw_day_events(p, rng)) {
      const auto i = static_cast<std::size_t>(d) * kStepsPerDay + static_cast<std::size_t>(ev.step);
      s.carbs[i] = std::min(kCarbsMax, s.carbs[i] + ev.carbs);
      s.insulin[i] = std::min(kInsulinMax, s.insulin[i] + ev.insulin);
    }
  }

  const int meal_lag = p.response_lag;
  const int insulin_lag = 2 * p.response_lag;
  std::vector<double> effect(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (s.carbs[i] > 0.0) {
      const std::size_t reach = std::min(n, i + static_cast<std::size_t>(10 * meal_lag));
      for (std::size_t t = i; t < reach; ++t)
        effect[t] += p.meal_response_gain * s.carbs[i] * impulse(static_cast<int>(t - i), meal_lag);
    }
    if (s.insulin[i] > 0.0) {
      const std::size_t reach = std::min(n, i + static_cast<std::size_t>(10 * insulin_lag));
      for (std::size_t t = i; t < reach; ++t)
        effect[t] -=
            p.insulin_response_gain * s.insulin[i] * impulse(static_cast<int>(t - i), insulin_lag);
    }
  }

  const double innovation = p.noise_std * std::sqrt(1.0 - p.noise_ar * p.noise_ar);
  double noise = rng.normal(0.0, p.noise_std);
  for (std::size_t i = 0; i < n; ++i) {
    const double circadian = p.circadian_amplitude *
                             std::sin(2.0 * std::numbers::pi * s.time_of_day[i] + p.circadian_phase);
    const double g = p.basal_glucose + circadian + effect[i] + noise;
    s.glucose[i] = std::clamp(g, kGlucoseMin, kGlucoseMax);
    noise = p.noise_ar * noise + rng.normal(0.0, innovation);
  }
  return s;
}

GlucoseSeries generate_malicious_series(int patient_id, int days, std::uint64_t seed) {
  check_days(days);
  GlucoseSeries s = empty_series(patient_id, days);
  Rng rng(derive_seed({seed, 0x66616b65ULL, static_cast<std::uint64_t>(patient_id)}));
  for (std::size_t i = 0; i < s.length(); ++i) {
    s.glucose[i] = rng.uniform(-10.0, 10.0);
    s.carbs[i] = rng.uniform(-3.0, 3.0);
    s.insulin[i] = rng.uniform(-5.0, 5.0);
    s.time_of_day[i] = rng.uniform(-1.0, 1.0);
  }
  return s;
}

std::vector<WindowedSample> make_windows(const GlucoseSeries& series, const WindowConfig& cfg,
                                         const NormStats& stats) {
  return make_windows(series, cfg, stats, 0, series.length());
}

std::vector<WindowedSample> make_windows(const GlucoseSeries& series, const WindowConfig& cfg,
                                         const NormStats& stats, std::size_t begin,
                                         std::size_t end) {
  cfg.validate();
  end = std::min(end, series.length());
  const auto span = static_cast<std::size_t>(cfg.span());
  if (begin > end || end - begin < span)
    throw EmptyWindowError("series range of " + std::to_string(end > begin ? end - begin : 0) +
                           " steps is shorter than L+H = " + std::to_string(span));
  const auto L = static_cast<std::size_t>(cfg.history_len);
  std::vector<WindowedSample> out;
  out.reserve(end - begin - span + 1);
  for (std::size_t start = begin; start + span <= end; ++start) {
    WindowedSample w;
    w.x.resize(L * kChannels);
    for (std::size_t r = 0; r < L; ++r)
      for (int c = 0; c < kChannels; ++c)
        w.x[r * kChannels + static_cast<std::size_t>(c)] = stats.normalize(c, series.value(c, start + r));
    w.y = series.glucose[start + span - 1];
    w.patient_id = series.patient_id;
    w.start = static_cast<std::int32_t>(start);
    out.push_back(std::move(w));
  }
  return out;
}

NormStats training_stats(std::span<const GlucoseSeries> series, const SplitConfig& split) {
  return compute_stats(series, 0, static_cast<std::size_t>(split.train_days) * kStepsPerDay);
}

HospitalDataset split_dataset(int hospital_id, std::span<const GlucoseSeries> series,
                              const WindowConfig& cfg, const SplitConfig& split,
                              std::uint64_t split_seed) {
  return split_dataset(hospital_id, series, cfg, split, split_seed, training_stats(series, split));
}

HospitalDataset split_dataset(int hospital_id, std::span<const GlucoseSeries> series,
                              const WindowConfig& cfg, const SplitConfig& split,
                              std::uint64_t split_seed, const NormStats& stats) {
  if (series.empty()) throw std::invalid_argument("split_dataset: no patient series");
  if (split.train_days < 1) throw std::invalid_argument("split_dataset: train_days must be >= 1");
  if (!(split.val_fraction > 0.0 && split.val_fraction < 1.0))
    throw std::invalid_argument("split_dataset: val_fraction must be in (0, 1)");
  const auto train_end = static_cast<std::size_t>(split.train_days) * kStepsPerDay;
  const auto span = static_cast<std::size_t>(cfg.span());

  HospitalDataset ds;
  ds.hospital_id = hospital_id;
  ds.stats = stats;
  std::vector<WindowedSample> pooled;
  for (const auto& s : series) {
    if (s.length() < train_end + span)
      throw std::invalid_argument("split_dataset: patient " + std::to_string(s.patient_id) + " has " +
                                  std::to_string(s.days) + " days; need more than " +
                                  std::to_string(split.train_days) + " training days plus a test window");
    ds.patient_ids.push_back(s.patient_id);
    auto tr = make_windows(s, cfg, stats, 0, train_end);
    pooled.insert(pooled.end(), std::make_move_iterator(tr.begin()), std::make_move_iterator(tr.end()));
    ds.test.push_back({s.patient_id, make_windows(s, cfg, stats, train_end, s.length())});
  }
  if (pooled.size() < 2) throw std::invalid_argument("split_dataset: too few training windows");

  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(split.val_fraction * static_cast<double>(pooled.size()))));
  std::vector<std::size_t> idx(pooled.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(derive_seed({split_seed, 0x76616cULL, static_cast<std::uint64_t>(hospital_id)}));
  rng.shuffle(idx.begin(), idx.end());
  std::vector<char> is_val(pooled.size(), 0);
  for (std::size_t i = 0; i < n_val; ++i) is_val[idx[i]] = 1;

  for (std::size_t i = 0; i < pooled.size(); ++i)
    (is_val[i] ? ds.val : ds.train).push_back(std::move(pooled[i]));
  ds.n_train = ds.train.size();
  return ds;
}

PatientWindows test_windows(const GlucoseSeries& series, const WindowConfig& cfg,
                            const SplitConfig& split, const NormStats& stats) {
  const auto train_end = static_cast<std::size_t>(split.train_days) * kStepsPerDay;
  return {series.patient_id, make_windows(series, cfg, stats, train_end, series.length())};
}

void write_series_csv(std::ostream& out, const GlucoseSeries& s) {
  out << "step,glucose,carbs,insulin,time_of_day\n";
  char buf[160];
  for (std::size_t i = 0; i < s.length(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", i, s.glucose[i], s.carbs[i],
                  s.insulin[i], s.time_of_day[i]);
    out << buf;
  }
}

GlucoseSeries read_series_csv(std::istream& in, int patient_id) {
  std::string line;
  if (!std::getline(in, line) || line != "step,glucose,carbs,insulin,time_of_day")
    throw std::invalid_argument("series CSV: missing or unexpected header");
  GlucoseSeries s;
  s.patient_id = patient_id;
  std::size_t expect = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::array<double, 5> v{};
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (!std::getline(row, cell, ',')) throw std::invalid_argument("series CSV: short row: " + line);
      v[k] = std::stod(cell);
    }
    if (static_cast<std::size_t>(v[0]) != expect)
      throw std::invalid_argument("series CSV: non-contiguous step at row " + std::to_string(expect));
    ++expect;
    s.glucose.push_back(v[1]);
    s.carbs.push_back(v[2]);
    s.insulin.push_back(v[3]);
    s.time_of_day.push_back(v[4]);
  }
  s.days = static_cast<int>((s.length() + kStepsPerDay - 1) / kStepsPerDay);
  return s;
}

}  // namespace bcfl
