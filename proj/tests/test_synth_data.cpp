#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "bcfl/errors.hpp"
#include "bcfl/synth_data.hpp"

using namespace bcfl;

namespace {

GlucoseSeries ramp_series(int len) {
  GlucoseSeries s;
  s.patient_id = 9;
  s.days = 1;
  for (int i = 0; i < len; ++i) {
    s.glucose.push_back(100.0 + i);
    s.carbs.push_back(i % 7 == 0 ? 20.0 : 0.0);
    s.insulin.push_back(i % 11 == 0 ? 2.0 : 0.0);
    s.time_of_day.push_back(static_cast<double>(i % kStepsPerDay) / kStepsPerDay);
  }
  return s;
}

std::vector<GlucoseSeries> cohort(int first, int n, int days, std::uint64_t seed) {
  std::vector<GlucoseSeries> out;
  for (int i = 0; i < n; ++i) out.push_back(generate_patient(first + i, days, seed));
  return out;
}

}  // namespace

TEST(GeneratePatient, LengthIsDaysTimesStepsPerDay) {
  const auto s = generate_patient(1, 28, 42);
  EXPECT_EQ(s.length(), 8064u);
  EXPECT_EQ(s.carbs.size(), 8064u);
  EXPECT_EQ(s.insulin.size(), 8064u);
  EXPECT_EQ(s.time_of_day.size(), 8064u);
  EXPECT_EQ(s.interval_minutes, 5);
}

TEST(GeneratePatient, Deterministic) {
  EXPECT_EQ(generate_patient(3, 5, 42), generate_patient(3, 5, 42));
  EXPECT_NE(generate_patient(3, 5, 42).glucose, generate_patient(3, 5, 43).glucose);
}

TEST(GeneratePatient, ParamsDifferAcrossPatients) {
  const auto a = derive_patient_params(1, 42);
  const auto b = derive_patient_params(2, 42);
  EXPECT_NE(a.basal_glucose, b.basal_glucose);
  EXPECT_GT(a.meal_response_gain, 0.0);
  EXPECT_GT(a.insulin_response_gain, 0.0);
  EXPECT_GT(a.noise_std, 0.0);
}

TEST(GeneratePatient, HonestRangesAndClock) {
  for (int id = 1; id <= 30; ++id) {
    const auto s = generate_patient(id, 10, 7);
    for (std::size_t i = 0; i < s.length(); ++i) {
      ASSERT_GE(s.glucose[i], 40.0);
      ASSERT_LE(s.glucose[i], 400.0);
      ASSERT_GE(s.carbs[i], 0.0);
      ASSERT_LE(s.carbs[i], 200.0);
      ASSERT_GE(s.insulin[i], 0.0);
      ASSERT_LE(s.insulin[i], 25.0);
      ASSERT_EQ(s.time_of_day[i], static_cast<double>(i % 288) / 288.0);
    }
  }
}

TEST(GeneratePatient, ThreeToFiveEventsPerDay) {
  const auto s = generate_patient(4, 14, 42);
  for (int d = 0; d < 14; ++d) {
    int meals = 0, boluses = 0;
    for (int k = 0; k < kStepsPerDay; ++k) {
      const auto i = static_cast<std::size_t>(d * kStepsPerDay + k);
      meals += s.carbs[i] > 0.0;
      boluses += s.insulin[i] > 0.0;
    }
    EXPECT_GE(meals, 3);
    EXPECT_LE(meals, 5);
    EXPECT_GE(boluses, 3);
    EXPECT_LE(boluses, 5);
  }
}

TEST(GeneratePatient, RejectsNonPositiveDays) {
  EXPECT_THROW(generate_patient(1, 0, 42), std::invalid_argument);
  EXPECT_THROW(generate_malicious_series(31, 0, 42), std::invalid_argument);
}

TEST(MaliciousSeries, RangesAndLength) {
  const auto s = generate_malicious_series(31, 28, 7);
  EXPECT_EQ(s.length(), 28u * 288u);
  for (std::size_t i = 0; i < s.length(); ++i) {
    ASSERT_GE(s.glucose[i], -10.0);
    ASSERT_LE(s.glucose[i], 10.0);
    ASSERT_GE(s.carbs[i], -3.0);
    ASSERT_LE(s.carbs[i], 3.0);
    ASSERT_GE(s.insulin[i], -5.0);
    ASSERT_LE(s.insulin[i], 5.0);
    ASSERT_GE(s.time_of_day[i], -1.0);
    ASSERT_LE(s.time_of_day[i], 1.0);
  }
  EXPECT_EQ(generate_malicious_series(31, 1, 0).length(), 288u);
  EXPECT_EQ(generate_malicious_series(31, 2, 5), generate_malicious_series(31, 2, 5));
}

TEST(MakeWindows, CountFormula) {
  const NormStats id;
  const WindowConfig cfg{24, 6};
  EXPECT_EQ(make_windows(ramp_series(30), cfg, id).size(), 1u);
  for (int len : {31, 57, 300})
    EXPECT_EQ(make_windows(ramp_series(len), cfg, id).size(), static_cast<std::size_t>(len - 30 + 1));
  EXPECT_EQ(make_windows(ramp_series(12), WindowConfig{3, 2}, id).size(), 8u);
}

TEST(MakeWindows, TooShortThrows) {
  EXPECT_THROW(make_windows(ramp_series(29), WindowConfig{24, 6}, NormStats{}), EmptyWindowError);
}

TEST(MakeWindows, LayoutAndTarget) {
  const auto s = generate_patient(2, 2, 42);
  const NormStats st = compute_stats(std::span(&s, 1), 0, s.length());
  const WindowConfig cfg{24, 6};
  const auto w = make_windows(s, cfg, st);
  for (std::size_t k : {std::size_t{0}, std::size_t{17}, w.size() - 1}) {
    const auto& smp = w[k];
    const auto start = static_cast<std::size_t>(smp.start);
    EXPECT_EQ(start, k);
    EXPECT_EQ(smp.y, s.glucose[start + 24 + 6 - 1]);
    ASSERT_EQ(smp.x.size(), 24u * 4u);
    for (std::size_t r = 0; r < 24; ++r) {
      EXPECT_DOUBLE_EQ(smp.x[r * 4 + 0], (s.glucose[start + r] - st.mean[0]) / st.stddev[0]);
      EXPECT_DOUBLE_EQ(smp.x[r * 4 + 1], (s.carbs[start + r] - st.mean[1]) / st.stddev[1]);
      EXPECT_DOUBLE_EQ(smp.x[r * 4 + 2], (s.insulin[start + r] - st.mean[2]) / st.stddev[2]);
      EXPECT_EQ(smp.x[r * 4 + 3], s.time_of_day[start + r]);
    }
  }
  EXPECT_EQ(cfg.lead_minutes(), 30);
}

TEST(Stats, PoolMatchesDirectComputation) {
  const auto a = cohort(1, 3, 3, 42);
  const auto b = cohort(4, 2, 3, 42);
  std::vector<GlucoseSeries> all = a;
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t end = 2 * kStepsPerDay;
  const NormStats parts[] = {compute_stats(a, 0, end), compute_stats(b, 0, end)};
  const NormStats pooled = pool_stats(parts);

  // Direct oracle over the union.
  for (int c = 0; c < 3; ++c) {
    double sum = 0, n = 0;
    for (const auto& s : all)
      for (std::size_t i = 0; i < end; ++i, n += 1) sum += s.value(c, i);
    const double mean = sum / n;
    double sq = 0;
    for (const auto& s : all)
      for (std::size_t i = 0; i < end; ++i) sq += (s.value(c, i) - mean) * (s.value(c, i) - mean);
    EXPECT_NEAR(pooled.mean[c], mean, 1e-9 * std::max(1.0, std::abs(mean)));
    EXPECT_NEAR(pooled.stddev[c], std::sqrt(sq / n), 1e-9 * std::sqrt(sq / n));
  }
  EXPECT_EQ(pooled.count, 5.0 * end);
}

TEST(SplitDataset, RegionsDoNotLeak) {
  const auto pts = cohort(1, 5, 10, 42);
  const SplitConfig split;
  const WindowConfig cfg;
  const auto ds = split_dataset(1, pts, cfg, split, 99);
  const int train_end = split.train_days * kStepsPerDay;
  for (const auto* part : {&ds.train, &ds.val})
    for (const auto& w : *part) ASSERT_LE(w.start + cfg.span(), train_end);
  for (const auto& pw : ds.test)
    for (const auto& w : pw.samples) ASSERT_GE(w.start, train_end);
  // 10 days with 7 for training leaves 3 test days per patient.
  ASSERT_EQ(ds.test.size(), 5u);
  EXPECT_EQ(ds.test[0].samples.size(), static_cast<std::size_t>(3 * kStepsPerDay - cfg.span() + 1));
}

TEST(SplitDataset, ValidationFractionAndDeterminism) {
  const auto pts = cohort(6, 5, 10, 42);
  const SplitConfig split;
  const auto ds = split_dataset(2, pts, WindowConfig{}, split, 5);
  const std::size_t pooled = 5 * static_cast<std::size_t>(7 * kStepsPerDay - 30 + 1);
  EXPECT_EQ(ds.train.size() + ds.val.size(), pooled);
  EXPECT_EQ(ds.val.size(), static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(pooled))));
  EXPECT_EQ(ds.n_train, ds.train.size());

  const auto again = split_dataset(2, pts, WindowConfig{}, split, 5);
  EXPECT_EQ(again.val, ds.val);
  const auto other = split_dataset(2, pts, WindowConfig{}, split, 6);
  EXPECT_NE(other.val, ds.val);

  std::set<std::pair<int, int>> val_keys;
  for (const auto& w : ds.val) val_keys.insert({w.patient_id, w.start});
  for (const auto& w : ds.train) ASSERT_FALSE(val_keys.contains({w.patient_id, w.start}));
}

TEST(SplitDataset, TinyValidationHasOneWindow) {
  const auto pts = cohort(1, 1, 2, 42);
  const auto ds = split_dataset(1, pts, WindowConfig{}, SplitConfig{1, 0.0001}, 1);
  EXPECT_EQ(ds.val.size(), 1u);
}

TEST(SplitDataset, StatsComeFromTrainingDaysOnly) {
  const auto pts = cohort(1, 2, 10, 42);
  const auto ds = split_dataset(1, pts, WindowConfig{}, SplitConfig{}, 1);
  EXPECT_EQ(ds.stats, compute_stats(pts, 0, 7 * kStepsPerDay));
  EXPECT_EQ(ds.stats, training_stats(pts, SplitConfig{}));
}

TEST(SplitDataset, InsufficientDaysThrows) {
  const auto pts = cohort(1, 1, 7, 42);
  EXPECT_THROW(split_dataset(1, pts, WindowConfig{}, SplitConfig{}, 1), std::invalid_argument);
}

TEST(SeriesCsv, RoundTripIsExact) {
  const auto s = generate_patient(12, 2, 42);
  std::stringstream ss;
  write_series_csv(ss, s);
  const std::string text = ss.str();
  EXPECT_EQ(text.rfind("step,glucose,carbs,insulin,time_of_day\n", 0), 0u);
  const auto back = read_series_csv(ss, 12);
  EXPECT_EQ(back.glucose, s.glucose);
  EXPECT_EQ(back.carbs, s.carbs);
  EXPECT_EQ(back.insulin, s.insulin);
  EXPECT_EQ(back.time_of_day, s.time_of_day);
  EXPECT_EQ(back.days, 2);
}

TEST(SeriesCsv, RejectsBadHeader) {
  std::stringstream ss("a,b,c\n1,2,3\n");
  EXPECT_THROW(read_series_csv(ss, 1), std::invalid_argument);
}
